//! Loewner-framework fitting of rational models to frequency-domain samples.

mod data;
mod pencil;
mod reduce;

pub use data::{
    conjugate_close, partition, FrequencyDataSet, PartitionScheme, PartitionedData,
    CONJUGATE_TOLERANCE,
};
pub use pencil::{
    build_pencil, realify, verify_pencil, LoewnerPencil, NodeBlock, NodeMatrix, PencilDiagnostics,
    PencilFlavor, IDENTITY_TOLERANCE, REALIFY_TOLERANCE,
};
pub use reduce::{
    reduce, stagnation_index, svd_augmented, SvdReport, Truncation, DEFAULT_TRUNCATION_TOL,
    MAX_REDUCED_CONDITION,
};

use crate::error::Result;
use crate::rom::ReducedModel;

/// Everything produced while fitting one real model to raw samples.
#[derive(Debug, Clone)]
pub struct RealFit {
    pub closed: FrequencyDataSet,
    pub pencil: LoewnerPencil<f64>,
    pub svd: SvdReport<f64>,
    pub model: ReducedModel<f64>,
}

/// Conjugate closure, partition, pencil, realification, SVD and projection.
pub fn fit_real(
    data: &FrequencyDataSet,
    scheme: PartitionScheme,
    truncation: Truncation,
) -> Result<RealFit> {
    let closed = conjugate_close(data)?;
    let pd = partition(&closed, scheme)?;
    let pencil = realify(&build_pencil(&pd)?)?;
    let svd = svd_augmented(&pencil)?;
    let model = reduce(&pencil, &svd, truncation)?;
    Ok(RealFit {
        closed,
        pencil,
        svd,
        model,
    })
}
