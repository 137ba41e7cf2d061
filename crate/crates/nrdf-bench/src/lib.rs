//! Shared model builders for the criterion benches.

use nalgebra::DMatrix;
use nrdf_core::SourceModel;

/// The 3-stage, 2-dimensional fixture model used across the benches.
pub fn two_dim_model() -> SourceModel {
    SourceModel::new(
        2,
        2,
        2,
        vec![
            DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -0.4, 0.0]),
            DMatrix::from_row_slice(2, 2, &[-0.4, 1.0, -0.5, 0.0]),
            DMatrix::from_row_slice(2, 2, &[-0.9, 1.0, -0.5, 0.0]),
        ],
        vec![
            DMatrix::identity(2, 2),
            DMatrix::from_partial_diagonal(2, 2, &[0.9, 1.4]),
            DMatrix::from_partial_diagonal(2, 2, &[1.2, 1.3]),
        ],
        DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.4]),
    )
    .expect("valid model")
}

/// Scalar parameters with a long horizon: alternating stable/unstable steps.
pub fn long_scalar_params(stages: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let alphas = (0..stages)
        .map(|t| if t % 2 == 0 { 0.8 } else { 1.2 })
        .collect();
    let noise_vars = (0..stages)
        .map(|t| 0.5 + 0.5 * ((t % 7) as f64) / 7.0)
        .collect();
    (alphas, noise_vars, 1.0)
}
