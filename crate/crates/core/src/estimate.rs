//! Shared second stage of the two-stage sparse estimators: pick the
//! candidate set from first-half counts, invert second-half counts with an
//! affine map, and project onto the simplex over the candidate set.

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::projection::{project_simplex_on, top_indices};

/// Output of a two-stage estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageEstimate {
    /// Candidate set `T`, in descending order of first-half count.
    pub support: Vec<usize>,
    /// Per-coordinate unbiased estimate on `T`, zero elsewhere; may be negative.
    pub raw: Vec<f64>,
    /// `raw` projected onto the simplex over `T`.
    pub projected: Distribution,
}

/// `M(x)` ranks symbols; `T` is the top `size` (ties to the smaller index).
/// On `T`, `p̂(x) = (N(x)/m − β)/γ` where `m` is the second-half size and
/// `E[N(x)/m] = γ·p(x) + β`.
pub fn two_stage(
    first_counts: &[u64],
    second_counts: &[u64],
    second_size: usize,
    size: usize,
    beta: f64,
    gamma: f64,
) -> Result<TwoStageEstimate> {
    if first_counts.len() != second_counts.len() {
        return Err(Error::LengthMismatch { left: first_counts.len(), right: second_counts.len() });
    }
    if second_size == 0 || first_counts.is_empty() || size == 0 {
        return Err(Error::Empty);
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    let support = top_indices(first_counts, size);
    let mut raw = vec![0.0; first_counts.len()];
    let m = second_size as f64;
    for &x in &support {
        raw[x] = (second_counts[x] as f64 / m - beta) / gamma;
    }
    let projected = project_simplex_on(&raw, &support)?;
    Ok(TwoStageEstimate { support, raw, projected })
}
