use serde::{Deserialize, Serialize};

/// Every numerical threshold used by the constructions and checks. Passed
/// explicitly; nothing reads a global.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToleranceProfile {
    /// Relative singular-value cut for ranges and ranks of construction data.
    pub rank: f64,
    /// Allowed leakage when one subspace must sit inside another.
    pub containment: f64,
    /// Algebraic tolerance of `classify` and of the grid contractivity test.
    pub classify: f64,
    /// Isometry tolerance required of structured dilation cores.
    pub isometry: f64,
    /// Equispaced points on the unit circle for grid tests.
    pub grid: usize,
    /// Step size at which the spectral factorization iteration stops.
    pub convergence: f64,
    pub max_iter: usize,
    /// Pseudo-inverse cut (relative) inside the factorization iteration.
    pub pinv: f64,
    /// Pass threshold for dilation, uniformity and identity residuals.
    pub check: f64,
    /// Pass threshold for unitarity of the extension on finitely supported vectors.
    pub unitarity: f64,
    /// Pass threshold for the factorization residual.
    pub factorization: f64,
    /// Relative rank cut for word-span minimality tests.
    pub minimality_rank: f64,
    /// Longest word the multipower routines will expand.
    pub word_cap: usize,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            rank: 1e-10,
            containment: 1e-9,
            classify: 1e-10,
            isometry: 1e-8,
            grid: 256,
            convergence: 1e-12,
            max_iter: 10_000,
            pinv: 1e-10,
            check: 1e-9,
            unitarity: 1e-10,
            factorization: 1e-8,
            minimality_rank: 1e-8,
            word_cap: 10,
        }
    }
}
