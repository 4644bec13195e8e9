//! Fixtures shared by the benchmarks.

use pencil_dilate_core::verify::default_corpus;
use pencil_dilate_core::LinearPencil;

/// One corpus pencil per dimension `1..=6`.
pub fn pencils_by_dim() -> Vec<(usize, LinearPencil)> {
    default_corpus()
        .into_iter()
        .take(6)
        .map(|p| (p.cols(), p))
        .collect()
}
