//! JSON formats: pencil input files and dilation artifacts. Complex numbers
//! are `[re, im]` pairs and matrices are row-major nested arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::linalg::{c64, ensure_finite, CMatrix};
use crate::pencil::LinearPencil;
use crate::verify::Construction;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Parses a row-major matrix of shape `rows × cols`.
pub fn matrix_from_json(
    rows: &JsonMatrix,
    nrows: usize,
    ncols: usize,
    name: &str,
) -> Result<CMatrix> {
    if rows.len() != nrows {
        return Err(DilationError::ShapeMismatch(format!(
            "{name} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(DilationError::ShapeMismatch(format!(
            "{name} row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    let m = CMatrix::from_fn(nrows, ncols, |i, j| c64(rows[i][j][0], rows[i][j][1]));
    ensure_finite(&m)?;
    Ok(m)
}

/// On-disk pencil `a0 + λ·a1`. `dimOut` defaults to `dimH` (square).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PencilFile {
    pub dim_h: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_out: Option<usize>,
    pub a0: JsonMatrix,
    pub a1: JsonMatrix,
}

impl PencilFile {
    pub fn from_pencil(p: &LinearPencil) -> Self {
        Self {
            dim_h: p.cols(),
            dim_out: (p.rows() != p.cols()).then_some(p.rows()),
            a0: matrix_to_json(p.a0()),
            a1: matrix_to_json(p.a1()),
        }
    }

    pub fn to_pencil(&self) -> Result<LinearPencil> {
        let rows = self.dim_out.unwrap_or(self.dim_h);
        let a0 = matrix_from_json(&self.a0, rows, self.dim_h, "a0")?;
        let a1 = matrix_from_json(&self.a1, rows, self.dim_h, "a1")?;
        LinearPencil::new(a0, a1)
    }
}

pub fn parse_pencil(json: &str) -> Result<LinearPencil> {
    let file: PencilFile =
        serde_json::from_str(json).map_err(|e| DilationError::Parse(e.to_string()))?;
    file.to_pencil()
}

pub fn read_pencil(path: &Path) -> Result<LinearPencil> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DilationError::Parse(format!("{}: {e}", path.display())))?;
    parse_pencil(&text)
}

pub fn pencil_to_json(p: &LinearPencil) -> String {
    serde_json::to_string_pretty(&PencilFile::from_pencil(p)).expect("plain data serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DilationKind {
    Isometric,
    Unitary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PencilJson {
    pub a0: JsonMatrix,
    pub a1: JsonMatrix,
}

impl PencilJson {
    fn new(a0: &CMatrix, a1: &CMatrix) -> Self {
        Self {
            a0: matrix_to_json(a0),
            a1: matrix_to_json(a1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoreJson {
    pub depth: usize,
    pub rows: usize,
    pub cols: usize,
    pub b0: JsonMatrix,
    pub b1: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubspacesJson {
    pub l: JsonMatrix,
    pub k1: JsonMatrix,
    pub u: JsonMatrix,
}

/// Construction artifacts written by `dilate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DilationFile {
    pub kind: DilationKind,
    pub dim_h: usize,
    pub dim_y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_u: Option<usize>,
    pub factor: PencilJson,
    pub core: CoreJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<PencilJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspaces: Option<SubspacesJson>,
}

impl DilationFile {
    pub fn from_construction(c: &Construction, kind: DilationKind) -> Self {
        let core = c.isometric.core();
        let unitary = (kind == DilationKind::Unitary).then_some(&c.unitary);
        Self {
            kind,
            dim_h: c.pencil.cols(),
            dim_y: c.factor.dim_y(),
            dim_u: unitary.map(|u| u.dim_u()),
            factor: PencilJson::new(&c.factor.f0, &c.factor.f1),
            core: CoreJson {
                depth: c.isometric.depth(),
                rows: core.rows(),
                cols: core.cols(),
                b0: matrix_to_json(core.a0()),
                b1: matrix_to_json(core.a1()),
            },
            q: unitary.map(|u| PencilJson::new(&u.q().q0, &u.q().q1)),
            subspaces: unitary.map(|u| SubspacesJson {
                l: matrix_to_json(u.cores().l.basis()),
                k1: matrix_to_json(u.cores().k1.basis()),
                u: matrix_to_json(u.cores().u.basis()),
            }),
        }
    }
}
