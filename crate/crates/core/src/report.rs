use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::C64;

/// Outcome of one named check. `pass` is exactly `worst_residual <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub check: String,
    pub pass: bool,
    pub worst_residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default)]
    pub details: Vec<Detail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    /// Parameters as `[re, im]` pairs.
    #[serde(default)]
    pub lambdas: Vec<[f64; 2]>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Detail {
    pub item: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Report {
    pub fn new(check: impl Into<String>, worst_residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            pass: worst_residual <= tolerance,
            worst_residual,
            tolerance,
            witness: None,
            details: Vec::new(),
        }
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn detail(mut self, item: impl Into<String>, value: f64) -> Self {
        self.details.push(Detail {
            item: item.into(),
            value,
            note: None,
        });
        self
    }

    pub fn note(mut self, item: impl Into<String>, value: f64, note: impl Into<String>) -> Self {
        self.details.push(Detail {
            item: item.into(),
            value,
            note: Some(note.into()),
        });
        self
    }

    pub fn detail_value(&self, item: &str) -> Option<f64> {
        self.details
            .iter()
            .find(|d| d.item == item)
            .map(|d| d.value)
    }

    /// Renames the check, keeping everything else.
    pub fn named(mut self, check: impl Into<String>) -> Self {
        self.check = check.into();
        self
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:<4}  worst {:.3e}  tol {:.1e}",
            self.check,
            if self.pass { "pass" } else { "FAIL" },
            self.worst_residual,
            self.tolerance
        )?;
        if let Some(w) = &self.witness {
            write!(f, "  [{}]", w.description)?;
        }
        Ok(())
    }
}

pub fn lambda_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Compact rendering of a parameter on the circle: `1`, `-1`, `i`, `-i`, or `a+bi`.
pub fn format_lambda(z: C64) -> String {
    let near = |a: f64, b: f64| (a - b).abs() < 1e-12;
    match (z.re, z.im) {
        (r, i) if near(r, 1.0) && near(i, 0.0) => "1".into(),
        (r, i) if near(r, -1.0) && near(i, 0.0) => "-1".into(),
        (r, i) if near(r, 0.0) && near(i, 1.0) => "i".into(),
        (r, i) if near(r, 0.0) && near(i, -1.0) => "-i".into(),
        (r, i) => format!("{r:.6}{i:+.6}i"),
    }
}
