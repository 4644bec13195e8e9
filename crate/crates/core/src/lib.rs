//! Minimal isometric and unitary dilations of contractive linear pencils
//! `T(λ) = T₀ + λT₁` with finite-dimensional coefficients.

pub mod error;
pub mod factorization;
pub mod io;
pub mod isodil;
pub mod linalg;
pub mod pencil;
pub mod report;
pub mod tolerance;
pub mod unidil;
pub mod verify;

pub use error::{DilationError, Result};
pub use factorization::{FejerRieszFactor, GramCoefficients, OuterCertificate};
pub use isodil::{BuiltinIsometric, KPlusVector, StructuredIsometricPencil, TailPhase};
pub use linalg::{CMatrix, CVector, SubspaceBasis, C64};
pub use pencil::{LinearPencil, PencilClass, PencilKind};
pub use report::{Detail, Report, Witness};
pub use tolerance::ToleranceProfile;
pub use unidil::{CoreSubspaces, KVector, QPencil, Theta, UnitaryDilation};
pub use verify::{Construction, DemoName, Dilation, EquivalenceReport, PipelineOptions, Verdict};
