//! Qubit system coupled to a qubit + quantum kicked rotor environment:
//! Floquet dynamics, reduced-state tracking and pointer-basis analysis.

pub mod error;
pub mod floquet;
pub mod pointer;
pub mod qstate;
pub mod theory;
pub mod typicality;

pub use error::{Error, Result};
pub use floquet::{FloquetStepper, ModelParams};
pub use pointer::{PointerCandidate, RdmSample, RdmTrajectory, Window};
pub use qstate::{BasisPair, Rdm2, TotalState, Vec2};
pub use theory::{AOperator, Maximizer};
pub use typicality::{TypicalEnsembleSpec, TypicalityReport};
