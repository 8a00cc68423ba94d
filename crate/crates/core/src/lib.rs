//! Gradient-flow structure of linear ODEs `ẋ = Ax`.
//!
//! A linear flow with a real matrix `A` is the flow of a gradient system
//! exactly when `A` is real diagonalisable, `A = V⁻¹ diag(f) V`. In that case
//! `K = V⁻¹V⁻ᵀ` and `F(x) = −½⟨Vx, diag(f) Vx⟩` give `Ax = −K DF(x)`.
//!
//! * [`spectral`] decides real diagonalisability and provides SPD helpers.
//! * [`synthesis`] builds and inverts the canonical gradient system and
//!   linearises generalised systems around an equilibrium.
//! * [`geometry`] holds the induced metric, convexity constants and sampled
//!   convexity/contraction certificates.
//! * [`flow`] integrates the ODE (exact, RK4, minimizing movement) and audits
//!   energy dissipation.
//! * [`markov`] specialises to transposed Markov generators and their
//!   entropic gradient structure.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod markov;
pub mod sampling;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use flow::{Method, Trajectory};
pub use geometry::{ConvexityConstants, MetricContext, Sampling, ViolationReport};
pub use linalg::{Matrix, Vector};
pub use markov::{EntropicStructure, GeneratorMatrix};
pub use spectral::{Diagonalisation, FailureKind, SpectralReport, DEFAULT_TOL};
pub use synthesis::{CanonicalGradientSystem, FlowResidualReport, GeneralisedSystemProbe};
