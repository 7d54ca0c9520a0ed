//! Reference-frame-independent quantum metrology with multi-copy randomized
//! measurements.
//!
//! The crate evaluates the precision of parameter estimation when every copy
//! of a probe state is measured in a Haar-random local basis: two-copy and
//! four-copy local twirls and the collective two-copy twirl. Precision formulas
//! are expressed through local-unitary invariants (sector lengths, fourth-order
//! and collective terms) computed from Bloch vectors and two-body correlation
//! matrices, so closed-form models scale to hundreds of particles. A dense
//! density-matrix simulator and a Monte Carlo Haar sampler act as independent
//! oracles for every formula.

pub mod dd;
pub mod error;
pub mod invariants;
pub mod jet;
pub mod linalg;
pub mod precision;
pub mod report;
pub mod states;
pub mod twirl;

pub use error::{Error, Result};
pub use invariants::{CollectiveTerms, InvariantSet, PIReduction};
pub use linalg::{Axis, DenseOperator, PartyStructure, C64};
pub use states::{AsymmetricGHZ, DynamicsModel, MerminKind, NoiseModel, ProbeSpec, ProbeState, ReducedData};
pub use precision::{PrecisionResult, Scheme, ThetaDerivativeSpec};
pub use twirl::{HaarSampler, TwirlScheme, TwirledObservable};
