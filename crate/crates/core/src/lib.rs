//! Parameter learning for discrete Bayesian networks from incomplete data.
//!
//! The crate provides:
//!
//! * network and CPT containers ([`model`]),
//! * exact inference by variable elimination ([`inference`]),
//! * ML, MAP and posterior-mean estimators ([`estimators`]),
//! * robust interval bounds on every CPT entry computed from observed and
//!   virtual frequencies ([`bounds`]),
//! * EM and threshold EM, which clips every M-step output into those
//!   intervals and renormalizes ([`learn`]),
//! * file formats, forward sampling and MCAR masking ([`dataio`]),
//! * brute-force oracles and a paired comparison runner ([`oracle`]).

pub mod bounds;
pub mod dataio;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod learn;
pub mod model;
pub mod oracle;
pub mod rng;

pub use bounds::{compute_bounds, ParameterBounds};
pub use dataio::Dataset;
pub use error::{Error, Result};
pub use learn::{Algorithm, Init, LearnConfig, LearnResult, MStep};
pub use model::{NetworkStructure, NodeSpec, ParameterSet, PriorSpec, Table};
