//! Cross-domain error minimization (CDEM) for unsupervised domain adaptation.
//!
//! The crate learns a linear projection `P` shared by a labelled source domain
//! and an unlabelled target domain. Each outer iteration builds quadratic-form
//! objective matrices over the joint sample set, solves a regularised
//! generalized eigenproblem for the `k` smallest eigenvectors, and then
//! re-labels the target domain with a prototype classifier combined with a
//! source-initialised K-means, admitting confident, label-consistent targets
//! through a class-balanced curriculum.
//!
//! All numerical code is generic over [`Scalar`] (`f32` / `f64`); the `*64`
//! aliases below are what the CLI and file formats use.

// `!(x > 0)` style guards are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod curriculum;
pub mod eigsolve;
pub mod error;
pub mod linalg;
pub mod matio;
pub mod objectives;
pub mod oracle;
pub mod preprocess;
pub mod prototype;
pub mod scalar;
pub mod synth;
pub mod trainer;

pub use config::{Components, ExperimentConfig, PcaFit};
pub use error::{CdemError, Result};
pub use linalg::Matrix;
pub use matio::{DomainPair, LabelVector};
pub use objectives::{Hyperparams, JointLabels, ObjectiveMatrices};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type DomainPair64 = matio::DomainPair<f64>;
pub type Hyperparams64 = objectives::Hyperparams<f64>;
pub type ObjectiveMatrices64 = objectives::ObjectiveMatrices<f64>;
pub type PcaModel64 = preprocess::PcaModel<f64>;
pub type TransformSolution64 = eigsolve::TransformSolution<f64>;
pub type PrototypeSet64 = prototype::PrototypeSet<f64>;
pub type PseudoLabelTable64 = prototype::PseudoLabelTable<f64>;
pub type AdaptationResult64 = trainer::AdaptationResult<f64>;
