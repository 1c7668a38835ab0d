//! Parameter estimation for one-dimensional Gaussian mixtures with a shared
//! variance, driven by the Hankel structure of their Fourier data.
//!
//! The estimator works in three stages:
//!
//! 1. The empirical characteristic function is evaluated on a symmetric
//!    frequency grid `ω_q = qΩ/K`, `q = -K..=K` ([`fourier`]).
//! 2. For each candidate modulation parameter `u`, the Hankel matrix of the
//!    data is multiplied entrywise by `exp(u ω²)` and the ratios of
//!    consecutive singular values are scanned. The joint maximiser gives the
//!    modulation parameter `v = s²/2` and the model order ([`svr`]).
//! 3. Means are located with MUSIC on the demodulated data and weights come
//!    from a least-squares fit constrained to the probability simplex
//!    ([`spectral`]).
//!
//! [`pipeline::estimate`] runs all three stages. An EM baseline
//! ([`em`]), metrics ([`metrics`]) and Monte-Carlo harnesses
//! ([`experiments`]) complete the crate.

pub mod em;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod hankel;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod seed;
pub mod spectral;
pub mod svr;

pub use error::{Error, Result};
pub use fourier::{FourierData, FourierGrid};
pub use model::{GaussianMixture, MixingDistribution, SampleSet};
pub use num_complex::Complex64;
pub use pipeline::{EstimationResult, PipelineConfig};
pub use svr::{SvrConfig, SvrSurface};
