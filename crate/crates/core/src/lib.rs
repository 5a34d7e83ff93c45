//! Low-complexity multi-user carrier-frequency-offset estimation for
//! frequency-selective massive MIMO uplinks.
//!
//! Each user sends an impulse train, one impulse per pilot-block of K*L
//! channel uses, so the BS sees every user's channel impulse response once
//! per block without inter-user overlap. Correlating consecutive blocks
//! yields `G_k * exp(j * omega_k * K * L)` plus noise, from which the CFO is
//! read off with one `arg` per user.
//!
//! Modules:
//! - [`system`]: parameters, validation, pilot-slot indexing
//! - [`pilot`]: training sequences and circulant pilot matrices
//! - [`channel`]: Rayleigh channel draws and received-signal synthesis
//! - [`estimator`]: the correlation estimator and gain factor
//! - [`analysis`]: CRLB, noise variances, MSE and required-SNR formulas
//! - [`experiments`]: seeded Monte-Carlo MSE curves and required-SNR searches
//! - [`specfile`]: the sectioned key=value scenario format
//! - [`cli`]: the `mimo-cfo` command-line front end

pub mod analysis;
pub mod channel;
pub mod cli;

pub mod error;
pub mod estimator;
pub mod experiments;

pub mod pilot;
pub mod specfile;

pub mod system;

pub use error::{Error, Result};
