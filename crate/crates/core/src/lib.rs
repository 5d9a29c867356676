//! Remote-source Hong-Ou-Mandel interference toolkit.
//!
//! * [`units`] — checked physical quantities, conversions, quadrature and
//!   the seeding contract shared by all random processes.
//! * [`wavepacket`] — temporal single-photon profiles and their classical
//!   overlap.
//! * [`overlap`] — closed-form mean wavepacket overlaps, the Voigt
//!   function, indistinguishability bounds and the spectral filter model.
//! * [`spectral`] — spectral wandering and the delay-dependent visibility.
//! * [`hom`] — Monte-Carlo coincidence histograms and the visibility
//!   estimator.
//! * [`fit`] — least-squares estimation of lifetimes, cavity modes and
//!   wandering parameters.
//! * [`catalog`], [`config`], [`io`], [`pipeline`] — source catalogs, run
//!   configuration, file formats and the end-to-end report.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod error;
pub mod faddeeva;
pub mod fit;
pub mod hom;
pub mod io;
pub mod overlap;
pub mod parallel;
pub mod pipeline;
pub mod spectral;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};
