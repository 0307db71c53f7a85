//! Coordinated multicell MIMO precoding with discrete rate selection.
//!
//! Practical links transmit at one of a finite set of spectral
//! efficiencies, each decodable above an SINR threshold. This crate
//! jointly designs linear precoders and receive filters for a multicell
//! MIMO downlink so that the *discrete* weighted sum rate is maximized,
//! rather than the usual continuous (Shannon) proxy.
//!
//! The optimizer bounds the discontinuous rate-versus-quality step
//! function by its concave envelope in a configurable QoS coordinate,
//! linearizes the coordinate map, and runs a three-block coordinate
//! ascent (MMSE receivers, linearization weights, precoders) where the
//! precoder block is a convex problem solved by a log-barrier interior
//! point method. A small power regularizer makes the solution use the
//! minimum power that still attains the maximum weighted sum rate.
//!
//! What's here:
//! - [`rate_model`]: discrete rate sets (WiFi/LTE/grid presets), SINR
//!   thresholds, QoS domains, and concave envelopes.
//! - [`network_model`]: corridor scenario geometry, indoor-hotspot
//!   pathloss, Rayleigh fading, seeded channel realizations.
//! - [`link_metrics`]: per-stream SINR/MSE, MMSE filters, rate
//!   evaluation of any transceiver design.
//! - [`envelope_bcd`]: the discrete-rate coordinate-ascent optimizer.
//! - [`baselines`]: per-stream WMMSE, MaxSINR, and TDMA waterfilling
//!   benchmarks.
//! - [`harness`]: config-driven Monte Carlo experiments with CSV and
//!   plot-data output (also exposed by the `simulate` binary).
//!
//! Run `cargo run --example single_run` for a quick tour, or see the
//! `examples/` directory for one runnable example per capability.

pub mod baselines;
#[cfg(test)]
pub(crate) mod test_util;
pub mod decimal;
pub mod envelope_bcd;
pub mod error;
pub mod harness;
pub mod link_metrics;
pub mod network_model;
pub mod rate_model;

pub use decimal::Decimal;
pub use error::{Error, Result};
pub use rate_model::{EnvelopeModel, QosDomain, RateSet};
