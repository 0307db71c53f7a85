//! Per-stream link quality metrics and rate evaluation.
//!
//! Everything here is a pure function of a channel realization and a
//! transceiver design: received covariance, per-stream SINR and MSE,
//! MMSE receive filters, and the discrete/continuous rates achieved.
//! Rate comparisons between algorithms always go through
//! [`evaluate_rates`], which refreshes the receivers to the MMSE filters
//! for the given precoders so that only precoder quality is compared.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network_model::{CMat, NetworkRealization};
use crate::rate_model::RateSet;

pub type CVec = DVector<Complex64>;

/// Per-user transmit precoders; user `u` gets an `M_serving x d` matrix
/// whose columns carry unit-power symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub per_user: Vec<CMat>,
}

/// Per-user receive filters, `N x d` each.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSet {
    pub per_user: Vec<CMat>,
}

impl PrecoderSet {
    /// All-zero precoders with the realization's dimensions.
    pub fn zeros(real: &NetworkRealization) -> PrecoderSet {
        PrecoderSet {
            per_user: real
                .users
                .iter()
                .map(|u| CMat::zeros(real.bs_antennas[u.serving_bs], u.streams))
                .collect(),
        }
    }

    /// Transmit power spent by each base station.
    pub fn bs_power_used(&self, real: &NetworkRealization) -> Vec<f64> {
        let mut used = vec![0.0; real.n_bs()];
        for (u, v) in self.per_user.iter().enumerate() {
            used[real.users[u].serving_bs] += v.norm_squared();
        }
        used
    }

    /// Checks the per-BS power constraints with relative slack.
    pub fn check_power(&self, real: &NetworkRealization, rel_slack: f64) -> Result<()> {
        for (bs, &used) in self.bs_power_used(real).iter().enumerate() {
            let budget = real.power_budget[bs];
            if used > budget * (1.0 + rel_slack) + f64::MIN_POSITIVE {
                return Err(Error::domain(format!(
                    "BS {bs} power {used} exceeds budget {budget}"
                )));
            }
        }
        Ok(())
    }
}

impl ReceiverSet {
    pub fn zeros(real: &NetworkRealization) -> ReceiverSet {
        ReceiverSet {
            per_user: real
                .users
                .iter()
                .map(|u| CMat::zeros(u.channels[0].nrows(), u.streams))
                .collect(),
        }
    }

    /// Receiver column for one stream.
    pub fn column(&self, user: usize, stream: usize) -> CVec {
        self.per_user[user].column(stream).into_owned()
    }
}

/// Received signal covariance at `user`:
/// `sum_j H_uj V_j V_j^H H_uj^H + sigma^2 I`, over every transmitted
/// precoder in the network. Hermitian positive definite for positive
/// noise power.
pub fn rx_covariance(real: &NetworkRealization, v: &PrecoderSet, user: usize) -> Result<CMat> {
    check_shapes(real, v)?;
    let n = real.users[user].channels[0].nrows();
    let mut phi = CMat::identity(n, n) * Complex64::new(real.users[user].noise_power, 0.0);
    for (other, vo) in v.per_user.iter().enumerate() {
        let hv = real.channel(user, real.users[other].serving_bs) * vo;
        phi += &hv * hv.adjoint();
    }
    Ok(phi)
}

fn check_shapes(real: &NetworkRealization, v: &PrecoderSet) -> Result<()> {
    if v.per_user.len() != real.n_users() {
        return Err(Error::dimension("precoder count != user count"));
    }
    for (u, vu) in v.per_user.iter().enumerate() {
        let m = real.bs_antennas[real.users[u].serving_bs];
        if vu.nrows() != m {
            return Err(Error::dimension(format!(
                "precoder {u} has {} rows, expected {m}",
                vu.nrows()
            )));
        }
    }
    Ok(())
}

/// Per-stream SINR for receiver column `u` applied to stream `stream` of
/// `user`: desired power over interference-plus-noise power. Invariant to
/// rescaling of `u`.
pub fn stream_sinr(
    u: &CVec,
    v: &PrecoderSet,
    real: &NetworkRealization,
    user: usize,
    stream: usize,
) -> Result<f64> {
    check_shapes(real, v)?;
    if u.norm_squared() == 0.0 {
        return Err(Error::domain("receive filter must be nonzero"));
    }
    let own_bs = real.users[user].serving_bs;
    let desired = dot(u, &(real.channel(user, own_bs) * v.per_user[user].column(stream)));
    let mut interference = 0.0;
    for (other, vo) in v.per_user.iter().enumerate() {
        let h = real.channel(user, real.users[other].serving_bs);
        for m in 0..vo.ncols() {
            if other == user && m == stream {
                continue;
            }
            interference += dot(u, &(h * vo.column(m))).norm_sqr();
        }
    }
    let noise = real.users[user].noise_power * u.norm_squared();
    Ok(desired.norm_sqr() / (interference + noise))
}

/// `u^H x`.
fn dot(u: &CVec, x: &CVec) -> Complex64 {
    u.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Mean squared symbol estimation error of one stream under receiver
/// column `u`: `1 - 2 Re(u^H H v) + u^H Phi u`.
pub fn stream_mse(
    u: &CVec,
    v: &PrecoderSet,
    real: &NetworkRealization,
    user: usize,
    stream: usize,
) -> Result<f64> {
    let phi = rx_covariance(real, v, user)?;
    let own_bs = real.users[user].serving_bs;
    let hv = real.channel(user, own_bs) * v.per_user[user].column(stream);
    let cross = dot(u, &hv);
    let quad = dot(u, &(&phi * u));
    Ok(1.0 - 2.0 * cross.re + quad.re)
}

/// MMSE receive filter for one user: `Phi^{-1} H V`, solved through a
/// Hermitian positive-definite factorization. Minimizes every stream's
/// MSE simultaneously.
pub fn mmse_receiver(real: &NetworkRealization, v: &PrecoderSet, user: usize) -> Result<CMat> {
    let phi = rx_covariance(real, v, user)?;
    let own_bs = real.users[user].serving_bs;
    let rhs = real.channel(user, own_bs) * &v.per_user[user];
    let chol = phi
        .cholesky()
        .ok_or_else(|| Error::Solver("received covariance not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// MMSE receive filters for every user.
pub fn mmse_receivers(real: &NetworkRealization, v: &PrecoderSet) -> Result<ReceiverSet> {
    let per_user = (0..real.n_users())
        .map(|u| mmse_receiver(real, v, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReceiverSet { per_user })
}

/// Rates achieved by one stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamEval {
    pub sinr: f64,
    pub mse: f64,
    pub discrete_rate: f64,
    pub continuous_rate: f64,
}

/// Rates achieved by a precoder design, evaluated under fresh MMSE
/// receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Per user, per stream.
    pub streams: Vec<Vec<StreamEval>>,
    pub user_discrete: Vec<f64>,
    pub user_continuous: Vec<f64>,
    pub weighted_discrete_sum: f64,
    pub weighted_continuous_sum: f64,
    /// Absolute transmit power spent per base station, mW.
    pub bs_power_used: Vec<f64>,
}

/// Evaluates the rates a precoder design achieves: recomputes MMSE
/// receivers, then per stream takes the SINR `s`, the continuous rate
/// `log2(1 + s)`, and the largest discrete rate whose SINR threshold is
/// met.
pub fn evaluate_rates(
    real: &NetworkRealization,
    v: &PrecoderSet,
    rate_sets: &[RateSet],
) -> Result<RateReport> {
    if rate_sets.len() != real.n_users() {
        return Err(Error::dimension(format!(
            "got {} rate sets for {} users",
            rate_sets.len(),
            real.n_users()
        )));
    }
    let receivers = mmse_receivers(real, v)?;
    let mut streams = Vec::with_capacity(real.n_users());
    let mut user_discrete = Vec::with_capacity(real.n_users());
    let mut user_continuous = Vec::with_capacity(real.n_users());
    let mut weighted_discrete_sum = 0.0;
    let mut weighted_continuous_sum = 0.0;
    for user in 0..real.n_users() {
        let mut evals = Vec::with_capacity(real.users[user].streams);
        for stream in 0..real.users[user].streams {
            let u = receivers.column(user, stream);
            let (sinr, mse) = if u.norm_squared() == 0.0 {
                // zero precoder column: no signal, MSE saturates at 1
                (0.0, 1.0)
            } else {
                (
                    stream_sinr(&u, v, real, user, stream)?,
                    stream_mse(&u, v, real, user, stream)?,
                )
            };
            evals.push(StreamEval {
                sinr,
                mse,
                discrete_rate: rate_sets[user].rate_for_sinr(sinr),
                continuous_rate: (1.0 + sinr).log2(),
            });
        }
        let d: f64 = evals.iter().map(|e| e.discrete_rate).sum();
        let c: f64 = evals.iter().map(|e| e.continuous_rate).sum();
        weighted_discrete_sum += real.users[user].weight * d;
        weighted_continuous_sum += real.users[user].weight * c;
        user_discrete.push(d);
        user_continuous.push(c);
        streams.push(evals);
    }
    Ok(RateReport {
        streams,
        user_discrete,
        user_continuous,
        weighted_discrete_sum,
        weighted_continuous_sum,
        bs_power_used: v.bs_power_used(real),
    })
}
