//! Benchmark algorithms: per-stream WMMSE, MaxSINR, and TDMA with
//! singular-value waterfilling.
//!
//! These optimize (or heuristically target) the continuous rates; they
//! know nothing about discrete rate sets. Rate sets enter only when the
//! final precoders are evaluated, which makes them the comparison points
//! for the discrete-rate optimizer.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::envelope_bcd::{initial_precoders, update_receivers, TracePoint};
use crate::error::{Error, Result};
use crate::link_metrics::{evaluate_rates, stream_mse, PrecoderSet, ReceiverSet};
use crate::network_model::{CMat, NetworkRealization};
use crate::rate_model::RateSet;

/// Iteration caps and tolerances for the benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub wmmse_max_iterations: usize,
    /// Stop WMMSE once the weighted continuous sum-rate surrogate moves
    /// less than this, relatively.
    pub wmmse_rel_tolerance: f64,
    /// MaxSINR sweep cap; the method has no convergence guarantee, so
    /// the cap is authoritative.
    pub maxsinr_max_iterations: usize,
    /// Early exit for MaxSINR when no filter moves more than this.
    pub maxsinr_filter_tolerance: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            wmmse_max_iterations: 500,
            wmmse_rel_tolerance: 1e-3,
            maxsinr_max_iterations: 100,
            maxsinr_filter_tolerance: 1e-4,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wmmse_max_iterations < 1 || self.maxsinr_max_iterations < 1 {
            return Err(Error::domain("iteration caps must be >= 1"));
        }
        if !(self.wmmse_rel_tolerance > 0.0) || !(self.maxsinr_filter_tolerance > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Final precoders plus per-iteration trace of a benchmark run.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub precoders: PrecoderSet,
    pub trace: Vec<TracePoint>,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-stream weighted-MMSE ascent of the weighted continuous sum rate:
/// MMSE receivers, weights `w = 1/e`, then per base station the precoder
/// columns `(A_i + mu_i I)^{-1} omega w H^H u` with `mu_i >= 0` chosen by
/// bisection so the power budget holds with complementary slackness.
pub fn wmmse_run(
    real: &NetworkRealization,
    cfg: &BaselineConfig,
    rate_sets: &[RateSet],
) -> Result<BaselineRun> {
    cfg.validate()?;
    real.validate()?;
    let mut v = initial_precoders(real)?;
    let mut trace = Vec::new();
    let mut surrogate_prev = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;

    for iteration in 1..=cfg.wmmse_max_iterations {
        iterations = iteration;
        let receivers = update_receivers(real, &v)?;
        // per-stream weights and the sum-rate surrogate they certify
        let mut weights = Vec::with_capacity(real.n_users());
        let mut surrogate = 0.0;
        for user in 0..real.n_users() {
            let mut per_stream = Vec::with_capacity(real.users[user].streams);
            for stream in 0..real.users[user].streams {
                let u = receivers.column(user, stream);
                let e = stream_mse(&u, &v, real, user, stream)?.clamp(1e-14, 1.0);
                per_stream.push(1.0 / e);
                surrogate += real.users[user].weight * (1.0 / e).log2();
            }
            weights.push(per_stream);
        }

        let report = evaluate_rates(real, &v, rate_sets)?;
        trace.push(TracePoint {
            iteration,
            surrogate_objective: surrogate,
            weighted_discrete_rate: report.weighted_discrete_sum,
            weighted_continuous_rate: report.weighted_continuous_sum,
        });

        let rel = (surrogate - surrogate_prev).abs() / surrogate_prev.abs().max(1e-12);
        surrogate_prev = surrogate;
        if rel < cfg.wmmse_rel_tolerance {
            converged = true;
            break;
        }

        v = wmmse_precoder_update(real, &receivers, &weights)?;
    }

    v.check_power(real, 1e-9)?;
    Ok(BaselineRun {
        precoders: v,
        trace,
        iterations,
        converged,
    })
}

fn wmmse_precoder_update(
    real: &NetworkRealization,
    receivers: &ReceiverSet,
    weights: &[Vec<f64>],
) -> Result<PrecoderSet> {
    let mut v = PrecoderSet::zeros(real);
    for bs in 0..real.n_bs() {
        let budget = real.power_budget[bs];
        if budget <= 0.0 {
            continue;
        }
        let m = real.bs_antennas[bs];
        // interference-plus-signal matrix seen from this transmitter
        let mut a = CMat::zeros(m, m);
        for (user, link) in real.users.iter().enumerate() {
            let h = real.channel(user, bs);
            for stream in 0..link.streams {
                let col: DVector<Complex64> = h.adjoint() * receivers.column(user, stream);
                let coef = Complex64::new(link.weight * weights[user][stream], 0.0);
                a += (&col * col.adjoint()) * coef;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(a);
        // right-hand sides for this station's own streams
        let mut rhs = Vec::new();
        for (user, link) in real.users.iter().enumerate() {
            if link.serving_bs != bs {
                continue;
            }
            for stream in 0..link.streams {
                let col: DVector<Complex64> =
                    real.channel(user, bs).adjoint() * receivers.column(user, stream);
                let coef = Complex64::new(link.weight * weights[user][stream], 0.0);
                rhs.push((user, stream, eig.eigenvectors.adjoint() * (col * coef)));
            }
        }
        let power_at = |mu: f64| -> f64 {
            rhs.iter()
                .map(|(_, _, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(j, x)| x.norm_sqr() / (eig.eigenvalues[j].max(0.0) + mu).powi(2))
                        .sum::<f64>()
                })
                .sum()
        };
        let total_rhs: f64 = rhs.iter().map(|(_, _, r)| r.norm_squared()).sum();
        let mu = if total_rhs == 0.0 {
            0.0
        } else {
            let unconstrained = power_at(0.0);
            if unconstrained.is_finite() && unconstrained <= budget {
                0.0
            } else {
                let mut hi = (total_rhs / budget).sqrt().max(f64::MIN_POSITIVE);
                while power_at(hi) > budget {
                    hi *= 2.0;
                }
                // keep `hi` on the feasible side; stop when the budget is
                // met within 1e-8 relative
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let p = power_at(mid);
                    if p > budget {
                        lo = mid;
                    } else {
                        hi = mid;
                        if budget - p <= 1e-8 * budget {
                            break;
                        }
                    }
                    if (hi - lo) <= 1e-15 * hi {
                        break;
                    }
                }
                hi
            }
        };
        for (user, stream, r) in rhs {
            let scaled = DVector::from_iterator(
                m,
                r.iter()
                    .enumerate()
                    .map(|(j, x)| x / Complex64::new(eig.eigenvalues[j].max(0.0) + mu, 0.0)),
            );
            let col = &eig.eigenvectors * scaled;
            v.per_user[user].set_column(stream, &col);
        }
    }
    Ok(v)
}

/// MaxSINR result.
#[derive(Debug, Clone)]
pub struct MaxSinrRun {
    pub precoders: PrecoderSet,
    pub receivers: ReceiverSet,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternating forward/reverse sweeps that point each filter at the
/// direction maximizing its own stream SINR, with equal per-stream
/// transmit power. No convergence guarantee; the iteration cap is
/// authoritative and the last iterate is returned.
pub fn maxsinr_run(real: &NetworkRealization, cfg: &BaselineConfig) -> Result<MaxSinrRun> {
    cfg.validate()?;
    real.validate()?;
    // per-stream power P_i / (sum of streams served by BS i)
    let mut streams_per_bs = vec![0usize; real.n_bs()];
    for link in &real.users {
        streams_per_bs[link.serving_bs] += link.streams;
    }
    let stream_power: Vec<f64> = real
        .users
        .iter()
        .map(|link| {
            if streams_per_bs[link.serving_bs] == 0 {
                0.0
            } else {
                real.power_budget[link.serving_bs] / streams_per_bs[link.serving_bs] as f64
            }
        })
        .collect();

    let mut v = initial_precoders(real)?;
    // rescale the initial columns to the per-stream powers
    for (user, vu) in v.per_user.iter_mut().enumerate() {
        for s in 0..vu.ncols() {
            let norm = vu.column(s).norm();
            if norm > 0.0 {
                let scale = Complex64::new(stream_power[user].sqrt() / norm, 0.0);
                let col = vu.column(s) * scale;
                vu.set_column(s, &col);
            }
        }
    }
    let mut u = ReceiverSet::zeros(real);
    let mut iterations = 0;
    let mut converged = false;

    for sweep in 1..=cfg.maxsinr_max_iterations {
        iterations = sweep;
        let mut max_change: f64 = 0.0;

        // forward: receive filters
        for (user, link) in real.users.iter().enumerate() {
            let n = link.channels[0].nrows();
            for stream in 0..link.streams {
                let mut b = CMat::identity(n, n) * Complex64::new(link.noise_power, 0.0);
                for (other, vo) in v.per_user.iter().enumerate() {
                    let h = real.channel(user, real.users[other].serving_bs);
                    for m in 0..vo.ncols() {
                        if other == user && m == stream {
                            continue;
                        }
                        let hv = h * vo.column(m);
                        b += &hv * hv.adjoint();
                    }
                }
                let rhs = real.direct_channel(user) * v.per_user[user].column(stream);
                let dir = b
                    .cholesky()
                    .ok_or_else(|| {
                        Error::Solver("MaxSINR covariance not positive definite".into())
                    })?
                    .solve(&rhs);
                let norm = dir.norm();
                if norm > 0.0 {
                    let dir = dir / Complex64::new(norm, 0.0);
                    max_change = max_change.max((&dir - u.per_user[user].column(stream)).norm());
                    u.per_user[user].set_column(stream, &dir);
                }
            }
        }

        // reverse: transmit directions under conjugate-transposed channels
        for (user, link) in real.users.iter().enumerate() {
            if stream_power[user] == 0.0 {
                continue;
            }
            let bs = link.serving_bs;
            let m_dim = real.bs_antennas[bs];
            for stream in 0..link.streams {
                let mut b = CMat::identity(m_dim, m_dim) * Complex64::new(link.noise_power, 0.0);
                for (other, olink) in real.users.iter().enumerate() {
                    let h_rev = real.channel(other, bs).adjoint();
                    for m in 0..olink.streams {
                        if other == user && m == stream {
                            continue;
                        }
                        let hu = (&h_rev * u.per_user[other].column(m))
                            * Complex64::new(stream_power[other].sqrt(), 0.0);
                        b += &hu * hu.adjoint();
                    }
                }
                let rhs = real.direct_channel(user).adjoint() * u.per_user[user].column(stream);
                let dir = b
                    .cholesky()
                    .ok_or_else(|| {
                        Error::Solver("MaxSINR covariance not positive definite".into())
                    })?
                    .solve(&rhs);
                let norm = dir.norm();
                if norm > 0.0 {
                    let dir = dir / Complex64::new(norm, 0.0);
                    let old = v.per_user[user].column(stream)
                        / Complex64::new(stream_power[user].sqrt(), 0.0);
                    max_change = max_change.max((&dir - old).norm());
                    let col = dir * Complex64::new(stream_power[user].sqrt(), 0.0);
                    v.per_user[user].set_column(stream, &col);
                }
            }
        }

        if max_change < cfg.maxsinr_filter_tolerance {
            converged = true;
            break;
        }
    }

    v.check_power(real, 1e-9)?;
    Ok(MaxSinrRun {
        precoders: v,
        receivers: u,
        iterations,
        converged,
    })
}

/// Waterfilling power allocation over parallel channels with power
/// gains `gains` and noise `noise`: `p_k = max(0, mu - noise/g_k)` with
/// the water level `mu` set so the powers sum to `power`.
pub fn waterfill(gains: &[f64], power: f64, noise: f64) -> Result<Vec<f64>> {
    if gains.is_empty() {
        return Err(Error::domain("waterfilling needs at least one channel"));
    }
    if gains.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::domain("channel gains must be positive"));
    }
    if !(power >= 0.0) || !(noise > 0.0) {
        return Err(Error::domain("power must be >= 0 and noise > 0"));
    }
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let inv: Vec<f64> = order.iter().map(|&i| noise / gains[i]).collect();
    let mut alloc = vec![0.0; gains.len()];
    for active in (1..=gains.len()).rev() {
        let mu = (power + inv[..active].iter().sum::<f64>()) / active as f64;
        if mu >= inv[active - 1] {
            for k in 0..active {
                alloc[order[k]] = mu - inv[k];
            }
            break;
        }
    }
    Ok(alloc)
}

/// TDMA rates.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmaResult {
    /// Time-averaged per-user rates (per-slot rate divided by the slot
    /// count).
    pub user_discrete: Vec<f64>,
    pub user_continuous: Vec<f64>,
    pub weighted_discrete_sum: f64,
    pub weighted_continuous_sum: f64,
    /// Time-averaged fraction of each budget spent.
    pub bs_power_fraction: Vec<f64>,
    pub slot_fraction: f64,
}

/// Intercell and intracell TDMA: one equal slot per user; in its slot a
/// user receives interference-free from its own base station at full
/// power, waterfilled over the strongest singular directions of the
/// direct channel. Discrete rates are quantized per slot and then
/// duty-cycle averaged.
pub fn tdma_run(real: &NetworkRealization, rate_sets: &[RateSet]) -> Result<TdmaResult> {
    real.validate()?;
    if rate_sets.len() != real.n_users() {
        return Err(Error::dimension("need one rate set per user"));
    }
    let n_slots = real.n_users();
    let slot_fraction = 1.0 / n_slots as f64;
    let mut user_discrete = Vec::with_capacity(n_slots);
    let mut user_continuous = Vec::with_capacity(n_slots);
    let mut bs_power = vec![0.0; real.n_bs()];
    for (user, link) in real.users.iter().enumerate() {
        let budget = real.power_budget[link.serving_bs];
        let svd = real.direct_channel(user).clone().svd(false, false);
        let mut gains: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
        gains.sort_by(|a, b| b.total_cmp(a));
        gains.truncate(link.streams);
        gains.retain(|&g| g > 0.0);
        let (mut discrete, mut continuous) = (0.0, 0.0);
        if !gains.is_empty() && budget > 0.0 {
            let alloc = waterfill(&gains, budget, link.noise_power)?;
            bs_power[link.serving_bs] += alloc.iter().sum::<f64>();
            for (g, p) in gains.iter().zip(&alloc) {
                let sinr = g * p / link.noise_power;
                discrete += rate_sets[user].rate_for_sinr(sinr);
                continuous += (1.0 + sinr).log2();
            }
        }
        user_discrete.push(discrete * slot_fraction);
        user_continuous.push(continuous * slot_fraction);
    }
    let weighted_discrete_sum = real
        .users
        .iter()
        .zip(&user_discrete)
        .map(|(u, r)| u.weight * r)
        .sum();
    let weighted_continuous_sum = real
        .users
        .iter()
        .zip(&user_continuous)
        .map(|(u, r)| u.weight * r)
        .sum();
    let bs_power_fraction = bs_power
        .iter()
        .zip(&real.power_budget)
        .map(|(&spent, &budget)| {
            if budget > 0.0 {
                spent * slot_fraction / budget
            } else {
                0.0
            }
        })
        .collect();
    Ok(TdmaResult {
        user_discrete,
        user_continuous,
        weighted_discrete_sum,
        weighted_continuous_sum,
        bs_power_fraction,
        slot_fraction,
    })
}
