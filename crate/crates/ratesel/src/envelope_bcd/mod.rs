//! Discrete-rate precoder optimization by block coordinate ascent.
//!
//! The weighted discrete sum rate is bounded by the concave envelope of
//! each stream's rate-versus-MSE step function (in a chosen QoS domain)
//! and the domain map is linearized around per-stream points `1/w`. The
//! resulting surrogate is concave in each of three blocks — receive
//! filters, linearization weights, precoders — and each block update is
//! solved exactly:
//!
//! 1. receivers: per-stream MMSE filters,
//! 2. weights: `w = 1/e` at the current MSEs (tight linearization),
//! 3. precoders: a convex program handled by the log-barrier solver in
//!    [`subproblem`].
//!
//! A power regularizer `kappa * sum ||V||^2` with `kappa` from
//! [`regularizer_kappa`] makes the maximizer also the minimum-power
//! design among those attaining the best weighted sum rate. The
//! surrogate objective never decreases across updates, so the objective
//! sequence converges; iteration stops once its relative change falls
//! below the configured tolerance.

mod subproblem;

pub use subproblem::SubproblemInfo;

use crate::decimal::{decimal_gcd, Decimal};
use crate::error::{Error, Result};
use crate::link_metrics::{
    evaluate_rates, mmse_receivers, stream_mse, PrecoderSet, ReceiverSet,
};
use crate::network_model::NetworkRealization;
use crate::rate_model::{EnvelopeModel, QosDomain, RateSet};
use num_complex::Complex64;
use subproblem::BarrierSettings;

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BcdConfig {
    /// QoS domain in which the envelopes are built.
    pub qos_domain: QosDomain,
    pub max_iterations: usize,
    /// Stop once the relative change of the surrogate objective between
    /// iterations falls below this.
    pub rel_tolerance: f64,
    /// Duality-gap target of the precoder subproblem, relative to the
    /// weighted top-rate scale.
    pub inner_tolerance: f64,
    /// Lower clamp on MSEs before inversion into weights.
    pub mse_floor: f64,
    /// Initial barrier multiplier of the interior-point solver.
    pub barrier_t0: f64,
    /// Barrier growth factor per stage.
    pub barrier_multiplier: f64,
}

impl Default for BcdConfig {
    fn default() -> Self {
        BcdConfig {
            qos_domain: QosDomain::ContinuousRate,
            max_iterations: 500,
            rel_tolerance: 1e-3,
            inner_tolerance: 1e-6,
            mse_floor: 1e-12,
            barrier_t0: 10.0,
            barrier_multiplier: 10.0,
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::domain("max_iterations must be >= 1"));
        }
        for (name, v) in [
            ("rel_tolerance", self.rel_tolerance),
            ("inner_tolerance", self.inner_tolerance),
            ("mse_floor", self.mse_floor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive")));
            }
        }
        if !(self.barrier_t0 > 0.0) || !(self.barrier_multiplier > 1.0) {
            return Err(Error::domain("barrier parameters must be positive (multiplier > 1)"));
        }
        Ok(())
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    /// Objective of the linearized-envelope surrogate, including the
    /// power regularizer.
    pub surrogate_objective: f64,
    pub weighted_discrete_rate: f64,
    pub weighted_continuous_rate: f64,
}

/// Final iterate and per-iteration trace.
#[derive(Debug, Clone)]
pub struct BcdState {
    pub precoders: PrecoderSet,
    pub receivers: ReceiverSet,
    /// Linearization weights per user per stream.
    pub weights: Vec<Vec<f64>>,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
    pub iterations: usize,
    /// Subproblem solves that returned the warm start instead of an
    /// improved iterate.
    pub subproblem_fallbacks: usize,
}

/// Power regularization weight: `delta / (sum of budgets + 1)`, where
/// `delta` is the gcd, on the exact decimal grid, of all nonzero products
/// `weight * rate`. The gcd is a positive lower bound on the smallest
/// gap between distinct weighted sum rates, so rate optimality is never
/// traded for power savings.
pub fn regularizer_kappa(
    rate_sets: &[RateSet],
    weights: &[Decimal],
    power_budgets: &[f64],
) -> Result<f64> {
    if rate_sets.len() != weights.len() {
        return Err(Error::dimension("need one weight per rate set"));
    }
    let mut products = Vec::new();
    for (rs, w) in rate_sets.iter().zip(weights) {
        for q in rs.rates_exact() {
            let p = w.mul(q)?;
            if !p.is_zero() {
                products.push(p);
            }
        }
    }
    let delta = decimal_gcd(&products)
        .ok_or_else(|| Error::domain("all weighted rates are zero; no rate gap exists"))?;
    let total_power: f64 = power_budgets.iter().sum();
    if !total_power.is_finite() || total_power < 0.0 {
        return Err(Error::domain("power budgets must be finite and nonnegative"));
    }
    Ok(delta.to_f64() / (total_power + 1.0))
}

/// MMSE receiver update (block 1). Never decreases the surrogate.
pub fn update_receivers(real: &NetworkRealization, v: &PrecoderSet) -> Result<ReceiverSet> {
    mmse_receivers(real, v)
}

/// Linearization weight update (block 2): `w = 1/e` clamped below by the
/// MSE floor and above 1. With MMSE receivers the linearized surrogate
/// touches the envelope surrogate after this step.
pub fn update_weights(
    real: &NetworkRealization,
    v: &PrecoderSet,
    receivers: &ReceiverSet,
    mse_floor: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut weights = Vec::with_capacity(real.n_users());
    for user in 0..real.n_users() {
        let mut per_stream = Vec::with_capacity(real.users[user].streams);
        for stream in 0..real.users[user].streams {
            let u = receivers.column(user, stream);
            let e = stream_mse(&u, v, real, user, stream)?;
            per_stream.push((1.0 / e.max(mse_floor)).max(1.0));
        }
        weights.push(per_stream);
    }
    Ok(weights)
}

/// Objective of the linearized-envelope surrogate at the given blocks:
/// `sum_s weight_user * glin_s(e_s) - kappa * sum ||V||^2`.
pub fn surrogate_objective(
    real: &NetworkRealization,
    receivers: &ReceiverSet,
    weights: &[Vec<f64>],
    envelopes: &[EnvelopeModel],
    kappa: f64,
    v: &PrecoderSet,
) -> Result<f64> {
    let mut obj = 0.0;
    for user in 0..real.n_users() {
        let omega = real.users[user].weight;
        for stream in 0..real.users[user].streams {
            if omega == 0.0 {
                continue;
            }
            let u = receivers.column(user, stream);
            let e = stream_mse(&u, v, real, user, stream)?;
            let glin = envelopes[user]
                .linearized_pieces(weights[user][stream])
                .map(|(a, b)| a + b * e)
                .fold(f64::INFINITY, f64::min);
            obj += omega * glin;
        }
    }
    obj -= kappa * v.per_user.iter().map(|m| m.norm_squared()).sum::<f64>();
    Ok(obj)
}

/// Precoder update (block 3): solves the convex epigraph problem by the
/// interior-point method and keeps the warm start whenever the solver
/// cannot certify an improvement.
pub fn solve_precoder_subproblem(
    real: &NetworkRealization,
    receivers: &ReceiverSet,
    weights: &[Vec<f64>],
    envelopes: &[EnvelopeModel],
    kappa: f64,
    warm: &PrecoderSet,
    cfg: &BcdConfig,
) -> Result<(PrecoderSet, SubproblemInfo)> {
    cfg.validate()?;
    let settings = BarrierSettings {
        gap_tol: cfg.inner_tolerance * objective_scale(real, envelopes),
        tau0: cfg.barrier_t0,
        multiplier: cfg.barrier_multiplier,
    };
    let warm_obj = surrogate_objective(real, receivers, weights, envelopes, kappa, warm)?;
    let (v, mut info) = subproblem::solve(real, receivers, weights, envelopes, kappa, warm, &settings)?;
    let new_obj = surrogate_objective(real, receivers, weights, envelopes, kappa, &v)?;
    if new_obj + 1e-12 * warm_obj.abs().max(1.0) < warm_obj {
        info.fell_back = true;
        return Ok((warm.clone(), info));
    }
    Ok((v, info))
}

fn objective_scale(real: &NetworkRealization, envelopes: &[EnvelopeModel]) -> f64 {
    let sum: f64 = real
        .users
        .iter()
        .zip(envelopes)
        .map(|(u, env)| u.weight * u.streams as f64 * env.max_rate())
        .sum();
    sum.max(1.0)
}

/// Deterministic starting point: each user's precoder spans the top
/// right singular vectors of its direct channel, at equal per-stream
/// power and full budget per base station.
pub fn initial_precoders(real: &NetworkRealization) -> Result<PrecoderSet> {
    let mut users_per_bs = vec![0usize; real.n_bs()];
    for u in &real.users {
        users_per_bs[u.serving_bs] += 1;
    }
    let mut v = PrecoderSet::zeros(real);
    for (user, link) in real.users.iter().enumerate() {
        let h = real.direct_channel(user);
        let svd = h.clone().svd(false, true);
        let v_t = svd
            .v_t
            .as_ref()
            .ok_or_else(|| Error::Solver("SVD did not return right singular vectors".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let per_stream =
            real.power_budget[link.serving_bs] / (users_per_bs[link.serving_bs] * link.streams) as f64;
        let scale = Complex64::new(per_stream.sqrt(), 0.0);
        for (col, &idx) in order.iter().take(link.streams).enumerate() {
            let dir = v_t.row(idx).adjoint();
            v.per_user[user].set_column(col, &(dir * scale));
        }
    }
    Ok(v)
}

/// Runs the block coordinate ascent to convergence of the surrogate
/// objective. Every iterate satisfies the per-BS power constraints; the
/// trace records the surrogate together with the rates the current
/// precoders achieve under fresh MMSE receivers.
pub fn run(
    real: &NetworkRealization,
    rate_sets: &[RateSet],
    cfg: &BcdConfig,
) -> Result<BcdState> {
    cfg.validate()?;
    real.validate()?;
    if rate_sets.len() != real.n_users() {
        return Err(Error::dimension("need one rate set per user"));
    }
    let envelopes: Vec<EnvelopeModel> = rate_sets
        .iter()
        .map(|rs| EnvelopeModel::build(rs, cfg.qos_domain))
        .collect();
    let weights_exact: Vec<Decimal> = real
        .users
        .iter()
        .map(|u| Decimal::from_f64(u.weight))
        .collect::<Result<_>>()?;
    let kappa = regularizer_kappa(rate_sets, &weights_exact, &real.power_budget)?;

    let mut v = initial_precoders(real)?;
    let mut receivers = update_receivers(real, &v)?;
    let mut weights = update_weights(real, &v, &receivers, cfg.mse_floor)?;
    let mut obj_prev =
        surrogate_objective(real, &receivers, &weights, &envelopes, kappa, &v)?;

    let mut state = BcdState {
        precoders: v.clone(),
        receivers: receivers.clone(),
        weights: weights.clone(),
        trace: Vec::new(),
        converged: false,
        iterations: 0,
        subproblem_fallbacks: 0,
    };

    for iteration in 1..=cfg.max_iterations {
        receivers = update_receivers(real, &v)?;
        weights = update_weights(real, &v, &receivers, cfg.mse_floor)?;
        let (v_next, info) =
            solve_precoder_subproblem(real, &receivers, &weights, &envelopes, kappa, &v, cfg)?;
        v = v_next;
        state.subproblem_fallbacks += info.fell_back as usize;

        let obj = surrogate_objective(real, &receivers, &weights, &envelopes, kappa, &v)?;
        let report = evaluate_rates(real, &v, rate_sets)?;
        state.trace.push(TracePoint {
            iteration,
            surrogate_objective: obj,
            weighted_discrete_rate: report.weighted_discrete_sum,
            weighted_continuous_rate: report.weighted_continuous_sum,
        });
        state.iterations = iteration;

        let rel = (obj - obj_prev).abs() / obj_prev.abs().max(1e-12);
        obj_prev = obj;
        if rel < cfg.rel_tolerance {
            state.converged = true;
            break;
        }
    }

    v.check_power(real, 1e-9)?;
    state.precoders = v;
    state.receivers = receivers;
    state.weights = weights;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{init_random, scalar_net, seeded_realization};

    fn q012() -> RateSet {
        RateSet::from_literals(&["0", "1", "2"], 1.0).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let ones = vec![Decimal::ONE; 3];
        let sets = vec![q012(); 3];
        let kappa = regularizer_kappa(&sets, &ones, &[10.0, 10.0, 10.0]).unwrap();
        assert!((kappa - 1.0 / 31.0).abs() < 1e-15);

        let wifi = vec![RateSet::wifi(1.0)];
        let kappa = regularizer_kappa(&wifi, &[Decimal::ONE], &[0.0]).unwrap();
        assert!((kappa - 0.01).abs() < 1e-15);

        // all-zero rates have no gap
        let zero = vec![RateSet::from_literals(&["0"], 1.0).unwrap()];
        assert!(regularizer_kappa(&zero, &[Decimal::ONE], &[1.0]).is_err());
    }

    #[test]
    fn kappa_gcd_lower_bounds_enumerated_gap() {
        // two streams drawing rates from {0, 1, 2}: enumerate all weighted
        // sums, check gcd lower-bounds the smallest nonzero gap
        let rates = [0.0f64, 1.0, 2.0];
        let mut sums = Vec::new();
        for a in rates {
            for b in rates {
                sums.push(a + b);
            }
        }
        let mut min_gap = f64::INFINITY;
        for &x in &sums {
            for &y in &sums {
                if x != y {
                    min_gap = min_gap.min((x - y).abs());
                }
            }
        }
        let kappa = regularizer_kappa(&[q012()], &[Decimal::ONE], &[0.0]).unwrap();
        assert_eq!(min_gap, 1.0);
        assert!(kappa <= min_gap);
        assert_eq!(kappa, 1.0);
    }

    #[test]
    fn kappa_scales_with_doubling() {
        let base = regularizer_kappa(&[q012()], &[Decimal::ONE], &[10.0]).unwrap();
        let doubled_rates = RateSet::from_literals(&["0", "2", "4"], 1.0).unwrap();
        let kappa2 = regularizer_kappa(&[doubled_rates], &[Decimal::ONE], &[10.0]).unwrap();
        assert!((kappa2 - 2.0 * base).abs() < 1e-15);
        let doubled_weights =
            regularizer_kappa(&[q012()], &["2".parse().unwrap()], &[10.0]).unwrap();
        assert!((doubled_weights - 2.0 * base).abs() < 1e-15);
    }

    #[test]
    fn receiver_update_scalar_and_zero() {
        let real = crate::test_util::scalar_net(&[&[1.0]], 1.0, 10.0);
        let v = crate::test_util::scalar_precoder(&[1.0]);
        let u = update_receivers(&real, &v).unwrap();
        assert!((u.per_user[0][(0, 0)].re - 0.5).abs() < 1e-15);
        let u0 = update_receivers(&real, &PrecoderSet::zeros(&real)).unwrap();
        assert_eq!(u0.per_user[0][(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn weight_update_examples_and_tightness() {
        let real = scalar_net(&[&[1.0]], 1.0, 10.0);
        let v = crate::test_util::scalar_precoder(&[1.0]);
        let u = update_receivers(&real, &v).unwrap();
        let w = update_weights(&real, &v, &u, 1e-12).unwrap();
        assert!((w[0][0] - 2.0).abs() < 1e-12); // e = 1/2

        // no signal: e = 1 -> w = 1
        let v0 = PrecoderSet::zeros(&real);
        let u0 = update_receivers(&real, &v0).unwrap();
        let w0 = update_weights(&real, &v0, &u0, 1e-12).unwrap();
        assert_eq!(w0[0][0], 1.0);

        // tightness: linearized value equals envelope value at w = 1/e
        let env = EnvelopeModel::build(&q012(), QosDomain::ContinuousRate);
        let e = 0.5;
        assert!((env.linearized(e, 1.0 / e).unwrap() - env.value(e).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn block_updates_never_decrease_surrogate() {
        for seed in 0..6 {
            let real = seeded_realization(seed + 100);
            let rate_sets = vec![RateSet::wifi(1.0); real.n_users()];
            let cfg = BcdConfig::default();
            let envelopes: Vec<_> = rate_sets
                .iter()
                .map(|rs| EnvelopeModel::build(rs, cfg.qos_domain))
                .collect();
            let kappa = 1e-3;
            let v = init_random(&real, seed);
            let u_init = update_receivers(&real, &v).unwrap();
            let w_init = update_weights(&real, &v, &u_init, cfg.mse_floor).unwrap();
            // perturb weights so the receiver step has something to gain
            let w_stale: Vec<Vec<f64>> =
                w_init.iter().map(|ws| ws.iter().map(|w| (w * 0.7).max(1.0)).collect()).collect();
            let obj0 =
                surrogate_objective(&real, &u_init, &w_stale, &envelopes, kappa, &v).unwrap();

            let u1 = update_receivers(&real, &v).unwrap();
            let obj1 = surrogate_objective(&real, &u1, &w_stale, &envelopes, kappa, &v).unwrap();
            assert!(obj1 >= obj0 - 1e-8, "receiver step decreased: {obj0} -> {obj1}");

            let w1 = update_weights(&real, &v, &u1, cfg.mse_floor).unwrap();
            let obj2 = surrogate_objective(&real, &u1, &w1, &envelopes, kappa, &v).unwrap();
            assert!(obj2 >= obj1 - 1e-8, "weight step decreased: {obj1} -> {obj2}");

            let (v2, _info) =
                solve_precoder_subproblem(&real, &u1, &w1, &envelopes, kappa, &v, &cfg).unwrap();
            let obj3 = surrogate_objective(&real, &u1, &w1, &envelopes, kappa, &v2).unwrap();
            assert!(obj3 >= obj2 - 1e-8, "precoder step decreased: {obj2} -> {obj3}");
        }
    }

    #[test]
    fn subproblem_zero_weights_silences_network() {
        let mut real = scalar_net(&[&[1.0, 0.2], &[0.3, 1.0]], 1.0, 10.0);
        for u in &mut real.users {
            u.weight = 0.0;
        }
        let cfg = BcdConfig::default();
        let envelopes = vec![EnvelopeModel::build(&q012(), cfg.qos_domain); 2];
        let warm = crate::test_util::scalar_precoder(&[3.0, 3.0]);
        let u = update_receivers(&real, &warm).unwrap();
        let w = update_weights(&real, &warm, &u, cfg.mse_floor).unwrap();
        let (v, info) =
            solve_precoder_subproblem(&real, &u, &w, &envelopes, 0.05, &warm, &cfg).unwrap();
        assert!(!info.fell_back);
        let power: f64 = v.per_user.iter().map(|m| m.norm_squared()).sum();
        assert!(power < 1e-5, "power {power}");
    }

    #[test]
    fn subproblem_single_link_fixed_point() {
        // At the optimizer's fixed point (u = sqrt(3)/4, w = 4) the
        // precoder block returns |v|^2 = 3: minimum power for the top
        // achievable rate under the gap regularizer.
        let real = scalar_net(&[&[1.0]], 1.0, 10.0);
        let cfg = BcdConfig::default();
        let envelopes = vec![EnvelopeModel::build(&q012(), QosDomain::ContinuousRate)];
        let kappa = 1.0 / 11.0;
        let u = ReceiverSet {
            per_user: vec![crate::network_model::CMat::from_element(
                1,
                1,
                Complex64::new(3f64.sqrt() / 4.0, 0.0),
            )],
        };
        let w = vec![vec![4.0]];
        let warm = crate::test_util::scalar_precoder(&[10f64.sqrt()]);
        let (v, _info) =
            solve_precoder_subproblem(&real, &u, &w, &envelopes, kappa, &warm, &cfg).unwrap();
        let got = v.per_user[0].norm_squared();
        assert!((got - 3.0).abs() < 1e-4, "|v|^2 = {got}");
    }

    #[test]
    fn subproblem_matches_grid_search_oracle() {
        // 2-link interference channel with real channels; refine a dense
        // grid over the (real, nonnegative) precoder pair
        let real = scalar_net(&[&[1.0, 0.45], &[0.35, 0.9]], 1.0, 5.0);
        let cfg = BcdConfig::default();
        let envelopes = vec![EnvelopeModel::build(&q012(), QosDomain::ContinuousRate); 2];
        let kappa = regularizer_kappa(
            &vec![q012(); 2],
            &[Decimal::ONE, Decimal::ONE],
            &real.power_budget,
        )
        .unwrap();
        let warm = crate::test_util::scalar_precoder(&[5f64.sqrt(), 5f64.sqrt()]);
        let u = update_receivers(&real, &warm).unwrap();
        let w = update_weights(&real, &warm, &u, cfg.mse_floor).unwrap();

        let objective = |v1: f64, v2: f64| {
            let v = crate::test_util::scalar_precoder(&[v1, v2]);
            surrogate_objective(&real, &u, &w, &envelopes, kappa, &v).unwrap()
        };
        let vmax = 5f64.sqrt();
        let (mut c1, mut c2, mut half) = (vmax / 2.0, vmax / 2.0, vmax / 2.0);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for _ in 0..14 {
            let n = 40;
            for i in 0..=n {
                for j in 0..=n {
                    let v1 = (c1 - half + 2.0 * half * i as f64 / n as f64).clamp(0.0, vmax);
                    let v2 = (c2 - half + 2.0 * half * j as f64 / n as f64).clamp(0.0, vmax);
                    let obj = objective(v1, v2);
                    if obj > best.0 {
                        best = (obj, v1, v2);
                    }
                }
            }
            c1 = best.1;
            c2 = best.2;
            half *= 0.25;
        }

        let (v, _info) =
            solve_precoder_subproblem(&real, &u, &w, &envelopes, kappa, &warm, &cfg).unwrap();
        let solver_obj = surrogate_objective(&real, &u, &w, &envelopes, kappa, &v).unwrap();
        assert!(
            (solver_obj - best.0).abs() < 1e-4,
            "solver {solver_obj} vs grid {}",
            best.0
        );
    }

    #[test]
    fn run_single_link_reaches_top_rate_at_minimum_power() {
        let real = scalar_net(&[&[1.0]], 1.0, 10.0);
        let rate_sets = vec![q012()];
        let state = run(&real, &rate_sets, &BcdConfig::default()).unwrap();
        assert!(state.converged);
        let report = evaluate_rates(&real, &state.precoders, &rate_sets).unwrap();
        assert_eq!(report.streams[0][0].discrete_rate, 2.0);
        let power = state.precoders.per_user[0].norm_squared();
        assert!((power - 3.0).abs() / 3.0 < 1e-3, "power {power}");
    }

    #[test]
    fn run_zero_budget_terminates_immediately() {
        let real = scalar_net(&[&[1.0]], 1.0, 0.0);
        let rate_sets = vec![q012()];
        let state = run(&real, &rate_sets, &BcdConfig::default()).unwrap();
        assert!(state.converged);
        assert_eq!(state.iterations, 1);
        assert_eq!(state.precoders.per_user[0].norm_squared(), 0.0);
        let report = evaluate_rates(&real, &state.precoders, &rate_sets).unwrap();
        assert_eq!(report.weighted_discrete_sum, 0.0);
    }

    #[test]
    fn run_desk_scale_monotone_and_feasible() {
        let real = seeded_realization(7);
        let rate_sets = vec![RateSet::wifi(1.0); real.n_users()];
        let state = run(&real, &rate_sets, &BcdConfig::default()).unwrap();
        assert!(state.converged, "no convergence in {} iterations", state.iterations);
        for pair in state.trace.windows(2) {
            assert!(
                pair[1].surrogate_objective >= pair[0].surrogate_objective - 1e-8,
                "objective decreased: {pair:?}"
            );
        }
        state.precoders.check_power(&real, 1e-9).unwrap();
    }

    #[test]
    fn run_implicit_user_selection() {
        let mut real = seeded_realization(3);
        for h in &mut real.users[0].channels {
            h.fill(Complex64::new(0.0, 0.0));
        }
        let rate_sets = vec![RateSet::wifi(1.0); real.n_users()];
        let state = run(&real, &rate_sets, &BcdConfig::default()).unwrap();
        let dead_power = state.precoders.per_user[0].norm_squared();
        let budget = real.power_budget[real.users[0].serving_bs];
        assert!(dead_power <= 1e-6 * budget, "dead user keeps power {dead_power}");
        let report = evaluate_rates(&real, &state.precoders, &rate_sets).unwrap();
        assert_eq!(report.user_discrete[0], 0.0);
    }
}
