//! Log-barrier interior-point solver for the precoder block.
//!
//! With receivers and linearization weights fixed, the precoder update is
//! the convex problem
//!
//! ```text
//! maximize   sum_s  weight_s * t_s  -  kappa * sum ||V||_F^2
//! subject to t_s <= a_{s,p} + b_{s,p} * e_s(V)   for every piece p
//!            sum_{users of BS i} ||V||_F^2 <= P_i
//! ```
//!
//! where `e_s(V)` is the stream MSE under the fixed receiver (a convex
//! quadratic in the stacked precoders) and every `b_{s,p} <= 0`, so each
//! piece constraint is convex. The solver follows a primal central path:
//! stacked real/imaginary precoder coordinates (normalized per base
//! station so the power constraints read `<= 1`), damped Newton steps on
//! the barrier objective, and a fixed barrier multiplier per stage. The
//! warm start is shrunk slightly to sit strictly inside the feasible set.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::link_metrics::{PrecoderSet, ReceiverSet};
use crate::network_model::NetworkRealization;
use crate::rate_model::EnvelopeModel;

/// Diagnostics from one subproblem solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SubproblemInfo {
    /// The iterate was rejected and the warm start kept.
    pub fell_back: bool,
    /// Total damped Newton steps across all barrier stages.
    pub newton_steps: usize,
    /// The barrier loop stalled before reaching the target gap.
    pub stalled: bool,
}

/// One transmit precoder column treated as an optimization variable.
struct ColVar {
    user: usize,
    col: usize,
    bs: usize,
    /// Offset of this column's `[Re; Im]` block in the variable vector.
    offset: usize,
    /// Complex dimension of the column.
    m: usize,
    /// `sqrt(P_bs)`: maps normalized coordinates back to precoders.
    scale: f64,
}

/// Per-stream constraint data.
struct StreamCtx {
    own_col: Option<usize>,
    /// Index of this stream's epigraph variable, absent for zero weight.
    t_var: Option<usize>,
    weight: f64,
    e_const: f64,
    /// Linearized envelope pieces `(a, b)`: `t <= a + b e`.
    pieces: Vec<(f64, f64)>,
    /// Per column: real-composite rows of the effective channel, so that
    /// the complex scalar `a_tilde v` has real part `p.x` and imaginary
    /// part `q.x`.
    p: Vec<DVector<f64>>,
    q: Vec<DVector<f64>>,
}

struct Problem {
    cols: Vec<ColVar>,
    /// Columns of each powered base station (indices into `cols`).
    bs_cols: Vec<Vec<usize>>,
    streams: Vec<StreamCtx>,
    n_v: usize,
    n: usize,
    n_constraints: usize,
    kappa: f64,
}

/// Barrier parameters; `gap_tol` is the absolute duality-gap target
/// `m / tau`.
pub(crate) struct BarrierSettings {
    pub gap_tol: f64,
    pub tau0: f64,
    pub multiplier: f64,
}

const WARM_SHRINK: f64 = 1.0 - 1e-6;
const T_INIT_SLACK: f64 = 1e-6;
const MAX_NEWTON_PER_STAGE: usize = 60;

pub(crate) fn solve(
    real: &NetworkRealization,
    receivers: &ReceiverSet,
    weights: &[Vec<f64>],
    envelopes: &[EnvelopeModel],
    kappa: f64,
    warm: &PrecoderSet,
    settings: &BarrierSettings,
) -> Result<(PrecoderSet, SubproblemInfo)> {
    let problem = build_problem(real, receivers, weights, envelopes, kappa)?;
    if problem.cols.is_empty() {
        // no transmit power anywhere; the unique maximizer is silence
        return Ok((PrecoderSet::zeros(real), SubproblemInfo::default()));
    }

    let mut z = DVector::zeros(problem.n);
    for cv in &problem.cols {
        let vcol = warm.per_user[cv.user].column(cv.col);
        for k in 0..cv.m {
            z[cv.offset + k] = vcol[k].re * WARM_SHRINK / cv.scale;
            z[cv.offset + cv.m + k] = vcol[k].im * WARM_SHRINK / cv.scale;
        }
    }
    for (s, ctx) in problem.streams.iter().enumerate() {
        if let Some(t) = ctx.t_var {
            let e = stream_mse_at(&problem, s, &z);
            let bound = ctx
                .pieces
                .iter()
                .map(|&(a, b)| a + b * e)
                .fold(f64::INFINITY, f64::min);
            z[t] = bound - T_INIT_SLACK;
        }
    }

    let mut info = SubproblemInfo::default();
    let mut tau = settings.tau0;
    loop {
        let stalled = newton_center(&problem, &mut z, tau, settings, &mut info.newton_steps);
        if stalled {
            info.stalled = true;
            break;
        }
        if problem.n_constraints as f64 / tau <= settings.gap_tol {
            break;
        }
        tau *= settings.multiplier;
    }

    let mut v = PrecoderSet::zeros(real);
    for cv in &problem.cols {
        for k in 0..cv.m {
            v.per_user[cv.user][(k, cv.col)] = Complex64::new(
                z[cv.offset + k] * cv.scale,
                z[cv.offset + cv.m + k] * cv.scale,
            );
        }
    }
    Ok((v, info))
}

fn build_problem(
    real: &NetworkRealization,
    receivers: &ReceiverSet,
    weights: &[Vec<f64>],
    envelopes: &[EnvelopeModel],
    kappa: f64,
) -> Result<Problem> {
    if weights.len() != real.n_users() || envelopes.len() != real.n_users() {
        return Err(Error::dimension("weights/envelopes must cover every user"));
    }
    let powered: Vec<bool> = real.power_budget.iter().map(|&p| p > 0.0).collect();

    let mut cols = Vec::new();
    let mut bs_cols = vec![Vec::new(); real.n_bs()];
    let mut offset = 0;
    for (user, link) in real.users.iter().enumerate() {
        if !powered[link.serving_bs] {
            continue;
        }
        let m = real.bs_antennas[link.serving_bs];
        for col in 0..link.streams {
            bs_cols[link.serving_bs].push(cols.len());
            cols.push(ColVar {
                user,
                col,
                bs: link.serving_bs,
                offset,
                m,
                scale: real.power_budget[link.serving_bs].sqrt(),
            });
            offset += 2 * m;
        }
    }
    let n_v = offset;

    let mut streams = Vec::new();
    let mut t_count = 0;
    let mut n_constraints: usize = powered.iter().filter(|&&p| p).count();
    for (user, link) in real.users.iter().enumerate() {
        for stream in 0..link.streams {
            let u = receivers.column(user, stream);
            let e_const = 1.0 + link.noise_power * u.norm_squared();
            let own_col = cols
                .iter()
                .position(|cv| cv.user == user && cv.col == stream);
            let w = weights[user][stream];
            let t_var = if link.weight > 0.0 {
                let pieces: Vec<(f64, f64)> = envelopes[user].linearized_pieces(w).collect();
                n_constraints += pieces.len();
                t_count += 1;
                Some((n_v + t_count - 1, pieces))
            } else {
                None
            };
            // effective channel rows, one per powered base station's columns
            let mut p = Vec::with_capacity(cols.len());
            let mut q = Vec::with_capacity(cols.len());
            for cv in &cols {
                let h = real.channel(user, cv.bs);
                let row = (u.adjoint() * h) * Complex64::new(cv.scale, 0.0);
                let mut pv = DVector::zeros(2 * cv.m);
                let mut qv = DVector::zeros(2 * cv.m);
                for k in 0..cv.m {
                    pv[k] = row[k].re;
                    pv[cv.m + k] = -row[k].im;
                    qv[k] = row[k].im;
                    qv[cv.m + k] = row[k].re;
                }
                p.push(pv);
                q.push(qv);
            }
            let (t_var, pieces) = match t_var {
                Some((idx, pieces)) => (Some(idx), pieces),
                None => (None, Vec::new()),
            };
            streams.push(StreamCtx {
                own_col,
                t_var,
                weight: link.weight,
                e_const,
                pieces,
                p,
                q,
            });
        }
    }

    Ok(Problem {
        n: n_v + t_count,
        cols,
        bs_cols,
        streams,
        n_v,
        n_constraints,
        kappa,
    })
}

/// Complex response of stream `s` to column `c`: `(Re, Im)` of
/// `a_tilde[s][c] . v_c`.
fn stream_response(problem: &Problem, s: usize, c: usize, z: &DVector<f64>) -> (f64, f64) {
    let cv = &problem.cols[c];
    let ctx = &problem.streams[s];
    let x = z.rows(cv.offset, 2 * cv.m);
    (ctx.p[c].dot(&x), ctx.q[c].dot(&x))
}

fn stream_mse_at(problem: &Problem, s: usize, z: &DVector<f64>) -> f64 {
    let ctx = &problem.streams[s];
    let mut e = ctx.e_const;
    for c in 0..problem.cols.len() {
        let (re, im) = stream_response(problem, s, c, z);
        e += re * re + im * im;
        if ctx.own_col == Some(c) {
            e -= 2.0 * re;
        }
    }
    e
}

/// Barrier objective at `z`, or `None` outside the strict interior.
fn eval_phi(problem: &Problem, z: &DVector<f64>, tau: f64) -> Option<f64> {
    let mut phi = 0.0;
    let mut barrier = 0.0;
    for cols in &problem.bs_cols {
        if cols.is_empty() {
            continue;
        }
        let mut used = 0.0;
        for &c in cols {
            let cv = &problem.cols[c];
            used += z.rows(cv.offset, 2 * cv.m).norm_squared();
        }
        let pslack = 1.0 - used;
        if pslack <= 0.0 {
            return None;
        }
        barrier -= pslack.ln();
        let p_bs = problem.cols[cols[0]].scale.powi(2);
        phi += tau * problem.kappa * p_bs * used;
    }
    for (s, ctx) in problem.streams.iter().enumerate() {
        let Some(t_var) = ctx.t_var else { continue };
        let e = stream_mse_at(problem, s, z);
        let t = z[t_var];
        phi -= tau * ctx.weight * t;
        for &(a, b) in &ctx.pieces {
            let slack = a + b * e - t;
            if slack <= 0.0 {
                return None;
            }
            barrier -= slack.ln();
        }
    }
    Some(phi + barrier)
}

/// Damped Newton descent on the barrier objective for one stage. Returns
/// `true` if the stage stalled (factorization or line-search failure).
fn newton_center(
    problem: &Problem,
    z: &mut DVector<f64>,
    tau: f64,
    settings: &BarrierSettings,
    steps: &mut usize,
) -> bool {
    let n = problem.n;
    // decrement target: keep centering error well under the stage gap
    let tol = (0.01 * tau * settings.gap_tol).min(0.03).max(1e-13);
    for _ in 0..MAX_NEWTON_PER_STAGE {
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);

        // regularizer and power barrier
        for cols in &problem.bs_cols {
            if cols.is_empty() {
                continue;
            }
            let p_bs = problem.cols[cols[0]].scale.powi(2);
            let mut used = 0.0;
            for &c in cols {
                let cv = &problem.cols[c];
                used += z.rows(cv.offset, 2 * cv.m).norm_squared();
            }
            let pslack = 1.0 - used;
            let coef_lin = 2.0 * (tau * problem.kappa * p_bs + 1.0 / pslack);
            for &c in cols {
                let cv = &problem.cols[c];
                for k in cv.offset..cv.offset + 2 * cv.m {
                    grad[k] += coef_lin * z[k];
                    hess[(k, k)] += coef_lin;
                }
            }
            // rank-one part of the power barrier
            let coef_sq = 4.0 / (pslack * pslack);
            for &c1 in cols {
                let cv1 = &problem.cols[c1];
                for &c2 in cols {
                    let cv2 = &problem.cols[c2];
                    for k1 in 0..2 * cv1.m {
                        for k2 in 0..2 * cv2.m {
                            hess[(cv1.offset + k1, cv2.offset + k2)] +=
                                coef_sq * z[cv1.offset + k1] * z[cv2.offset + k2];
                        }
                    }
                }
            }
        }

        for (s, ctx) in problem.streams.iter().enumerate() {
            let Some(t_var) = ctx.t_var else { continue };
            let e = stream_mse_at(problem, s, z);
            let t = z[t_var];
            // accumulated piece coefficients
            let (mut inv_sum, mut rho, mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(a, b) in &ctx.pieces {
                let slack = a + b * e - t;
                let inv = 1.0 / slack;
                inv_sum += inv;
                rho -= b * inv;
                a0 += inv * inv;
                a1 += b * inv * inv;
                a2 += b * b * inv * inv;
            }
            grad[t_var] += -tau * ctx.weight + inv_sum;
            hess[(t_var, t_var)] += a0;

            // gradient of the stream MSE over the v-block
            let mut w_vec = DVector::zeros(problem.n_v);
            for (c, cv) in problem.cols.iter().enumerate() {
                let (re, im) = stream_response(problem, s, c, z);
                let mut block = &ctx.p[c] * (2.0 * re) + &ctx.q[c] * (2.0 * im);
                if ctx.own_col == Some(c) {
                    block -= &ctx.p[c] * 2.0;
                }
                w_vec.rows_mut(cv.offset, 2 * cv.m).copy_from(&block);
                // curvature of e: rho * 2 (p p^T + q q^T)
                if rho != 0.0 {
                    block_rank_two(&mut hess, cv.offset, 2.0 * rho, &ctx.p[c], &ctx.q[c]);
                }
            }
            for k in 0..problem.n_v {
                if w_vec[k] != 0.0 {
                    grad[k] += rho * w_vec[k];
                    hess[(t_var, k)] -= a1 * w_vec[k];
                    hess[(k, t_var)] -= a1 * w_vec[k];
                }
            }
            // rank-one accumulation of the squared-slack terms
            for k1 in 0..problem.n_v {
                let wk1 = w_vec[k1];
                if wk1 == 0.0 {
                    continue;
                }
                for k2 in k1..problem.n_v {
                    let add = a2 * wk1 * w_vec[k2];
                    hess[(k1, k2)] += add;
                    if k1 != k2 {
                        hess[(k2, k1)] += add;
                    }
                }
            }
        }

        // Newton direction with escalating ridge on factorization failure
        let mut delta = None;
        let mut ridge = 0.0;
        for attempt in 0..6 {
            let mut h = hess.clone();
            if ridge > 0.0 {
                for k in 0..n {
                    h[(k, k)] += ridge;
                }
            }
            if let Some(chol) = h.cholesky() {
                delta = Some(chol.solve(&(-&grad)));
                break;
            }
            ridge = if attempt == 0 {
                1e-12 * (1.0 + hess.trace() / n as f64)
            } else {
                ridge * 100.0
            };
        }
        let Some(delta) = delta else { return true };
        let dec2 = -grad.dot(&delta);
        if dec2 <= 2.0 * tol {
            return false;
        }
        *steps += 1;

        // backtracking line search staying strictly feasible
        let phi0 = eval_phi(problem, z, tau).expect("iterate must be feasible");
        let mut step = 1.0;
        loop {
            let cand = &*z + &delta * step;
            if let Some(phi) = eval_phi(problem, &cand, tau) {
                if phi <= phi0 - 0.25 * step * dec2 {
                    *z = cand;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-18 {
                return true;
            }
        }
    }
    false
}

/// `hess[block, block] += coef * (p p^T + q q^T)` on the `2m`-wide block
/// at `offset`.
fn block_rank_two(
    hess: &mut DMatrix<f64>,
    offset: usize,
    coef: f64,
    p: &DVector<f64>,
    q: &DVector<f64>,
) {
    let dim = p.len();
    for k1 in 0..dim {
        for k2 in k1..dim {
            let add = coef * (p[k1] * p[k2] + q[k1] * q[k2]);
            hess[(offset + k1, offset + k2)] += add;
            if k1 != k2 {
                hess[(offset + k2, offset + k1)] += add;
            }
        }
    }
}
