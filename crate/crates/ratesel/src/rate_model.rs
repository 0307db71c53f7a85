//! Discrete rate sets, SINR thresholds, QoS-domain mappings, and the
//! piecewise-linear concave envelope of the rate-versus-quality step
//! function.
//!
//! A transmission at discrete rate `q` succeeds when the per-stream SINR
//! reaches `margin * (2^q - 1)`, i.e. when the MMSE-domain quality
//! `e = 1/(1 + SINR)` falls below `1/(1 + margin * (2^q - 1))`. The rate
//! achievable at a given quality is therefore a non-increasing step
//! function of `e`. Optimizing it directly is combinatorial, so this
//! module also builds its tightest concave majorant in a configurable
//! QoS coordinate, plus the first-order model of that majorant used by
//! the precoder solver.

use crate::decimal::Decimal;
use crate::error::{Error, Result};

/// Coordinate in which the concave envelope is constructed.
///
/// Each variant defines a concave, strictly increasing map `eta` from the
/// MSE domain `(0, 1]` together with its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QosDomain {
    /// Identity map, `eta(e) = e`.
    Mse,
    /// Continuous-rate coordinate, `eta(e) = log2(e)`.
    ContinuousRate,
    /// SINR coordinate, `eta(e) = 1 - 1/e`.
    Sinr,
}

impl QosDomain {
    pub const ALL: [QosDomain; 3] = [QosDomain::Mse, QosDomain::ContinuousRate, QosDomain::Sinr];

    /// Maps an MSE value into this QoS domain.
    pub fn map(&self, e: f64) -> Result<f64> {
        check_mse(e)?;
        Ok(self.map_unchecked(e))
    }

    /// Derivative of the domain map at `e`; strictly positive on `(0, 1]`.
    pub fn derivative(&self, e: f64) -> Result<f64> {
        check_mse(e)?;
        Ok(self.derivative_unchecked(e))
    }

    pub(crate) fn map_unchecked(&self, e: f64) -> f64 {
        match self {
            QosDomain::Mse => e,
            QosDomain::ContinuousRate => e.log2(),
            QosDomain::Sinr => 1.0 - 1.0 / e,
        }
    }

    pub(crate) fn derivative_unchecked(&self, e: f64) -> f64 {
        match self {
            QosDomain::Mse => 1.0,
            QosDomain::ContinuousRate => 1.0 / (e * std::f64::consts::LN_2),
            QosDomain::Sinr => 1.0 / (e * e),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QosDomain::Mse => "mse",
            QosDomain::ContinuousRate => "continuous-rate",
            QosDomain::Sinr => "sinr",
        }
    }
}

impl std::str::FromStr for QosDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<QosDomain> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(QosDomain::Mse),
            "continuous-rate" | "rate" | "continuous_rate" => Ok(QosDomain::ContinuousRate),
            "sinr" => Ok(QosDomain::Sinr),
            other => Err(Error::Config(format!("unknown QoS domain '{other}'"))),
        }
    }
}

fn check_mse(e: f64) -> Result<()> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::domain(format!("MSE {e} outside (0, 1]")));
    }
    Ok(())
}

/// QoS-domain map `eta(e)`.
pub fn qos_map(dom: QosDomain, e: f64) -> Result<f64> {
    dom.map(e)
}

/// Derivative of the QoS-domain map at `e`.
pub fn qos_derivative(dom: QosDomain, e: f64) -> Result<f64> {
    dom.derivative(e)
}

/// An ordered set of discrete spectral efficiencies with a common SINR
/// implementation margin.
///
/// The zero rate is always a member, so any SINR (including zero) supports
/// at least one entry. Rates are kept as exact decimals; all analysis uses
/// their `f64` images.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSet {
    rates: Vec<Decimal>,
    rates_f64: Vec<f64>,
    margin: f64,
}

impl RateSet {
    /// Builds a rate set from exact decimal rates and a linear-scale
    /// margin. Rates must be strictly increasing, start at zero, and be
    /// finite; the margin must be at least one.
    pub fn new(rates: Vec<Decimal>, margin: f64) -> Result<RateSet> {
        if rates.is_empty() {
            return Err(Error::domain("rate set must not be empty"));
        }
        if !rates[0].is_zero() {
            return Err(Error::domain("rate set must contain the zero rate first"));
        }
        if !rates.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::domain("rates must be strictly increasing"));
        }
        if !(margin >= 1.0 && margin.is_finite()) {
            return Err(Error::domain(format!("margin {margin} must be >= 1")));
        }
        let rates_f64 = rates.iter().map(Decimal::to_f64).collect();
        Ok(RateSet {
            rates,
            rates_f64,
            margin,
        })
    }

    /// Convenience constructor from decimal literals, e.g. `["0", "0.5"]`.
    pub fn from_literals(rates: &[&str], margin: f64) -> Result<RateSet> {
        let parsed: Result<Vec<Decimal>> = rates.iter().map(|s| s.parse()).collect();
        RateSet::new(parsed?, margin)
    }

    /// IEEE 802.11ac rates, 0 through 6.67 bits/s/Hz.
    pub fn wifi(margin: f64) -> RateSet {
        RateSet::from_literals(
            &["0", "0.5", "1", "1.5", "2", "3", "4", "4.5", "5", "6", "6.67"],
            margin,
        )
        .expect("preset is valid")
    }

    /// 3GPP LTE rates, 0 through 4.8 bits/s/Hz.
    pub fn lte(margin: f64) -> RateSet {
        RateSet::from_literals(
            &[
                "0", "0.25", "0.4", "0.5", "0.67", "1", "1.33", "1.5", "1.6", "2", "2.67", "3",
                "3.2", "4", "4.5", "4.8",
            ],
            margin,
        )
        .expect("preset is valid")
    }

    /// Integer grid `{0, 1, ..., q_max}`.
    pub fn grid(q_max: u32, margin: f64) -> RateSet {
        let rates = (0..=q_max as i64).map(|q| Decimal::new(q, 0)).collect();
        RateSet::new(rates, margin).expect("preset is valid")
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates_f64
    }

    pub fn rates_exact(&self) -> &[Decimal] {
        &self.rates
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn max_rate(&self) -> f64 {
        *self.rates_f64.last().unwrap()
    }

    /// Minimum SINR (linear scale) at which rate `q` is decodable:
    /// `margin * (2^q - 1)`. `q` must be a member of the set.
    pub fn required_sinr(&self, q: f64) -> Result<f64> {
        let idx = self
            .rates_f64
            .iter()
            .position(|&r| r == q)
            .ok_or_else(|| Error::domain(format!("rate {q} is not in the set")))?;
        Ok(self.required_sinr_at(idx))
    }

    fn required_sinr_at(&self, idx: usize) -> f64 {
        self.margin * ((2f64).powf(self.rates_f64[idx]) - 1.0)
    }

    /// MSE threshold below which rate index `idx` is achievable.
    fn mse_threshold_at(&self, idx: usize) -> f64 {
        1.0 / (1.0 + self.required_sinr_at(idx))
    }

    /// Largest rate achievable at MSE `e`: the maximal `q` in the set with
    /// `e <= 1/(1 + required_sinr(q))`. The zero rate is always feasible.
    pub fn discrete_rate(&self, e: f64) -> Result<f64> {
        check_mse(e)?;
        let mut best = 0.0;
        for idx in 0..self.rates_f64.len() {
            if e <= self.mse_threshold_at(idx) {
                best = self.rates_f64[idx];
            }
        }
        Ok(best)
    }

    /// Largest rate achievable at a linear-scale SINR. Identical to
    /// `discrete_rate(1/(1 + sinr))` evaluated without the intermediate
    /// division.
    pub fn rate_for_sinr(&self, sinr: f64) -> f64 {
        let mut best = 0.0;
        for idx in 0..self.rates_f64.len() {
            if self.required_sinr_at(idx) <= sinr {
                best = self.rates_f64[idx];
            }
        }
        best
    }

    /// QoS coordinate `eta(1/(1 + required_sinr))` of rate index `idx`,
    /// computed with per-domain algebra instead of the literal chain of
    /// divisions so that the exact identities hold: the zero rate maps to
    /// `eta(1)` exactly, the SINR coordinate is exactly `-beta`, and with
    /// unit margin the continuous-rate coordinate is exactly `-q`.
    fn threshold_coordinate(&self, idx: usize, dom: QosDomain) -> f64 {
        let beta = self.required_sinr_at(idx);
        if beta == 0.0 {
            return dom.map_unchecked(1.0);
        }
        let q = self.rates_f64[idx];
        match dom {
            QosDomain::Mse => 1.0 / (1.0 + beta),
            // 1 + margin (2^q - 1) = 2^q (margin + (1 - margin) 2^-q)
            QosDomain::ContinuousRate => {
                -(q + (self.margin + (1.0 - self.margin) * (2f64).powf(-q)).log2())
            }
            QosDomain::Sinr => -beta,
        }
    }
}

/// Converts a margin given in dB to linear scale.
pub fn margin_from_db(margin_db: f64) -> f64 {
    10f64.powf(margin_db / 10.0)
}

/// One affine piece `slope * x + offset` of the envelope in the QoS
/// coordinate `x = eta(e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePiece {
    pub slope: f64,
    pub offset: f64,
}

/// Piecewise-linear concave majorant of the discrete rate step function,
/// expressed in the coordinate of one QoS domain.
///
/// The value at MSE `e` is `min_p (slope_p * eta(e) + offset_p)`. The
/// first piece is always the flat saturation piece `(0, q_max)`; the
/// remaining pieces are the upper-hull segments, with strictly decreasing
/// slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeModel {
    pieces: Vec<EnvelopePiece>,
    domain: QosDomain,
    max_rate: f64,
}

impl EnvelopeModel {
    /// Builds the concave envelope of `(eta(threshold(q)), q)` over all
    /// rates in the set, extended leftward by the flat piece at the top
    /// rate.
    pub fn build(rs: &RateSet, dom: QosDomain) -> EnvelopeModel {
        let mut points: Vec<(f64, f64)> = (0..rs.rates().len())
            .map(|idx| (rs.threshold_coordinate(idx, dom), rs.rates()[idx]))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Duplicate thresholds would create zero-length segments; keep the
        // higher rate.
        points.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 = earlier.1.max(later.1);
                true
            } else {
                false
            }
        });

        let hull = upper_hull(&points);
        let mut pieces = vec![EnvelopePiece {
            slope: 0.0,
            offset: rs.max_rate(),
        }];
        for w in hull.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let slope = (y1 - y0) / (x1 - x0);
            // anchored at the right vertex, so the zero-rate endpoint
            // evaluates to exactly zero
            pieces.push(EnvelopePiece {
                slope,
                offset: y1 - slope * x1,
            });
        }
        EnvelopeModel {
            pieces,
            domain: dom,
            max_rate: rs.max_rate(),
        }
    }

    pub fn pieces(&self) -> &[EnvelopePiece] {
        &self.pieces
    }

    pub fn domain(&self) -> QosDomain {
        self.domain
    }

    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    /// Envelope value at MSE `e`: `min_p (slope_p * eta(e) + offset_p)`.
    pub fn value(&self, e: f64) -> Result<f64> {
        let x = self.domain.map(e)?;
        Ok(self.value_at_coordinate(x))
    }

    pub(crate) fn value_at_coordinate(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.slope * x + p.offset)
            .fold(f64::INFINITY, f64::min)
    }

    /// First-order model of the envelope, linearizing `eta` around the
    /// point `1/w`: `min_p (slope_p * (eta(1/w) + eta'(1/w) (e - 1/w)) +
    /// offset_p)`. Never exceeds `value(e)`, with equality at `w = 1/e`.
    pub fn linearized(&self, e: f64, w: f64) -> Result<f64> {
        check_mse(e)?;
        if !(w >= 1.0) {
            return Err(Error::domain(format!("linearization weight {w} must be >= 1")));
        }
        Ok(self
            .linearized_pieces(w)
            .map(|(a, b)| a + b * e)
            .fold(f64::INFINITY, f64::min))
    }

    /// Affine-in-MSE coefficients `(a_p, b_p)` of each piece of the
    /// linearized envelope at weight `w`, so that the model value at MSE
    /// `e` is `min_p (a_p + b_p e)` with every `b_p <= 0`.
    pub(crate) fn linearized_pieces(&self, w: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let e0 = 1.0 / w;
        let eta0 = self.domain.map_unchecked(e0);
        let deriv0 = self.domain.derivative_unchecked(e0);
        self.pieces.iter().map(move |p| {
            (
                p.slope * (eta0 - deriv0 * e0) + p.offset,
                p.slope * deriv0,
            )
        })
    }
}

/// Constructs the envelope of a rate set in one QoS domain.
pub fn build_envelope(rs: &RateSet, dom: QosDomain) -> EnvelopeModel {
    EnvelopeModel::build(rs, dom)
}

/// Upper convex hull of points sorted by ascending x (monotone chain).
/// Collinear interior points are dropped.
fn upper_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q012() -> RateSet {
        RateSet::from_literals(&["0", "1", "2"], 1.0).unwrap()
    }

    #[test]
    fn required_sinr_examples() {
        let rs = q012();
        assert_eq!(rs.required_sinr(0.0).unwrap(), 0.0);
        assert_eq!(rs.required_sinr(1.0).unwrap(), 1.0);
        let rs2 = RateSet::from_literals(&["0", "1", "2"], 2.0).unwrap();
        assert_eq!(rs2.required_sinr(2.0).unwrap(), 6.0);
        assert!(rs.required_sinr(1.5).is_err());
    }

    #[test]
    fn required_sinr_monotone() {
        let rs = RateSet::wifi(1.0);
        let betas: Vec<f64> = rs
            .rates()
            .iter()
            .map(|&q| rs.required_sinr(q).unwrap())
            .collect();
        assert!(betas.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rate_set_invariants_enforced() {
        assert!(RateSet::from_literals(&["0.5", "1"], 1.0).is_err());
        assert!(RateSet::from_literals(&["0", "1", "1"], 1.0).is_err());
        assert!(RateSet::from_literals(&["0", "2", "1"], 1.0).is_err());
        assert!(RateSet::from_literals(&["0", "1"], 0.5).is_err());
        assert!(RateSet::from_literals(&[], 1.0).is_err());
    }

    #[test]
    fn qos_map_examples() {
        assert_eq!(qos_map(QosDomain::Mse, 0.3).unwrap(), 0.3);
        assert_eq!(qos_map(QosDomain::ContinuousRate, 0.25).unwrap(), -2.0);
        assert_eq!(qos_map(QosDomain::Sinr, 0.5).unwrap(), -1.0);
        for dom in QosDomain::ALL {
            assert!(qos_map(dom, 0.0).is_err());
            assert!(qos_map(dom, 1.0 + 1e-12).is_err());
            assert!(qos_derivative(dom, 0.5).unwrap() > 0.0);
        }
    }

    #[test]
    fn qos_maps_increasing_and_concave_on_grid() {
        for dom in QosDomain::ALL {
            let grid: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
            let vals: Vec<f64> = grid.iter().map(|&e| dom.map(e).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] < w[1]), "{dom:?} not increasing");
            for w in vals.windows(3) {
                // midpoint value at least the chord midpoint
                assert!(
                    w[1] >= (w[0] + w[2]) / 2.0 - 1e-12,
                    "{dom:?} fails three-point concavity"
                );
            }
        }
    }

    #[test]
    fn discrete_rate_examples() {
        let wifi = RateSet::wifi(1.0);
        assert_eq!(wifi.discrete_rate(1.0).unwrap(), 0.0);
        assert_eq!(wifi.discrete_rate(0.3).unwrap(), 1.5);
        assert_eq!(wifi.discrete_rate(2f64.powi(-7)).unwrap(), 6.67);
        assert!(wifi.discrete_rate(0.0).is_err());
        assert!(wifi.discrete_rate(1.5).is_err());
    }

    #[test]
    fn discrete_rate_right_continuous_at_thresholds() {
        let rs = RateSet::wifi(1.0);
        for &q in rs.rates().iter().skip(1) {
            let e_th = 1.0 / (1.0 + rs.required_sinr(q).unwrap());
            // achievable exactly at the threshold
            assert_eq!(rs.discrete_rate(e_th).unwrap(), q);
            // and not just above it
            assert!(rs.discrete_rate(e_th * (1.0 + 1e-9)).unwrap() < q);
        }
    }

    #[test]
    fn rate_for_sinr_matches_discrete_rate() {
        let rs = RateSet::lte(1.3);
        for i in 0..400 {
            let sinr = 10f64.powf(-2.0 + i as f64 * 0.02);
            let via_mse = rs.discrete_rate(1.0 / (1.0 + sinr)).unwrap();
            assert_eq!(rs.rate_for_sinr(sinr), via_mse, "sinr {sinr}");
        }
        assert_eq!(rs.rate_for_sinr(0.0), 0.0);
    }

    #[test]
    fn envelope_continuous_rate_collinear() {
        let env = EnvelopeModel::build(&q012(), QosDomain::ContinuousRate);
        let pieces = env.pieces();
        assert_eq!(pieces.len(), 2);
        assert_eq!((pieces[0].slope, pieces[0].offset), (0.0, 2.0));
        assert!((pieces[1].slope - -1.0).abs() < 1e-12);
        assert!(pieces[1].offset.abs() < 1e-12);
    }

    #[test]
    fn envelope_mse_domain_hand_hull() {
        // thresholds 1, 0.5, 0.25 with rates 0, 1, 2: middle point lies
        // strictly below the chord, so the hull is a single segment.
        let env = EnvelopeModel::build(&q012(), QosDomain::Mse);
        let pieces = env.pieces();
        assert_eq!(pieces.len(), 2);
        assert_eq!((pieces[0].slope, pieces[0].offset), (0.0, 2.0));
        assert!((pieces[1].slope - (-8.0 / 3.0)).abs() < 1e-12);
        assert!((pieces[1].offset - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_two_rate_set_is_two_pieces() {
        for dom in QosDomain::ALL {
            let rs = RateSet::from_literals(&["0", "3"], 1.0).unwrap();
            let env = EnvelopeModel::build(&rs, dom);
            assert_eq!(env.pieces().len(), 2);
            let x1 = dom.map(1.0 / (1.0 + rs.required_sinr(3.0).unwrap())).unwrap();
            let x0 = dom.map(1.0).unwrap();
            let seg = env.pieces()[1];
            assert!((seg.slope * x1 + seg.offset - 3.0).abs() < 1e-12);
            assert!((seg.slope * x0 + seg.offset).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_value_examples() {
        let env = EnvelopeModel::build(&q012(), QosDomain::ContinuousRate);
        assert_eq!(env.value(1.0).unwrap(), 0.0);
        assert_eq!(env.value(2f64.powi(-3)).unwrap(), 2.0);
        // hull vertices interpolate exactly
        for &q in q012().rates() {
            let e_th = 1.0 / (1.0 + q012().required_sinr(q).unwrap());
            assert!((env.value(e_th).unwrap() - q).abs() < 1e-12);
        }
        assert!(env.value(0.0).is_err());
    }

    #[test]
    fn linearized_value_examples() {
        let env = EnvelopeModel::build(&q012(), QosDomain::ContinuousRate);
        // Taylor point equals evaluation point -> tight
        for &e in &[0.9, 0.5, 0.1, 1e-4] {
            let tight = env.linearized(e, 1.0 / e).unwrap();
            assert!((tight - env.value(e).unwrap()).abs() < 1e-12);
        }
        // hand evaluation at e = 0.5, w = 4
        let got = env.linearized(0.5, 4.0).unwrap();
        let expect = 2.0 - 1.0 / std::f64::consts::LN_2;
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(env.linearized(0.5, 0.5).is_err());
    }

    #[test]
    fn linearized_exact_in_mse_domain() {
        let env = EnvelopeModel::build(&RateSet::wifi(1.0), QosDomain::Mse);
        for i in 1..60 {
            let e = i as f64 / 60.0;
            for &w in &[1.0, 2.0, 17.0, 1e6] {
                let lin = env.linearized(e, w).unwrap();
                let val = env.value(e).unwrap();
                assert!((lin - val).abs() < 1e-12);
            }
        }
    }

    /// Independent envelope oracle: the smallest concave majorant of a
    /// finite point set, evaluated as the minimum over all lines that
    /// pass through a pair of points (or are flat at the top rate) and
    /// majorize every point.
    fn envelope_oracle(points: &[(f64, f64)], x: f64) -> f64 {
        let q_max = points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let mut best = q_max;
        for (i, &(xi, yi)) in points.iter().enumerate() {
            for &(xj, yj) in points.iter().skip(i + 1) {
                if xi == xj {
                    continue;
                }
                let slope = (yj - yi) / (xj - xi);
                let offset = yi - slope * xi;
                let majorizes = points
                    .iter()
                    .all(|&(px, py)| slope * px + offset >= py - 1e-12);
                if majorizes {
                    best = best.min(slope * x + offset);
                }
            }
        }
        best
    }

    #[test]
    fn envelope_matches_pairwise_line_oracle() {
        for margin in [1.0, 2.0] {
            for rs in [RateSet::wifi(margin), RateSet::lte(margin), RateSet::grid(8, margin)] {
                for dom in QosDomain::ALL {
                    let env = EnvelopeModel::build(&rs, dom);
                    let points: Vec<(f64, f64)> = rs
                        .rates()
                        .iter()
                        .map(|&q| {
                            let e_th = 1.0 / (1.0 + rs.required_sinr(q).unwrap());
                            (dom.map(e_th).unwrap(), q)
                        })
                        .collect();
                    for i in 0..=120 {
                        // sample the achievable coordinate range
                        let e = 10f64.powf(-6.0 * i as f64 / 120.0);
                        let x = dom.map(e).unwrap();
                        let got = env.value(e).unwrap();
                        let want = envelope_oracle(&points, x);
                        assert!(
                            (got - want).abs() < 1e-9,
                            "{dom:?} margin {margin} e {e}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn envelope_majorizes_step_function_exactly() {
        for rs in [RateSet::wifi(1.0), RateSet::lte(1.0), RateSet::grid(8, 1.0)] {
            for dom in QosDomain::ALL {
                let env = EnvelopeModel::build(&rs, dom);
                for i in 0..=600 {
                    let e = 10f64.powf(-6.0 + 6.0 * i as f64 / 600.0);
                    assert!(env.value(e).unwrap() >= rs.discrete_rate(e).unwrap());
                }
            }
        }
    }

    #[test]
    fn hull_slopes_strictly_decreasing() {
        for rs in [RateSet::wifi(1.0), RateSet::lte(1.3), RateSet::grid(8, 2.0)] {
            for dom in QosDomain::ALL {
                let env = EnvelopeModel::build(&rs, dom);
                let slopes: Vec<f64> = env.pieces().iter().map(|p| p.slope).collect();
                assert!(slopes.windows(2).all(|w| w[1] < w[0]), "{dom:?}: {slopes:?}");
                assert!(slopes.iter().all(|&c| c <= 0.0));
            }
        }
    }

    #[test]
    fn every_piece_active_somewhere() {
        for rs in [RateSet::wifi(1.0), RateSet::lte(1.0)] {
            for dom in QosDomain::ALL {
                let env = EnvelopeModel::build(&rs, dom);
                let n = env.pieces().len();
                let mut active = vec![false; n];
                for i in 0..=20000 {
                    let e = 10f64.powf(-8.0 + 8.0 * i as f64 / 20000.0);
                    let x = dom.map(e).unwrap();
                    let vals: Vec<f64> =
                        env.pieces().iter().map(|p| p.slope * x + p.offset).collect();
                    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                    for (k, &v) in vals.iter().enumerate() {
                        if v <= min * (1.0 + 1e-12) + 1e-12 {
                            active[k] = true;
                        }
                    }
                }
                assert!(active.iter().all(|&a| a), "{dom:?}: inactive piece");
            }
        }
    }

    #[test]
    fn unit_margin_continuous_rate_hull_is_exact() {
        // with margin 1 the points are (-q, q), so the hull is the flat
        // piece plus the unit-slope segment through the origin.
        for rs in [RateSet::wifi(1.0), RateSet::lte(1.0), RateSet::grid(5, 1.0)] {
            let env = EnvelopeModel::build(&rs, QosDomain::ContinuousRate);
            assert_eq!(env.pieces().len(), 2, "{:?}", env.pieces());
            assert_eq!(env.pieces()[0], EnvelopePiece { slope: 0.0, offset: rs.max_rate() });
            assert!((env.pieces()[1].slope - -1.0).abs() < 1e-12);
            assert!(env.pieces()[1].offset.abs() < 1e-12);
        }
    }

    #[test]
    fn margin_from_db_round_trip() {
        assert!((margin_from_db(3.0) - 1.9952623149688795).abs() < 1e-12);
        assert_eq!(margin_from_db(0.0), 1.0);
    }
}
