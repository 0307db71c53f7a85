//! Scenario geometry, large-scale fading, and channel realizations.
//!
//! The scenario is an office corridor with base stations placed along the
//! centre line, each serving users drawn uniformly from its own corridor
//! segment. Large-scale fading follows the indoor-hotspot pathloss model
//! (LOS/NLOS with distance-dependent LOS probability and optional
//! lognormal shadowing); small-scale fading is i.i.d. Rayleigh. All
//! randomness flows through caller-provided seeded generators, so a
//! realization is a pure function of its seed.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Converts dBm to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts linear milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Scenario description: geometry counts, antenna configuration, and
/// radio parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Corridor length in metres.
    pub corridor_length: f64,
    /// Corridor width in metres.
    pub corridor_width: f64,
    /// Number of base stations.
    pub n_bs: usize,
    /// Users served per base station.
    pub users_per_bs: usize,
    /// Transmit antennas per base station.
    pub bs_antennas: usize,
    /// Receive antennas per user.
    pub ms_antennas: usize,
    /// Data streams per user.
    pub streams: usize,
    /// Carrier frequency in GHz.
    pub carrier_ghz: f64,
    /// Noise power per user in dBm.
    pub noise_dbm: f64,
    /// Transmit power budget per base station in dBm.
    pub tx_power_dbm: f64,
    /// Per-user weights; empty means all ones.
    pub user_weights: Vec<f64>,
    /// Draw lognormal shadowing on top of the distance pathloss.
    pub shadowing_enabled: bool,
    /// Force every link LOS (`Some(true)`) or NLOS (`Some(false)`)
    /// instead of drawing the LOS state.
    pub force_los: Option<bool>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            corridor_length: 120.0,
            corridor_width: 20.0,
            n_bs: 3,
            users_per_bs: 2,
            bs_antennas: 4,
            ms_antennas: 2,
            streams: 2,
            carrier_ghz: 3.4,
            // thermal noise over 20 MHz with a 9 dB noise figure
            noise_dbm: -174.0 + 10.0 * 20.0e6f64.log10() + 9.0,
            tx_power_dbm: 21.0,
            user_weights: Vec::new(),
            shadowing_enabled: false,
            force_los: None,
        }
    }
}

impl ScenarioParams {
    pub fn n_users(&self) -> usize {
        self.n_bs * self.users_per_bs
    }

    /// Materialized per-user weights (all ones when unset).
    pub fn weights(&self) -> Vec<f64> {
        if self.user_weights.is_empty() {
            vec![1.0; self.n_users()]
        } else {
            self.user_weights.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs < 1 || self.users_per_bs < 1 || self.bs_antennas < 1 || self.ms_antennas < 1
        {
            return Err(Error::domain("all scenario counts must be >= 1"));
        }
        if self.streams < 1 || self.streams > self.bs_antennas.min(self.ms_antennas) {
            return Err(Error::domain(format!(
                "streams {} must be in 1..=min(bs_antennas, ms_antennas) = {}",
                self.streams,
                self.bs_antennas.min(self.ms_antennas)
            )));
        }
        if !(self.corridor_length > 0.0 && self.corridor_width > 0.0) {
            return Err(Error::domain("corridor dimensions must be positive"));
        }
        if !self.tx_power_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return Err(Error::domain("powers must be finite"));
        }
        if !self.user_weights.is_empty() && self.user_weights.len() != self.n_users() {
            return Err(Error::domain(format!(
                "got {} user weights for {} users",
                self.user_weights.len(),
                self.n_users()
            )));
        }
        if self.user_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("user weights must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Positions of base stations and users, plus the serving association.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_positions: Vec<(f64, f64)>,
    pub ms_positions: Vec<(f64, f64)>,
    /// Serving base station per user, grouped so that the users of BS 0
    /// come first.
    pub serving_bs: Vec<usize>,
}

/// Places base stations equidistant along the corridor centre line (at
/// the segment midpoints) and draws each station's users uniformly from
/// its own corridor segment.
pub fn place_scenario<R: Rng>(params: &ScenarioParams, rng: &mut R) -> Result<Geometry> {
    params.validate()?;
    let l = params.corridor_length;
    let w = params.corridor_width;
    let n = params.n_bs as f64;
    let bs_positions: Vec<(f64, f64)> = (0..params.n_bs)
        .map(|i| (l * (2 * i + 1) as f64 / (2.0 * n), w / 2.0))
        .collect();
    let mut ms_positions = Vec::with_capacity(params.n_users());
    let mut serving_bs = Vec::with_capacity(params.n_users());
    for i in 0..params.n_bs {
        let x_lo = l * i as f64 / n;
        let x_hi = l * (i + 1) as f64 / n;
        for _ in 0..params.users_per_bs {
            let x = rng.gen_range(x_lo..x_hi);
            let y = rng.gen_range(0.0..w);
            ms_positions.push((x, y));
            serving_bs.push(i);
        }
    }
    Ok(Geometry {
        bs_positions,
        ms_positions,
        serving_bs,
    })
}

/// Line-of-sight probability of the indoor-hotspot model at distance
/// `dist` metres.
pub fn los_probability(dist: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::domain(format!("distance {dist} must be positive")));
    }
    Ok(if dist <= 18.0 {
        1.0
    } else if dist < 37.0 {
        (-(dist - 18.0) / 27.0).exp()
    } else {
        0.5
    })
}

/// Indoor-hotspot distance pathloss in dB at carrier frequency `fc` GHz.
pub fn pathloss_db(dist: f64, fc_ghz: f64, los: bool) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::domain(format!("distance {dist} must be positive")));
    }
    Ok(if los {
        16.9 * dist.log10() + 32.8 + 20.0 * fc_ghz.log10()
    } else {
        43.3 * dist.log10() + 11.5 + 20.0 * fc_ghz.log10()
    })
}

/// Shadowing standard deviations in dB.
const SHADOW_SIGMA_LOS_DB: f64 = 3.0;
const SHADOW_SIGMA_NLOS_DB: f64 = 4.0;

/// Links shorter than this are evaluated at this distance; the pathloss
/// model is not meant for the ultra-near field.
const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Channel matrices and link-level constants for one network snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    /// Power budget per base station, linear mW.
    pub power_budget: Vec<f64>,
    /// Transmit antennas per base station.
    pub bs_antennas: Vec<usize>,
    /// One entry per served user, grouped by serving base station.
    pub users: Vec<UserLink>,
}

/// One user's channels and link constants.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    pub serving_bs: usize,
    /// Utility weight of this user.
    pub weight: f64,
    /// Noise power, linear mW.
    pub noise_power: f64,
    /// Number of data streams.
    pub streams: usize,
    /// Channel from every base station to this user (N x M_j each).
    pub channels: Vec<CMat>,
}

impl NetworkRealization {
    pub fn n_bs(&self) -> usize {
        self.power_budget.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn total_streams(&self) -> usize {
        self.users.iter().map(|u| u.streams).sum()
    }

    /// Channel from base station `bs` to user `user`.
    pub fn channel(&self, user: usize, bs: usize) -> &CMat {
        &self.users[user].channels[bs]
    }

    /// Channel from the user's own serving base station.
    pub fn direct_channel(&self, user: usize) -> &CMat {
        self.channel(user, self.users[user].serving_bs)
    }

    /// Replaces every budget with the given dBm value.
    pub fn with_tx_power_dbm(&self, dbm: f64) -> NetworkRealization {
        let mut out = self.clone();
        out.power_budget = vec![dbm_to_mw(dbm); self.n_bs()];
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_antennas.len() != self.n_bs() {
            return Err(Error::dimension("bs_antennas length != number of budgets"));
        }
        if self.power_budget.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain("power budgets must be finite and nonnegative"));
        }
        for (u, user) in self.users.iter().enumerate() {
            if user.serving_bs >= self.n_bs() {
                return Err(Error::dimension(format!("user {u} serving_bs out of range")));
            }
            if !(user.noise_power > 0.0) {
                return Err(Error::domain(format!("user {u} noise power must be positive")));
            }
            if user.channels.len() != self.n_bs() {
                return Err(Error::dimension(format!("user {u} channel count != n_bs")));
            }
            let n = user.channels[0].nrows();
            for (j, h) in user.channels.iter().enumerate() {
                if h.nrows() != n || h.ncols() != self.bs_antennas[j] {
                    return Err(Error::dimension(format!(
                        "user {u} channel to bs {j} is {}x{}, expected {}x{}",
                        h.nrows(),
                        h.ncols(),
                        n,
                        self.bs_antennas[j]
                    )));
                }
                if h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::domain(format!("user {u} channel to bs {j} not finite")));
                }
            }
            if user.streams < 1 || user.streams > n.min(self.bs_antennas[user.serving_bs]) {
                return Err(Error::dimension(format!("user {u} stream count invalid")));
            }
        }
        Ok(())
    }
}

/// Draws the small-scale and large-scale fading for a placed scenario.
///
/// The per-entry channel variance equals the linear large-scale gain:
/// pathloss for the drawn (or forced) LOS state, plus lognormal shadowing
/// when enabled.
pub fn draw_channels<R: Rng>(
    geometry: &Geometry,
    params: &ScenarioParams,
    rng: &mut R,
) -> Result<NetworkRealization> {
    params.validate()?;
    if geometry.ms_positions.len() != params.n_users()
        || geometry.bs_positions.len() != params.n_bs
    {
        return Err(Error::dimension("geometry does not match scenario counts"));
    }
    let weights = params.weights();
    let noise_mw = dbm_to_mw(params.noise_dbm);
    let budget_mw = dbm_to_mw(params.tx_power_dbm);
    let mut users = Vec::with_capacity(params.n_users());
    for (u, &(mx, my)) in geometry.ms_positions.iter().enumerate() {
        let mut channels = Vec::with_capacity(params.n_bs);
        for &(bx, by) in &geometry.bs_positions {
            let dist = ((mx - bx).powi(2) + (my - by).powi(2))
                .sqrt()
                .max(MIN_LINK_DISTANCE_M);
            let los = match params.force_los {
                Some(v) => v,
                None => rng.gen::<f64>() < los_probability(dist)?,
            };
            let mut loss_db = pathloss_db(dist, params.carrier_ghz, los)?;
            if params.shadowing_enabled {
                let sigma = if los { SHADOW_SIGMA_LOS_DB } else { SHADOW_SIGMA_NLOS_DB };
                let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
                loss_db += shadow;
            }
            let gain = 10f64.powf(-loss_db / 10.0);
            channels.push(complex_gaussian_matrix(
                params.ms_antennas,
                params.bs_antennas,
                gain,
                rng,
            ));
        }
        users.push(UserLink {
            serving_bs: geometry.serving_bs[u],
            weight: weights[u],
            noise_power: noise_mw,
            streams: params.streams,
            channels,
        });
    }
    let real = NetworkRealization {
        power_budget: vec![budget_mw; params.n_bs],
        bs_antennas: vec![params.bs_antennas; params.n_bs],
        users,
    };
    real.validate()?;
    Ok(real)
}

/// N x M matrix of i.i.d. circularly-symmetric complex Gaussians with
/// per-entry variance `gain`. Entries are drawn row-major.
fn complex_gaussian_matrix<R: Rng>(n: usize, m: usize, gain: f64, rng: &mut R) -> CMat {
    let scale = (gain / 2.0).sqrt();
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n {
        for _ in 0..m {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            data.push(Complex64::new(re * scale, im * scale));
        }
    }
    CMat::from_row_slice(n, m, &data)
}

/// Generator for one Monte Carlo realization, derived from the master
/// seed and the realization counter. Distinct counters give independent
/// streams, so parallel generation is schedule-independent.
pub fn realization_rng(master_seed: u64, realization_idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(realization_idx);
    rng
}

const DUMP_MAGIC: &[u8; 4] = b"NREL";
const DUMP_VERSION: u32 = 1;

/// Writes a realization as a self-describing binary file: a dimensions
/// header followed by row-major complex entries as little-endian 64-bit
/// floats.
pub fn dump_realization<W: Write>(real: &NetworkRealization, mut out: W) -> Result<()> {
    real.validate()?;
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&DUMP_VERSION.to_le_bytes())?;
    out.write_all(&(real.n_bs() as u32).to_le_bytes())?;
    out.write_all(&(real.n_users() as u32).to_le_bytes())?;
    for j in 0..real.n_bs() {
        out.write_all(&(real.bs_antennas[j] as u32).to_le_bytes())?;
        out.write_all(&real.power_budget[j].to_le_bytes())?;
    }
    for user in &real.users {
        out.write_all(&(user.serving_bs as u32).to_le_bytes())?;
        out.write_all(&(user.channels[0].nrows() as u32).to_le_bytes())?;
        out.write_all(&(user.streams as u32).to_le_bytes())?;
        out.write_all(&user.noise_power.to_le_bytes())?;
        out.write_all(&user.weight.to_le_bytes())?;
        for h in &user.channels {
            for r in 0..h.nrows() {
                for c in 0..h.ncols() {
                    out.write_all(&h[(r, c)].re.to_le_bytes())?;
                    out.write_all(&h[(r, c)].im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Reads a realization written by [`dump_realization`].
pub fn load_realization<R: Read>(mut input: R) -> Result<NetworkRealization> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Config("not a realization dump (bad magic)".into()));
    }
    let version = read_u32(&mut input)?;
    if version != DUMP_VERSION {
        return Err(Error::Config(format!("unsupported dump version {version}")));
    }
    let n_bs = read_u32(&mut input)? as usize;
    let n_users = read_u32(&mut input)? as usize;
    let mut bs_antennas = Vec::with_capacity(n_bs);
    let mut power_budget = Vec::with_capacity(n_bs);
    for _ in 0..n_bs {
        bs_antennas.push(read_u32(&mut input)? as usize);
        power_budget.push(read_f64(&mut input)?);
    }
    let mut users = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let serving_bs = read_u32(&mut input)? as usize;
        let n = read_u32(&mut input)? as usize;
        let streams = read_u32(&mut input)? as usize;
        let noise_power = read_f64(&mut input)?;
        let weight = read_f64(&mut input)?;
        let mut channels = Vec::with_capacity(n_bs);
        for j in 0..n_bs {
            let m = bs_antennas[j];
            let mut data = Vec::with_capacity(n * m);
            for _ in 0..n * m {
                let re = read_f64(&mut input)?;
                let im = read_f64(&mut input)?;
                data.push(Complex64::new(re, im));
            }
            channels.push(CMat::from_row_slice(n, m, &data));
        }
        users.push(UserLink {
            serving_bs,
            weight,
            noise_power,
            streams,
            channels,
        });
    }
    let real = NetworkRealization {
        power_budget,
        bs_antennas,
        users,
    };
    real.validate()?;
    Ok(real)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
