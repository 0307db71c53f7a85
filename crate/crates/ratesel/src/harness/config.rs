//! Experiment configuration: a TOML file with nested sections, every key
//! optional with paper-scenario defaults. Command-line flags override
//! individual keys after parsing.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use crate::baselines::BaselineConfig;
use crate::decimal::Decimal;
use crate::envelope_bcd::BcdConfig;
use crate::error::{Error, Result};
use crate::network_model::ScenarioParams;
use crate::rate_model::{margin_from_db, QosDomain, RateSet};

/// Which algorithms a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Proposed,
    Wmmse,
    MaxSinr,
    Tdma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Proposed,
        Algorithm::Wmmse,
        Algorithm::MaxSinr,
        Algorithm::Tdma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Wmmse => "wmmse",
            Algorithm::MaxSinr => "maxsinr",
            Algorithm::Tdma => "tdma",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Algorithm::Proposed),
            "wmmse" => Ok(Algorithm::Wmmse),
            "maxsinr" | "max-sinr" => Ok(Algorithm::MaxSinr),
            "tdma" => Ok(Algorithm::Tdma),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Rate-set selection: a named preset or an explicit decimal list.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSetSpec {
    Wifi,
    Lte,
    Grid(u32),
    Explicit(Vec<Decimal>),
}

impl RateSetSpec {
    pub fn build(&self, margin: f64) -> Result<RateSet> {
        match self {
            RateSetSpec::Wifi => Ok(RateSet::wifi(margin)),
            RateSetSpec::Lte => Ok(RateSet::lte(margin)),
            RateSetSpec::Grid(q) => Ok(RateSet::grid(*q, margin)),
            RateSetSpec::Explicit(rates) => RateSet::new(rates.clone(), margin),
        }
    }
}

impl FromStr for RateSetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<RateSetSpec> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "wifi" => Ok(RateSetSpec::Wifi),
            "lte" => Ok(RateSetSpec::Lte),
            other => {
                if let Some(inner) = other.strip_prefix("grid(").and_then(|r| r.strip_suffix(')'))
                {
                    let q: u32 = inner
                        .parse()
                        .map_err(|_| Error::Config(format!("bad grid preset '{other}'")))?;
                    return Ok(RateSetSpec::Grid(q));
                }
                Err(Error::Config(format!(
                    "unknown rate preset '{other}' (expected wifi, lte, or grid(N))"
                )))
            }
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioParams,
    pub rate_spec: RateSetSpec,
    pub margin: f64,
    pub qos_domains: Vec<QosDomain>,
    pub algorithms: Vec<Algorithm>,
    pub bcd: BcdConfig,
    pub baseline: BaselineConfig,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub tx_power_sweep_dbm: Vec<f64>,
    pub qmax_sweep: Vec<u32>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: ScenarioParams::default(),
            rate_spec: RateSetSpec::Wifi,
            margin: 1.0,
            qos_domains: vec![QosDomain::ContinuousRate],
            algorithms: Algorithm::ALL.to_vec(),
            bcd: BcdConfig::default(),
            baseline: BaselineConfig::default(),
            n_realizations: 100,
            master_seed: 1,
            tx_power_sweep_dbm: (0..=13).map(|k| 3.0 * k as f64).collect(),
            qmax_sweep: (1..=8).collect(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        raw.resolve()
    }

    pub fn from_file(path: &std::path::Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.bcd.validate()?;
        self.baseline.validate()?;
        self.rate_spec.build(self.margin)?;
        if self.n_realizations < 1 {
            return Err(Error::Config("n_realizations must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm must run".into()));
        }
        if self.qos_domains.is_empty() && self.algorithms.contains(&Algorithm::Proposed) {
            return Err(Error::Config("the proposed algorithm needs a QoS domain".into()));
        }
        if self.tx_power_sweep_dbm.is_empty() || self.qmax_sweep.is_empty() {
            return Err(Error::Config("sweep lists must not be empty".into()));
        }
        Ok(())
    }

    /// Exact decimal user weights for the regularizer computation.
    pub fn exact_weights(&self) -> Result<Vec<Decimal>> {
        self.scenario
            .weights()
            .iter()
            .map(|&w| Decimal::from_f64(w))
            .collect()
    }
}

/// A number that may be written as a string to keep its decimal digits.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumOrString {
    Num(f64),
    Str(String),
}

impl NumOrString {
    fn as_f64(&self) -> Result<f64> {
        match self {
            NumOrString::Num(x) => Ok(*x),
            NumOrString::Str(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("'{s}' is not a number"))),
        }
    }

    fn as_decimal(&self) -> Result<Decimal> {
        match self {
            NumOrString::Num(x) => Decimal::from_f64(*x),
            NumOrString::Str(s) => s.parse(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    rates: RawRates,
    #[serde(default)]
    algorithm: RawAlgorithm,
    #[serde(default)]
    experiment: RawExperiment,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    corridor_length: Option<f64>,
    corridor_width: Option<f64>,
    n_bs: Option<usize>,
    users_per_bs: Option<usize>,
    bs_antennas: Option<usize>,
    ms_antennas: Option<usize>,
    streams: Option<usize>,
    carrier_ghz: Option<f64>,
    noise_dbm: Option<f64>,
    tx_power_dbm: Option<f64>,
    user_weights: Option<Vec<NumOrString>>,
    shadowing: Option<bool>,
    force_los: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    preset: Option<String>,
    rates: Option<Vec<NumOrString>>,
    /// Linear-scale margin; mutually exclusive with `margin_db`.
    margin: Option<f64>,
    margin_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    run: Option<Vec<String>>,
    #[serde(default)]
    proposed: RawProposed,
    #[serde(default)]
    baselines: RawBaselines,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProposed {
    qos_domains: Option<Vec<String>>,
    max_iterations: Option<usize>,
    rel_tolerance: Option<f64>,
    inner_tolerance: Option<f64>,
    mse_floor: Option<f64>,
    barrier_t0: Option<f64>,
    barrier_multiplier: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaselines {
    wmmse_max_iterations: Option<usize>,
    wmmse_rel_tolerance: Option<f64>,
    maxsinr_max_iterations: Option<usize>,
    maxsinr_filter_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    n_realizations: Option<usize>,
    master_seed: Option<u64>,
    tx_power_sweep_dbm: Option<Vec<f64>>,
    qmax_sweep: Option<Vec<u32>>,
    output_dir: Option<PathBuf>,
}

impl RawConfig {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();

        let s = self.scenario;
        let sc = &mut cfg.scenario;
        set(&mut sc.corridor_length, s.corridor_length);
        set(&mut sc.corridor_width, s.corridor_width);
        set(&mut sc.n_bs, s.n_bs);
        set(&mut sc.users_per_bs, s.users_per_bs);
        set(&mut sc.bs_antennas, s.bs_antennas);
        set(&mut sc.ms_antennas, s.ms_antennas);
        set(&mut sc.streams, s.streams);
        set(&mut sc.carrier_ghz, s.carrier_ghz);
        set(&mut sc.noise_dbm, s.noise_dbm);
        set(&mut sc.tx_power_dbm, s.tx_power_dbm);
        set(&mut sc.shadowing_enabled, s.shadowing);
        sc.force_los = s.force_los;
        if let Some(weights) = s.user_weights {
            sc.user_weights = weights
                .iter()
                .map(NumOrString::as_f64)
                .collect::<Result<_>>()?;
        }

        let r = self.rates;
        if r.margin.is_some() && r.margin_db.is_some() {
            return Err(Error::Config("give margin either linear or in dB, not both".into()));
        }
        if let Some(m) = r.margin {
            cfg.margin = m;
        }
        if let Some(mdb) = r.margin_db {
            cfg.margin = margin_from_db(mdb);
        }
        match (r.preset, r.rates) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either a preset or a rate list, not both".into()))
            }
            (Some(p), None) => cfg.rate_spec = p.parse()?,
            (None, Some(list)) => {
                let rates: Vec<Decimal> = list
                    .iter()
                    .map(NumOrString::as_decimal)
                    .collect::<Result<_>>()?;
                cfg.rate_spec = RateSetSpec::Explicit(rates);
            }
            (None, None) => {}
        }

        if let Some(run) = self.algorithm.run {
            cfg.algorithms = run
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Algorithm>>>()?;
            cfg.algorithms.sort();
            cfg.algorithms.dedup();
        }
        let p = self.algorithm.proposed;
        if let Some(domains) = p.qos_domains {
            cfg.qos_domains = domains
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<QosDomain>>>()?;
        }
        set(&mut cfg.bcd.max_iterations, p.max_iterations);
        set(&mut cfg.bcd.rel_tolerance, p.rel_tolerance);
        set(&mut cfg.bcd.inner_tolerance, p.inner_tolerance);
        set(&mut cfg.bcd.mse_floor, p.mse_floor);
        set(&mut cfg.bcd.barrier_t0, p.barrier_t0);
        set(&mut cfg.bcd.barrier_multiplier, p.barrier_multiplier);

        let b = self.algorithm.baselines;
        set(&mut cfg.baseline.wmmse_max_iterations, b.wmmse_max_iterations);
        set(&mut cfg.baseline.wmmse_rel_tolerance, b.wmmse_rel_tolerance);
        set(&mut cfg.baseline.maxsinr_max_iterations, b.maxsinr_max_iterations);
        set(
            &mut cfg.baseline.maxsinr_filter_tolerance,
            b.maxsinr_filter_tolerance,
        );

        let e = self.experiment;
        set(&mut cfg.n_realizations, e.n_realizations);
        set(&mut cfg.master_seed, e.master_seed);
        set(&mut cfg.tx_power_sweep_dbm, e.tx_power_sweep_dbm);
        set(&mut cfg.qmax_sweep, e.qmax_sweep);
        set(&mut cfg.output_dir, e.output_dir);

        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}
