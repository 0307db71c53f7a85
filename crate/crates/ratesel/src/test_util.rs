//! Shared constructors for unit tests.

use num_complex::Complex64;
use rand::Rng;

use crate::link_metrics::PrecoderSet;
use crate::network_model::{
    draw_channels, place_scenario, realization_rng, CMat, NetworkRealization, ScenarioParams,
    UserLink,
};

/// SISO network with one user per base station; `h[u][j]` is the real
/// scalar channel from BS `j` to user `u`. Every BS gets the same budget
/// and every user the same noise power and unit weight.
pub fn scalar_net(h: &[&[f64]], noise_power: f64, budget: f64) -> NetworkRealization {
    let n = h.len();
    let users = h
        .iter()
        .enumerate()
        .map(|(u, row)| {
            assert_eq!(row.len(), n);
            UserLink {
                serving_bs: u,
                weight: 1.0,
                noise_power,
                streams: 1,
                channels: row
                    .iter()
                    .map(|&x| CMat::from_element(1, 1, Complex64::new(x, 0.0)))
                    .collect(),
            }
        })
        .collect();
    NetworkRealization {
        power_budget: vec![budget; n],
        bs_antennas: vec![1; n],
        users,
    }
}

/// Scalar precoders for a SISO network.
pub fn scalar_precoder(vals: &[f64]) -> PrecoderSet {
    PrecoderSet {
        per_user: vals
            .iter()
            .map(|&v| CMat::from_element(1, 1, Complex64::new(v, 0.0)))
            .collect(),
    }
}

/// One desk-scale corridor realization (3 BS, 2 users each, 4x2, d = 2).
pub fn seeded_realization(seed: u64) -> NetworkRealization {
    let params = ScenarioParams::default();
    let mut rng = realization_rng(seed, 0);
    let geom = place_scenario(&params, &mut rng).unwrap();
    draw_channels(&geom, &params, &mut rng).unwrap()
}

/// Random precoders scaled to full power per base station.
pub fn init_random(real: &NetworkRealization, seed: u64) -> PrecoderSet {
    let mut rng = realization_rng(seed, 999);
    let mut v = PrecoderSet {
        per_user: real
            .users
            .iter()
            .map(|u| {
                CMat::from_fn(real.bs_antennas[u.serving_bs], u.streams, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                })
            })
            .collect(),
    };
    let used = v.bs_power_used(real);
    for (u, vu) in v.per_user.iter_mut().enumerate() {
        let bs = real.users[u].serving_bs;
        if used[bs] > 0.0 {
            let scale = (real.power_budget[bs] / used[bs]).sqrt();
            *vu *= Complex64::new(scale, 0.0);
        }
    }
    v
}
