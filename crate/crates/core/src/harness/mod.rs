//! Seeded Monte Carlo experiments.
//!
//! Every trial draws from its own ChaCha substream, keyed by the run seed,
//! the parameter point and the trial index. Results therefore do not depend
//! on the worker count, and a point run alone reproduces the same point
//! inside a larger sweep.

mod ber;
mod cir;
pub mod config;
mod mse;
pub mod records;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub use ber::run_ber_experiment;
pub use cir::{q_profile, run_cir_sweep};
pub use config::{
    ChannelKind, ConfigOverrides, Constellation, EstimatorKind, ExperimentConfig, ExperimentKind,
};
pub use mse::run_mse_experiment;
pub use records::{BerRecord, CirRecord, MseRecord, QRecord, ResultSet};

/// Runs whichever experiment `cfg` describes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultSet> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        ExperimentKind::CirSweep => ResultSet::Cir(run_cir_sweep(cfg)?),
        ExperimentKind::Ber => ResultSet::Ber(run_ber_experiment(cfg)?),
        _ => ResultSet::Mse(run_mse_experiment(cfg)?),
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes the run seed and the coordinates of a parameter point.
pub(crate) fn point_key(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ c))
}

/// Independent random sources of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    Data = 0,
    Truth = 1,
    Channel = 2,
    Noise = 3,
    Bootstrap = 4,
}

pub(crate) fn trial_rng(key: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial.wrapping_mul(8).wrapping_add(purpose as u64));
    rng
}

/// Bootstrap standard error of the sample mean.
pub(crate) fn bootstrap_se(values: &[f64], resamples: usize, rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let n = values.len();
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / resamples as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

/// `f64` coordinate as hashable bits, with `-0.0` folded onto `0.0`.
pub(crate) fn f64_key(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_distinct_and_reproducible() {
        let key = point_key(7, &[1, 2]);
        let a: u64 = trial_rng(key, 3, Purpose::Data).gen();
        let b: u64 = trial_rng(key, 3, Purpose::Data).gen();
        let c: u64 = trial_rng(key, 3, Purpose::Noise).gen();
        let d: u64 = trial_rng(key, 4, Purpose::Data).gen();
        let e: u64 = trial_rng(point_key(8, &[1, 2]), 3, Purpose::Data).gen();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
        assert_ne!(point_key(0, &[1, 2]), point_key(0, &[2, 1]));
    }

    #[test]
    fn bootstrap_matches_analytic_standard_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let mean = values.iter().sum::<f64>() / 2000.0;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1999.0).sqrt();
        let analytic = sd / 2000f64.sqrt();
        let se = bootstrap_se(&values, 400, &mut rng);
        assert!((se / analytic - 1.0).abs() < 0.15, "{se} vs {analytic}");
        assert_eq!(bootstrap_se(&[1.0], 100, &mut rng), 0.0);
    }
}
