use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{ChannelKind, EstimatorKind, ExperimentConfig};
use super::records::{MseRecord, MSE_EPS, MSE_THETA};
use super::{bootstrap_se, f64_key, point_key, trial_rng, Purpose};
use crate::channel::{add_awgn, apply_channel_from, draw_channel, observation_window, NoiseModel, OffsetTruth};
use crate::error::{Error, Result};
use crate::modem::{AfdmModem, AfdmParams};
use crate::sync::{joint_from_metrics, stepwise_from_metrics, EpsGrid, SyncMetrics};

pub(crate) fn bpsk_symbols<R: Rng + ?Sized>(rng: &mut R, count: usize, amplitude: f64) -> Vec<Complex64> {
    (0..count)
        .map(|_| Complex64::new(if rng.gen::<bool>() { amplitude } else { -amplitude }, 0.0))
        .collect()
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    channel: ChannelKind,
    params: AfdmParams,
    modem: &'a AfdmModem,
    grid: EpsGrid,
    noise: NoiseModel,
    eps: Option<f64>,
    key: u64,
}

impl Point<'_> {
    /// Squared errors `[theta_0, eps_0, theta_1, eps_1, ...]`, one pair per
    /// configured estimator, all run on the same window.
    fn trial(&self, t: u64) -> Result<Vec<f64>> {
        let n = self.params.n();
        let l = self.params.cpp_len();
        let frame_len = self.params.frame_len();

        let mut truth_rng = trial_rng(self.key, t, Purpose::Truth);
        let theta = truth_rng.gen_range(l..n);
        let spread = self.cfg.eps_spread;
        let eps = match self.eps {
            Some(e) => e,
            None if spread > 0.0 => truth_rng.gen_range(-spread..=spread),
            None => 0.0,
        };
        let truth = OffsetTruth::new(theta, eps, n)?;

        let mut data_rng = trial_rng(self.key, t, Purpose::Data);
        let mut stream = Vec::with_capacity(3 * frame_len);
        for _ in 0..3 {
            let symbols = bpsk_symbols(&mut data_rng, n, 1.0);
            stream.extend_from_slice(&self.modem.modulate_frame(&symbols)?);
        }
        if self.channel == ChannelKind::Doubly {
            let mut ch_rng = trial_rng(self.key, t, Purpose::Channel);
            let ch = draw_channel(&self.cfg.profile(), &mut ch_rng);
            stream = apply_channel_from(&stream, &ch, n, frame_len as i64)?.into_inner();
        }
        let window = observation_window(&stream, frame_len, &truth, &self.params)?;
        let mut noise_rng = trial_rng(self.key, t, Purpose::Noise);
        let window = add_awgn(&window, &self.noise, &mut noise_rng);

        let metrics = SyncMetrics::compute(&window, &self.params, self.noise.snr())?;
        let nf = n as f64;
        Ok(self
            .cfg
            .estimators
            .iter()
            .flat_map(|kind| {
                let est = match kind {
                    EstimatorKind::Joint => joint_from_metrics(&metrics, &self.params, &self.grid),
                    EstimatorKind::Stepwise => stepwise_from_metrics(&metrics, &self.params),
                };
                let dt = (est.theta as f64 - theta as f64) / nf;
                [dt * dt, (est.eps - eps).powi(2)]
            })
            .collect())
    }
}

/// Estimator MSE at every (channel, L, SNR, offset) point of `cfg`.
pub fn run_mse_experiment(cfg: &ExperimentConfig) -> Result<Vec<MseRecord>> {
    if !cfg.experiment.is_mse() {
        return Err(Error::InvalidConfig(vec![format!(
            "experiment: '{}' is not an MSE experiment",
            cfg.experiment
        )]));
    }
    cfg.validate()?;
    let grid = EpsGrid::new(cfg.eps_grid_step_value())?;
    let offsets: Vec<Option<f64>> = if cfg.eps.is_empty() {
        vec![None]
    } else {
        cfg.eps.iter().copied().map(Some).collect()
    };
    let mut records = Vec::new();
    for &channel in &cfg.channels {
        for &l in &cfg.l {
            let params = cfg.params(l)?;
            let modem = AfdmModem::new(params);
            for &snr_db in &cfg.snr_db {
                for &eps in &offsets {
                    // channel kind is left out so AWGN and dispersive runs share draws
                    let key = point_key(
                        cfg.seed,
                        &[
                            cfg.n as u64,
                            l as u64,
                            f64_key(snr_db),
                            eps.map_or(u64::MAX, f64_key),
                        ],
                    );
                    let point = Point {
                        cfg,
                        channel,
                        params,
                        modem: &modem,
                        grid,
                        noise: NoiseModel::from_snr_db(snr_db)?,
                        eps,
                        key,
                    };
                    let errors: Vec<Vec<f64>> = (0..cfg.trials as u64)
                        .into_par_iter()
                        .map(|t| point.trial(t))
                        .collect::<Result<_>>()?;
                    let eps_label = match eps {
                        Some(e) => e.to_string(),
                        None => format!("uniform({}..{})", -cfg.eps_spread, cfg.eps_spread),
                    };
                    for (ei, estimator) in cfg.estimators.iter().enumerate() {
                        for (mi, metric) in [MSE_THETA, MSE_EPS].into_iter().enumerate() {
                            let column = 2 * ei + mi;
                            let values: Vec<f64> = errors.iter().map(|e| e[column]).collect();
                            let mean = values.iter().sum::<f64>() / values.len() as f64;
                            let mut rng = trial_rng(key ^ channel as u64, column as u64, Purpose::Bootstrap);
                            records.push(MseRecord {
                                experiment: cfg.experiment.to_string(),
                                channel: channel.to_string(),
                                estimator: estimator.to_string(),
                                n: cfg.n,
                                c1: params.c1(),
                                l,
                                snr_db,
                                eps: eps_label.clone(),
                                metric: metric.to_string(),
                                value: mean,
                                std_err: bootstrap_se(&values, cfg.bootstrap, &mut rng),
                                trials: cfg.trials,
                                seed: cfg.seed,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(records)
}
