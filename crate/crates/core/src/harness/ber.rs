use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{ChannelKind, ExperimentConfig, ExperimentKind};
use super::records::{BerRecord, SCHEME_MIRROR, SCHEME_MIRROR_EST, SCHEME_PLAIN};
use super::{f64_key, point_key, trial_rng, Purpose};
use crate::channel::{
    add_awgn, apply_channel_from, draw_channel, observation_window, rotate_frequency,
    ChannelRealization, NoiseModel, OffsetTruth,
};
use crate::equalizer::{effective_channel_with, MmseDetector};
use crate::error::{Error, Result};
use crate::ici::{mirror_demap, mirror_map};
use crate::modem::{AfdmModem, AfdmParams, DaftVector};
use crate::sync::stepwise_ml_estimate;

/// Frames simulated between stopping-rule checks.
const BATCH: usize = 64;

fn random_bits<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<bool> {
    (0..count).map(|_| rng.gen()).collect()
}

/// BPSK: bit 0 maps to `+amplitude`, bit 1 to `-amplitude`.
fn bpsk(bits: &[bool], amplitude: f64) -> Vec<Complex64> {
    bits.iter()
        .map(|&b| Complex64::new(if b { -amplitude } else { amplitude }, 0.0))
        .collect()
}

fn count_errors(bits: &[bool], decisions: impl Iterator<Item = Complex64>) -> u64 {
    bits.iter()
        .zip(decisions)
        .filter(|(&b, d)| b != (d.re < 0.0))
        .count() as u64
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    channel: ChannelKind,
    params: AfdmParams,
    modem: &'a AfdmModem,
    noise: NoiseModel,
    key: u64,
}

impl Point<'_> {
    /// Unit-energy symbol on every active subcarrier, so each mirrored
    /// pair carries twice the energy of a null-guard symbol.
    fn mirror_frame(&self, bits: &[bool]) -> Result<DaftVector> {
        mirror_map(&bpsk(bits, 1.0), self.params.n())
    }

    /// Data on even subcarriers, nulls on odd ones.
    fn null_guard_frame(&self, bits: &[bool]) -> DaftVector {
        let mut x = DaftVector::zeros(self.params.n());
        for (i, s) in bpsk(bits, 1.0).into_iter().enumerate() {
            x[2 * i] = s;
        }
        x
    }

    /// Receives one framed symbol that went through the channel with its
    /// first sample at the Doppler time origin.
    fn receive(
        &self,
        rx: &[Complex64],
        eps: f64,
        detector: &MmseDetector,
        rng: &mut impl Rng,
    ) -> Result<DaftVector> {
        let mut rx = rx.to_vec();
        rotate_frequency(&mut rx, eps, self.params.n(), 0);
        let rx = add_awgn(&rx, &self.noise, rng);
        detector.detect(&self.modem.demodulate_frame(&rx)?)
    }

    /// Bit errors of the three schemes in frame `t`.
    fn frame(&self, t: u64) -> Result<[u64; 3]> {
        let n = self.params.n();
        let l = self.params.cpp_len();
        let frame_len = self.params.frame_len();

        let mut ch_rng = trial_rng(self.key, t, Purpose::Channel);
        let ch = match self.channel {
            ChannelKind::Doubly => draw_channel(&self.cfg.profile(), &mut ch_rng),
            ChannelKind::Awgn => ChannelRealization::identity(),
        };
        let h = effective_channel_with(&ch, self.modem)?;
        let detector = MmseDetector::new(&h, self.noise.noise_variance)?;

        let mut data_rng = trial_rng(self.key, t, Purpose::Data);
        let mut noise_rng = trial_rng(self.key, t, Purpose::Noise);
        let mut truth_rng = trial_rng(self.key, t, Purpose::Truth);
        let through = |frame: &[Complex64]| apply_channel_from(frame, &ch, n, 0);

        let bits_mirror = random_bits(&mut data_rng, n / 2 - 1);
        let tx = self.modem.modulate_frame(&self.mirror_frame(&bits_mirror)?)?;
        let x = self.receive(&through(&tx)?, self.cfg.eps_residual, &detector, &mut noise_rng)?;
        let mirror_errors = count_errors(&bits_mirror, mirror_demap(&x)?.into_iter());

        let bits_plain = random_bits(&mut data_rng, n / 2);
        let tx = self.modem.modulate_frame(&self.null_guard_frame(&bits_plain))?;
        let x = self.receive(&through(&tx)?, self.cfg.eps_residual, &detector, &mut noise_rng)?;
        let plain_errors = count_errors(&bits_plain, x.iter().step_by(2).copied());

        // estimated scheme: the frame sits between two other mirror-mapped frames
        let bits_est = random_bits(&mut data_rng, n / 2 - 1);
        let mut stream = Vec::with_capacity(3 * frame_len);
        let prev = random_bits(&mut data_rng, n / 2 - 1);
        stream.extend_from_slice(&self.modem.modulate_frame(&self.mirror_frame(&prev)?)?);
        stream.extend_from_slice(&self.modem.modulate_frame(&self.mirror_frame(&bits_est)?)?);
        let next = random_bits(&mut data_rng, n / 2 - 1);
        stream.extend_from_slice(&self.modem.modulate_frame(&self.mirror_frame(&next)?)?);
        let stream = apply_channel_from(&stream, &ch, n, frame_len as i64)?;
        let theta = truth_rng.gen_range(l..n);
        let truth = OffsetTruth::new(theta, self.cfg.eps_offset, n)?;
        let window = observation_window(&stream, frame_len, &truth, &self.params)?;
        let window = add_awgn(&window, &self.noise, &mut noise_rng);
        let estimate = stepwise_ml_estimate(&window, &self.params, self.noise.snr())?;
        let residual = self.cfg.eps_offset - estimate.eps;
        let x = self.receive(
            &stream[frame_len..2 * frame_len],
            residual,
            &detector,
            &mut noise_rng,
        )?;
        let est_errors = count_errors(&bits_est, mirror_demap(&x)?.into_iter());

        Ok([mirror_errors, plain_errors, est_errors])
    }
}

/// Bit error rates of mirror-mapped AFDM with a fixed residual offset,
/// null-guard plain AFDM with the same offset, and mirror-mapped AFDM with
/// the residual left by the stepwise estimator.
///
/// Each point runs at least `cfg.trials` frames, then continues in batches
/// until every scheme has `cfg.min_bit_errors` errors or `cfg.max_trials`
/// frames have run.
pub fn run_ber_experiment(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    if cfg.experiment != ExperimentKind::Ber {
        return Err(Error::InvalidConfig(vec![format!(
            "experiment: '{}' is not a BER experiment",
            cfg.experiment
        )]));
    }
    cfg.validate()?;
    let n = cfg.n;
    let bits_per_frame = [n / 2 - 1, n / 2, n / 2 - 1];
    let names = [SCHEME_MIRROR, SCHEME_PLAIN, SCHEME_MIRROR_EST];
    let residual_labels = [
        cfg.eps_residual.to_string(),
        cfg.eps_residual.to_string(),
        format!("estimated({})", cfg.eps_offset),
    ];
    let mut records = Vec::new();
    for &channel in &cfg.channels {
        for &l in &cfg.l {
            let params = cfg.params(l)?;
            let modem = AfdmModem::new(params);
            for &snr_db in &cfg.snr_db {
                let key = point_key(cfg.seed, &[n as u64, l as u64, f64_key(snr_db)]);
                let point = Point {
                    cfg,
                    channel,
                    params,
                    modem: &modem,
                    noise: NoiseModel::from_snr_db(snr_db)?,
                    key,
                };
                let mut errors = [0u64; 3];
                let mut frames = 0usize;
                while frames < cfg.max_trials
                    && (frames < cfg.trials || errors.iter().any(|&e| e < cfg.min_bit_errors))
                {
                    let end = (frames + BATCH).min(cfg.max_trials);
                    let batch: Vec<[u64; 3]> = (frames as u64..end as u64)
                        .into_par_iter()
                        .map(|t| point.frame(t))
                        .collect::<Result<_>>()?;
                    for e in batch {
                        for s in 0..3 {
                            errors[s] += e[s];
                        }
                    }
                    frames = end;
                }
                for s in 0..3 {
                    let bits = (frames * bits_per_frame[s]) as u64;
                    records.push(BerRecord {
                        experiment: cfg.experiment.to_string(),
                        scheme: names[s].to_string(),
                        n,
                        l,
                        snr_db,
                        eps_residual: residual_labels[s].clone(),
                        bits_per_frame: bits_per_frame[s],
                        frames: frames as u64,
                        bits,
                        bit_errors: errors[s],
                        ber: errors[s] as f64 / bits as f64,
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    Ok(records)
}
