//! Doubly dispersive channel, AWGN and receiver time/frequency offsets.
//!
//! Randomized operations take the random stream explicitly; Monte Carlo
//! callers hand each trial its own substream.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modem::{cis_cycles, AfdmParams, TimeSamples};

/// How per-path normalized Doppler values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DopplerDistribution {
    /// Uniform on the real interval `[-alpha_max, alpha_max]`.
    #[default]
    Continuous,
    /// Uniform on the integers `{-floor(alpha_max) ..= floor(alpha_max)}`.
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    pub paths: usize,
    pub max_delay: usize,
    pub max_doppler: f64,
    pub doppler: DopplerDistribution,
}

impl ChannelProfile {
    pub fn new(paths: usize, max_delay: usize, max_doppler: f64) -> Result<Self> {
        if paths == 0 {
            return Err(Error::param("channel needs at least one path"));
        }
        if !max_doppler.is_finite() || max_doppler < 0.0 {
            return Err(Error::param(format!(
                "maximum Doppler must be finite and non-negative, got {max_doppler}"
            )));
        }
        Ok(Self {
            paths,
            max_delay,
            max_doppler,
            doppler: DopplerDistribution::Continuous,
        })
    }

    pub fn with_doppler(mut self, doppler: DopplerDistribution) -> Self {
        self.doppler = doppler;
        self
    }

    /// Five paths, one sample of delay spread and two subcarriers of Doppler.
    pub fn reference(doppler: DopplerDistribution) -> Self {
        Self {
            paths: 5,
            max_delay: 1,
            max_doppler: 2.0,
            doppler,
        }
    }

    /// The CPP must cover the delay spread.
    pub fn check_params(&self, params: &AfdmParams) -> Result<()> {
        if self.max_delay > params.cpp_len() {
            return Err(Error::param(format!(
                "maximum delay {} exceeds CPP length {}",
                self.max_delay,
                params.cpp_len()
            )));
        }
        Ok(())
    }
}

/// One propagation path: complex gain, integer delay and normalized Doppler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub delay: usize,
    /// Doppler shift in cycles per `N` samples.
    pub doppler: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<Path>,
}

impl ChannelRealization {
    /// A single unit-gain path without delay or Doppler.
    pub fn identity() -> Self {
        Self {
            paths: vec![Path {
                gain: Complex64::new(1.0, 0.0),
                delay: 0,
                doppler: 0.0,
            }],
        }
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay).max().unwrap_or(0)
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }
}

/// Circularly symmetric complex Gaussian sample with variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sigma = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sigma * re, sigma * im)
}

/// Draws a path set: gains `CN(0, 1/P)`, the first delay pinned at zero and
/// the rest uniform on `{0..=l_max}`, Doppler per the profile's distribution.
pub fn draw_channel<R: Rng + ?Sized>(profile: &ChannelProfile, rng: &mut R) -> ChannelRealization {
    let variance = 1.0 / profile.paths as f64;
    let paths = (0..profile.paths)
        .map(|i| {
            let gain = complex_gaussian(rng, variance);
            let delay = if i == 0 {
                0
            } else {
                rng.gen_range(0..=profile.max_delay)
            };
            let doppler = match profile.doppler {
                DopplerDistribution::Continuous if profile.max_doppler > 0.0 => {
                    rng.gen_range(-profile.max_doppler..=profile.max_doppler)
                }
                DopplerDistribution::Continuous => 0.0,
                DopplerDistribution::Integer => {
                    let k = profile.max_doppler.floor() as i64;
                    rng.gen_range(-k..=k) as f64
                }
            };
            Path {
                gain,
                delay,
                doppler,
            }
        })
        .collect();
    ChannelRealization { paths }
}

/// Passes `frame` through the channel (no noise). Sample index 0 is the
/// Doppler time origin.
pub fn apply_channel(frame: &[Complex64], ch: &ChannelRealization, n: usize) -> Result<TimeSamples> {
    apply_channel_from(frame, ch, n, 0)
}

/// As [`apply_channel`], with the Doppler phase of sample `k` evaluated at
/// time `k - origin`. Lets a multi-frame stream share the time base of one
/// frame inside it.
pub fn apply_channel_from(
    samples: &[Complex64],
    ch: &ChannelRealization,
    n: usize,
    origin: i64,
) -> Result<TimeSamples> {
    let len = samples.len();
    if ch.max_delay() >= len {
        return Err(Error::Dimension {
            what: "channel input (must exceed the largest path delay)",
            expected: ch.max_delay() + 1,
            actual: len,
        });
    }
    let nf = n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for path in &ch.paths {
        for k in path.delay..len {
            let t = k as i64 - origin;
            let rot = cis_cycles(-path.doppler * t as f64 / nf);
            out[k] += path.gain * rot * samples[k - path.delay];
        }
    }
    Ok(TimeSamples::new(out))
}

/// Signal power and noise variance at the channel output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub signal_power: f64,
    pub noise_variance: f64,
}

impl NoiseModel {
    pub fn new(signal_power: f64, noise_variance: f64) -> Result<Self> {
        if !(signal_power > 0.0) || !signal_power.is_finite() {
            return Err(Error::param(format!(
                "signal power must be positive and finite, got {signal_power}"
            )));
        }
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::param(format!(
                "noise variance must be non-negative and finite, got {noise_variance}"
            )));
        }
        Ok(Self {
            signal_power,
            noise_variance,
        })
    }

    /// Unit signal power and `sigma_n^2 = 10^(-snr_db/10)`; `+inf` dB is noiseless.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::param(format!("invalid SNR {snr_db} dB")));
        }
        Self::new(1.0, 10f64.powf(-snr_db / 10.0))
    }

    /// Linear SNR, infinite when noiseless.
    pub fn snr(&self) -> f64 {
        if self.noise_variance == 0.0 {
            f64::INFINITY
        } else {
            self.signal_power / self.noise_variance
        }
    }
}

/// Symbol time offset (samples) and fractional frequency offset (subcarriers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetTruth {
    pub theta: usize,
    pub eps: f64,
}

impl OffsetTruth {
    pub fn new(theta: usize, eps: f64, n: usize) -> Result<Self> {
        if theta > n {
            return Err(Error::param(format!("time offset {theta} outside [0, {n}]")));
        }
        if !(eps.abs() < 0.5) {
            return Err(Error::param(format!(
                "fractional frequency offset {eps} outside (-1/2, 1/2)"
            )));
        }
        Ok(Self { theta, eps })
    }
}

/// Builds the `2N + L` observation window seen by the receiver.
///
/// The frame starting at `stream[frame_start]` lands at window index
/// `truth.theta`; window sample `i` is `stream[frame_start + i - theta]`
/// (zero outside the stream) rotated by `exp(j 2 pi eps i / N)`.
pub fn observation_window(
    stream: &[Complex64],
    frame_start: usize,
    truth: &OffsetTruth,
    params: &AfdmParams,
) -> Result<TimeSamples> {
    let n = params.n();
    if truth.theta > n {
        return Err(Error::param(format!(
            "time offset {} outside [0, {n}]",
            truth.theta
        )));
    }
    let nf = n as f64;
    Ok((0..params.window_len())
        .map(|i| {
            let src = (frame_start + i).checked_sub(truth.theta);
            let v = src
                .and_then(|k| stream.get(k))
                .copied()
                .unwrap_or_default();
            v * cis_cycles(truth.eps * i as f64 / nf)
        })
        .collect())
}

/// Embeds a single frame at delay `theta` in an otherwise empty window and
/// applies the frequency offset.
pub fn apply_offsets(
    frame: &[Complex64],
    truth: &OffsetTruth,
    params: &AfdmParams,
) -> Result<TimeSamples> {
    observation_window(frame, 0, truth, params)
}

/// Adds `CN(0, sigma_n^2)` noise.
pub fn add_awgn<R: Rng + ?Sized>(samples: &[Complex64], noise: &NoiseModel, rng: &mut R) -> TimeSamples {
    if noise.noise_variance == 0.0 {
        return TimeSamples::new(samples.to_vec());
    }
    samples
        .iter()
        .map(|v| v + complex_gaussian(rng, noise.noise_variance))
        .collect()
}

/// Rotates `samples[k]` by `exp(j 2 pi eps (k + origin) / N)`.
pub fn rotate_frequency(samples: &mut [Complex64], eps: f64, n: usize, origin: i64) {
    let nf = n as f64;
    for (k, v) in samples.iter_mut().enumerate() {
        *v *= cis_cycles(eps * (k as i64 + origin) as f64 / nf);
    }
}
