//! CPP-based maximum-likelihood estimation of symbol time offset and
//! fractional carrier frequency offset.
//!
//! The receiver observes `2N + L` consecutive samples holding one complete
//! framed symbol. The prefix makes sample pairs `N` apart correlated, with a
//! deterministic chirp phase; both estimators locate that correlation.
//! Window indices are 0-based and candidate offsets span `0..=N`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::{cis_cycles, AfdmParams};

/// Maps a frequency offset into `(-1/2, 1/2]`.
pub fn wrap_half(eps: f64) -> f64 {
    let y = eps - eps.round();
    if y <= -0.5 {
        y + 1.0
    } else {
        y
    }
}

fn check_window(r: &[Complex64], theta: usize, params: &AfdmParams) -> Result<()> {
    Error::check_len("observation window", params.window_len(), r.len())?;
    if theta > params.n() {
        return Err(Error::param(format!(
            "candidate offset {theta} outside [0, {}]",
            params.n()
        )));
    }
    Ok(())
}

/// Chirp-compensated correlation of the candidate prefix with the samples
/// `N` later:
/// `sum_{k=theta}^{theta+L-1} r[k] conj(r[k+N]) exp(j 4 pi c1 N (k - theta - L))`.
pub fn gamma_metric(r: &[Complex64], theta: usize, params: &AfdmParams) -> Result<Complex64> {
    check_window(r, theta, params)?;
    Ok(gamma_unchecked(r, theta, params))
}

fn gamma_unchecked(r: &[Complex64], theta: usize, params: &AfdmParams) -> Complex64 {
    let n = params.n();
    let l = params.cpp_len() as i64;
    let rate = 2.0 * params.c1() * n as f64;
    (0..l)
        .map(|j| {
            let k = theta + j as usize;
            r[k] * r[k + n].conj() * cis_cycles(rate * (j - l) as f64)
        })
        .sum()
}

/// Energy of the candidate prefix and its partner samples.
pub fn phi_metric(r: &[Complex64], theta: usize, params: &AfdmParams) -> Result<f64> {
    check_window(r, theta, params)?;
    Ok(phi_unchecked(r, theta, params))
}

fn phi_unchecked(r: &[Complex64], theta: usize, params: &AfdmParams) -> f64 {
    let n = params.n();
    (theta..theta + params.cpp_len())
        .map(|k| r[k].norm_sqr() + r[k + n].norm_sqr())
        .sum()
}

/// Magnitude of the correlation coefficient between a prefix sample and its
/// partner, `SNR / (SNR + 1)`. An infinite SNR gives 1.
pub fn rho(snr: f64) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::param(format!("SNR must be non-negative, got {snr}")));
    }
    if snr.is_infinite() {
        return Ok(1.0);
    }
    Ok(snr / (snr + 1.0))
}

/// Correlation and energy metrics for every candidate offset `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncMetrics {
    pub gamma: Vec<Complex64>,
    pub phi: Vec<f64>,
    pub rho: f64,
}

impl SyncMetrics {
    pub fn compute(r: &[Complex64], params: &AfdmParams, snr: f64) -> Result<Self> {
        check_window(r, 0, params)?;
        let rho = rho(snr)?;
        let candidates = 0..=params.n();
        Ok(Self {
            gamma: candidates
                .clone()
                .map(|t| gamma_unchecked(r, t, params))
                .collect(),
            phi: candidates.map(|t| phi_unchecked(r, t, params)).collect(),
            rho,
        })
    }

    /// `|gamma(theta)| - (rho/2) phi(theta)`
    pub fn timing_objective(&self, theta: usize) -> f64 {
        self.gamma[theta].norm() - 0.5 * self.rho * self.phi[theta]
    }

    /// `Re{gamma(theta) exp(j 2 pi (eps + c1 N^2))} - (rho/2) phi(theta)`
    pub fn joint_objective(&self, theta: usize, eps: f64, params: &AfdmParams) -> f64 {
        let g = self.gamma[theta] * chirp_offset(params);
        (g * cis_cycles(eps)).re - 0.5 * self.rho * self.phi[theta]
    }
}

/// `exp(j 2 pi c1 N^2)`
fn chirp_offset(params: &AfdmParams) -> Complex64 {
    let n = params.n() as f64;
    cis_cycles(params.c1() * n * n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    pub theta: usize,
    pub eps: f64,
    /// Value of the maximized criterion.
    pub objective: f64,
    /// Set when the correlation at the chosen offset vanished and `eps` is a
    /// placeholder zero.
    pub degenerate: bool,
}

/// Uniform frequency grid over `(-1/2, 1/2]`: `-1/2 + k * step`, `k = 1..=K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsGrid {
    step: f64,
    count: usize,
}

impl EpsGrid {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param(format!("frequency grid step must be positive, got {step}")));
        }
        let count = ((1.0 + 1e-9) / step).floor() as usize;
        if count == 0 {
            return Err(Error::param(format!(
                "frequency grid with step {step} has no points in (-1/2, 1/2]"
            )));
        }
        Ok(Self { step, count })
    }

    /// Default step `1/(64 N)`.
    pub fn for_params(params: &AfdmParams) -> Self {
        Self::new(1.0 / (64.0 * params.n() as f64)).expect("positive step")
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Grid point `k` in `1..=len()`.
    pub fn point(&self, k: usize) -> f64 {
        -0.5 + k as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.count).map(|k| self.point(k))
    }

    /// Indices that can hold the grid point circularly closest to `target`:
    /// the two bracketing neighbours (plus one guard each side) and both ends
    /// of the grid for wrap-around.
    fn candidates(&self, target: f64) -> impl Iterator<Item = usize> {
        let pos = ((wrap_half(target) + 0.5) / self.step).floor() as i64;
        let last = self.count as i64;
        let mut ks = [pos - 1, pos, pos + 1, pos + 2, 1, last];
        for k in ks.iter_mut() {
            *k = (*k).clamp(1, last);
        }
        ks.sort_unstable();
        let mut prev = 0;
        ks.into_iter().filter_map(move |k| {
            if k == prev {
                None
            } else {
                prev = k;
                Some(k as usize)
            }
        })
    }
}

/// Joint ML estimate over `theta in 0..=N` and the frequency grid.
///
/// For fixed `theta` the criterion is `|g| cos(arg g + 2 pi eps)` minus a
/// constant, which is unimodal on the circle, so the grid maximum sits at one
/// of the grid points circularly adjacent to the continuous maximizer. Only
/// those candidates are evaluated; the result equals an exhaustive scan of
/// the grid. Ties go to the smaller `theta`, then the smaller `eps`.
pub fn joint_ml_estimate(
    r: &[Complex64],
    params: &AfdmParams,
    snr: f64,
    eps_grid_step: f64,
) -> Result<OffsetEstimate> {
    let grid = EpsGrid::new(eps_grid_step)?;
    let metrics = SyncMetrics::compute(r, params, snr)?;
    Ok(joint_from_metrics(&metrics, params, &grid))
}

pub fn joint_from_metrics(metrics: &SyncMetrics, params: &AfdmParams, grid: &EpsGrid) -> OffsetEstimate {
    let offset = chirp_offset(params);
    let mut best: Option<OffsetEstimate> = None;
    for theta in 0..metrics.gamma.len() {
        let g = metrics.gamma[theta] * offset;
        let target = -g.arg() / std::f64::consts::TAU;
        for k in grid.candidates(target) {
            let eps = grid.point(k);
            let value = metrics.joint_objective(theta, eps, params);
            // candidates arrive in increasing (theta, eps) order, so a strict
            // comparison keeps the smallest tied pair
            if best.map_or(true, |b| value > b.objective) {
                best = Some(OffsetEstimate {
                    theta,
                    eps,
                    objective: value,
                    degenerate: metrics.gamma[theta] == Complex64::new(0.0, 0.0),
                });
            }
        }
    }
    best.expect("at least one candidate offset")
}

/// Stepwise ML estimate: timing from the correlation magnitude, then the
/// frequency offset from the phase of the correlation at that timing.
pub fn stepwise_ml_estimate(r: &[Complex64], params: &AfdmParams, snr: f64) -> Result<OffsetEstimate> {
    let metrics = SyncMetrics::compute(r, params, snr)?;
    Ok(stepwise_from_metrics(&metrics, params))
}

pub fn stepwise_from_metrics(metrics: &SyncMetrics, params: &AfdmParams) -> OffsetEstimate {
    let mut theta = 0;
    let mut objective = metrics.timing_objective(0);
    for t in 1..metrics.gamma.len() {
        let v = metrics.timing_objective(t);
        if v > objective {
            theta = t;
            objective = v;
        }
    }
    let g = metrics.gamma[theta] * chirp_offset(params);
    let degenerate = metrics.gamma[theta] == Complex64::new(0.0, 0.0);
    let eps = if degenerate {
        0.0
    } else {
        wrap_half(-g.arg() / std::f64::consts::TAU)
    };
    OffsetEstimate {
        theta,
        eps,
        objective,
        degenerate,
    }
}

/// Moment-based SNR estimate from a window: the strongest prefix correlation
/// approximates `L * sigma_s^2` and the mean window power `sigma_s^2 + sigma_n^2`.
pub fn estimate_snr(r: &[Complex64], params: &AfdmParams) -> Result<f64> {
    check_window(r, 0, params)?;
    let total = r.iter().map(|v| v.norm_sqr()).sum::<f64>() / r.len() as f64;
    let signal = (0..=params.n())
        .map(|t| gamma_unchecked(r, t, params).norm())
        .fold(0.0, f64::max)
        / params.cpp_len() as f64;
    let signal = signal.min(total);
    let noise = total - signal;
    if noise <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal / noise)
}
