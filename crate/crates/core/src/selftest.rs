//! Oracle-equivalence checks runnable from a release binary.
//!
//! Each check compares a production code path with an independent
//! brute-force evaluation and reports the worst discrepancy.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{apply_channel, complex_gaussian, draw_channel, observation_window, ChannelProfile, OffsetTruth};
use crate::equalizer::effective_channel;
use crate::error::Result;
use crate::ici::{cir_mirror, cir_plain, leakage, mirror_demap, mirror_map};
use crate::modem::{cis_cycles, AfdmModem, AfdmParams};
use crate::sync::{joint_ml_estimate, stepwise_ml_estimate, EpsGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(check: &str, max_error: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| complex_gaussian(rng, 1.0)).collect()
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `s[n] = N^{-1/2} sum_m x[m] exp(j 2 pi (c1 n^2 + c2 m^2 + n m / N))`
/// evaluated entry by entry.
fn idaft_direct(x: &[Complex64], p: &AfdmParams) -> Vec<Complex64> {
    let n = p.n();
    let nf = n as f64;
    (0..n)
        .map(|t| {
            let tf = t as f64;
            x.iter()
                .enumerate()
                .map(|(m, &v)| {
                    let mf = m as f64;
                    v * cis_cycles(p.c1() * tf * tf + p.c2() * mf * mf + tf * mf / nf)
                })
                .sum::<Complex64>()
                / nf.sqrt()
        })
        .collect()
}

fn transform_checks(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut matrix = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut energy = 0.0f64;
    for n in [8usize, 64, 256] {
        let p = AfdmParams::new(n, 0.013, 0.5 / n as f64, 4)?;
        let modem = AfdmModem::new(p);
        for _ in 0..10 {
            let x = random_vec(rng, n);
            let s = modem.idaft(&x)?;
            matrix = matrix.max(max_abs_diff(&s, &idaft_direct(&x, &p)));
            round_trip = round_trip.max(max_abs_diff(&modem.daft(&s)?, &x));
            let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            energy = energy.max((s.energy() - ex).abs() / ex);
        }
    }
    Ok(vec![
        CheckResult::new("idaft matches direct summation", matrix, 1e-10),
        CheckResult::new("daft inverts idaft", round_trip, 1e-10),
        CheckResult::new("idaft preserves energy", energy, 1e-10),
    ])
}

fn leakage_check() -> CheckResult {
    let mut worst = 0.0f64;
    for n in [16usize, 1024] {
        let nf = n as f64;
        for eps in [0.01, 0.05, 0.2, -0.01, -0.05, -0.2] {
            for q in -(n as i64)..=n as i64 {
                let direct: Complex64 = (0..n)
                    .map(|t| cis_cycles(t as f64 * (q as f64 + eps) / nf))
                    .sum::<Complex64>()
                    / nf;
                worst = worst.max((leakage(q, eps, n) - direct).norm());
            }
        }
    }
    CheckResult::new("leakage closed form matches direct sum", worst, 1e-12)
}

/// Response of the DAFT-domain chain to a pure frequency offset.
fn offset_chain(modem: &AfdmModem, x: &[Complex64], eps: f64) -> Result<Vec<Complex64>> {
    let n = modem.params().n() as f64;
    let mut s = modem.idaft(x)?.into_inner();
    for (k, v) in s.iter_mut().enumerate() {
        *v *= cis_cycles(eps * k as f64 / n);
    }
    Ok(modem.daft(&s)?.into_inner())
}

fn cir_checks() -> Result<Vec<CheckResult>> {
    let n = 64;
    let p = AfdmParams::new(n, 0.5 / n as f64, 0.5 / n as f64, 4)?;
    let modem = AfdmModem::new(p);
    let half = n / 2;
    let mut plain = 0.0f64;
    let mut mirror = 0.0f64;
    for eps in [0.01, 0.05, 0.1, 0.2, 0.3] {
        let mut e0 = vec![Complex64::new(0.0, 0.0); n];
        e0[0] = Complex64::new(1.0, 0.0);
        let col = offset_chain(&modem, &e0, eps)?;
        let oracle = col[0].norm_sqr() / col[1..].iter().map(|v| v.norm_sqr()).sum::<f64>();
        plain = plain.max((cir_plain(eps, &p)? / oracle - 1.0).abs());

        // gain[r][c]: combined output r for unit data on pair c
        let mut gain = vec![vec![Complex64::new(0.0, 0.0); half - 1]; half - 1];
        for c in 0..half - 1 {
            let mut d = vec![Complex64::new(0.0, 0.0); half - 1];
            d[c] = Complex64::new(1.0, 0.0);
            let y = offset_chain(&modem, &mirror_map(&d, n)?, eps)?;
            for (r, z) in mirror_demap(&y)?.into_iter().enumerate() {
                gain[r][c] = z;
            }
        }
        let oracle = (0..half - 1)
            .map(|r| {
                let carrier = gain[r][r].norm_sqr();
                let interference: f64 = (0..half - 1)
                    .filter(|&c| c != r)
                    .map(|c| gain[r][c].norm_sqr())
                    .sum();
                carrier / interference
            })
            .sum::<f64>()
            / (half - 1) as f64;
        mirror = mirror.max((cir_mirror(eps, &p)? / oracle - 1.0).abs());
    }
    Ok(vec![
        CheckResult::new("plain CIR matches modem chain", plain, 1e-10),
        CheckResult::new("mirror CIR matches modem chain", mirror, 1e-10),
    ])
}

fn effective_channel_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for n in [16usize, 64] {
        let l = 4;
        let p = AfdmParams::for_doppler(n, l, 2.0)?;
        let modem = AfdmModem::new(p);
        let profile = ChannelProfile::new(5, 3, 2.0)?;
        for _ in 0..10 {
            let ch = draw_channel(&profile, rng);
            let h = effective_channel(&ch, &p)?;
            let x = random_vec(rng, n);
            let rx = apply_channel(&modem.modulate_frame(&x)?, &ch, n)?;
            let chain = modem.demodulate_frame(&rx)?;
            worst = worst.max(max_abs_diff(&h.apply(&x)?, &chain));
        }
    }
    Ok(CheckResult::new("effective channel matches modem chain", worst, 1e-10))
}

fn sync_check(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let (n, l) = (256, 20);
    let p = AfdmParams::for_doppler(n, l, 2.0)?;
    let modem = AfdmModem::new(p);
    let grid = EpsGrid::for_params(&p);
    let mut theta_miss = 0.0f64;
    let mut stepwise = 0.0f64;
    let mut joint = 0.0f64;
    for _ in 0..10 {
        let mut stream = Vec::new();
        for _ in 0..3 {
            stream.extend(modem.modulate_frame(&random_vec(rng, n))?.into_inner());
        }
        let truth = OffsetTruth::new(rng.gen_range(l..n), rng.gen_range(-0.4..0.4), n)?;
        let window = observation_window(&stream, p.frame_len(), &truth, &p)?;
        let a = stepwise_ml_estimate(&window, &p, f64::INFINITY)?;
        let b = joint_ml_estimate(&window, &p, f64::INFINITY, grid.step())?;
        theta_miss += (a.theta != truth.theta) as u8 as f64 + (b.theta != truth.theta) as u8 as f64;
        stepwise = stepwise.max((a.eps - truth.eps).abs());
        joint = joint.max((b.eps - truth.eps).abs());
    }
    Ok(vec![
        CheckResult::new("noiseless timing estimates are exact", theta_miss, 0.0),
        CheckResult::new("noiseless stepwise offset is exact", stepwise, 1e-9),
        CheckResult::new("noiseless joint offset within half a grid step", joint, 0.5 * grid.step() + 1e-12),
    ])
}

/// Runs every check with a fixed seed.
pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut out = transform_checks(&mut rng)?;
    out.push(leakage_check());
    out.extend(cir_checks()?);
    out.push(effective_channel_check(&mut rng)?);
    out.extend(sync_check(&mut rng)?);
    Ok(out)
}
