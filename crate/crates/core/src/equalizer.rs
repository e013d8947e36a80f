//! DAFT-domain effective channel and linear MMSE detection.
//!
//! After CPP removal a delay/Doppler path acts on the `N`-sample body as a
//! chirp-circular shift. The time-domain channel is therefore a sum of
//! "shift bands" `diag(b_d) Pi_d`, with `(Pi_d x)[n] = x[(n - d) mod N]`,
//! and the DAFT-domain matrix `D T D^H` of each band costs `O(N^2)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::modem::{cis_cycles, AfdmModem, AfdmParams, DaftVector};

/// `sum_d diag(b_d) Pi_d` on `N`-sample vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftBands {
    n: usize,
    bands: BTreeMap<usize, Vec<Complex64>>,
}

impl ShiftBands {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            bands: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = Self::new(n);
        b.band_mut(0).fill(Complex64::new(1.0, 0.0));
        b
    }

    fn band_mut(&mut self, shift: usize) -> &mut Vec<Complex64> {
        let n = self.n;
        self.bands
            .entry(shift % n)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])
    }

    /// Body-domain channel seen after CPP removal for a frame transmitted
    /// with Doppler time origin at its first (prefix) sample.
    pub fn from_channel(ch: &ChannelRealization, params: &AfdmParams) -> Result<Self> {
        let n = params.n();
        let l = params.cpp_len();
        if ch.max_delay() > l {
            return Err(Error::param(format!(
                "path delay {} exceeds CPP length {l}",
                ch.max_delay()
            )));
        }
        let nf = n as f64;
        let mut out = Self::new(n);
        for path in &ch.paths {
            let band = out.band_mut(path.delay);
            for (t, b) in band.iter_mut().enumerate() {
                let doppler = cis_cycles(-path.doppler * (t + l) as f64 / nf);
                let wrap = if t < path.delay {
                    params.cpp_phase(t as i64 - path.delay as i64)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                *b += path.gain * doppler * wrap;
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (&d, b) in &self.bands {
            for t in 0..n {
                y[t] += b[t] * x[(t + n - d) % n];
            }
        }
        y
    }

    /// `(diag(a) Pi_p)^H = diag(conj a[(n + p) mod N]) Pi_{-p}`
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::new(n);
        for (&p, a) in &self.bands {
            let band = out.band_mut((n - p) % n);
            for t in 0..n {
                band[t] += a[(t + p) % n].conj();
            }
        }
        out
    }

    /// `(diag(a) Pi_p)(diag(b) Pi_q) = diag(a[n] b[(n - p) mod N]) Pi_{p+q}`
    pub fn compose(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::new(n);
        for (&p, a) in &self.bands {
            for (&q, b) in &other.bands {
                let band = out.band_mut(p + q);
                for t in 0..n {
                    band[t] += a[t] * b[(t + n - p) % n];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for (&d, b) in &self.bands {
            for t in 0..n {
                m[(t, (t + n - d) % n)] += b[t];
            }
        }
        m
    }

    /// `D B D^H` with `D` the unitary DAFT matrix.
    ///
    /// Writing `D = A2^H F A1^H` (chirp diagonals around the unitary DFT),
    /// each band conjugated by `A1` stays a band `diag(v) Pi_d`, and
    /// `F diag(v) Pi_d F^H [k, k'] = exp(-j 2 pi k' d / N) V[(k - k') mod N]`
    /// with `V` the DFT of `v` scaled by `1/N`.
    pub fn to_daft_domain(&self, modem: &AfdmModem) -> DMatrix<Complex64> {
        let n = self.n;
        let a1 = modem.chirp1();
        let a2 = modem.chirp2();
        let tw = modem.twiddle();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (&d, b) in &self.bands {
            let v: Vec<Complex64> = (0..n)
                .map(|t| a1[t].conj() * b[t] * a1[(t + n - d) % n])
                .collect();
            let spectrum: Vec<Complex64> = (0..n)
                .map(|q| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut idx = 0usize;
                    for vt in &v {
                        acc += vt * tw[idx].conj();
                        idx = (idx + q) % n;
                    }
                    acc / n as f64
                })
                .collect();
            for col in 0..n {
                let shift = tw[(col * d) % n].conj();
                for row in 0..n {
                    m[(row, col)] += shift * spectrum[(row + n - col) % n];
                }
            }
        }
        for col in 0..n {
            for row in 0..n {
                m[(row, col)] *= a2[row].conj() * a2[col];
            }
        }
        m
    }
}

/// Noise-free, perfectly synchronized map from transmitted to received
/// DAFT-domain symbols.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    matrix: DMatrix<Complex64>,
    time_domain: Option<(ShiftBands, AfdmModem)>,
}

impl EffectiveChannel {
    /// Wraps an arbitrary square matrix.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                what: "effective channel (square)",
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            time_domain: None,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<DaftVector> {
        Error::check_len("effective channel input", self.n(), x.len())?;
        Ok((0..self.n())
            .map(|r| (0..self.n()).map(|c| self.matrix[(r, c)] * x[c]).sum())
            .collect())
    }

    /// `H H^H`, from the band structure when available.
    pub fn gram(&self) -> DMatrix<Complex64> {
        match &self.time_domain {
            Some((bands, modem)) => bands.compose(&bands.adjoint()).to_daft_domain(modem),
            None => &self.matrix * self.matrix.adjoint(),
        }
    }
}

/// `H = D T D^H` for a channel realization, where `T` is the body-domain
/// channel after CPP removal.
pub fn effective_channel(ch: &ChannelRealization, params: &AfdmParams) -> Result<EffectiveChannel> {
    let modem = AfdmModem::new(*params);
    effective_channel_with(ch, &modem)
}

pub fn effective_channel_with(ch: &ChannelRealization, modem: &AfdmModem) -> Result<EffectiveChannel> {
    let bands = ShiftBands::from_channel(ch, modem.params())?;
    let matrix = bands.to_daft_domain(modem);
    Ok(EffectiveChannel {
        matrix,
        time_domain: Some((bands, modem.clone())),
    })
}

/// Linear MMSE detector `x = H^H (H H^H + sigma^2 I)^{-1} y` for one channel
/// and noise level; reusable across received vectors.
#[derive(Debug, Clone)]
pub struct MmseDetector {
    h_adjoint: DMatrix<Complex64>,
    factor: nalgebra::Cholesky<Complex64, nalgebra::Dyn>,
    regularized: bool,
}

impl MmseDetector {
    pub fn new(h: &EffectiveChannel, noise_variance: f64) -> Result<Self> {
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::param(format!(
                "noise variance must be non-negative, got {noise_variance}"
            )));
        }
        let n = h.n();
        let mut a = h.gram();
        // force exact Hermitian symmetry before factoring
        for r in 0..n {
            a[(r, r)] = Complex64::new(a[(r, r)].re + noise_variance, 0.0);
            for c in r + 1..n {
                let v = 0.5 * (a[(r, c)] + a[(c, r)].conj());
                a[(r, c)] = v;
                a[(c, r)] = v.conj();
            }
        }
        let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
        let scale = (trace / n as f64).max(f64::MIN_POSITIVE);
        let mut regularized = false;
        let factor = match a.clone().cholesky() {
            Some(f) if !ill_conditioned(&f, scale) => f,
            _ => {
                regularized = true;
                let mut ridge = scale * f64::EPSILON * n as f64;
                loop {
                    let mut b = a.clone();
                    for i in 0..n {
                        b[(i, i)] += ridge;
                    }
                    if let Some(f) = b.cholesky() {
                        break f;
                    }
                    ridge *= 10.0;
                }
            }
        };
        Ok(Self {
            h_adjoint: h.matrix().adjoint(),
            factor,
            regularized,
        })
    }

    /// True when `H H^H + sigma^2 I` was singular and a ridge was added.
    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn detect(&self, y: &[Complex64]) -> Result<DaftVector> {
        let n = self.h_adjoint.ncols();
        Error::check_len("MMSE input", n, y.len())?;
        let rhs = nalgebra::DVector::from_column_slice(y);
        let z = self.factor.solve(&rhs);
        let x = &self.h_adjoint * z;
        Ok(DaftVector::new(x.iter().copied().collect()))
    }
}

fn ill_conditioned(f: &nalgebra::Cholesky<Complex64, nalgebra::Dyn>, scale: f64) -> bool {
    let l = f.l_dirty();
    let min_diag = (0..l.nrows()).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
    min_diag * min_diag < scale * f64::EPSILON
}

/// One-shot MMSE detection; see [`MmseDetector`].
pub fn mmse_detect(y: &[Complex64], h: &EffectiveChannel, noise_variance: f64) -> Result<DaftVector> {
    MmseDetector::new(h, noise_variance)?.detect(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, complex_gaussian, draw_channel, ChannelProfile, DopplerDistribution, Path};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        (0..n).map(|_| complex_gaussian(rng, 1.0)).collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn dense_daft(modem: &AfdmModem) -> DMatrix<Complex64> {
        let n = modem.params().n();
        let mut d = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[c] = Complex64::new(1.0, 0.0);
            let col = modem.daft(&e).unwrap();
            for r in 0..n {
                d[(r, c)] = col[r];
            }
        }
        d
    }

    #[test]
    fn identity_channel_gives_identity() {
        let p = AfdmParams::new(16, 0.0731, 0.011, 4).unwrap();
        let h = effective_channel(&ChannelRealization::identity(), &p).unwrap();
        let eye = DMatrix::<Complex64>::identity(16, 16);
        assert!((h.matrix() - eye).norm() < 1e-10);
    }

    #[test]
    fn band_algebra_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let mut a = ShiftBands::new(n);
        let mut b = ShiftBands::new(n);
        for d in [0usize, 1, 5] {
            *a.band_mut(d) = random_vec(n, &mut rng);
        }
        for d in [0usize, 2, 11] {
            *b.band_mut(d) = random_vec(n, &mut rng);
        }
        let (da, db) = (a.to_dense(), b.to_dense());
        assert!((a.compose(&b).to_dense() - &da * &db).norm() < 1e-12);
        assert!((a.adjoint().to_dense() - da.adjoint()).norm() < 1e-12);
        let x = random_vec(n, &mut rng);
        let dx = &da * nalgebra::DVector::from_column_slice(&x);
        assert!(max_diff(&a.apply(&x), dx.as_slice()) < 1e-12);

        let p = AfdmParams::new(n, 0.0917, 0.031, 3).unwrap();
        let modem = AfdmModem::new(p);
        let d = dense_daft(&modem);
        let expect = &d * &da * d.adjoint();
        assert!((a.to_daft_domain(&modem) - expect).norm() < 1e-10);
    }

    #[test]
    fn matches_modem_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, l, c1) in [(8usize, 2usize, 0.0913), (16, 4, 5.0 / 32.0), (64, 3, 0.0377)] {
            let p = AfdmParams::new(n, c1, 0.5 / n as f64, l).unwrap();
            let modem = AfdmModem::new(p);
            let profile = ChannelProfile::new(4, l, 1.5).unwrap();
            for _ in 0..50 {
                let ch = draw_channel(&profile, &mut rng);
                let h = effective_channel_with(&ch, &modem).unwrap();
                let x = random_vec(n, &mut rng);
                let framed = modem.modulate_frame(&x).unwrap();
                let rx = apply_channel(&framed, &ch, n).unwrap();
                let y = modem.demodulate_frame(&rx).unwrap();
                assert!(max_diff(&h.apply(&x).unwrap(), &y) < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn structured_gram_matches_dense() {
        let p = AfdmParams::new(32, 0.0771, 1.0 / 64.0, 2).unwrap();
        let ch = draw_channel(
            &ChannelProfile::reference(DopplerDistribution::Continuous),
            &mut ChaCha8Rng::seed_from_u64(2),
        );
        let h = effective_channel(&ch, &p).unwrap();
        let dense = h.matrix() * h.matrix().adjoint();
        assert!((h.gram() - dense).norm() < 1e-10);
    }

    #[test]
    fn delay_beyond_prefix_rejected() {
        let p = AfdmParams::new(8, 0.1, 0.01, 1).unwrap();
        let ch = ChannelRealization {
            paths: vec![Path {
                gain: Complex64::new(1.0, 0.0),
                delay: 2,
                doppler: 0.0,
            }],
        };
        assert!(matches!(effective_channel(&ch, &p), Err(Error::Parameter(_))));
    }

    #[test]
    fn mmse_scalar_cases() {
        let eye = EffectiveChannel::from_matrix(DMatrix::identity(8, 8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_vec(8, &mut rng);
        let out = mmse_detect(&x, &eye, 0.0).unwrap();
        assert!(max_diff(&out, &x) < 1e-12);
        let y: Vec<Complex64> = x.iter().map(|v| 2.0 * v).collect();
        let out = mmse_detect(&y, &eye, 1.0).unwrap();
        assert!(max_diff(&out, &x) < 1e-12);
    }

    #[test]
    fn mmse_zero_forcing_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 10;
        let m = DMatrix::from_fn(n, n, |_, _| complex_gaussian(&mut rng, 1.0));
        let h = EffectiveChannel::from_matrix(m.clone()).unwrap();
        let y = random_vec(n, &mut rng);
        let zf = m.clone().lu().solve(&nalgebra::DVector::from_column_slice(&y)).unwrap();
        let det = MmseDetector::new(&h, 1e-12).unwrap();
        assert!(!det.regularized());
        let out = det.detect(&y).unwrap();
        assert!(max_diff(&out, zf.as_slice()) < 1e-6);
    }

    #[test]
    fn singular_channel_is_regularized() {
        let mut m = DMatrix::<Complex64>::identity(6, 6);
        m[(5, 5)] = Complex64::new(0.0, 0.0);
        let h = EffectiveChannel::from_matrix(m).unwrap();
        let det = MmseDetector::new(&h, 0.0).unwrap();
        assert!(det.regularized());
        let y: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let out = det.detect(&y).unwrap();
        assert!(out.iter().all(|v| v.re.is_finite()));
        assert!((out[2] - y[2]).norm() < 1e-6);
        assert!(MmseDetector::new(&h, -1.0).is_err());
        assert!(EffectiveChannel::from_matrix(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn noiseless_bpsk_is_error_free() {
        let p = AfdmParams::for_doppler(64, 4, 2.0).unwrap();
        let modem = AfdmModem::new(p);
        let profile = ChannelProfile::reference(DopplerDistribution::Continuous);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let ch = draw_channel(&profile, &mut rng);
            let h = effective_channel_with(&ch, &modem).unwrap();
            let bits: Vec<bool> = (0..64).map(|_| rng.gen()).collect();
            let x: Vec<Complex64> = bits.iter().map(|&b| Complex64::new(if b { -1.0 } else { 1.0 }, 0.0)).collect();
            let rx = apply_channel(&modem.modulate_frame(&x).unwrap(), &ch, 64).unwrap();
            let y = modem.demodulate_frame(&rx).unwrap();
            let est = mmse_detect(&y, &h, 0.0).unwrap();
            for (b, v) in bits.iter().zip(est.iter()) {
                assert_eq!(*b, v.re < 0.0);
            }
        }
    }
}
