//! AFDM waveform parameters, the DAFT/IDAFT transform pair and CPP framing.
//!
//! Transforms are evaluated by direct `O(N^2)` summation against precomputed
//! chirp and twiddle tables. All phases are carried in cycles and reduced
//! modulo one before exponentiation so that large `c1 * n^2` products do not
//! lose precision.

use std::f64::consts::TAU;
use std::ops::{Deref, DerefMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `exp(j * 2 * pi * cycles)` with the angle reduced to `[-1/2, 1/2]` cycles.
#[inline]
pub fn cis_cycles(cycles: f64) -> Complex64 {
    let frac = cycles - cycles.round();
    Complex64::from_polar(1.0, TAU * frac)
}

/// Waveform parameters shared by every stage of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfdmParams {
    n: usize,
    c1: f64,
    c2: f64,
    cpp_len: usize,
}

impl AfdmParams {
    /// Validates and builds a parameter set.
    ///
    /// `n` must be even and at least 4 (mirror mapping needs the `N/2` index),
    /// `c1` must be finite and non-negative, `c2` finite and `1 <= cpp_len <= n`.
    pub fn new(n: usize, c1: f64, c2: f64, cpp_len: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if n < 4 || n % 2 != 0 {
            problems.push(format!("N must be an even integer >= 4, got {n}"));
        }
        if !c1.is_finite() || c1 < 0.0 {
            problems.push(format!("c1 must be finite and non-negative, got {c1}"));
        }
        if !c2.is_finite() {
            problems.push(format!("c2 must be finite, got {c2}"));
        }
        if cpp_len == 0 || cpp_len > n {
            problems.push(format!("CPP length must satisfy 1 <= L <= N, got L={cpp_len}"));
        }
        if problems.is_empty() {
            Ok(Self { n, c1, c2, cpp_len })
        } else {
            Err(Error::param(problems.join("; ")))
        }
    }

    /// Parameters matched to a channel with maximum normalized Doppler
    /// `alpha_max`: `c1` takes its smallest admissible value and `c2 = 1/(2N)`.
    pub fn for_doppler(n: usize, cpp_len: usize, alpha_max: f64) -> Result<Self> {
        if !alpha_max.is_finite() || alpha_max < 0.0 {
            return Err(Error::param(format!(
                "maximum Doppler must be finite and non-negative, got {alpha_max}"
            )));
        }
        Self::new(n, min_c1(n, alpha_max), 0.5 / n as f64, cpp_len)
    }

    /// Checks `c1 >= (2 alpha_max + 1) / (2N)`.
    pub fn check_doppler(&self, alpha_max: f64) -> Result<()> {
        let bound = min_c1(self.n, alpha_max);
        // tolerate the rounding of a c1 that was itself computed from the bound
        if self.c1 < bound * (1.0 - 1e-12) {
            return Err(Error::param(format!(
                "c1 = {} is below (2*alpha_max+1)/(2N) = {bound} for alpha_max = {alpha_max}",
                self.c1
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// CPP length `L` in samples.
    pub fn cpp_len(&self) -> usize {
        self.cpp_len
    }

    /// Length of a framed symbol, `N + L`.
    pub fn frame_len(&self) -> usize {
        self.n + self.cpp_len
    }

    /// Length of the synchronization observation window, `2N + L`.
    pub fn window_len(&self) -> usize {
        2 * self.n + self.cpp_len
    }

    /// Returns a copy with a different CPP length.
    pub fn with_cpp_len(&self, cpp_len: usize) -> Result<Self> {
        Self::new(self.n, self.c1, self.c2, cpp_len)
    }

    /// Phase `exp(-j 2 pi c1 (N^2 + 2 N k))` linking a prefix sample at
    /// (negative) body index `k` to the body sample `k + N`.
    pub fn cpp_phase(&self, k: i64) -> Complex64 {
        let n = self.n as f64;
        cis_cycles(-self.c1 * (n * n + 2.0 * n * k as f64))
    }
}

/// Smallest admissible first chirp rate for maximum normalized Doppler `alpha_max`.
pub fn min_c1(n: usize, alpha_max: f64) -> f64 {
    (2.0 * alpha_max + 1.0) / (2.0 * n as f64)
}

macro_rules! sample_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<Complex64>);

        impl $name {
            pub fn new(values: Vec<Complex64>) -> Self {
                Self(values)
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![Complex64::new(0.0, 0.0); len])
            }

            pub fn into_inner(self) -> Vec<Complex64> {
                self.0
            }

            pub fn energy(&self) -> f64 {
                self.0.iter().map(|v| v.norm_sqr()).sum()
            }
        }

        impl Deref for $name {
            type Target = [Complex64];

            fn deref(&self) -> &[Complex64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [Complex64] {
                &mut self.0
            }
        }

        impl From<Vec<Complex64>> for $name {
            fn from(values: Vec<Complex64>) -> Self {
                Self(values)
            }
        }

        impl FromIterator<Complex64> for $name {
            fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }
    };
}

sample_newtype!(
    /// Symbols in the discrete affine Fourier domain, indexed by subcarrier `m`.
    DaftVector
);

sample_newtype!(
    /// Complex baseband samples indexed by time `n`.
    TimeSamples
);

/// Precomputed tables for repeated transforms with one parameter set.
#[derive(Debug, Clone)]
pub struct AfdmModem {
    params: AfdmParams,
    /// `exp(j 2 pi c1 n^2)`
    chirp1: Vec<Complex64>,
    /// `exp(j 2 pi c2 m^2)`
    chirp2: Vec<Complex64>,
    /// `exp(j 2 pi k / N)`
    twiddle: Vec<Complex64>,
    /// prefix phase for frame index `k = 0..L`
    prefix: Vec<Complex64>,
}

impl AfdmModem {
    pub fn new(params: AfdmParams) -> Self {
        let n = params.n;
        let nf = n as f64;
        let chirp1 = (0..n)
            .map(|i| cis_cycles(params.c1 * (i * i) as f64))
            .collect();
        let chirp2 = (0..n)
            .map(|i| cis_cycles(params.c2 * (i * i) as f64))
            .collect();
        let twiddle = (0..n).map(|k| cis_cycles(k as f64 / nf)).collect();
        let prefix = (0..params.cpp_len)
            .map(|k| params.cpp_phase(k as i64 - params.cpp_len as i64))
            .collect();
        Self {
            params,
            chirp1,
            chirp2,
            twiddle,
            prefix,
        }
    }

    pub fn params(&self) -> &AfdmParams {
        &self.params
    }

    pub fn chirp1(&self) -> &[Complex64] {
        &self.chirp1
    }

    pub fn chirp2(&self) -> &[Complex64] {
        &self.chirp2
    }

    pub fn twiddle(&self) -> &[Complex64] {
        &self.twiddle
    }

    /// Modulates `N` DAFT-domain symbols into `N` time samples.
    pub fn idaft(&self, x: &[Complex64]) -> Result<TimeSamples> {
        let n = self.params.n;
        Error::check_len("idaft input", n, x.len())?;
        let pre: Vec<Complex64> = x.iter().zip(&self.chirp2).map(|(a, b)| a * b).collect();
        let scale = 1.0 / (n as f64).sqrt();
        Ok((0..n)
            .map(|t| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut idx = 0usize;
                for v in &pre {
                    acc += v * self.twiddle[idx];
                    idx += t;
                    if idx >= n {
                        idx -= n;
                    }
                }
                acc * self.chirp1[t] * scale
            })
            .collect())
    }

    /// Demodulates `N` time samples into the DAFT domain; exact inverse of [`Self::idaft`].
    pub fn daft(&self, s: &[Complex64]) -> Result<DaftVector> {
        let n = self.params.n;
        Error::check_len("daft input", n, s.len())?;
        let pre: Vec<Complex64> = s
            .iter()
            .zip(&self.chirp1)
            .map(|(a, b)| a * b.conj())
            .collect();
        let scale = 1.0 / (n as f64).sqrt();
        Ok((0..n)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut idx = 0usize;
                for v in &pre {
                    acc += v * self.twiddle[idx].conj();
                    idx += m;
                    if idx >= n {
                        idx -= n;
                    }
                }
                acc * self.chirp2[m].conj() * scale
            })
            .collect())
    }

    /// Prepends the `L`-sample chirp-periodic prefix to an `N`-sample body.
    pub fn append_cpp(&self, s: &[Complex64]) -> Result<TimeSamples> {
        let n = self.params.n;
        let l = self.params.cpp_len;
        Error::check_len("append_cpp input", n, s.len())?;
        let mut out = Vec::with_capacity(n + l);
        out.extend((0..l).map(|k| s[k + n - l] * self.prefix[k]));
        out.extend_from_slice(s);
        Ok(TimeSamples(out))
    }

    /// Drops the prefix of an `N + L` frame.
    pub fn strip_cpp(&self, frame: &[Complex64]) -> Result<TimeSamples> {
        Error::check_len("strip_cpp input", self.params.frame_len(), frame.len())?;
        Ok(TimeSamples(frame[self.params.cpp_len..].to_vec()))
    }

    /// IDAFT followed by CPP insertion.
    pub fn modulate_frame(&self, x: &[Complex64]) -> Result<TimeSamples> {
        self.append_cpp(&self.idaft(x)?)
    }

    /// CPP removal followed by DAFT.
    pub fn demodulate_frame(&self, frame: &[Complex64]) -> Result<DaftVector> {
        self.daft(&self.strip_cpp(frame)?)
    }
}

pub fn idaft(x: &DaftVector, params: &AfdmParams) -> Result<TimeSamples> {
    AfdmModem::new(*params).idaft(x)
}

pub fn daft(s: &TimeSamples, params: &AfdmParams) -> Result<DaftVector> {
    AfdmModem::new(*params).daft(s)
}

pub fn append_cpp(s: &TimeSamples, params: &AfdmParams) -> Result<TimeSamples> {
    AfdmModem::new(*params).append_cpp(s)
}

pub fn strip_cpp(frame: &TimeSamples, params: &AfdmParams) -> Result<TimeSamples> {
    Error::check_len("strip_cpp input", params.frame_len(), frame.len())?;
    Ok(TimeSamples(frame[params.cpp_len..].to_vec()))
}
