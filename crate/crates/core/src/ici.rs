//! Intercarrier interference under a residual frequency offset, and the
//! mirror-mapping modulation that cancels most of it.
//!
//! With a residual offset `eps` the DAFT-domain output is
//! `y[mh] = sum_m x[m] Q[m, mh]` where `Q[m, mh] = P[m, mh] S[m - mh]`,
//! `P` a unit-modulus chirp phase and `S` the Dirichlet-type leakage kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modem::{cis_cycles, AfdmParams, DaftVector};

/// Leakage `S_q` from subcarrier offset `q` under frequency offset `eps`:
/// `sin(pi eps) exp(j pi (eps (1 - 1/N) - q/N)) / (N sin(pi (q + eps) / N))`.
///
/// At `eps = 0` the kernel collapses to `1` for `q = 0 (mod N)` and `0` elsewhere.
pub fn leakage(q: i64, eps: f64, n: usize) -> Complex64 {
    let q = q.rem_euclid(n as i64);
    let nf = n as f64;
    if eps == 0.0 {
        return if q == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let qf = q as f64;
    let mag = (PI * eps).sin() / (nf * (PI * (qf + eps) / nf).sin());
    mag * cis_cycles(0.5 * (eps * (1.0 - 1.0 / nf) - qf / nf))
}

/// `P[m, mh] = exp(j 2 pi c2 (m^2 - mh^2))`
pub fn chirp_phase(m: usize, m_hat: usize, c2: f64) -> Complex64 {
    let (a, b) = (m as f64, m_hat as f64);
    cis_cycles(c2 * (a * a - b * b))
}

pub fn ici_coefficient(m: usize, m_hat: usize, eps: f64, params: &AfdmParams) -> Complex64 {
    chirp_phase(m, m_hat, params.c2()) * leakage(m as i64 - m_hat as i64, eps, params.n())
}

/// Tabulated leakage for one `(N, eps)` pair with chirp phases on demand.
#[derive(Debug, Clone)]
pub struct IciCoefficients {
    n: usize,
    c2: f64,
    eps: f64,
    leakage: Vec<Complex64>,
}

impl IciCoefficients {
    pub fn new(eps: f64, params: &AfdmParams) -> Self {
        let n = params.n();
        Self {
            n,
            c2: params.c2(),
            eps,
            leakage: (0..n as i64).map(|q| leakage(q, eps, n)).collect(),
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `S_q`, periodic in `q` with period `N`.
    pub fn s(&self, q: i64) -> Complex64 {
        self.leakage[q.rem_euclid(self.n as i64) as usize]
    }

    pub fn p(&self, m: usize, m_hat: usize) -> Complex64 {
        chirp_phase(m, m_hat, self.c2)
    }

    pub fn q(&self, m: usize, m_hat: usize) -> Complex64 {
        self.p(m, m_hat) * self.s(m as i64 - m_hat as i64)
    }

    /// Power leaked into subcarrier `m_hat` from every other subcarrier.
    pub fn interference_power(&self, m_hat: usize) -> f64 {
        (0..self.n)
            .filter(|&m| m != m_hat)
            .map(|m| self.s(m as i64 - m_hat as i64).norm_sqr())
            .sum()
    }
}

/// Maps `N/2 - 1` symbols onto `N` subcarriers with negated mirror copies:
/// `x[m] = d[m-1]` and `x[N-m] = -d[m-1]` for `m = 1..N/2-1`; `x[0] = x[N/2] = 0`.
pub fn mirror_map(data: &[Complex64], n: usize) -> Result<DaftVector> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::param(format!("mirror mapping needs an even N >= 4, got {n}")));
    }
    let half = n / 2;
    Error::check_len("mirror_map input", half - 1, data.len())?;
    let mut out = DaftVector::zeros(n);
    for (i, &d) in data.iter().enumerate() {
        out[i + 1] = d;
        out[n - i - 1] = -d;
    }
    Ok(out)
}

/// Combines each mirrored pair, `(y[m] - y[N-m]) / 2` for `m = 1..N/2-1`.
pub fn mirror_demap(y: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = y.len();
    if n < 4 || n % 2 != 0 {
        return Err(Error::Dimension {
            what: "mirror_demap input (even, >= 4)",
            expected: n.max(4) + n % 2,
            actual: n,
        });
    }
    Ok((1..n / 2).map(|m| 0.5 * (y[m] - y[n - m])).collect())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.abs() < 0.5) {
        return Err(Error::param(format!(
            "residual frequency offset {eps} outside (-1/2, 1/2)"
        )));
    }
    Ok(())
}

/// Carrier-to-interference power ratio of plain AFDM (linear), evaluated at
/// `mh = 0`. Infinite at `eps = 0`.
pub fn cir_plain(eps: f64, params: &AfdmParams) -> Result<f64> {
    check_eps(eps)?;
    if eps == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ici = IciCoefficients::new(eps, params);
    let interference: f64 = (1..params.n()).map(|m| ici.q(m, 0).norm_sqr()).sum();
    Ok(ici.s(0).norm_sqr() / interference)
}

/// Carrier-to-interference power ratio after mirror-mapping demodulation
/// (linear), averaged over the `N/2 - 1` combined symbols.
pub fn cir_mirror(eps: f64, params: &AfdmParams) -> Result<f64> {
    check_eps(eps)?;
    if eps == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ici = IciCoefficients::new(eps, params);
    let n = params.n();
    let half = n / 2;
    let s = |q: i64| ici.s(q);
    let total: f64 = (1..half)
        .map(|mh| {
            let mhi = mh as i64;
            let carrier = (2.0 * s(0) - s(-2 * mhi) - s(2 * mhi)).norm_sqr();
            let interference: f64 = (1..half)
                .filter(|&m| m != mh)
                .map(|m| {
                    let mi = m as i64;
                    let leak = s(mi - mhi) + s(mhi - mi) - s(mi + mhi) - s(-mi - mhi);
                    (ici.p(m, mh) * leak).norm_sqr()
                })
                .sum();
            carrier / interference
        })
        .sum();
    Ok(2.0 / (n as f64 - 2.0) * total)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
