use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One (parameter point, metric) row of an MSE experiment.
///
/// `mse_theta_over_n` is the mean of `((theta_hat - theta) / N)^2`;
/// `mse_eps_subcarrier` is the mean of `(eps_hat - eps)^2` with `eps` in
/// units of the subcarrier spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseRecord {
    pub experiment: String,
    pub channel: String,
    pub estimator: String,
    pub n: usize,
    pub c1: f64,
    pub l: usize,
    pub snr_db: f64,
    /// Pinned offset, or `uniform(a,b)` when drawn per trial.
    pub eps: String,
    pub metric: String,
    pub value: f64,
    pub std_err: f64,
    pub trials: usize,
    pub seed: u64,
}

pub const MSE_THETA: &str = "mse_theta_over_n";
pub const MSE_EPS: &str = "mse_eps_subcarrier";

/// One offset of a CIR sweep. Zero offset yields `inf` in both columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CirRecord {
    pub eps: f64,
    pub cir_plain_db: f64,
    pub cir_mm_db: f64,
}

/// One `(m, Q_{m,0})` sample of the ICI coefficient profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRecord {
    pub m: usize,
    pub abs_q: f64,
    pub angle_q: f64,
    pub re_q: f64,
    pub im_q: f64,
}

/// Bit error count of one scheme at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub experiment: String,
    pub scheme: String,
    pub n: usize,
    pub l: usize,
    pub snr_db: f64,
    /// Residual offset seen by the detector: fixed, or `estimated(eps)`.
    pub eps_residual: String,
    pub bits_per_frame: usize,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
}

pub const SCHEME_MIRROR: &str = "mirror";
pub const SCHEME_PLAIN: &str = "plain-null-guard";
pub const SCHEME_MIRROR_EST: &str = "mirror-estimated";

/// Output of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ResultSet {
    Mse(Vec<MseRecord>),
    Cir(Vec<CirRecord>),
    Ber(Vec<BerRecord>),
}

impl ResultSet {
    pub fn len(&self) -> usize {
        match self {
            ResultSet::Mse(r) => r.len(),
            ResultSet::Cir(r) => r.len(),
            ResultSet::Ber(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        match self {
            ResultSet::Mse(r) => write_csv(out, r),
            ResultSet::Cir(r) => write_csv(out, r),
            ResultSet::Ber(r) => write_csv(out, r),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// Writes a header row and one line per record.
pub fn write_csv<W: Write, T: Serialize>(out: W, records: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}
