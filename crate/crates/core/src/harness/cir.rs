use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{CirRecord, QRecord};
use crate::error::{Error, Result};
use crate::ici::{cir_mirror, cir_plain, to_db, IciCoefficients};
use crate::modem::AfdmParams;

/// Plain and mirror-mapped CIR in dB for every offset in `cfg.eps`.
pub fn run_cir_sweep(cfg: &ExperimentConfig) -> Result<Vec<CirRecord>> {
    if cfg.experiment != ExperimentKind::CirSweep {
        return Err(Error::InvalidConfig(vec![format!(
            "experiment: '{}' is not a CIR sweep",
            cfg.experiment
        )]));
    }
    cfg.validate()?;
    // the CIR does not depend on the prefix length
    let params = cfg.params(cfg.l[0])?;
    cfg.eps
        .iter()
        .map(|&eps| {
            Ok(CirRecord {
                eps,
                cir_plain_db: to_db(cir_plain(eps, &params)?),
                cir_mm_db: to_db(cir_mirror(eps, &params)?),
            })
        })
        .collect()
}

/// `Q_{m,0}` for `m = 0..N`.
pub fn q_profile(eps: f64, params: &AfdmParams) -> Vec<QRecord> {
    let ici = IciCoefficients::new(eps, params);
    (0..params.n())
        .map(|m| {
            let q = ici.q(m, 0);
            QRecord {
                m,
                abs_q: q.norm(),
                angle_q: q.arg(),
                re_q: q.re,
                im_q: q.im,
            }
        })
        .collect()
}
