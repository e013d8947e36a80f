use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::channel::{ChannelProfile, DopplerDistribution};
use crate::error::{Error, Result};
use crate::modem::{min_c1, AfdmParams};

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::param(format!(
                        concat!("unknown ", stringify!($name), " '{}', expected one of: {}"),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum!(
    ExperimentKind {
        MseVsL => "mse-vs-l",
        MseVsSnr => "mse-vs-snr",
        JointVsStepwise => "joint-vs-stepwise",
        CirSweep => "cir-sweep",
        Ber => "ber",
    }
);

keyword_enum!(
    ChannelKind {
        Awgn => "awgn",
        Doubly => "doubly",
    }
);

keyword_enum!(
    EstimatorKind {
        Joint => "joint",
        Stepwise => "stepwise",
    }
);

keyword_enum!(
    Constellation {
        Bpsk => "bpsk",
    }
);

impl ExperimentKind {
    pub fn is_mse(&self) -> bool {
        matches!(
            self,
            ExperimentKind::MseVsL | ExperimentKind::MseVsSnr | ExperimentKind::JointVsStepwise
        )
    }
}

/// Declarative description of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    /// `None` selects `(2 alpha_max + 1) / (2N)`.
    pub c1: Option<f64>,
    /// `None` selects `1 / (2N)`.
    pub c2: Option<f64>,
    /// CPP lengths to sweep.
    pub l: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub channels: Vec<ChannelKind>,
    pub estimators: Vec<EstimatorKind>,
    pub paths: usize,
    pub max_delay: usize,
    pub max_doppler: f64,
    pub doppler: DopplerDistribution,
    /// MSE runs: pinned frequency offsets (empty draws them uniformly on
    /// `[-eps_spread, eps_spread]`). CIR sweeps: the offset grid.
    pub eps: Vec<f64>,
    pub eps_spread: f64,
    /// Joint estimator grid step; `None` selects `1/(64N)`.
    pub eps_grid_step: Option<f64>,
    /// Trials per parameter point (BER: minimum frames per point).
    pub trials: usize,
    pub seed: u64,
    /// Bootstrap resamples for MSE standard errors.
    pub bootstrap: usize,
    /// BER: residual offset applied to the fixed-residual schemes.
    pub eps_residual: f64,
    /// BER: offset handed to the stepwise estimator in the estimated scheme.
    pub eps_offset: f64,
    pub constellation: Constellation,
    /// BER: keep adding frames until every scheme has this many bit errors...
    pub min_bit_errors: u64,
    /// ...or this many frames have been simulated.
    pub max_trials: usize,
}

fn sweep(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + i as f64 * step).collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            n: 256,
            c1: None,
            c2: None,
            l: vec![20],
            snr_db: vec![20.0],
            channels: vec![ChannelKind::Awgn],
            estimators: vec![EstimatorKind::Joint],
            paths: 5,
            max_delay: 1,
            max_doppler: 2.0,
            doppler: DopplerDistribution::default(),
            eps: Vec::new(),
            eps_spread: 0.4,
            eps_grid_step: None,
            trials: 20_000,
            seed: 0,
            bootstrap: 200,
            eps_residual: 0.076,
            eps_offset: 0.2,
            constellation: Constellation::Bpsk,
            min_bit_errors: 100,
            max_trials: 20_000,
        };
        match experiment {
            ExperimentKind::MseVsL => Self {
                l: vec![2, 4, 6, 8, 10, 15, 20, 30, 40, 60],
                snr_db: vec![10.0, 15.0, 20.0],
                ..base
            },
            ExperimentKind::MseVsSnr => Self {
                l: vec![5, 20, 60],
                snr_db: sweep(0.0, 5.0, 30.0),
                channels: vec![ChannelKind::Awgn, ChannelKind::Doubly],
                ..base
            },
            ExperimentKind::JointVsStepwise => Self {
                l: vec![5, 10, 20, 30, 40, 60],
                channels: vec![ChannelKind::Awgn, ChannelKind::Doubly],
                estimators: vec![EstimatorKind::Joint, EstimatorKind::Stepwise],
                ..base
            },
            ExperimentKind::CirSweep => Self {
                n: 1024,
                l: vec![1],
                eps: sweep(0.01, 0.01, 0.30),
                trials: 1,
                ..base
            },
            ExperimentKind::Ber => Self {
                l: vec![30],
                snr_db: sweep(0.0, 2.0, 10.0),
                channels: vec![ChannelKind::Doubly],
                estimators: vec![EstimatorKind::Stepwise],
                trials: 200,
                ..base
            },
        }
    }

    /// Applies every field set in `overrides`.
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($field:ident),+) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })+
            };
        }
        set!(
            n, l, snr_db, channels, estimators, paths, max_delay, max_doppler, doppler, eps,
            eps_spread, trials, seed, bootstrap, eps_residual, eps_offset, constellation,
            min_bit_errors, max_trials
        );
        if o.c1.is_some() {
            self.c1 = o.c1;
        }
        if o.c2.is_some() {
            self.c2 = o.c2;
        }
        if o.eps_grid_step.is_some() {
            self.eps_grid_step = o.eps_grid_step;
        }
    }

    /// Defaults for `experiment`, then a key-value config file, then `overrides`.
    pub fn load(
        experiment: ExperimentKind,
        file: Option<&Path>,
        overrides: &ConfigOverrides,
    ) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            let from_file = ConfigOverrides::from_toml(&text)?;
            if let Some(kind) = from_file.experiment {
                if kind != experiment {
                    return Err(Error::InvalidConfig(vec![format!(
                        "config file is for '{kind}' but the '{experiment}' subcommand was run"
                    )]));
                }
            }
            cfg.apply(&from_file);
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn profile(&self) -> ChannelProfile {
        ChannelProfile {
            paths: self.paths,
            max_delay: self.max_delay,
            max_doppler: self.max_doppler,
            doppler: self.doppler,
        }
    }

    pub fn c1_value(&self) -> f64 {
        self.c1.unwrap_or_else(|| min_c1(self.n, self.max_doppler))
    }

    pub fn c2_value(&self) -> f64 {
        self.c2.unwrap_or(0.5 / self.n as f64)
    }

    pub fn params(&self, l: usize) -> Result<AfdmParams> {
        AfdmParams::new(self.n, self.c1_value(), self.c2_value(), l)
    }

    pub fn eps_grid_step_value(&self) -> f64 {
        self.eps_grid_step
            .unwrap_or(1.0 / (64.0 * self.n as f64))
    }

    /// Collects every offending field instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n < 4 || self.n % 2 != 0 {
            bad.push(format!("n: must be an even integer >= 4 (got {})", self.n));
        }
        if self.trials == 0 {
            bad.push("trials: must be at least 1".to_string());
        }
        if let Some(c1) = self.c1 {
            if !c1.is_finite() || c1 < 0.0 {
                bad.push(format!("c1: must be finite and non-negative (got {c1})"));
            }
        }
        if let Some(c2) = self.c2 {
            if !c2.is_finite() {
                bad.push(format!("c2: must be finite (got {c2})"));
            }
        }
        if self.l.is_empty() {
            bad.push("l: at least one CPP length is required".to_string());
        }
        for &l in &self.l {
            if l == 0 || l > self.n {
                bad.push(format!("l: {l} outside 1..={}", self.n));
            }
        }
        if self.paths == 0 {
            bad.push("paths: must be at least 1".to_string());
        }
        if !self.max_doppler.is_finite() || self.max_doppler < 0.0 {
            bad.push(format!("max_doppler: must be finite and non-negative (got {})", self.max_doppler));
        }
        if self.channels.is_empty() {
            bad.push("channels: at least one channel is required".to_string());
        }
        if self.channels.contains(&ChannelKind::Doubly) {
            if let Some(&l) = self.l.iter().find(|&&l| l < self.max_delay) {
                bad.push(format!("l: {l} is shorter than max_delay {}", self.max_delay));
            }
            let bound = min_c1(self.n, self.max_doppler);
            if self.c1_value() < bound * (1.0 - 1e-12) {
                bad.push(format!(
                    "c1: {} is below (2*max_doppler+1)/(2n) = {bound}",
                    self.c1_value()
                ));
            }
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            bad.push("snr_db: values must be numbers or +inf".to_string());
        }
        if !(0.0..0.5).contains(&self.eps_spread) {
            bad.push(format!("eps_spread: must lie in [0, 0.5) (got {})", self.eps_spread));
        }
        if let Some(step) = self.eps_grid_step {
            if !(step > 0.0 && step <= 1.0) {
                bad.push(format!("eps_grid_step: must lie in (0, 1] (got {step})"));
            }
        }
        if self.eps.iter().any(|e| !(e.abs() < 0.5)) {
            bad.push("eps: offsets must satisfy |eps| < 1/2".to_string());
        }
        match self.experiment {
            k if k.is_mse() => {
                if self.snr_db.is_empty() {
                    bad.push("snr_db: at least one SNR point is required".to_string());
                }
                if self.estimators.is_empty() {
                    bad.push("estimators: at least one estimator is required".to_string());
                }
                if let Some(&l) = self.l.iter().find(|&&l| l >= self.n) {
                    bad.push(format!("l: {l} leaves no time offsets in [l, n)"));
                }
                if self.bootstrap == 0 {
                    bad.push("bootstrap: must be at least 1".to_string());
                }
            }
            ExperimentKind::CirSweep => {
                if self.eps.is_empty() {
                    bad.push("eps: the CIR sweep needs at least one offset".to_string());
                }
            }
            ExperimentKind::Ber => {
                if self.snr_db.is_empty() {
                    bad.push("snr_db: at least one SNR point is required".to_string());
                }
                if !(self.eps_residual.abs() < 0.5) {
                    bad.push(format!("eps_residual: must satisfy |eps| < 1/2 (got {})", self.eps_residual));
                }
                if !(self.eps_offset.abs() < 0.5) {
                    bad.push(format!("eps_offset: must satisfy |eps| < 1/2 (got {})", self.eps_offset));
                }
                if self.max_trials < self.trials {
                    bad.push(format!(
                        "max_trials: {} is below trials {}",
                        self.max_trials, self.trials
                    ));
                }
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad))
        }
    }
}

/// Optional values layered over [`ExperimentConfig::defaults`]. Field names
/// double as config-file keys.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentKind>,
    pub n: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub l: Option<Vec<usize>>,
    pub snr_db: Option<Vec<f64>>,
    pub channels: Option<Vec<ChannelKind>>,
    pub estimators: Option<Vec<EstimatorKind>>,
    pub paths: Option<usize>,
    pub max_delay: Option<usize>,
    pub max_doppler: Option<f64>,
    pub doppler: Option<DopplerDistribution>,
    pub eps: Option<Vec<f64>>,
    pub eps_spread: Option<f64>,
    pub eps_grid_step: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub bootstrap: Option<usize>,
    pub eps_residual: Option<f64>,
    pub eps_offset: Option<f64>,
    pub constellation: Option<Constellation>,
    pub min_bit_errors: Option<u64>,
    pub max_trials: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Parses `a:step:b` into an inclusive sweep, or a comma-separated list.
/// Each element may be `inf`.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::param(format!("'{s}' is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::param(format!("range '{text}' must be start:step:stop")));
        }
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::param(format!("range '{text}' is empty or malformed")));
        }
        return Ok(sweep(start, step, stop));
    }
    text.split(',').map(parse).collect()
}

/// Integer counterpart of [`parse_f64_list`].
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::param(format!("'{s}' is not a non-negative integer")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::param(format!("range '{text}' must be start:step:stop")));
        }
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step == 0 || stop < start {
            return Err(Error::param(format!("range '{text}' is empty or malformed")));
        }
        return Ok((start..=stop).step_by(step).collect());
    }
    text.split(',').map(parse).collect()
}

/// Comma-separated keywords.
pub fn parse_keyword_list<T: FromStr<Err = Error>>(text: &str) -> Result<Vec<T>> {
    text.split(',').map(|s| s.parse()).collect()
}
