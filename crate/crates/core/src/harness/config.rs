//! Flat `key = value` experiment descriptions.
//!
//! ```text
//! # comment
//! experiment = sat
//! kind = freq-sinr
//! profile = ETU
//! m = 50, 100, 200
//! snr_db = 10
//! ```
//!
//! Lists are comma separated. Command-line overrides go through
//! [`ExperimentConfig::set`] after the file is read, so they win.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{load_pdp_file, pdp_from_profile, PowerDelayProfile, LTE_5MHZ_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::freq::CombinerKind;
use crate::tr::TrMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Multiplication counts of the four receivers.
    Complexity,
    /// Monte Carlo SINR of the frequency-domain combiners.
    FreqSinr,
    /// Monte Carlo SINR of TR-MRC and TR-ZF next to their closed forms.
    TrSinr,
    /// Closed-form per-user rates with and without CP.
    Rates,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Complexity => "complexity",
            ExperimentKind::FreqSinr => "freq-sinr",
            ExperimentKind::TrSinr => "tr-sinr",
            ExperimentKind::Rates => "rates",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, ExperimentKind::FreqSinr | ExperimentKind::TrSinr)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "complexity" => Ok(Self::Complexity),
            "freq-sinr" => Ok(Self::FreqSinr),
            "tr-sinr" => Ok(Self::TrSinr),
            "rates" => Ok(Self::Rates),
            other => Err(Error::Config(format!("unknown experiment kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub kind: ExperimentKind,
    /// `ETU`, `TDL-A-<rms>ns`, or a label for `pdp_file`.
    pub profile: String,
    pub pdp_file: Option<PathBuf>,
    pub sample_rate: f64,
    pub n: usize,
    /// Active subcarriers, centred around DC; `None` means all `N`.
    pub active_count: Option<usize>,
    pub m_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub q: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Combiner names; empty selects every method of the kind.
    pub methods: Vec<String>,
    /// CP length charged to the CP-OFDM rates; `None` uses `L`.
    pub cp_len: Option<usize>,
    /// Overlap-save block length of the TR receivers.
    pub block_len: usize,
    pub data_symbols: usize,
    /// Channel length for the complexity counts; `None` takes the profile's.
    pub channel_len: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "custom".into(),
            kind: ExperimentKind::FreqSinr,
            profile: "ETU".into(),
            pdp_file: None,
            sample_rate: LTE_5MHZ_SAMPLE_RATE,
            n: 512,
            active_count: None,
            m_list: vec![100],
            k_list: vec![10],
            q: 10,
            snr_db: vec![10.0],
            trials: 200,
            master_seed: 1,
            methods: Vec::new(),
            cp_len: None,
            block_len: 256,
            data_symbols: 8,
            channel_len: None,
            out: None,
        }
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("'{key}' needs at least one value")));
    }
    Ok(items)
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim().to_ascii_lowercase().as_str() {
        "auto" | "all" | "" => Ok(None),
        _ => parse_one(key, value).map(Some),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "experiment" => self.experiment = value.to_string(),
            "kind" => self.kind = value.parse()?,
            "profile" => self.profile = value.to_string(),
            "pdp_file" => self.pdp_file = Some(PathBuf::from(value)),
            "sample_rate" => self.sample_rate = parse_one(&key, value)?,
            "n" => self.n = parse_one(&key, value)?,
            "active" | "active_count" => self.active_count = parse_auto(&key, value)?,
            "m" => self.m_list = parse_list(&key, value)?,
            "k" => self.k_list = parse_list(&key, value)?,
            "q" => self.q = parse_one(&key, value)?,
            "snr_db" => self.snr_db = parse_list(&key, value)?,
            "trials" => self.trials = parse_one(&key, value)?,
            "seed" => self.master_seed = parse_one(&key, value)?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("all"))
                    .collect()
            }
            "cp_len" => self.cp_len = parse_auto(&key, value)?,
            "block_len" => self.block_len = parse_one(&key, value)?,
            "data_symbols" => self.data_symbols = parse_one(&key, value)?,
            "channel_len" => self.channel_len = parse_auto(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn pdp(&self) -> Result<PowerDelayProfile> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::Config(format!("sample_rate {} must be positive", self.sample_rate)));
        }
        match &self.pdp_file {
            Some(path) => load_pdp_file(path, self.sample_rate),
            None => pdp_from_profile(&self.profile, self.sample_rate),
        }
    }

    pub fn combiners(&self) -> Result<Vec<CombinerKind>> {
        if self.methods.is_empty() {
            return Ok(CombinerKind::ALL.to_vec());
        }
        self.methods.iter().map(|s| s.parse()).collect()
    }

    pub fn tr_modes(&self) -> Result<Vec<TrMode>> {
        if self.methods.is_empty() {
            return Ok(TrMode::ALL.to_vec());
        }
        self.methods.iter().map(|s| s.parse()).collect()
    }

    /// Checks everything the sweep will need so that a bad configuration
    /// fails before any computation.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |msg: String| Err(Error::Config(msg));
        if self.experiment.is_empty() || self.experiment.contains([',', '"', '\n']) {
            return cfg_err(format!("experiment id '{}' must be non-empty without commas or quotes", self.experiment));
        }
        if self.n == 0 || self.q == 0 {
            return cfg_err("n and q must be >= 1".into());
        }
        if self.m_list.contains(&0) || self.k_list.contains(&0) {
            return cfg_err("every M and K must be >= 1".into());
        }
        if self.m_list.is_empty() || self.k_list.is_empty() || self.snr_db.is_empty() {
            return cfg_err("m, k and snr_db need at least one value".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return cfg_err("snr_db values must be finite".into());
        }
        if let Some(a) = self.active_count {
            if a == 0 || a > self.n {
                return cfg_err(format!("active count {a} outside 1..={}", self.n));
            }
        }
        let l = match (self.kind, self.channel_len) {
            (ExperimentKind::Complexity, Some(l)) => l,
            _ => self.pdp().map_err(|e| Error::Config(e.to_string()))?.len(),
        };
        match self.kind {
            ExperimentKind::Complexity => {
                if self.block_len < l {
                    return cfg_err(format!("block_len {} shorter than the channel ({l})", self.block_len));
                }
            }
            ExperimentKind::Rates => {
                if self.n < l {
                    return cfg_err(format!("N = {} shorter than the channel ({l})", self.n));
                }
            }
            ExperimentKind::FreqSinr => {
                if self.trials == 0 || self.data_symbols == 0 {
                    return cfg_err("trials and data_symbols must be >= 1".into());
                }
                if self.n < l {
                    return cfg_err(format!("N = {} shorter than the channel ({l})", self.n));
                }
                self.combiners().map_err(|e| Error::Config(e.to_string()))?;
            }
            ExperimentKind::TrSinr => {
                if self.trials == 0 {
                    return cfg_err("trials must be >= 1".into());
                }
                if self.n < 2 * l - 1 {
                    return cfg_err(format!("TR receivers need N >= 2L - 1 = {}", 2 * l - 1));
                }
                self.tr_modes().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}
