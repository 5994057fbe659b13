//! Link parameters shared by the Monte Carlo SINR estimators and the
//! power breakdown they return.

use crate::error::{Error, Result};
use crate::ofdm::{full_mask, Constellation};

/// Everything a single channel realization needs apart from the PDP.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub noise_variance: f64,
    pub active_mask: Vec<bool>,
    /// Symbols measured per realization. Each one has a data-carrying
    /// predecessor, so the frame holds `data_symbols + 1` symbols after the
    /// silent lead-in.
    pub data_symbols: usize,
    pub constellation: Constellation,
    /// Overlap-save block length for time-reversal filtering.
    pub block_len: usize,
}

impl LinkParams {
    /// All subcarriers active, eight measured symbols, Gaussian data.
    pub fn new(n: usize, m: usize, k: usize, noise_variance: f64) -> Self {
        Self {
            n,
            m,
            k,
            noise_variance,
            active_mask: full_mask(n),
            data_symbols: 8,
            constellation: Constellation::Gaussian,
            block_len: 256,
        }
    }

    pub fn with_snr_db(n: usize, m: usize, k: usize, snr_db: f64) -> Self {
        Self::new(n, m, k, 10f64.powf(-snr_db / 10.0))
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::InvalidParameter(format!(
                "need N, M, K >= 1 (got N={}, M={}, K={})",
                self.n, self.m, self.k
            )));
        }
        if self.n < l {
            return Err(Error::DftTooShort { n: self.n, l });
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::NegativeVariance(self.noise_variance));
        }
        if self.active_mask.len() != self.n {
            return Err(Error::Dimension(format!(
                "mask length {} for N = {}",
                self.active_mask.len(),
                self.n
            )));
        }
        if !self.active_mask.iter().any(|&a| a) {
            return Err(Error::InvalidParameter("no active subcarriers".into()));
        }
        if self.data_symbols == 0 {
            return Err(Error::InvalidParameter("data_symbols must be >= 1".into()));
        }
        Ok(())
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.n).filter(|&p| self.active_mask[p]).collect()
    }
}

/// Mean per-(terminal, subcarrier) powers of one channel realization.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComponentPowers {
    pub desired: f64,
    pub ici: f64,
    pub isi: f64,
    pub mui: f64,
    pub noise: f64,
}

impl ComponentPowers {
    pub fn distortion(&self) -> f64 {
        self.ici + self.isi + self.mui + self.noise
    }
}

/// Powers averaged over realizations and the resulting SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub desired: f64,
    pub ici: f64,
    pub isi: f64,
    pub mui: f64,
    pub noise: f64,
    /// Ratio of the averaged desired power to the averaged distortion.
    pub sinr: f64,
    pub sinr_db: f64,
    /// Delta-method standard error of `sinr_db`; NaN with one realization.
    pub sinr_db_stderr: f64,
    pub trials: usize,
}

impl SinrBreakdown {
    pub fn from_realizations(parts: &[ComponentPowers]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("no realizations".into()));
        }
        let n = parts.len() as f64;
        let mean = |f: fn(&ComponentPowers) -> f64| parts.iter().map(f).sum::<f64>() / n;
        let desired = mean(|c| c.desired);
        let ici = mean(|c| c.ici);
        let isi = mean(|c| c.isi);
        let mui = mean(|c| c.mui);
        let noise = mean(|c| c.noise);
        let dist = ici + isi + mui + noise;
        let sinr = desired / dist;

        let sinr_db_stderr = if parts.len() > 1 {
            let var = parts
                .iter()
                .map(|c| (c.desired - sinr * c.distortion()).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            let se = (var / n).sqrt() / dist;
            10.0 / std::f64::consts::LN_10 * se / sinr
        } else {
            f64::NAN
        };

        Ok(Self {
            desired,
            ici,
            isi,
            mui,
            noise,
            sinr,
            sinr_db: 10.0 * sinr.log10(),
            sinr_db_stderr,
            trials: parts.len(),
        })
    }
}
