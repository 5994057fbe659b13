//! Closed-form large-array SINR and rate expressions and the
//! complex-multiplication counts of the CP-OFDM and CP-free receivers.

use crate::channel::PdpStats;
use crate::error::{Error, Result};
use crate::freq::CombinerKind;

pub use crate::freq::saturation_sinr;

/// Scalars the closed forms depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub l: usize,
    /// CP length charged against the CP-OFDM rates; defaults to `l`.
    pub l_cp: usize,
    pub q: usize,
    pub noise_variance: f64,
    pub lambda: f64,
    pub tau_av: f64,
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(m: usize, k: usize, n: usize, l: usize, q: usize, noise_variance: f64, lambda: f64, tau_av: f64) -> Result<Self> {
        let p = Self {
            m,
            k,
            n,
            l,
            l_cp: l,
            q,
            noise_variance,
            lambda,
            tau_av,
        };
        p.validate()?;
        Ok(p)
    }

    /// `lambda`, `tau_av`, `N` and `L` from the PDP statistics.
    pub fn from_stats(stats: &PdpStats, m: usize, k: usize, q: usize, noise_variance: f64) -> Result<Self> {
        Self::new(m, k, stats.n, stats.l, q, noise_variance, stats.lambda, stats.tau_av)
    }

    pub fn with_m(self, m: usize) -> Result<Self> {
        let p = Self { m, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_l_cp(self, l_cp: usize) -> Self {
        Self { l_cp, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.n == 0 || self.q == 0 {
            return Err(Error::InvalidParameter(format!(
                "need M, K, N, Q >= 1 (got M={}, K={}, N={}, Q={})",
                self.m, self.k, self.n, self.q
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("lambda = {} outside (0, 1]", self.lambda)));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance {} must be positive", self.noise_variance)));
        }
        Ok(())
    }

    fn cp_factor(&self) -> f64 {
        self.n as f64 / (self.n + self.l_cp) as f64
    }
}

/// `(M + lambda) / (K - lambda + sigma^2)`.
pub fn sinr_tr_mrc(p: &SystemParams) -> f64 {
    (p.m as f64 + p.lambda) / (p.k as f64 - p.lambda + p.noise_variance)
}

/// Large-`M` TR-ZF limit `M / (K (1 - lambda) + sigma^2)`.
pub fn sinr_tr_zf(p: &SystemParams) -> f64 {
    p.m as f64 / (p.k as f64 * (1.0 - p.lambda) + p.noise_variance)
}

pub fn rate_tr_mrc(p: &SystemParams) -> f64 {
    (1.0 + sinr_tr_mrc(p)).log2()
}

pub fn rate_cp_mrc(p: &SystemParams) -> f64 {
    let (m, k) = (p.m as f64, p.k as f64);
    p.cp_factor() * (1.0 + (m - 1.0) / (k - 1.0 + p.noise_variance)).log2()
}

pub fn rate_tr_zf(p: &SystemParams) -> f64 {
    (1.0 + sinr_tr_zf(p)).log2()
}

pub fn rate_cp_zf(p: &SystemParams) -> Result<f64> {
    if p.m <= p.k {
        return Err(Error::InvalidParameter(format!("CP-OFDM ZF rate needs M > K (M={}, K={})", p.m, p.k)));
    }
    Ok(p.cp_factor() * (1.0 + (p.m - p.k) as f64 / p.noise_variance).log2())
}

/// Large-`M` form of [`rate_cp_zf`].
pub fn rate_cp_zf_asym(p: &SystemParams) -> f64 {
    p.cp_factor() * (1.0 + p.m as f64 / p.noise_variance).log2()
}

/// Per-user rates in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub tr_mrc: f64,
    pub cp_mrc: f64,
    pub tr_zf: f64,
    pub cp_zf: f64,
    pub cp_zf_asym: f64,
}

pub fn rates(p: &SystemParams) -> Result<Rates> {
    Ok(Rates {
        tr_mrc: rate_tr_mrc(p),
        cp_mrc: rate_cp_mrc(p),
        tr_zf: rate_tr_zf(p),
        cp_zf: rate_cp_zf(p)?,
        cp_zf_asym: rate_cp_zf_asym(p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Technique {
    Mrc,
    Zf,
    TrCombining,
    ZfPostEq,
}

impl Technique {
    pub fn name(self) -> &'static str {
        match self {
            Technique::Mrc => "MRC",
            Technique::Zf => "ZF",
            Technique::TrCombining => "TR-combining",
            Technique::ZfPostEq => "ZF-post-eq",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostTerm {
    pub label: &'static str,
    pub count: f64,
    /// Proportional to the number of OFDM symbols `Q`.
    pub per_symbol: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TechniqueCost {
    pub technique: Technique,
    pub terms: Vec<CostTerm>,
}

impl TechniqueCost {
    pub fn total(&self) -> f64 {
        self.terms.iter().map(|t| t.count).sum()
    }
}

/// Complex-multiplication counts for one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub parts: Vec<TechniqueCost>,
    /// Fast-convolution block length for the CP-free receivers.
    pub block_len: Option<usize>,
}

impl ComplexityReport {
    pub fn total(&self) -> f64 {
        self.parts.iter().map(TechniqueCost::total).sum()
    }

    pub fn part(&self, technique: Technique) -> Option<&TechniqueCost> {
        self.parts.iter().find(|p| p.technique == technique)
    }

    /// TR-MRC is the TR-combining stage alone.
    pub fn tr_mrc_total(&self) -> Option<f64> {
        self.part(Technique::TrCombining).map(TechniqueCost::total)
    }

    pub fn tr_zf_total(&self) -> Option<f64> {
        Some(self.tr_mrc_total()? + self.part(Technique::ZfPostEq)?.total())
    }
}

fn term(label: &'static str, count: f64, per_symbol: bool) -> CostTerm {
    CostTerm { label, count, per_symbol }
}

/// Frequency-domain MRC or ZF on CP-OFDM: per-antenna FFTs, per-subcarrier
/// combining and, for ZF, the combining matrices.
pub fn complexity_cp_ofdm(p: &SystemParams, kind: CombinerKind) -> Result<ComplexityReport> {
    p.validate()?;
    let (q, m, n, k) = (p.q as f64, p.m as f64, p.n as f64, p.k as f64);
    let mut terms = vec![
        term("FFT", 0.5 * q * m * n * n.log2(), true),
        term("combining", q * m * n * k, true),
    ];
    let technique = match kind {
        CombinerKind::Mrc => Technique::Mrc,
        CombinerKind::Zf => {
            terms.push(term("Gram and product", 1.5 * m * n * k * k, false));
            terms.push(term("inversion", n * k * k * k / 3.0, false));
            Technique::Zf
        }
        CombinerKind::Mmse => {
            return Err(Error::InvalidParameter("complexity is tabulated for MRC and ZF only".into()));
        }
    };
    Ok(ComplexityReport {
        parts: vec![TechniqueCost { technique, terms }],
        block_len: None,
    })
}

/// TR combining by overlap-save with block length `block_len`, followed by
/// the ZF post-equalizer.
pub fn complexity_no_cp(p: &SystemParams, block_len: usize) -> Result<ComplexityReport> {
    p.validate()?;
    if block_len < p.l || block_len == 0 {
        return Err(Error::BlockTooShort {
            block_len,
            kernel_len: p.l,
        });
    }
    let (q, m, n, k) = (p.q as f64, p.m as f64, p.n as f64, p.k as f64);
    let nb = block_len as f64;
    let step = (block_len + 1 - p.l) as f64;
    let nb_fft = nb * nb.log2();
    let tr = TechniqueCost {
        technique: Technique::TrCombining,
        terms: vec![
            term("input FFTs", 0.5 * q * m * n / step * nb_fft, true),
            term("spectral products", q * m * n * k * nb / step, true),
            term("output IFFTs", 0.5 * q * n * k / step * nb_fft, true),
            term("demodulation FFT", 0.5 * q * k * n * n.log2(), true),
        ],
    };
    let pairs = k * (k + 1.0);
    let zf = TechniqueCost {
        technique: Technique::ZfPostEq,
        terms: vec![
            term("equivalent channels", pairs / 2.0 * m * nb, false),
            term("equivalent channel IFFTs", pairs / 4.0 * nb_fft, false),
            term("diagonal FFTs", 0.5 * k * k * n * n.log2(), false),
            term("inversion", n * k * k * k / 3.0, false),
            term("equalization", q * n * k * k, true),
        ],
    };
    Ok(ComplexityReport {
        parts: vec![tr, zf],
        block_len: Some(block_len),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{pdp_stats, PowerDelayProfile};

    fn two_tap(m: usize, k: usize, sigma2: f64) -> SystemParams {
        let pdp = PowerDelayProfile::from_powers("p", &[0.5, 0.5], 1.0).unwrap();
        SystemParams::from_stats(&pdp_stats(&pdp, 4).unwrap(), m, k, 1, sigma2).unwrap()
    }

    #[test]
    fn sinr_hand_values() {
        let p = two_tap(100, 10, 0.1);
        assert!((p.lambda - 0.78125).abs() < 1e-15);
        assert!((sinr_tr_mrc(&p) - 100.78125 / 9.31875).abs() < 1e-12);
        assert!((sinr_tr_zf(&p) - 100.0 / 2.2875).abs() < 1e-12);
        let one = SystemParams::new(100, 10, 64, 1, 1, 0.1, 1.0, 0.0).unwrap();
        assert!((sinr_tr_mrc(&one) - 101.0 / 9.1).abs() < 1e-12);
        assert!((sinr_tr_zf(&one) - 1000.0).abs() < 1e-9);
        let big = two_tap(10_000, 10, 0.1);
        let ratio = sinr_tr_mrc(&big.with_m(20_000).unwrap()) / sinr_tr_mrc(&big);
        assert!((1.9..=2.0).contains(&ratio));
    }

    #[test]
    fn zf_dominates_mrc_once_interference_matters() {
        for m in [1, 10, 100, 1000] {
            for k in [1, 2, 10, 40] {
                for sigma2 in [1e-3, 0.1, 1.0, 10.0] {
                    for lambda in [0.05, 0.5, 0.78125, 1.0] {
                        let p = SystemParams::new(m, k, 64, 4, 1, sigma2, lambda, 0.5).unwrap();
                        // cross-multiplying leaves M (K - 1) >= K (1 - lambda) + sigma^2
                        let holds = (m * (k - 1)) as f64 >= k as f64 * (1.0 - lambda) + sigma2;
                        let (zf, mrc) = (sinr_tr_zf(&p), sinr_tr_mrc(&p));
                        if holds {
                            assert!(zf >= mrc * (1.0 - 1e-12), "{m} {k} {sigma2} {lambda}");
                        } else {
                            assert!(zf < mrc * (1.0 + 1e-12), "{m} {k} {sigma2} {lambda}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rate_hand_values() {
        let r = rates(&two_tap(100, 10, 0.1)).unwrap();
        assert!((r.tr_mrc - (1.0 + 100.78125 / 9.31875f64).log2()).abs() < 1e-12);
        assert!((r.tr_mrc - 3.563).abs() < 5e-4);
        let p = SystemParams::new(100, 10, 512, 40, 1, 0.1, 0.9, 1.0).unwrap();
        let want = 512.0 / 552.0 * (1.0 + 99.0 / 9.1f64).log2();
        assert!((rate_cp_mrc(&p) - want).abs() < 1e-12);
        assert!((want - 3.312).abs() < 5e-4);
        // minimal CP
        let short = p.with_l_cp(39);
        assert!((rate_cp_mrc(&short) - 512.0 / 551.0 * (1.0 + 99.0 / 9.1f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn rates_vanish_with_noise_and_reject_small_arrays() {
        let r = rates(&two_tap(100, 10, 1e6)).unwrap();
        for v in [r.tr_mrc, r.cp_mrc, r.tr_zf, r.cp_zf, r.cp_zf_asym] {
            assert!((0.0..1e-3).contains(&v));
        }
        assert!(rates(&two_tap(10, 10, 0.1)).is_err());
        assert!(rate_cp_zf(&two_tap(11, 10, 0.1)).is_ok());
    }

    #[test]
    fn rates_are_monotone() {
        let sigmas = [0.01, 0.1, 1.0, 10.0];
        for &s in &sigmas {
            let mut last: Option<Rates> = None;
            for m in (20..=500).step_by(20) {
                let r = rates(&two_tap(m, 10, s)).unwrap();
                if let Some(prev) = last {
                    assert!(r.tr_mrc >= prev.tr_mrc && r.cp_mrc >= prev.cp_mrc && r.tr_zf >= prev.tr_zf);
                    assert!(r.cp_zf >= prev.cp_zf && r.cp_zf_asym >= prev.cp_zf_asym);
                }
                last = Some(r);
            }
        }
        for m in [20, 100, 500] {
            let all: Vec<Rates> = sigmas.iter().map(|&s| rates(&two_tap(m, 10, s)).unwrap()).collect();
            for w in all.windows(2) {
                assert!(w[1].tr_mrc <= w[0].tr_mrc && w[1].cp_mrc <= w[0].cp_mrc && w[1].tr_zf <= w[0].tr_zf);
                assert!(w[1].cp_zf <= w[0].cp_zf && w[1].cp_zf_asym <= w[0].cp_zf_asym);
            }
        }
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(SystemParams::new(0, 10, 64, 4, 1, 0.1, 0.5, 1.0).is_err());
        assert!(SystemParams::new(10, 0, 64, 4, 1, 0.1, 0.5, 1.0).is_err());
        assert!(SystemParams::new(10, 1, 64, 4, 1, 0.0, 0.5, 1.0).is_err());
        assert!(SystemParams::new(10, 1, 64, 4, 1, 0.1, 0.0, 1.0).is_err());
        assert!(SystemParams::new(10, 1, 64, 4, 1, 0.1, 1.5, 1.0).is_err());
    }

    fn fig2(m: usize, k: usize, q: usize) -> SystemParams {
        SystemParams::new(m, k, 512, 40, q, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn cp_ofdm_counts() {
        let mrc = complexity_cp_ofdm(&fig2(200, 10, 10), CombinerKind::Mrc).unwrap();
        assert_eq!(mrc.parts[0].terms[0].count, 4_608_000.0);
        assert_eq!(mrc.parts[0].terms[1].count, 10_240_000.0);
        assert_eq!(mrc.total(), 14_848_000.0);
        let zf = complexity_cp_ofdm(&fig2(200, 10, 10), CombinerKind::Zf).unwrap();
        let extra = 1.5 * 200.0 * 512.0 * 100.0 + 512.0 * 1000.0 / 3.0;
        assert!((zf.total() - mrc.total() - extra).abs() < 1e-6);
        assert!(complexity_cp_ofdm(&fig2(200, 10, 10), CombinerKind::Mmse).is_err());
    }

    #[test]
    fn no_cp_counts() {
        let p = fig2(200, 10, 10);
        let r = complexity_no_cp(&p, 256).unwrap();
        let s = 217.0;
        let tr = 0.5 * 10.0 * 200.0 * 512.0 / s * 2048.0 + 10.0 * 200.0 * 512.0 * 10.0 * 256.0 / s + 0.5 * 10.0 * 512.0 * 10.0 / s * 2048.0 + 0.5 * 10.0 * 10.0 * 512.0 * 9.0;
        let zf = 55.0 * 200.0 * 256.0 + 27.5 * 2048.0 + 0.5 * 100.0 * 512.0 * 9.0 + 512.0 * 1000.0 / 3.0 + 10.0 * 512.0 * 100.0;
        assert!((r.tr_mrc_total().unwrap() - tr).abs() < 1e-6);
        assert!((r.tr_zf_total().unwrap() - tr - zf).abs() < 1e-6);
        for part in &r.parts {
            assert!((part.total() - part.terms.iter().map(|t| t.count).sum::<f64>()).abs() < 1e-9);
            assert!(part.terms.iter().all(|t| t.count >= 0.0));
        }
        let zf_cp = complexity_cp_ofdm(&p, CombinerKind::Zf).unwrap().total();
        let mrc_cp = complexity_cp_ofdm(&p, CombinerKind::Mrc).unwrap().total();
        assert!(r.tr_zf_total().unwrap() < zf_cp);
        assert!(r.tr_mrc_total().unwrap() < 2.0 * mrc_cp && mrc_cp < 2.0 * r.tr_mrc_total().unwrap());
        assert!(complexity_no_cp(&p, 39).is_err());
        assert!(complexity_no_cp(&p, 40).is_ok());
    }

    #[test]
    fn doubling_q_scales_symbol_terms_only() {
        let a = complexity_no_cp(&fig2(100, 8, 10), 256).unwrap();
        let b = complexity_no_cp(&fig2(100, 8, 20), 256).unwrap();
        let c = complexity_cp_ofdm(&fig2(100, 8, 10), CombinerKind::Zf).unwrap();
        let d = complexity_cp_ofdm(&fig2(100, 8, 20), CombinerKind::Zf).unwrap();
        for (x, y) in a.parts.iter().zip(&b.parts).chain(c.parts.iter().zip(&d.parts)) {
            for (s, t) in x.terms.iter().zip(&y.terms) {
                let want = if s.per_symbol { 2.0 * s.count } else { s.count };
                assert!((t.count - want).abs() < 1e-9 * want.max(1.0), "{}", s.label);
            }
        }
    }
}
