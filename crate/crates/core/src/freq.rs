//! Per-subcarrier MRC / ZF / MMSE combining on CP-free OFDM, the large-array
//! interference coefficients and the SINR ceiling they imply.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::channel::{draw_cir, CirSet, PdpStats, PowerDelayProfile};
use crate::dsp::{Dft, RngStream, C64, ZERO};
use crate::error::{Error, Result};
use crate::linalg::checked_inverse;
use crate::measure::{ComponentPowers, LinkParams, SinrBreakdown};
use crate::ofdm::{full_mask, modulate, OfdmFrame};

/// `N`-point frequency responses `hbar[m, k, p] = sum_l h_{m,k}(l) e^{-j 2 pi l p / N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannel {
    coeffs: Array3<C64>,
}

impl FreqChannel {
    pub fn coeffs(&self) -> &Array3<C64> {
        &self.coeffs
    }

    pub fn at(&self, m: usize, k: usize, p: usize) -> C64 {
        self.coeffs[(m, k, p)]
    }

    pub fn antennas(&self) -> usize {
        self.coeffs.dim().0
    }

    pub fn terminals(&self) -> usize {
        self.coeffs.dim().1
    }

    pub fn n(&self) -> usize {
        self.coeffs.dim().2
    }

    /// `M x K` channel matrix of subcarrier `p`.
    pub fn matrix(&self, p: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.antennas(), self.terminals(), |m, k| self.coeffs[(m, k, p)])
    }
}

pub fn freq_channel(cir: &CirSet, n: usize) -> Result<FreqChannel> {
    if n < cir.len() {
        return Err(Error::DftTooShort { n, l: cir.len() });
    }
    let dft = Dft::new(n)?;
    let (m, k) = (cir.antennas(), cir.terminals());
    let mut coeffs = Array3::from_elem((m, k, n), ZERO);
    let mut buf = vec![ZERO; n];
    for mm in 0..m {
        for kk in 0..k {
            buf.fill(ZERO);
            buf[..cir.len()].copy_from_slice(cir.response(mm, kk));
            dft.forward_unscaled(&mut buf);
            for (p, v) in buf.iter().enumerate() {
                coeffs[(mm, kk, p)] = *v;
            }
        }
    }
    Ok(FreqChannel { coeffs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CombinerKind {
    Mrc,
    Zf,
    Mmse,
}

impl CombinerKind {
    pub const ALL: [CombinerKind; 3] = [CombinerKind::Mrc, CombinerKind::Zf, CombinerKind::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            CombinerKind::Mrc => "MRC",
            CombinerKind::Zf => "ZF",
            CombinerKind::Mmse => "MMSE",
        }
    }
}

impl fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MRC" => Ok(Self::Mrc),
            "ZF" => Ok(Self::Zf),
            "MMSE" => Ok(Self::Mmse),
            other => Err(Error::InvalidParameter(format!("unknown combiner '{other}'"))),
        }
    }
}

/// Combining weights `w[p, m, k]`; the detector output is `W_p^H rbar(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerBank {
    weights: Array3<C64>,
    kind: CombinerKind,
    cond: Vec<f64>,
}

impl CombinerBank {
    pub fn kind(&self) -> CombinerKind {
        self.kind
    }

    pub fn weights(&self) -> &Array3<C64> {
        &self.weights
    }

    pub fn weight(&self, p: usize, m: usize, k: usize) -> C64 {
        self.weights[(p, m, k)]
    }

    /// `M x K` weight matrix of subcarrier `p`.
    pub fn matrix(&self, p: usize) -> DMatrix<C64> {
        let (_, m, k) = self.weights.dim();
        DMatrix::from_fn(m, k, |a, b| self.weights[(p, a, b)])
    }

    /// 1-norm condition number of the matrix inverted on subcarrier `p`
    /// (NaN where nothing was inverted).
    pub fn condition(&self, p: usize) -> f64 {
        self.cond[p]
    }
}

pub fn build_combiner(fc: &FreqChannel, kind: CombinerKind, noise_variance: f64) -> Result<CombinerBank> {
    build_combiner_masked(fc, kind, noise_variance, &full_mask(fc.n()))
}

/// Like [`build_combiner`] but only fills the subcarriers set in `mask`;
/// the others keep zero weights.
pub fn build_combiner_masked(
    fc: &FreqChannel,
    kind: CombinerKind,
    noise_variance: f64,
    mask: &[bool],
) -> Result<CombinerBank> {
    let (m, k, n) = fc.coeffs.dim();
    if mask.len() != n {
        return Err(Error::Dimension(format!("mask length {} for N = {n}", mask.len())));
    }
    match kind {
        CombinerKind::Zf if m < k => {
            return Err(Error::Dimension(format!("ZF needs M >= K (M={m}, K={k})")));
        }
        CombinerKind::Mmse if !(noise_variance > 0.0 && noise_variance.is_finite()) => {
            return Err(Error::InvalidParameter(format!("MMSE needs noise variance > 0, got {noise_variance}")));
        }
        _ => {}
    }
    let mut weights = Array3::from_elem((n, m, k), ZERO);
    let mut cond = vec![f64::NAN; n];
    for p in (0..n).filter(|&p| mask[p]) {
        let h = fc.matrix(p);
        let gram = h.adjoint() * &h;
        let w = match kind {
            CombinerKind::Mrc => {
                let d: Vec<f64> = (0..k).map(|j| gram[(j, j)].re).collect();
                let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
                if !(lo > 0.0) || hi / lo > crate::linalg::COND_LIMIT {
                    return Err(Error::IllConditioned { subcarrier: p, cond: hi / lo });
                }
                cond[p] = hi / lo;
                let mut w = h;
                for (j, mut col) in w.column_iter_mut().enumerate() {
                    col /= C64::new(d[j], 0.0);
                }
                w
            }
            CombinerKind::Zf | CombinerKind::Mmse => {
                let mut g = gram;
                if kind == CombinerKind::Mmse {
                    for j in 0..k {
                        g[(j, j)] += noise_variance;
                    }
                }
                let (inv, c) = checked_inverse(&g, p)?;
                cond[p] = c;
                h * inv
            }
        };
        for a in 0..m {
            for b in 0..k {
                weights[(p, a, b)] = w[(a, b)];
            }
        }
    }
    Ok(CombinerBank { weights, kind, cond })
}

/// `dhat[k, p] = sum_m conj(w[p, m, k]) rbar[m, p]` for one symbol.
pub fn detect(bank: &CombinerBank, rbar: &Array2<C64>) -> Result<Array2<C64>> {
    let (n, m, k) = bank.weights.dim();
    if rbar.dim() != (m, n) {
        return Err(Error::Dimension(format!(
            "received grid {:?} does not match bank ({m} antennas, {n} subcarriers)",
            rbar.dim()
        )));
    }
    let mut out = Array2::from_elem((k, n), ZERO);
    for p in 0..n {
        for a in 0..m {
            let r = rbar[(a, p)];
            for b in 0..k {
                out[(b, p)] += bank.weights[(p, a, b)].conj() * r;
            }
        }
    }
    Ok(out)
}

/// Large-array limits of the per-subcarrier coupling coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymCoeffs {
    /// Current-symbol coupling from subcarrier `p + offset`; entry 0 is unused (zero).
    pub ici: Vec<C64>,
    /// Previous-symbol coupling on the same subcarrier.
    pub isi_diag: C64,
    /// Desired-signal gain.
    pub sig: C64,
}

impl AsymCoeffs {
    /// Previous-symbol coupling from subcarrier `p + offset`, `offset != 0`.
    pub fn isi(&self, offset: usize) -> C64 {
        -self.ici[offset]
    }
}

pub fn asym_coeffs(stats: &PdpStats) -> AsymCoeffs {
    let n = stats.n;
    let nf = n as f64;
    let mut ici = vec![ZERO; n];
    for (eta, slot) in ici.iter_mut().enumerate().skip(1) {
        let den = (C64::new(1.0, 0.0) - C64::from_polar(1.0, 2.0 * PI * eta as f64 / nf)) * nf;
        *slot = (C64::new(1.0, 0.0) - stats.rho_bar[eta]) / den;
    }
    AsymCoeffs {
        ici,
        isi_diag: C64::new(stats.tau_av / nf, 0.0),
        sig: C64::new(1.0 - stats.tau_av / nf, 0.0),
    }
}

/// SINR ceiling of frequency-domain combining without CP as the array grows.
/// Infinite for a single-tap channel.
pub fn saturation_sinr(stats: &PdpStats) -> f64 {
    if stats.l == 1 {
        return f64::INFINITY;
    }
    let nf = stats.n as f64;
    let r = stats.tau_av / nf;
    let tail: f64 = (1..stats.n)
        .map(|eta| {
            let s = (PI * eta as f64 / nf).sin();
            (C64::new(1.0, 0.0) - stats.rho_bar[eta]).norm_sqr() / (2.0 * nf * nf * s * s)
        })
        .sum();
    let den = r * r + tail;
    if den == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - r).powi(2) / den
    }
}

/// Exact coupling of one effective response `y(l)` (combiner applied to a
/// terminal's channel) into subcarrier `p`, with unit-power data on the
/// subcarriers set in `mask`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    /// Gain on the same subcarrier of the same symbol.
    pub diag_curr: C64,
    /// Gain on the same subcarrier of the previous symbol.
    pub diag_prev: C64,
    /// Power leaking from other subcarriers of the same symbol.
    pub ici: f64,
    /// Power from all subcarriers of the previous symbol.
    pub isi: f64,
}

/// `Y(q) = sum_l y(l) e^{-j 2 pi l q / N}` collapses every coupling
/// coefficient to `(Y(p) - Y(q)) / (N (1 - e^{-j 2 pi (p - q) / N}))`, negated
/// for the previous symbol.
pub fn coupling(y: &[C64], p: usize, mask: &[bool], dft: &Dft, buf: &mut Vec<C64>) -> Coupling {
    let n = dft.len();
    let nf = n as f64;
    buf.clear();
    buf.resize(n, ZERO);
    buf[..y.len()].copy_from_slice(y);
    dft.forward_unscaled(buf);
    let s1: C64 = y
        .iter()
        .enumerate()
        .map(|(l, v)| v * C64::from_polar(l as f64, -2.0 * PI * ((l * p) % n) as f64 / nf))
        .sum();
    let diag_prev = s1 / nf;
    let diag_curr = buf[p] - diag_prev;
    let mut ici = 0.0;
    for q in (0..n).filter(|&q| mask[q] && q != p) {
        let s = (PI * (p as f64 - q as f64) / nf).sin();
        ici += (buf[p] - buf[q]).norm_sqr() / (4.0 * nf * nf * s * s);
    }
    let isi = ici + if mask[p] { diag_prev.norm_sqr() } else { 0.0 };
    Coupling {
        diag_curr,
        diag_prev,
        ici,
        isi,
    }
}

/// `y[l] = sum_m conj(w[p, m, k]) h_{m, j}(l)`.
fn effective_response(bank: &CombinerBank, cir: &CirSet, p: usize, k: usize, j: usize, out: &mut [C64]) {
    out.fill(ZERO);
    for m in 0..cir.antennas() {
        let w = bank.weights[(p, m, k)].conj();
        for (o, h) in out.iter_mut().zip(cir.response(m, j)) {
            *o += w * h;
        }
    }
}

fn weight_norm_sqr(bank: &CombinerBank, p: usize, k: usize) -> f64 {
    (0..bank.weights.dim().1).map(|m| bank.weights[(p, m, k)].norm_sqr()).sum()
}

/// Noise-free DFT of received symbol `i` at every antenna, `(M, N)`, built
/// from the transmitted symbols: circular convolution on the diagonal plus
/// a correction for the missing cyclic extension. Symbol 0 sees a silent
/// predecessor. Equivalent to demodulating the convolved time signal.
pub fn symbol_spectra(cir: &CirSet, fc: &FreqChannel, frame: &OfdmFrame, i: usize) -> Result<Array2<C64>> {
    let n = frame.n();
    let l = cir.len();
    if frame.cp_len() != 0 {
        return Err(Error::InvalidParameter("symbol spectra model the CP-free link".into()));
    }
    if fc.n() != n || frame.terminals() != cir.terminals() || fc.antennas() != cir.antennas() {
        return Err(Error::Dimension("frame, channel and frequency response disagree".into()));
    }
    if i >= frame.symbols() {
        return Err(Error::SymbolOutOfRange {
            index: i,
            available: frame.symbols(),
        });
    }
    let dft = Dft::new(n)?;
    let k = frame.terminals();
    // diff_j(t) = x_{j,i-1}(t) - x_{j,i}(t) on the last L-1 samples
    let diffs: Vec<Vec<C64>> = (0..k)
        .map(|j| {
            let cur = frame.symbol_samples(j, i);
            (n + 1 - l..n)
                .map(|t| {
                    let prev = if i == 0 { ZERO } else { frame.symbol_samples(j, i - 1)[t] };
                    prev - cur[t]
                })
                .collect()
        })
        .collect();
    let data = frame.data();
    let mut out = Array2::from_elem((cir.antennas(), n), ZERO);
    let mut e = vec![ZERO; n];
    for m in 0..cir.antennas() {
        e.fill(ZERO);
        for (j, diff) in diffs.iter().enumerate() {
            let h = cir.response(m, j);
            for (t, slot) in e.iter_mut().enumerate().take(l.saturating_sub(1)) {
                // x index N + t - lag maps to diff index t + (L - 1) - lag
                for lag in t + 1..l {
                    *slot += h[lag] * diff[t + l - 1 - lag];
                }
            }
        }
        dft.forward(&mut e);
        for p in 0..n {
            let mut v = e[p];
            for j in 0..k {
                v += fc.coeffs[(m, j, p)] * data[(j, i, p)];
            }
            out[(m, p)] = v;
        }
    }
    Ok(out)
}

/// Exact powers for one realization, every coupling enumerated. Cost grows
/// as `K^2 N^2`; meant for small instances and cross-checks.
pub fn freq_powers_exact(cir: &CirSet, bank: &CombinerBank, mask: &[bool], noise_variance: f64) -> Result<ComponentPowers> {
    let (n, _, k) = bank.weights.dim();
    let dft = Dft::new(n)?;
    let mut buf = Vec::with_capacity(n);
    let mut y = vec![ZERO; cir.len()];
    let mut acc = ComponentPowers::default();
    let mut count = 0.0;
    for p in (0..n).filter(|&p| mask[p]) {
        for kk in 0..k {
            for j in 0..k {
                effective_response(bank, cir, p, kk, j, &mut y);
                let c = coupling(&y, p, mask, &dft, &mut buf);
                if j == kk {
                    acc.desired += c.diag_curr.norm_sqr();
                    acc.ici += c.ici;
                    acc.isi += c.isi;
                } else {
                    acc.mui += c.diag_curr.norm_sqr() + c.ici + c.isi;
                }
            }
            acc.noise += noise_variance * weight_norm_sqr(bank, p, kk);
            count += 1.0;
        }
    }
    Ok(scale(acc, 1.0 / count))
}

fn scale(c: ComponentPowers, s: f64) -> ComponentPowers {
    ComponentPowers {
        desired: c.desired * s,
        ici: c.ici * s,
        isi: c.isi * s,
        mui: c.mui * s,
        noise: c.noise * s,
    }
}

/// One channel realization measured for several combiners. Desired gain,
/// own-terminal ICI/ISI and noise are exact given the channel; multiuser
/// interference is the simulated residual `|dhat - c d|^2` over
/// `data_symbols` symbols minus the exact own-terminal part.
pub fn freq_realization(
    pdp: &PowerDelayProfile,
    params: &LinkParams,
    kinds: &[CombinerKind],
    rng: &mut RngStream,
) -> Result<Vec<ComponentPowers>> {
    params.validate(pdp.len())?;
    let (n, k) = (params.n, params.k);
    let cir = draw_cir(rng, pdp, params.m, k)?;
    let frame = modulate(
        rng,
        k,
        params.data_symbols + 1,
        n,
        params.constellation,
        &params.active_mask,
        0,
    )?;
    let fc = freq_channel(&cir, n)?;
    let spectra: Vec<Array2<C64>> = (1..=params.data_symbols)
        .map(|i| symbol_spectra(&cir, &fc, &frame, i))
        .collect::<Result<_>>()?;
    let dft = Dft::new(n)?;
    let active = params.active();
    let mut buf = Vec::with_capacity(n);
    let mut y = vec![ZERO; cir.len()];

    kinds
        .iter()
        .map(|&kind| {
            let bank = build_combiner_masked(&fc, kind, params.noise_variance, &params.active_mask)?;
            let mut acc = ComponentPowers::default();
            let mut residual = 0.0;
            for &p in &active {
                for kk in 0..k {
                    effective_response(&bank, &cir, p, kk, kk, &mut y);
                    let c = coupling(&y, p, &params.active_mask, &dft, &mut buf);
                    acc.desired += c.diag_curr.norm_sqr();
                    acc.ici += c.ici;
                    acc.isi += c.isi;
                    acc.noise += params.noise_variance * weight_norm_sqr(&bank, p, kk);
                    for (s, r) in spectra.iter().enumerate() {
                        let mut dhat = ZERO;
                        for m in 0..params.m {
                            dhat += bank.weights[(p, m, kk)].conj() * r[(m, p)];
                        }
                        residual += (dhat - c.diag_curr * frame.data()[(kk, s + 1, p)]).norm_sqr();
                    }
                }
            }
            acc.mui = residual / params.data_symbols as f64 - acc.ici - acc.isi;
            Ok(scale(acc, 1.0 / (active.len() * k) as f64))
        })
        .collect()
}

/// Monte Carlo SINR of several combiners over `trials` independent
/// realizations. Realization `t` draws from stream `(master_seed, t)`, so
/// the result does not depend on the worker count.
pub fn measure_sinr_freq_multi(
    pdp: &PowerDelayProfile,
    params: &LinkParams,
    kinds: &[CombinerKind],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SinrBreakdown>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    params.validate(pdp.len())?;
    let per_trial: Vec<Vec<ComponentPowers>> = (0..trials)
        .into_par_iter()
        .map(|t| freq_realization(pdp, params, kinds, &mut RngStream::new(master_seed, t as u64)))
        .collect::<Result<_>>()?;
    (0..kinds.len())
        .map(|c| {
            let parts: Vec<ComponentPowers> = per_trial.iter().map(|v| v[c]).collect();
            SinrBreakdown::from_realizations(&parts)
        })
        .collect()
}

pub fn measure_sinr_freq(
    pdp: &PowerDelayProfile,
    params: &LinkParams,
    kind: CombinerKind,
    trials: usize,
    master_seed: u64,
) -> Result<SinrBreakdown> {
    Ok(measure_sinr_freq_multi(pdp, params, &[kind], trials, master_seed)?.remove(0))
}
