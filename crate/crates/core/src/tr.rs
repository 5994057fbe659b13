//! Time-reversal combining, the equivalent post-combining channels, the
//! coupling coefficients between OFDM symbols/subcarriers and the ZF
//! post-equalizer on the per-subcarrier `K x K` same-slot matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::channel::{draw_cir, CirSet, PdpStats, PowerDelayProfile};
use crate::dsp::{Dft, OverlapSave, RngStream, C64, ZERO};
use crate::error::{Error, Result};
use crate::linalg::checked_inverse;
use crate::measure::{ComponentPowers, LinkParams, SinrBreakdown};
use crate::ofdm::RxSignal;

/// Cross-correlations `g[k, j, idx]` at lag `idx - (L - 1)`: the response
/// seen at terminal `k`'s TR output from terminal `j`'s signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrChannel {
    g: Array3<C64>,
    l: usize,
    m: usize,
}

impl TrChannel {
    pub fn g(&self) -> &Array3<C64> {
        &self.g
    }

    /// `g_kj` over lags `-(L-1)..=L-1`.
    pub fn response(&self, k: usize, j: usize) -> &[C64] {
        let w = 2 * self.l - 1;
        let start = (k * self.terminals() + j) * w;
        &self.g.as_slice().expect("standard layout")[start..start + w]
    }

    pub fn at(&self, k: usize, j: usize, lag: isize) -> C64 {
        let idx = lag + self.l as isize - 1;
        if idx < 0 || idx as usize >= 2 * self.l - 1 {
            ZERO
        } else {
            self.g[(k, j, idx as usize)]
        }
    }

    pub fn terminals(&self) -> usize {
        self.g.dim().0
    }

    /// Length `L` of the underlying channel.
    pub fn channel_len(&self) -> usize {
        self.l
    }

    pub fn antennas(&self) -> usize {
        self.m
    }
}

/// `g_kj(l) = M^{-1/2} sum_m sum_u h_{m,j}(l + u) conj(h_{m,k}(u))`.
pub fn equivalent_channel(cir: &CirSet) -> TrChannel {
    let (m, k, l) = (cir.antennas(), cir.terminals(), cir.len());
    let w = 2 * l - 1;
    let scale = 1.0 / (m as f64).sqrt();
    let mut g = Array3::from_elem((k, k, w), ZERO);
    for mm in 0..m {
        for kk in 0..k {
            let hk = cir.response(mm, kk);
            for j in 0..k {
                let hj = cir.response(mm, j);
                for (u, a) in hk.iter().enumerate() {
                    let a = a.conj();
                    // lag = t - u, idx = lag + L - 1
                    for (t, b) in hj.iter().enumerate() {
                        g[(kk, j, t + l - 1 - u)] += a * b;
                    }
                }
            }
        }
    }
    g.mapv_inplace(|v| v * scale);
    TrChannel { g, l, m }
}

/// `r_k(l) = M^{-1/2} sum_m sum_u r_m(l + u) conj(h_{m,k}(u))` for every
/// terminal, `(K, T)`. Samples past the end of `rx` count as zero. Runs
/// overlap-save with each antenna's block spectra computed once and the
/// per-terminal products accumulated across antennas before a single
/// inverse transform per terminal.
pub fn tr_combine(rx: &RxSignal, cir: &CirSet, block_len: usize) -> Result<Array2<C64>> {
    let (m, k, l) = (cir.antennas(), cir.terminals(), cir.len());
    if rx.antennas() != m {
        return Err(Error::Dimension(format!("{} receive streams for {m} antennas", rx.antennas())));
    }
    if rx.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ols = OverlapSave::new(block_len, l)?;
    let t = rx.len();
    let blocks = ols.num_blocks(t);
    let mut acc = vec![vec![vec![ZERO; block_len]; blocks]; k];
    let mut kernel = vec![ZERO; l];
    for mm in 0..m {
        let spectra = ols.input_spectra(rx.antenna(mm));
        for (kk, acc_k) in acc.iter_mut().enumerate() {
            // time-reversed conjugate, delayed by L - 1 to stay causal
            for (n, slot) in kernel.iter_mut().enumerate() {
                *slot = cir.response(mm, kk)[l - 1 - n].conj();
            }
            let hs = ols.kernel_spectrum(&kernel);
            for (a, x) in acc_k.iter_mut().zip(&spectra) {
                for ((dst, xv), hv) in a.iter_mut().zip(x).zip(&hs) {
                    *dst += xv * hv;
                }
            }
        }
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Array2::from_elem((k, t), ZERO);
    for (kk, acc_k) in acc.into_iter().enumerate() {
        let y = ols.synthesize(acc_k, t + l - 1);
        for (dst, v) in out.row_mut(kk).iter_mut().zip(&y[l - 1..]) {
            *dst = v * scale;
        }
    }
    Ok(out)
}

/// Which symbol a coupling coefficient draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolGroup {
    Prev,
    Curr,
    Next,
}

fn unit(num: i64, n: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * num.rem_euclid(n as i64) as f64 / n as f64)
}

/// `sum_{c=lo}^{hi} e^{j 2 pi d c / N}`.
fn geometric(d: i64, lo: i64, hi: i64, n: usize) -> C64 {
    if hi < lo {
        return ZERO;
    }
    if d.rem_euclid(n as i64) == 0 {
        return C64::new((hi - lo + 1) as f64, 0.0);
    }
    (unit(d * lo, n) - unit(d * (hi + 1), n)) / (C64::new(1.0, 0.0) - unit(d, n))
}

/// Vectors `(a, b, c)` of length `2L - 1` (lag order) such that the
/// coefficient coupling subcarrier `q` of the previous, current and next
/// symbol into subcarrier `p` is `a^H g`, `b^H g` and `c^H g`.
pub fn interference_vectors(p: usize, q: usize, n: usize, l: usize) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>)> {
    if n < l || l == 0 {
        return Err(Error::DftTooShort { n, l });
    }
    if p >= n || q >= n {
        return Err(Error::InvalidParameter(format!("subcarrier pair ({p}, {q}) outside 0..{n}")));
    }
    let w = 2 * l - 1;
    let d = p as i64 - q as i64;
    let (ni, nf) = (n as i64, n as f64);
    let mut a = vec![ZERO; w];
    let mut b = vec![ZERO; w];
    let mut c = vec![ZERO; w];
    for idx in 0..w {
        let lag = idx as i64 - (l as i64 - 1);
        let phase = unit(q as i64 * lag, n) / nf;
        a[idx] = phase * geometric(d, 0, lag - 1, n);
        b[idx] = phase * geometric(d, lag.max(0), ni - 1 + lag.min(0), n);
        c[idx] = phase * geometric(d, ni + lag, ni - 1, n);
    }
    Ok((a, b, c))
}

fn inner(v: &[C64], g: &[C64]) -> C64 {
    v.iter().zip(g).map(|(a, b)| a.conj() * b).sum()
}

/// One coupling coefficient from `j`'s data on `(group, q)` into `k`'s
/// TR output on subcarrier `p`.
pub fn tr_coefficient(trch: &TrChannel, k: usize, j: usize, p: usize, q: usize, which: SymbolGroup, n: usize) -> Result<C64> {
    let (a, b, c) = interference_vectors(p, q, n, trch.l)?;
    let v = match which {
        SymbolGroup::Prev => a,
        SymbolGroup::Curr => b,
        SymbolGroup::Next => c,
    };
    Ok(inner(&v, trch.response(k, j)))
}

/// Same-slot, same-subcarrier `K x K` matrices for every subcarrier:
/// `[G_p]_{kj} = N^{-1} sum_l (N - |l|) g_kj(l) e^{-j 2 pi l p / N}`. One
/// length-`N` transform per `(k, j)` of the weighted sequence with negative
/// lags wrapped to the end.
pub fn zf_diag_fast(trch: &TrChannel, n: usize) -> Result<Vec<DMatrix<C64>>> {
    let l = trch.l;
    if n < 2 * l - 1 {
        return Err(Error::DftTooShort { n, l: 2 * l - 1 });
    }
    let k = trch.terminals();
    let dft = Dft::new(n)?;
    let nf = n as f64;
    let mut out = vec![DMatrix::from_element(k, k, ZERO); n];
    let mut buf = vec![ZERO; n];
    for kk in 0..k {
        for j in 0..k {
            buf.fill(ZERO);
            for (idx, v) in trch.response(kk, j).iter().enumerate() {
                let lag = idx as isize - (l as isize - 1);
                let pos = lag.rem_euclid(n as isize) as usize;
                buf[pos] = v * ((nf - lag.unsigned_abs() as f64) / nf);
            }
            dft.forward_unscaled(&mut buf);
            for (p, v) in buf.iter().enumerate() {
                out[p][(kk, j)] = *v;
            }
        }
    }
    Ok(out)
}

/// Per-subcarrier same-slot matrices and their inverses for one channel
/// realization. Subcarriers outside the mask are left uninverted.
#[derive(Debug, Clone)]
pub struct ZfBank {
    diag: Vec<DMatrix<C64>>,
    inverse: Vec<Option<DMatrix<C64>>>,
    cond: Vec<f64>,
}

impl ZfBank {
    pub fn new(trch: &TrChannel, n: usize, mask: &[bool]) -> Result<Self> {
        if mask.len() != n {
            return Err(Error::Dimension(format!("mask length {} for N = {n}", mask.len())));
        }
        let diag = zf_diag_fast(trch, n)?;
        let mut inverse = vec![None; n];
        let mut cond = vec![f64::NAN; n];
        for p in (0..n).filter(|&p| mask[p]) {
            let (inv, c) = checked_inverse(&diag[p], p)?;
            inverse[p] = Some(inv);
            cond[p] = c;
        }
        Ok(Self { diag, inverse, cond })
    }

    pub fn diag(&self, p: usize) -> &DMatrix<C64> {
        &self.diag[p]
    }

    pub fn inverse(&self, p: usize) -> Option<&DMatrix<C64>> {
        self.inverse[p].as_ref()
    }

    pub fn condition(&self, p: usize) -> f64 {
        self.cond[p]
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }
}

/// Solves each subcarrier's `K x K` system on the demodulated TR outputs
/// `(K, N)`. Subcarriers the bank did not invert come back as zero.
pub fn zf_post_equalize(rtr: &Array2<C64>, bank: &ZfBank) -> Result<Array2<C64>> {
    let (k, n) = rtr.dim();
    if n != bank.n() || bank.diag.first().map(|d| d.nrows()) != Some(k) {
        return Err(Error::Dimension(format!("TR grid {:?} does not match the ZF bank", rtr.dim())));
    }
    let mut out = Array2::from_elem((k, n), ZERO);
    for p in 0..n {
        if let Some(inv) = &bank.inverse[p] {
            let col = DVector::from_iterator(k, rtr.column(p).iter().copied());
            let d = inv * col;
            for kk in 0..k {
                out[(kk, p)] = d[kk];
            }
        }
    }
    Ok(out)
}

/// Second-order statistics of the coupling vectors for one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrStatMatrices {
    /// PDP autocorrelation in lag order (the diagonal of Gamma).
    pub gamma: Vec<f64>,
    /// `sum_q (a a^H + b b^H + c c^H)` over every subcarrier `q`.
    pub psi: DMatrix<C64>,
    /// `psi - b_pp b_pp^H`.
    pub phi: DMatrix<C64>,
    pub b_outer: DMatrix<C64>,
    pub b_pp: Vec<C64>,
}

impl TrStatMatrices {
    /// `tr(Gamma X)`.
    pub fn trace_gamma(&self, x: &DMatrix<C64>) -> C64 {
        self.gamma.iter().enumerate().map(|(i, g)| x[(i, i)] * g).sum()
    }
}

pub fn stat_matrices(stats: &PdpStats, p: usize) -> Result<TrStatMatrices> {
    let (n, l) = (stats.n, stats.l);
    let (cur, isi) = restricted_psi(p, n, l, &vec![true; n])?;
    let b_pp = interference_vectors(p, p, n, l)?.1;
    let bv = DVector::from_column_slice(&b_pp);
    let b_outer = &bv * bv.adjoint();
    let psi = cur + isi;
    Ok(TrStatMatrices {
        gamma: stats.rho_tilde.clone(),
        phi: &psi - &b_outer,
        psi,
        b_outer,
        b_pp,
    })
}

/// `(sum_q b b^H, sum_q (a a^H + c c^H))` over the subcarriers `q` set in
/// `mask`.
pub fn restricted_psi(p: usize, n: usize, l: usize, mask: &[bool]) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if mask.len() != n {
        return Err(Error::Dimension(format!("mask length {} for N = {n}", mask.len())));
    }
    let w = 2 * l - 1;
    let mut cur = DMatrix::from_element(w, w, ZERO);
    let mut isi = DMatrix::from_element(w, w, ZERO);
    for q in (0..n).filter(|&q| mask[q]) {
        let (a, b, c) = interference_vectors(p, q, n, l)?;
        for r in 0..w {
            for s in 0..w {
                cur[(r, s)] += b[r] * b[s].conj();
                isi[(r, s)] += a[r] * a[s].conj() + c[r] * c[s].conj();
            }
        }
    }
    Ok((cur, isi))
}

/// Restricted coupling statistics for every active subcarrier of one
/// `(N, L, mask)` combination; immutable and shareable across trials.
#[derive(Debug, Clone)]
pub struct PsiCache {
    n: usize,
    l: usize,
    mask: Vec<bool>,
    per_p: Vec<Option<(DMatrix<C64>, DMatrix<C64>)>>,
}

impl PsiCache {
    pub fn new(n: usize, l: usize, mask: &[bool]) -> Result<Self> {
        if mask.len() != n {
            return Err(Error::Dimension(format!("mask length {} for N = {n}", mask.len())));
        }
        let per_p = (0..n)
            .into_par_iter()
            .map(|p| if mask[p] { restricted_psi(p, n, l, mask).map(Some) } else { Ok(None) })
            .collect::<Result<_>>()?;
        Ok(Self {
            n,
            l,
            mask: mask.to_vec(),
            per_p,
        })
    }

    pub fn matches(&self, n: usize, l: usize, mask: &[bool]) -> bool {
        self.n == n && self.l == l && self.mask == mask
    }
}

/// How the per-subcarrier coupling powers are evaluated.
#[derive(Debug, Clone, Copy)]
pub enum CouplingRoute<'a> {
    /// Closed-form window sums; valid when every subcarrier carries data.
    FullBand,
    /// Quadratic forms with cached restricted statistics.
    Cached(&'a PsiCache),
}

/// Coupling power matrices for subcarrier `p`, one pair per source terminal
/// `j`: `cur[j][(k, k')] = sum_q G_{kj,pq} conj(G_{k'j,pq})` over the
/// current symbol, `isi[j]` the same over the previous and next symbols.
pub fn coupling_matrices(trch: &TrChannel, p: usize, n: usize, route: CouplingRoute<'_>) -> Result<(Vec<DMatrix<C64>>, Vec<DMatrix<C64>>)> {
    let (k, l) = (trch.terminals(), trch.l);
    if n < 2 * l - 1 {
        return Err(Error::DftTooShort { n, l: 2 * l - 1 });
    }
    let w = 2 * l - 1;
    match route {
        CouplingRoute::FullBand => {
            // Demodulating subcarrier p of the TR output weights the data
            // sample at offset s of the symbol grid by
            // N^{-1/2} e^{-j 2 pi p s / N} sum_{l in window(s)} g(l) e^{-j 2 pi p l / N}.
            // Windows are full in the interior and prefix/suffix sums at
            // the edges; the common phase cancels in the products.
            let nf = n as f64;
            let interior = ((n + 2 - 2 * l) as f64).sqrt();
            let rot: Vec<C64> = (0..w)
                .map(|idx| unit(-(p as i64) * (idx as i64 - (l as i64 - 1)), n))
                .collect();
            let mut cur = Vec::with_capacity(k);
            let mut isi = Vec::with_capacity(k);
            let mut prefix = vec![ZERO; w];
            let mut suffix = vec![ZERO; w];
            for j in 0..k {
                let mut uc = DMatrix::from_element(k, w, ZERO);
                let mut ui = DMatrix::from_element(k, 2 * l - 2, ZERO);
                for kk in 0..k {
                    let g = trch.response(kk, j);
                    let mut run = ZERO;
                    for idx in 0..w {
                        run += g[idx] * rot[idx];
                        prefix[idx] = run;
                    }
                    run = ZERO;
                    for idx in (0..w).rev() {
                        run += g[idx] * rot[idx];
                        suffix[idx] = run;
                    }
                    // current symbol: suffix from idx 1..=L-1, prefix idx L-1..=2L-3
                    let mut e = 0;
                    for idx in 1..l {
                        uc[(kk, e)] = suffix[idx];
                        e += 1;
                    }
                    for idx in l - 1..w - 1 {
                        uc[(kk, e)] = prefix[idx];
                        e += 1;
                    }
                    uc[(kk, e)] = prefix[w - 1] * interior;
                    // previous symbol: suffix idx L..=2L-2; next: prefix idx 0..=L-2
                    let mut e = 0;
                    for idx in l..w {
                        ui[(kk, e)] = suffix[idx];
                        e += 1;
                    }
                    for idx in 0..l - 1 {
                        ui[(kk, e)] = prefix[idx];
                        e += 1;
                    }
                }
                cur.push(&uc * uc.adjoint() / C64::new(nf, 0.0));
                isi.push(&ui * ui.adjoint() / C64::new(nf, 0.0));
            }
            Ok((cur, isi))
        }
        CouplingRoute::Cached(cache) => {
            if cache.n != n || cache.l != l {
                return Err(Error::Dimension("statistics cache built for another (N, L)".into()));
            }
            let (psi_cur, psi_isi) = cache.per_p[p]
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter(format!("subcarrier {p} is not active")))?;
            let mut cur = Vec::with_capacity(k);
            let mut isi = Vec::with_capacity(k);
            for j in 0..k {
                let g = DMatrix::from_fn(w, k, |r, kk| trch.response(kk, j)[r]);
                let gh = g.adjoint();
                cur.push((&gh * psi_cur * &g).transpose());
                isi.push((&gh * psi_isi * &g).transpose());
            }
            Ok((cur, isi))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrMode {
    TrMrc,
    TrZf,
}

impl TrMode {
    pub const ALL: [TrMode; 2] = [TrMode::TrMrc, TrMode::TrZf];

    pub fn name(self) -> &'static str {
        match self {
            TrMode::TrMrc => "TR-MRC",
            TrMode::TrZf => "TR-ZF",
        }
    }
}

impl fmt::Display for TrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "TR-MRC" => Ok(Self::TrMrc),
            "TR-ZF" => Ok(Self::TrZf),
            other => Err(Error::InvalidParameter(format!("unknown TR mode '{other}'"))),
        }
    }
}

/// Exact expected powers (over data and noise) for one channel
/// realization. TR-MRC reads the raw TR output; TR-ZF the output of the
/// per-subcarrier solve. Noise at the TR output has covariance
/// `sigma^2 M^{-1/2} G_p` on subcarrier `p`.
pub fn tr_powers(trch: &TrChannel, params: &LinkParams, modes: &[TrMode], route: CouplingRoute<'_>) -> Result<Vec<ComponentPowers>> {
    let n = params.n;
    let k = trch.terminals();
    let zf = ZfBank::new(trch, n, &params.active_mask)?;
    let noise_scale = params.noise_variance / (trch.m as f64).sqrt();
    let mut acc = vec![ComponentPowers::default(); modes.len()];
    let active = params.active();
    for &p in &active {
        let (cur, isi) = coupling_matrices(trch, p, n, route)?;
        let diag = zf.diag(p);
        for (slot, mode) in acc.iter_mut().zip(modes) {
            match mode {
                TrMode::TrMrc => {
                    for kk in 0..k {
                        let d = diag[(kk, kk)].norm_sqr();
                        slot.desired += d;
                        slot.ici += cur[kk][(kk, kk)].re - d;
                        slot.isi += isi[kk][(kk, kk)].re;
                        slot.mui += (0..k)
                            .filter(|&j| j != kk)
                            .map(|j| cur[j][(kk, kk)].re + isi[j][(kk, kk)].re)
                            .sum::<f64>();
                        slot.noise += noise_scale * diag[(kk, kk)].re;
                    }
                }
                TrMode::TrZf => {
                    let a = zf.inverse(p).expect("active subcarrier inverted");
                    let ah = a.adjoint();
                    let gain = a * diag;
                    let own: Vec<(DMatrix<C64>, DMatrix<C64>)> =
                        (0..k).map(|j| (a * &cur[j] * &ah, a * &isi[j] * &ah)).collect();
                    for kk in 0..k {
                        let d = gain[(kk, kk)].norm_sqr();
                        slot.desired += d;
                        slot.ici += own[kk].0[(kk, kk)].re - d;
                        slot.isi += own[kk].1[(kk, kk)].re;
                        slot.mui += (0..k)
                            .filter(|&j| j != kk)
                            .map(|j| own[j].0[(kk, kk)].re + own[j].1[(kk, kk)].re)
                            .sum::<f64>();
                        slot.noise += noise_scale * a[(kk, kk)].re;
                    }
                }
            }
        }
    }
    let s = 1.0 / (active.len() * k) as f64;
    Ok(acc
        .into_iter()
        .map(|c| ComponentPowers {
            desired: c.desired * s,
            ici: c.ici * s,
            isi: c.isi * s,
            mui: c.mui * s,
            noise: c.noise * s,
        })
        .collect())
}

fn route_for<'a>(params: &LinkParams, cache: Option<&'a PsiCache>) -> CouplingRoute<'a> {
    match cache {
        Some(c) => CouplingRoute::Cached(c),
        None if params.active_mask.iter().all(|&a| a) => CouplingRoute::FullBand,
        None => unreachable!("partial masks always come with a cache"),
    }
}

/// Monte Carlo SINR of the TR receivers over `trials` realizations drawn
/// from streams `(master_seed, t)`.
pub fn measure_sinr_tr(
    pdp: &PowerDelayProfile,
    params: &LinkParams,
    modes: &[TrMode],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SinrBreakdown>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    params.validate(pdp.len())?;
    let cache = if params.active_mask.iter().all(|&a| a) {
        None
    } else {
        Some(PsiCache::new(params.n, pdp.len(), &params.active_mask)?)
    };
    let route = route_for(params, cache.as_ref());
    let per_trial: Vec<Vec<ComponentPowers>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(master_seed, t as u64);
            let cir = draw_cir(&mut rng, pdp, params.m, params.k)?;
            tr_powers(&equivalent_channel(&cir), params, modes, route)
        })
        .collect::<Result<_>>()?;
    (0..modes.len())
        .map(|c| {
            let parts: Vec<ComponentPowers> = per_trial.iter().map(|v| v[c]).collect();
            SinrBreakdown::from_realizations(&parts)
        })
        .collect()
}
