//! Numerical building blocks: unitary DFT, linear convolution (direct and
//! overlap-save), Toeplitz matrices and seeded complex Gaussian sampling.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Cached forward/inverse plans for an `n`-point unitary DFT.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place `F_N x`, scaled by `1/sqrt(N)`.
    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// In-place `F_N^H x`, scaled by `1/sqrt(N)`.
    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// Unscaled forward transform, `sum_n x(n) e^{-j 2 pi n p / N}`.
    pub fn forward_unscaled(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
    }
}

/// Unitary DFT of `x`.
pub fn dft(x: &[C64]) -> Result<Vec<C64>> {
    let plan = Dft::new(x.len())?;
    let mut out = x.to_vec();
    plan.forward(&mut out);
    Ok(out)
}

/// Inverse of [`dft`].
pub fn idft(x: &[C64]) -> Result<Vec<C64>> {
    let plan = Dft::new(x.len())?;
    let mut out = x.to_vec();
    plan.inverse(&mut out);
    Ok(out)
}

/// Full linear convolution, `len(a) + len(b) - 1` samples.
pub fn convolve_direct(a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Ok(out)
}

/// Overlap-save block convolver for kernels of a fixed length.
///
/// Each block of `block_len` input samples overlaps its predecessor by
/// `kernel_len - 1` samples and yields `block_len - kernel_len + 1` output
/// samples. Input block spectra can be computed once and reused against
/// several kernels; products may be accumulated before a single inverse
/// transform.
#[derive(Clone)]
pub struct OverlapSave {
    block_len: usize,
    kernel_len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OverlapSave {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OverlapSave")
            .field("block_len", &self.block_len)
            .field("kernel_len", &self.kernel_len)
            .finish()
    }
}

impl OverlapSave {
    pub fn new(block_len: usize, kernel_len: usize) -> Result<Self> {
        if kernel_len == 0 {
            return Err(Error::EmptyInput);
        }
        if block_len < kernel_len {
            return Err(Error::BlockTooShort {
                block_len,
                kernel_len,
            });
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            block_len,
            kernel_len,
            fwd: planner.plan_fft_forward(block_len),
            inv: planner.plan_fft_inverse(block_len),
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Output samples produced per block.
    pub fn step(&self) -> usize {
        self.block_len - self.kernel_len + 1
    }

    pub fn num_blocks(&self, signal_len: usize) -> usize {
        (signal_len + self.kernel_len - 1).div_ceil(self.step())
    }

    /// Unnormalized spectrum of the zero-padded kernel.
    pub fn kernel_spectrum(&self, kernel: &[C64]) -> Vec<C64> {
        assert!(kernel.len() <= self.kernel_len, "kernel longer than planned");
        let mut buf = vec![ZERO; self.block_len];
        buf[..kernel.len()].copy_from_slice(kernel);
        self.fwd.process(&mut buf);
        buf
    }

    /// Spectra of the overlapping input blocks of `signal`.
    pub fn input_spectra(&self, signal: &[C64]) -> Vec<Vec<C64>> {
        let lead = self.kernel_len - 1;
        let step = self.step();
        (0..self.num_blocks(signal.len()))
            .map(|b| {
                let mut buf = vec![ZERO; self.block_len];
                // Block b covers padded samples [b*step, b*step + block_len),
                // where padded index u maps to signal index u - lead.
                let start = b * step;
                for (t, slot) in buf.iter_mut().enumerate() {
                    let u = start + t;
                    if u >= lead && u - lead < signal.len() {
                        *slot = signal[u - lead];
                    }
                }
                self.fwd.process(&mut buf);
                buf
            })
            .collect()
    }

    /// Inverse-transforms accumulated block products and stitches the valid
    /// part of each block into an output of `out_len` samples.
    pub fn synthesize(&self, mut blocks: Vec<Vec<C64>>, out_len: usize) -> Vec<C64> {
        let step = self.step();
        let skip = self.kernel_len - 1;
        let scale = 1.0 / self.block_len as f64;
        let mut out = vec![ZERO; out_len];
        for (b, buf) in blocks.iter_mut().enumerate() {
            self.inv.process(buf);
            for t in 0..step {
                let idx = b * step + t;
                if idx >= out_len {
                    break;
                }
                out[idx] = buf[skip + t] * scale;
            }
        }
        out
    }

    /// Full linear convolution of `signal` with `kernel`.
    pub fn convolve(&self, signal: &[C64], kernel: &[C64]) -> Vec<C64> {
        let h = self.kernel_spectrum(kernel);
        let blocks = self
            .input_spectra(signal)
            .into_iter()
            .map(|mut x| {
                x.iter_mut().zip(&h).for_each(|(a, b)| *a *= b);
                x
            })
            .collect();
        self.synthesize(blocks, signal.len() + kernel.len() - 1)
    }
}

/// Full linear convolution via overlap-save with blocks of `block_len`.
pub fn convolve_fast(signal: &[C64], kernel: &[C64], block_len: usize) -> Result<Vec<C64>> {
    if signal.is_empty() || kernel.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ols = OverlapSave::new(block_len, kernel.len())?;
    Ok(ols.convolve(signal, kernel))
}

/// Spine of an `rows x cols` Toeplitz matrix: walks the first row from the
/// top-right corner to the top-left, then down the first column.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSpine {
    pub spine: Vec<C64>,
    pub rows: usize,
    pub cols: usize,
}

impl ToeplitzSpine {
    pub fn new(spine: Vec<C64>, rows: usize, cols: usize) -> Result<Self> {
        let t = Self { spine, rows, cols };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        let expected = (self.rows + self.cols).saturating_sub(1);
        if self.rows == 0 || self.cols == 0 || self.spine.len() != expected {
            return Err(Error::SpineLength {
                got: self.spine.len(),
                expected,
            });
        }
        Ok(())
    }

    /// Entry `(r, c)`, zero-based.
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.spine[r + self.cols - 1 - c]
    }
}

/// Dense matrix with `A[r][c] = spine[r - c + cols - 1]` (zero-based).
pub fn toeplitz_build(t: &ToeplitzSpine) -> Result<DMatrix<C64>> {
    t.check()?;
    Ok(DMatrix::from_fn(t.rows, t.cols, |r, c| t.at(r, c)))
}

/// Reproducible random stream keyed by `(master_seed, stream_index)`.
///
/// Streams with the same master seed and different indices are
/// independent ChaCha streams, so trial `i` never depends on how many
/// other trials ran before it.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    /// Stream whose index is derived from a tuple of identifiers.
    pub fn derived(master_seed: u64, parts: &[u64]) -> Self {
        Self::new(master_seed, mix_index(parts))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// One `CN(0, variance)` draw.
    pub fn cn(&mut self, variance: f64) -> C64 {
        let s = (0.5 * variance).sqrt();
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        C64::new(s * re, s * im)
    }

    pub fn uniform_bit(&mut self) -> bool {
        self.rng.next_u32() & 1 == 1
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// SplitMix64-style fold of identifiers into a single stream index.
pub fn mix_index(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

/// `n` i.i.d. circularly-symmetric complex Gaussians of the given variance.
pub fn draw_cn(rng: &mut RngStream, n: usize, variance: f64) -> Result<Vec<C64>> {
    if variance.is_nan() || variance < 0.0 {
        return Err(Error::NegativeVariance(variance));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok((0..n).map(|_| rng.cn(variance)).collect())
}
