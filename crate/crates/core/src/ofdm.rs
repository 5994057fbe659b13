//! OFDM framing (with or without cyclic prefix), the multipath uplink
//! channel, the per-symbol matrix model and the receive-side DFT.

use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{s, Array2, Array3};

use crate::channel::CirSet;
use crate::dsp::{convolve_fast, Dft, RngStream, C64, ZERO};
use crate::error::{Error, Result};

/// Data symbol alphabet. Both have unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Gaussian,
    Qpsk,
}

impl Constellation {
    pub fn draw(self, rng: &mut RngStream) -> C64 {
        match self {
            Constellation::Gaussian => rng.cn(1.0),
            Constellation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                let re = if rng.uniform_bit() { a } else { -a };
                let im = if rng.uniform_bit() { a } else { -a };
                C64::new(re, im)
            }
        }
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "qpsk" => Ok(Self::Qpsk),
            other => Err(Error::InvalidParameter(format!("unknown constellation '{other}'"))),
        }
    }
}

/// Every subcarrier active.
pub fn full_mask(n: usize) -> Vec<bool> {
    vec![true; n]
}

/// `count` active subcarriers split around DC, DC itself left empty
/// (LTE-style). `count >= n` activates everything.
pub fn centered_mask(n: usize, count: usize) -> Vec<bool> {
    if count >= n {
        return full_mask(n);
    }
    let upper = count.div_ceil(2);
    let lower = count / 2;
    (0..n)
        .map(|p| (1..=upper).contains(&p) || (p >= n - lower && p > upper))
        .collect()
}

/// Per-terminal data grid `d[k, i, p]` and the transmitted time signal.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    data: Array3<C64>,
    time_signal: Array2<C64>,
    cp_len: usize,
    active_mask: Vec<bool>,
}

impl OfdmFrame {
    /// Builds the time signal from a `(K, Q, N)` data grid. Inactive
    /// subcarriers must be zero.
    pub fn from_data(data: Array3<C64>, active_mask: Vec<bool>, cp_len: usize) -> Result<Self> {
        let (k, q, n) = data.dim();
        if k == 0 || q == 0 || n == 0 {
            return Err(Error::Dimension(format!("data grid shape ({k}, {q}, {n})")));
        }
        if active_mask.len() != n {
            return Err(Error::Dimension(format!("mask length {} for N = {n}", active_mask.len())));
        }
        if cp_len > n {
            return Err(Error::InvalidParameter(format!("cp_len {cp_len} exceeds N = {n}")));
        }
        for ((_, _, p), v) in data.indexed_iter() {
            if !active_mask[p] && *v != ZERO {
                return Err(Error::InvalidParameter(format!("inactive subcarrier {p} carries data")));
            }
        }
        let dft = Dft::new(n)?;
        let sym_len = n + cp_len;
        let mut time_signal = Array2::from_elem((k, q * sym_len), ZERO);
        let mut buf = vec![ZERO; n];
        for kk in 0..k {
            for i in 0..q {
                buf.iter_mut()
                    .zip(data.slice(s![kk, i, ..]))
                    .for_each(|(b, d)| *b = *d);
                dft.inverse(&mut buf);
                let base = i * sym_len;
                for t in 0..cp_len {
                    time_signal[(kk, base + t)] = buf[n - cp_len + t];
                }
                for t in 0..n {
                    time_signal[(kk, base + cp_len + t)] = buf[t];
                }
            }
        }
        Ok(Self {
            data,
            time_signal,
            cp_len,
            active_mask,
        })
    }

    pub fn data(&self) -> &Array3<C64> {
        &self.data
    }

    pub fn time_signal(&self) -> &Array2<C64> {
        &self.time_signal
    }

    /// Transmit samples of terminal `k`.
    pub fn signal(&self, k: usize) -> &[C64] {
        let len = self.time_signal.ncols();
        &self.time_signal.as_slice().expect("standard layout")[k * len..(k + 1) * len]
    }

    /// Time samples of symbol `i` of terminal `k`, CP excluded.
    pub fn symbol_samples(&self, k: usize, i: usize) -> &[C64] {
        let start = i * self.symbol_len() + self.cp_len;
        &self.signal(k)[start..start + self.n()]
    }

    pub fn terminals(&self) -> usize {
        self.data.dim().0
    }

    pub fn symbols(&self) -> usize {
        self.data.dim().1
    }

    pub fn n(&self) -> usize {
        self.data.dim().2
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn symbol_len(&self) -> usize {
        self.n() + self.cp_len
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active_mask
    }
}

/// Draws unit-energy data on the active subcarriers and builds the frame.
pub fn modulate(
    rng: &mut RngStream,
    k: usize,
    q: usize,
    n: usize,
    constellation: Constellation,
    active_mask: &[bool],
    cp_len: usize,
) -> Result<OfdmFrame> {
    if active_mask.len() != n {
        return Err(Error::Dimension(format!("mask length {} for N = {n}", active_mask.len())));
    }
    let mut data = Array3::from_elem((k, q, n), ZERO);
    for ((_, _, p), v) in data.indexed_iter_mut() {
        if active_mask[p] {
            *v = constellation.draw(rng);
        }
    }
    OfdmFrame::from_data(data, active_mask.to_vec(), cp_len)
}

/// Samples at every base-station antenna, indexed `(m, time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RxSignal {
    pub samples: Array2<C64>,
    pub noise_variance: f64,
}

impl RxSignal {
    pub fn antennas(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn antenna(&self, m: usize) -> &[C64] {
        let len = self.len();
        &self.samples.as_slice().expect("standard layout")[m * len..(m + 1) * len]
    }
}

/// Block length for the fast convolutions inside the channel.
fn channel_block_len(l: usize) -> usize {
    (8 * l).next_power_of_two().max(64)
}

/// `r_m = sum_k x_k * h_{m,k} + noise`, truncated to the frame span. The
/// channel state before the frame is zero.
pub fn apply_channel(frame: &OfdmFrame, cir: &CirSet, rng: &mut RngStream, noise_variance: f64) -> Result<RxSignal> {
    if frame.terminals() != cir.terminals() {
        return Err(Error::Dimension(format!(
            "frame has {} terminals, channel has {}",
            frame.terminals(),
            cir.terminals()
        )));
    }
    if noise_variance < 0.0 || !noise_variance.is_finite() {
        return Err(Error::NegativeVariance(noise_variance));
    }
    let len = frame.time_signal().ncols();
    let block = channel_block_len(cir.len());
    let mut samples = Array2::from_elem((cir.antennas(), len), ZERO);
    for m in 0..cir.antennas() {
        for k in 0..cir.terminals() {
            let y = convolve_fast(frame.signal(k), cir.response(m, k), block)?;
            for (dst, v) in samples.row_mut(m).iter_mut().zip(&y[..len]) {
                *dst += v;
            }
        }
    }
    if noise_variance > 0.0 {
        for v in samples.iter_mut() {
            *v += rng.cn(noise_variance);
        }
    }
    Ok(RxSignal {
        samples,
        noise_variance,
    })
}

/// The `N x N` matrices mapping the previous and current symbol of terminal
/// `k` onto the current received block at antenna `m` (no CP):
/// `prev[n][c] = h(n - c + N)`, `curr[n][c] = h(n - c)`.
pub fn build_symbol_matrices(cir: &CirSet, m: usize, k: usize, n: usize) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let l = cir.len();
    if n < l {
        return Err(Error::DftTooShort { n, l });
    }
    let h = cir.response(m, k);
    let tap = |d: isize| -> C64 {
        if d >= 0 && (d as usize) < l {
            h[d as usize]
        } else {
            ZERO
        }
    };
    let ni = n as isize;
    let prev = DMatrix::from_fn(n, n, |r, c| tap(r as isize - c as isize + ni));
    let curr = DMatrix::from_fn(n, n, |r, c| tap(r as isize - c as isize));
    Ok((prev, curr))
}

/// DFT of symbol `i` at every antenna after dropping the CP, as an
/// `(M, N)` array.
pub fn demodulate(rx: &RxSignal, n: usize, cp_len: usize, i: usize) -> Result<Array2<C64>> {
    demodulate_rows(&rx.samples, n, cp_len, i)
}

/// [`demodulate`] for any set of sample streams, one per row.
pub fn demodulate_rows(samples: &Array2<C64>, n: usize, cp_len: usize, i: usize) -> Result<Array2<C64>> {
    let sym_len = n + cp_len;
    let available = samples.ncols() / sym_len;
    if i >= available {
        return Err(Error::SymbolOutOfRange { index: i, available });
    }
    let dft = Dft::new(n)?;
    let start = i * sym_len + cp_len;
    let mut out = Array2::from_elem((samples.nrows(), n), ZERO);
    let mut buf = vec![ZERO; n];
    for (row, mut dst) in samples.rows().into_iter().zip(out.rows_mut()) {
        buf.iter_mut()
            .zip(row.iter().skip(start))
            .for_each(|(b, v)| *b = *v);
        dft.forward(&mut buf);
        dst.iter_mut().zip(&buf).for_each(|(o, b)| *o = *b);
    }
    Ok(out)
}
