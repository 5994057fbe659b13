//! Power delay profiles, random channel draws and the PDP statistics the
//! closed-form SINR expressions are built from.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array3;

use crate::dsp::{RngStream, C64};
use crate::error::{Error, Result};

/// Sample rate of a 512-point OFDM symbol at 15 kHz subcarrier spacing.
pub const LTE_5MHZ_SAMPLE_RATE: f64 = 7.68e6;

/// Extended Typical Urban: (excess delay ns, relative power dB).
pub const ETU_TAPS: [(f64, f64); 9] = [
    (0.0, -1.0),
    (50.0, -1.0),
    (120.0, -1.0),
    (200.0, 0.0),
    (230.0, 0.0),
    (500.0, 0.0),
    (1600.0, -3.0),
    (2300.0, -5.0),
    (5000.0, -7.0),
];

/// TDL-A: (normalized delay, power dB). Delays are in units of the RMS
/// delay spread.
pub const TDL_A_TAPS: [(f64, f64); 23] = [
    (0.0000, -13.4),
    (0.3819, 0.0),
    (0.4025, -2.2),
    (0.5868, -4.0),
    (0.4610, -6.0),
    (0.5375, -8.2),
    (0.6708, -9.9),
    (0.5750, -10.5),
    (0.7618, -7.5),
    (1.5375, -15.9),
    (1.8978, -6.6),
    (2.2242, -16.7),
    (2.1717, -12.4),
    (2.4942, -15.2),
    (2.5119, -10.8),
    (3.0582, -11.3),
    (4.0810, -12.7),
    (4.4579, -16.2),
    (4.5695, -18.3),
    (4.7966, -18.9),
    (5.0066, -16.6),
    (5.3043, -19.9),
    (9.6586, -29.7),
];

/// Normalized tap powers `rho(l)` on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    powers: Vec<f64>,
    sample_rate: f64,
    name: String,
}

impl PowerDelayProfile {
    /// Builds a profile from linear per-sample powers. Trailing zero taps are
    /// dropped and the remainder renormalized to unit sum.
    pub fn from_powers(name: impl Into<String>, powers: &[f64], sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidProfile(format!("sample rate {sample_rate}")));
        }
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProfile("tap powers must be finite and non-negative".into()));
        }
        let last = powers
            .iter()
            .rposition(|&p| p > 0.0)
            .ok_or_else(|| Error::InvalidProfile("profile has no energy".into()))?;
        let total: f64 = powers[..=last].iter().sum();
        Ok(Self {
            powers: powers[..=last].iter().map(|p| p / total).collect(),
            sample_rate,
            name: name.into(),
        })
    }

    /// Maps continuous-time taps `(delay ns, power dB)` onto the sample
    /// grid. Delays round to the nearest sample with ties going down;
    /// taps landing on the same sample add their powers.
    pub fn from_taps(name: impl Into<String>, taps: &[(f64, f64)], sample_rate: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidProfile("no taps".into()));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidProfile(format!("sample rate {sample_rate}")));
        }
        let mut grid: Vec<f64> = Vec::new();
        for &(delay_ns, power_db) in taps {
            if !(delay_ns >= 0.0 && delay_ns.is_finite() && power_db.is_finite()) {
                return Err(Error::InvalidProfile(format!("bad tap ({delay_ns} ns, {power_db} dB)")));
            }
            let idx = (delay_ns * sample_rate / 1e9 - 0.5).ceil().max(0.0) as usize;
            if grid.len() <= idx {
                grid.resize(idx + 1, 0.0);
            }
            grid[idx] += 10f64.powf(power_db / 10.0);
        }
        Self::from_powers(name, &grid, sample_rate)
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Channel length `L` in samples.
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// TDL-A taps scaled to the requested RMS delay spread.
pub fn tdl_a_taps(rms_ns: f64) -> Vec<(f64, f64)> {
    let lin: Vec<f64> = TDL_A_TAPS.iter().map(|t| 10f64.powf(t.1 / 10.0)).collect();
    let total: f64 = lin.iter().sum();
    let mean = TDL_A_TAPS.iter().zip(&lin).map(|(t, p)| t.0 * p).sum::<f64>() / total;
    let rms = (TDL_A_TAPS
        .iter()
        .zip(&lin)
        .map(|(t, p)| (t.0 - mean).powi(2) * p)
        .sum::<f64>()
        / total)
        .sqrt();
    TDL_A_TAPS
        .iter()
        .map(|&(d, p)| (d / rms * rms_ns, p))
        .collect()
}

/// Looks up a built-in profile: `ETU` or `TDL-A-<rms>ns` (e.g. `TDL-A-1100ns`).
pub fn pdp_from_profile(profile_name: &str, sample_rate: f64) -> Result<PowerDelayProfile> {
    let upper = profile_name.trim().to_ascii_uppercase();
    if upper == "ETU" {
        return PowerDelayProfile::from_taps("ETU", &ETU_TAPS, sample_rate);
    }
    if let Some(rest) = upper.strip_prefix("TDL-A-") {
        let rms_ns: f64 = rest
            .strip_suffix("NS")
            .and_then(|v| v.parse().ok())
            .filter(|v: &f64| *v > 0.0)
            .ok_or_else(|| Error::UnknownProfile(profile_name.to_string()))?;
        return PowerDelayProfile::from_taps(profile_name.trim(), &tdl_a_taps(rms_ns), sample_rate);
    }
    Err(Error::UnknownProfile(profile_name.to_string()))
}

/// Parses `delay_ns, power_dB` lines. `#` starts a comment; commas or
/// whitespace separate the columns.
pub fn parse_pdp_text(name: &str, text: &str, sample_rate: f64) -> Result<PowerDelayProfile> {
    let mut taps = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidProfile(format!("line {}: cannot parse '{s}'", lineno + 1)))
        };
        if cols.len() != 2 {
            return Err(Error::InvalidProfile(format!(
                "line {}: expected 'delay_ns, power_dB'",
                lineno + 1
            )));
        }
        taps.push((parse(cols[0])?, parse(cols[1])?));
    }
    PowerDelayProfile::from_taps(name, &taps, sample_rate)
}

pub fn load_pdp_file(path: &Path, sample_rate: f64) -> Result<PowerDelayProfile> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    parse_pdp_text(&name, &text, sample_rate)
}

/// One realization of every channel impulse response `h_{m,k}(l)`,
/// indexed `(antenna, terminal, lag)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSet {
    taps: Array3<C64>,
}

impl CirSet {
    pub fn new(taps: Array3<C64>) -> Result<Self> {
        let (m, k, l) = taps.dim();
        if m == 0 || k == 0 || l == 0 {
            return Err(Error::Dimension(format!("CIR set shape ({m}, {k}, {l})")));
        }
        if taps.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Dimension("CIR set contains non-finite taps".into()));
        }
        Ok(Self {
            taps: taps.as_standard_layout().to_owned(),
        })
    }

    /// Builds a set from a closure `(m, k, l) -> tap`.
    pub fn from_fn(m: usize, k: usize, l: usize, f: impl FnMut((usize, usize, usize)) -> C64) -> Result<Self> {
        Self::new(Array3::from_shape_fn((m, k, l), f))
    }

    pub fn antennas(&self) -> usize {
        self.taps.dim().0
    }

    pub fn terminals(&self) -> usize {
        self.taps.dim().1
    }

    pub fn len(&self) -> usize {
        self.taps.dim().2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn taps(&self) -> &Array3<C64> {
        &self.taps
    }

    /// `h_{m,k}(0..L)` as a contiguous slice.
    pub fn response(&self, m: usize, k: usize) -> &[C64] {
        let l = self.len();
        let start = (m * self.terminals() + k) * l;
        &self.taps.as_slice().expect("standard layout")[start..start + l]
    }

    /// Multiplies every tap by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            taps: self.taps.mapv(|v| v * c),
        }
    }
}

/// Independent `CN(0, rho(l))` taps for every antenna/terminal pair.
pub fn draw_cir(rng: &mut RngStream, pdp: &PowerDelayProfile, m: usize, k: usize) -> Result<CirSet> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension(format!("need M, K >= 1 (got M={m}, K={k})")));
    }
    let rho = pdp.powers();
    let mut taps = Array3::from_elem((m, k, rho.len()), C64::new(0.0, 0.0));
    for v in taps.indexed_iter_mut() {
        let ((_, _, l), slot) = v;
        *slot = rng.cn(rho[l]);
    }
    Ok(CirSet { taps })
}

/// PDP-derived quantities that drive the asymptotic SINR expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct PdpStats {
    /// Mean delay `sum l rho(l)`, in samples.
    pub tau_av: f64,
    /// PDP autocorrelation for lags `-(L-1)..=L-1`; entry `i` is lag `i - (L-1)`.
    pub rho_tilde: Vec<f64>,
    /// `sum_l (1 - |l|/N)^2 rho_tilde(l)`.
    pub lambda: f64,
    /// `sum_l rho(l) e^{-j 2 pi l q / N}` for `q = 0..N`.
    pub rho_bar: Vec<C64>,
    pub n: usize,
    pub l: usize,
}

impl PdpStats {
    pub fn rho_tilde_at(&self, lag: isize) -> f64 {
        let idx = lag + self.l as isize - 1;
        if idx < 0 || idx as usize >= self.rho_tilde.len() {
            0.0
        } else {
            self.rho_tilde[idx as usize]
        }
    }
}

pub fn pdp_stats(pdp: &PowerDelayProfile, n: usize) -> Result<PdpStats> {
    let rho = pdp.powers();
    let l = rho.len();
    if n < l {
        return Err(Error::DftTooShort { n, l });
    }
    let tau_av = rho.iter().enumerate().map(|(i, p)| i as f64 * p).sum();

    let mut rho_tilde = vec![0.0; 2 * l - 1];
    for (i, slot) in rho_tilde.iter_mut().enumerate() {
        let lag = i as isize - (l as isize - 1);
        *slot = (0..l as isize)
            .filter(|&t| t - lag >= 0 && t - lag < l as isize)
            .map(|t| rho[t as usize] * rho[(t - lag) as usize])
            .sum();
    }

    let nf = n as f64;
    let lambda = rho_tilde
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lag = (i as isize - (l as isize - 1)).unsigned_abs() as f64;
            (1.0 - lag / nf).powi(2) * r
        })
        .sum();

    let rho_bar = (0..n)
        .map(|q| {
            rho.iter()
                .enumerate()
                .map(|(t, p)| C64::from_polar(*p, -2.0 * PI * ((t * q) % n) as f64 / nf))
                .sum()
        })
        .collect();

    Ok(PdpStats {
        tau_av,
        rho_tilde,
        lambda,
        rho_bar,
        n,
        l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn etu_on_lte_grid() {
        let pdp = pdp_from_profile("ETU", LTE_5MHZ_SAMPLE_RATE).unwrap();
        assert_eq!(pdp.len(), 39);
        assert_abs_diff_eq!(pdp.powers().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // Hand mapping: {0, 50} -> 0, 120 -> 1, {200, 230} -> 2, 500 -> 4,
        // 1600 -> 12, 2300 -> 18, 5000 -> 38.
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let total: f64 = ETU_TAPS.iter().map(|t| lin(t.1)).sum();
        let expected = [
            (0, 2.0 * lin(-1.0)),
            (1, lin(-1.0)),
            (2, 2.0),
            (4, 1.0),
            (12, lin(-3.0)),
            (18, lin(-5.0)),
            (38, lin(-7.0)),
        ];
        let mut nonzero = 0;
        for (i, &p) in pdp.powers().iter().enumerate() {
            if p > 0.0 {
                nonzero += 1;
            }
            if let Some(&(_, e)) = expected.iter().find(|e| e.0 == i) {
                assert_abs_diff_eq!(p, e / total, epsilon = 1e-15);
            }
        }
        assert_eq!(nonzero, expected.len());
    }

    #[test]
    fn tdl_a_is_longer_than_etu() {
        let pdp = pdp_from_profile("TDL-A-1100ns", LTE_5MHZ_SAMPLE_RATE).unwrap();
        // last tap 9.6586 * 1100 ns ~ 81.6 samples at 7.68 MHz
        assert!((80..=84).contains(&pdp.len()), "L = {}", pdp.len());
        assert_abs_diff_eq!(pdp.powers().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scaled_tdl_has_requested_rms() {
        let taps = tdl_a_taps(1100.0);
        let lin: Vec<f64> = taps.iter().map(|t| 10f64.powf(t.1 / 10.0)).collect();
        let tot: f64 = lin.iter().sum();
        let mean = taps.iter().zip(&lin).map(|(t, p)| t.0 * p).sum::<f64>() / tot;
        let rms = (taps.iter().zip(&lin).map(|(t, p)| (t.0 - mean).powi(2) * p).sum::<f64>() / tot).sqrt();
        assert_abs_diff_eq!(rms, 1100.0, epsilon = 1e-9);
    }

    #[test]
    fn unknown_profile_is_rejected() {
        assert!(matches!(pdp_from_profile("EPA", 1e6), Err(Error::UnknownProfile(_))));
        assert!(matches!(pdp_from_profile("TDL-A-xns", 1e6), Err(Error::UnknownProfile(_))));
    }

    #[test]
    fn custom_profiles() {
        let one = PowerDelayProfile::from_taps("c", &[(0.0, 3.0)], 1e6).unwrap();
        assert_eq!(one.powers(), &[1.0]);
        // 1 us at 1 MHz = exactly one sample
        let two = PowerDelayProfile::from_taps("c", &[(0.0, 0.0), (1000.0, 0.0)], 1e6).unwrap();
        assert_eq!(two.powers(), &[0.5, 0.5]);
    }

    #[test]
    fn ties_round_down_and_merge() {
        // 500 ns at 1 MHz is exactly half a sample -> sample 0
        let pdp = PowerDelayProfile::from_taps("t", &[(0.0, 0.0), (500.0, 0.0)], 1e6).unwrap();
        assert_eq!(pdp.powers(), &[1.0]);
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let pdp = PowerDelayProfile::from_powers("t", &[2.0, 2.0, 0.0], 1.0).unwrap();
        assert_eq!(pdp.powers(), &[0.5, 0.5]);
        assert!(PowerDelayProfile::from_powers("t", &[0.0, 0.0], 1.0).is_err());
        assert!(PowerDelayProfile::from_powers("t", &[1.0, -0.1], 1.0).is_err());
    }

    #[test]
    fn parses_pdp_file_format() {
        let text = "# delay_ns, power_dB\n0, 0\n\n1000 0   # second tap\n";
        let pdp = parse_pdp_text("f", text, 1e6).unwrap();
        assert_eq!(pdp.powers(), &[0.5, 0.5]);
        assert!(parse_pdp_text("f", "0, 0, 1\n", 1e6).is_err());
        assert!(parse_pdp_text("f", "zero, 0\n", 1e6).is_err());
    }

    #[test]
    fn stats_single_tap() {
        let pdp = PowerDelayProfile::from_powers("1", &[1.0], 1.0).unwrap();
        let s = pdp_stats(&pdp, 16).unwrap();
        assert_eq!(s.tau_av, 0.0);
        assert_eq!(s.rho_tilde, vec![1.0]);
        assert_abs_diff_eq!(s.lambda, 1.0, epsilon = 1e-12);
        assert!(s.rho_bar.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn stats_two_tap_hand_values() {
        let pdp = PowerDelayProfile::from_powers("2", &[0.5, 0.5], 1.0).unwrap();
        let s = pdp_stats(&pdp, 4).unwrap();
        assert_abs_diff_eq!(s.tau_av, 0.5, epsilon = 1e-15);
        assert_eq!(s.rho_tilde, vec![0.25, 0.5, 0.25]);
        assert_abs_diff_eq!(s.lambda, 0.78125, epsilon = 1e-15);
        assert!((s.rho_bar[1] - C64::new(0.5, -0.5)).norm() < 1e-15);
        assert!(matches!(pdp_stats(&pdp, 1), Err(Error::DftTooShort { .. })));
    }

    #[test]
    fn stats_invariants_hold_for_builtin_profiles() {
        for name in ["ETU", "TDL-A-1100ns", "TDL-A-300ns"] {
            let pdp = pdp_from_profile(name, LTE_5MHZ_SAMPLE_RATE).unwrap();
            let s = pdp_stats(&pdp, 512).unwrap();
            let l = s.l as isize;
            for lag in 0..l {
                assert_eq!(s.rho_tilde_at(lag), s.rho_tilde_at(-lag));
            }
            assert_abs_diff_eq!(s.rho_tilde.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(s.lambda > 0.0 && s.lambda < 1.0);
        }
    }

    #[test]
    fn cir_draw_statistics_and_determinism() {
        let pdp = PowerDelayProfile::from_powers("p", &[0.6, 0.3, 0.1], 1.0).unwrap();
        let a = draw_cir(&mut RngStream::new(1, 2), &pdp, 4, 3).unwrap();
        let b = draw_cir(&mut RngStream::new(1, 2), &pdp, 4, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.antennas(), a.terminals(), a.len()), (4, 3, 3));
        assert_eq!(a.response(2, 1)[1], a.taps()[(2, 1, 1)]);

        // 10^5 draws per tap
        let big = draw_cir(&mut RngStream::new(5, 0), &pdp, 1000, 100).unwrap();
        for (l, rho) in pdp.powers().iter().enumerate() {
            let var: f64 = big
                .taps()
                .slice(ndarray::s![.., .., l])
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                / 1e5;
            assert!((var / rho - 1.0).abs() < 0.05, "tap {l}: {var} vs {rho}");
        }
        assert!(draw_cir(&mut RngStream::new(1, 1), &pdp, 0, 1).is_err());
    }
}
