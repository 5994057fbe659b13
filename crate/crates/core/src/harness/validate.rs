//! Small-instance oracle suite: every fast path against a dense or
//! brute-force reference on random channels. Tolerances do not depend on
//! the seed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::channel::{pdp_from_profile, pdp_stats, CirSet, PowerDelayProfile, LTE_5MHZ_SAMPLE_RATE};
use crate::dsp::{convolve_direct, convolve_fast, RngStream, C64, ZERO};
use crate::error::Result;
use crate::freq::{asym_coeffs, saturation_sinr};
use crate::ofdm::{apply_channel, build_symbol_matrices, full_mask, modulate, Constellation};
use crate::tr::{coupling_matrices, equivalent_channel, stat_matrices, tr_coefficient, zf_diag_fast, CouplingRoute, SymbolGroup};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<OracleCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OracleCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

fn random_cir(rng: &mut RngStream, m: usize, k: usize, l: usize) -> Result<CirSet> {
    CirSet::from_fn(m, k, l, |_| rng.cn(1.0))
}

fn max_dev<'a>(a: impl IntoIterator<Item = &'a C64>, b: impl IntoIterator<Item = &'a C64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn dense_dft(n: usize) -> DMatrix<C64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |r, c| C64::from_polar(s, -2.0 * PI * ((r * c) % n) as f64 / n as f64))
}

/// Received samples of one interior symbol against the two-matrix model.
fn matrix_model(rng: &mut RngStream) -> Result<f64> {
    let (n, l, m, k) = (8, 3, 4, 2);
    let cir = random_cir(rng, m, k, l)?;
    let frame = modulate(rng, k, 4, n, Constellation::Gaussian, &full_mask(n), 0)?;
    let rx = apply_channel(&frame, &cir, rng, 0.0)?;
    let mut err: f64 = 0.0;
    for i in 1..4 {
        for mm in 0..m {
            let mut y = DVector::from_element(n, ZERO);
            for kk in 0..k {
                let (prev, curr) = build_symbol_matrices(&cir, mm, kk, n)?;
                y += prev * DVector::from_column_slice(frame.symbol_samples(kk, i - 1))
                    + curr * DVector::from_column_slice(frame.symbol_samples(kk, i));
            }
            err = err.max(max_dev(y.iter(), &rx.antenna(mm)[i * n..(i + 1) * n]));
        }
    }
    Ok(err)
}

fn overlap_save(rng: &mut RngStream) -> Result<f64> {
    let mut err: f64 = 0.0;
    for (len, l, block) in [(100, 7, 16), (37, 37, 64), (5, 3, 4), (300, 39, 128)] {
        let x: Vec<C64> = (0..len).map(|_| rng.cn(1.0)).collect();
        let h: Vec<C64> = (0..l).map(|_| rng.cn(1.0)).collect();
        err = err.max(max_dev(&convolve_fast(&x, &h, block)?, &convolve_direct(&x, &h)?));
    }
    Ok(err)
}

/// The three `N x N` TR-output blocks of terminal `k` driven by `j`'s
/// previous, current and next symbol, built from the lag sequence.
fn dense_tr_blocks(g: &dyn Fn(isize) -> C64, n: usize) -> [DMatrix<C64>; 3] {
    let ni = n as isize;
    let at = |off: isize| DMatrix::from_fn(n, n, |r, c| g(r as isize - c as isize + off));
    [at(ni), at(0), at(-ni)]
}

fn tr_coefficients(rng: &mut RngStream) -> Result<f64> {
    let (n, l, m, k) = (8, 3, 4, 2);
    let trch = equivalent_channel(&random_cir(rng, m, k, l)?);
    let f = dense_dft(n);
    let mut err: f64 = 0.0;
    for kk in 0..k {
        for j in 0..k {
            let blocks = dense_tr_blocks(&|lag| trch.at(kk, j, lag), n);
            for (blk, which) in blocks.iter().zip([SymbolGroup::Prev, SymbolGroup::Curr, SymbolGroup::Next]) {
                let big = &f * blk * f.adjoint();
                for p in 0..n {
                    for q in 0..n {
                        let v = tr_coefficient(&trch, kk, j, p, q, which, n)?;
                        err = err.max((v - big[(p, q)]).norm());
                    }
                }
            }
        }
    }
    Ok(err)
}

fn fast_diagonal(rng: &mut RngStream) -> Result<f64> {
    let (n, l, m, k) = (16, 4, 4, 3);
    let trch = equivalent_channel(&random_cir(rng, m, k, l)?);
    let diag = zf_diag_fast(&trch, n)?;
    let f = dense_dft(n);
    let mut err: f64 = 0.0;
    for kk in 0..k {
        for j in 0..k {
            let [_, curr, _] = dense_tr_blocks(&|lag| trch.at(kk, j, lag), n);
            let big = &f * curr * f.adjoint();
            for (p, d) in diag.iter().enumerate() {
                err = err.max((d[(kk, j)] - big[(p, p)]).norm());
            }
        }
    }
    Ok(err)
}

/// Coupling power sums from both routes against explicit enumeration of
/// every coefficient.
fn quadratic_forms(rng: &mut RngStream) -> Result<f64> {
    let (n, l, m, k) = (8, 3, 4, 2);
    let trch = equivalent_channel(&random_cir(rng, m, k, l)?);
    let pdp = PowerDelayProfile::from_powers("v", &[0.5, 0.3, 0.2], 1.0)?;
    let stats = pdp_stats(&pdp, n)?;
    let mut err: f64 = 0.0;
    for p in 0..n {
        let s = stat_matrices(&stats, p)?;
        let (cur, isi) = coupling_matrices(&trch, p, n, CouplingRoute::FullBand)?;
        for kk in 0..k {
            for j in 0..k {
                let mut sum = 0.0;
                for q in 0..n {
                    for which in [SymbolGroup::Prev, SymbolGroup::Curr, SymbolGroup::Next] {
                        sum += tr_coefficient(&trch, kk, j, p, q, which, n)?.norm_sqr();
                    }
                }
                let g = DVector::from_column_slice(trch.response(kk, j));
                let quad = (g.adjoint() * &s.psi * &g)[(0, 0)];
                err = err.max((quad - C64::new(sum, 0.0)).norm());
                err = err.max((cur[j][(kk, kk)] + isi[j][(kk, kk)] - C64::new(sum, 0.0)).norm());
            }
        }
    }
    Ok(err)
}

fn stat_identities() -> Result<f64> {
    let etu = pdp_from_profile("ETU", LTE_5MHZ_SAMPLE_RATE)?;
    let two = PowerDelayProfile::from_powers("two", &[0.5, 0.5], 1.0)?;
    let mut err: f64 = 0.0;
    for (pdp, n, ps) in [(&etu, 512, [0usize, 100, 511]), (&two, 4, [0, 1, 3])] {
        let stats = pdp_stats(pdp, n)?;
        for p in ps {
            let s = stat_matrices(&stats, p)?;
            err = err.max((s.trace_gamma(&s.psi) - 1.0).norm());
            err = err.max((s.trace_gamma(&s.b_outer) - stats.lambda).norm());
            for i in 0..s.psi.nrows() {
                err = err.max((s.psi[(i, i)] - 1.0).norm());
            }
        }
    }
    Ok(err)
}

fn hand_values() -> Result<f64> {
    let two = PowerDelayProfile::from_powers("two", &[0.5, 0.5], 1.0)?;
    let stats = pdp_stats(&two, 4)?;
    let a = asym_coeffs(&stats);
    Ok((saturation_sinr(&stats) - 7.0)
        .abs()
        .max((stats.lambda - 0.78125).abs())
        .max((a.ici[1] - C64::new(0.0, 0.125)).norm()))
}

/// Runs every oracle on instances drawn from `seed`.
pub fn validate(seed: u64) -> Result<ValidationReport> {
    let rng = |i: u64| RngStream::new(seed, i);
    let checks = vec![
        OracleCheck {
            name: "matrix model vs time-domain convolution",
            error: matrix_model(&mut rng(0))?,
            tolerance: 1e-12,
        },
        OracleCheck {
            name: "overlap-save vs direct convolution",
            error: overlap_save(&mut rng(1))?,
            tolerance: 1e-10,
        },
        OracleCheck {
            name: "TR coefficients vs dense F G F^H",
            error: tr_coefficients(&mut rng(2))?,
            tolerance: 1e-12,
        },
        OracleCheck {
            name: "fast same-slot diagonal vs dense transform",
            error: fast_diagonal(&mut rng(3))?,
            tolerance: 1e-10,
        },
        OracleCheck {
            name: "quadratic-form interference vs enumeration",
            error: quadratic_forms(&mut rng(4))?,
            tolerance: 1e-10,
        },
        OracleCheck {
            name: "statistical identities of the coupling vectors",
            error: stat_identities()?,
            tolerance: 1e-10,
        },
        OracleCheck {
            name: "two-tap hand values",
            error: hand_values()?,
            tolerance: 1e-12,
        },
    ];
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_for_several_seeds() {
        for seed in [0, 1, 12345] {
            let r = validate(seed).unwrap();
            assert_eq!(r.checks.len(), 7);
            assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn a_failing_check_is_reported() {
        let bad = OracleCheck {
            name: "x",
            error: 1.0,
            tolerance: 0.5,
        };
        let r = ValidationReport { checks: vec![bad] };
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }
}
