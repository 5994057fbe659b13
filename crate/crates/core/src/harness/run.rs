//! Sweep execution. Sweep points run in order; the trials of one point are
//! spread over the rayon pool and reduced in trial order, so the table is
//! independent of the worker count.

use super::config::{ExperimentConfig, ExperimentKind};
use super::emit::{ResultRow, ResultTable};
use crate::analytics::{self, SystemParams};
use crate::channel::pdp_stats;
use crate::dsp::mix_index;
use crate::error::Result;
use crate::freq::{measure_sinr_freq_multi, saturation_sinr, CombinerKind};
use crate::measure::LinkParams;
use crate::ofdm::centered_mask;
use crate::tr::{measure_sinr_tr, TrMode};

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// FNV-1a, stable across platforms and releases.
fn label_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Master seed for the trials of one sweep point; trial `t` then uses
/// stream `t` under it.
pub fn point_seed(master: u64, experiment: &str, m: usize, k: usize, snr_index: usize) -> u64 {
    mix_index(&[master, label_hash(experiment), m as u64, k as u64, snr_index as u64])
}

struct RowBuilder<'a> {
    cfg: &'a ExperimentConfig,
    table: ResultTable,
}

impl RowBuilder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, m: usize, k: usize, snr_db: Option<f64>, method: &str, metric: &str, value: f64, stderr: Option<f64>, trials: usize) {
        self.table.rows.push(ResultRow {
            experiment: self.cfg.experiment.clone(),
            m,
            k,
            snr_db,
            method: method.to_string(),
            metric: metric.to_string(),
            value,
            stderr,
            trials,
            seed: self.cfg.master_seed,
        });
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut rb = RowBuilder {
        cfg,
        table: ResultTable::default(),
    };
    match cfg.kind {
        ExperimentKind::Complexity => run_complexity(&mut rb)?,
        ExperimentKind::Rates => run_rates(&mut rb)?,
        ExperimentKind::FreqSinr => run_freq(&mut rb)?,
        ExperimentKind::TrSinr => run_tr(&mut rb)?,
    }
    Ok(rb.table)
}

/// Validates every configuration first, then runs them in order.
pub fn run_all(cfgs: &[ExperimentConfig]) -> Result<ResultTable> {
    for c in cfgs {
        c.validate()?;
    }
    let mut table = ResultTable::default();
    for c in cfgs {
        table.extend(run(c)?);
    }
    Ok(table)
}

fn run_complexity(rb: &mut RowBuilder<'_>) -> Result<()> {
    let cfg = rb.cfg;
    let l = match cfg.channel_len {
        Some(l) => l,
        None => cfg.pdp()?.len(),
    };
    for &k in &cfg.k_list {
        for &m in &cfg.m_list {
            // the counts do not depend on the noise level or the PDP shape
            let p = SystemParams::new(m, k, cfg.n, l, cfg.q, 1.0, 1.0, 0.0)?;
            let mrc = analytics::complexity_cp_ofdm(&p, CombinerKind::Mrc)?.total();
            let zf = analytics::complexity_cp_ofdm(&p, CombinerKind::Zf)?.total();
            let no_cp = analytics::complexity_no_cp(&p, cfg.block_len)?;
            let tr_mrc = no_cp.tr_mrc_total().expect("TR stage present");
            let tr_zf = no_cp.tr_zf_total().expect("both stages present");
            for (method, v) in [("MRC", mrc), ("ZF", zf), ("TR-MRC", tr_mrc), ("TR-ZF", tr_zf)] {
                rb.push(m, k, None, method, "complex_mults", v, None, 0);
            }
        }
    }
    Ok(())
}

fn run_rates(rb: &mut RowBuilder<'_>) -> Result<()> {
    let cfg = rb.cfg;
    let stats = pdp_stats(&cfg.pdp()?, cfg.n)?;
    for &k in &cfg.k_list {
        for &m in &cfg.m_list {
            for &snr in &cfg.snr_db {
                let mut p = SystemParams::from_stats(&stats, m, k, cfg.q, 10f64.powf(-snr / 10.0))?;
                if let Some(l_cp) = cfg.cp_len {
                    p = p.with_l_cp(l_cp);
                }
                let mut vals = vec![
                    ("TR-MRC", analytics::rate_tr_mrc(&p)),
                    ("CP-MRC", analytics::rate_cp_mrc(&p)),
                    ("TR-ZF", analytics::rate_tr_zf(&p)),
                ];
                if let Ok(v) = analytics::rate_cp_zf(&p) {
                    vals.push(("CP-ZF", v));
                }
                vals.push(("CP-ZF-asym", analytics::rate_cp_zf_asym(&p)));
                for (method, v) in vals {
                    rb.push(m, k, Some(snr), method, "rate_bps_hz", v, None, 0);
                }
            }
        }
    }
    Ok(())
}

fn link_params(cfg: &ExperimentConfig, m: usize, k: usize, snr: f64) -> LinkParams {
    let mut p = LinkParams::with_snr_db(cfg.n, m, k, snr);
    if let Some(a) = cfg.active_count {
        p.active_mask = centered_mask(cfg.n, a);
    }
    p.data_symbols = cfg.data_symbols;
    p.block_len = cfg.block_len;
    p
}

fn run_freq(rb: &mut RowBuilder<'_>) -> Result<()> {
    let cfg = rb.cfg;
    let pdp = cfg.pdp()?;
    let sat = db(saturation_sinr(&pdp_stats(&pdp, cfg.n)?));
    let kinds = cfg.combiners()?;
    for &k in &cfg.k_list {
        for &m in &cfg.m_list {
            for (si, &snr) in cfg.snr_db.iter().enumerate() {
                let params = link_params(cfg, m, k, snr);
                let seed = point_seed(cfg.master_seed, &cfg.experiment, m, k, si);
                let res = measure_sinr_freq_multi(&pdp, &params, &kinds, cfg.trials, seed)?;
                for (kind, r) in kinds.iter().zip(&res) {
                    rb.push(m, k, Some(snr), kind.name(), "sinr_dB", r.sinr_db, Some(r.sinr_db_stderr), r.trials);
                }
                rb.push(m, k, Some(snr), "saturation", "sinr_dB", sat, None, 0);
            }
        }
    }
    Ok(())
}

fn run_tr(rb: &mut RowBuilder<'_>) -> Result<()> {
    let cfg = rb.cfg;
    let pdp = cfg.pdp()?;
    let stats = pdp_stats(&pdp, cfg.n)?;
    let modes = cfg.tr_modes()?;
    for &k in &cfg.k_list {
        for &m in &cfg.m_list {
            for (si, &snr) in cfg.snr_db.iter().enumerate() {
                let params = link_params(cfg, m, k, snr);
                let seed = point_seed(cfg.master_seed, &cfg.experiment, m, k, si);
                let res = measure_sinr_tr(&pdp, &params, &modes, cfg.trials, seed)?;
                let sp = SystemParams::from_stats(&stats, m, k, cfg.q, params.noise_variance)?;
                for (mode, r) in modes.iter().zip(&res) {
                    rb.push(m, k, Some(snr), mode.name(), "sinr_dB", r.sinr_db, Some(r.sinr_db_stderr), r.trials);
                    let (label, theory) = match mode {
                        TrMode::TrMrc => ("TR-MRC-closed-form", analytics::sinr_tr_mrc(&sp)),
                        TrMode::TrZf => ("TR-ZF-closed-form", analytics::sinr_tr_zf(&sp)),
                    };
                    rb.push(m, k, Some(snr), label, "sinr_dB", db(theory), None, 0);
                }
            }
        }
    }
    Ok(())
}
