//! Built-in experiments: LTE 5 MHz numerology (N = 512, 7.68 MHz sampling,
//! 15 kHz spacing) with the ETU and TDL-A profiles.

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};

const PRESETS: [(&str, &str); 10] = [
    ("fig2", "multiplication counts vs M (K = 10) and vs K (M = 200); N = 512, block 256, L = 40, Q = 10"),
    ("fig3", "MRC/ZF/MMSE SINR vs M with the saturation level; ETU, 300 active, K = 10, 10 dB"),
    ("fig3-full", "as fig3 with all 512 subcarriers active"),
    ("fig4", "TR-MRC/TR-ZF SINR vs M with closed forms; ETU, 300 active, K = 10, 10 dB"),
    ("fig4-full", "as fig4 with all 512 subcarriers active"),
    ("fig5", "rates vs M with and without CP; ETU, -10 dB, K = 10 and K = 20"),
    ("fig6", "rates vs SNR; ETU, M = 200, K = 10"),
    ("fig6-m100", "as fig6 with M = 100"),
    ("fig7", "rates vs M with and without CP; TDL-A 1100 ns, -10 dB, K = 10"),
    ("all", "every preset above"),
];

pub fn list_presets() -> Vec<(&'static str, &'static str)> {
    PRESETS.to_vec()
}

fn base(experiment: &str, kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment: experiment.into(),
        kind,
        ..ExperimentConfig::default()
    }
}

fn steps(lo: usize, hi: usize, step: usize) -> Vec<usize> {
    (lo..=hi).step_by(step).collect()
}

fn complexity(experiment: &str, m_list: Vec<usize>, k_list: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        m_list,
        k_list,
        channel_len: Some(40),
        ..base(experiment, ExperimentKind::Complexity)
    }
}

fn sinr(experiment: &str, kind: ExperimentKind, active: Option<usize>) -> ExperimentConfig {
    ExperimentConfig {
        active_count: active,
        m_list: vec![25, 50, 100, 200, 300, 400, 500],
        snr_db: vec![10.0],
        ..base(experiment, kind)
    }
}

fn rates_vs_m(experiment: &str, profile: &str, k: usize) -> ExperimentConfig {
    ExperimentConfig {
        profile: profile.into(),
        m_list: steps(50, 500, 50),
        k_list: vec![k],
        snr_db: vec![-10.0],
        ..base(experiment, ExperimentKind::Rates)
    }
}

fn rates_vs_snr(experiment: &str, m: usize) -> ExperimentConfig {
    ExperimentConfig {
        m_list: vec![m],
        snr_db: (-20..=30).step_by(5).map(f64::from).collect(),
        ..base(experiment, ExperimentKind::Rates)
    }
}

/// The experiments behind a preset name.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let cfgs = match name.trim().to_ascii_lowercase().as_str() {
        "fig2" => vec![
            complexity("fig2a", steps(50, 500, 50), vec![10]),
            complexity("fig2b", vec![200], steps(2, 40, 2)),
        ],
        "fig3" => vec![sinr("fig3", ExperimentKind::FreqSinr, Some(300))],
        "fig3-full" => vec![sinr("fig3-full", ExperimentKind::FreqSinr, None)],
        "fig4" => vec![sinr("fig4", ExperimentKind::TrSinr, Some(300))],
        "fig4-full" => vec![sinr("fig4-full", ExperimentKind::TrSinr, None)],
        "fig5" => vec![rates_vs_m("fig5a", "ETU", 10), rates_vs_m("fig5b", "ETU", 20)],
        "fig6" => vec![rates_vs_snr("fig6", 200)],
        "fig6-m100" => vec![rates_vs_snr("fig6-m100", 100)],
        "fig7" => vec![rates_vs_m("fig7", "TDL-A-1100ns", 10)],
        "all" => {
            let mut all = Vec::new();
            for (p, _) in PRESETS.iter().filter(|(p, _)| *p != "all") {
                all.extend(preset(p)?);
            }
            all
        }
        other => return Err(Error::Config(format!("unknown preset '{other}'"))),
    };
    Ok(cfgs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for (name, _) in list_presets() {
            let cfgs = preset(name).unwrap();
            assert!(!cfgs.is_empty());
            for c in cfgs {
                c.validate().unwrap();
            }
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn fig6_variants_differ_only_in_m() {
        let a = preset("fig6").unwrap().remove(0);
        let b = preset("fig6-m100").unwrap().remove(0);
        assert_eq!(a.m_list, vec![200]);
        assert_eq!(b.m_list, vec![100]);
        assert_eq!(a.snr_db, b.snr_db);
    }
}
