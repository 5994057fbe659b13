use std::process::{Command, Output};

fn cpfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpfree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_presets_names_every_figure() {
    let o = cpfree(&["list-presets"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fig2", "fig3", "fig4", "fig5", "fig6", "fig6-m100", "fig7"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}

#[test]
fn validate_passes_and_reports_each_oracle() {
    let o = cpfree(&["validate", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
    assert!(!text.contains("FAIL"));
}

#[test]
fn complexity_prints_the_table_totals() {
    let o = cpfree(&["complexity"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mrc = text
        .lines()
        .filter(|l| l.split_whitespace().next() == Some("MRC"))
        .next_back()
        .unwrap();
    assert_eq!(mrc.split_whitespace().nth(1), Some("14848000"));
    let o = cpfree(&["complexity", "-l", "300"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_preset_to_stdout_and_files() {
    let o = cpfree(&["run", "--preset", "fig6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("experiment,M,K,snr_dB,method,metric,value,stderr,trials,seed"));
    assert_eq!(text.lines().count(), 1 + 11 * 5);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = cpfree(&["run", "--preset", "fig5", "--out", out, "--format", "csv"]);
    assert!(o.status.success());
    assert!(dir.path().join("fig5a.csv").exists());
    assert!(dir.path().join("fig5b.csv").exists());
    assert!(!dir.path().join("fig5a.dat").exists());
}

#[test]
fn config_file_with_flag_overrides_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    let pdp = dir.path().join("pdp.txt");
    std::fs::write(&pdp, "0, 0\n130, -2\n260, -4\n").unwrap();
    std::fs::write(
        &cfg,
        format!(
            "experiment = small\nkind = tr-sinr\npdp_file = {}\nn = 32\nm = 8, 16\nk = 2\nsnr_db = 10\ntrials = 50\n",
            pdp.display()
        ),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let a = cpfree(&["run", "--config", c, "--trials", "4", "--seed", "3", "--threads", "1"]);
    let b = cpfree(&["run", "--config", c, "--trials", "4", "--seed", "3", "--threads", "2"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&b));
    let rows: Vec<String> = stdout(&a).lines().skip(1).map(str::to_string).collect();
    assert_eq!(rows.len(), 2 * 4);
    assert!(rows.iter().all(|r| r.ends_with(",3")));
    assert!(rows.iter().filter(|r| r.contains(",TR-MRC,")).all(|r| r.contains(",4,3")));
}

#[test]
fn bad_inputs_exit_with_config_status() {
    assert_eq!(cpfree(&["run", "--preset", "fig99"]).status.code(), Some(2));
    assert_eq!(cpfree(&["run", "--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
    assert_eq!(cpfree(&["run", "--preset", "fig3", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(cpfree(&["run"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kind = tr-sinr\nn = 40\n").unwrap();
    assert_eq!(cpfree(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
