//! `cpfree`: run experiment sweeps, the oracle suite and complexity counts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpfree_core::analytics::{complexity_cp_ofdm, complexity_no_cp, ComplexityReport, SystemParams};
use cpfree_core::freq::CombinerKind;
use cpfree_core::harness::{self, ExperimentConfig, ResultTable};
use cpfree_core::Error;

#[derive(Parser, Debug)]
#[command(name = "cpfree", version, about = "Massive MIMO OFDM without cyclic prefix: sweeps, oracles and complexity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Directory for result files (default: CSV on stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Channel realizations per sweep point
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a preset or a key=value configuration file
    Run {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output format when writing to --out
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Run the small-instance oracle suite
    Validate,
    /// Print complex-multiplication counts for one parameter set
    Complexity {
        #[arg(short = 'm', long, default_value_t = 200)]
        antennas: usize,
        #[arg(short = 'k', long, default_value_t = 10)]
        terminals: usize,
        #[arg(short = 'n', long, default_value_t = 512)]
        subcarriers: usize,
        /// Channel length in samples
        #[arg(short = 'l', long, default_value_t = 40)]
        channel_len: usize,
        /// OFDM symbols per packet
        #[arg(short = 'q', long, default_value_t = 10)]
        symbols: usize,
        /// Overlap-save block length
        #[arg(long, default_value_t = 256)]
        block_len: usize,
    },
    /// List the built-in presets
    ListPresets,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Gnuplot,
    Both,
}

/// Exit status 2 for anything wrong with the inputs, 1 otherwise.
fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::UnknownProfile(_) | Error::InvalidProfile(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return fail(&Error::Config("--threads must be >= 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Run { preset, config, format } => run(preset.as_deref(), config.as_deref(), format, &cli.common),
        Command::Validate => validate(cli.common.seed.unwrap_or(1)),
        Command::Complexity {
            antennas,
            terminals,
            subcarriers,
            channel_len,
            symbols,
            block_len,
        } => complexity(antennas, terminals, subcarriers, channel_len, symbols, block_len),
        Command::ListPresets => {
            for (name, what) in harness::list_presets() {
                println!("{name:<10} {what}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| fail(&e))
}

fn run(preset: Option<&str>, config: Option<&Path>, format: Format, common: &Common) -> cpfree_core::Result<ExitCode> {
    let mut cfgs = match (preset, config) {
        (Some(p), _) => harness::preset(p)?,
        (None, Some(path)) => vec![ExperimentConfig::load(path)?],
        (None, None) => return Err(Error::Config("need --preset or --config".into())),
    };
    for c in &mut cfgs {
        if let Some(s) = common.seed {
            c.master_seed = s;
        }
        if let Some(t) = common.trials {
            c.trials = t;
        }
        if let Some(o) = &common.out {
            c.out = Some(o.clone());
        }
    }
    for c in &cfgs {
        c.validate()?;
    }
    for c in &cfgs {
        eprintln!("running {} ({})", c.experiment, c.kind);
        let table = harness::run(c)?;
        emit(&table, &c.experiment, c.out.as_deref(), format)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn emit(table: &ResultTable, experiment: &str, out: Option<&Path>, format: Format) -> cpfree_core::Result<()> {
    let Some(dir) = out else {
        print!("{}", table.to_csv_string()?);
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    if format != Format::Gnuplot {
        let path = dir.join(format!("{experiment}.csv"));
        table.write_csv(&path)?;
        eprintln!("wrote {}", path.display());
    }
    if format != Format::Csv {
        let path = dir.join(format!("{experiment}.dat"));
        table.write_gnuplot(&path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn validate(seed: u64) -> cpfree_core::Result<ExitCode> {
    let report = harness::validate(seed)?;
    for c in &report.checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!("{tag}  {:<48} error {:.3e} (tolerance {:.0e})", c.name, c.error, c.tolerance);
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_report(title: &str, r: &ComplexityReport) {
    println!("{title}");
    for part in &r.parts {
        for t in &part.terms {
            println!("  {:<14} {:<26} {:>16.0}", part.technique.name(), t.label, t.count);
        }
    }
}

fn complexity(m: usize, k: usize, n: usize, l: usize, q: usize, block_len: usize) -> cpfree_core::Result<ExitCode> {
    let to_cfg = |e: Error| Error::Config(e.to_string());
    let p = SystemParams::new(m, k, n, l, q, 1.0, 1.0, 0.0).map_err(to_cfg)?;
    let mrc = complexity_cp_ofdm(&p, CombinerKind::Mrc)?;
    let zf = complexity_cp_ofdm(&p, CombinerKind::Zf)?;
    let no_cp = complexity_no_cp(&p, block_len).map_err(to_cfg)?;
    print_report("CP-OFDM MRC", &mrc);
    print_report("CP-OFDM ZF", &zf);
    print_report("without CP", &no_cp);
    println!();
    println!("{:<8} {:>16.0}", "MRC", mrc.total());
    println!("{:<8} {:>16.0}", "ZF", zf.total());
    println!("{:<8} {:>16.0}", "TR-MRC", no_cp.tr_mrc_total().unwrap_or(f64::NAN));
    println!("{:<8} {:>16.0}", "TR-ZF", no_cp.tr_zf_total().unwrap_or(f64::NAN));
    Ok(ExitCode::SUCCESS)
}
