use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dpncb_core::audit::{audit_bandit_global, audit_scalar_mechanism, AuditConfig, AuditReport, LaplaceMechanism};
use dpncb_core::harness::{emit_plot, figure_preset, run_experiment, ExperimentConfig, PlotSpec};
use dpncb_core::{PolicyKind, PolicyParams, ReplayTape};

#[derive(Parser)]
#[command(name = "dpncb", version, about = "Private Nash-regret bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write its CSV (and plot).
    Run(RunArgs),
    /// Render nash regret vs T from an experiment CSV.
    Plot(PlotArgs),
    /// Run one of the built-in privacy audits.
    Audit(AuditArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Figure preset: fig_a .. fig_f.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated horizons replacing the config's grid.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<u64>>,
    /// Skip the SVG.
    #[arg(long)]
    no_plot: bool,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    /// Output file; defaults to the CSV path with an .svg extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    log_log: bool,
    #[arg(long, default_value = "")]
    title: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditPreset {
    /// Lap(1/eps) on inputs 0 and 1.
    Laplace,
    /// Lap(1/(2 eps)) audited against eps; should be flagged.
    HalfScale,
    /// GDP-NCB arm sequences, k = 2, T = 6, on tapes differing in round 1.
    GdpSequence,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    preset: AuditPreset,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Trials per input.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))?
        }
        (None, Some(name)) => figure_preset(name)?,
        (None, None) => bail!("one of --config or --preset is required"),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs_per_cell = runs;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    if let Some(grid) = &args.t_grid {
        cfg.t_grid = grid.clone();
    }
    if args.no_plot {
        cfg.plot = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = load_config(&args)?;
    let out = run_experiment(&cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for r in &out.reports {
        println!(
            "{:<11} eps={:<5} T={:<7} nash={:.4} (std {:.4}) avg={:.4}",
            r.algorithm,
            if r.epsilon.is_finite() {
                r.epsilon.to_string()
            } else {
                "inf".into()
            },
            r.horizon,
            r.nash_regret,
            r.nash_regret_std,
            r.avg_regret
        );
    }
    println!("wrote {}", out.csv_path.display());
    if let Some(p) = out.plot_path {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| args.csv.with_extension("svg"));
    let summary = emit_plot(
        &args.csv,
        &out,
        &PlotSpec {
            log_log: args.log_log,
            title: args.title,
        },
    )
    .with_context(|| format!("plotting {}", args.csv.display()))?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {} ({} series)", out.display(), summary.series);
    Ok(())
}

fn audit(args: AuditArgs) -> Result<()> {
    let (name, report): (&str, AuditReport) = match args.preset {
        AuditPreset::Laplace | AuditPreset::HalfScale => {
            let eps = args.epsilon.unwrap_or(1.0);
            let cfg = AuditConfig::scalar(args.trials.unwrap_or(1_000_000), 100, -8.0, 9.0)
                .with_min_count(4000)
                .with_seed(args.seed);
            if matches!(args.preset, AuditPreset::Laplace) {
                let m = LaplaceMechanism::for_epsilon(eps)?;
                ("laplace", audit_scalar_mechanism(&m, 0.0, 1.0, eps, &cfg)?)
            } else {
                let m = LaplaceMechanism::half_scale(eps)?;
                ("half_scale", audit_scalar_mechanism(&m, 0.0, 1.0, eps, &cfg)?)
            }
        }
        AuditPreset::GdpSequence => {
            let eps = args.epsilon.unwrap_or(2.0);
            let params = PolicyParams::new(2, 6, eps)?;
            let tape = ReplayTape::new(vec![1.0; 6])?;
            let mut flipped = vec![1.0; 6];
            flipped[0] = 0.0;
            let cfg = AuditConfig::sequences(args.trials.unwrap_or(200_000), 6).with_seed(args.seed);
            let report = audit_bandit_global(PolicyKind::GdpNcb, params, &tape, &ReplayTape::new(flipped)?, &cfg)?;
            ("gdp_sequence", report)
        }
    };
    let json = report.to_json()?;
    println!("{json}");
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("audit_{name}.json"));
        fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Plot(a) => plot(a),
        Command::Audit(a) => audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dpncb: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
