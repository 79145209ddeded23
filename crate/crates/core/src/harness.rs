//! Config-driven experiment runner.
//!
//! An experiment is a grid of cells `(algorithm, epsilon, T)`. Each cell runs
//! `runs_per_cell` independent simulations; run `i` of a cell draws from
//! `derive_stream(master_seed, cell_hash ^ i)`, so a cell's numbers depend
//! only on the seed and the cell itself, never on thread count or on which
//! other cells are in the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{make_figure_instance, ArmSpec, BanditInstance, InstancePreset};
use crate::error::{Error, Result};
use crate::metrics::{run_regrets, sample_std, CurveAccumulator, RegretReport};
use crate::policy::{PolicyKind, PolicyParams, DEFAULT_ALPHA, DEFAULT_C};
use crate::rng::derive_stream;
use crate::sim::run_policy;

pub const CSV_HEADER: [&str; 11] = [
    "algorithm",
    "epsilon",
    "k",
    "T",
    "runs",
    "nash_regret",
    "nash_regret_std",
    "avg_regret",
    "avg_regret_std",
    "floored_rounds",
    "seed",
];

pub const FIGURE_PRESETS: [&str; 6] = ["fig_a", "fig_b", "fig_c", "fig_d", "fig_e", "fig_f"];

// Runs held in memory at once per cell; bounds peak memory at large T.
const RUN_CHUNK: usize = 16;

/// Bandit instance of an experiment. The adversarial instance depends on the
/// horizon and is rebuilt for every `T` in the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum InstanceConfig {
    Adversarial,
    Bern50 {
        #[serde(default)]
        seed: u64,
    },
    Mixed50 {
        #[serde(default)]
        seed: u64,
    },
    Explicit {
        arms: Vec<ArmSpec>,
    },
}

impl InstanceConfig {
    pub fn build(&self, horizon: u64) -> Result<BanditInstance> {
        match self {
            InstanceConfig::Adversarial => make_figure_instance(&InstancePreset::Adversarial { horizon }),
            InstanceConfig::Bern50 { seed } => make_figure_instance(&InstancePreset::Bern50 { seed: *seed }),
            InstanceConfig::Mixed50 { seed } => make_figure_instance(&InstancePreset::Mixed50 { seed: *seed }),
            InstanceConfig::Explicit { arms } => BanditInstance::new(arms.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl From<PolicyKind> for AlgorithmSpec {
    fn from(name: PolicyKind) -> Self {
        Self {
            name,
            c: None,
            alpha: None,
        }
    }
}

// Accept either "gdp_ncb" or {"name": "gdp_ncb", "c": 3.0}.
#[derive(Deserialize)]
#[serde(untagged)]
enum AlgorithmRepr {
    Name(PolicyKind),
    Full {
        name: PolicyKind,
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
}

fn deserialize_algorithms<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<AlgorithmSpec>, D::Error> {
    let raw = Vec::<AlgorithmRepr>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|r| match r {
            AlgorithmRepr::Name(name) => name.into(),
            AlgorithmRepr::Full { name, c, alpha } => AlgorithmSpec { name, c, alpha },
        })
        .collect())
}

fn default_runs() -> usize {
    50
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub instance: InstanceConfig,
    #[serde(deserialize_with = "deserialize_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
    pub epsilon_list: Vec<f64>,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<u64>,
    #[serde(default = "default_runs")]
    pub runs_per_cell: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Render a regret-vs-T plot next to the CSV.
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub log_log: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_cell < 1 {
            return Err(Error::Config("runs_per_cell must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms".into()));
        }
        if self.epsilon_list.is_empty() {
            return Err(Error::Config("epsilon_list is empty".into()));
        }
        if let Some(e) = self.epsilon_list.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::Config(format!("epsilon must be > 0, got {e}")));
        }
        if self.t_grid.is_empty() || self.t_grid[0] == 0 {
            return Err(Error::Config("T_grid must be non-empty with T >= 1".into()));
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("T_grid must be strictly increasing".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        for a in &self.algorithms {
            PolicyParams {
                k: 2,
                horizon: 1,
                epsilon: 1.0,
                c: a.c.unwrap_or(DEFAULT_C),
                alpha: a.alpha.unwrap_or(DEFAULT_ALPHA),
            }
            .validate()
            .map_err(|e| Error::Config(format!("{}: {e}", a.name)))?;
        }
        Ok(())
    }

    /// Cells in output order: algorithm, then epsilon, then T. Non-private
    /// algorithms get a single epsilon of `inf`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for a in &self.algorithms {
            let eps: Vec<f64> = if a.name.is_private() {
                self.epsilon_list.clone()
            } else {
                vec![f64::INFINITY]
            };
            for &epsilon in &eps {
                for &horizon in &self.t_grid {
                    out.push(Cell {
                        algorithm: *a,
                        epsilon,
                        horizon,
                    });
                }
            }
        }
        out
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.csv", self.name))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub algorithm: AlgorithmSpec,
    pub epsilon: f64,
    pub horizon: u64,
}

impl Cell {
    /// FNV-1a over `name|epsilon bits|T`.
    pub fn hash(&self) -> u64 {
        let key = format!(
            "{}|{:016x}|{}",
            self.algorithm.name,
            self.epsilon.to_bits(),
            self.horizon
        );
        key.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// Runs one cell and aggregates its runs.
pub fn run_cell(config: &ExperimentConfig, cell: &Cell) -> Result<RegretReport> {
    let instance = config.instance.build(cell.horizon)?;
    let params = PolicyParams {
        k: instance.k(),
        horizon: cell.horizon,
        epsilon: cell.epsilon,
        c: cell.algorithm.c.unwrap_or(DEFAULT_C),
        alpha: cell.algorithm.alpha.unwrap_or(DEFAULT_ALPHA),
    };
    params.validate()?;
    let mu_star = instance.mu_star();
    let hash = cell.hash();
    let mut acc = CurveAccumulator::new(cell.horizon as usize);
    let mut nash = Vec::with_capacity(config.runs_per_cell);
    let mut avg = Vec::with_capacity(config.runs_per_cell);
    let runs: Vec<u64> = (0..config.runs_per_cell as u64).collect();
    for chunk in runs.chunks(RUN_CHUNK) {
        let traces: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|&i| {
                let stream = derive_stream(config.master_seed, hash ^ i);
                let trace = run_policy(cell.algorithm.name, params, &instance, &stream)?;
                Ok(trace.log_means().collect())
            })
            .collect::<Result<_>>()?;
        // Folded in run order so the result is independent of scheduling.
        for logs in traces {
            let (n, a) = run_regrets(&logs, mu_star)?;
            nash.push(n);
            avg.push(a);
            acc.add_run(logs)?;
        }
    }
    let curve = acc.finish()?;
    Ok(RegretReport {
        algorithm: cell.algorithm.name.name().into(),
        epsilon: cell.epsilon,
        k: instance.k(),
        horizon: cell.horizon,
        runs: config.runs_per_cell,
        nash_regret: crate::metrics::nash_regret(&curve, mu_star)?,
        nash_regret_std: sample_std(&nash),
        avg_regret: crate::metrics::average_regret(&curve, mu_star)?,
        avg_regret_std: sample_std(&avg),
        mu_star,
        floored_rounds: curve.floored_rounds(),
        seed: config.master_seed,
    })
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

/// Runs every cell without touching the filesystem.
pub fn run_cells(config: &ExperimentConfig) -> Result<Vec<RegretReport>> {
    config.validate()?;
    with_pool(config.threads, || {
        config.cells().iter().map(|c| run_cell(config, c)).collect()
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub reports: Vec<RegretReport>,
    pub csv_path: PathBuf,
    pub plot_path: Option<PathBuf>,
    pub warnings: Vec<String>,
}

/// Runs the experiment and writes `<output_dir>/<name>.csv` (plus an SVG
/// when `plot` is set).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let reports = run_cells(config)?;
    let csv_path = config.csv_path();
    write_csv(&csv_path, &reports)?;
    let (plot_path, warnings) = if config.plot {
        let path = csv_path.with_extension("svg");
        let summary = emit_plot(
            &csv_path,
            &path,
            &PlotSpec {
                log_log: config.log_log,
                title: config.name.clone(),
            },
        )?;
        (Some(path), summary.warnings)
    } else {
        (None, Vec::new())
    };
    Ok(ExperimentOutput {
        reports,
        csv_path,
        plot_path,
        warnings,
    })
}

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

pub fn csv_string(reports: &[RegretReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.algorithm.clone(),
            fmt_f64(r.epsilon),
            r.k.to_string(),
            r.horizon.to_string(),
            r.runs.to_string(),
            fmt_f64(r.nash_regret),
            fmt_f64(r.nash_regret_std),
            fmt_f64(r.avg_regret),
            fmt_f64(r.avg_regret_std),
            r.floored_rounds.to_string(),
            r.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(path: &Path, reports: &[RegretReport]) -> Result<()> {
    fs::write(path, csv_string(reports)?)?;
    Ok(())
}

/// One CSV row as read back for plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub algorithm: String,
    pub epsilon: f64,
    pub k: usize,
    pub horizon: u64,
    pub runs: usize,
    pub nash_regret: f64,
    pub nash_regret_std: f64,
    pub avg_regret: f64,
    pub avg_regret_std: f64,
    pub floored_rounds: usize,
    pub seed: u64,
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or_default().trim();
    raw.parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {} value {raw:?}", CSV_HEADER[i])))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = n + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected {} fields, got {}",
                CSV_HEADER.len(),
                rec.len()
            )));
        }
        rows.push(CsvRow {
            algorithm: rec[0].to_string(),
            epsilon: parse_field(&rec, 1, line)?,
            k: parse_field(&rec, 2, line)?,
            horizon: parse_field(&rec, 3, line)?,
            runs: parse_field(&rec, 4, line)?,
            nash_regret: parse_field(&rec, 5, line)?,
            nash_regret_std: parse_field(&rec, 6, line)?,
            avg_regret: parse_field(&rec, 7, line)?,
            avg_regret_std: parse_field(&rec, 8, line)?,
            floored_rounds: parse_field(&rec, 9, line)?,
            seed: parse_field(&rec, 10, line)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_csv(&fs::read_to_string(path)?)
}

fn base_config(
    name: &str,
    instance: InstanceConfig,
    algorithms: &[PolicyKind],
    eps: &[f64],
    t_grid: Vec<u64>,
) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        instance,
        algorithms: algorithms.iter().map(|&k| k.into()).collect(),
        epsilon_list: eps.to_vec(),
        t_grid,
        runs_per_cell: 50,
        master_seed: 0,
        output_dir: PathBuf::from("results"),
        threads: None,
        plot: true,
        log_log: false,
    }
}

/// Horizon grid shared by the 50-arm figures.
pub const LARGE_T_GRID: [u64; 5] = [10_000, 20_000, 50_000, 100_000, 200_000];
/// Privacy sweep of the epsilon figures.
pub const EPSILON_SWEEP: [f64; 4] = [0.1, 0.2, 0.5, 1.0];

/// Expanded config of a named figure.
///
/// * `fig_a`: adversarial two-arm instance, `T` in 50, 100, ..., 1000.
/// * `fig_b`: `bern50`, five algorithms at eps 0.2.
/// * `fig_c` / `fig_d`: `gdp_ncb` / `ldp_ncb` over eps in {0.1, 0.2, 0.5, 1.0}.
/// * `fig_e`: `bern50`, `ncb` vs the two private variants.
/// * `fig_f`: as `fig_e` on `mixed50`.
///
/// The `T` grids and the eps sweep are choices of this crate; only their
/// ranges are fixed by the experiments being reproduced.
pub fn figure_preset(name: &str) -> Result<ExperimentConfig> {
    use PolicyKind::*;
    let bern = InstanceConfig::Bern50 { seed: 0 };
    let grid = LARGE_T_GRID.to_vec();
    Ok(match name {
        "fig_a" => base_config(
            name,
            InstanceConfig::Adversarial,
            &[GdpNcb, AdapUcb],
            &[0.2],
            (1..=20).map(|i| 50 * i).collect(),
        ),
        "fig_b" => base_config(name, bern, &[Ncb, AdapUcb, LdpUcb, GdpNcb, LdpNcb], &[0.2], grid),
        "fig_c" => base_config(name, bern, &[GdpNcb], &EPSILON_SWEEP, grid),
        "fig_d" => base_config(name, bern, &[LdpNcb], &EPSILON_SWEEP, grid),
        "fig_e" => base_config(name, bern, &[Ncb, GdpNcb, LdpNcb], &[0.2], grid),
        "fig_f" => base_config(
            name,
            InstanceConfig::Mixed50 { seed: 0 },
            &[Ncb, GdpNcb, LdpNcb],
            &[0.2],
            grid,
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                FIGURE_PRESETS.join(", ")
            )))
        }
    })
}

#[derive(Clone, Debug, Default)]
pub struct PlotSpec {
    pub log_log: bool,
    pub title: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSummary {
    pub series: usize,
    pub warnings: Vec<String>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 170.0, 40.0, 50.0); // left, right, top, bottom

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64> + Clone, log: bool) -> Self {
        let lo = values.clone().fold(f64::INFINITY, f64::min);
        let hi = values.fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if log {
            (lo.log10(), hi.log10())
        } else {
            (lo.min(0.0), hi)
        };
        let (lo, hi) = if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        };
        Axis { lo, hi, log }
    }

    /// Position in [0, 1].
    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            (self.lo.floor() as i32..=self.hi.ceil() as i32)
                .map(|e| 10f64.powi(e))
                .filter(|v| (self.lo - 1e-9..=self.hi + 1e-9).contains(&v.log10()))
                .collect()
        } else {
            (0..=5)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0)
                .collect()
        }
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders nash regret against `T`, one polyline per (algorithm, epsilon).
pub fn emit_plot(csv_path: &Path, out_path: &Path, spec: &PlotSpec) -> Result<PlotSummary> {
    let rows = read_csv(csv_path)?;
    let (svg, summary) = render_svg(&rows, spec)?;
    fs::write(out_path, svg)?;
    Ok(summary)
}

pub fn render_svg(rows: &[CsvRow], spec: &PlotSpec) -> Result<(String, PlotSummary)> {
    if rows.is_empty() {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    let mut warnings = Vec::new();
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let label = format!("{} eps={}", r.algorithm, fmt_f64(r.epsilon));
        let point = (r.horizon as f64, r.nash_regret);
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push(point),
            None => series.push((label, vec![point])),
        }
    }
    if spec.log_log {
        let min_pos = series
            .iter()
            .flat_map(|(_, p)| p.iter().map(|q| q.1))
            .filter(|&y| y > 0.0)
            .fold(f64::INFINITY, f64::min);
        let floor = if min_pos.is_finite() {
            10f64.powf((min_pos.log10() - 1.0).floor())
        } else {
            1e-6
        };
        for (label, pts) in &mut series {
            for p in pts.iter_mut().filter(|p| !(p.1 > 0.0)) {
                warnings.push(format!(
                    "{label} at T={}: nash regret {} clamped to axis floor {floor:e}",
                    p.0, p.1
                ));
                p.1 = floor;
            }
        }
    }
    let all = || series.iter().flat_map(|(_, p)| p.iter().copied());
    let xa = Axis::new(all().map(|p| p.0), spec.log_log);
    let ya = Axis::new(all().map(|p| p.1), spec.log_log);
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let px = |x: f64| ml + xa.frac(x) * pw;
    let py = |y: f64| mt + (1.0 - ya.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        ml + pw / 2.0,
        xml_escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            mt + ph + 18.0,
            tick_label(t)
        );
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/>"#,
            ml - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            ml - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">T</text>"#,
        ml + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">Nash regret</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = mt + 14.0 + 18.0 * i as f64;
        let lx = ml + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok((
        s,
        PlotSummary {
            series: series.len(),
            warnings,
        },
    ))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
