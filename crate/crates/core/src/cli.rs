//! The `splitting-hmc` command line: `tabulate`, `run` and `analyze`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::adapt::BOptTable;
use crate::diagnostics::{
    efficiency_summary, max_of, psrf_from_moments, ChainMoments, DiagnosticsReport,
};
use crate::error::{Error, Result};
use crate::model::{
    load_dataset, make_blr_model, make_gaussian_diag_mixture, make_gaussian_wishart,
    GaussianModel, LabelPosition, LoadOptions, Precision, TargetModel,
};
use crate::sampler::{
    chain_rng, prepare, production, ChainRecord, HmcConfig, IntegratorKind, PipelineState,
    ProductionPlan,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "splitting-hmc", version, about = "HMC with adaptive multi-stage splitting integrators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the minimax coefficient map for the k-stage family.
    Tabulate {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        k: u8,
        #[arg(long, default_value_t = crate::adapt::DEFAULT_N_GRID)]
        n_grid: usize,
        #[arg(long, default_value = "bopt.csv")]
        out: PathBuf,
    },
    /// Run the tuning, burn-in and production pipeline over a step-size sweep.
    Run(RunArgs),
    /// Recompute diagnostics from stored traces.
    Analyze {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "analysis.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// gaussian1, gaussian2, blr:<csv path> or custom:<file of diagonal precisions>.
    #[arg(long)]
    pub benchmark: String,
    /// Dimension of the synthetic Gaussian benchmarks.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated labels: VV, VV2, VV3, BCSS2, BCSS3, ME2, ME3, AIA2, sAIA2, sAIA3.
    #[arg(long, default_value = "sAIA3")]
    pub integrators: String,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the synthetic benchmark; defaults to the run seed.
    #[arg(long)]
    pub model_seed: Option<u64>,
    /// Flat `key = value` file with configuration fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub i_omega: bool,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha_target: Option<f64>,
    #[arg(long)]
    pub n_tune: Option<usize>,
    #[arg(long)]
    pub n_burnin: Option<usize>,
    #[arg(long)]
    pub n_pr: Option<usize>,
    #[arg(long)]
    pub n_grid: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt_frac: Option<f64>,
    /// Compute the spectrum and S_ω for the report even when unused.
    #[arg(long)]
    pub report_spectrum: bool,
    /// Write one trace CSV per chain under `<out>/traces`.
    #[arg(long)]
    pub traces: bool,
    /// Where coefficient tables are cached (default: the output directory).
    #[arg(long)]
    pub table_dir: Option<PathBuf>,
    /// BLR files with the label in the first column.
    #[arg(long)]
    pub labels_first: bool,
    /// Standard deviation of the random starting point of each repetition.
    #[arg(long, default_value_t = 2.0)]
    pub init_sd: f64,
}

/// Target selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Benchmark {
    /// Dense Wishart precision.
    Gaussian1,
    /// Diagonal precision, 99% of entries near 1000 and 1% near 4000.
    Gaussian2,
    Blr(PathBuf),
    /// Diagonal precision read from a file, one value per line.
    Custom(PathBuf),
}

impl Benchmark {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian1" => Ok(Benchmark::Gaussian1),
            "gaussian2" => Ok(Benchmark::Gaussian2),
            _ => {
                if let Some(p) = s.strip_prefix("blr:") {
                    Ok(Benchmark::Blr(p.into()))
                } else if let Some(p) = s.strip_prefix("custom:") {
                    Ok(Benchmark::Custom(p.into()))
                } else {
                    Err(Error::InvalidArgument(format!("unknown benchmark {s:?}")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Benchmark::Gaussian1 => "gaussian1".into(),
            Benchmark::Gaussian2 => "gaussian2".into(),
            Benchmark::Blr(p) => format!("blr:{}", p.display()),
            Benchmark::Custom(p) => format!("custom:{}", p.display()),
        }
    }

    /// Trajectory constant `τ` used when none is configured.
    pub fn default_tau(&self) -> f64 {
        match self {
            Benchmark::Gaussian1 => 4.0,
            _ => 1.0,
        }
    }
}

/// One experiment: a benchmark, integrators, sweep size and configuration.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub benchmark: Benchmark,
    pub dim: usize,
    pub model_seed: u64,
    pub integrators: Vec<IntegratorKind>,
    pub reps: usize,
    pub out_dir: PathBuf,
    pub config: HmcConfig,
    pub traces: bool,
    pub table_dir: PathBuf,
    pub label_position: LabelPosition,
    pub init_sd: f64,
}

impl ExperimentSpec {
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let benchmark = Benchmark::parse(&args.benchmark)?;
        let mut config = HmcConfig::default();
        let mut tau_set = false;
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            tau_set = text.lines().any(|l| l.split('#').next().unwrap().trim().starts_with("tau"));
            let rest = config.apply_str(&text)?;
            if let Some((k, _)) = rest.first() {
                return Err(Error::Config(format!("unknown key {k:?} in {}", path.display())));
            }
        }
        if let Some(s) = args.seed {
            config.seed = s;
        }
        match args.tau {
            Some(t) => config.tau = t,
            None if !tau_set => config.tau = benchmark.default_tau(),
            None => {}
        }
        if args.i_omega {
            config.i_omega = true;
        }
        if args.report_spectrum {
            config.report_spectrum = true;
        }
        macro_rules! over {
            ($field:ident) => {
                if let Some(v) = args.$field {
                    config.$field = v;
                }
            };
        }
        over!(alpha_target);
        over!(n_tune);
        over!(n_burnin);
        over!(n_pr);
        over!(n_grid);
        if let Some(g) = args.grid {
            config.randomization.grid_points = g;
        }
        if let Some(f) = args.dt_frac {
            config.randomization.dt_frac = f;
        }
        config.validate()?;
        let integrators = args
            .integrators
            .split(',')
            .map(|s| IntegratorKind::from_label(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        if integrators.is_empty() {
            return Err(Error::InvalidArgument("no integrators given".into()));
        }
        if args.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if !(args.init_sd >= 0.0) {
            return Err(Error::InvalidArgument("init_sd must be nonnegative".into()));
        }
        Ok(ExperimentSpec {
            dim: args.dim.unwrap_or(1000),
            model_seed: args.model_seed.unwrap_or(config.seed),
            integrators,
            reps: args.reps,
            table_dir: args.table_dir.clone().unwrap_or_else(|| args.out.clone()),
            out_dir: args.out.clone(),
            traces: args.traces,
            label_position: if args.labels_first {
                LabelPosition::First
            } else {
                LabelPosition::Last
            },
            init_sd: args.init_sd,
            benchmark,
            config,
        })
    }

    pub fn build_model(&self) -> Result<Box<dyn TargetModel + Send + Sync>> {
        Ok(match &self.benchmark {
            Benchmark::Gaussian1 => Box::new(make_gaussian_wishart(self.dim, self.model_seed)?),
            Benchmark::Gaussian2 => {
                let d1 = (self.dim as f64 * 0.99).round() as usize;
                Box::new(make_gaussian_diag_mixture(
                    d1,
                    self.dim - d1,
                    1000.0,
                    10.0,
                    4000.0,
                    40.0,
                    self.model_seed,
                )?)
            }
            Benchmark::Blr(path) => {
                let opts = LoadOptions {
                    label_position: self.label_position,
                    standardize: true,
                    intercept: true,
                    ..LoadOptions::default()
                };
                Box::new(make_blr_model(load_dataset(path, &opts)?)?)
            }
            Benchmark::Custom(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut diag = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let t = line.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    diag.push(t.parse::<f64>().map_err(|_| Error::Parse {
                        row: i + 1,
                        column: 1,
                        message: format!("cannot parse {t:?}"),
                    })?);
                }
                Box::new(GaussianModel::centered(Precision::Diagonal(
                    nalgebra::DVector::from_vec(diag),
                ))?)
            }
        })
    }
}

/// Writes the `k`-stage table to `out`.
pub fn cmd_tabulate(k: usize, n_grid: usize, out: &Path) -> Result<BOptTable> {
    let table = crate::adapt::tabulate_bopt(k, n_grid)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    table.write_csv(out)?;
    Ok(table)
}

/// Header shared by per-chain metric files (`runs.csv`, `analyze` output).
pub const CHAIN_HEADER: &str =
    "name,integrator,k,l_bar,n,ar,min_ess,min_inv_mcse,min_ess_norm,min_inv_mcse_norm,max_psrf_split,grad_evals,divergences,clamped_lookups";

/// One per-chain metrics row.
pub fn chain_row(name: &str, record: &ChainRecord, report: &DiagnosticsReport) -> String {
    format!(
        "{name},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        record.label,
        record.stages,
        record.l_bar,
        report.n,
        report.ar,
        report.min_ess,
        report.min_inv_mcse,
        report.min_ess_norm,
        report.min_inv_mcse_norm,
        report.max_psrf,
        report.grad_evals_actual,
        record.divergences,
        record.clamped_lookups
    )
}

/// Outcome of one production chain in a sweep.
#[derive(Debug, Clone)]
pub struct TaskResult {
    pub rep: usize,
    pub integrator: usize,
    pub grid: usize,
    pub center_dt: f64,
    pub outcome: std::result::Result<TaskMetrics, String>,
    /// The adaptive 2-stage selection declined this step size.
    pub aborted: bool,
}

#[derive(Debug, Clone)]
pub struct TaskMetrics {
    pub row: String,
    pub report: DiagnosticsReport,
    pub moments: ChainMoments,
}

/// Aggregated metrics of one (integrator, grid point) pair over repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub integrator: String,
    pub k: usize,
    pub grid: usize,
    /// Mean centre step `kΔt_i` over repetitions.
    pub dt: f64,
    pub ar: f64,
    pub min_ess_norm: f64,
    pub min_ess_norm_sd: f64,
    pub min_inv_mcse_norm: f64,
    pub max_psrf: f64,
    pub completed: usize,
}

/// Result of [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub states: Vec<PipelineState>,
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<String>,
}

fn table_for(spec: &ExperimentSpec, k: usize) -> Result<BOptTable> {
    std::fs::create_dir_all(&spec.table_dir).map_err(|e| Error::io(&spec.table_dir, e))?;
    let path = spec.table_dir.join(format!("bopt_k{k}_n{}.csv", spec.config.n_grid));
    BOptTable::load_or_tabulate(path, k, spec.config.n_grid)
}

fn stream(rep: usize, integ: usize, grid: usize) -> u64 {
    (rep * 1_000_000 + integ * 1000 + grid) as u64
}

/// Executes the sweep: per repetition one tuning and burn-in, then one
/// production chain per integrator and grid point. Writes `metrics.csv`
/// (aggregated), `runs.csv` (per chain) and `manifest.txt` to the output
/// directory.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<RunSummary> {
    let model = spec.build_model()?;
    let model: &(dyn TargetModel + Send + Sync) = model.as_ref();
    let cfg = &spec.config;
    std::fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let trace_dir = spec.out_dir.join("traces");
    if spec.traces {
        std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
    }
    let mut tables: Vec<Option<BOptTable>> = vec![None, None, None, None];
    for integ in &spec.integrators {
        if let Some(k) = integ.table_stages() {
            if tables[k].is_none() {
                tables[k] = Some(table_for(spec, k)?);
            }
        }
    }

    let dim = model.dim();
    let states: Vec<PipelineState> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = chain_rng(cfg.seed, stream(rep, 0, 0));
            let start: Vec<f64> = (0..dim)
                .map(|_| spec.init_sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            prepare(model, cfg, &start, &mut rng)
        })
        .collect::<Result<_>>()?;

    let g = cfg.randomization.grid_points;
    let mut tasks = Vec::new();
    for rep in 0..spec.reps {
        for ii in 0..spec.integrators.len() {
            for grid in 1..=g {
                tasks.push((rep, ii, grid));
            }
        }
    }
    let results: Vec<TaskResult> = tasks
        .par_iter()
        .map(|&(rep, ii, grid)| {
            let integ = spec.integrators[ii].clone();
            let table = integ.table_stages().and_then(|k| tables[k].as_ref());
            let plan = ProductionPlan::for_grid_point(integ, &states[rep], cfg, grid);
            let center_dt = plan.center_dt;
            let mut rng = chain_rng(cfg.seed, stream(rep, ii, grid) + 1);
            let name = format!("rep{rep}_{}_g{grid:02}", spec.integrators[ii].label());
            let run = production(model, &states[rep], table, &plan, cfg, &mut rng)
                .and_then(|rec| {
                    if spec.traces {
                        rec.write_csv(trace_dir.join(format!("{name}.csv")))?;
                    }
                    let report = efficiency_summary(&rec, None)?;
                    let moments = ChainMoments::from_samples(&rec.samples, rec.dim)?;
                    Ok(TaskMetrics { row: chain_row(&name, &rec, &report), report, moments })
                });
            let aborted = matches!(run, Err(Error::AiaAbort { .. }));
            TaskResult {
                rep,
                integrator: ii,
                grid,
                center_dt,
                outcome: run.map_err(|e| format!("{name}: {e}")),
                aborted,
            }
        })
        .collect();

    let rows = aggregate(spec, &results);
    let failures: Vec<String> = results
        .iter()
        .filter(|r| !r.aborted)
        .filter_map(|r| r.outcome.as_ref().err().cloned())
        .collect();
    write_run_outputs(spec, &states, &results, &rows, &failures)?;
    Ok(RunSummary { states, rows, failures })
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 {
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

fn aggregate(spec: &ExperimentSpec, results: &[TaskResult]) -> Vec<MetricsRow> {
    let g = spec.config.randomization.grid_points;
    let mut rows = Vec::new();
    for (ii, integ) in spec.integrators.iter().enumerate() {
        for grid in 1..=g {
            let cell: Vec<&TaskResult> =
                results.iter().filter(|r| r.integrator == ii && r.grid == grid).collect();
            let ok: Vec<&TaskMetrics> =
                cell.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let pick = |f: fn(&DiagnosticsReport) -> f64| -> Vec<f64> {
                ok.iter().map(|m| f(&m.report)).collect()
            };
            let (ar, _) = mean_sd(&pick(|r| r.ar));
            let (ess, ess_sd) = mean_sd(&pick(|r| r.min_ess_norm));
            let (inv, _) = mean_sd(&pick(|r| r.min_inv_mcse_norm));
            let (dt, _) = mean_sd(&cell.iter().map(|r| r.center_dt).collect::<Vec<_>>());
            let max_psrf = if ok.len() >= 2 {
                let moments: Vec<ChainMoments> = ok.iter().map(|m| m.moments.clone()).collect();
                psrf_from_moments(&moments).map(|v| max_of(&v)).unwrap_or(f64::NAN)
            } else if let Some(m) = ok.first() {
                m.report.max_psrf
            } else {
                f64::NAN
            };
            rows.push(MetricsRow {
                integrator: integ.label(),
                k: integ.stages(),
                grid,
                dt,
                ar,
                min_ess_norm: ess,
                min_ess_norm_sd: ess_sd,
                min_inv_mcse_norm: inv,
                max_psrf,
                completed: ok.len(),
            });
        }
    }
    rows
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn write_run_outputs(
    spec: &ExperimentSpec,
    states: &[PipelineState],
    results: &[TaskResult],
    rows: &[MetricsRow],
    failures: &[String],
) -> Result<()> {
    let mut m = String::new();
    writeln!(m, "# benchmark={} dim={} reps={}", spec.benchmark.name(), states[0].burnin_end.len(), spec.reps).unwrap();
    for (rep, s) in states.iter().enumerate() {
        let sigma = s.spectrum.as_ref().map(|f| f.sigma);
        writeln!(
            m,
            "# rep={rep} mode={} S={} S_omega={} sigma={} omega_max={} dt_vv={} ar_burnin={} dt_sl={}",
            s.mode.name(),
            s.fitting.s,
            opt(s.s_omega),
            opt(sigma),
            s.freqs.omega_max,
            s.dt_vv,
            s.ar_burnin,
            s.dt_sl
        )
        .unwrap();
    }
    writeln!(
        m,
        "integrator,k,grid,dt,h_per_stage,ar,min_ess_norm,min_ess_norm_sd,min_inv_mcse_norm,max_psrf,completed"
    )
    .unwrap();
    for r in rows {
        writeln!(
            m,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.integrator,
            r.k,
            r.grid,
            r.dt,
            r.dt / r.k as f64,
            r.ar,
            r.min_ess_norm,
            r.min_ess_norm_sd,
            r.min_inv_mcse_norm,
            r.max_psrf,
            r.completed
        )
        .unwrap();
    }
    write_file(&spec.out_dir.join("metrics.csv"), &m)?;

    let mut runs = String::from(CHAIN_HEADER);
    runs.push('\n');
    let mut manifest = String::new();
    for r in results {
        let label = spec.integrators[r.integrator].label();
        match &r.outcome {
            Ok(t) => {
                runs.push_str(&t.row);
                runs.push('\n');
                writeln!(manifest, "ok rep={} integrator={label} grid={}", r.rep, r.grid).unwrap();
            }
            Err(e) if r.aborted => writeln!(manifest, "aborted {e}").unwrap(),
            Err(e) => writeln!(manifest, "failed {e}").unwrap(),
        }
    }
    write_file(&spec.out_dir.join("runs.csv"), &runs)?;
    writeln!(manifest, "# {} failed", failures.len()).unwrap();
    write_file(&spec.out_dir.join("manifest.txt"), &manifest)
}

/// Reads traces, writes per-trace metrics plus, for two or more traces of
/// equal shape, the PSRF across them.
pub fn cmd_analyze(paths: &[PathBuf], out: &Path) -> Result<Vec<DiagnosticsReport>> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no traces given".into()));
    }
    let records = paths.iter().map(ChainRecord::read_csv).collect::<Result<Vec<_>>>()?;
    let reports =
        records.iter().map(|r| efficiency_summary(r, None)).collect::<Result<Vec<_>>>()?;
    let mut text = String::new();
    if records.len() >= 2 {
        let moments = records
            .iter()
            .map(|r| ChainMoments::from_samples(&r.samples, r.dim))
            .collect::<Result<Vec<_>>>()?;
        let across = psrf_from_moments(&moments)?;
        writeln!(text, "# max_psrf_across={}", max_of(&across)).unwrap();
    }
    text.push_str(CHAIN_HEADER);
    text.push('\n');
    for ((p, rec), rep) in paths.iter().zip(&records).zip(&reports) {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        text.push_str(&chain_row(&name, rec, rep));
        text.push('\n');
    }
    write_file(out, &text)?;
    Ok(reports)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Tabulate { k, n_grid, out } => {
            cmd_tabulate(*k as usize, *n_grid, out).map(|t| {
                println!("wrote {} rows to {}", t.h.len(), out.display());
            })
        }
        Command::Run(args) => match ExperimentSpec::from_args(args) {
            Ok(spec) => cmd_run(&spec).and_then(|s| {
                println!("wrote {} metric rows to {}", s.rows.len(), spec.out_dir.display());
                if s.failures.is_empty() {
                    Ok(())
                } else {
                    for f in &s.failures {
                        eprintln!("failed: {f}");
                    }
                    Err(Error::Numerical(format!("{} chains failed", s.failures.len())))
                }
            }),
            Err(e @ (Error::InvalidArgument(_) | Error::Config(_))) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            Err(e) => Err(e),
        },
        Command::Analyze { traces, out } => cmd_analyze(traces, out).map(|r| {
            println!("analyzed {} traces into {}", r.len(), out.display());
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
