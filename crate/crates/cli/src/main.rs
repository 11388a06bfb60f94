mod exec;
mod samples;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use robust_select::bench::{MeanConfig, MeanVarianceConfig, NormalBench, VarianceConfig};
use robust_select::boundary::ErrorRule;
use robust_select::experiments::{
    estimate_pcs, queueing_pcs_study, queueing_study, scheduling_study, Execution,
    ExperimentReport, Metric, Procedure, QueuePcsConfig, QueueStudyConfig, ReportRow,
    ScheduleStudyConfig, StudyError,
};
use robust_select::queueing::{path_rng, simulate_path, QueueModel};
use robust_select::sampler::Sampler as _;
use robust_select::scheduling::DurationData;
use robust_select::selection::{ProcedureConfig, SelectionError, DEFAULT_MAX_REPLICATIONS};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input files. Exit code 2.
    Usage(String),
    /// Failure while running. Exit code 1.
    Runtime(String),
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Config(_) | StudyError::Schedule(_) => CliError::Usage(e.to_string()),
            StudyError::Selection(SelectionError::Config(_)) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SelectionError> for CliError {
    fn from(e: SelectionError) -> Self {
        match e {
            SelectionError::Config(_) | SelectionError::Boundary(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "robust-select",
    version,
    about = "Robust selection of the best under input uncertainty"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Global {
    /// Base seed; replication r uses seed + r.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Run replications one at a time.
    #[arg(long, global = true)]
    serial: bool,
    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Use full experiment sizes instead of desk-scale defaults.
    #[arg(long, global = true)]
    paper_scale: bool,
}

impl Global {
    fn execution(&self) -> Execution {
        if self.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Realized PCS and sample sizes on a synthetic normal bench.
    Bench(BenchArgs),
    /// Staffing study on a multi-server queue with abandonment.
    Queue(QueueArgs),
    /// Operation sequencing study on duration data.
    Schedule(ScheduleArgs),
    /// Run one procedure on recorded or externally generated outputs.
    Select(SelectArgs),
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// sc, mdm or mixed.
    #[arg(long, default_value = "sc", value_parser = parse::<MeanConfig>)]
    means: MeanConfig,
    /// ev, iv or dv.
    #[arg(long, default_value = "ev", value_parser = parse::<VarianceConfig>)]
    vars: VarianceConfig,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    n0: u64,
    /// mult or add; add is only valid with --proc t.
    #[arg(long, default_value = "mult", value_parser = parse::<ErrorRule>)]
    rule: ErrorRule,
    /// t, s or v.
    #[arg(long = "proc", default_value = "s", value_parser = parse::<Procedure>)]
    procedure: Procedure,
    /// Defaults to 200, or 1000 with --paper-scale.
    #[arg(long)]
    runs: Option<usize>,
    /// Share random numbers across systems within a replication.
    #[arg(long)]
    crn: bool,
}

#[derive(Args)]
struct QueueArgs {
    /// Log-sd of the true lognormal service distribution.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Number of observed service times.
    #[arg(long, default_value_t = 50)]
    ell: usize,
    /// Macro-replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated procedures.
    #[arg(long, default_value = "s", value_delimiter = ',', value_parser = parse::<Procedure>)]
    procs: Vec<Procedure>,
    /// Estimate realized PCS over ambiguity sets instead.
    #[arg(long)]
    pcs: bool,
    /// Ambiguity sets for --pcs.
    #[arg(long)]
    sets: Option<usize>,
    /// Procedure runs per set for --pcs.
    #[arg(long)]
    runs: Option<usize>,
    /// Customers per simulated path.
    #[arg(long)]
    customers: Option<usize>,
    /// Named queue model.
    #[arg(long, default_value = "paper-sec6")]
    preset: String,
    /// Simulate one path with --servers servers and write its raw CSV here.
    #[arg(long)]
    export_path: Option<PathBuf>,
    /// Staffing level for --export-path.
    #[arg(long, default_value_t = 10)]
    servers: usize,
}

#[derive(Args)]
struct ScheduleArgs {
    /// CSV with one column of observed durations per operation.
    #[arg(long)]
    data: PathBuf,
    /// Fraction of each column given to the approaches.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long)]
    reps: Option<usize>,
    /// Cost samples per evaluated order.
    #[arg(long)]
    eval: Option<usize>,
    #[arg(long = "proc", default_value = "s", value_parser = parse::<Procedure>)]
    procedure: Procedure,
    /// Most product scenarios kept per ambiguity set.
    #[arg(long)]
    scenario_cap: Option<usize>,
}

#[derive(Args, Serialize)]
struct SelectArgs {
    /// Directory of i_j.csv files, one per system, one-based.
    #[arg(long, conflicts_with = "exec", required_unless_present = "exec")]
    samples: Option<PathBuf>,
    /// Command producing one line of k·m outputs per requested replication.
    #[arg(long, requires_all = ["k", "m"])]
    exec: Option<String>,
    /// Alternatives, for --exec.
    #[arg(long)]
    k: Option<usize>,
    /// Scenarios, for --exec.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    n0: u64,
    #[arg(long, default_value = "mult", value_parser = parse::<ErrorRule>)]
    rule: ErrorRule,
    #[arg(long = "proc", default_value = "s", value_parser = parse::<Procedure>)]
    procedure: Procedure,
    /// Cap on replications per system.
    #[arg(long)]
    max_reps: Option<u64>,
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn check_rule(procedure: Procedure, rule: ErrorRule) -> Result<(), CliError> {
    if rule == ErrorRule::Additive && procedure != Procedure::T {
        return Err(CliError::Usage(format!(
            "the additive error rule is only valid for the two-stage procedure (t), not {}; its inner layer needs every pairwise comparison",
            procedure.name().to_lowercase()
        )));
    }
    Ok(())
}

fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let (csv, json) = report
        .write_files(dir)
        .map_err(|e| CliError::Runtime(format!("writing report: {e}")))?;
    println!("{}", csv.display());
    println!("{}", json.display());
    Ok(())
}

fn cmd_bench(g: &Global, a: &BenchArgs) -> Result<(), CliError> {
    if a.k < 2 {
        return Err(CliError::Usage(format!(
            "--k must be at least 2, got {}",
            a.k
        )));
    }
    if a.m < 1 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    check_rule(a.procedure, a.rule)?;
    let runs = a.runs.unwrap_or(if g.paper_scale { 1000 } else { 200 });
    if runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let cfg = MeanVarianceConfig::standard(a.means, a.vars, a.k, a.m)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let pc = ProcedureConfig::new(a.delta, a.alpha, a.n0).with_rule(a.rule);
    let good = cfg.good_alternatives(a.delta);
    let est = estimate_pcs(
        a.procedure,
        &pc,
        |seed| NormalBench::new(cfg.clone(), seed, a.crn),
        &good,
        runs,
        g.seed,
        g.execution(),
    )?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        bench: &'a BenchArgs,
        runs: usize,
        seed: u64,
    }
    let mut report = ExperimentReport::new(
        "bench",
        &Resolved {
            bench: a,
            runs,
            seed: g.seed,
        },
        g.seed,
    );
    report.rows.push(
        ReportRow::new(format!("{} proc={}", cfg.label(), a.procedure.name()))
            .with("realized_pcs", est.pcs)
            .with("avg_samples", est.samples)
            .with("total_samples", Metric::exact(est.total_samples as f64))
            .with("truncated_runs", Metric::exact(est.truncated_runs as f64)),
    );
    eprintln!(
        "realized PCS {:.3} ± {:.3}, average samples {:.1} ± {:.1}",
        est.pcs.p, est.pcs.half_width, est.samples.mean, est.samples.half_width
    );
    write_report(&report, &g.out)
}

fn cmd_queue(g: &Global, a: &QueueArgs) -> Result<(), CliError> {
    if !(a.sigma > 0.0 && a.sigma.is_finite()) {
        return Err(CliError::Usage(format!(
            "--sigma must be positive, got {}",
            a.sigma
        )));
    }
    if a.ell < 2 {
        return Err(CliError::Usage("--ell must be at least 2".into()));
    }
    if a.procs.is_empty() {
        return Err(CliError::Usage("--procs is empty".into()));
    }
    let mut model = QueueModel::preset(&a.preset, a.sigma, a.servers.max(1))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(file) = &a.export_path {
        if a.servers == 0 {
            return Err(CliError::Usage("--servers must be positive".into()));
        }
        model.customers = a.customers.unwrap_or(model.customers);
        model
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let mut rng = path_rng(g.seed, a.servers as u64, 0);
        let stats = simulate_path(&model, &model.service.clone(), &mut rng);
        let out = std::fs::File::create(file)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", file.display())))?;
        stats
            .write_csv(std::io::BufWriter::new(out))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        eprintln!(
            "{} customers, {} abandoned -> {}",
            stats.customers(),
            stats.summary().abandon_count,
            file.display()
        );
        return Ok(());
    }
    if a.pcs {
        let mut cfg = QueuePcsConfig::desk(a.sigma, a.ell);
        if g.paper_scale {
            cfg.sets = 100;
            cfg.runs_per_set = 1000;
            cfg.customers = 10_000;
            cfg.truth_samples = 10_000;
        }
        cfg.sets = a.sets.unwrap_or(cfg.sets);
        cfg.runs_per_set = a.runs.unwrap_or(cfg.runs_per_set);
        cfg.customers = a.customers.unwrap_or(cfg.customers);
        cfg.procedures = a.procs.clone();
        cfg.base_seed = g.seed;
        cfg.execution = g.execution();
        let result = queueing_pcs_study(&cfg)?;
        for (p, s) in &result.spread {
            eprintln!(
                "{}: PCS min {:.3} median {:.3} max {:.3}",
                p.name(),
                s.min,
                s.median,
                s.max
            );
        }
        return write_report(&result.report, &g.out);
    }
    for &p in &a.procs {
        let mut cfg = if g.paper_scale {
            QueueStudyConfig::paper_scale(a.sigma, a.ell)
        } else {
            QueueStudyConfig::desk(a.sigma, a.ell)
        };
        cfg.macro_reps = a.reps.unwrap_or(cfg.macro_reps);
        cfg.customers = a.customers.unwrap_or(cfg.customers);
        cfg.procedure = p;
        cfg.base_seed = g.seed;
        cfg.execution = g.execution();
        let result = queueing_study(&cfg)?;
        let m = result.bf_vs_rsb[0];
        eprintln!(
            "{}: M_BF/M_RSB - 1 = {:+.2}% ± {:.2}%",
            p.name(),
            100.0 * m.mean,
            100.0 * m.half_width
        );
        write_report(&result.report, &g.out)?;
    }
    Ok(())
}

fn cmd_schedule(g: &Global, a: &ScheduleArgs) -> Result<(), CliError> {
    if !a.data.is_file() {
        return Err(CliError::Usage(format!(
            "data file {} not found",
            a.data.display()
        )));
    }
    let data = DurationData::from_path(&a.data).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg = if g.paper_scale {
        ScheduleStudyConfig::paper_scale(a.gamma)
    } else {
        ScheduleStudyConfig::desk(a.gamma)
    };
    cfg.macro_reps = a.reps.unwrap_or(cfg.macro_reps);
    cfg.eval_samples = a.eval.unwrap_or(cfg.eval_samples);
    cfg.scenario_cap = a.scenario_cap.unwrap_or(cfg.scenario_cap);
    if cfg.scenario_cap == 0 {
        return Err(CliError::Usage("--scenario-cap must be positive".into()));
    }
    cfg.procedure = a.procedure;
    cfg.base_seed = g.seed;
    cfg.execution = g.execution();
    let result = scheduling_study(&data, &cfg)?;
    for (name, rel) in &result.relative {
        eprintln!(
            "{name}/RSB - 1 on M: {:+.2}% ± {:.2}%",
            100.0 * rel[0].mean,
            100.0 * rel[0].half_width
        );
    }
    write_report(&result.report, &g.out)
}

fn cmd_select(g: &Global, a: &SelectArgs) -> Result<(), CliError> {
    check_rule(a.procedure, a.rule)?;
    let mut pc = ProcedureConfig::new(a.delta, a.alpha, a.n0).with_rule(a.rule);
    let outcome = if let Some(dir) = &a.samples {
        let mut sampler = samples::load_dir(dir)?;
        if sampler.alternatives() < 2 {
            return Err(CliError::Usage(
                "at least two alternatives are needed".into(),
            ));
        }
        let available = sampler.min_len() as u64;
        pc = pc.with_max_replications(a.max_reps.unwrap_or(available).min(available));
        a.procedure.run(&mut sampler, &pc)?
    } else {
        let spec = a
            .exec
            .as_deref()
            .expect("clap enforces --samples or --exec");
        let (k, m) = (a.k.unwrap_or(0), a.m.unwrap_or(0));
        if k < 2 || m < 1 {
            return Err(CliError::Usage("--exec needs --k ≥ 2 and --m ≥ 1".into()));
        }
        let mut sampler = exec::ExecSampler::spawn(spec, k, m)?;
        pc = pc.with_max_replications(a.max_reps.unwrap_or(DEFAULT_MAX_REPLICATIONS));
        a.procedure.run(&mut sampler, &pc)?
    };
    #[derive(Serialize)]
    struct Output<'a> {
        config: &'a SelectArgs,
        max_replications: u64,
        seed: u64,
        outcome: serde_json::Value,
    }
    let outcome_json: serde_json::Value =
        serde_json::from_str(&outcome.to_json()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let out = Output {
        config: a,
        max_replications: pc.max_replications,
        seed: g.seed,
        outcome: outcome_json,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).map_err(|e| CliError::Runtime(e.to_string()))?
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Bench(a) => cmd_bench(&cli.global, a),
        Command::Queue(a) => cmd_queue(&cli.global, a),
        Command::Schedule(a) => cmd_schedule(&cli.global, a),
        Command::Select(a) => cmd_select(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
