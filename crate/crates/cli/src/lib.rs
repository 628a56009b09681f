//! Implementation of the `splpo` command line tool.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use splpo::ada::{ada, preset, preset_for, AdaConfig};
use splpo::exact::{branch_and_bound, brute_force_with, ExactStatus, Limits, ProblemSpec};
use splpo::instance::{generate_instance, load_orlib, GeneratorConfig, PreferenceMode};
use splpo::lagrange::{default_start, subgradient_method, SgConfig};
use splpo::par::Parallelism;
use splpo::report::{round_seconds, ReportRow, RunReport};
use splpo::semilagrange::{dual_ascent, DaConfig, DaStatus};
use splpo::solution::{heuristic_hc, heuristic_hs, Provenance, Solution};
use splpo::{Instance, SplpoError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INCOMPLETE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "splpo", version, about = "Plant location with customer preferences: bounds, heuristics and exact solves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write seeded random instances in the canonical text format.
    Generate(GenerateArgs),
    /// Run one algorithm on one instance.
    Solve(SolveArgs),
    /// Run several algorithms over a set of instances and tabulate.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hc,
    Hs,
    Sg,
    Da,
    Ada,
    Exact,
    Brute,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_possible_value().expect("no skipped variants");
        f.write_str(s.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Mode {
    #[default]
    Uniform,
    CostConsistent,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(short)]
    pub m: usize,
    #[arg(short)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// File name prefix; files are named `{prefix}{m}_{n}_{k}.splpo`.
    #[arg(long, default_value = "a")]
    pub prefix: String,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub scale: u64,
}

/// Solver parameters shared by `solve` and `bench`.
#[derive(Debug, Clone, Args, Default)]
pub struct SolverFlags {
    #[arg(long)]
    pub sg_iter: Option<usize>,
    #[arg(long)]
    pub da_iter: Option<usize>,
    #[arg(long)]
    pub vfh_iter: Option<usize>,
    #[arg(long)]
    pub ps: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub stall_k: Option<usize>,
    #[arg(long)]
    pub beta_dec: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Wall-clock limit per exact solve, in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Recorded in the provenance and report rows.
    #[arg(long)]
    pub seed: Option<u64>,
    /// ADA budgets by size class (a75_50, a100_75, a125_100, a150_100) or `auto`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Pre-fix assignments with positive reduced cost in the SLR subproblems.
    #[arg(long)]
    pub prefix_x: bool,
    /// Place a starting multiplier above the top rung at `c^n + eps` instead of `c^n`.
    #[arg(long)]
    pub snap_top: bool,
    /// Split exact searches across threads.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(short, long, value_enum)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub flags: SolverFlags,
    /// Solution document (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report file the row is appended to.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Glob matching instance files.
    pub instances: String,
    #[arg(short, long, value_enum, value_delimiter = ',', default_values_t = [Algorithm::Hc, Algorithm::Hs, Algorithm::Exact])]
    pub algorithms: Vec<Algorithm>,
    /// Known optima, one `name value` pair per line.
    #[arg(long)]
    pub optima: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SolverFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

/// Bad input from the user; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<SplpoError>() {
        Some(SplpoError::Infeasible(_)) => EXIT_INFEASIBLE,
        Some(SplpoError::NoIncumbent) => EXIT_INCOMPLETE,
        Some(
            SplpoError::InvalidArgument(_)
            | SplpoError::TooLarge { .. }
            | SplpoError::InvalidInstance(_)
            | SplpoError::Parse { .. },
        ) => EXIT_USAGE,
        _ => 1,
    }
}

/// Runs a parsed command; `Ok` carries the exit code (0 or 4).
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a).map(|_| EXIT_OK),
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

pub fn instance_name(m: usize, n: usize, k: usize, prefix: &str) -> String {
    format!("{prefix}{m}_{n}_{k}")
}

pub fn cmd_generate(a: &GenerateArgs) -> anyhow::Result<Vec<PathBuf>> {
    if a.m == 0 || a.n == 0 {
        return Err(usage(format!("m and n must be positive (m={}, n={})", a.m, a.n)));
    }
    let cfg = GeneratorConfig {
        scale: a.scale,
        mode: match a.mode {
            Mode::Uniform => PreferenceMode::Uniform,
            Mode::CostConsistent => PreferenceMode::CostConsistent,
        },
        ..GeneratorConfig::default()
    };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut written = Vec::with_capacity(a.count);
    for k in 1..=a.count {
        let inst = generate_instance(a.m, a.n, a.seed.wrapping_add(k as u64 - 1), &cfg)?;
        let path = a.out_dir.join(format!("{}.splpo", instance_name(a.m, a.n, k, &a.prefix)));
        inst.write_path(&path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads the canonical format, or an OR-Library file with a `.pref` sidecar.
pub fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with("SPLPO") {
        Ok(Instance::parse(&text).with_context(|| format!("parsing {}", path.display()))?)
    } else {
        Ok(load_orlib(path).with_context(|| format!("importing {}", path.display()))?)
    }
}

/// Effective parameters after applying preset and flags; hashed into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub algorithm: Algorithm,
    pub ada: AdaConfig,
    pub da_iter: Option<usize>,
    pub seed: Option<u64>,
}

impl EffectiveConfig {
    pub fn resolve(algorithm: Algorithm, flags: &SolverFlags, m: usize, n: usize) -> anyhow::Result<Self> {
        let p = match flags.preset.as_deref() {
            None | Some("auto") => preset_for(m, n),
            Some(name) => preset(name).ok_or_else(|| usage(format!("unknown preset '{name}'")))?,
        };
        let mut ada = AdaConfig::from_preset(p);
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut ada.sg_iter, flags.sg_iter);
        set(&mut ada.da_iter, flags.da_iter);
        set(&mut ada.vfh_iter, flags.vfh_iter);
        set(&mut ada.sg.stall_window, flags.stall_k);
        if let Some(ps) = flags.ps {
            if !(0.0..=1.0).contains(&ps) {
                return Err(usage(format!("--ps {ps} is outside [0, 1]")));
            }
            ada.ps = ps;
        }
        if let Some(e) = flags.epsilon {
            if e.is_nan() || e <= 0.0 {
                return Err(usage("--epsilon must be positive"));
            }
            ada.epsilon = Some(e);
        }
        if let Some(b) = flags.beta0 {
            if b.is_nan() || b <= 0.0 {
                return Err(usage("--beta0 must be positive"));
            }
            ada.sg.beta0 = b;
        }
        if let Some(d) = flags.beta_dec {
            ada.sg.beta_decrement = d;
        }
        ada.prefix = flags.prefix_x;
        ada.snap_top = flags.snap_top;
        ada.limits = Limits {
            node_limit: flags.node_limit,
            time_limit: flags.time_limit.map(Duration::from_secs_f64),
            parallelism: if flags.parallel {
                Parallelism::Parallel
            } else {
                Parallelism::Sequential
            },
        };
        Ok(Self {
            algorithm,
            ada,
            da_iter: flags.da_iter,
            seed: flags.seed,
        })
    }

    pub fn sg_config(&self) -> SgConfig {
        SgConfig {
            max_iter: if self.algorithm == Algorithm::Sg {
                SgConfig::default().max_iter
            } else {
                self.ada.sg_iter
            },
            ..self.ada.sg.clone()
        }
    }

    /// First 12 hex digits of the SHA-256 of the JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&json);
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

/// Result of one algorithm run.
pub struct RunOutcome {
    pub row: ReportRow,
    pub solution: Option<Solution>,
    pub incomplete: bool,
}

fn base_row(name: &str, alg: Algorithm, inst: &Instance, cfg: &EffectiveConfig) -> ReportRow {
    ReportRow {
        instance: name.to_string(),
        algorithm: alg.to_string(),
        status: "ok".into(),
        m: inst.m(),
        n: inst.n(),
        best_ub: None,
        lower_bound: None,
        optimum: None,
        gap_o_pct: None,
        open_count: None,
        iterations: None,
        time_s: 0.0,
        total_time_s: 0.0,
        seed: cfg.seed,
        config_hash: cfg.hash(),
    }
}

pub fn run_algorithm(name: &str, inst: &Instance, cfg: &EffectiveConfig) -> anyhow::Result<RunOutcome> {
    let alg = cfg.algorithm;
    let mut row = base_row(name, alg, inst, cfg);
    let t = Instant::now();
    let mut solution = None;
    let mut incomplete = false;
    let mut stage_seconds = None;
    match alg {
        Algorithm::Hc | Algorithm::Hs => {
            let (sol, trace) = if alg == Algorithm::Hc {
                heuristic_hc(inst)
            } else {
                heuristic_hs(inst)
            };
            row.best_ub = Some(sol.objective);
            row.open_count = Some(sol.open_count());
            row.iterations = Some(trace.rounds.len());
            solution = Some(sol);
        }
        Algorithm::Sg => {
            let r = subgradient_method(inst, &cfg.sg_config(), &default_start(inst))?;
            row.lower_bound = Some(r.best_value);
            row.best_ub = Some(r.lr_aim);
            row.iterations = Some(r.iterations);
            row.status = serde_json::to_value(r.status)?.as_str().unwrap_or("ok").to_string();
        }
        Algorithm::Da => {
            let da_cfg = DaConfig {
                epsilon: cfg.ada.epsilon,
                max_iter: cfg.da_iter,
                prefix: cfg.ada.prefix,
                snap_top: cfg.ada.snap_top,
                limits: cfg.ada.limits,
            };
            let r = dual_ascent(inst, &vec![0.0; inst.m()], &da_cfg)?;
            row.lower_bound = Some(r.best_bound);
            row.iterations = Some(r.iterations);
            row.status = serde_json::to_value(r.status)?.as_str().unwrap_or("ok").to_string();
            incomplete = r.status == DaStatus::Incomplete;
            if r.last.serves_everyone() {
                let sol = Solution::from_open_set(inst, &r.last.open)?;
                row.best_ub = Some(sol.objective);
                row.open_count = Some(sol.open_count());
                solution = Some(sol);
            }
        }
        Algorithm::Ada => {
            let r = ada(inst, &cfg.ada)?;
            row.best_ub = Some(r.upper_bound);
            row.lower_bound = Some(r.lower_bound);
            row.open_count = Some(r.best.open_count());
            row.iterations = Some(r.da_trace.len().saturating_sub(1));
            stage_seconds = Some(
                r.stages
                    .iter()
                    .filter(|s| matches!(s.stage, splpo::ada::Stage::Da | splpo::ada::Stage::Vfh))
                    .map(|s| s.seconds)
                    .sum::<f64>(),
            );
            incomplete = r.vfh.iter().any(|v| v.heuristic);
            if incomplete {
                row.status = "incomplete".into();
            }
            solution = Some(r.best);
        }
        Algorithm::Exact | Algorithm::Brute => {
            let spec = ProblemSpec::splpo(inst);
            let r = if alg == Algorithm::Exact {
                branch_and_bound(&spec, cfg.ada.limits)?
            } else {
                brute_force_with(&spec, cfg.ada.limits.parallelism)?
            };
            row.best_ub = Some(r.value);
            row.lower_bound = Some(r.lower_bound);
            row.open_count = Some(r.solution.open_count());
            row.iterations = Some(r.nodes as usize);
            incomplete = r.status == ExactStatus::Incomplete;
            row.status = if incomplete { "incomplete" } else { "optimal" }.into();
            if !incomplete {
                row = row.with_optimum(Some(r.value));
            }
            solution = Some(r.solution);
        }
    }
    let total = t.elapsed().as_secs_f64();
    row.total_time_s = round_seconds(total);
    row.time_s = round_seconds(stage_seconds.unwrap_or(total));
    Ok(RunOutcome {
        row,
        solution,
        incomplete,
    })
}

fn render(report: &RunReport, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json()? + "\n",
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_solve(a: &SolveArgs) -> anyhow::Result<i32> {
    let inst = load_instance(&a.instance)?;
    let cfg = EffectiveConfig::resolve(a.algorithm, &a.flags, inst.m(), inst.n())?;
    let name = stem(&a.instance);
    let out = run_algorithm(&name, &inst, &cfg)?;

    if let Some(path) = &a.out {
        let Some(sol) = &out.solution else {
            return Err(usage(format!("{} produces no primal solution to write", a.algorithm)));
        };
        let doc = sol.to_document(Provenance {
            algorithm: a.algorithm.to_string(),
            seed: cfg.seed,
            parameters: serde_json::to_value(&cfg)?,
        });
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.report {
        append_row(path, &out.row, a.format)?;
    }
    let report = RunReport { rows: vec![out.row] };
    print!("{}", render(&report, a.format)?);
    Ok(if out.incomplete { EXIT_INCOMPLETE } else { EXIT_OK })
}

/// Appends to an existing report of the same format, creating it if needed.
pub fn append_row(path: &Path, row: &ReportRow, format: Format) -> anyhow::Result<()> {
    let mut report = if path.exists() {
        let text = fs::read_to_string(path)?;
        match format {
            Format::Csv => RunReport::from_csv(&text)?,
            Format::Json => RunReport::from_json(&text)?,
        }
    } else {
        RunReport::default()
    };
    report.rows.push(row.clone());
    fs::write(path, render(&report, format)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parses `name value` lines (whitespace or comma separated, `#` comments).
pub fn parse_optima(text: &str) -> anyhow::Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            bail!(usage(format!("optima line {}: expected `name value`", k + 1)));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| usage(format!("optima line {}: bad value '{value}'", k + 1)))?;
        out.push((name.to_string(), value));
    }
    Ok(out)
}

pub fn cmd_bench(a: &BenchArgs) -> anyhow::Result<i32> {
    let mut paths: Vec<PathBuf> = glob::glob(&a.instances)
        .map_err(|e| usage(format!("bad glob: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file() && p.extension().is_none_or(|e| e != "pref"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(usage(format!("no instance matches '{}'", a.instances)));
    }
    if a.algorithms.is_empty() {
        return Err(usage("no algorithm selected"));
    }
    let known = match &a.optima {
        Some(p) => parse_optima(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => Vec::new(),
    };
    // resolve once so bad flags fail before any work
    EffectiveConfig::resolve(a.algorithms[0], &a.flags, 1, 1)?;

    let per_instance: Vec<(Vec<ReportRow>, bool)> = paths
        .par_iter()
        .map(|path| bench_instance(path, a, &known))
        .collect();
    let incomplete = per_instance.iter().any(|(_, inc)| *inc);
    let report = RunReport {
        rows: per_instance.into_iter().flat_map(|(rows, _)| rows).collect(),
    };
    let text = render(&report, a.format)?;
    match &a.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(if incomplete { EXIT_INCOMPLETE } else { EXIT_OK })
}

fn error_row(name: &str, alg: Algorithm, status: String) -> ReportRow {
    ReportRow {
        instance: name.to_string(),
        algorithm: alg.to_string(),
        status,
        m: 0,
        n: 0,
        best_ub: None,
        lower_bound: None,
        optimum: None,
        gap_o_pct: None,
        open_count: None,
        iterations: None,
        time_s: 0.0,
        total_time_s: 0.0,
        seed: None,
        config_hash: String::new(),
    }
}

fn bench_instance(path: &Path, a: &BenchArgs, known: &[(String, f64)]) -> (Vec<ReportRow>, bool) {
    let name = stem(path);
    let inst = match load_instance(path) {
        Ok(inst) => inst,
        Err(e) => {
            let rows = a
                .algorithms
                .iter()
                .map(|&alg| error_row(&name, alg, format!("error: {e:#}")))
                .collect();
            return (rows, false);
        }
    };
    let mut incomplete = false;
    let mut rows = Vec::new();
    let mut optimum = known.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
    for &alg in &a.algorithms {
        let row = EffectiveConfig::resolve(alg, &a.flags, inst.m(), inst.n())
            .and_then(|cfg| run_algorithm(&name, &inst, &cfg));
        match row {
            Ok(out) => {
                incomplete |= out.incomplete;
                if matches!(alg, Algorithm::Exact | Algorithm::Brute) && !out.incomplete && optimum.is_none() {
                    optimum = out.row.best_ub;
                }
                rows.push(out.row);
            }
            Err(e) => {
                let mut r = error_row(&name, alg, format!("error: {e:#}"));
                (r.m, r.n) = (inst.m(), inst.n());
                rows.push(r);
            }
        }
    }
    let rows = rows.into_iter().map(|r| r.with_optimum(optimum)).collect();
    (rows, incomplete)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&usage("x")), EXIT_USAGE);
        assert_eq!(exit_code(&SplpoError::Infeasible("none".into()).into()), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&SplpoError::NoIncumbent.into()), EXIT_INCOMPLETE);
        assert_eq!(exit_code(&SplpoError::TooLarge { n: 30, max: 20 }.into()), EXIT_USAGE);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }

    #[test]
    fn flags_override_preset() {
        let flags = SolverFlags {
            preset: Some("a100_75".into()),
            da_iter: Some(1),
            ps: Some(0.5),
            ..SolverFlags::default()
        };
        let cfg = EffectiveConfig::resolve(Algorithm::Ada, &flags, 10, 10).unwrap();
        assert_eq!((cfg.ada.sg_iter, cfg.ada.da_iter, cfg.ada.vfh_iter, cfg.ada.ps), (100, 1, 2, 0.5));
        let auto = EffectiveConfig::resolve(Algorithm::Ada, &SolverFlags::default(), 150, 100).unwrap();
        assert_eq!(auto.ada.sg_iter, 170);
        assert_eq!(auto.ada.da_iter, 12);
        assert_ne!(cfg.hash(), auto.hash());
        assert_eq!(cfg.hash().len(), 12);
        assert_eq!(cfg.hash(), cfg.clone().hash());
        let bad = SolverFlags {
            preset: Some("nope".into()),
            ..SolverFlags::default()
        };
        assert!(EffectiveConfig::resolve(Algorithm::Ada, &bad, 1, 1).is_err());
    }

    #[test]
    fn optima_file() {
        let parsed = parse_optima("# name value\na75_50_4 1585028\n131_1,1001440\n\n").unwrap();
        assert_eq!(parsed, vec![("a75_50_4".into(), 1_585_028.0), ("131_1".into(), 1_001_440.0)]);
        assert!(parse_optima("x").is_err());
    }

    #[test]
    fn naming() {
        assert_eq!(instance_name(75, 50, 4, "a"), "a75_50_4");
    }
}
