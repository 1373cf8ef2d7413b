use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lamapf_bench::generate::gen_instance;
use lamapf_bench::record::{aggregate, read_records, write_records};
use lamapf_bench::run::{run_bench, run_one, BenchConfig, BenchError, Method};
use lamapf_core::decompose::{decompose, DecomposeConfig};
use lamapf_core::geometry::SweepConfig;
use lamapf_core::instance::{load_instance, save_instance};
use lamapf_core::map::load_map;
use lamapf_core::problem::Problem;
use lamapf_core::solution::Solution;
use lamapf_core::validate::validate_solution;

#[derive(Parser)]
#[command(name = "lamapf", about = "Decompose, solve and benchmark multi-agent path finding with shaped agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance on a map.
    Gen {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        agents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print clusters, levels, timings and certificates.
    Decompose {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and write the joint solution.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "layered-cbs")]
        method: Method,
        #[arg(long, default_value_t = 60.0)]
        budget_s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file against an instance. Exit code 2 on any finding.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Run an experiment grid and write CSV.
    Bench(BenchArgs),
    /// Success rates and means per map, agent count and method.
    Summarize {
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// TOML experiment description; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    map: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    agents: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long)]
    budget_s: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Invalid(String),
    Config(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Config(_) => 3,
            Self::Other(_) => 1,
        }
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(other),
        None => io::stdout().write_all(text.as_bytes()).map_err(other),
    }
}

fn bench_config(args: &BenchArgs) -> Result<BenchConfig, BenchError> {
    let mut cfg = match &args.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig { maps: Vec::new(), agents: Vec::new(), repetitions: 20, methods: Method::ALL.to_vec(), budget_s: 60.0, seed_base: 0, workers: 1 },
    };
    if !args.map.is_empty() {
        cfg.maps = args.map.clone();
    }
    if !args.agents.is_empty() {
        cfg.agents = args.agents.clone();
    }
    if !args.method.is_empty() {
        cfg.methods = args.method.clone();
    }
    cfg.budget_s = args.budget_s.unwrap_or(cfg.budget_s);
    cfg.seed_base = args.seed.unwrap_or(cfg.seed_base);
    cfg.repetitions = args.reps.unwrap_or(cfg.repetitions);
    cfg.workers = args.workers.unwrap_or(cfg.workers);
    if cfg.maps.is_empty() || cfg.agents.is_empty() {
        return Err(BenchError::Config("need at least one map and one agent count".into()));
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let sweep = SweepConfig::default();
    match cli.command {
        Command::Gen { map, agents, seed, out } => {
            let grid = load_map(&map).map_err(|e| Failure::Config(e.to_string()))?;
            // instance files refer to the map relative to themselves
            let map_ref = relative_map_ref(&map, &out);
            let inst = gen_instance(&grid, &map_ref, agents, seed, &sweep).map_err(|e| Failure::Config(e.to_string()))?;
            save_instance(&out, &inst).map_err(other)
        }
        Command::Decompose { instance, out } => {
            let (map, inst) = load_instance(&instance).map_err(|e| Failure::Config(e.to_string()))?;
            let p = Problem::prepare(map, inst.agents, &sweep).map_err(other)?;
            let d = decompose(&p, &DecomposeConfig::default()).map_err(other)?;
            emit(out.as_deref(), &d.report())
        }
        Command::Solve { instance, method, budget_s, out } => {
            if !(budget_s.is_finite() && budget_s > 0.0) {
                return Err(Failure::Config("--budget-s must be positive".into()));
            }
            let (map, inst) = load_instance(&instance).map_err(|e| Failure::Config(e.to_string()))?;
            let r = run_one(&map, &inst, method, Duration::from_secs_f64(budget_s), &sweep);
            eprintln!("{} {} agents: success={} time={:.3}s {}", method, inst.agents.len(), r.record.success, r.record.time_s, r.record.error);
            match r.solution {
                Some(sol) if r.record.valid => emit(out.as_deref(), &sol.to_string()),
                Some(_) => Err(Failure::Invalid(r.record.error)),
                None => Err(Failure::Other(r.record.error)),
            }
        }
        Command::Validate { instance, solution } => {
            let (map, inst) = load_instance(&instance).map_err(|e| Failure::Config(e.to_string()))?;
            let text = fs::read_to_string(&solution).map_err(other)?;
            let sol: Solution = text.parse().map_err(|e| Failure::Config(format!("{}: {e}", solution.display())))?;
            let report = validate_solution(&map, &inst.agents, &sol, &sweep);
            print!("{report}");
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Invalid(format!("{} findings", report.findings.len())))
            }
        }
        Command::Bench(args) => {
            let cfg = bench_config(&args).map_err(|e| Failure::Config(e.to_string()))?;
            let records = run_bench(&cfg, &sweep).map_err(|e| match e {
                BenchError::Config(_) | BenchError::Generate { .. } | BenchError::Map { .. } => Failure::Config(e.to_string()),
                BenchError::Io(_) => other(e),
            })?;
            let mut buf = Vec::new();
            write_records(&mut buf, &records).map_err(other)?;
            emit(args.out.as_deref(), &String::from_utf8(buf).map_err(other)?)?;
            for a in aggregate(&records) {
                eprintln!("{a}");
            }
            let invalid = records.iter().filter(|r| !r.valid).count();
            if invalid > 0 {
                return Err(Failure::Invalid(format!("{invalid} runs returned invalid solutions")));
            }
            Ok(())
        }
        Command::Summarize { csv } => {
            let file = fs::File::open(&csv).map_err(other)?;
            let records = read_records(file).map_err(|e| Failure::Config(e.to_string()))?;
            for a in aggregate(&records) {
                println!("{a}");
            }
            Ok(())
        }
    }
}

fn relative_map_ref(map: &Path, out: &Path) -> String {
    let map_abs = fs::canonicalize(map).unwrap_or_else(|_| map.to_path_buf());
    let out_dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let out_abs = fs::canonicalize(out_dir).unwrap_or_else(|_| out_dir.to_path_buf());
    let (a, b): (Vec<_>, Vec<_>) = (map_abs.components().collect(), out_abs.components().collect());
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut rel = PathBuf::new();
    for _ in common..b.len() {
        rel.push("..");
    }
    for c in &a[common..] {
        rel.push(c);
    }
    rel.display().to_string()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(m) | Failure::Config(m) | Failure::Other(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
