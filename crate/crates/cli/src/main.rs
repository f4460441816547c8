//! `evcts`: instance generation, solving, benchmarking and validation.
//!
//! Exit codes: 0 ok, 1 domain failure (infeasible instance or solution,
//! failed bench cells), 2 usage or I/O error. Progress goes to stderr, data
//! only to files.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evcts::clock::ClockMode;
use evcts::graph::RoutingGraph;
use evcts::instance::{
    generate_instance, parse_instance, parse_schneider, parse_solution, validate_solution, write_instance, Instance,
};
use evcts::search::{solve, PfihStrategy, RunStatus, SolverConfig, CSV_HEADER};

#[derive(Parser)]
#[command(
    name = "evcts",
    version,
    about = "EVRPTW with charging time slots: branch-price-and-cut"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a base instance's stations into charging time slots.
    Generate(GenerateArgs),
    /// Solve one instance and write a JSON report and a CSV row.
    Solve(SolveArgs),
    /// Run a strategy x instance matrix and aggregate root gaps.
    Bench(BenchArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Fraction {
    #[value(name = "0.33")]
    Third,
    #[value(name = "0.50")]
    Half,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseFormat {
    /// Schneider layout if the file has a `StringID` header, else native.
    Auto,
    Native,
    Schneider,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long, value_enum)]
    fraction: Fraction,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "EVCTS_OUT_DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = BaseFormat::Auto)]
    format: BaseFormat,
    /// Keep only the first N customers of a Schneider file.
    #[arg(long)]
    customers: Option<usize>,
    /// Fleet size of a Schneider base; defaults to the customer count.
    #[arg(long)]
    vehicles: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Work,
    Wall,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    cuts: OnOff,
    /// Seconds on the solver clock.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial ng-set size.
    #[arg(long, default_value_t = 8)]
    ng: usize,
    /// `work` counts deterministic work units, `wall` measures real time.
    #[arg(long, value_enum, default_value_t = ClockArg::Work)]
    clock: ClockArg,
    #[arg(long, default_value_t = 100_000)]
    max_nodes: usize,
    /// Restricted master heuristic limit in seconds.
    #[arg(long, default_value_t = 10.0)]
    rmh_time_limit: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "off", value_parser = parse_strategy)]
    pfih: PfihStrategy,
    #[command(flatten)]
    solver: SolverArgs,
    /// JSON report path; the CSV row goes next to it with a `.csv` extension.
    #[arg(long)]
    report: PathBuf,
    /// Also write the best routes in the solution file format.
    #[arg(long)]
    solution_out: Option<PathBuf>,
    /// Dump the preprocessed arc list as CSV.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, num_args = 1.., required = true)]
    instances: Vec<PathBuf>,
    /// Comma-separated strategies; `off` is the baseline when present,
    /// otherwise the first one.
    #[arg(long, value_delimiter = ',', default_value = "off,during,before,after", value_parser = parse_strategy)]
    strategies: Vec<PfihStrategy>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, env = "EVCTS_BENCH_OUT", default_value = "bench.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

fn parse_strategy(s: &str) -> Result<PfihStrategy, String> {
    s.parse()
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub(crate) fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = read(path)?;
    parse_instance(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

impl SolverArgs {
    fn config(&self, pfih: PfihStrategy) -> Result<SolverConfig, Failure> {
        if self.cuts == OnOff::Off && matches!(pfih, PfihStrategy::BeforeCuts | PfihStrategy::AfterCuts) {
            return Err(Failure::Usage(format!(
                "pfih strategy {} needs cut separation; use --cuts on or another strategy",
                pfih.name()
            )));
        }
        let cfg = SolverConfig {
            time_limit: self.time_limit,
            ng_size: self.ng,
            cuts: self.cuts == OnOff::On,
            pfih,
            seed: self.seed,
            clock: match self.clock {
                ClockArg::Work => ClockMode::Work,
                ClockArg::Wall => ClockMode::Wall,
            },
            max_nodes: self.max_nodes,
            rmh_time_limit: self.rmh_time_limit,
            ..SolverConfig::default()
        };
        cfg.check().map_err(Failure::Usage)?;
        Ok(cfg)
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), Failure> {
    let text = read(&a.base)?;
    let stem = a
        .base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("base")
        .to_string();
    let schneider = match a.format {
        BaseFormat::Auto => text.contains("StringID"),
        BaseFormat::Native => false,
        BaseFormat::Schneider => true,
    };
    let base = if schneider {
        parse_schneider(&text, &stem, a.customers, a.vehicles)
    } else {
        parse_instance(&text)
    }
    .map_err(|e| Failure::Usage(format!("{}: {e}", a.base.display())))?;
    let fractions: &[f64] = match a.fraction {
        Fraction::Third => &[0.33],
        Fraction::Half => &[0.50],
        Fraction::Both => &[0.33, 0.50],
    };
    for &f in fractions {
        let g = generate_instance(&base, f, a.seed).map_err(|e| Failure::Domain(e.to_string()))?;
        for w in &g.warnings {
            log::warn!("{w}");
        }
        let unreachable = g.instance.unreachable_customers();
        if !unreachable.is_empty() {
            log::warn!(
                "{}: customers {unreachable:?} cannot be served by any route",
                g.instance.name
            );
        }
        let path = a.out.join(format!("{}.txt", g.instance.name));
        write(&path, &write_instance(&g.instance))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn dump_graph(inst: &Instance, ng: usize, path: &Path) -> Result<(), Failure> {
    let g = RoutingGraph::build(inst, ng).map_err(|e| Failure::Domain(e.to_string()))?;
    let mut out = String::from("from,to,dist,time,energy,cost\n");
    for a in &g.arcs {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{:.2}\n",
            a.from, a.to, a.dist, a.time, a.energy, a.cost
        ));
    }
    write(path, &out)
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    let cfg = a.solver.config(a.pfih)?;
    let inst = load_instance(&a.instance)?;
    if let Some(p) = &a.dump_graph {
        dump_graph(&inst, cfg.ng_size, p)?;
    }
    let name = inst.name.clone();
    let cuts = if cfg.cuts { "on" } else { "off" };
    eprintln!("solving {name} (pfih {}, cuts {cuts})", cfg.pfih.name());
    let report = solve(&inst, &name, &cfg);
    write(&a.report, &(report.to_json() + "\n"))?;
    write(
        &a.report.with_extension("csv"),
        &format!("{CSV_HEADER}\n{}\n", report.csv_row()),
    )?;
    if let Some(p) = &a.solution_out {
        write(p, &evcts::instance::write_solution(&report.routes))?;
    }
    eprintln!(
        "{name}: {:?}, primal {}, dual {}, {} nodes",
        report.status,
        report.primal.map_or("-".into(), |v| format!("{v:.2}")),
        report.dual.map_or("-".into(), |v| format!("{v:.2}")),
        report.nodes
    );
    if report.status == RunStatus::Infeasible {
        return Err(Failure::Domain(format!("{name} is infeasible")));
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), Failure> {
    let inst = load_instance(&a.instance)?;
    let routes =
        parse_solution(&read(&a.solution)?).map_err(|e| Failure::Usage(format!("{}: {e}", a.solution.display())))?;
    let report = validate_solution(&inst, &routes);
    match report.first_failure() {
        None => {
            eprintln!("valid, cost {:.2}", report.cost);
            Ok(())
        }
        Some((Some(k), what)) => Err(Failure::Domain(format!("route {k}: {what}"))),
        Some((None, what)) => Err(Failure::Domain(what)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => a
            .strategies
            .iter()
            .try_for_each(|&s| a.solver.config(s).map(drop))
            .and_then(|()| a.solver.config(PfihStrategy::Off))
            .and_then(|cfg| bench::run(a, &cfg)),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Domain(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
