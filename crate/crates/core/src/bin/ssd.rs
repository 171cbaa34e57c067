use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eos_ssd::costfn::linearize;
use eos_ssd::instance::{generate_suite, generate_with, holmberg, GeneratorConfig};
use eos_ssd::lagrangian::instance_linearization;
use eos_ssd::report::{compare_families, compare_table, trace_csv, ReportRow, REPORT_HEADER};
use eos_ssd::{
    oracle_optimum, read_instance, solve, write_instance, CostBreakdown, CostFunction, Error,
    Instance, SolveReport, SolverConfig, StepNorm,
};

#[derive(Parser)]
#[command(name = "ssd", version, about = "Service system design with economies of scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance, or the 27-instance suite with `--suite paper`.
    Generate(GenerateArgs),
    /// Solve an instance and print a result row.
    Solve(SolveArgs),
    /// Exhaustive optimum of a small instance.
    Oracle(OracleArgs),
    /// Solve instances under all three cost families side by side.
    Compare(CompareArgs),
    /// Print the tangent-line envelope of a cost family as CSV.
    LinearizeDump(LinearizeArgs),
    /// Convert a Holmberg-layout benchmark file to the instance format.
    ConvertHolmberg(ConvertArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Linear,
    Sqrt,
    Fractional,
}

impl Family {
    fn cost(self) -> CostFunction {
        match self {
            Family::Linear => CostFunction::Linear,
            Family::Sqrt => CostFunction::SquareRoot,
            Family::Fractional => CostFunction::Fractional,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    Paper,
    Squared,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Paper,
}

#[derive(Args)]
struct RangeArgs {
    /// Fixed cost range, `LO:HI`.
    #[arg(long, value_parser = parse_range, default_value = "500:3000")]
    fixed_cost: (f64, f64),
    /// Demand rate range, `LO:HI`.
    #[arg(long, value_parser = parse_range, default_value = "1:20")]
    demand_rate: (f64, f64),
    /// Per-unit access cost range, `LO:HI`.
    #[arg(long, value_parser = parse_range, default_value = "1:30")]
    access_cost: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "1:5")]
    serving_cost: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "50:300")]
    waiting_cost: (f64, f64),
    /// Operating cost `c`; defaults to 1, 10 or 100 by family.
    #[arg(long)]
    operating_cost: Option<f64>,
}

impl RangeArgs {
    fn config(&self) -> GeneratorConfig {
        GeneratorConfig {
            fixed_cost: self.fixed_cost,
            demand_rate: self.demand_rate,
            access_cost: self.access_cost,
            serving_cost: self.serving_cost,
            waiting_cost: self.waiting_cost,
            operating_cost: self.operating_cost,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, required_unless_present = "suite")]
    facilities: Option<usize>,
    #[arg(long, required_unless_present = "suite")]
    customers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "linear")]
    family: Family,
    #[arg(long, value_enum, conflicts_with_all = ["facilities", "customers"])]
    suite: Option<Suite>,
    /// Output file, or output directory with `--suite`.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    ranges: RangeArgs,
}

#[derive(Args)]
struct SolverArgs {
    /// Re-price the instance under this family with its default operating cost.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Linearization relative error.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Relative gap at which to stop.
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha0: f64,
    #[arg(long, default_value_t = 10)]
    stall_window: usize,
    #[arg(long, default_value_t = 1e-6)]
    stall_threshold: f64,
    #[arg(long, value_enum, default_value = "paper")]
    norm: Norm,
    /// Suite seed for `compare --suite`; the solver itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the per-facility subproblems.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            tolerance: self.tolerance,
            max_iters: self.max_iters,
            alpha0: self.alpha0,
            stall_window: self.stall_window,
            stall_threshold: self.stall_threshold,
            norm: match self.norm {
                Norm::Paper => StepNorm::Plain,
                Norm::Squared => StepNorm::Squared,
            },
            parallelism: self.parallel,
            capacity_range: None,
        }
    }

    fn load(&self, path: &Path) -> eos_ssd::Result<Instance> {
        let inst = read_instance(path)?;
        match self.family {
            Some(f) => {
                let cost = f.cost();
                let c = cost.default_operating_cost().expect("built-in family");
                inst.with_family(cost, c)
            }
            None => Ok(inst),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Name in the first report column; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the report (header and row) to a file instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print JSON with full-precision values instead of a CSV row.
    #[arg(long)]
    json: bool,
    /// Omit CPU time so repeated runs give identical output.
    #[arg(long)]
    no_timing: bool,
    /// Print only the row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    /// Optimize the true cost curve instead of the tangent envelope.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Instance files; ignored with `--suite`.
    instances: Vec<PathBuf>,
    /// Generate the suite from `--seed` (default 1) instead of reading files.
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LinearizeArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    lower: f64,
    #[arg(long, default_value_t = 1e4)]
    upper: f64,
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    family: Family,
    /// Seed for the serving and waiting costs the format lacks.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    ranges: RangeArgs,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo <= hi) {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> eos_ssd::Result<ExitCode> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve_cmd(args),
        Command::Oracle(args) => oracle(args),
        Command::Compare(args) => compare(args),
        Command::LinearizeDump(args) => {
            let lin = linearize(&args.family.cost(), args.epsilon, args.lower, args.upper)?;
            print!("{}", lin.to_csv());
            Ok(ExitCode::SUCCESS)
        }
        Command::ConvertHolmberg(args) => {
            let text = fs::read_to_string(&args.input)?;
            let inst = holmberg::parse(&text, args.family.cost(), args.seed, &args.ranges.config())?;
            write_instance(&inst, &args.out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn generate(args: GenerateArgs) -> eos_ssd::Result<ExitCode> {
    let cfg = args.ranges.config();
    let family = args.family.cost();
    if args.suite.is_some() {
        fs::create_dir_all(&args.out)?;
        for entry in generate_suite(&cfg, args.seed, &family) {
            write_instance(&entry.instance, args.out.join(format!("{}.json", entry.name)))?;
        }
    } else {
        let n = args.facilities.expect("required by clap");
        let m = args.customers.expect("required by clap");
        if n == 0 || m == 0 {
            return Err(Error::Invalid {
                field: "size".into(),
                message: "facilities and customers must be positive".into(),
            });
        }
        write_instance(&generate_with(&cfg, n, m, args.seed, family), &args.out)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveJson<'a> {
    row: &'a ReportRow,
    report: &'a SolveReport,
}

fn solve_cmd(args: SolveArgs) -> eos_ssd::Result<ExitCode> {
    let inst = args.solver.load(&args.instance)?;
    let name = args.name.clone().unwrap_or_else(|| stem(&args.instance));
    let mut report = solve(&inst, &args.solver.config())?;
    if args.no_timing {
        report.elapsed = Duration::ZERO;
    }
    let row = ReportRow::new(&name, &inst, &report, !args.no_timing);

    if let Some(path) = &args.trace {
        fs::write(path, trace_csv(&report))?;
    }
    let text = if args.json {
        to_json(&SolveJson { row: &row, report: &report })?
    } else if args.no_header {
        format!("{}\n", row.to_csv())
    } else {
        format!("{REPORT_HEADER}\n{}\n", row.to_csv())
    };
    match &args.report {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(if report.converged() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Serialize)]
struct OracleJson {
    cost: f64,
    exact: bool,
    open: Vec<bool>,
    assign: Vec<usize>,
    capacity: Vec<f64>,
    breakdown: CostBreakdown,
}

fn oracle(args: OracleArgs) -> eos_ssd::Result<ExitCode> {
    let inst = read_instance(&args.instance)?;
    let cfg = SolverConfig {
        epsilon: args.epsilon,
        ..SolverConfig::default()
    };
    let lin = instance_linearization(&inst, &cfg)?;
    let (cost, sol) = oracle_optimum(&inst, &lin, args.exact)?;
    let opening = if args.exact {
        eos_ssd::Opening::Exact
    } else {
        eos_ssd::Opening::Linearized(&lin)
    };
    let breakdown = eos_ssd::evaluate(&inst, &sol, opening)?;
    let out = OracleJson {
        cost,
        exact: args.exact,
        open: sol.open.clone(),
        assign: sol.assign.iter().map(|a| a.expect("oracle assigns all")).collect(),
        capacity: sol.capacity.clone(),
        breakdown,
    };
    if args.json {
        print!("{}", to_json(&out)?);
    } else {
        println!("cost,{:.6}", out.cost);
        println!("open,{}", join(out.open.iter().map(|&o| u8::from(o))));
        println!("assign,{}", join(out.assign.iter()));
        println!("capacity,{}", join(out.capacity.iter().map(|c| format!("{c:.6}"))));
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(args: CompareArgs) -> eos_ssd::Result<ExitCode> {
    let cfg = args.solver.config();
    let mut named = Vec::new();
    if args.suite.is_some() {
        for entry in generate_suite(&GeneratorConfig::default(), args.solver.seed.unwrap_or(1), &CostFunction::Linear) {
            named.push((entry.name, entry.instance));
        }
    } else {
        if args.instances.is_empty() {
            return Err(Error::Invalid {
                field: "instances".into(),
                message: "give instance files or --suite paper".into(),
            });
        }
        for path in &args.instances {
            named.push((stem(path), read_instance(path)?));
        }
    }
    let mut rows = Vec::new();
    for (name, inst) in &named {
        rows.extend(compare_families(name, inst, &cfg)?.into_iter().map(|(row, _)| row));
    }
    if args.json {
        print!("{}", to_json(&rows)?);
    } else {
        print!("{}", compare_table(&rows));
    }
    Ok(ExitCode::SUCCESS)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string())
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn to_json<T: Serialize>(value: &T) -> eos_ssd::Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Serialize(e.to_string()))
}
