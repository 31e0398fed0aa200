use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fdecolloc::catalog::{self, Category, ConvergenceRecord, ExampleSpec, Outcome, RunConfig};
use fdecolloc::solve::NewtonReport;
use serde::Serialize;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "fdecolloc", version, about = "Spectral collocation for delay and functional differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a registered example.
    Solve(RunArgs),
    /// Error against the exact solution (or the largest run) as n grows.
    Converge(ConvergeArgs),
    /// Eigenvalues of a registered eigenvalue problem.
    Eig(RunArgs),
    /// Limit cycle and period of a registered periodic example.
    Cycle(RunArgs),
    /// List the registered examples.
    List {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Common {
    /// Newton update-norm tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Shift for the eigenvalue search.
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<f64>,
    /// Initial period for limit cycles; estimated from a simulation if absent.
    #[arg(long, allow_hyphen_values = true)]
    period_guess: Option<f64>,
    /// Directory for the output files; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    name: String,
    /// Points per panel.
    #[arg(long, conflicts_with = "sizes")]
    n: Option<usize>,
    /// Comma-separated per-panel sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConvergeArgs {
    name: String,
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    /// Defaults to twice the example's default size.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, default_value_t = 2)]
    step: usize,
    #[command(flatten)]
    common: Common,
}

/// Failure with a process exit status.
struct Failure {
    code: u8,
    name: Option<String>,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, name: None, error }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    schema: u32,
    name: Option<&'a str>,
    error: String,
}

#[derive(Serialize)]
struct IterationRecord {
    residual_norm: f64,
    update_norm: f64,
}

#[derive(Serialize)]
struct NewtonRecord {
    converged: bool,
    iterations: Vec<IterationRecord>,
    final_jacobian_cond: f64,
    clamped: usize,
}

impl From<&NewtonReport> for NewtonRecord {
    fn from(r: &NewtonReport) -> Self {
        NewtonRecord {
            converged: r.converged,
            iterations: r
                .iterations
                .iter()
                .map(|i| IterationRecord { residual_norm: i.residual_norm, update_norm: i.update_norm })
                .collect(),
            final_jacobian_cond: r.final_jacobian_cond,
            clamped: r.clamped,
        }
    }
}

#[derive(Serialize)]
struct EigenvalueRecord {
    re: f64,
    im: f64,
    residual: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    name: &'a str,
    category: &'a str,
    sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cond: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    newton: Option<NewtonRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    period_guess: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<EigenvalueRecord>>,
}

fn summary<'a>(spec: &'a ExampleSpec, sizes: Vec<usize>, out: &Outcome) -> Summary<'a> {
    let mut s = Summary {
        schema: SCHEMA,
        name: spec.name,
        category: spec.category.as_str(),
        sizes,
        max_error: spec.exact.and_then(|f| out.max_error(f)),
        cond: out.cond(),
        params: Vec::new(),
        newton: out.report().map(NewtonRecord::from),
        period: None,
        period_guess: None,
        eigenvalues: None,
    };
    match out {
        Outcome::Collocation(c) => s.params = c.params.clone(),
        Outcome::Cycle(c) => {
            s.period = Some(c.cycle.period);
            s.period_guess = Some(c.period_guess);
        }
        Outcome::Eigen(e) => {
            s.eigenvalues = Some(
                e.values
                    .iter()
                    .zip(&e.residuals)
                    .map(|(v, r)| EigenvalueRecord { re: v.re, im: v.im, residual: *r })
                    .collect(),
            )
        }
    }
    s
}

/// Shortest round-trip decimal, in exponent form for very small or large values.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn solution_csv(out: &Outcome) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match out {
        Outcome::Collocation(c) => {
            w.write_record(["panel", "t", "y"])?;
            let panels: Vec<usize> =
                c.solution.sizes().iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
            let nodes = c.solution.nodes();
            for ((k, t), y) in panels.iter().zip(&nodes).zip(c.solution.values()) {
                w.write_record([k.to_string(), num(*t), num(*y)])?;
            }
        }
        Outcome::Cycle(c) => {
            let d = c.cycle.states.len();
            let mut header = vec!["t".to_string()];
            header.extend((1..=d).map(|i| format!("y{i}")));
            w.write_record(&header)?;
            for (j, th) in c.cycle.grid.nodes().iter().enumerate() {
                let mut rec = vec![num(th * c.cycle.period)];
                rec.extend(c.cycle.states.iter().map(|s| num(s[j])));
                w.write_record(&rec)?;
            }
        }
        Outcome::Eigen(e) => {
            let mut header = vec!["t".to_string()];
            header.extend((1..=e.vectors.len()).map(|i| format!("v{i}")));
            w.write_record(&header)?;
            for (j, t) in e.nodes.iter().enumerate() {
                let mut rec = vec![num(*t)];
                rec.extend(e.vectors.iter().map(|v| num(v[j])));
                w.write_record(&rec)?;
            }
        }
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

fn convergence_csv(records: &[ConvergenceRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "error", "cond"])?;
    for r in records {
        w.write_record([r.n.to_string(), num(r.error), num(r.cond)])?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn write_file(dir: &Path, file: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(file);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn stdout(bytes: &[u8]) -> Result<()> {
    let mut o = std::io::stdout().lock();
    o.write_all(bytes)?;
    o.flush()?;
    Ok(())
}

fn lookup(name: &str) -> Result<&'static ExampleSpec, Failure> {
    catalog::find(name).ok_or_else(|| usage(anyhow::anyhow!("unknown example '{name}'; see `fdecolloc list`")))
}

fn config(args: &RunArgs) -> RunConfig {
    RunConfig {
        n: args.n,
        sizes: args.sizes.clone(),
        tol: args.common.tol,
        max_iter: args.common.max_iter,
        shift: args.common.shift,
        period_guess: args.common.period_guess,
    }
}

fn solver<T>(name: &str, r: Result<T>) -> Result<T, Failure> {
    r.map_err(|error| Failure { code: 1, name: Some(name.to_string()), error })
}

fn run(args: &RunArgs, want: Option<Category>) -> Result<(), Failure> {
    let spec = lookup(&args.name)?;
    if let Some(cat) = want {
        if spec.category != cat {
            return Err(usage(anyhow::anyhow!("'{}' is a {} example, not {}", spec.name, spec.category.as_str(), cat.as_str())));
        }
    }
    let cfg = config(args);
    let sizes = spec.sizes(&cfg).map_err(|e| usage(e.into()))?;
    let out = solver(spec.name, spec.run(&cfg).map_err(anyhow::Error::from))?;
    if want == Some(Category::Periodic) && !matches!(out, Outcome::Cycle(_)) {
        return Err(usage(anyhow::anyhow!("'{}' has no limit cycle", spec.name)));
    }
    let json = solver(spec.name, to_json(&summary(spec, sizes, &out)))?;
    let table = solver(spec.name, solution_csv(&out))?;
    let converged = out.report().is_none_or(|r| r.converged);
    let written = match &args.common.out {
        Some(dir) => {
            write_file(dir, &format!("{}.csv", spec.name), &table)
                .and_then(|_| write_file(dir, &format!("{}.json", spec.name), &json))
        }
        None if converged => stdout(if args.common.format == Format::Json { &json } else { &table }),
        None => Ok(()),
    };
    solver(spec.name, written)?;
    if !converged {
        let iterations = out.report().map_or(0, |r| r.iterations.len());
        return Err(Failure {
            code: 1,
            name: Some(spec.name.to_string()),
            error: anyhow::anyhow!("Newton did not converge in {iterations} iterations"),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceSummary<'a> {
    schema: u32,
    name: &'a str,
    proxy: bool,
    records: Vec<ConvergenceRow>,
}

#[derive(Serialize)]
struct ConvergenceRow {
    n: usize,
    error: f64,
    cond: f64,
}

fn converge(args: &ConvergeArgs) -> Result<(), Failure> {
    let spec = lookup(&args.name)?;
    let n_max = args.n_max.unwrap_or(2 * spec.default_n);
    if args.step == 0 || args.n_min > n_max || args.n_min < 2 {
        return Err(usage(anyhow::anyhow!("need 2 <= n-min <= n-max and step >= 1")));
    }
    let ns: Vec<usize> = (args.n_min..=n_max).step_by(args.step).collect();
    let cfg = RunConfig {
        tol: args.common.tol,
        max_iter: args.common.max_iter,
        shift: args.common.shift,
        period_guess: args.common.period_guess,
        ..Default::default()
    };
    let records = solver(spec.name, catalog::converge(spec, &ns, &cfg).map_err(anyhow::Error::from))?;
    let table = solver(spec.name, convergence_csv(&records))?;
    let json = solver(
        spec.name,
        to_json(&ConvergenceSummary {
            schema: SCHEMA,
            name: spec.name,
            proxy: spec.exact.is_none(),
            records: records.iter().map(|r| ConvergenceRow { n: r.n, error: r.error, cond: r.cond }).collect(),
        }),
    )?;
    let written = match &args.common.out {
        Some(dir) => write_file(dir, &format!("{}_convergence.csv", spec.name), &table)
            .and_then(|_| write_file(dir, &format!("{}_convergence.json", spec.name), &json)),
        None => stdout(if args.common.format == Format::Json { &json } else { &table }),
    };
    solver(spec.name, written)
}

#[derive(Serialize)]
struct ListEntry {
    name: &'static str,
    category: &'static str,
    default_n: usize,
    panels: usize,
    exact: bool,
    summary: &'static str,
}

fn list(format: Format) -> Result<(), Failure> {
    let entries: Vec<ListEntry> = catalog::all()
        .iter()
        .map(|e| ListEntry {
            name: e.name,
            category: e.category.as_str(),
            default_n: e.default_n,
            panels: e.panel_offsets.len(),
            exact: e.exact.is_some(),
            summary: e.summary,
        })
        .collect();
    let bytes = match format {
        Format::Json => to_json(&entries),
        Format::Csv => (|| {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "category", "default_n", "panels", "exact", "summary"])?;
            for e in &entries {
                w.write_record([
                    e.name,
                    e.category,
                    &e.default_n.to_string(),
                    &e.panels.to_string(),
                    &e.exact.to_string(),
                    e.summary,
                ])?;
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
        })(),
    };
    solver("list", bytes.and_then(|b| stdout(&b)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run(a, None),
        Command::Eig(a) => run(a, Some(Category::Evp)),
        Command::Cycle(a) => run(a, Some(Category::Periodic)),
        Command::Converge(a) => converge(a),
        Command::List { format } => list(*format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            if f.code == 1 {
                let record = ErrorRecord { schema: SCHEMA, name: f.name.as_deref(), error: format!("{:#}", f.error) };
                if let Ok(b) = to_json(&record) {
                    let _ = stdout(&b);
                }
            }
            ExitCode::from(f.code)
        }
    }
}
