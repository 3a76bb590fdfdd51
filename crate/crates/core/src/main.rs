use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use finslerlab::catalog::{MetricRecipe, CONSTRUCTORS};
use finslerlab::finsler;
use finslerlab::linalg::{self, CMat};
use finslerlab::report::{self, emit, Format, RunConfig, Status, Suite};
use finslerlab::{Execution, FinslerError};

#[derive(Parser)]
#[command(name = "finslerlab", version, about = "Numerical checks for complex Finsler metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List metric constructors and suites.
    List,
    /// Run the suites of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        /// Run suites concurrently.
        #[arg(long)]
        parallel: bool,
        /// Evaluate inside suites on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Print pointwise quantities.
    Point {
        #[arg(long)]
        metric: String,
        /// Constructor parameter `key=value`, repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
        /// `re,im` pairs, one per coordinate.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value = "K,G,N,cond12")]
        show: String,
    },
}

fn code(e: &FinslerError) -> u8 {
    match e {
        FinslerError::Config(_) => 2,
        _ => 1,
    }
}

fn matrix(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([emit::num(m[(i, j)].re), emit::num(m[(i, j)].im)]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn list() {
    println!("metrics:");
    for (name, params, summary) in CONSTRUCTORS {
        println!("  {name:<20} {params:<22} {summary}");
    }
    println!("suites:");
    for s in Suite::ALL {
        println!("  {:<20} {}", s.name(), s.summary());
    }
}

fn run(config: PathBuf, out: Option<PathBuf>, format: &str, parallel: bool, sequential: bool) -> Result<u8, FinslerError> {
    let format: Format = format.parse()?;
    let mut cfg = RunConfig::load(&config)?;
    cfg.apply_env()?;
    cfg.parallel_suites |= parallel;
    if sequential {
        cfg.exec = Execution::Sequential;
    }
    let reports = report::run(&cfg)?;
    for r in &reports {
        let extra = r.reason.as_deref().map(|s| format!(" ({s})")).unwrap_or_default();
        eprintln!(
            "{:<14} {:<8} worst={:e} tol={:e} {:.2}s{extra}",
            r.suite.name(),
            r.status.name(),
            r.worst_residual,
            r.tolerance,
            r.wall_time
        );
    }
    emit::emit(&cfg.echo(), &reports, format, out.as_deref())?;
    Ok(if reports.iter().any(|r| r.status == Status::Fail) {
        1
    } else {
        0
    })
}

fn point(metric: &str, params: &[String], z: &str, v: &str, show: &str) -> Result<u8, FinslerError> {
    let pairs: Vec<(&str, &str)> = params
        .iter()
        .map(|p| {
            p.split_once('=')
                .ok_or_else(|| FinslerError::Config(format!("parameter '{p}' is not key=value")))
        })
        .collect::<Result<_, _>>()?;
    let recipe = MetricRecipe::new(metric, &pairs);
    let m = recipe.build()?;
    let z = report::parse_complex_csv(z, m.dim)?;
    let v = report::parse_complex_csv(v, m.dim)?;
    m.check_point(&z, &v)?;
    let mut out = Map::new();
    out.insert("metric".into(), json!(recipe.to_string()));
    for item in show.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let value = match item {
            "G" => emit::num(m.value(&z, &v)),
            "K" => emit::num(finsler::hsc(&m, &z, &v)?),
            "N" => matrix(&finsler::fundamental(&m, &z, &v, true)?.conn),
            "levi" => matrix(&finsler::levi_form(&m, &z, &v)?),
            "ghat" => matrix(&finsler::ghat(&m, &z, &v)?),
            "cond12" => {
                let r = finsler::condition12_residual(&m, &z, &v)?;
                json!({ "max_abs": emit::num(linalg::max_abs(&r)), "matrix": matrix(&r) })
            }
            other => {
                return Err(FinslerError::Config(format!(
                    "unknown quantity '{other}' (expected K, G, N, levi, ghat, cond12)"
                )))
            }
        };
        out.insert(item.to_string(), value);
    }
    let text = serde_json::to_string_pretty(&Value::Object(out)).map_err(|e| FinslerError::Io(e.to_string()))?;
    println!("{text}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            list();
            Ok(0)
        }
        Command::Run {
            config,
            out,
            format,
            parallel,
            sequential,
        } => run(config, out, &format, parallel, sequential),
        Command::Point {
            metric,
            params,
            z,
            v,
            show,
        } => point(&metric, &params, &z, &v, &show),
    };
    match result {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code(&e))
        }
    }
}
