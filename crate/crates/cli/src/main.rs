use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sigflow::scenario::{self, Scenario, OUT_ENV};
use sigflow::{classify, singular::report_csv, verify, Error, Point};

/// Geodesics of metrics that change signature along a curve.
#[derive(Parser)]
#[command(name = "sigflow", version)]
struct Cli {
    /// Tolerance override, e.g. `--tol rtol=1e-12`; repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE", global = true, value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the tasks of a scenario file.
    Run { scenario: PathBuf },
    /// Classify one discriminant point.
    Classify {
        /// TOML file with a `[metric]` block.
        #[arg(long)]
        metric: PathBuf,
        /// The point, as `x,y`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: Point,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VALUE")?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    Ok(Point::new(f(x)?, f(y)?))
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::Scenario(_) | Error::Parse(_) | Error::Invalid(_))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("sigflow: {e}");
    ExitCode::from(if usage_error(e) { 2 } else { 3 })
}

fn run(cli: &Cli, path: &Path) -> ExitCode {
    let mut s = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Err(e) = s.override_tolerances(&cli.tol) {
        return fail(&e);
    }
    let env = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let out = scenario::resolve_out(cli.out.as_deref(), &s, env.as_deref());
    let report = scenario::run(&s, &out, cli.seed);
    for t in &report.tasks {
        match &t.error {
            None => eprintln!("task {} ({}): wrote {}", t.index, t.kind, t.file.display()),
            Some(e) if t.written => eprintln!("task {} ({}): wrote {}; {e}", t.index, t.kind, t.file.display()),
            Some(e) => eprintln!("task {} ({}): failed: {e}", t.index, t.kind),
        }
    }
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Run { scenario } => run(&cli, scenario),
        Cmd::Classify { metric, at } => {
            let result = scenario::load_metric(metric, &cli.tol).and_then(|m| classify(&m, *at));
            match result {
                Ok(pc) => {
                    print!("{}", report_csv(std::slice::from_ref(&pc)));
                    for d in &pc.diagnostics {
                        eprintln!("note: {d}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Cmd::Verify { suite } => {
            let checks = match verify::suite(suite, cli.seed.unwrap_or(0)) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let text = verify::render(&checks);
            print!("{text}");
            if let Some(dir) = &cli.out {
                let path = dir.join(format!("verify-{suite}.txt"));
                if let Err(e) = scenario::write_atomic(&path, text.as_bytes()) {
                    return fail(&e);
                }
            }
            if checks.iter().all(verify::Check::pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
    }
}
