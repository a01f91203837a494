use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use theta_lab::torus::{build_complementary_example_with_kernel, control_example, e8_form, Scenario};
use theta_lab::verify::{
    e8_check, init_threads, invariants_check, parse_int_matrix, timed, Registry, RunConfig, RunReport, Status,
};
use theta_lab::Error;

/// Exit code for usage and configuration errors; check failures exit with 1.
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "theta-lab", version, about = "Theta divisors containing abelian subvarieties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and numerical checks of the rank-8 example
    E8Check {
        /// Replacement 8x8 form (rows of integers)
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build a scenario and write it as JSON
    Build {
        /// A principal torus with random period matrix and no splitting
        #[arg(long)]
        control: bool,
        #[arg(long)]
        kernel: Option<usize>,
        /// Where to write the run report
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run probe suites on a scenario file
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// containment, singular, gauss or all
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        kernel_sweep: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Print a saved report
    Report { path: PathBuf },
}

#[derive(Args)]
struct Common {
    /// key = value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long)]
    delta: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output path (scenario for build, report otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::parse(&read(p)?)?,
            None => RunConfig::default(),
        };
        let opt = |v: Option<String>, key: &str, cfg: &mut RunConfig| v.map(|v| cfg.set(key, &v)).transpose();
        opt(self.n.map(|v| v.to_string()), "n", &mut cfg)?;
        opt(self.g.map(|v| v.to_string()), "g", &mut cfg)?;
        opt(self.delta.map(|v| v.to_string()), "delta", &mut cfg)?;
        opt(self.seed.map(|v| v.to_string()), "seed", &mut cfg)?;
        opt(self.tol.map(|v| v.to_string()), "tol", &mut cfg)?;
        opt(self.grid.map(|v| v.to_string()), "grid", &mut cfg)?;
        opt(self.samples.map(|v| v.to_string()), "samples", &mut cfg)?;
        cfg.verbosity = cfg.verbosity.max(self.verbose);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(p: &Path) -> Result<String, Error> {
    fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn write(p: &Path, text: &str) -> Result<(), Error> {
    fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn finish(report: &RunReport, out: Option<&Path>) -> Result<u8, Error> {
    print!("{}", report.summary());
    if let Some(p) = out {
        write(p, &report.to_json()?)?;
    }
    Ok(report.exit_code() as u8)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::E8Check { matrix, common } => {
            let cfg = common.config()?;
            let m = match matrix {
                Some(p) => parse_int_matrix(&read(&p)?).map_err(|e| Error::Config(e.to_string()))?,
                None => e8_form().matrix().clone(),
            };
            finish(&e8_check(&m, &cfg), common.out.as_deref())
        }
        Command::Build { control, kernel, report, common } => {
            let mut cfg = common.config()?;
            if let Some(k) = kernel {
                cfg.kernel = k;
            }
            let out = common.out.as_deref().ok_or_else(|| Error::Config("build needs --out".into()))?;
            let start = Instant::now();
            let s = if control {
                control_example(cfg.g, cfg.seed)?
            } else {
                build_complementary_example_with_kernel(cfg.n, cfg.g, cfg.delta, cfg.seed, cfg.kernel)?
            };
            write(out, &s.to_json()?)?;
            let mut rep = RunReport::new("build", &cfg);
            rep.scenario = Some((&s).into());
            rep.extend([invariants_check(&s), factor_types(&s)]);
            rep.runtime_s = start.elapsed().as_secs_f64();
            finish(&rep, report.as_deref())
        }
        Command::Verify { scenario, suite, kernel_sweep, common } => {
            let mut cfg = common.config()?;
            if let Some(name) = suite {
                cfg.suite = name;
            }
            cfg.kernel_sweep |= kernel_sweep;
            let registry = Registry::default();
            registry.resolve(&cfg.suite)?;
            let s = Scenario::from_json(&read(&scenario)?).map_err(|e| Error::Config(e.to_string()))?;
            finish(&registry.run(&s, &cfg)?, common.out.as_deref())
        }
        Command::Report { path } => {
            let rep = RunReport::from_json(&read(&path)?).map_err(|e| Error::Config(e.to_string()))?;
            print!("{}", rep.summary());
            for c in rep.checks.iter().filter(|c| c.status != Status::Pass || rep.config.verbosity > 0) {
                println!("  {} [{}] {}", c.name, c.anchor, serde_measured(c));
            }
            Ok(0)
        }
    }
}

fn serde_measured(c: &theta_lab::verify::CheckRecord) -> String {
    c.measured.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

/// Polarization types of the factors, recorded for the build report.
fn factor_types(s: &Scenario) -> theta_lab::verify::CheckRecord {
    timed("factor_types", "scenario.factor_types", |r| {
        let Some(split) = &s.split else {
            r.note("no complementary pair");
            return Ok(Status::Pass);
        };
        let (tx, ty) = (&split.x.sub.ty, &split.y.sub.ty);
        r.measure_value("type_x", tx.divisors.clone().into()).measure_value("type_y", ty.divisors.clone().into());
        Ok(Status::from_bool(tx.degree() == s.delta && ty.degree() == s.delta))
    })
}

fn usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::Parse(_) | Error::ParametersOutOfRange { .. } | Error::OutOfRange(_) | Error::Io(_)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { USAGE } else { 1 })
        }
    }
}
