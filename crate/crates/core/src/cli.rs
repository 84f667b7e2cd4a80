//! The `bfz` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind as ClapKind;
use clap::{Args, Parser, Subcommand};

use crate::checker::{check_program, CheckReport, ErrorKind};
use crate::harness::{reports_json, test_primitive, test_program, SampleConfig};
use crate::lang::{parse_program, parse_ty, Program};
use crate::metrics::fmt_grade;
use crate::runtime::{parse_value, run_program, Value};
use crate::vmetric::{value_distance_opts, DivergenceForm, MetricOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_EVAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NOINPUT: i32 = 66;

#[derive(Parser, Debug)]
#[command(name = "bfz", version, about = "Sensitivity checker and tester for Bunched Fuzz programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Type-check a program and report inferred sensitivities.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a program.
    Run {
        file: PathBuf,
        /// Argument value, applied in order.
        #[arg(long = "arg", value_name = "VALUE", allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Randomly test that each definition preserves its metric bound.
    Sens {
        file: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        json: bool,
    },
    /// Randomly test a primitive against its declared type.
    Audit {
        /// Primitive, optionally with arguments, e.g. `rot[pi/4]`.
        prim: String,
        #[command(flatten)]
        sampling: Sampling,
        /// Audit at this type instead of the declared one.
        #[arg(long, value_name = "TYPE")]
        at: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Distance between two values of a type.
    Dist {
        #[arg(long = "type", value_name = "TYPE")]
        ty: String,
        #[arg(allow_hyphen_values = true)]
        v: String,
        #[arg(allow_hyphen_values = true)]
        w: String,
        #[arg(long)]
        sum_divergence: bool,
    },
}

#[derive(Args, Debug)]
struct Sampling {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    rel_tol: f64,
    /// Measure distributions by the summed rather than the maximal log ratio.
    #[arg(long)]
    sum_divergence: bool,
}

impl Sampling {
    fn config(&self) -> SampleConfig {
        SampleConfig {
            samples: self.samples,
            seed: self.seed,
            rel_tol: self.rel_tol,
            divergence: divergence(self.sum_divergence),
            ..SampleConfig::default()
        }
    }
}

fn divergence(sum: bool) -> DivergenceForm {
    if sum {
        DivergenceForm::Sum
    } else {
        DivergenceForm::Max
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ClapKind::DisplayHelp | ClapKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "bfz: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn io(e: std::io::Error) -> Failure {
    Failure(EXIT_FAIL, format!("cannot write output: {e}"))
}

fn load(path: &Path) -> Result<Program, Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure(EXIT_NOINPUT, format!("{}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| Failure(EXIT_FAIL, format!("{}:{e}", path.display())))
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Cmd::Check { file, json } => {
            let prog = load(&file)?;
            let report = check_program(&prog);
            if json {
                writeln!(out, "{:#}", report.to_json()).map_err(io)?;
            } else {
                write_check(&report, out).map_err(io)?;
            }
            Ok(if report.ok() { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Run { file, args } => {
            let args = args
                .iter()
                .map(|a| parse_value(a).map_err(|e| usage(format!("bad --arg `{a}`: {e}"))))
                .collect::<Result<Vec<Value>, _>>()?;
            let prog = load(&file)?;
            let report = check_program(&prog);
            let fatal = report
                .defs
                .iter()
                .flat_map(|d| d.errors.iter())
                .chain(report.entry.iter().filter_map(|e| e.as_ref().err()))
                .find(|e| e.kind != ErrorKind::GradeViolation);
            if let Some(e) = fatal {
                return Err(Failure(EXIT_FAIL, format!("{}: refusing to run: {e}", file.display())));
            }
            let v = run_program(&prog, &args).map_err(|e| Failure(EXIT_EVAL, e.to_string()))?;
            writeln!(out, "{v}").map_err(io)?;
            Ok(EXIT_OK)
        }
        Cmd::Sens { file, sampling, json } => {
            let cfg = sampling.config();
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let prog = load(&file)?;
            let reports = test_program(&prog, &cfg).map_err(|e| Failure(EXIT_EVAL, e.to_string()))?;
            if json {
                writeln!(out, "{:#}", reports_json(&cfg, &reports)).map_err(io)?;
            } else {
                for r in &reports {
                    writeln!(out, "{}", r.summary()).map_err(io)?;
                }
            }
            Ok(if reports.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Audit { prim, sampling, at, json } => {
            let cfg = sampling.config();
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let at = at.map(|t| parse_ty(&t).map_err(|e| usage(format!("bad --at type: {e}")))).transpose()?;
            let report = test_primitive(&prim, at.as_ref(), &cfg).map_err(|e| usage(e.to_string()))?;
            if json {
                writeln!(out, "{:#}", reports_json(&cfg, std::slice::from_ref(&report))).map_err(io)?;
            } else {
                writeln!(out, "{}", report.summary()).map_err(io)?;
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Dist { ty, v, w, sum_divergence } => {
            let ty = parse_ty(&ty).map_err(|e| usage(format!("bad --type: {e}")))?;
            let v = parse_value(&v).map_err(|e| usage(format!("bad value `{v}`: {e}")))?;
            let w = parse_value(&w).map_err(|e| usage(format!("bad value `{w}`: {e}")))?;
            let opts = MetricOptions { divergence: divergence(sum_divergence), identical_functions: false };
            let d = value_distance_opts(opts, &ty, &v, &w).map_err(|e| Failure(EXIT_FAIL, e.to_string()))?;
            writeln!(out, "{}", fmt_grade(d)).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

fn write_check(report: &CheckReport, out: &mut dyn Write) -> std::io::Result<()> {
    for d in &report.defs {
        match &d.ty {
            Some(t) => writeln!(out, "{} : {t}", d.name)?,
            None => writeln!(out, "{}", d.name)?,
        }
        if let Some(env) = &d.env {
            writeln!(out, "  env: {env}")?;
        }
        for e in &d.errors {
            writeln!(out, "  error: {e}")?;
        }
    }
    match &report.entry {
        Some(Ok(t)) => writeln!(out, "main : {t}")?,
        Some(Err(e)) => writeln!(out, "main\n  error: {e}")?,
        None => {}
    }
    writeln!(out, "status: {}", if report.ok() { "pass" } else { "fail" })
}
