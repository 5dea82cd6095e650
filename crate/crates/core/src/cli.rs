//! The `igpm` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 a run did not converge,
//! 3 internal failure (including a failed `verify` check).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::{Error, Result};
use crate::gate::SubproblemContext;
use crate::harness::{self, ExperimentConfig, KEYS};
use crate::linalg::{read_vector, DenseVector};
use crate::objectives::write_instance;
use crate::projection::{project_l1_exact, project_l1_inexact};
use crate::report::{fmt_g, render_csv};
use crate::solver::solve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

fn experiment_args(cmd: Command) -> Command {
    let mut cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value file; flags override it"),
        )
        .arg(
            Arg::new("sparse")
                .long("sparse")
                .action(ArgAction::SetTrue)
                .help("sparse CSR measurement matrix"),
        )
        .arg(
            Arg::new("no-timing")
                .long("no-timing")
                .action(ArgAction::SetTrue)
                .help("report time_s as 0"),
        );
    for &key in KEYS {
        if key == "sparse" || key == "timing" {
            continue;
        }
        cmd = cmd.arg(Arg::new(key).long(key).value_name("VALUE"));
    }
    cmd
}

fn command() -> Command {
    Command::new("igpm")
        .about("Inexact gradient projection on the l1 ball")
        .subcommand_required(true)
        .subcommand(experiment_args(
            Command::new("solve").about("Single run; writes the iteration trace as CSV"),
        ))
        .subcommand(experiment_args(Command::new("bench").about(
            "Averaged runs over variants and gammas; writes a CSV table",
        )))
        .subcommand(experiment_args(
            Command::new("gen").about("Writes a generated instance to the --out directory"),
        ))
        .subcommand(
            Command::new("project")
                .about("Projects one vector onto the l1 ball and prints the certificate")
                .arg(
                    Arg::new("v")
                        .long("v")
                        .value_name("LIST")
                        .help("comma-separated entries"),
                )
                .arg(Arg::new("vector").long("vector").value_name("FILE"))
                .arg(Arg::new("tau").long("tau").required(true))
                .arg(Arg::new("gamma").long("gamma").default_value("1"))
                .arg(Arg::new("omega").long("omega").default_value("0")),
        )
        .subcommand(
            Command::new("verify")
                .about("Runs the reference oracle suite")
                .arg(Arg::new("seed").long("seed").default_value("0")),
        )
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match matches.subcommand() {
        Some(("solve", m)) => experiment(m).and_then(|c| cmd_solve(&c)),
        Some(("bench", m)) => experiment(m).and_then(|c| cmd_bench(&c)),
        Some(("gen", m)) => experiment(m).and_then(|c| cmd_gen(&c)),
        Some(("project", m)) => cmd_project(m),
        Some(("verify", m)) => cmd_verify(m),
        _ => unreachable!("subcommand_required"),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } | Error::Io { .. } => EXIT_USAGE,
                _ => EXIT_INTERNAL,
            }
        }
    }
}

fn experiment(m: &ArgMatches) -> Result<ExperimentConfig> {
    let file = match m.get_one::<String>("config") {
        Some(path) => harness::read_config_file(Path::new(path))?,
        None => Vec::new(),
    };
    let mut flags: Vec<(String, String)> = KEYS
        .iter()
        .filter(|&&k| k != "sparse" && k != "timing")
        .filter_map(|&k| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    if m.get_flag("sparse") {
        flags.push(("sparse".into(), "true".into()));
    }
    if m.get_flag("no-timing") {
        flags.push(("timing".into(), "false".into()));
    }
    harness::parse_config(&file, &flags)
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn cmd_bench(cfg: &ExperimentConfig) -> Result<i32> {
    let rows = harness::run_experiment(cfg)?;
    write_output(cfg.out.as_ref(), &render_csv(&rows)?)?;
    let failed: usize = rows.iter().map(|r| r.nonconverged).sum();
    if failed > 0 {
        eprintln!("{failed} run(s) did not converge");
        return Ok(EXIT_NONCONVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_solve(cfg: &ExperimentConfig) -> Result<i32> {
    let (variant, gamma) = cfg.pairs()[0];
    let inst = cfg.instance(0)?;
    let lambda = if variant.line_search() {
        None
    } else {
        Some(harness::lipschitz(&inst)?)
    };
    let scfg = harness::run_config(&cfg.solver, variant, gamma, lambda)?;
    let out = solve(&inst, inst.tau, &DenseVector::zeros(inst.n()), &scfg)?;
    write_output(cfg.out.as_ref(), &out.trace.to_csv())?;
    eprintln!(
        "{variant} gamma={} outer={} inner={} f={} residual={} converged={}",
        fmt_g(gamma),
        out.trace.outer_iterations(),
        out.trace.total_inner(),
        fmt_g(out.f),
        fmt_g(out.final_residual),
        out.converged
    );
    if let Some(truth) = &inst.x_true {
        let err = out
            .x
            .iter()
            .zip(truth.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        eprintln!("max abs error vs generating signal: {}", fmt_g(err));
    }
    Ok(if out.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    })
}

fn cmd_gen(cfg: &ExperimentConfig) -> Result<i32> {
    let dir = cfg
        .out
        .as_ref()
        .ok_or_else(|| Error::parse("out", "gen needs an output directory"))?;
    let inst = cfg.instance(0)?;
    write_instance(dir, &inst)?;
    eprintln!(
        "wrote {}x{} instance (tau = {}) to {}",
        inst.m(),
        inst.n(),
        fmt_g(inst.tau),
        dir.display()
    );
    Ok(EXIT_OK)
}

fn parse_f64(m: &ArgMatches, key: &str) -> Result<f64> {
    let raw = m.get_one::<String>(key).expect("defaulted or required");
    raw.parse()
        .map_err(|_| Error::parse(key, format!("invalid value `{raw}`")))
}

fn cmd_project(m: &ArgMatches) -> Result<i32> {
    let v = match (m.get_one::<String>("v"), m.get_one::<String>("vector")) {
        (Some(list), None) => {
            let values = list
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse("v", format!("invalid list `{list}`")))?;
            DenseVector::new(values).map_err(|e| Error::parse("v", e.to_string()))?
        }
        (None, Some(path)) => read_vector(Path::new(path))?,
        _ => return Err(Error::parse("v", "give exactly one of --v or --vector")),
    };
    let (tau, gamma, omega) = (
        parse_f64(m, "tau")?,
        parse_f64(m, "gamma")?,
        parse_f64(m, "omega")?,
    );
    let ctx = SubproblemContext::for_point(v, tau, omega)
        .map_err(|e| Error::parse("tau", e.to_string()))?;
    let res = if gamma >= 1.0 {
        project_l1_exact(ctx.v(), tau)?
    } else {
        project_l1_inexact(&ctx, gamma).map_err(|e| match e {
            Error::Contract(msg) => Error::parse("gamma", msg),
            other => other,
        })?
    };
    let z: Vec<String> = res.z.iter().map(|&x| fmt_g(x)).collect();
    println!("z = {}", z.join(","));
    println!("inner_iterations = {}", res.inner_iterations);
    println!("exact = {}", res.exact);
    println!("ratio = {}", res.ratio_final.map_or("na".into(), fmt_g));
    println!("p = {}", fmt_g(res.certificate.p_z));
    println!("q = {}", fmt_g(res.certificate.q_u));
    println!("gap = {}", fmt_g(res.certificate.gap()));
    Ok(EXIT_OK)
}

fn cmd_verify(m: &ArgMatches) -> Result<i32> {
    let raw = m.get_one::<String>("seed").expect("defaulted");
    let seed: u64 = raw
        .parse()
        .map_err(|_| Error::parse("seed", format!("invalid value `{raw}`")))?;
    let mut ok = true;
    for (name, r) in harness::run_oracle_suite(seed)? {
        ok &= r.pass;
        println!(
            "{} {name}: max deviation {} (tolerance {})",
            if r.pass { "PASS" } else { "FAIL" },
            fmt_g(r.max_abs_deviation),
            fmt_g(r.tolerance)
        );
    }
    Ok(if ok { EXIT_OK } else { EXIT_INTERNAL })
}
