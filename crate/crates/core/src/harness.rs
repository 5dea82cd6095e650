//! Experiment configuration and the benchmark driver behind `igpm bench`.
//!
//! Every run index `r` draws its instance from seed `seed + r`, and all
//! (variant, γ) pairs are solved on that same instance, so comparisons
//! across variants are paired.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gate::SubproblemContext;
use crate::kv;
use crate::linalg::{DenseMatrix, DenseVector, Matrix};
use crate::objectives::{
    generate_instance, lipschitz_estimate, load_problem, InstanceSpec, Objective, ProblemInstance,
    TauChoice, TauPreset,
};
use crate::oracles::{self, OracleReport};
use crate::projection::{project_l1_exact, project_l1_inexact};
use crate::report::ReportRow;
use crate::solver::{solve, SolverConfig, Variant};

/// Keys accepted in config files and as `--key` flags.
pub const KEYS: &[&str] = &[
    "n",
    "m",
    "s",
    "sparse",
    "density",
    "tau-preset",
    "tau",
    "algo",
    "gamma",
    "runs",
    "seed",
    "beta",
    "eta",
    "theta",
    "alpha0",
    "omega0",
    "eps",
    "max-outer",
    "max-inner",
    "bb",
    "beta-min",
    "beta-max",
    "out",
    "matrix",
    "rhs",
    "timing",
];

/// Fixed-step variants use `β = FIXED_STEP_FRACTION / λ̂`.
pub const FIXED_STEP_FRACTION: f64 = 0.8;

const LIPSCHITZ_TOL: f64 = 1e-8;
const LIPSCHITZ_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    /// Generated instances; the seed field is replaced per run.
    Generate(InstanceSpec),
    Files {
        matrix: PathBuf,
        rhs: PathBuf,
        tau: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub variants: Vec<Variant>,
    pub gammas: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    /// Shared solver parameters; variant, γ and (for fixed-step variants)
    /// β are set per run.
    pub solver: SolverConfig,
    pub out: Option<PathBuf>,
    /// When false, `time_s` is reported as 0 so output is reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    /// The (variant, γ) pairs to run: exact variants only at γ = 1,
    /// inexact variants at every listed γ below 1.
    pub fn pairs(&self) -> Vec<(Variant, f64)> {
        let mut pairs = Vec::new();
        for &v in &self.variants {
            if v.inexact() {
                pairs.extend(self.gammas.iter().filter(|&&g| g < 1.0).map(|&g| (v, g)));
            } else {
                pairs.push((v, 1.0));
            }
        }
        pairs
    }

    /// The instance solved by run `r`.
    pub fn instance(&self, r: usize) -> Result<ProblemInstance> {
        match &self.problem {
            ProblemSource::Generate(spec) => generate_instance(&InstanceSpec {
                seed: self.seed.wrapping_add(r as u64),
                ..*spec
            }),
            ProblemSource::Files { matrix, rhs, tau } => load_problem(matrix, rhs, *tau),
        }
    }
}

/// Reads a config file into raw pairs; `_` in keys is read as `-`.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(kv::parse(&text, &path.display().to_string())?
        .into_iter()
        .map(|(k, v)| (k.replace('_', "-"), v))
        .collect())
}

/// Builds a config from file pairs overridden by flag pairs.
pub fn parse_config(
    file: &[(String, String)],
    flags: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut merged: Vec<(String, String)> = Vec::new();
    for (k, v) in file.iter().chain(flags) {
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::parse(k.as_str(), "unknown key"));
        }
        match merged.iter_mut().find(|(seen, _)| seen == k) {
            Some(slot) => slot.1 = v.clone(),
            None => merged.push((k.clone(), v.clone())),
        }
    }
    let get = |key: &str| {
        merged
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };

    let mut solver = SolverConfig::default();
    set(&get, "beta", &mut solver.beta)?;
    set(&get, "eta", &mut solver.eta)?;
    set(&get, "theta", &mut solver.theta)?;
    set(&get, "alpha0", &mut solver.alpha0)?;
    set(&get, "omega0", &mut solver.omega0)?;
    set(&get, "eps", &mut solver.eps)?;
    set(&get, "max-outer", &mut solver.max_outer)?;
    set(&get, "bb", &mut solver.bb_mode)?;
    set(&get, "beta-min", &mut solver.beta_min)?;
    set(&get, "beta-max", &mut solver.beta_max)?;
    if let Some(raw) = get("max-inner") {
        solver.max_inner = Some(value("max-inner", raw)?);
    }

    let variants: Vec<Variant> = match get("algo") {
        Some(raw) => list(raw).map(|s| value("algo", s)).collect::<Result<_>>()?,
        None => Variant::ALL.to_vec(),
    };
    if variants.is_empty() {
        return Err(Error::parse("algo", "empty algorithm list"));
    }
    let gammas: Vec<f64> = match get("gamma") {
        Some(raw) => list(raw)
            .map(|s| value("gamma", s))
            .collect::<Result<_>>()?,
        None => vec![0.8],
    };
    if gammas.is_empty() {
        return Err(Error::parse("gamma", "empty gamma list"));
    }
    if let Some(g) = gammas.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
        return Err(Error::parse("gamma", format!("{g} is outside (0, 1]")));
    }
    if variants.iter().any(|v| v.inexact()) && !gammas.iter().any(|&g| g < 1.0) {
        return Err(Error::parse(
            "gamma",
            "inexact variants need at least one gamma below 1",
        ));
    }

    let mut runs = 1usize;
    set(&get, "runs", &mut runs)?;
    if runs == 0 {
        return Err(Error::parse("runs", "must be at least 1"));
    }
    let mut seed = 0u64;
    set(&get, "seed", &mut seed)?;
    let mut timing = true;
    set(&get, "timing", &mut timing)?;
    let tau: Option<f64> = get("tau").map(|raw| value("tau", raw)).transpose()?;
    if let Some(t) = tau.filter(|t| !(*t > 0.0)) {
        return Err(Error::parse(
            "tau",
            format!("radius must be positive, got {t}"),
        ));
    }

    let problem = match (get("matrix"), get("rhs")) {
        (Some(matrix), Some(rhs)) => ProblemSource::Files {
            matrix: matrix.into(),
            rhs: rhs.into(),
            tau: tau.ok_or_else(|| Error::parse("tau", "required with --matrix/--rhs"))?,
        },
        (Some(_), None) => return Err(Error::parse("rhs", "required with --matrix")),
        (None, Some(_)) => return Err(Error::parse("matrix", "required with --rhs")),
        (None, None) => {
            let need = |key: &str| -> Result<usize> {
                value(key, get(key).ok_or_else(|| Error::parse(key, "required"))?)
            };
            let (n, m, s) = (need("n")?, need("m")?, need("s")?);
            if n == 0 || m == 0 {
                return Err(Error::parse(
                    if n == 0 { "n" } else { "m" },
                    "must be positive",
                ));
            }
            if s > n {
                return Err(Error::parse("s", format!("sparsity {s} exceeds n = {n}")));
            }
            let mut sparse = false;
            set(&get, "sparse", &mut sparse)?;
            let density: Option<f64> = get("density")
                .map(|raw| value("density", raw))
                .transpose()?;
            if let Some(d) = density.filter(|d| !(*d > 0.0 && *d <= 1.0)) {
                return Err(Error::parse("density", format!("{d} is outside (0, 1]")));
            }
            let mut preset = TauPreset::Tight;
            set(&get, "tau-preset", &mut preset)?;
            ProblemSource::Generate(InstanceSpec {
                n,
                m,
                s,
                dense: !sparse,
                density,
                tau: tau.map_or(TauChoice::Preset(preset), TauChoice::Fixed),
                seed,
            })
        }
    };

    let cfg = ExperimentConfig {
        problem,
        variants,
        gammas,
        runs,
        seed,
        solver,
        out: get("out").map(PathBuf::from),
        timing,
    };
    for (variant, gamma) in cfg.pairs() {
        SolverConfig {
            variant,
            gamma,
            ..cfg.solver.clone()
        }
        .validate()
        .map_err(|e| Error::parse(variant.name(), e.to_string()))?;
    }
    Ok(cfg)
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| Error::parse(key, format!("invalid value `{raw}`: {e}")))
}

fn set<'a, T: FromStr>(
    get: &impl Fn(&str) -> Option<&'a str>,
    key: &str,
    slot: &mut T,
) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    if let Some(raw) = get(key) {
        *slot = value(key, raw)?;
    }
    Ok(())
}

/// Solver settings for one (variant, γ) pair; `lambda` is `λ̂` of the
/// instance and is required by fixed-step variants.
pub fn run_config(
    base: &SolverConfig,
    variant: Variant,
    gamma: f64,
    lambda: Option<f64>,
) -> Result<SolverConfig> {
    let mut cfg = SolverConfig {
        variant,
        gamma,
        ..base.clone()
    };
    if !variant.line_search() {
        let lambda =
            lambda.ok_or_else(|| Error::contract("fixed stepsize needs a Lipschitz estimate"))?;
        cfg.beta = FIXED_STEP_FRACTION / lambda;
    }
    Ok(cfg)
}

/// `λ̂` as used for fixed stepsizes.
pub fn lipschitz(inst: &ProblemInstance) -> Result<f64> {
    lipschitz_estimate(&inst.a, LIPSCHITZ_TOL, LIPSCHITZ_MAX_ITERS)
}

#[derive(Default)]
struct Accumulator {
    time: f64,
    outer: f64,
    inner: f64,
    backtracks: f64,
    residual: f64,
    f: f64,
    converged: usize,
    nonconverged: usize,
}

/// Runs every (variant, γ) pair on `runs` instances and averages the
/// converged runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let pairs = cfg.pairs();
    if pairs.is_empty() {
        return Err(Error::contract("no (variant, gamma) pairs to run"));
    }
    let needs_lambda = pairs.iter().any(|(v, _)| !v.line_search());
    let mut acc: Vec<Accumulator> = pairs.iter().map(|_| Accumulator::default()).collect();
    for r in 0..cfg.runs {
        let seed = cfg.seed.wrapping_add(r as u64);
        let inst = cfg.instance(r)?;
        let lambda = if needs_lambda {
            Some(lipschitz(&inst)?)
        } else {
            None
        };
        let x0 = DenseVector::zeros(inst.n());
        for (&(variant, gamma), a) in pairs.iter().zip(acc.iter_mut()) {
            let wrap = |e: Error| Error::Run {
                alg: variant.name().into(),
                gamma,
                seed,
                source: Box::new(e),
            };
            let scfg = run_config(&cfg.solver, variant, gamma, lambda).map_err(wrap)?;
            let start = Instant::now();
            let out = solve(&inst, inst.tau, &x0, &scfg).map_err(wrap)?;
            let elapsed = start.elapsed().as_secs_f64();
            if !out.converged {
                a.nonconverged += 1;
                continue;
            }
            a.converged += 1;
            a.time += if cfg.timing { elapsed } else { 0.0 };
            a.outer += out.trace.outer_iterations() as f64;
            a.inner += out.trace.total_inner() as f64;
            a.backtracks += out.trace.total_backtracks() as f64;
            a.residual += out.final_residual;
            a.f += out.f;
        }
    }
    Ok(pairs
        .iter()
        .zip(acc)
        .map(|(&(variant, gamma), a)| {
            let k = a.converged as f64;
            ReportRow {
                alg: variant.name().into(),
                gamma,
                time_s: a.time / k,
                outer_k: a.outer / k,
                inner_j: a.inner / k,
                backtracks: a.backtracks / k,
                final_residual: a.residual / k,
                f_final: a.f / k,
                nonconverged: a.nonconverged,
            }
        })
        .collect())
}

/// Runs the reference oracles against the production code at a scale that
/// finishes in seconds. Returns one named report per check.
pub fn run_oracle_suite(seed: u64) -> Result<Vec<(String, OracleReport)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    let mut worst = OracleReport::new(0.0, None, 1e-10);
    for _ in 0..1000 {
        let (v, tau) = random_point(&mut rng, 2..=200);
        let z = project_l1_exact(&v, tau)?.z;
        let r = OracleReport::compare(&z, &oracles::l1_projection_sorted(&v, tau)?, 1e-10)?;
        if r.max_abs_deviation > worst.max_abs_deviation {
            worst = r;
        }
    }
    reports.push(("projection vs sorted oracle".to_string(), worst));

    let mut worst = OracleReport::new(0.0, None, oracles::GAP_TOLERANCE);
    for _ in 0..200 {
        let (v, tau) = random_point(&mut rng, 1..=100);
        let r = oracles::gap_check(&SubproblemContext::for_point(v, tau, 0.0)?)?;
        if r.max_abs_deviation > worst.max_abs_deviation {
            worst = r;
        }
    }
    reports.push(("moreau duality gap".to_string(), worst));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (v, tau) = random_point(&mut rng, 1..=100);
        let gamma = rng.random_range(0.05..1.0);
        let res = project_l1_inexact(&SubproblemContext::for_point(v, tau, 0.0)?, gamma)?;
        if let Some(ratio) = res.ratio_final.filter(|_| !res.exact) {
            worst = worst.max(gamma - ratio);
        }
    }
    reports.push((
        "inexact gate soundness".to_string(),
        OracleReport::new(worst.max(0.0), None, 1e-10),
    ));

    let inst = generate_instance(&InstanceSpec::dense(60, 40, 6, seed))?;
    let x: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = inst.gradient(&x);
    let fd = oracles::finite_difference_gradient(|p| inst.value(p), &x);
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    reports.push((
        "gradient vs finite differences".to_string(),
        OracleReport::compare(&g, &fd, 1e-6 * scale)?,
    ));

    let mut worst = OracleReport::new(0.0, None, 0.01);
    for _ in 0..5 {
        let data: Vec<f64> = (0..50 * 30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = Matrix::from(DenseMatrix::new(50, 30, data)?);
        let exact = oracles::dense_lambda_max(&a)?;
        let est = lipschitz_estimate(&a, LIPSCHITZ_TOL, LIPSCHITZ_MAX_ITERS)?;
        let r = OracleReport::new((est - exact).abs() / exact, None, 0.01);
        if r.max_abs_deviation > worst.max_abs_deviation {
            worst = r;
        }
    }
    reports.push(("lipschitz vs dense eigenvalue".to_string(), worst));
    Ok(reports)
}

fn random_point(rng: &mut ChaCha8Rng, dims: std::ops::RangeInclusive<usize>) -> (DenseVector, f64) {
    let n = rng.random_range(dims);
    let scale = rng.random_range(0.1..10.0);
    let v: Vec<f64> = (0..n)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect();
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    let tau = (l1 * rng.random_range(0.05..1.2)).max(1e-3);
    (DenseVector::new(v).expect("finite draws"), tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn gamma_list_and_defaults() {
        let cfg = parse_config(
            &[],
            &pairs(&[
                ("gamma", "0.6,0.9"),
                ("algo", "igpm2"),
                ("n", "1000"),
                ("m", "400"),
                ("s", "20"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.gammas, vec![0.6, 0.9]);
        assert_eq!(cfg.variants, vec![Variant::Igpm2]);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.runs, 1);
        assert_eq!(
            cfg.pairs(),
            vec![(Variant::Igpm2, 0.6), (Variant::Igpm2, 0.9)]
        );
    }

    #[test]
    fn paper_preset_radius() {
        let cfg = parse_config(
            &[],
            &pairs(&[
                ("tau-preset", "paper"),
                ("n", "100"),
                ("m", "50"),
                ("s", "10"),
            ]),
        )
        .unwrap();
        match cfg.problem {
            ProblemSource::Generate(spec) => assert_eq!(spec.radius(), 90.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn usage_errors_name_the_key() {
        let key_of = |r: Result<ExperimentConfig>| match r {
            Err(Error::Parse { context, .. }) => context,
            other => panic!("{other:?}"),
        };
        assert_eq!(
            key_of(parse_config(&[], &pairs(&[("n", "10"), ("m", "5")]))),
            "s"
        );
        assert_eq!(key_of(parse_config(&[], &pairs(&[("n", "ten")]))), "n");
        assert_eq!(
            key_of(parse_config(&pairs(&[("colour", "red")]), &[])),
            "colour"
        );
        assert_eq!(
            key_of(parse_config(
                &[],
                &pairs(&[("n", "9"), ("m", "5"), ("s", "2"), ("gamma", "1.5")])
            )),
            "gamma"
        );
        assert_eq!(
            key_of(parse_config(
                &[],
                &pairs(&[("n", "9"), ("m", "5"), ("s", "2"), ("runs", "0")])
            )),
            "runs"
        );
        assert_eq!(
            key_of(parse_config(&[], &pairs(&[("matrix", "a.mtx")]))),
            "rhs"
        );
        assert_eq!(
            key_of(parse_config(
                &[],
                &pairs(&[("n", "9"), ("m", "5"), ("s", "10")])
            )),
            "s"
        );
    }

    #[test]
    fn flags_override_file() {
        let file = pairs(&[
            ("n", "50"),
            ("m", "80"),
            ("s", "5"),
            ("beta", "0.5"),
            ("runs", "3"),
        ]);
        let cfg = parse_config(&file, &pairs(&[("runs", "2")])).unwrap();
        assert_eq!(cfg.runs, 2);
        assert_eq!(cfg.solver.beta, 0.5);
    }

    #[test]
    fn config_file_underscores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "# bench\nmax_outer = 50\nn = 10\nm = 20\ns = 2\n").unwrap();
        let cfg = parse_config(&read_config_file(&path).unwrap(), &[]).unwrap();
        assert_eq!(cfg.solver.max_outer, 50);
    }

    #[test]
    fn experiment_rows_pairing() {
        let cfg = parse_config(
            &[],
            &pairs(&[
                ("algo", "gpm1,igpm1"),
                ("gamma", "1.0,0.8"),
                ("n", "200"),
                ("m", "1000"),
                ("s", "10"),
                ("timing", "false"),
            ]),
        )
        .unwrap();
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].alg.as_str(), rows[0].gamma), ("gpm1", 1.0));
        assert_eq!((rows[1].alg.as_str(), rows[1].gamma), ("igpm1", 0.8));
        for r in &rows {
            assert_eq!(r.nonconverged, 0);
            assert!(r.final_residual <= 1e-8 * 200.0, "{r:?}");
            assert_eq!(r.time_s, 0.0);
        }
        assert!(rows[1].inner_j <= rows[0].inner_j);
        assert_eq!(rows, run_experiment(&cfg).unwrap());
    }

    #[test]
    fn nonconverged_runs_are_counted() {
        let cfg = parse_config(
            &[],
            &pairs(&[
                ("algo", "gpm2"),
                ("n", "100"),
                ("m", "300"),
                ("s", "5"),
                ("max-outer", "1"),
                ("runs", "2"),
            ]),
        )
        .unwrap();
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows[0].nonconverged, 2);
        assert!(rows[0].outer_k.is_nan());
    }

    #[test]
    fn oracle_suite_passes() {
        for (name, r) in run_oracle_suite(1).unwrap() {
            assert!(r.pass, "{name}: {r:?}");
        }
    }
}
