//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use igpm::gate::{gate_ratio, SubproblemContext};
use igpm::harness::lipschitz;
use igpm::linalg::{DenseMatrix, DenseVector, Matrix};
use igpm::objectives::{
    generate_instance, lipschitz_estimate, InstanceSpec, Objective, ProblemInstance,
};
use igpm::oracles::{
    dense_lambda_max, finite_difference_gradient, gap_check, l1_projection_sorted,
};
use igpm::projection::{project_l1_exact, project_l1_inexact};
use igpm::solver::{
    armijo_step_floor, ergodic_bound_fixed, solve, SolveOutcome, SolverConfig, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const PROJECTION_TOL: f64 = 1e-10;
const GAP_TOL: f64 = 1e-8;
const RATIO_TOL: f64 = 1e-10;
const DESCENT_SLACK: f64 = 1e-10;
const LAMBDA_SLACK: f64 = 1.02;
const OUTER_SPREAD: f64 = 0.20;
const RECOVERY_TOL: f64 = 1e-3;
const GRADIENT_TOL: f64 = 1e-6;
const LIPSCHITZ_REL_TOL: f64 = 0.01;

struct Verdict {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: usize, title: &'static str, failures: Vec<String>, summary: String) -> Verdict {
    let pass = failures.is_empty();
    let detail = if pass {
        summary
    } else {
        format!(
            "{summary}; {} failure(s), first: {}",
            failures.len(),
            failures[0]
        )
    };
    Verdict {
        id,
        title,
        pass,
        detail,
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// A random point with `‖x‖₁ ≤ τ`, sometimes on the boundary.
fn random_feasible(rng: &mut ChaCha8Rng, n: usize, tau: f64) -> Vec<f64> {
    let mut x = random_vector(rng, n, 1.0);
    let l1: f64 = x.iter().map(|t| t.abs()).sum();
    let r = if rng.random_bool(0.3) {
        1.0
    } else {
        rng.random::<f64>()
    };
    x.iter_mut().for_each(|t| *t *= r * tau / l1);
    // Sparse points, like solver iterates.
    if rng.random_bool(0.5) {
        for t in x.iter_mut() {
            if rng.random_bool(0.7) {
                *t = 0.0;
            }
        }
    }
    x
}

fn random_context(rng: &mut ChaCha8Rng, max_n: usize) -> SubproblemContext {
    let n = rng.random_range(1..=max_n);
    let tau = rng.random_range(0.1..20.0);
    let x = random_feasible(rng, n, tau);
    let scale = rng.random_range(0.1..10.0);
    let g = random_vector(rng, n, scale);
    let beta = rng.random_range(0.01..2.0);
    let omega = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random_range(0.0..1e-2)
    };
    SubproblemContext::new(
        DenseVector::new(x).unwrap(),
        DenseVector::new(g).unwrap(),
        beta,
        tau,
        omega,
    )
    .unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for trial in 0..10_000 {
        let n = rng.random_range(2..=200);
        let scale = rng.random_range(1e-3..1e3);
        let mut v = random_vector(&mut rng, n, scale);
        match trial % 4 {
            // Ties and exact zeros.
            1 => v.iter_mut().for_each(|t| *t = t.round()),
            2 => v.iter_mut().step_by(3).for_each(|t| *t = 0.0),
            _ => {}
        }
        let l1: f64 = v.iter().map(|t| t.abs()).sum();
        let tau = (l1 * rng.random_range(0.01..1.3)).max(1e-6);
        let dv = DenseVector::new(v.clone()).unwrap();
        let z = project_l1_exact(&dv, tau).unwrap().z;
        let dev = max_abs_diff(&z, &l1_projection_sorted(&v, tau).unwrap());
        worst = worst.max(dev);
        if dev > PROJECTION_TOL {
            failures.push(format!("trial {trial}: n={n} deviation {dev:e}"));
        }
    }
    verdict(
        1,
        "active-set projection matches sort-based oracle",
        failures,
        format!("10000 projections, max deviation {worst:.2e} (tol {PROJECTION_TOL:e})"),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let ctx = random_context(&mut rng, 100);
        let r = gap_check(&ctx).unwrap();
        worst = worst.max(r.max_abs_deviation);
        if !r.pass || r.tolerance != GAP_TOL {
            failures.push(format!("context {trial}: {r:?}"));
        }
    }
    verdict(
        2,
        "Moreau decomposition and zero duality gap at the exact projection",
        failures,
        format!("1000 contexts, max scaled deviation {worst:.2e} (tol {GAP_TOL:e})"),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let (mut ratios, mut early) = (0usize, 0usize);
    for trial in 0..100 {
        // Gradient steps from a boundary point give the gate room to fire.
        let n = rng.random_range(20..=200);
        let tau = rng.random_range(1.0..10.0);
        let mut x = random_feasible(&mut rng, n, tau);
        let l1: f64 = x.iter().map(|t| t.abs()).sum();
        x.iter_mut().for_each(|t| *t *= tau / l1);
        let g = random_vector(&mut rng, n, 1.0);
        let omega = [0.0, 1e-3, 1e-1][trial % 3];
        let ctx = SubproblemContext::new(
            DenseVector::new(x).unwrap(),
            DenseVector::new(g).unwrap(),
            rng.random_range(0.05..1.0),
            tau,
            omega,
        )
        .unwrap();
        let gamma = rng.random_range(0.3..0.95);
        let res = project_l1_inexact(&ctx, gamma).unwrap();
        for step in &res.steps {
            if let Some(r) = step.ratio {
                ratios += 1;
                if !(0.0..=1.0).contains(&r) {
                    failures.push(format!("projection {trial}: ratio {r}"));
                }
            }
        }
        if res.exact {
            continue;
        }
        early += 1;
        let v = ctx.v().as_slice();
        let p_z = 0.5
            * res
                .z
                .iter()
                .zip(v)
                .map(|(z, v)| (z - v) * (z - v))
                .sum::<f64>();
        let u: Vec<f64> = v.iter().zip(res.z.iter()).map(|(v, z)| v - z).collect();
        let u_inf = u.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let v_sq: f64 = v.iter().map(|t| t * t).sum();
        let q_u = -0.5 * res.z.iter().map(|z| z * z).sum::<f64>() - tau * u_inf + 0.5 * v_sq;
        let p_x = ctx.trivial_value();
        let scale = p_x.max(1.0);
        if (p_z - res.certificate.p_z).abs() > RATIO_TOL * scale
            || (q_u - res.certificate.q_u).abs() > RATIO_TOL * scale
        {
            failures.push(format!("projection {trial}: certificate does not match z"));
        }
        let r = gate_ratio(p_x, res.certificate.p_z, res.certificate.q_u, omega);
        match r {
            Some(r) if r >= gamma - RATIO_TOL => {}
            other => failures.push(format!(
                "projection {trial}: stored ratio {other:?} < gamma {gamma}"
            )),
        }
    }
    if early == 0 {
        failures.push("no projection terminated early".into());
    }
    verdict(
        3,
        "gate ratios lie in [0,1] and early stops re-verify ratio >= gamma",
        failures,
        format!("100 projections, {ratios} ratios checked, {early} early stops re-verified"),
    )
}

fn criterion_4() -> Verdict {
    let mut failures = Vec::new();
    let mut worst = (0usize, 1usize);
    let mut check = |label: String, v: Vec<f64>, tau: f64| {
        let n = v.len();
        let res = project_l1_exact(&DenseVector::new(v).unwrap(), tau).unwrap();
        if res.inner_iterations > n {
            failures.push(format!(
                "{label}: {} inner iterations for n = {n}",
                res.inner_iterations
            ));
        }
        if res.inner_iterations * worst.1 > worst.0 * n {
            worst = (res.inner_iterations, n);
        }
    };
    for n in 1..=400 {
        let stair: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        check(format!("staircase n={n}"), stair, 1.0);
    }
    for n in [1000, 2000] {
        let stair: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        check(format!("staircase n={n}"), stair, 1.0);
    }
    // Geometric staircases drop only one coordinate per step.
    for n in 2..=60 {
        let geo: Vec<f64> = (0..n).map(|i| 2f64.powi(-i)).collect();
        check(format!("geometric n={n}"), geo, 1e-3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..2000 {
        let n = rng.random_range(1..=300);
        let v = random_vector(&mut rng, n, 1.0);
        let tau = rng.random_range(1e-3..5.0);
        check(format!("random {trial}"), v, tau);
    }
    verdict(
        4,
        "exact projection takes at most n inner iterations",
        failures,
        format!(
            "staircases, geometric and random inputs; largest inner/n {} of {}",
            worst.0, worst.1
        ),
    )
}

fn recovery_instance(n: usize, m: usize, s: usize, seed: u64) -> ProblemInstance {
    generate_instance(&InstanceSpec::dense(n, m, s, seed)).unwrap()
}

fn run(inst: &ProblemInstance, cfg: &SolverConfig) -> SolveOutcome {
    solve(inst, inst.tau, &DenseVector::zeros(inst.n()), cfg).unwrap()
}

/// Criteria 5 and 6 share their 20 instances.
fn criteria_5_and_6() -> (Verdict, Verdict) {
    let mut fail5 = Vec::new();
    let mut fail6 = Vec::new();
    let mut worst_bound = 0.0f64;
    let mut min_alpha_margin = f64::INFINITY;
    for seed in 0..20u64 {
        let inst = recovery_instance(500, 1000, 25, 500 + seed);
        let lambda = lipschitz(&inst).unwrap();
        let f0 = inst.value(&vec![0.0; inst.n()]);

        for (variant, gamma) in [
            (Variant::Gpm1, 1.0),
            (Variant::Igpm1, 0.8),
            (Variant::Igpm1, 0.6),
        ] {
            let cfg = SolverConfig {
                variant,
                gamma,
                beta: 0.8 / lambda,
                track_residual: true,
                ..SolverConfig::default()
            };
            let out = run(&inst, &cfg);
            if !out.converged {
                fail5.push(format!("seed {seed} {variant}: did not converge"));
            }
            let mut fs: Vec<f64> = out.trace.records.iter().map(|r| r.f).collect();
            fs.push(out.f);
            for (k, w) in fs.windows(2).enumerate() {
                if w[1] > w[0] + DESCENT_SLACK * w[0].abs().max(1.0) {
                    fail5.push(format!(
                        "seed {seed} {variant}: f rose at k={k}: {} -> {}",
                        w[0], w[1]
                    ));
                    break;
                }
            }
            let avgs = out.trace.ergodic_prefix_averages().unwrap();
            for (i, avg) in avgs.iter().enumerate() {
                let bound = ergodic_bound_fixed(gamma, cfg.beta, f0, 0.0, 2.0 * cfg.omega0, i + 1);
                worst_bound = worst_bound.max(avg / bound);
                if *avg > bound {
                    fail5.push(format!(
                        "seed {seed} {variant}: prefix {} average {avg:e} > bound {bound:e}",
                        i + 1
                    ));
                    break;
                }
            }
        }

        let cfg = SolverConfig {
            variant: Variant::Igpm2,
            gamma: 0.8,
            ..SolverConfig::default()
        };
        let floor =
            armijo_step_floor(cfg.theta, cfg.eta, cfg.beta, lambda * LAMBDA_SLACK).min(cfg.alpha0);
        let out = run(&inst, &cfg);
        if !out.converged {
            fail6.push(format!("seed {seed}: igpm2 did not converge"));
        }
        for r in &out.trace.records {
            min_alpha_margin = min_alpha_margin.min(r.alpha / floor);
            if r.alpha < floor {
                fail6.push(format!(
                    "seed {seed} k={}: alpha {} < floor {floor}",
                    r.k, r.alpha
                ));
            }
        }
    }
    (
        verdict(
            5,
            "fixed-step descent is monotone and obeys the ergodic O(1/k) bound",
            fail5,
            format!(
                "20 instances x {{gpm1, igpm1@0.8, igpm1@0.6}}, max average/bound {worst_bound:.3}"
            ),
        ),
        verdict(
            6,
            "accepted Armijo steps stay above theta(1-eta)/(beta L)",
            fail6,
            format!("20 instances, min alpha/floor {min_alpha_margin:.3}"),
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let inst = recovery_instance(2000, 4000, 100, 7000 + seed);
        let lambda = lipschitz(&inst).unwrap();
        let base = SolverConfig {
            beta: 0.8 / lambda,
            ..SolverConfig::default()
        };
        let exact = run(
            &inst,
            &SolverConfig {
                variant: Variant::Gpm1,
                ..base.clone()
            },
        );
        let last = |o: &SolveOutcome| o.trace.records.last().map_or(f64::INFINITY, |r| r.resid);
        if !exact.converged || last(&exact) > 1e-4 {
            failures.push(format!("seed {seed}: gpm1 did not reach 1e-4"));
        }
        let (k0, j0) = (exact.trace.outer_iterations(), exact.trace.total_inner());
        let mut row = format!("seed {seed}: gpm1 k={k0} j={j0}");
        for gamma in [0.6, 0.7, 0.8, 0.9] {
            let out = run(
                &inst,
                &SolverConfig {
                    variant: Variant::Igpm1,
                    gamma,
                    ..base.clone()
                },
            );
            let (k, j) = (out.trace.outer_iterations(), out.trace.total_inner());
            row.push_str(&format!(", igpm1@{gamma} k={k} j={j}"));
            if !out.converged || last(&out) > 1e-4 {
                failures.push(format!(
                    "seed {seed} gamma {gamma}: igpm1 did not reach 1e-4"
                ));
            }
            if j > j0 {
                failures.push(format!("seed {seed} gamma {gamma}: inner {j} > {j0}"));
            }
            if (k as f64 - k0 as f64).abs() > OUTER_SPREAD * k0 as f64 {
                failures.push(format!("seed {seed} gamma {gamma}: outer {k} vs {k0}"));
            }
        }
        lines.push(row);
    }
    verdict(
        7,
        "inexact projections need fewer inner iterations (n=2000, m=4000, s=100)",
        failures,
        lines.join("; "),
    )
}

fn criterion_8() -> Verdict {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let inst = recovery_instance(200, 1000, 10, 800 + seed);
        let truth = inst.x_true.clone().unwrap();
        let lambda = lipschitz(&inst).unwrap();
        for variant in Variant::ALL {
            let mut cfg = SolverConfig {
                variant,
                ..SolverConfig::default()
            };
            if !variant.line_search() {
                cfg.beta = 0.8 / lambda;
            }
            let out = run(&inst, &cfg);
            let err = max_abs_diff(&out.x, &truth);
            worst = worst.max(err);
            if !out.converged || err > RECOVERY_TOL {
                failures.push(format!(
                    "seed {seed} {variant}: error {err:e}, converged {}",
                    out.converged
                ));
            }
        }
    }
    verdict(
        8,
        "all four variants recover the generating signal",
        failures,
        format!("5 instances x 4 variants, max |x - x_true| {worst:.2e} (tol {RECOVERY_TOL:e})"),
    )
}

fn criterion_9() -> Verdict {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_grad = 0.0f64;
    for seed in 0..5u64 {
        let spec = InstanceSpec {
            dense: seed % 2 == 0,
            density: Some(0.2),
            ..InstanceSpec::dense(60, 80, 5, seed)
        };
        let inst = generate_instance(&spec).unwrap();
        let x = random_vector(&mut rng, 60, 1.0);
        let g = inst.gradient(&x);
        let fd = finite_difference_gradient(|p| inst.value(p), &x);
        let scale = g.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        let rel = max_abs_diff(&g, &fd) / scale;
        worst_grad = worst_grad.max(rel);
        if rel > GRADIENT_TOL {
            failures.push(format!("instance {seed}: gradient deviation {rel:e}"));
        }
    }
    let mut worst_lip = 0.0f64;
    for trial in 0..20 {
        let data = random_vector(&mut rng, 50 * 30, 1.0);
        let a = Matrix::from(DenseMatrix::new(50, 30, data).unwrap());
        let exact = dense_lambda_max(&a).unwrap();
        let est = lipschitz_estimate(&a, 1e-10, 100_000).unwrap();
        let rel = (est - exact).abs() / exact;
        worst_lip = worst_lip.max(rel);
        if rel > LIPSCHITZ_REL_TOL || est < exact {
            failures.push(format!("matrix {trial}: estimate {est} vs {exact}"));
        }
    }
    verdict(
        9,
        "gradient matches finite differences; Lipschitz estimate within 1%",
        failures,
        format!("max gradient deviation {worst_grad:.2e} (tol {GRADIENT_TOL:e}), max Lipschitz deviation {worst_lip:.8} (tol {LIPSCHITZ_REL_TOL})"),
    )
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench",
        "--algo",
        "gpm1,gpm2,igpm1,igpm2",
        "--gamma",
        "0.6,0.9",
        "--n",
        "120",
        "--m",
        "300",
        "--s",
        "6",
        "--runs",
        "3",
        "--seed",
        "42",
        "--no-timing",
    ];
    let mut outputs = Vec::new();
    let mut failures = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_igpm"))
            .args(args)
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        if !status.success() {
            failures.push(format!("invocation {i} exited with {status}"));
        }
        outputs.push(std::fs::read(&path).unwrap_or_default());
    }
    if outputs[0] != outputs[1] {
        failures.push("CSV outputs differ".into());
    }
    if outputs[0].is_empty() {
        failures.push("empty CSV".into());
    }
    verdict(
        10,
        "bench output is byte-identical across invocations",
        failures,
        format!("{} bytes, 6 rows", outputs[0].len()),
    )
}

fn main() {
    let start = Instant::now();
    let mut verdicts: Vec<Verdict> = std::thread::scope(|s| {
        let jobs = vec![
            s.spawn(|| vec![criterion_7()]),
            s.spawn(|| {
                let (a, b) = criteria_5_and_6();
                vec![a, b]
            }),
            s.spawn(|| vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()]),
            s.spawn(|| vec![criterion_8(), criterion_9(), criterion_10()]),
        ];
        jobs.into_iter()
            .flat_map(|j| j.join().expect("criterion panicked"))
            .collect()
    });
    verdicts.sort_by_key(|v| v.id);
    let mut failed = 0;
    for v in &verdicts {
        println!(
            "criterion {:>2} {}: {} ({})",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.title,
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        verdicts.len() - failed,
        verdicts.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
