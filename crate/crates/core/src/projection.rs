//! Euclidean projection onto the ℓ1 ball `{z : ‖z‖₁ ≤ τ}`.
//!
//! Points outside the ball are reduced to a simplex projection of `|v|`,
//! followed by sign restoration. The simplex projection is an active-set
//! iteration: project the working vector onto the hyperplane `Σ wᵢ = τ`,
//! drop every coordinate that became nonpositive, and repeat in the smaller
//! space until no coordinate is negative. Each non-final step removes at
//! least one coordinate, so at most `n` steps are taken.
//!
//! The inexact variant evaluates the duality-gap ratio after every step,
//! using a feasible candidate built from the current hyperplane iterate and
//! the dual estimate `u = v − z`, and stops as soon as the ratio reaches `γ`.

use crate::error::{Error, Result};
use crate::gate::{should_terminate, SubproblemContext};
use crate::linalg::{DenseVector, Norm};

/// Working state of the active-set iteration, in the reduced space.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    /// Positions of the working coordinates in the full space.
    pub indices: Vec<usize>,
    /// Current nonnegative working vector over `indices`.
    pub y: Vec<f64>,
    /// Number of hyperplane steps taken so far.
    pub iteration: usize,
}

impl ActiveSet {
    fn full(v_abs: &[f64]) -> Self {
        ActiveSet {
            indices: (0..v_abs.len()).collect(),
            y: v_abs.to_vec(),
            iteration: 0,
        }
    }

    /// Restricts the working set to the strictly positive entries of `w`.
    fn shrink(&mut self, w: &[f64], keep: &[usize]) {
        self.indices = keep.iter().map(|&i| self.indices[i]).collect();
        self.y = keep.iter().map(|&i| w[i]).collect();
    }
}

/// Sign partition of a hyperplane iterate, as positions into it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub plus: Vec<usize>,
    pub zero: Vec<usize>,
    pub minus: Vec<usize>,
}

/// Duality-gap certificate of a projection candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// `p(z) = ½‖z − v‖²`.
    pub p_z: f64,
    /// `q(u)` at `u = v − z`.
    pub q_u: f64,
}

impl Certificate {
    pub fn gap(&self) -> f64 {
        self.p_z - self.q_u
    }
}

/// One inner step: working-set size before the step and the ratio observed
/// after it (`None` when not evaluated or not applicable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStep {
    pub active: usize,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// Feasible output point in the full space.
    pub z: DenseVector,
    pub inner_iterations: usize,
    /// True when `z` is the exact projection.
    pub exact: bool,
    pub ratio_final: Option<f64>,
    pub certificate: Certificate,
    pub steps: Vec<InnerStep>,
}

/// Projects `y` onto the hyperplane `Σ wᵢ = τ`.
pub fn hyperplane_step(y: &[f64], tau: f64) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::contract("hyperplane step on an empty working set"));
    }
    let offset = (y.iter().sum::<f64>() - tau) / y.len() as f64;
    Ok(y.iter().map(|v| v - offset).collect())
}

/// Splits positions of `w` by sign; zero means exactly zero.
pub fn partition(w: &[f64]) -> Partition {
    let mut p = Partition::default();
    for (i, &x) in w.iter().enumerate() {
        if x < 0.0 {
            p.minus.push(i);
        } else if x == 0.0 {
            p.zero.push(i);
        } else {
            p.plus.push(i);
        }
    }
    p
}

/// Scatters `reduced` (over `indices`) into a length-`n` vector, restoring
/// the signs of `v`.
pub fn embed(reduced: &[f64], indices: &[usize], v: &[f64], n: usize) -> Result<DenseVector> {
    if reduced.len() != indices.len() {
        return Err(Error::DimensionMismatch {
            expected: indices.len(),
            actual: reduced.len(),
        });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    let mut z = vec![0.0; n];
    for (&i, &r) in indices.iter().zip(reduced) {
        if i >= n {
            return Err(Error::contract(format!(
                "index {i} out of range for length {n}"
            )));
        }
        z[i] = sign(v[i]) * r;
    }
    Ok(DenseVector::from_kernel(z))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "radius must be positive, got {tau}"
        )))
    }
}

/// Euclidean projection of a nonnegative vector onto the simplex
/// `{w ≥ 0 : Σ wᵢ = τ}`.
pub fn project_simplex_exact(v_abs: &[f64], tau: f64) -> Result<DenseVector> {
    check_tau(tau)?;
    if v_abs.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::contract(
            "simplex projection input must be nonnegative",
        ));
    }
    let run = active_set(v_abs, tau, None, v_abs.len() + 1)?;
    let mut w = vec![0.0; v_abs.len()];
    for (&i, &x) in run.indices.iter().zip(&run.reduced) {
        w[i] = x;
    }
    Ok(DenseVector::from_kernel(w))
}

/// Exact projection onto the ℓ1 ball of radius `tau`.
pub fn project_l1_exact(v: &DenseVector, tau: f64) -> Result<ProjectionResult> {
    check_tau(tau)?;
    if v.norm(Norm::L1) <= tau {
        return Ok(interior(v));
    }
    let v_abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let run = active_set(&v_abs, tau, None, v.len() + 1)?;
    let z = embed(&run.reduced, &run.indices, v, v.len())?;
    Ok(ProjectionResult {
        certificate: certificate(v, &z, tau),
        z,
        inner_iterations: run.iterations,
        exact: true,
        ratio_final: Some(1.0),
        steps: run.steps,
    })
}

/// Inexact projection of `ctx.v()` with early termination at ratio `gamma`.
/// `gamma = 1` never stops early and returns the exact projection.
pub fn project_l1_inexact(ctx: &SubproblemContext, gamma: f64) -> Result<ProjectionResult> {
    project_l1_inexact_capped(ctx, gamma, ctx.dim() + 1)
}

/// As [`project_l1_inexact`], failing with an internal error if more than
/// `max_inner` hyperplane steps would be needed.
pub fn project_l1_inexact_capped(
    ctx: &SubproblemContext,
    gamma: f64,
    max_inner: usize,
) -> Result<ProjectionResult> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::contract(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let v = ctx.v();
    let tau = ctx.tau();
    if v.norm(Norm::L1) <= tau {
        return Ok(interior(v));
    }
    let v_abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let gate = Gate {
        p_x: ctx.trivial_value(),
        omega: ctx.omega(),
        gamma,
    };
    let run = active_set(&v_abs, tau, Some(&gate), max_inner)?;
    let z = embed(&run.reduced, &run.indices, v, v.len())?;
    let certificate = match run.early {
        Some(c) => c,
        None => certificate(v, &z, tau),
    };
    Ok(ProjectionResult {
        z,
        inner_iterations: run.iterations,
        exact: run.early.is_none(),
        ratio_final: if run.early.is_some() {
            run.steps.last().and_then(|s| s.ratio)
        } else {
            Some(1.0)
        },
        certificate,
        steps: run.steps,
    })
}

fn interior(v: &DenseVector) -> ProjectionResult {
    ProjectionResult {
        z: v.clone(),
        inner_iterations: 0,
        exact: true,
        ratio_final: Some(1.0),
        certificate: Certificate { p_z: 0.0, q_u: 0.0 },
        steps: Vec::new(),
    }
}

/// Certificate of a full-space feasible `z` with `u = v − z`.
fn certificate(v: &[f64], z: &[f64], tau: f64) -> Certificate {
    let mut p2 = 0.0;
    let mut uz = 0.0;
    let mut u_inf = 0.0f64;
    for (&vi, &zi) in v.iter().zip(z) {
        let ui = vi - zi;
        p2 += ui * ui;
        uz += ui * zi;
        u_inf = u_inf.max(ui.abs());
    }
    let p_z = 0.5 * p2;
    Certificate {
        p_z,
        q_u: p_z - gap(tau, u_inf, uz),
    }
}

/// `p(z) − q(v − z) = τ‖u‖∞ − ⟨z, u⟩`, nonnegative by Hölder when
/// `‖z‖₁ ≤ τ`. Written this way it avoids cancelling against `½‖v‖²`.
fn gap(tau: f64, u_inf: f64, uz: f64) -> f64 {
    tau * u_inf - uz
}

struct Gate {
    p_x: f64,
    omega: f64,
    gamma: f64,
}

struct Run {
    indices: Vec<usize>,
    reduced: Vec<f64>,
    iterations: usize,
    steps: Vec<InnerStep>,
    /// Certificate of the accepted candidate when the gate fired early.
    early: Option<Certificate>,
}

/// Coordinates outside the working set: their output is zero and their
/// dual estimate equals `|vᵢ|`.
#[derive(Default)]
struct Complement {
    sum_sq: f64,
    max_abs: f64,
}

fn active_set(v_abs: &[f64], tau: f64, gate: Option<&Gate>, max_inner: usize) -> Result<Run> {
    let n = v_abs.len();
    let mut state = ActiveSet::full(v_abs);
    let mut steps = Vec::new();
    let mut complement = Complement::default();
    let mut candidate = Vec::new();
    let allow_early = gate.is_some_and(|g| g.gamma < 1.0);

    loop {
        if state.iteration >= max_inner.min(n + 1) {
            return Err(Error::Internal(format!(
                "active-set projection exceeded {} steps (n = {n})",
                max_inner.min(n + 1)
            )));
        }
        let active = state.y.len();
        let w = hyperplane_step(&state.y, tau)?;
        state.iteration += 1;
        let part = partition(&w);
        let done = part.minus.is_empty();

        let mut ratio = None;
        if let Some(g) = gate {
            let base: Vec<f64> = state.indices.iter().map(|&i| v_abs[i]).collect();
            let cert = reduced_certificate(&base, &w, tau, &complement, &mut candidate);
            // A candidate worse than the trivial iterate never fires the gate.
            if cert.p_z <= g.p_x {
                ratio = crate::gate::gate_ratio(g.p_x, cert.p_z, cert.q_u, g.omega);
            }
            steps.push(InnerStep { active, ratio });
            if !done && allow_early && should_terminate(ratio, g.gamma) {
                return Ok(Run {
                    indices: state.indices,
                    reduced: candidate,
                    iterations: state.iteration,
                    steps,
                    early: Some(cert),
                });
            }
        } else {
            steps.push(InnerStep { active, ratio });
        }

        if done {
            // I₀ entries are exactly zero already.
            return Ok(Run {
                indices: state.indices,
                reduced: w,
                iterations: state.iteration,
                steps,
                early: None,
            });
        }
        if part.plus.is_empty() {
            return Err(Error::Internal(
                "hyperplane step left no positive coordinate".into(),
            ));
        }
        for &i in part.minus.iter().chain(&part.zero) {
            let a = v_abs[state.indices[i]];
            complement.sum_sq += a * a;
            complement.max_abs = complement.max_abs.max(a);
        }
        state.shrink(&w, &part.plus);
    }
}

/// Builds the feasible candidate from a hyperplane iterate `w` over the
/// working set (negatives clamped, then scaled onto the ball) into
/// `candidate`, and returns its certificate with `u = v − z`.
fn reduced_certificate(
    base: &[f64],
    w: &[f64],
    tau: f64,
    complement: &Complement,
    candidate: &mut Vec<f64>,
) -> Certificate {
    candidate.clear();
    candidate.extend(w.iter().map(|x| x.max(0.0)));
    let s: f64 = candidate.iter().sum();
    if s > tau {
        let scale = tau / s;
        candidate.iter_mut().for_each(|x| *x *= scale);
    }
    let mut p2 = complement.sum_sq;
    let mut uz = 0.0;
    let mut u_inf = complement.max_abs;
    for (&a, &c) in base.iter().zip(candidate.iter()) {
        let u = a - c;
        p2 += u * u;
        uz += u * c;
        u_inf = u_inf.max(u.abs());
    }
    let p_z = 0.5 * p2;
    Certificate {
        p_z,
        q_u: p_z - gap(tau, u_inf, uz),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{dual_value, primal_value};
    use crate::linalg::norm;

    fn l1_norm(z: &[f64]) -> f64 {
        norm(z, Norm::L1)
    }
    use proptest::prelude::*;

    fn dv(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn hyperplane_examples() {
        assert_eq!(hyperplane_step(&[3.0, 1.0], 2.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(hyperplane_step(&[2.0, 2.0], 2.0).unwrap(), vec![1.0, 1.0]);
        let w = hyperplane_step(&[0.4, 0.3], 1.0).unwrap();
        assert!(close(&w, &[0.55, 0.45], 1e-15));
        assert!(matches!(hyperplane_step(&[], 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn partition_examples() {
        let p = partition(&[2.0, 0.0]);
        assert_eq!((p.plus, p.zero, p.minus), (vec![0], vec![1], vec![]));
        let p = partition(&[1.0, 1.0]);
        assert_eq!((p.plus, p.zero, p.minus), (vec![0, 1], vec![], vec![]));
        let p = partition(&[1.5, -0.5]);
        assert_eq!((p.plus, p.zero, p.minus), (vec![0], vec![], vec![1]));
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(
            project_simplex_exact(&[3.0, 1.0], 2.0).unwrap().as_slice(),
            &[2.0, 0.0]
        );
        assert_eq!(
            project_simplex_exact(&[2.0, 2.0], 2.0).unwrap().as_slice(),
            &[1.0, 1.0]
        );
        assert_eq!(
            project_simplex_exact(&[5.0, 1.0, 1.0], 3.0)
                .unwrap()
                .as_slice(),
            &[3.0, 0.0, 0.0]
        );
        assert!(project_simplex_exact(&[1.0], 0.0).is_err());
        assert!(project_simplex_exact(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn l1_exact_examples() {
        let r = project_l1_exact(&dv(&[0.3, -0.2]), 1.0).unwrap();
        assert_eq!(r.z.as_slice(), &[0.3, -0.2]);
        assert_eq!(r.inner_iterations, 0);
        assert!(r.exact);
        assert_eq!(
            project_l1_exact(&dv(&[-3.0, 1.0]), 2.0)
                .unwrap()
                .z
                .as_slice(),
            &[-2.0, 0.0]
        );
        assert_eq!(
            project_l1_exact(&dv(&[3.0, 1.0]), 2.0)
                .unwrap()
                .z
                .as_slice(),
            &[2.0, 0.0]
        );
        assert!(project_l1_exact(&dv(&[3.0, 1.0]), -1.0).is_err());
    }

    #[test]
    fn embed_examples() {
        assert_eq!(
            embed(&[2.0], &[0], &[-3.0, 1.0], 2).unwrap().as_slice(),
            &[-2.0, 0.0]
        );
        assert_eq!(
            embed(&[1.0, 2.0], &[0, 1], &[-3.0, 1.0], 2)
                .unwrap()
                .as_slice(),
            &[-1.0, 2.0]
        );
        assert_eq!(
            embed(&[1.0, 1.0], &[0, 2], &[4.0, -9.0, 4.0], 3)
                .unwrap()
                .as_slice(),
            &[1.0, 0.0, 1.0]
        );
        assert!(matches!(
            embed(&[1.0], &[5], &[1.0, 1.0], 2),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn inexact_interior_point() {
        let ctx = SubproblemContext::for_point(dv(&[0.1, -0.2]), 1.0, 1e-3).unwrap();
        let r = project_l1_inexact(&ctx, 0.6).unwrap();
        assert_eq!(r.z.as_slice(), &[0.1, -0.2]);
        assert_eq!(r.ratio_final, Some(1.0));
        assert_eq!(r.inner_iterations, 0);
    }

    #[test]
    fn inexact_rejects_bad_gamma() {
        let ctx = SubproblemContext::for_point(dv(&[3.0, 1.0]), 1.0, 0.0).unwrap();
        assert!(project_l1_inexact(&ctx, 0.0).is_err());
        assert!(project_l1_inexact(&ctx, 1.5).is_err());
    }

    #[test]
    fn exact_certificate_has_zero_gap() {
        let v = dv(&[2.0, 0.0]);
        let r = project_l1_exact(&v, 1.0).unwrap();
        assert_eq!(r.z.as_slice(), &[1.0, 0.0]);
        assert_eq!(r.certificate.p_z, 0.5);
        assert_eq!(r.certificate.q_u, 0.5);
    }

    #[test]
    fn cap_is_enforced() {
        let v: Vec<f64> = (1..=20).rev().map(f64::from).collect();
        let ctx = SubproblemContext::for_point(dv(&v), 1.0, 0.0).unwrap();
        assert!(matches!(
            project_l1_inexact_capped(&ctx, 1.0, 1),
            Err(Error::Internal(_))
        ));
    }

    fn case() -> impl Strategy<Value = (Vec<f64>, f64)> {
        (2usize..40).prop_flat_map(|n| (prop::collection::vec(-10.0f64..10.0, n), 0.05f64..20.0))
    }

    proptest! {
        #[test]
        fn idempotent((v, tau) in case()) {
            let p = project_l1_exact(&dv(&v), tau).unwrap().z;
            let pp = project_l1_exact(&p, tau).unwrap().z;
            prop_assert!(close(&p, &pp, 1e-12 * (1.0 + tau)));
        }

        #[test]
        fn nonexpansive((a, tau) in case(), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|x| x + rng.random_range(-3.0..3.0)).collect();
            let pa = project_l1_exact(&dv(&a), tau).unwrap().z;
            let pb = project_l1_exact(&dv(&b), tau).unwrap().z;
            let d_out = crate::linalg::dist_sq(&pa, &pb).sqrt();
            let d_in = crate::linalg::dist_sq(&a, &b).sqrt();
            prop_assert!(d_out <= d_in + 1e-10);
        }

        #[test]
        fn sign_and_permutation_equivariant((v, tau) in case(), flips in any::<u64>(), rot in 0usize..40) {
            let n = v.len();
            let s: Vec<f64> = (0..n).map(|i| if flips >> (i % 64) & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let transformed: Vec<f64> = perm.iter().map(|&j| s[j] * v[j]).collect();
            let p = project_l1_exact(&dv(&v), tau).unwrap().z;
            let pt = project_l1_exact(&dv(&transformed), tau).unwrap().z;
            let expected: Vec<f64> = perm.iter().map(|&j| s[j] * p[j]).collect();
            prop_assert!(close(&pt, &expected, 1e-10 * (1.0 + tau)));
        }

        #[test]
        fn iteration_bound_and_shrinking((v, tau) in case()) {
            let r = project_l1_exact(&dv(&v), tau).unwrap();
            prop_assert!(r.inner_iterations <= v.len());
            prop_assert!(l1_norm(&r.z) <= tau * (1.0 + 1e-12));
            for pair in r.steps.windows(2) {
                prop_assert!(pair[1].active < pair[0].active);
            }
        }

        #[test]
        fn inexact_gamma_one_is_exact((v, tau) in case(), omega in 0.0f64..1e-2) {
            let ctx = SubproblemContext::for_point(dv(&v), tau, omega).unwrap();
            let inexact = project_l1_inexact(&ctx, 1.0).unwrap();
            let exact = project_l1_exact(&dv(&v), tau).unwrap();
            prop_assert!(close(&inexact.z, &exact.z, 1e-12));
            prop_assert_eq!(inexact.inner_iterations, exact.inner_iterations);
        }

        #[test]
        fn inexact_certificate_is_sound(
            (x, g) in (2usize..50).prop_flat_map(|n| (
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )),
            tau in 0.5f64..5.0,
            gamma in 0.1f64..0.99,
            omega in 0.0f64..1e-3,
        ) {
            let mut x = x;
            let s = l1_norm(&x);
            if s > tau {
                x.iter_mut().for_each(|e| *e *= tau / s);
            }
            let ctx = SubproblemContext::new(dv(&x), dv(&g), 1.0, tau, omega).unwrap();
            let r = project_l1_inexact(&ctx, gamma).unwrap();
            let exact = project_l1_exact(ctx.v(), tau).unwrap();
            prop_assert!(r.inner_iterations <= exact.inner_iterations);
            prop_assert!(l1_norm(&r.z) <= tau * (1.0 + 1e-12));
            for step in &r.steps {
                if let Some(ratio) = step.ratio {
                    prop_assert!((0.0..=1.0).contains(&ratio), "ratio {}", ratio);
                }
            }
            if !r.exact {
                let u: Vec<f64> = ctx.v().iter().zip(r.z.iter()).map(|(a, b)| a - b).collect();
                let p_z = primal_value(&ctx, &r.z).unwrap();
                let q_u = dual_value(&ctx, &u).unwrap();
                let p_x = ctx.trivial_value();
                let ratio = (p_x - p_z + omega) / (p_x - q_u + omega);
                prop_assert!(ratio >= gamma - 1e-10);
                prop_assert!((ratio - r.ratio_final.unwrap()).abs() <= 1e-10);
            }
        }
    }
}
