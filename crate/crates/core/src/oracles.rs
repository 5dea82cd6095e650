//! Reference implementations for cross-checking the production paths.
//!
//! Nothing here is called by the solvers. Each oracle uses a different
//! algorithm than the code it checks: sort-and-prefix-sum simplex
//! projection, central differences, cyclic Jacobi eigenvalues.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gate::SubproblemContext;
use crate::linalg::Matrix;
use crate::projection::project_l1_exact;

/// Tolerance used by [`gap_check`].
pub const GAP_TOLERANCE: f64 = 1e-8;

/// Feasible points sampled by the normal-cone test of [`gap_check`].
pub const NORMAL_CONE_SAMPLES: usize = 100;

/// Largest dimension [`dense_lambda_max`] will densify.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_abs_deviation: f64,
    pub location: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(max_abs_deviation: f64, location: Option<usize>, tolerance: f64) -> Self {
        OracleReport {
            max_abs_deviation,
            location,
            tolerance,
            pass: max_abs_deviation <= tolerance,
        }
    }

    /// Entrywise comparison of two equal-length slices.
    pub fn compare(a: &[f64], b: &[f64], tolerance: f64) -> Result<Self> {
        crate::error::check_len(a.len(), b.len())?;
        let mut worst = (0.0, None);
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let d = (x - y).abs();
            if d > worst.0 || d.is_nan() {
                worst = (d, Some(i));
            }
        }
        Ok(OracleReport::new(worst.0, worst.1, tolerance))
    }
}

/// Projection onto `{w ≥ 0, Σw ≤ τ}` by sorting. Returns the projection
/// and the threshold `ν` (zero when `v_abs` is already feasible).
pub fn simplex_projection_sorted(v_abs: &[f64], tau: f64) -> Result<(Vec<f64>, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::contract(format!(
            "radius must be positive, got {tau}"
        )));
    }
    if let Some(i) = v_abs.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::contract(format!(
            "entry {i} is negative or not finite"
        )));
    }
    if v_abs.iter().sum::<f64>() <= tau {
        return Ok((v_abs.to_vec(), 0.0));
    }
    let mut sorted = v_abs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut nu = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        prefix += x;
        let candidate = (prefix - tau) / (j + 1) as f64;
        if x - candidate > 0.0 {
            nu = candidate;
        } else {
            break;
        }
    }
    Ok((v_abs.iter().map(|&x| (x - nu).max(0.0)).collect(), nu))
}

/// ℓ1-ball projection built on [`simplex_projection_sorted`].
pub fn l1_projection_sorted(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let (w, _) = simplex_projection_sorted(&abs, tau)?;
    Ok(w.iter()
        .zip(v)
        .map(|(&w, &s)| if s < 0.0 { -w } else { w })
        .collect())
}

/// Central differences with `hᵢ = 1e−5·(1 + |xᵢ|)`.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + x[i].abs());
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Checks the exact projection of `ctx.v()` against its Moreau dual.
///
/// Three deviations are measured, each relative to its natural scale:
/// `‖v − z* − u*‖∞`, `|p(z*) − q(u*)| / max(1, p_x)`, and the worst
/// `(x − z*)ᵀu* / max(1, τ‖u*‖∞)` over sampled feasible `x` (random
/// interior points plus every vertex `±τeᵢ`). The report carries the
/// largest of them; `location` names the coordinate for the first kind.
pub fn gap_check(ctx: &SubproblemContext) -> Result<OracleReport> {
    let v = ctx.v().as_slice();
    let tau = ctx.tau();
    let n = v.len();
    let z = project_l1_exact(ctx.v(), tau)?.z.into_vec();
    let u: Vec<f64> = v.iter().zip(&z).map(|(a, b)| a - b).collect();

    let mut worst = (0.0f64, None);
    for i in 0..n {
        let d = (v[i] - (z[i] + u[i])).abs();
        if d > worst.0 {
            worst = (d, Some(i));
        }
    }

    let half_sq = |a: &[f64], b: &[f64]| -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
    };
    let zeros = vec![0.0; n];
    let u_inf = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let p = half_sq(&z, v);
    let q = -half_sq(&u, v) - tau * u_inf + half_sq(v, &zeros);
    let p_x = half_sq(ctx.x().as_slice(), v);
    let d = (p - q).abs() / p_x.max(1.0);
    if d > worst.0 || d.is_nan() {
        worst = (d, None);
    }

    let scale = (tau * u_inf).max(1.0);
    let cone = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&z)
            .zip(&u)
            .map(|((x, z), u)| (x - z) * u)
            .sum::<f64>()
            / scale
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ n as u64);
    let mut x = vec![0.0; n];
    for _ in 0..NORMAL_CONE_SAMPLES {
        for xi in x.iter_mut() {
            *xi = rng.random_range(-1.0..1.0);
        }
        let l1: f64 = x.iter().map(|t: &f64| t.abs()).sum();
        let r = tau * rng.random::<f64>() / l1.max(f64::MIN_POSITIVE);
        x.iter_mut().for_each(|t| *t *= r);
        worst.0 = worst.0.max(cone(&x));
    }
    for i in 0..n {
        for s in [tau, -tau] {
            x.fill(0.0);
            x[i] = s;
            worst.0 = worst.0.max(cone(&x));
        }
    }
    Ok(OracleReport::new(worst.0, worst.1, GAP_TOLERANCE))
}

/// Largest eigenvalue of `AᵀA` by cyclic Jacobi rotations on the dense Gram
/// matrix.
pub fn dense_lambda_max(a: &Matrix) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m > DENSE_LIMIT || n > DENSE_LIMIT {
        return Err(Error::contract(format!(
            "{m}x{n} exceeds the {DENSE_LIMIT}x{DENSE_LIMIT} dense oracle limit"
        )));
    }
    if n == 0 {
        return Err(Error::contract("matrix has no columns"));
    }
    let dense = a.to_dense();
    let mut g = vec![0.0; n * n];
    for r in 0..m {
        let row = dense.row(r);
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                g[i * n + j] += row[i] * row[j];
            }
        }
    }
    Ok(jacobi_eigenvalues(&mut g, n)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Eigenvalues of the symmetric `n × n` row-major matrix `a` (destroyed).
fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, DenseVector};
    use crate::objectives::{generate_instance, lipschitz_estimate, InstanceSpec, Objective};
    use rand_distr::StandardNormal;

    #[test]
    fn sorted_simplex_examples() {
        let (w, nu) = simplex_projection_sorted(&[3.0, 1.0], 2.0).unwrap();
        assert_eq!(w, vec![2.0, 0.0]);
        assert_eq!(nu, 1.0);
        assert_eq!(
            simplex_projection_sorted(&[2.0, 2.0], 2.0).unwrap().0,
            vec![1.0, 1.0]
        );
        assert_eq!(
            simplex_projection_sorted(&[1.0, 0.0, 0.0], 1.0).unwrap().0,
            vec![1.0, 0.0, 0.0]
        );
        assert!(simplex_projection_sorted(&[1.0], 0.0).is_err());
        assert!(simplex_projection_sorted(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn sorted_simplex_has_threshold_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..50);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
            let tau = rng.random_range(0.1..10.0);
            let (w, nu) = simplex_projection_sorted(&v, tau).unwrap();
            for (wi, vi) in w.iter().zip(&v) {
                assert!((wi - (vi - nu).max(0.0)).abs() <= 1e-15);
            }
            if v.iter().sum::<f64>() >= tau {
                assert!((w.iter().sum::<f64>() - tau).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn finite_difference_examples() {
        let g = finite_difference_gradient(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &[1.0, 2.0]);
        assert!((g[0] - 1.0).abs() <= 1e-8 && (g[1] - 2.0).abs() <= 1e-8);
        let g = finite_difference_gradient(|_| 7.0, &[1.0, -3.0, 0.0]);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn finite_difference_matches_least_squares_gradient() {
        let inst = generate_instance(&InstanceSpec::dense(40, 30, 5, 11)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
        let fd = finite_difference_gradient(|p| inst.value(p), &x);
        let g = inst.gradient(&x);
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let report = OracleReport::compare(&fd, &g, 1e-6 * scale).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn gap_check_examples() {
        let inside =
            SubproblemContext::for_point(DenseVector::new(vec![0.2, -0.3]).unwrap(), 1.0, 0.0)
                .unwrap();
        let r = gap_check(&inside).unwrap();
        assert!(r.pass && r.max_abs_deviation <= 1e-15, "{r:?}");

        let ctx = SubproblemContext::for_point(DenseVector::new(vec![2.0, 0.0]).unwrap(), 1.0, 0.0)
            .unwrap();
        let r = gap_check(&ctx).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn jacobi_examples() {
        let d = Matrix::from(DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap());
        assert!((dense_lambda_max(&d).unwrap() - 4.0).abs() <= 1e-12);
        let i = Matrix::from(DenseMatrix::identity(5));
        assert!((dense_lambda_max(&i).unwrap() - 1.0).abs() <= 1e-12);
        let big = Matrix::from(DenseMatrix::zeros(501, 2));
        assert!(matches!(dense_lambda_max(&big), Err(Error::Contract(_))));
    }

    #[test]
    fn jacobi_trace_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 12;
        let b: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = b[i * n + j] + b[j * n + i];
            }
        }
        let trace: f64 = (0..n).map(|i| s[i * n + i]).sum();
        let frob: f64 = s.iter().map(|x| x * x).sum();
        let eig = jacobi_eigenvalues(&mut s, n);
        assert!((eig.iter().sum::<f64>() - trace).abs() <= 1e-10);
        assert!((eig.iter().map(|x| x * x).sum::<f64>() - frob).abs() <= 1e-9 * frob);
    }

    #[test]
    fn jacobi_agrees_with_power_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let data: Vec<f64> = (0..30 * 20).map(|_| rng.sample(StandardNormal)).collect();
        let a = Matrix::from(DenseMatrix::new(30, 20, data).unwrap());
        let exact = dense_lambda_max(&a).unwrap();
        let est =
            lipschitz_estimate(&a, 1e-12, 100_000).unwrap() / crate::objectives::LIPSCHITZ_SAFETY;
        assert!((est - exact).abs() <= 1e-8 * exact, "{est} vs {exact}");
    }
}
