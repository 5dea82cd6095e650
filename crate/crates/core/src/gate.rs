//! Primal and dual values of the projection subproblem and the progress ratio
//! that decides when an inner projection solve may stop early.
//!
//! At an outer iterate `x` with gradient `g` and stepsize `β`, the subproblem
//! projects `v = x − βg` onto the ℓ1 ball of radius `τ`:
//!
//! ```text
//! p(z) = ½‖z − v‖²                         (z feasible)
//! q(u) = −½‖u − v‖² − τ‖u‖∞ + ½‖v‖²
//! ratio = (p(x) − p(z) + ω) / (p(x) − q(u) + ω)
//! ```
//!
//! Weak duality gives `q(u) ≤ p(z)`, so the ratio lies in `[0, 1]` whenever
//! `z` is no worse than `x`, and equals 1 at an optimal primal-dual pair.

use crate::error::{check_len, Error, Result};
use crate::linalg::{dist_sq, norm, DenseVector, Norm};

/// Relative slack on `‖z‖₁ ≤ τ` for points produced in floating point.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Denominators below this, with no relaxation, mean the outer iterate
/// already solves its subproblem.
const TINY_DENOMINATOR: f64 = 1e-300;

/// Ratios this close outside `[0, 1]` are rounding noise and get clamped.
const CLAMP_SLACK: f64 = 1e-9;

pub(crate) fn within_ball(z: &[f64], tau: f64) -> bool {
    norm(z, Norm::L1) <= tau * (1.0 + FEASIBILITY_SLACK)
}

/// One outer iteration's projection subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemContext {
    x: DenseVector,
    g: DenseVector,
    beta: f64,
    v: DenseVector,
    tau: f64,
    omega: f64,
}

impl SubproblemContext {
    pub fn new(x: DenseVector, g: DenseVector, beta: f64, tau: f64, omega: f64) -> Result<Self> {
        check_len(x.len(), g.len())?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::contract(format!(
                "stepsize must be positive, got {beta}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::contract(format!(
                "radius must be positive, got {tau}"
            )));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::contract(format!(
                "relaxation must be nonnegative, got {omega}"
            )));
        }
        if !within_ball(&x, tau) {
            return Err(Error::contract(format!(
                "iterate has ‖x‖₁ = {} outside the ball of radius {tau}",
                x.norm(Norm::L1)
            )));
        }
        let v = x.add_scaled(-beta, &g)?;
        Ok(SubproblemContext {
            x,
            g,
            beta,
            v,
            tau,
            omega,
        })
    }

    /// Context whose point to project is exactly `v`: the iterate is the
    /// origin, `β = 1` and `g = −v`.
    pub fn for_point(v: DenseVector, tau: f64, omega: f64) -> Result<Self> {
        let g = DenseVector::from_kernel(v.iter().map(|x| -x).collect());
        SubproblemContext::new(DenseVector::zeros(v.len()), g, 1.0, tau, omega)
    }

    pub fn x(&self) -> &DenseVector {
        &self.x
    }

    pub fn g(&self) -> &DenseVector {
        &self.g
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The point being projected, `x − βg`.
    pub fn v(&self) -> &DenseVector {
        &self.v
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `p(x; x)`, the subproblem value of the trivial iterate.
    pub fn trivial_value(&self) -> f64 {
        0.5 * dist_sq(&self.x, &self.v)
    }
}

/// `p(z; x) = ½‖z − v‖²` for feasible `z`.
pub fn primal_value(ctx: &SubproblemContext, z: &[f64]) -> Result<f64> {
    check_len(ctx.dim(), z.len())?;
    if !within_ball(z, ctx.tau) {
        return Err(Error::contract(format!(
            "candidate has ‖z‖₁ = {} outside the ball of radius {}",
            norm(z, Norm::L1),
            ctx.tau
        )));
    }
    Ok(0.5 * dist_sq(z, &ctx.v))
}

/// `Δp(z; x) = p(x; x) − p(z; x)`. Negative when `z` is worse than `x`.
pub fn delta_p(ctx: &SubproblemContext, z: &[f64]) -> Result<f64> {
    Ok(ctx.trivial_value() - primal_value(ctx, z)?)
}

/// `q(u; x) = −½‖u − v‖² − τ‖u‖∞ + ½‖v‖²`.
pub fn dual_value(ctx: &SubproblemContext, u: &[f64]) -> Result<f64> {
    check_len(ctx.dim(), u.len())?;
    let half_v_sq = 0.5 * ctx.v.iter().map(|x| x * x).sum::<f64>();
    Ok(-0.5 * dist_sq(u, &ctx.v) - ctx.tau * norm(u, Norm::Inf) + half_v_sq)
}

/// The progress ratio, or `None` when it is not applicable: the candidate
/// is worse than the trivial iterate, or the gap is numerically zero with no
/// relaxation (the trivial iterate is already optimal).
pub fn gate_ratio(p_x: f64, p_z: f64, q_u: f64, omega: f64) -> Option<f64> {
    let num = p_x - p_z + omega;
    let den = p_x - q_u + omega;
    if num < 0.0 {
        return None;
    }
    if omega == 0.0 && den < TINY_DENOMINATOR {
        return None;
    }
    let r = num / den;
    if r > 1.0 && r <= 1.0 + CLAMP_SLACK {
        Some(1.0)
    } else {
        Some(r)
    }
}

/// True iff the ratio is applicable and reaches `gamma`.
pub fn should_terminate(ratio: Option<f64>, gamma: f64) -> bool {
    debug_assert!(gamma > 0.0 && gamma <= 1.0);
    ratio.is_some_and(|r| r >= gamma)
}

/// Halves the relaxation; the schedule sums to `2ω₀`.
pub fn next_omega(omega: f64) -> f64 {
    debug_assert!(omega >= 0.0);
    omega / 2.0
}

/// Outcome of one evaluation of the termination test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateDecision {
    pub ratio: Option<f64>,
    pub terminate: bool,
    pub p_x: f64,
    pub p_z: f64,
    pub q_u: f64,
}

impl GateDecision {
    pub fn evaluate(p_x: f64, p_z: f64, q_u: f64, omega: f64, gamma: f64) -> Self {
        let ratio = gate_ratio(p_x, p_z, q_u, omega);
        GateDecision {
            ratio,
            terminate: should_terminate(ratio, gamma),
            p_x,
            p_z,
            q_u,
        }
    }
}
