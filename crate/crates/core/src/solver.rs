//! Outer loops.
//!
//! * Fixed stepsize: `x⁺ = z`, where `z` is the (in)exact projection of
//!   `x − βg`. Requires `β ≤ 1/L` for monotone descent.
//! * Line search: `d = z − x`, then the largest `α ∈ {α₀, θα₀, θ²α₀, …}`
//!   with `f(x + αd) ≤ f(x) + ηα gᵀd`, and `x⁺ = x + αd`.
//!
//! Both stop when the step `‖z − x‖` (∞-norm by default) drops below `ε`,
//! and halve the gate relaxation `ω` after every outer iteration.

use std::time::{Duration, Instant};

use crate::error::{check_len, Error, Result};
use crate::gate::{next_omega, within_ball, SubproblemContext};
use crate::linalg::{dist_sq, dot, DenseVector, Norm};
use crate::objectives::Objective;
use crate::projection::{project_l1_exact, project_l1_inexact_capped};

/// Backtracking trials before a direction is declared degenerate.
pub const MAX_BACKTRACKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Exact projection, fixed stepsize.
    Gpm1,
    /// Exact projection, Armijo line search.
    Gpm2,
    /// Inexact projection, fixed stepsize.
    Igpm1,
    /// Inexact projection, Armijo line search.
    Igpm2,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Gpm1, Variant::Gpm2, Variant::Igpm1, Variant::Igpm2];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gpm1 => "gpm1",
            Variant::Gpm2 => "gpm2",
            Variant::Igpm1 => "igpm1",
            Variant::Igpm2 => "igpm2",
        }
    }

    pub fn line_search(self) -> bool {
        matches!(self, Variant::Gpm2 | Variant::Igpm2)
    }

    pub fn inexact(self) -> bool {
        matches!(self, Variant::Igpm1 | Variant::Igpm2)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::parse("algo", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BbMode {
    #[default]
    Off,
    Bb1,
    Bb2,
}

impl std::str::FromStr for BbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(BbMode::Off),
            "bb1" => Ok(BbMode::Bb1),
            "bb2" => Ok(BbMode::Bb2),
            other => Err(Error::parse(
                "bb",
                format!("expected off, bb1 or bb2, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for BbMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BbMode::Off => "off",
            BbMode::Bb1 => "bb1",
            BbMode::Bb2 => "bb2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Gate threshold in (0, 1]; ignored (treated as 1) by exact variants.
    pub gamma: f64,
    pub omega0: f64,
    /// Fixed stepsize, or the base stepsize of the line-search variants.
    pub beta: f64,
    /// Armijo sufficient-decrease fraction.
    pub eta: f64,
    /// Backtracking shrink factor.
    pub theta: f64,
    /// First trial step of the line search.
    pub alpha0: f64,
    pub eps: f64,
    pub max_outer: usize,
    /// Inner-step cap per projection; `None` means `n + 1`.
    pub max_inner: Option<usize>,
    pub bb_mode: BbMode,
    pub beta_min: f64,
    pub beta_max: f64,
    pub stop_norm: Norm,
    /// Record `E(x_k; β)` at every iterate (one extra exact projection each).
    pub track_residual: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            variant: Variant::Igpm2,
            gamma: 0.8,
            omega0: 1e-3,
            beta: 0.01,
            eta: 0.01,
            theta: 0.7,
            alpha0: 1.0,
            eps: 1e-4,
            max_outer: 10_000,
            max_inner: None,
            bb_mode: BbMode::Off,
            beta_min: 1e-6,
            beta_max: 1e6,
            stop_norm: Norm::Inf,
            track_residual: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::contract(what.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(&format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.omega0 >= 0.0 && self.omega0.is_finite()) {
            return bad(&format!("omega0 must be nonnegative, got {}", self.omega0));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(&format!("beta must be positive, got {}", self.beta));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(&format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(&format!("theta must lie in (0, 1), got {}", self.theta));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return bad(&format!("alpha0 must lie in (0, 1], got {}", self.alpha0));
        }
        if !(self.eps > 0.0) {
            return bad(&format!("eps must be positive, got {}", self.eps));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        if self.bb_mode != BbMode::Off {
            if !self.variant.line_search() {
                return bad("BB stepsizes require a line-search variant");
            }
            if !(self.beta_min > 0.0 && self.beta_min <= self.beta && self.beta <= self.beta_max) {
                return bad("BB bounds must satisfy 0 < beta_min <= beta <= beta_max");
            }
        }
        Ok(())
    }

    fn effective_gamma(&self) -> f64 {
        if self.variant.inexact() {
            self.gamma
        } else {
            1.0
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `f(x_k)`.
    pub f: f64,
    /// `‖z_k − x_k‖` in the configured stopping norm.
    pub resid: f64,
    pub inner: usize,
    pub backtracks: usize,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    /// Gate ratio of the accepted projection.
    pub ratio: Option<f64>,
    /// `Δp(z_k; x_k)`.
    pub delta_p: f64,
    /// `g_kᵀ d_k`.
    pub slope: f64,
    /// `‖d_k‖₂²`.
    pub step_sq: f64,
    /// `E(x_k; β)` when residual tracking is on.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub wall_time: Duration,
}

impl SolverTrace {
    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_inner(&self) -> usize {
        self.records.iter().map(|r| r.inner).sum()
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    /// Tracked residuals `E(x_0), …, E(x_{k−1})`, if tracking was on.
    pub fn residuals(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.residual).collect()
    }

    /// Running means `(1/k) Σ_{t<k} E(x_t; β)` for `k = 1, 2, …`.
    pub fn ergodic_prefix_averages(&self) -> Option<Vec<f64>> {
        let e = self.residuals()?;
        let mut sum = 0.0;
        Some(
            e.iter()
                .enumerate()
                .map(|(i, v)| {
                    sum += v;
                    sum / (i + 1) as f64
                })
                .collect(),
        )
    }

    /// CSV with header `k,f,resid_inf,inner,backtracks,alpha,beta,omega,ratio`.
    pub fn to_csv(&self) -> String {
        use crate::report::fmt_g;
        let mut out = String::from("k,f,resid_inf,inner,backtracks,alpha,beta,omega,ratio\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.k,
                fmt_g(r.f),
                fmt_g(r.resid),
                r.inner,
                r.backtracks,
                fmt_g(r.alpha),
                fmt_g(r.beta),
                fmt_g(r.omega),
                r.ratio.map_or_else(|| "na".to_string(), fmt_g),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: DenseVector,
    pub f: f64,
    pub converged: bool,
    /// `E(x; β)` at the returned point, with the last stepsize used.
    pub final_residual: f64,
    pub trace: SolverTrace,
}

/// Fixed-stepsize loop (`gpm1` / `igpm1`).
pub fn solve_igpm<O: Objective>(
    obj: &O,
    tau: f64,
    x0: &DenseVector,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    if cfg.variant.line_search() {
        return Err(Error::contract(format!(
            "{} is a line-search variant",
            cfg.variant
        )));
    }
    run(obj, tau, x0, cfg)
}

/// Armijo line-search loop (`gpm2` / `igpm2`).
pub fn solve_igpm_ls<O: Objective>(
    obj: &O,
    tau: f64,
    x0: &DenseVector,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    if !cfg.variant.line_search() {
        return Err(Error::contract(format!(
            "{} is a fixed-stepsize variant",
            cfg.variant
        )));
    }
    run(obj, tau, x0, cfg)
}

/// Dispatches on `cfg.variant`.
pub fn solve<O: Objective>(
    obj: &O,
    tau: f64,
    x0: &DenseVector,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    run(obj, tau, x0, cfg)
}

fn run<O: Objective>(
    obj: &O,
    tau: f64,
    x0: &DenseVector,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    check_len(obj.dim(), x0.len())?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::contract(format!(
            "radius must be positive, got {tau}"
        )));
    }
    if !within_ball(x0, tau) {
        return Err(Error::contract("initial point lies outside the ball"));
    }
    let n = x0.len();
    let gamma = cfg.effective_gamma();
    let max_inner = cfg.max_inner.unwrap_or(n + 1);

    let mut x = x0.clone();
    let (mut f, g0) = obj.value_and_gradient(&x);
    let mut g = DenseVector::from_kernel(g0);
    let mut omega = cfg.omega0;
    let mut beta = cfg.beta;
    let mut previous: Option<(DenseVector, DenseVector)> = None;
    let mut records = Vec::new();
    let mut converged = false;
    let mut best: Option<(f64, DenseVector, DenseVector, f64)> = None;

    for k in 0..cfg.max_outer {
        if cfg.bb_mode != BbMode::Off {
            if let Some((xp, gp)) = &previous {
                let s = x.sub(xp)?;
                let y = g.sub(gp)?;
                beta = bb_stepsize(&s, &y, cfg.bb_mode, (cfg.beta_min, cfg.beta_max));
            }
        }
        let ctx = SubproblemContext::new(x.clone(), g.clone(), beta, tau, omega)?;
        let proj = project_l1_inexact_capped(&ctx, gamma, max_inner)?;
        let d = proj.z.sub(&x)?;
        let resid = d.norm(cfg.stop_norm);
        let slope = dot(&g, &d);
        let step_sq = dot(&d, &d);
        let delta_p = ctx.trivial_value() - 0.5 * dist_sq(&proj.z, ctx.v());
        let residual = if cfg.track_residual {
            Some(optimality_residual(&x, &g, beta, tau)?)
        } else {
            None
        };

        let (x_next, alpha, backtracks) = if cfg.variant.line_search() {
            armijo(obj, &x, f, &d, slope, cfg)?
        } else {
            (proj.z, 1.0, 0)
        };
        let (f_next, g_next) = obj.value_and_gradient(&x_next);

        records.push(IterationRecord {
            k,
            f,
            resid,
            inner: proj.inner_iterations,
            backtracks,
            alpha,
            beta,
            omega,
            ratio: proj.ratio_final,
            delta_p,
            slope,
            step_sq,
            residual,
        });

        omega = next_omega(omega);
        let g_next = DenseVector::from_kernel(g_next);
        previous = Some((
            std::mem::replace(&mut x, x_next),
            std::mem::replace(&mut g, g_next),
        ));
        f = f_next;
        if best.as_ref().is_none_or(|b| f < b.0) {
            best = Some((f, x.clone(), g.clone(), beta));
        }
        if resid <= cfg.eps {
            converged = true;
            break;
        }
    }

    let (f_out, x_out, g_out, beta_out) = if converged {
        (f, x, g, beta)
    } else {
        best.unwrap_or((f, x, g, beta))
    };
    let final_residual = optimality_residual(&x_out, &g_out, beta_out, tau)?;
    Ok(SolveOutcome {
        x: x_out,
        f: f_out,
        converged,
        final_residual,
        trace: SolverTrace {
            records,
            wall_time: start.elapsed(),
        },
    })
}

/// Backtracks from `α₀` by `θ` until the Armijo condition holds.
fn armijo<O: Objective>(
    obj: &O,
    x: &DenseVector,
    f: f64,
    d: &DenseVector,
    slope: f64,
    cfg: &SolverConfig,
) -> Result<(DenseVector, f64, usize)> {
    let mut alpha = cfg.alpha0;
    for backtracks in 0..=MAX_BACKTRACKS {
        let trial = x.add_scaled(alpha, d)?;
        if obj.value(&trial) <= f + cfg.eta * alpha * slope {
            return Ok((trial, alpha, backtracks));
        }
        alpha *= cfg.theta;
    }
    Err(Error::DegenerateDirection {
        trials: MAX_BACKTRACKS + 1,
        slope,
    })
}

/// Barzilai–Borwein stepsize from `s = x_k − x_{k−1}` and
/// `y = g_k − g_{k−1}`, clamped into `bounds`. Nonpositive curvature
/// (`sᵀy ≤ 0`) yields the upper bound.
pub fn bb_stepsize(s: &[f64], y: &[f64], mode: BbMode, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    let sy = dot(s, y);
    if sy <= 0.0 {
        return hi;
    }
    let raw = match mode {
        BbMode::Bb1 | BbMode::Off => dot(s, s) / sy,
        BbMode::Bb2 => sy / dot(y, y),
    };
    raw.clamp(lo, hi)
}

/// `E(x; β) = ‖x − P(x − βg)‖²` with the exact projection.
pub fn optimality_residual(x: &[f64], g: &[f64], beta: f64, tau: f64) -> Result<f64> {
    check_len(x.len(), g.len())?;
    if !within_ball(x, tau) {
        return Err(Error::contract(
            "optimality residual at an infeasible point",
        ));
    }
    let v = DenseVector::from_kernel(x.iter().zip(g).map(|(xi, gi)| xi - beta * gi).collect());
    let p = project_l1_exact(&v, tau)?;
    Ok(dist_sq(x, &p.z))
}

/// Arithmetic mean of a nonempty residual sequence.
pub fn ergodic_average(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::contract("ergodic average of an empty sequence"));
    }
    Ok(residuals.iter().sum::<f64>() / residuals.len() as f64)
}

/// Right-hand side of the fixed-stepsize ergodic bound,
/// `(2/γ)(β(f(x₀) − f_low) + (1 − γ)ω̂) / k`.
pub fn ergodic_bound_fixed(
    gamma: f64,
    beta: f64,
    f0: f64,
    f_low: f64,
    omega_sum: f64,
    k: usize,
) -> f64 {
    (2.0 / gamma) * (beta * (f0 - f_low) + (1.0 - gamma) * omega_sum) / k as f64
}

/// Right-hand side of the line-search ergodic bound,
/// `(2(1 − γ)ω̂/γ + 2β²L(f(x₀) − f_low)/(η(1 − η)θγ)) / k`.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_bound_line_search(
    gamma: f64,
    beta: f64,
    lipschitz: f64,
    eta: f64,
    theta: f64,
    f0: f64,
    f_low: f64,
    omega_sum: f64,
    k: usize,
) -> f64 {
    (2.0 * (1.0 - gamma) / gamma * omega_sum
        + 2.0 * beta * beta * lipschitz / (eta * (1.0 - eta) * theta * gamma) * (f0 - f_low))
        / k as f64
}

/// Lower bound `θ(1 − η)/(βL)` on every accepted Armijo step.
pub fn armijo_step_floor(theta: f64, eta: f64, beta: f64, lipschitz: f64) -> f64 {
    theta * (1.0 - eta) / (beta * lipschitz)
}
