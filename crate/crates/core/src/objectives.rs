//! Least-squares objective `½‖Ax − b‖²`, its Lipschitz constant, and
//! sparse-recovery test instances.
//!
//! Instances are drawn from `ChaCha8Rng::seed_from_u64(seed)`; Gaussian
//! entries use `rand_distr::StandardNormal` (ziggurat). Draw order is fixed:
//! support positions of the signal, then signs, then the matrix row by row.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};
use crate::kv;
use crate::linalg::{
    self, dot, norm, read_matrix_market, read_vector, write_matrix_market, write_vector, CsrMatrix,
    DenseMatrix, DenseVector, Matrix, Norm,
};

/// A smooth objective the outer loops can minimize.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

/// How the ball radius is derived from the instance shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauPreset {
    /// `τ = n − s`.
    Paper,
    /// `τ = s`, putting the ±1 signal on the boundary of the ball.
    Tight,
}

impl TauPreset {
    pub fn radius(self, n: usize, s: usize) -> f64 {
        match self {
            TauPreset::Paper => (n - s) as f64,
            TauPreset::Tight => s as f64,
        }
    }
}

impl std::str::FromStr for TauPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(TauPreset::Paper),
            "tight" => Ok(TauPreset::Tight),
            other => Err(Error::parse(
                "tau-preset",
                format!("expected `paper` or `tight`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for TauPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TauPreset::Paper => "paper",
            TauPreset::Tight => "tight",
        })
    }
}

/// A least-squares problem over the ℓ1 ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: Matrix,
    pub b: DenseVector,
    pub tau: f64,
    /// Ground-truth signal for generated instances.
    pub x_true: Option<DenseVector>,
    pub sparsity: Option<usize>,
    pub seed: Option<u64>,
}

impl ProblemInstance {
    pub fn new(a: Matrix, b: DenseVector, tau: f64) -> Result<Self> {
        check_len(a.nrows(), b.len())?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::contract(format!(
                "radius must be positive, got {tau}"
            )));
        }
        Ok(ProblemInstance {
            a,
            b,
            tau,
            x_true: None,
            sparsity: None,
            seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.m()];
        self.a.matvec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(self.b.iter()) {
            *ri -= bi;
        }
        r
    }

    /// `½‖Ax − b‖²`.
    pub fn objective_value(&self, x: &DenseVector) -> Result<f64> {
        check_len(self.n(), x.len())?;
        Ok(self.value(x))
    }

    /// `Aᵀ(Ax − b)`.
    pub fn objective_gradient(&self, x: &DenseVector) -> Result<DenseVector> {
        check_len(self.n(), x.len())?;
        Ok(DenseVector::from_kernel(self.gradient(x)))
    }
}

impl Objective for ProblemInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        0.5 * dot(&r, &r)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let r = self.residual(x);
        let mut g = vec![0.0; self.n()];
        self.a.matvec_transpose_into(&r, &mut g);
        (0.5 * dot(&r, &r), g)
    }
}

/// Safety factor applied to the power-method eigenvalue so that a stepsize
/// derived from it stays below `1/L`.
pub const LIPSCHITZ_SAFETY: f64 = 1.01;

/// Power iteration on `x ↦ Aᵀ(Ax)` from the normalized all-ones vector.
/// Stops when the Rayleigh quotient changes by less than `tol` relative, or
/// after `max_iters`. Returns the quotient times [`LIPSCHITZ_SAFETY`].
pub fn lipschitz_estimate(a: &Matrix, tol: f64, max_iters: usize) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::contract("Lipschitz estimate of a zero matrix"));
    }
    let n = a.ncols();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; a.nrows()];
    let mut atax = vec![0.0; n];
    let mut previous: Option<f64> = None;
    let mut restarted = false;
    let mut rq = 0.0;
    for _ in 0..max_iters.max(1) {
        a.matvec_into(&x, &mut ax);
        a.matvec_transpose_into(&ax, &mut atax);
        rq = dot(&ax, &ax);
        let len = norm(&atax, Norm::L2);
        if len == 0.0 {
            if restarted {
                break;
            }
            // All-ones happens to lie in the null space; restart from a
            // ramp, which cannot be orthogonal to every row as well.
            restarted = true;
            let ramp: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let r = norm(&ramp, Norm::L2);
            x = ramp.into_iter().map(|v| v / r).collect();
            previous = None;
            continue;
        }
        for (xi, zi) in x.iter_mut().zip(&atax) {
            *xi = zi / len;
        }
        if let Some(p) = previous {
            if (rq - p).abs() < tol * rq {
                break;
            }
        }
        previous = Some(rq);
    }
    if rq <= 0.0 {
        return Err(Error::Internal(
            "power iteration produced a zero estimate".into(),
        ));
    }
    Ok(rq * LIPSCHITZ_SAFETY)
}

/// Parameters of a generated sparse-recovery instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub dense: bool,
    /// Fraction of stored entries for sparse matrices; `None` means
    /// `n / (1000 m)`.
    pub density: Option<f64>,
    pub tau: TauChoice,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauChoice {
    Preset(TauPreset),
    Fixed(f64),
}

impl InstanceSpec {
    pub fn dense(n: usize, m: usize, s: usize, seed: u64) -> Self {
        InstanceSpec {
            n,
            m,
            s,
            dense: true,
            density: None,
            tau: TauChoice::Preset(TauPreset::Tight),
            seed,
        }
    }

    pub fn effective_density(&self) -> f64 {
        self.density
            .unwrap_or(self.n as f64 / (1000.0 * self.m as f64))
    }

    pub fn radius(&self) -> f64 {
        match self.tau {
            TauChoice::Preset(p) => p.radius(self.n, self.s),
            TauChoice::Fixed(t) => t,
        }
    }
}

/// Draws an instance: a signal with `s` entries of ±1 at uniformly random
/// positions, a Gaussian measurement matrix, and `b = A x̄`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<ProblemInstance> {
    let InstanceSpec { n, m, s, .. } = *spec;
    if n == 0 || m == 0 {
        return Err(Error::contract("instance dimensions must be positive"));
    }
    if s == 0 || s > n {
        return Err(Error::contract(format!(
            "sparsity must lie in 1..={n}, got {s}"
        )));
    }
    let tau = spec.radius();
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::contract(format!(
            "radius {tau} is not positive (n = {n}, s = {s})"
        )));
    }
    let density = spec.effective_density();
    if !spec.dense && !(density > 0.0 && density <= 1.0) {
        return Err(Error::contract(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x_true = vec![0.0; n];
    let mut support = index::sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    for &i in &support {
        x_true[i] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }

    let a = if spec.dense {
        let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        Matrix::Dense(DenseMatrix::new(m, n, data)?)
    } else {
        let per_row = Binomial::new(n as u64, density)
            .map_err(|e| Error::contract(format!("density {density}: {e}")))?;
        let mut row_starts = Vec::with_capacity(m + 1);
        row_starts.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for _ in 0..m {
            let k = per_row.sample(&mut rng) as usize;
            let mut picked = index::sample(&mut rng, n, k).into_vec();
            picked.sort_unstable();
            for c in picked {
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_starts.push(cols.len());
        }
        Matrix::Sparse(CsrMatrix::new(m, n, row_starts, cols, vals)?)
    };

    let x_true = DenseVector::from_kernel(x_true);
    let b = a.matvec(&x_true)?;
    Ok(ProblemInstance {
        a,
        b,
        tau,
        x_true: Some(x_true),
        sparsity: Some(s),
        seed: Some(spec.seed),
    })
}

const MATRIX_FILE: &str = "A.mtx";
const RHS_FILE: &str = "b.txt";
const TRUTH_FILE: &str = "x_true.txt";
const META_FILE: &str = "meta.txt";

/// Writes `A.mtx`, `b.txt`, `x_true.txt` (when known) and `meta.txt` into
/// `dir`, creating it if needed.
pub fn write_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_market(&dir.join(MATRIX_FILE), &inst.a)?;
    write_vector(&dir.join(RHS_FILE), &inst.b)?;
    if let Some(x) = &inst.x_true {
        write_vector(&dir.join(TRUTH_FILE), x)?;
    }
    let mut meta = vec![
        ("n", inst.n().to_string()),
        ("m", inst.m().to_string()),
        ("tau", format!("{:?}", inst.tau)),
        ("dense", matches!(inst.a, Matrix::Dense(_)).to_string()),
    ];
    if let Some(s) = inst.sparsity {
        meta.push(("s", s.to_string()));
    }
    if let Some(seed) = inst.seed {
        meta.push(("seed", seed.to_string()));
    }
    let path = dir.join(META_FILE);
    std::fs::write(&path, kv::render(&meta)).map_err(|e| Error::io(&path, e))
}

/// Reads an instance written by [`write_instance`]. Dense instances come
/// back in dense storage.
pub fn read_instance(dir: &Path) -> Result<ProblemInstance> {
    let meta_path = dir.join(META_FILE);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let ctx = meta_path.display().to_string();
    let mut tau = None;
    let mut dense = false;
    let mut s = None;
    let mut seed = None;
    let mut dims = (None, None);
    for (k, v) in kv::parse(&text, &ctx)? {
        let bad = |_| Error::parse(&ctx, format!("bad value for `{k}`: `{v}`"));
        match k.as_str() {
            "n" => dims.0 = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "m" => dims.1 = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "tau" => tau = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "dense" => dense = v.parse::<bool>().map_err(|e| bad(e.to_string()))?,
            "s" => s = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "seed" => seed = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::parse(&ctx, format!("unknown key `{k}`"))),
        }
    }
    let tau = tau.ok_or_else(|| Error::parse(&ctx, "missing `tau`"))?;
    let csr = read_matrix_market(&dir.join(MATRIX_FILE))?;
    if let (Some(n), Some(m)) = dims {
        if (m, n) != (csr.nrows(), csr.ncols()) {
            return Err(Error::parse(&ctx, "shape disagrees with the matrix file"));
        }
    }
    let a = if dense {
        Matrix::Dense(csr.to_dense())
    } else {
        Matrix::Sparse(csr)
    };
    let b = read_vector(&dir.join(RHS_FILE))?;
    let mut inst = ProblemInstance::new(a, b, tau)?;
    let truth = dir.join(TRUTH_FILE);
    if truth.exists() {
        let x = read_vector(&truth)?;
        check_len(inst.n(), x.len())?;
        inst.x_true = Some(x);
    }
    inst.sparsity = s;
    inst.seed = seed;
    Ok(inst)
}

/// Loads a matrix (Matrix Market) and right-hand side (one value per line).
pub fn load_problem(matrix: &Path, rhs: &Path, tau: f64) -> Result<ProblemInstance> {
    let a = linalg::read_matrix_market(matrix)?;
    let b = linalg::read_vector(rhs)?;
    ProblemInstance::new(Matrix::Sparse(a), b, tau)
}
