//! Rounding a nearly equal-norm Parseval frame to an exact one.
//!
//! The pipeline normalizes and perturbs the input to a generic frame `G`,
//! puts `G` in radial isotropic position for `c = (d/n, ..., d/n)`, splits
//! the transformer `A = U M V^T`, and rescales the rotated blocks
//! `V^T G_i` by `M` to unit direction. Rotating back by `V` gives the output.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FrameError, Result};
use crate::frame::{dist_squared, MatrixFrame, DEFAULT_TOL};
use crate::quiver::{is_equal_norm_pmf, nearness, NearnessReport};
use crate::solver::{minimize, SolveStatus, SolverConfig};
use crate::weights::FrameDatum;

/// Inputs at or above this nearness are rejected.
pub const MAX_EPSILON: f64 = 0.3;

/// Prefix-sum dominance of `v` over `u`, coordinates taken in the given
/// order, with equal totals. All comparisons allow slack `tol`.
pub fn majorizes(v: &[f64], u: &[f64], tol: f64) -> bool {
    if v.len() != u.len() {
        return false;
    }
    let (mut pv, mut pu) = (0.0, 0.0);
    for (a, b) in v.iter().zip(u) {
        pv += a;
        pu += b;
        if pv < pu - tol {
            return false;
        }
    }
    (pv - pu).abs() <= tol
}

/// `T(v, u) = sum_l l (u_l - v_l)` with `l` counted from 1; equals the sum
/// of the prefix sums of `v - u` when the totals agree.
pub fn majorization_transport(v: &[f64], u: &[f64]) -> Result<f64> {
    let scale = 1.0 + v.iter().chain(u).map(|x| x.abs()).sum::<f64>();
    if !majorizes(v, u, 1e-12 * scale) {
        return Err(FrameError::Precondition("first vector does not majorize the second".into()));
    }
    Ok(v.iter().zip(u).enumerate().map(|(l, (a, b))| (l + 1) as f64 * (b - a)).sum())
}

/// Row sums of squares.
fn row_energy(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|r| r.norm_squared()).collect()
}

fn max_block_norm(h: &[DMatrix<f64>]) -> f64 {
    h.iter().map(|b| b.norm()).fold(0.0, f64::max)
}

/// `sqrt(d/n) X_i / ||X_i||_F + H_i`, with `H = 0` when that is already
/// generic and otherwise seeded uniform entries in `[-delta, delta]`,
/// `delta` halved on every retry until the frame is generic,
/// `||H_i||_F <= eps / (2n)` and `gamma = max_i (n/d)(||H_i||^2 + 2||H_i||)`
/// is at most `min(1, eps)`. Returns the frame and `gamma`.
pub fn perturb_to_generic(frame: &MatrixFrame, epsilon: f64, rng_seed: u64) -> Result<(MatrixFrame, f64)> {
    perturb_with(frame, epsilon, rng_seed, DEFAULT_TOL, 64)
}

fn perturb_with(
    frame: &MatrixFrame,
    epsilon: f64,
    rng_seed: u64,
    generic_tol: f64,
    max_attempts: usize,
) -> Result<(MatrixFrame, f64)> {
    let (d, n) = (frame.dim(), frame.len());
    if n <= d {
        return Err(FrameError::TooFewBlocks { n, d });
    }
    if !(epsilon > 0.0 && epsilon < MAX_EPSILON) {
        return Err(FrameError::Precondition(format!("need 0 < eps < {MAX_EPSILON}, got {epsilon}")));
    }
    let norms = frame.block_norms_sq();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(FrameError::ZeroBlock(i));
    }
    let target = (d as f64 / n as f64).sqrt();
    let base = frame.scale_blocks(&norms.iter().map(|v| target / v.sqrt()).collect::<Vec<_>>())?;
    if base.is_generic(generic_tol)? {
        return Ok((base, 0.0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let h_cap = epsilon / (2.0 * n as f64);
    let gamma_cap = epsilon.min(1.0);
    let mut shrink = 1.0;
    let mut last = String::new();
    for _ in 0..max_attempts {
        let h: Vec<DMatrix<f64>> = base
            .blocks()
            .iter()
            .map(|x| {
                let delta = shrink * h_cap / ((d * x.ncols()) as f64).sqrt();
                DMatrix::from_fn(d, x.ncols(), |_, _| rng.random_range(-delta..=delta))
            })
            .collect();
        shrink *= 0.5;
        let h_max = max_block_norm(&h);
        let gamma = n as f64 / d as f64 * (h_max * h_max + 2.0 * h_max);
        if h_max > h_cap || gamma > gamma_cap {
            last = format!("||H|| = {h_max:e}, gamma = {gamma:e}");
            continue;
        }
        let g = MatrixFrame::new(base.blocks().iter().zip(&h).map(|(x, hi)| x + hi).collect())?;
        if g.is_generic(generic_tol)? {
            return Ok((g, gamma));
        }
        last = "perturbed frame is not generic".into();
    }
    Err(FrameError::RetryBudget { attempts: max_attempts, detail: last })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaulsenConfig {
    pub solver: SolverConfig,
    /// Lower bound on the `eps` used for perturbation and the certificate;
    /// an exact equal-norm Parseval input measures `eps = 0`.
    pub epsilon_floor: f64,
    pub generic_tol: f64,
    pub max_attempts: usize,
}

impl Default for PaulsenConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), epsilon_floor: 1e-6, generic_tol: DEFAULT_TOL, max_attempts: 64 }
    }
}

impl PaulsenConfig {
    /// Tolerance of the equal-norm Parseval check on the output.
    pub fn output_tol(&self, dim: usize) -> f64 {
        10.0 * self.solver.effective_grad_tol(dim)
    }
}

#[derive(Debug, Clone)]
pub struct PaulsenReport {
    pub nearness: NearnessReport,
    /// Measured nearness of the input, raised to the configured floor.
    pub input_epsilon: f64,
    pub gamma: f64,
    pub perturbed: MatrixFrame,
    pub perturbed_epsilon: f64,
    pub transformer: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Singular values of the transformer, weakly decreasing.
    pub m: DVector<f64>,
    pub v: DMatrix<f64>,
    pub rotated: MatrixFrame,
    pub helper: MatrixFrame,
    pub rotated_output: MatrixFrame,
    pub output: MatrixFrame,
    pub solver_status: SolveStatus,
    pub solver_iterations: usize,
    pub solver_grad_norm: f64,
    pub dist_input_output: f64,
    pub bound: f64,
    pub dist_input_perturbed: f64,
    pub perturbation_bound: f64,
    pub dist_rotated_output: f64,
    pub rotated_bound: f64,
    pub dist_rotated_helper: f64,
    pub dist_helper_output: f64,
    /// `a^i` (row energies of the helper block) majorizes `b^i` (row
    /// energies of the rotated block) for every `i`.
    pub majorization_holds: bool,
    pub output_is_equal_norm_pmf: bool,
    pub output_tol: f64,
    pub certified: bool,
}

impl PaulsenReport {
    /// `dist^2(F, W) / (eps d^2)`.
    pub fn ratio(&self) -> f64 {
        let d = self.output.dim() as f64;
        self.dist_input_output / (self.input_epsilon * d * d)
    }
}

/// SVD with singular values sorted descending and each right singular
/// vector's largest-magnitude entry made positive (flipping the matching
/// left vector with it).
pub fn ordered_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let svd = a.clone().svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(FrameError::Domain("SVD did not return singular vectors".into()));
    };
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let v = vt.transpose();
    let mut uu = DMatrix::zeros(u.nrows(), k);
    let mut vv = DMatrix::zeros(v.nrows(), k);
    let mut m = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let vcol = v.column(src);
        let pivot = vcol.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vv.set_column(dst, &(vcol * sign));
        uu.set_column(dst, &(u.column(src) * sign));
        m[dst] = svd.singular_values[src];
    }
    Ok((uu, m, vv))
}

/// Round a nearly equal-norm Parseval frame to an equal-norm Parseval frame.
pub fn paulsen_round(frame: &MatrixFrame, config: &PaulsenConfig, rng_seed: u64) -> Result<PaulsenReport> {
    let (d, n) = (frame.dim(), frame.len());
    if n <= d {
        return Err(FrameError::TooFewBlocks { n, d });
    }
    let near = nearness(frame);
    if !(near.epsilon < MAX_EPSILON) {
        return Err(FrameError::Precondition(format!(
            "input is {:.6}-nearly equal-norm Parseval; need eps < {MAX_EPSILON}",
            near.epsilon
        )));
    }
    let epsilon = near.epsilon.max(config.epsilon_floor);
    let (g, gamma) = perturb_with(frame, epsilon, rng_seed, config.generic_tol, config.max_attempts)?;

    let datum = FrameDatum::uniform(g.clone())?;
    let solve = minimize(&datum, &config.solver)?;
    if solve.status != SolveStatus::Converged {
        return Err(FrameError::NotConverged(format!(
            "radial isotropy solve ended with {} after {} iterations (gradient norm {:e})",
            solve.status, solve.iterations, solve.grad_norm
        )));
    }
    let a = solve.transformer.clone();
    let (u, m, v) = ordered_svd(&a)?;
    let mm = DMatrix::from_diagonal(&m);
    let vt = v.transpose();
    let rotated = g.transform(&vt)?;

    let scale = (d as f64 / n as f64).sqrt();
    let mut helper = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut majorization_holds = true;
    for y in rotated.blocks() {
        let my = &mm * y;
        let dir = &my / my.norm();
        let h = &dir * y.norm();
        let a_i = row_energy(&h);
        let b_i = row_energy(y);
        majorization_holds &= majorizes(&a_i, &b_i, 1e-12 * y.norm_squared().max(1.0));
        helper.push(h);
        z.push(dir * scale);
    }
    let helper = MatrixFrame::new(helper)?;
    let rotated_output = MatrixFrame::new(z)?;
    let output = rotated_output.transform(&v)?;

    let dist_input_output = dist_squared(frame, &output)?;
    let dd = (d * d) as f64;
    let bound = 26.0 * epsilon * dd;
    let output_tol = config.output_tol(d);
    let output_is_equal_norm_pmf = is_equal_norm_pmf(&output, output_tol);
    Ok(PaulsenReport {
        nearness: near,
        input_epsilon: epsilon,
        gamma,
        perturbed_epsilon: nearness(&g).epsilon,
        dist_input_perturbed: dist_squared(frame, &g)?,
        perturbation_bound: epsilon * d as f64,
        dist_rotated_output: dist_squared(&rotated, &rotated_output)?,
        rotated_bound: 8.0 * epsilon * dd + 4.0 * gamma * dd,
        dist_rotated_helper: dist_squared(&rotated, &helper)?,
        dist_helper_output: dist_squared(&helper, &rotated_output)?,
        perturbed: g,
        transformer: a,
        u,
        m,
        v,
        rotated,
        helper,
        rotated_output,
        output,
        solver_status: solve.status,
        solver_iterations: solve.iterations,
        solver_grad_norm: solve.grad_norm,
        dist_input_output,
        bound,
        majorization_holds,
        output_is_equal_norm_pmf,
        output_tol,
        certified: dist_input_output <= bound && output_is_equal_norm_pmf,
    })
}
