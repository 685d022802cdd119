//! Gradient descent on `Phi(t) - <t, c>` and extraction of the transformer
//! `Q^{-1/2}(t*)` that puts a weighted frame in radial isotropic position.
//!
//! Iterates are kept in the gauge `<t, c> = 0`; since `sum c_i = d` the
//! objective is invariant under `t -> t + s 1`, so recentering never changes
//! its value. Line-search decrements are computed directly as
//! `log det(I + sum_i expm1(dt_i) e^{t_i} Q^{-1/2} X_i X_i^T Q^{-1/2}) - <dt, c>`,
//! which stays accurate when the decrement is far below the rounding error
//! of the objective itself.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{FrameError, Result};
use crate::frame::{MatrixFrame, DEFAULT_TOL};
use crate::linalg;
use crate::objective::{self, ObjectiveState};
use crate::polytope::{in_orbit_polytope, PolytopeReport};
use crate::weights::FrameDatum;

pub use crate::objective::cauchy_binet::variety_residual;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop when `||grad Phi - c||_2` is at most this; `None` means `1e-9 * d`.
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
    /// Objective values below this are reported as unbounded.
    pub unbounded_floor: f64,
    /// `||t||_inf` beyond this (after recentering) is reported as unbounded.
    pub divergence_bound: f64,
    /// Rescale every block to unit Frobenius norm before iterating.
    pub pre_normalize: bool,
    /// Run the exact polytope test first and skip iterating outside it.
    pub check_polytope: bool,
    /// Relative tolerance of the rank and frame predicates.
    pub rank_tol: f64,
    pub armijo_c1: f64,
    pub shrink: f64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Keep the objective value of every accepted iterate.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: None,
            max_iters: 100_000,
            unbounded_floor: -1e6,
            divergence_bound: 50.0,
            pre_normalize: false,
            check_polytope: true,
            rank_tol: DEFAULT_TOL,
            armijo_c1: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            min_step: 1e-20,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn effective_grad_tol(&self, dim: usize) -> f64 {
        self.grad_tol.unwrap_or(1e-9 * dim as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    UnboundedBelow,
    MaxIters,
    NotSemistable,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::UnboundedBelow => "unbounded_below",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::NotSemistable => "not_semistable",
        }
    }

    /// The objective stayed bounded below along the run.
    pub fn is_bounded(self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::MaxIters)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub t_star: DVector<f64>,
    /// `Q^{-1/2}(t*)`.
    pub transformer: DMatrix<f64>,
    /// Estimate of `inf_t Phi(t) - <t, c>`; `-inf` when unbounded or outside
    /// the polytope.
    pub objective_value: f64,
    pub grad_norm: f64,
    /// Gaussian extremisers `Y_i = 1 / ||Q^{-1/2}(t*) X_i||_F^2`.
    pub extremisers: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub grad_tol: f64,
    pub polytope: Option<PolytopeReport>,
    /// Objective at every accepted iterate (only with `record_trace`): the
    /// starting value plus the accepted line-search decrements, which are
    /// accurate well below the rounding error of a direct evaluation.
    pub trace: Vec<f64>,
    /// Set when the run stopped for a numerical reason worth reporting.
    pub note: Option<String>,
}

/// Shift `t` along the all-ones vector so that `<t, c> = 0`.
pub fn recenter(t: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    let s = t.dot(c) / c.sum();
    t.add_scalar(-s)
}

struct Iterate {
    state: ObjectiveState,
    /// `e^{t_i / 2} Q^{-1/2} X_i`.
    whitened: Vec<DMatrix<f64>>,
    value: f64,
}

impl Iterate {
    fn new(frame: &MatrixFrame, c: &DVector<f64>, t: DVector<f64>) -> Result<Self> {
        let state = ObjectiveState::evaluate(frame, &t)?;
        let whitened =
            frame.blocks().iter().zip(t.iter()).map(|(x, &ti)| &state.q_inv_sqrt * x * (0.5 * ti).exp()).collect();
        let value = state.phi - t.dot(c);
        Ok(Self { state, whitened, value })
    }

    /// `f(t + dt) - f(t)`, or `None` if the trial point leaves the PD cone
    /// numerically.
    fn decrement(&self, dt: &DVector<f64>, c: &DVector<f64>) -> Option<f64> {
        let d = self.state.q.nrows();
        let mut e = DMatrix::zeros(d, d);
        for (w, &step) in self.whitened.iter().zip(dt.iter()) {
            let m = step.exp_m1();
            if !m.is_finite() {
                return None;
            }
            e += w * w.transpose() * m;
        }
        let eig = linalg::symmetric_eigen(&e);
        let mut log_det = 0.0;
        for mu in eig.eigenvalues.iter() {
            if !(*mu > -1.0) {
                return None;
            }
            log_det += mu.ln_1p();
        }
        Some(log_det - dt.dot(c))
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    datum: &FrameDatum,
    pre_normalized: bool,
    scale_shift: &DVector<f64>,
    c: &DVector<f64>,
    it: &Iterate,
    status: SolveStatus,
    iterations: usize,
    grad_tol: f64,
    polytope: Option<PolytopeReport>,
    trace: Vec<f64>,
    note: Option<String>,
) -> SolveResult {
    // Undo block pre-normalization: t_orig = t_norm - log ||X_i||^2.
    let t_star = recenter(&(&it.state.t - scale_shift), c);
    // Q changes by a positive scalar under the map back; re-evaluate so the
    // transformer and extremisers refer to the input frame.
    let transformer = if pre_normalized {
        ObjectiveState::evaluate(&datum.frame, &t_star)
            .map(|s| s.q_inv_sqrt)
            .unwrap_or_else(|_| it.state.q_inv_sqrt.clone())
    } else {
        it.state.q_inv_sqrt.clone()
    };
    let extremisers = datum.frame.blocks().iter().map(|x| 1.0 / linalg::frobenius_sq(&(&transformer * x))).collect();
    let grad_norm = (&it.state.grad - c).norm();
    let objective_value = match status {
        SolveStatus::UnboundedBelow | SolveStatus::NotSemistable => f64::NEG_INFINITY,
        _ => objective::objective(datum, &t_star).unwrap_or(it.value),
    };
    SolveResult {
        t_star,
        transformer,
        objective_value,
        grad_norm,
        extremisers,
        status,
        iterations,
        grad_tol,
        polytope,
        trace,
        note,
    }
}

/// Minimize `Phi(t) - <t, c>` by gradient descent with Armijo backtracking.
pub fn minimize(datum: &FrameDatum, config: &SolverConfig) -> Result<SolveResult> {
    datum.check_sum()?;
    if !datum.frame.is_matrix_frame(config.rank_tol) {
        return Err(FrameError::NotMatrixFrame("frame operator is not positive definite".into()));
    }
    let grad_tol = config.effective_grad_tol(datum.frame.dim());
    let c = DVector::from_vec(datum.weights.to_f64());
    let n = datum.frame.len();

    let (frame, scale_shift) = if config.pre_normalize {
        let norms = datum.frame.block_norms_sq();
        if let Some(i) = norms.iter().position(|&v| v == 0.0) {
            return Err(FrameError::ZeroBlock(i));
        }
        let scales: Vec<f64> = norms.iter().map(|v| v.sqrt().recip()).collect();
        (datum.frame.scale_blocks(&scales)?, DVector::from_iterator(n, norms.iter().map(|v| v.ln())))
    } else {
        (datum.frame.clone(), DVector::zeros(n))
    };

    let polytope = config.check_polytope.then(|| in_orbit_polytope(datum, config.rank_tol));
    let mut it = Iterate::new(&frame, &c, DVector::zeros(n))?;
    let mut trace = Vec::new();
    if config.record_trace {
        trace.push(it.value);
    }
    if let Some(report) = &polytope {
        if !report.member {
            return Ok(finish(
                datum,
                config.pre_normalize,
                &scale_shift,
                &c,
                &it,
                SolveStatus::NotSemistable,
                0,
                grad_tol,
                polytope,
                trace,
                None,
            ));
        }
    }

    let mut iterations = 0;
    let mut note = None;
    let status = loop {
        let residual = &it.state.grad - &c;
        let gnorm_sq = residual.norm_squared();
        if gnorm_sq.sqrt() <= grad_tol {
            break SolveStatus::Converged;
        }
        if iterations >= config.max_iters {
            break SolveStatus::MaxIters;
        }
        iterations += 1;

        let mut step = config.initial_step;
        let accepted = loop {
            let dt = recenter(&(&it.state.t - &residual * step), &c) - &it.state.t;
            if let Some(delta) = it.decrement(&dt, &c) {
                if delta <= -config.armijo_c1 * step * gnorm_sq {
                    break Some((dt, delta));
                }
            }
            step *= config.shrink;
            if step < config.min_step {
                break None;
            }
        };
        let Some((dt, delta)) = accepted else {
            note = Some(format!("line search stalled at gradient norm {:e}", gnorm_sq.sqrt()));
            break SolveStatus::MaxIters;
        };

        let t_new = &it.state.t + dt;
        if t_new.amax() > config.divergence_bound {
            note = Some(format!("|t|_inf exceeded {}", config.divergence_bound));
            break SolveStatus::UnboundedBelow;
        }
        match Iterate::new(&frame, &c, t_new) {
            Ok(next) => it = next,
            Err(e) => {
                // Descent drove Q(t) to numerical singularity.
                note = Some(format!("descent left the numerically positive definite region: {e}"));
                break SolveStatus::UnboundedBelow;
            }
        }
        if config.record_trace {
            let last = trace.last().copied().unwrap_or(it.value);
            trace.push(last + delta);
        }
        if it.value < config.unbounded_floor {
            note = Some(format!("objective fell below {}", config.unbounded_floor));
            break SolveStatus::UnboundedBelow;
        }
    };
    if status == SolveStatus::MaxIters {
        if let Some(p) = polytope.as_ref().filter(|p| p.member && !p.in_relative_interior()) {
            let boundary = format!("weights lie on the polytope boundary (tight: {:?})", p.tight_subsets);
            note = Some(match note {
                Some(n) => format!("{n}; {boundary}"),
                None => boundary,
            });
        }
    }
    Ok(finish(datum, config.pre_normalize, &scale_shift, &c, &it, status, iterations, grad_tol, polytope, trace, note))
}

/// Apply the solved transformer, giving a frame in radial isotropic position.
pub fn transform_to_rif(datum: &FrameDatum, result: &SolveResult) -> Result<MatrixFrame> {
    if result.status != SolveStatus::Converged {
        return Err(FrameError::NotConverged(format!("solver status is {}", result.status)));
    }
    datum.frame.transform(&result.transformer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::rif_residual;
    use crate::weights::WeightVector;
    use approx::assert_relative_eq;

    fn f_star() -> MatrixFrame {
        MatrixFrame::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        ])
        .unwrap()
    }

    fn thirds(frame: MatrixFrame) -> FrameDatum {
        FrameDatum::new(frame, WeightVector::from_ratios(&[(2, 3), (2, 3), (2, 3)]).unwrap()).unwrap()
    }

    fn basis_datum() -> FrameDatum {
        let e = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        FrameDatum::new(e, WeightVector::from_ratios(&[(1, 1), (1, 1)]).unwrap()).unwrap()
    }

    #[test]
    fn already_isotropic_basis() {
        let datum = basis_datum();
        let res = minimize(&datum, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert_eq!(res.iterations, 0);
        assert_relative_eq!(res.t_star, DVector::zeros(2));
        assert_relative_eq!(res.objective_value, 0.0);
        assert_relative_eq!(res.transformer, DMatrix::identity(2, 2), epsilon = 1e-15);
        assert_eq!(transform_to_rif(&datum, &res).unwrap(), datum.frame);
    }

    #[test]
    fn f_star_converges_to_rif() {
        let datum = thirds(f_star());
        let config = SolverConfig { record_trace: true, ..Default::default() };
        let res = minimize(&datum, &config).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert!(res.grad_norm <= 1e-8);
        assert!(res.t_star.amax() > 1e-3);
        let c = DVector::from_vec(datum.weights.to_f64());
        assert!(res.t_star.dot(&c).abs() < 1e-12);
        for w in res.trace.windows(2) {
            assert!(w[1] <= w[0], "objective increased: {} -> {}", w[0], w[1]);
        }
        let g = transform_to_rif(&datum, &res).unwrap();
        let rif = FrameDatum::new(g, datum.weights.clone()).unwrap();
        assert!(rif_residual(&rif).unwrap() <= 1e-7);
        let resid = variety_residual(&datum, &res.t_star, 1_000_000).unwrap();
        assert!(resid.amax() <= 1e-7);
        for ((ti, yi), ci) in res.t_star.iter().zip(&res.extremisers).zip(c.iter()) {
            assert_relative_eq!(ti.exp() / yi, *ci, max_relative = 1e-7);
        }
    }

    #[test]
    fn variety_residual_at_origin_is_gradient_mismatch() {
        let datum = thirds(f_star());
        let r = variety_residual(&datum, &DVector::zeros(3), 1_000_000).unwrap();
        assert_relative_eq!(r, DVector::from_vec(vec![1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0]), epsilon = 1e-14);
        let r = variety_residual(&basis_datum(), &DVector::zeros(2), 1_000_000).unwrap();
        assert_relative_eq!(r, DVector::zeros(2));
    }

    #[test]
    fn collinear_frame_is_not_semistable() {
        let d = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let datum = thirds(d);
        let res = minimize(&datum, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::NotSemistable);
        assert_eq!(res.polytope.as_ref().unwrap().violating_subsets, vec![vec![0, 1]]);
        assert_eq!(res.objective_value, f64::NEG_INFINITY);
        assert!(transform_to_rif(&datum, &res).is_err());
    }

    #[test]
    fn collinear_frame_diverges_without_polytope_check() {
        let d = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let config = SolverConfig { check_polytope: false, ..Default::default() };
        let res = minimize(&thirds(d), &config).unwrap();
        assert_eq!(res.status, SolveStatus::UnboundedBelow);
    }

    #[test]
    fn boundary_weights_stop_at_max_iters() {
        // Semistable but not polystable: the infimum is not attained.
        let d =
            MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let w = WeightVector::from_ratios(&[(1, 2), (1, 2), (1, 2), (1, 2)]).unwrap();
        let datum = FrameDatum::new(d, w).unwrap();
        let config = SolverConfig { max_iters: 200, ..Default::default() };
        let res = minimize(&datum, &config).unwrap();
        assert_eq!(res.status, SolveStatus::MaxIters);
        assert!(res.status.is_bounded());
        assert!(res.note.as_deref().unwrap().contains("boundary"));
    }

    #[test]
    fn scaled_input_has_same_rif_residual() {
        let datum = thirds(f_star());
        let scaled = thirds(f_star().scale_blocks(&[7.5, 7.5, 7.5]).unwrap());
        for data in [&datum, &scaled] {
            let res = minimize(data, &SolverConfig::default()).unwrap();
            assert_eq!(res.status, SolveStatus::Converged);
            let g = FrameDatum::new(transform_to_rif(data, &res).unwrap(), data.weights.clone()).unwrap();
            assert!(rif_residual(&g).unwrap() <= 1e-7);
        }
    }

    #[test]
    fn pre_normalization_maps_back() {
        let datum = thirds(f_star().scale_blocks(&[3.0, 0.25, 1.0]).unwrap());
        let plain = minimize(&datum, &SolverConfig::default()).unwrap();
        let normed = minimize(&datum, &SolverConfig { pre_normalize: true, ..Default::default() }).unwrap();
        assert_eq!(normed.status, SolveStatus::Converged);
        assert_relative_eq!(plain.objective_value, normed.objective_value, epsilon = 1e-9);
        assert_relative_eq!(plain.t_star, normed.t_star, epsilon = 1e-6);
        let c = datum.weights.to_f64();
        for ((ti, yi), ci) in normed.t_star.iter().zip(&normed.extremisers).zip(&c) {
            assert_relative_eq!(ti.exp() / yi, *ci, max_relative = 1e-7);
        }
    }

    #[test]
    fn precondition_errors() {
        let bad_sum = FrameDatum::new(f_star(), WeightVector::from_ratios(&[(1, 1), (1, 1), (1, 1)]).unwrap()).unwrap();
        assert!(matches!(minimize(&bad_sum, &SolverConfig::default()), Err(FrameError::WeightSum { .. })));
        let collinear = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let datum = FrameDatum::new(collinear, WeightVector::from_ratios(&[(1, 1), (1, 1)]).unwrap()).unwrap();
        assert!(matches!(minimize(&datum, &SolverConfig::default()), Err(FrameError::NotMatrixFrame(_))));
    }
}
