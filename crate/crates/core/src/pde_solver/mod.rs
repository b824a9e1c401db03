//! Collocation least-squares solver built on the tensor constrained expression.

mod features;
mod grid;
mod lstsq;
mod problem;

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TfcError};
use crate::expression::{build_tensor_form, ConstrainedExpression, Embedding, ProbeKey};
use crate::field::Field;
use crate::poly_basis::BasisKind;

pub use features::{
    build_feature_set, oracle_from_free_function, FreeFunction, FreeFunctionOracle, RowScratch,
};
pub use grid::{make_grid, uniform_grid, CollocationGrid};
pub use lstsq::{least_squares, LeastSquares, PINV_RCOND};
pub use problem::{ClosureResidual, LinearResidual, PdeProblem, PointFn, Residual};

/// Points per axis of the uniform grid used for test error.
pub const TEST_POINTS_PER_AXIS: usize = 100;

/// Every derivative the residual needs at every collocation point, written as
/// `offset + rows * xi`.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub derivs: Vec<Vec<u32>>,
    pub points: Vec<Vec<f64>>,
    /// Indexed `p * derivs.len() + i`.
    pub offsets: Vec<f64>,
    /// Row `p * derivs.len() + i`.
    pub rows: DMatrix<f64>,
}

impl Linearization {
    /// `u_i(x_p)` for the coefficient vector `xi`.
    pub fn values(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.rows * xi + DVector::from_column_slice(&self.offsets)
    }
}

pub fn linearize(
    ce: &ConstrainedExpression,
    ff: &FreeFunction,
    points: &[Vec<f64>],
    derivs: &[Vec<u32>],
) -> Result<Linearization> {
    let nf = ff.len();
    let nd = derivs.len();
    let mut rows = DMatrix::zeros(points.len() * nd, nf);
    let mut offsets = vec![0.0; points.len() * nd];
    let mut cache: HashMap<ProbeKey, usize> = HashMap::new();
    let mut pool: Vec<f64> = Vec::new();
    let mut scratch = RowScratch::default();
    let mut acc = vec![0.0; nf];

    for (p, x) in points.iter().enumerate() {
        for (i, d) in derivs.iter().enumerate() {
            let e = ce.expand(x, d)?;
            acc.iter_mut().for_each(|v| *v = 0.0);
            for pr in &e.probes {
                let key = ProbeKey::new(&pr.point, &pr.deriv);
                let slot = match cache.get(&key) {
                    Some(&s) => s,
                    None => {
                        let s = pool.len() / nf.max(1);
                        pool.resize(pool.len() + nf, 0.0);
                        ff.feature_row(
                            &pr.point,
                            &pr.deriv,
                            &mut scratch,
                            &mut pool[s * nf..(s + 1) * nf],
                        )?;
                        cache.insert(key, s);
                        s
                    }
                };
                for (a, h) in acc.iter_mut().zip(&pool[slot * nf..(slot + 1) * nf]) {
                    *a += pr.weight * h;
                }
            }
            let r = p * nd + i;
            offsets[r] = e.kappa;
            for (f, a) in acc.iter().enumerate() {
                rows[(r, f)] = *a;
            }
        }
    }
    Ok(Linearization {
        derivs: derivs.to_vec(),
        points: points.to_vec(),
        offsets,
        rows,
    })
}

/// Residual vector and Jacobian at `xi`.
pub fn residual_and_jacobian(
    lin: &Linearization,
    residual: &dyn Residual,
    xi: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let nd = lin.derivs.len();
    let nf = lin.rows.ncols();
    let u = lin.values(xi);
    let mut r = DVector::zeros(lin.points.len());
    let mut jac = DMatrix::zeros(lin.points.len(), nf);
    let mut grad = vec![0.0; nd];
    for (p, x) in lin.points.iter().enumerate() {
        let up = &u.as_slice()[p * nd..(p + 1) * nd];
        r[p] = residual.value(x, up);
        residual.gradient(x, up, &mut grad);
        for (i, gi) in grad.iter().enumerate() {
            if *gi != 0.0 {
                for f in 0..nf {
                    jac[(p, f)] += gi * lin.rows[(p * nd + i, f)];
                }
            }
        }
    }
    (r, jac)
}

/// `A xi = b` for a linear residual on the collocation points.
pub fn assemble_linear_system(
    problem: &PdeProblem,
    ce: &ConstrainedExpression,
    ff: &FreeFunction,
    points: &[Vec<f64>],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if !problem.residual.is_linear() {
        return Err(TfcError::WrongSolver);
    }
    let lin = linearize(ce, ff, points, problem.residual.derivatives())?;
    let (r0, a) = residual_and_jacobian(&lin, problem.residual.as_ref(), &DVector::zeros(ff.len()));
    Ok((a, -r0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    pub max_iter: usize,
    /// Stop once `||delta xi||_inf` drops below this.
    pub step_tol: f64,
    /// Stop once `||r||_2` drops below this.
    pub res_tol: f64,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        GaussNewtonOptions {
            max_iter: 30,
            step_tol: 1e-14,
            res_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussNewtonReport {
    /// Best iterate by residual norm.
    pub xi: DVector<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    /// Steps taken before a stopping test fired.
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub ls_time_s: f64,
    pub last_rank: usize,
    pub rank_deficient: bool,
}

pub fn gauss_newton(
    lin: &Linearization,
    residual: &dyn Residual,
    xi0: DVector<f64>,
    opts: &GaussNewtonOptions,
) -> Result<GaussNewtonReport> {
    let mut xi = xi0;
    let mut best = (f64::INFINITY, xi.clone());
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut ls_time_s = 0.0;
    let mut last_rank = 0;
    let mut rank_deficient = false;

    for _ in 0..=opts.max_iter {
        let (r, jac) = residual_and_jacobian(lin, residual, &xi);
        let norm = r.norm();
        if !norm.is_finite() {
            if best.0.is_finite() {
                break;
            }
            return Err(TfcError::Numerical("residual became non-finite".into()));
        }
        history.push(norm);
        if norm < best.0 {
            best = (norm, xi.clone());
        }
        if converged || norm < opts.res_tol {
            converged = true;
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        let t = Instant::now();
        let ls = least_squares(&jac, &(-r))?;
        ls_time_s += t.elapsed().as_secs_f64();
        last_rank = ls.rank;
        rank_deficient = ls.rank_deficient;
        let step = ls.xi.amax();
        xi += ls.xi;
        if step < opts.step_tol {
            // evaluate the final iterate on the next pass, then stop
            converged = true;
        } else {
            iterations += 1;
        }
    }

    Ok(GaussNewtonReport {
        xi: best.1,
        residual_norm: best.0,
        converged,
        iterations,
        residual_history: history,
        ls_time_s,
        last_rank,
        rank_deficient,
    })
}

/// Maximum absolute error against the known solution on the training points
/// and on a uniform test grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub max_train_err: f64,
    pub max_test_err: f64,
}

pub fn evaluate_errors(
    ce: &ConstrainedExpression,
    g: &dyn Field,
    truth: &dyn Field,
    train: &[Vec<f64>],
    test: &[Vec<f64>],
) -> Result<ErrorReport> {
    let max_err = |pts: &[Vec<f64>]| -> Result<f64> {
        let d = vec![0; ce.dims()];
        let u = ce.eval_batch(g, pts, &d)?;
        let mut worst: f64 = 0.0;
        for (x, v) in pts.iter().zip(u) {
            let e = (v - truth.value(x, &d)).abs();
            if !e.is_finite() {
                return Err(TfcError::Numerical(format!("non-finite solution at {x:?}")));
            }
            worst = worst.max(e);
        }
        Ok(worst)
    };
    Ok(ErrorReport {
        max_train_err: max_err(train)?,
        max_test_err: max_err(test)?,
    })
}

/// Largest `|C[u] - kappa|` over all constraints, sampled on a uniform grid
/// of the other axes.
pub fn max_constraint_residual(
    ce: &dyn Embedding,
    g: &dyn Field,
    domains: &[(f64, f64)],
    per_axis: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (axis, set) in ce.axes().iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let mut doms = domains.to_vec();
        doms[axis] = (domains[axis].0, domains[axis].0);
        let pts = uniform_grid(&doms, per_axis);
        let mut seen = std::collections::HashSet::new();
        for x in pts {
            if !seen.insert(ProbeKey::new(&x, &[])) {
                continue;
            }
            for j in 0..set.len() {
                worst = worst.max(ce.constraint_residual(g, axis, j, &x)?.abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub kind: BasisKind,
    /// Collocation points per axis.
    pub n_points: usize,
    /// Total degree of the free-function basis.
    pub degree: usize,
    pub gauss_newton: GaussNewtonOptions,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub num_features: usize,
    pub xi: Vec<f64>,
    pub features: Vec<Vec<u32>>,
    pub errors: Option<ErrorReport>,
    pub residual_norm: f64,
    pub converged: bool,
    pub gn_iterations: usize,
    pub rank: usize,
    pub rank_deficient: bool,
    pub assembly_time_s: f64,
    pub ls_time_s: f64,
    pub total_time_s: f64,
}

/// Pieces a finished solve can be re-evaluated with.
pub struct Solution {
    pub expression: ConstrainedExpression,
    pub free_function: FreeFunction,
    pub grid: CollocationGrid,
    pub report: SolveReport,
}

pub fn solve(problem: &PdeProblem, opts: &SolveOptions) -> Result<Solution> {
    if opts.n_points < 2 {
        return Err(TfcError::InvalidArgument(format!(
            "need at least 2 points per axis (got {})",
            opts.n_points
        )));
    }
    let start = Instant::now();
    let dims = problem.dims();
    let ce = build_tensor_form(problem.axes.clone())?;
    if ce.dims() != dims {
        return Err(TfcError::InvalidArgument(
            "constraint axes do not match the domain".into(),
        ));
    }
    let features = build_feature_set(opts.degree, dims, &problem.axes)?;
    let grid = make_grid(&problem.domains, &vec![opts.n_points - 1; dims])?;
    let mut ff = FreeFunction::new(opts.kind, opts.degree, features, grid.maps.clone());
    let points = grid.points();

    let t = Instant::now();
    let lin = linearize(&ce, &ff, &points, problem.residual.derivatives())?;
    let assembly_time_s = t.elapsed().as_secs_f64();

    let (xi, residual_norm, converged, gn_iterations, rank, rank_deficient, ls_time_s) =
        if problem.residual.is_linear() {
            let (r0, a) =
                residual_and_jacobian(&lin, problem.residual.as_ref(), &DVector::zeros(ff.len()));
            let t = Instant::now();
            let ls = least_squares(&a, &(-r0))?;
            let ls_time = t.elapsed().as_secs_f64();
            (
                ls.xi,
                ls.residual_norm,
                true,
                1,
                ls.rank,
                ls.rank_deficient,
                ls_time,
            )
        } else {
            let gn = gauss_newton(
                &lin,
                problem.residual.as_ref(),
                DVector::zeros(ff.len()),
                &opts.gauss_newton,
            )?;
            (
                gn.xi,
                gn.residual_norm,
                gn.converged,
                gn.iterations,
                gn.last_rank,
                gn.rank_deficient,
                gn.ls_time_s,
            )
        };
    ff.xi = xi.as_slice().to_vec();

    let errors = match &problem.true_solution {
        Some(truth) => {
            let test = uniform_grid(&problem.domains, TEST_POINTS_PER_AXIS);
            Some(evaluate_errors(
                &ce,
                &ff.oracle(),
                truth.as_ref(),
                &points,
                &test,
            )?)
        }
        None => None,
    };

    let report = SolveReport {
        num_features: ff.len(),
        xi: ff.xi.clone(),
        features: ff.features.clone(),
        errors,
        residual_norm,
        converged,
        gn_iterations,
        rank,
        rank_deficient,
        assembly_time_s,
        ls_time_s,
        total_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(Solution {
        expression: ce,
        free_function: ff,
        grid,
        report,
    })
}
