//! Built-in problem registry: the two benchmark PDEs, the worked constraint
//! examples, and published maximum test errors for the benchmark sweeps.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::constraints::{Constraint, ConstraintTerm, Kappa};
use crate::error::{Result, TfcError};
use crate::expression::AxisConstraintSet;
use crate::field::{Field, Separable, UniFn};
use crate::pde_solver::{ClosureResidual, LinearResidual, PdeProblem};
use crate::poly_basis::BasisKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    Problem1,
    Problem2,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Problem1 => "problem1",
            ProblemId::Problem2 => "problem2",
        }
    }

    pub fn build(self) -> PdeProblem {
        match self {
            ProblemId::Problem1 => problem1(),
            ProblemId::Problem2 => problem2(),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = TfcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "problem1" | "p1" | "1" => Ok(ProblemId::Problem1),
            "problem2" | "p2" | "2" => Ok(ProblemId::Problem2),
            _ => Err(TfcError::InvalidArgument(format!(
                "unknown problem '{s}' (expected problem1 or problem2)"
            ))),
        }
    }
}

fn kappa(s: Separable) -> Kappa {
    Kappa::Field(Arc::new(s))
}

fn x_only(f: UniFn) -> Separable {
    Separable::new().term(1.0, vec![f, UniFn::one()])
}

fn y_only(f: UniFn) -> Separable {
    Separable::new().term(1.0, vec![UniFn::one(), f])
}

/// `u_xx + u_yy = e^{-x}(x - 2 + y^3 + 6y)` on the unit square with Dirichlet
/// data taken from `u = e^{-x}(x + y^3)`.
pub fn problem1() -> PdeProblem {
    let cube = || UniFn::poly(vec![0.0, 0.0, 0.0, 1.0]);
    let x_axis = AxisConstraintSet::new(
        0,
        vec![
            Constraint::value(0.0, kappa(y_only(cube()))),
            Constraint::value(
                1.0,
                kappa(Separable::new().term(
                    1.0 / E,
                    vec![UniFn::one(), UniFn::poly(vec![1.0, 0.0, 0.0, 1.0])],
                )),
            ),
        ],
    )
    .expect("problem1 x constraints");
    let y_axis = AxisConstraintSet::new(
        1,
        vec![
            Constraint::value(
                0.0,
                kappa(x_only(UniFn::poly(vec![0.0, 1.0]).times(UniFn::exp(-1.0)))),
            ),
            Constraint::value(
                1.0,
                kappa(x_only(UniFn::poly(vec![1.0, 1.0]).times(UniFn::exp(-1.0)))),
            ),
        ],
    )
    .expect("problem1 y constraints");

    let truth = Separable::new()
        .term(
            1.0,
            vec![
                UniFn::poly(vec![0.0, 1.0]).times(UniFn::exp(-1.0)),
                UniFn::one(),
            ],
        )
        .term(1.0, vec![UniFn::exp(-1.0), cube()]);
    let residual = LinearResidual::constant(
        vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)],
        Arc::new(|p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            (-x).exp() * (x - 2.0 + y * y * y + 6.0 * y)
        }),
    );
    PdeProblem {
        name: "problem1".into(),
        domains: vec![(0.0, 1.0), (0.0, 1.0)],
        axes: vec![x_axis, y_axis],
        residual: Arc::new(residual),
        true_solution: Some(Arc::new(truth)),
    }
}

/// `u_xx + u_x u_y = 2 cos y - 2 x^3 sin y cos y` on `[0,1] x [0,2pi]` with
/// `u(0,y) = 0`, `u(1,y) = cos y` and `u(x,0) = u(x,2pi)`; `u = x^2 cos y`.
pub fn problem2() -> PdeProblem {
    let x_axis = AxisConstraintSet::new(
        0,
        vec![
            Constraint::value(0.0, 0.0),
            Constraint::value(1.0, kappa(y_only(UniFn::cos(1.0)))),
        ],
    )
    .expect("problem2 x constraints");
    let periodic = Constraint::new(
        vec![
            ConstraintTerm::new(1.0, 0, 0.0),
            ConstraintTerm::new(-1.0, 0, 2.0 * PI),
        ],
        0.0,
    )
    .expect("periodic constraint");
    let y_axis = AxisConstraintSet::new(1, vec![periodic]).expect("problem2 y constraints");

    let truth = Separable::new().term(1.0, vec![UniFn::poly(vec![0.0, 0.0, 1.0]), UniFn::cos(1.0)]);
    let forcing = |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        2.0 * y.cos() - 2.0 * x * x * x * y.sin() * y.cos()
    };
    // u = [u_xx, u_x, u_y]
    let residual = ClosureResidual::new(
        vec![vec![2, 0], vec![1, 0], vec![0, 1]],
        move |p, u| u[0] + u[1] * u[2] - forcing(p),
        |_, u, out| {
            out[0] = 1.0;
            out[1] = u[2];
            out[2] = u[1];
        },
    );
    PdeProblem {
        name: "problem2".into(),
        domains: vec![(0.0, 1.0), (0.0, 2.0 * PI)],
        axes: vec![x_axis, y_axis],
        residual: Arc::new(residual),
        true_solution: Some(Arc::new(truth)),
    }
}

/// `u(0) = 1`, `u_x(1) = 2`, `u(2) = 3`.
pub fn univariate_points() -> Vec<Constraint> {
    vec![
        Constraint::value(0.0, 1.0),
        Constraint::derivative(1, 1.0, 2.0),
        Constraint::value(2.0, 3.0),
    ]
}

/// `u(1) - u(0) = 0`, `2 u(2) + pi u_xx(0) = 3`.
pub fn univariate_linear() -> Vec<Constraint> {
    vec![
        Constraint::new(
            vec![
                ConstraintTerm::new(1.0, 0, 1.0),
                ConstraintTerm::new(-1.0, 0, 0.0),
            ],
            0.0,
        )
        .expect("valid"),
        Constraint::new(
            vec![
                ConstraintTerm::new(2.0, 0, 2.0),
                ConstraintTerm::new(PI, 2, 0.0),
            ],
            3.0,
        )
        .expect("valid"),
    ]
}

/// `u(0,y) = sin 2 pi y`, `u_x(0,y) = 0`, `u(x,0) = x^2`, `u(x,1) = cos x - 1`.
pub fn multivariate_example1() -> Vec<AxisConstraintSet> {
    let x_axis = AxisConstraintSet::new(
        0,
        vec![
            Constraint::value(0.0, kappa(y_only(UniFn::sin(2.0 * PI)))),
            Constraint::derivative(1, 0.0, 0.0),
        ],
    )
    .expect("example x constraints");
    let y_axis = AxisConstraintSet::new(
        1,
        vec![
            Constraint::value(0.0, kappa(x_only(UniFn::poly(vec![0.0, 0.0, 1.0])))),
            Constraint::value(
                1.0,
                kappa(
                    Separable::new()
                        .term(1.0, vec![UniFn::cos(1.0), UniFn::one()])
                        .term(-1.0, vec![UniFn::one(), UniFn::one()]),
                ),
            ),
        ],
    )
    .expect("example y constraints");
    vec![x_axis, y_axis]
}

/// `u(0,y) = y^2 sin pi y`, `u(1,y) + u(2,y) = y sin pi y`, `u_y(x,0) = 0`,
/// `u(x,0) = u(x,1)`.
pub fn multivariate_example2() -> Vec<AxisConstraintSet> {
    let x_axis = AxisConstraintSet::new(
        0,
        vec![
            Constraint::value(
                0.0,
                kappa(y_only(
                    UniFn::poly(vec![0.0, 0.0, 1.0]).times(UniFn::sin(PI)),
                )),
            ),
            Constraint::new(
                vec![
                    ConstraintTerm::new(1.0, 0, 1.0),
                    ConstraintTerm::new(1.0, 0, 2.0),
                ],
                kappa(y_only(UniFn::poly(vec![0.0, 1.0]).times(UniFn::sin(PI)))),
            )
            .expect("valid"),
        ],
    )
    .expect("example x constraints");
    let y_axis = AxisConstraintSet::new(
        1,
        vec![
            Constraint::derivative(1, 0.0, 0.0),
            Constraint::new(
                vec![
                    ConstraintTerm::new(1.0, 0, 0.0),
                    ConstraintTerm::new(-1.0, 0, 1.0),
                ],
                0.0,
            )
            .expect("valid"),
        ],
    )
    .expect("example y constraints");
    vec![x_axis, y_axis]
}

/// `g = x^2 cos y + 4`, the free function used to plot the first example.
pub fn example1_free_function() -> Arc<dyn Field> {
    Arc::new(
        Separable::new()
            .term(1.0, vec![UniFn::poly(vec![0.0, 0.0, 1.0]), UniFn::cos(1.0)])
            .term(4.0, vec![UniFn::one(), UniFn::one()]),
    )
}

/// `g = x^2 cos y + sin 2x`.
pub fn example2_free_function() -> Arc<dyn Field> {
    Arc::new(
        Separable::new()
            .term(1.0, vec![UniFn::poly(vec![0.0, 0.0, 1.0]), UniFn::cos(1.0)])
            .term(1.0, vec![UniFn::sin(2.0), UniFn::one()]),
    )
}

const N_ROWS: [usize; 6] = [5, 10, 15, 20, 25, 30];
const M_COLS: [usize; 5] = [5, 10, 15, 20, 25];
const NA: f64 = f64::NAN;

const P1_CHEB: [[f64; 5]; 6] = [
    [6.26e-4, NA, NA, NA, NA],
    [5.53e-4, 1.20e-10, NA, NA, NA],
    [5.30e-4, 1.17e-10, 4.44e-16, NA, NA],
    [5.20e-4, 1.16e-10, 5.00e-16, 4.44e-16, NA],
    [5.13e-4, 1.15e-10, 7.22e-16, 2.61e-15, 5.55e-16],
    [5.09e-4, 1.14e-10, 6.66e-16, 8.88e-16, 3.22e-15],
];
const P1_LEG: [[f64; 5]; 6] = [
    [6.26e-4, NA, NA, NA, NA],
    [5.53e-4, 1.20e-10, NA, NA, NA],
    [5.30e-4, 1.17e-10, 4.44e-16, NA, NA],
    [5.20e-4, 1.16e-10, 5.55e-16, 4.44e-16, NA],
    [5.13e-4, 1.15e-10, 4.44e-16, 4.44e-16, 5.55e-16],
    [5.09e-4, 1.14e-10, 4.44e-16, 4.44e-16, 5.55e-16],
];
const P2_CHEB: [[f64; 5]; 6] = [
    [1.03e-1, NA, NA, NA, NA],
    [9.20e-2, 2.49e-5, NA, NA, NA],
    [9.03e-2, 1.54e-5, 4.34e-9, NA, NA],
    [8.94e-2, 1.52e-5, 4.56e-9, 5.33e-15, NA],
    [8.88e-2, 1.50e-5, 4.53e-9, 2.72e-15, 4.44e-16],
    [8.85e-2, 1.49e-5, 4.51e-9, 2.72e-15, 3.33e-16],
];
const P2_LEG: [[f64; 5]; 6] = [
    [1.03e-1, NA, NA, NA, NA],
    [9.20e-2, 2.49e-5, NA, NA, NA],
    [9.03e-2, 1.54e-5, 4.34e-9, NA, NA],
    [8.94e-2, 1.52e-5, 4.56e-9, 5.33e-15, NA],
    [8.88e-2, 1.50e-5, 4.53e-9, 2.78e-15, 5.55e-16],
    [8.85e-2, 1.49e-5, 4.51e-9, 2.73e-15, 5.55e-16],
];

/// Published maximum test error for a sweep cell, if one exists.
pub fn reference_test_error(
    problem: ProblemId,
    kind: BasisKind,
    n: usize,
    m: usize,
) -> Option<f64> {
    let table = match (problem, kind) {
        (ProblemId::Problem1, BasisKind::ChebyshevFirstKind) => &P1_CHEB,
        (ProblemId::Problem1, BasisKind::Legendre) => &P1_LEG,
        (ProblemId::Problem2, BasisKind::ChebyshevFirstKind) => &P2_CHEB,
        (ProblemId::Problem2, BasisKind::Legendre) => &P2_LEG,
    };
    let i = N_ROWS.iter().position(|&v| v == n)?;
    let j = M_COLS.iter().position(|&v| v == m)?;
    Some(table[i][j]).filter(|v| !v.is_nan())
}

/// Errors below this are treated as machine precision when comparing
/// against a published value.
pub const MACHINE_PRECISION_CELL: f64 = 1e-12;

/// Default allowed ratio between a measured and a published test error.
pub const STRICT_FACTOR: f64 = 10.0;

/// Largest acceptable test error for a cell with published error `reference`:
/// `factor` times the reference, or [`MACHINE_PRECISION_CELL`] for cells that
/// were reported at round-off level.
pub fn strict_threshold(reference: f64, factor: f64) -> f64 {
    if reference < MACHINE_PRECISION_CELL {
        MACHINE_PRECISION_CELL
    } else {
        factor * reference
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_solutions_satisfy_their_constraints() {
        for p in [problem1(), problem2()] {
            let truth = p.true_solution.clone().unwrap();
            for set in &p.axes {
                for c in &set.constraints {
                    for t in [0.0, 0.3, 0.77, 1.0] {
                        let mut x = vec![t, t * 2.0];
                        x[set.axis] = 0.0;
                        let lhs = c.apply(set.axis, truth.as_ref(), &x, &[0, 0]).unwrap();
                        let rhs = c.kappa.value(&x, &[0, 0]).unwrap();
                        assert!((lhs - rhs).abs() < 1e-14, "{}: {lhs} vs {rhs}", p.name);
                    }
                }
            }
        }
    }

    #[test]
    fn true_solutions_satisfy_their_pdes() {
        for p in [problem1(), problem2()] {
            let truth = p.true_solution.clone().unwrap();
            for x in [[0.2, 0.4], [0.9, 0.1], [0.5, 0.5]] {
                let u: Vec<f64> = p
                    .residual
                    .derivatives()
                    .iter()
                    .map(|d| truth.value(&x, d))
                    .collect();
                assert!(p.residual.value(&x, &u).abs() < 1e-13, "{}", p.name);
            }
        }
    }

    #[test]
    fn surface_spot_values() {
        let t1 = problem1().true_solution.unwrap();
        assert_eq!(t1.value(&[0.0, 0.0], &[0, 0]), 0.0);
        assert!((t1.value(&[1.0, 1.0], &[0, 0]) - 2.0 / E).abs() < 1e-16);
        let t2 = problem2().true_solution.unwrap();
        assert_eq!(t2.value(&[1.0, 0.0], &[0, 0]), 1.0);
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(
            reference_test_error(ProblemId::Problem1, BasisKind::ChebyshevFirstKind, 10, 5),
            Some(5.53e-4)
        );
        assert_eq!(
            reference_test_error(ProblemId::Problem2, BasisKind::Legendre, 25, 25),
            Some(5.55e-16)
        );
        assert_eq!(
            reference_test_error(ProblemId::Problem1, BasisKind::Legendre, 5, 10),
            None
        );
        assert_eq!(
            reference_test_error(ProblemId::Problem1, BasisKind::Legendre, 7, 5),
            None
        );
        assert!((strict_threshold(2.49e-5, STRICT_FACTOR) - 2.49e-4).abs() < 1e-19);
        assert_eq!(strict_threshold(4.44e-16, STRICT_FACTOR), 1e-12);
    }

    #[test]
    fn problem_ids_parse() {
        assert_eq!(
            "problem2".parse::<ProblemId>().unwrap(),
            ProblemId::Problem2
        );
        assert!("problem3".parse::<ProblemId>().is_err());
    }
}
