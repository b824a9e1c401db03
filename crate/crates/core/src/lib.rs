//! Functional interpolation with constrained expressions, and a spectral
//! collocation least-squares PDE solver built on top of them.
//!
//! A constrained expression `u(x, g)` satisfies a set of linear point,
//! derivative and relative constraints exactly for every free function `g`.
//! Expanding `g` in an orthogonal polynomial basis and minimising the PDE
//! residual on a Chebyshev-Gauss-Lobatto grid gives a solver whose boundary
//! conditions are embedded rather than penalised.

pub mod constraints;
pub mod error;
pub mod expression;
pub mod field;
pub mod pde_solver;
pub mod poly;
pub mod poly_basis;
pub mod problems;
pub mod verify;

pub use constraints::{
    apply_constraint_operator, build_support_matrix, default_supports, projection_functional,
    solve_switching, Constraint, ConstraintTerm, Kappa, SupportBasis, SwitchingSet, SINGULAR_TOL,
};
pub use error::{Result, TfcError};
pub use expression::{
    build_multivariate_recursive, build_tensor_form, build_univariate, AxisConstraintSet,
    ConstrainedExpression, Embedded, Embedding, MEntry, MTensorRecipe, RecursiveExpression,
};
pub use field::{Field, Separable, UniFn};
pub use pde_solver::{
    assemble_linear_system, build_feature_set, evaluate_errors, gauss_newton, least_squares,
    make_grid, oracle_from_free_function, solve, FreeFunction, PdeProblem, SolveOptions,
    SolveReport,
};
pub use poly::Poly;
pub use poly_basis::{cgl_nodes, eval_basis, make_map, BasisKind, DomainMap, EvalMatrix};
pub use problems::ProblemId;
