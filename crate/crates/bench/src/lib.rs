//! Fixtures shared by the criterion benches.

use nalgebra::{DMatrix, DVector};
use tfc_core::pde_solver::{
    build_feature_set, linearize, make_grid, residual_and_jacobian, FreeFunction, Linearization,
};
use tfc_core::problems::ProblemId;
use tfc_core::{build_tensor_form, BasisKind, ConstrainedExpression, PdeProblem};

pub struct Fixture {
    pub problem: PdeProblem,
    pub expression: ConstrainedExpression,
    pub free_function: FreeFunction,
    pub points: Vec<Vec<f64>>,
}

/// Everything needed to assemble `problem` on an `n x n` grid with degree `m`.
pub fn fixture(id: ProblemId, kind: BasisKind, n: usize, m: usize) -> Fixture {
    let problem = id.build();
    let expression =
        build_tensor_form(problem.axes.clone()).expect("benchmark problem is well posed");
    let features =
        build_feature_set(m, problem.dims(), &problem.axes).expect("non-empty feature set");
    let grid = make_grid(&problem.domains, &vec![n - 1; problem.dims()]).expect("valid grid");
    let free_function = FreeFunction::new(kind, m, features, grid.maps.clone());
    Fixture {
        problem,
        expression,
        free_function,
        points: grid.points(),
    }
}

impl Fixture {
    pub fn linearize(&self) -> Linearization {
        linearize(
            &self.expression,
            &self.free_function,
            &self.points,
            self.problem.residual.derivatives(),
        )
        .expect("assembly succeeds")
    }

    /// Linear system at `xi = 0`.
    pub fn system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let lin = self.linearize();
        let (r, a) = residual_and_jacobian(
            &lin,
            self.problem.residual.as_ref(),
            &DVector::zeros(self.free_function.len()),
        );
        (a, -r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let f = fixture(ProblemId::Problem1, BasisKind::Legendre, 5, 5);
        let (a, b) = f.system();
        assert_eq!(a.shape(), (25, 17));
        assert_eq!(b.len(), 25);
    }
}
