use std::fmt;
use std::sync::Arc;

use crate::expression::AxisConstraintSet;
use crate::field::Field;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Pointwise residual `F(x, u_1, ..., u_r)` where `u_i = d^{D_i} u (x)`.
pub trait Residual: Send + Sync {
    /// The derivative multi-indices `D_i` the residual consumes, in order.
    fn derivatives(&self) -> &[Vec<u32>];

    fn value(&self, x: &[f64], u: &[f64]) -> f64;

    /// `out[i] = dF/du_i`.
    fn gradient(&self, x: &[f64], u: &[f64], out: &mut [f64]);

    fn is_linear(&self) -> bool;
}

/// `F = sum_i a_i(x) u_i - f(x)`.
#[derive(Clone)]
pub struct LinearResidual {
    derivs: Vec<Vec<u32>>,
    coeffs: Vec<PointFn>,
    forcing: PointFn,
}

impl LinearResidual {
    pub fn new(terms: Vec<(Vec<u32>, PointFn)>, forcing: PointFn) -> Self {
        let (derivs, coeffs) = terms.into_iter().unzip();
        LinearResidual {
            derivs,
            coeffs,
            forcing,
        }
    }

    /// Constant-coefficient operator.
    pub fn constant(terms: Vec<(Vec<u32>, f64)>, forcing: PointFn) -> Self {
        let terms = terms
            .into_iter()
            .map(|(d, a)| (d, Arc::new(move |_: &[f64]| a) as PointFn))
            .collect();
        Self::new(terms, forcing)
    }
}

impl Residual for LinearResidual {
    fn derivatives(&self) -> &[Vec<u32>] {
        &self.derivs
    }

    fn value(&self, x: &[f64], u: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(u)
            .map(|(a, ui)| a(x) * ui)
            .sum::<f64>()
            - (self.forcing)(x)
    }

    fn gradient(&self, x: &[f64], _u: &[f64], out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&self.coeffs) {
            *o = a(x);
        }
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Residual given by closures for its value and gradient.
#[derive(Clone)]
pub struct ClosureResidual {
    derivs: Vec<Vec<u32>>,
    value: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>,
}

impl ClosureResidual {
    pub fn new(
        derivs: Vec<Vec<u32>>,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        ClosureResidual {
            derivs,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl Residual for ClosureResidual {
    fn derivatives(&self) -> &[Vec<u32>] {
        &self.derivs
    }

    fn value(&self, x: &[f64], u: &[f64]) -> f64 {
        (self.value)(x, u)
    }

    fn gradient(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        (self.gradient)(x, u, out)
    }

    fn is_linear(&self) -> bool {
        false
    }
}

/// A PDE on a box with constraints on some of its faces.
#[derive(Clone)]
pub struct PdeProblem {
    pub name: String,
    pub domains: Vec<(f64, f64)>,
    pub axes: Vec<AxisConstraintSet>,
    pub residual: Arc<dyn Residual>,
    pub true_solution: Option<Arc<dyn Field>>,
}

impl PdeProblem {
    pub fn dims(&self) -> usize {
        self.domains.len()
    }
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("name", &self.name)
            .field("domains", &self.domains)
            .field("linear", &self.residual.is_linear())
            .finish_non_exhaustive()
    }
}
