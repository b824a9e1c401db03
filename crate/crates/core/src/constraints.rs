//! Linear constraints along one axis, the constraint operator, support
//! matrices and switching functions.
//!
//! A constraint on axis `k` reads `sum_t coeff_t * d^{order_t} u / dx_k^{order_t} (x_k = loc_t) = kappa`,
//! where `kappa` is a number for univariate problems and a function of the
//! remaining coordinates for multivariate ones.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, TfcError};
use crate::field::{probe, Field};
use crate::poly::Poly;

/// Relative smallest-singular-value threshold below which a support matrix is singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintTerm {
    pub coeff: f64,
    pub deriv_order: u32,
    pub location: f64,
}

impl ConstraintTerm {
    pub fn new(coeff: f64, deriv_order: u32, location: f64) -> Self {
        ConstraintTerm {
            coeff,
            deriv_order,
            location,
        }
    }
}

/// Right-hand side of a constraint.
#[derive(Clone)]
pub enum Kappa {
    Constant(f64),
    /// Function of the other coordinates; its value along the constrained
    /// axis is ignored and its partials along that axis must be zero.
    Field(Arc<dyn Field>),
}

impl Kappa {
    pub fn value(&self, x: &[f64], d: &[u32]) -> Result<f64> {
        match self {
            Kappa::Constant(c) => Ok(if d.iter().all(|&o| o == 0) { *c } else { 0.0 }),
            Kappa::Field(f) => probe(f.as_ref(), x, d),
        }
    }
}

impl fmt::Debug for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Constant(c) => write!(f, "Constant({c})"),
            Kappa::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl From<f64> for Kappa {
    fn from(c: f64) -> Self {
        Kappa::Constant(c)
    }
}

impl<F: Field + 'static> From<Arc<F>> for Kappa {
    fn from(f: Arc<F>) -> Self {
        Kappa::Field(f)
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    terms: Vec<ConstraintTerm>,
    pub kappa: Kappa,
}

impl Constraint {
    pub fn new(terms: Vec<ConstraintTerm>, kappa: impl Into<Kappa>) -> Result<Self> {
        if terms.is_empty() {
            return Err(TfcError::InvalidArgument("constraint has no terms".into()));
        }
        for t in &terms {
            if t.coeff == 0.0 || !t.coeff.is_finite() || !t.location.is_finite() {
                return Err(TfcError::InvalidArgument(format!(
                    "bad constraint term {t:?}"
                )));
            }
        }
        Ok(Constraint {
            terms,
            kappa: kappa.into(),
        })
    }

    /// `u(loc) = kappa`
    pub fn value(location: f64, kappa: impl Into<Kappa>) -> Self {
        Constraint::derivative(0, location, kappa)
    }

    /// `d^order u/dx^order (loc) = kappa`
    pub fn derivative(order: u32, location: f64, kappa: impl Into<Kappa>) -> Self {
        Constraint::new(vec![ConstraintTerm::new(1.0, order, location)], kappa)
            .expect("unit coefficient is valid")
    }

    pub fn terms(&self) -> &[ConstraintTerm] {
        &self.terms
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.deriv_order).max().unwrap_or(0)
    }

    /// The operator applied to a univariate polynomial.
    pub fn apply_poly(&self, p: &Poly) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * p.eval_derivative(t.location, t.deriv_order))
            .sum()
    }

    /// The operator along `axis` applied to `f`, then differentiated by `d`
    /// along the remaining axes. `d[axis]` is ignored.
    pub fn apply(&self, axis: usize, f: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64> {
        let mut point = x.to_vec();
        let mut deriv = d.to_vec();
        let mut sum = 0.0;
        for t in &self.terms {
            point[axis] = t.location;
            deriv[axis] = t.deriv_order;
            sum += t.coeff * probe(f, &point, &deriv)?;
        }
        Ok(sum)
    }

    /// `rho = kappa - C[g]`, differentiated by `d` along the other axes.
    pub fn projection(&self, axis: usize, g: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64> {
        let mut dk = d.to_vec();
        dk[axis] = 0;
        Ok(self.kappa.value(x, &dk)? - self.apply(axis, g, x, &dk)?)
    }
}

/// Applies constraint `c` along `axis` to `f` at the cross-axis point `x`.
pub fn apply_constraint_operator(
    c: &Constraint,
    axis: usize,
    f: &dyn Field,
    x: &[f64],
    d: &[u32],
) -> Result<f64> {
    c.apply(axis, f, x, d)
}

pub fn projection_functional(
    c: &Constraint,
    axis: usize,
    g: &dyn Field,
    x: &[f64],
    d: &[u32],
) -> Result<f64> {
    c.projection(axis, g, x, d)
}

/// Support functions `s_j` as monomial-basis polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBasis {
    pub functions: Vec<Poly>,
}

impl SupportBasis {
    pub fn new(functions: Vec<Poly>) -> Self {
        SupportBasis { functions }
    }

    pub fn monomials(powers: &[usize]) -> Self {
        SupportBasis {
            functions: powers.iter().map(|&p| Poly::monomial(p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Highest polynomial degree among the supports.
    pub fn max_degree(&self) -> usize {
        self.functions.iter().map(Poly::degree).max().unwrap_or(0)
    }
}

impl fmt::Display for SupportBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.functions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let nz: Vec<usize> = (0..p.coeffs().len())
                .filter(|&k| p.coeffs()[k] != 0.0)
                .collect();
            match (nz.as_slice(), p.coeffs()) {
                ([0], [c]) if *c == 1.0 => f.write_str("1")?,
                ([1], [_, c]) if *c == 1.0 => f.write_str("x")?,
                ([k], cs) if cs[*k] == 1.0 => write!(f, "x^{k}")?,
                _ => write!(f, "{p}")?,
            }
        }
        f.write_str("}")
    }
}

/// `S_ij = C_i[s_j]`.
pub fn build_support_matrix(cs: &[Constraint], sb: &SupportBasis) -> DMatrix<f64> {
    DMatrix::from_fn(cs.len(), sb.len(), |i, j| {
        cs[i].apply_poly(&sb.functions[j])
    })
}

fn singular_value_ratio(s: &DMatrix<f64>) -> f64 {
    if s.is_empty() {
        return 1.0;
    }
    let sv = s.clone().singular_values();
    let max = sv.max();
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

/// Support matrix, its inverse and the switching functions of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSet {
    pub support: SupportBasis,
    pub s_matrix: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    phis: Vec<Poly>,
}

impl SwitchingSet {
    fn from_alpha(support: SupportBasis, s_matrix: DMatrix<f64>, alpha: DMatrix<f64>) -> Self {
        let l = support.len();
        let phis = (0..l)
            .map(|i| {
                (0..l).fold(Poly::zero(), |acc, k| {
                    acc.add(&support.functions[k].scale(alpha[(k, i)]))
                })
            })
            .collect();
        SwitchingSet {
            support,
            s_matrix,
            alpha,
            phis,
        }
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }

    /// `phi_j` for `j` in `0..len()`.
    pub fn phi(&self, j: usize) -> &Poly {
        &self.phis[j]
    }

    pub fn phis(&self) -> &[Poly] {
        &self.phis
    }

    /// Copy with `alpha[(i, j)]` shifted by `delta`; used to exercise the
    /// self-checks with a known-bad switching set.
    pub fn corrupted(&self, i: usize, j: usize, delta: f64) -> SwitchingSet {
        let mut alpha = self.alpha.clone();
        alpha[(i, j)] += delta;
        SwitchingSet::from_alpha(self.support.clone(), self.s_matrix.clone(), alpha)
    }

    /// `max_ij |C_i[phi_j] - delta_ij|`.
    pub fn kronecker_defect(&self, cs: &[Constraint]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in cs.iter().enumerate() {
            for (j, phi) in self.phis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((c.apply_poly(phi) - target).abs());
            }
        }
        worst
    }
}

/// Solves `S alpha = I` and forms `phi_i = s_k alpha_ki`.
pub fn solve_switching(cs: &[Constraint], sb: &SupportBasis, tol: f64) -> Result<SwitchingSet> {
    if cs.len() != sb.len() {
        return Err(TfcError::InvalidArgument(format!(
            "{} constraints but {} support functions",
            cs.len(),
            sb.len()
        )));
    }
    let s = build_support_matrix(cs, sb);
    let ratio = singular_value_ratio(&s);
    if !(ratio >= tol) {
        return Err(TfcError::SingularSupport {
            supports: sb.to_string(),
            ratio,
        });
    }
    let alpha = s
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| TfcError::SingularSupport {
            supports: sb.to_string(),
            ratio,
        })?;
    Ok(SwitchingSet::from_alpha(sb.clone(), s, alpha))
}

/// All `l`-subsets of `0..=max_power`, ordered by exponent sum, then lexicographically.
fn monomial_subsets(l: usize, max_power: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, max: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for p in start..=max {
            cur.push(p);
            rec(p + 1, max, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, max_power, l, &mut Vec::with_capacity(l), &mut out);
    out.sort_by(|a, b| {
        a.iter()
            .sum::<usize>()
            .cmp(&b.iter().sum())
            .then_with(|| a.cmp(b))
    });
    out
}

/// Picks the first monomial support set (lowest total degree, then
/// lexicographic) whose support matrix passes the singularity test.
pub fn default_supports(cs: &[Constraint]) -> Result<SupportBasis> {
    let l = cs.len();
    if l == 0 {
        return Err(TfcError::InvalidArgument(
            "no constraints to support".into(),
        ));
    }
    let max_degree = l + 4;
    for powers in monomial_subsets(l, max_degree) {
        let sb = SupportBasis::monomials(&powers);
        if solve_switching(cs, &sb, SINGULAR_TOL).is_ok() {
            return Ok(sb);
        }
    }
    Err(TfcError::NoValidSupport { max_degree })
}
