//! Univariate and multivariate constrained expressions.
//!
//! Two constructions are provided. [`RecursiveExpression`] applies the
//! univariate expression axis by axis, feeding each result in as the free
//! function of the next axis. [`ConstrainedExpression`] is the equivalent
//! tensor form
//!
//! ```text
//! u(x) = g(x) + M_{i1..in}(x, g) Phi_{i1}(x_1) ... Phi_{in}(x_n)
//! ```
//!
//! where `Phi_k = {1, phi^k_1, .., phi^k_{l_k}}` and `M` is stored as a recipe of
//! projection functionals and signed nested constraint operators.
//!
//! Both are affine in the free function. The tensor form can therefore be
//! expanded at a point into a constant part (all right-hand sides) plus a
//! weighted list of free-function probes, which is what the PDE assembly uses.

use std::collections::HashMap;

use crate::constraints::{
    default_supports, solve_switching, Constraint, SupportBasis, SwitchingSet, SINGULAR_TOL,
};
use crate::error::{Result, TfcError};
use crate::field::{probe, Field};

/// Constraints acting on one axis together with their switching functions.
#[derive(Debug, Clone)]
pub struct AxisConstraintSet {
    pub axis: usize,
    pub constraints: Vec<Constraint>,
    pub switching: Option<SwitchingSet>,
}

impl AxisConstraintSet {
    /// Uses [`default_supports`] to pick the support functions.
    pub fn new(axis: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Ok(AxisConstraintSet::unconstrained(axis));
        }
        let supports = default_supports(&constraints)?;
        AxisConstraintSet::with_supports(axis, constraints, &supports)
    }

    pub fn with_supports(
        axis: usize,
        constraints: Vec<Constraint>,
        supports: &SupportBasis,
    ) -> Result<Self> {
        let switching = solve_switching(&constraints, supports, SINGULAR_TOL)?;
        Ok(AxisConstraintSet {
            axis,
            constraints,
            switching: Some(switching),
        })
    }

    /// Bypasses the solve; the caller vouches for `switching`.
    pub fn with_switching(
        axis: usize,
        constraints: Vec<Constraint>,
        switching: SwitchingSet,
    ) -> Self {
        AxisConstraintSet {
            axis,
            constraints,
            switching: Some(switching),
        }
    }

    pub fn unconstrained(axis: usize) -> Self {
        AxisConstraintSet {
            axis,
            constraints: Vec::new(),
            switching: None,
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn supports(&self) -> Option<&SupportBasis> {
        self.switching.as_ref().map(|s| &s.support)
    }

    /// `d^order phi_j / dx^order` at `x`.
    pub fn phi(&self, j: usize, x: f64, order: u32) -> f64 {
        self.switching
            .as_ref()
            .expect("constrained axis")
            .phi(j)
            .eval_derivative(x, order)
    }
}

/// Calls `visit(weight, point, deriv)` for every combination of terms of the
/// constraints in `ops`, each `(axis, constraint)` fixing its coordinate and
/// adding its derivative order.
fn for_each_term_combo<F>(
    ops: &[(usize, &Constraint)],
    point: &mut [f64],
    deriv: &mut [u32],
    weight: f64,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &[u32]) -> Result<()>,
{
    let Some(((axis, c), rest)) = ops.split_first() else {
        return visit(weight, point, deriv);
    };
    let (saved_x, saved_d) = (point[*axis], deriv[*axis]);
    for t in c.terms() {
        point[*axis] = t.location;
        deriv[*axis] = saved_d + t.deriv_order;
        for_each_term_combo(rest, point, deriv, weight * t.coeff, visit)?;
    }
    point[*axis] = saved_x;
    deriv[*axis] = saved_d;
    Ok(())
}

/// One element of the `M` tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum MEntry {
    Zero,
    /// `rho^axis_constraint`
    Projection {
        axis: usize,
        constraint: usize,
    },
    /// `sign * C^{a1}_{j1}[ C^{a2}_{j2}[ ... rho^h_j ... ]]`
    Intersection {
        operators: Vec<(usize, usize)>,
        rho: (usize, usize),
        sign: f64,
    },
}

/// Shape `(l_1 + 1) x .. x (l_n + 1)`, row-major; index 0 on an axis is the `1` slot of `Phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct MTensorRecipe {
    pub shape: Vec<usize>,
    pub entries: Vec<MEntry>,
}

impl MTensorRecipe {
    fn build(axes: &[AxisConstraintSet]) -> Self {
        let shape: Vec<usize> = axes.iter().map(|a| a.len() + 1).collect();
        let total = shape.iter().product();
        let mut entries = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = unflatten(flat, &shape);
            let active: Vec<usize> = (0..shape.len()).filter(|&k| idx[k] > 0).collect();
            let entry = match active.len() {
                0 => MEntry::Zero,
                1 => MEntry::Projection {
                    axis: active[0],
                    constraint: idx[active[0]] - 1,
                },
                m => {
                    let h = *active.last().expect("m >= 2");
                    let operators = active[..m - 1].iter().map(|&k| (k, idx[k] - 1)).collect();
                    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
                    MEntry::Intersection {
                        operators,
                        rho: (h, idx[h] - 1),
                        sign,
                    }
                }
            };
            entries.push(entry);
        }
        MTensorRecipe { shape, entries }
    }

    pub fn entry(&self, idx: &[usize]) -> &MEntry {
        &self.entries[flatten(idx, &self.shape)]
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (i, s)| acc * s + i)
}

/// Free-function probe `weight * d^deriv g (point)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub weight: f64,
    pub point: Vec<f64>,
    pub deriv: Vec<u32>,
}

/// `d^d u (x) = kappa + sum_p weight_p * d^{deriv_p} g (point_p)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expansion {
    pub kappa: f64,
    pub probes: Vec<Probe>,
}

impl Expansion {
    pub fn apply(&self, g: &dyn Field) -> Result<f64> {
        let mut sum = self.kappa;
        for p in &self.probes {
            sum += p.weight * probe(g, &p.point, &p.deriv)?;
        }
        Ok(sum)
    }

    /// Only the part that depends on the free function.
    pub fn apply_linear(&self, g: &dyn Field) -> Result<f64> {
        let mut sum = 0.0;
        for p in &self.probes {
            sum += p.weight * probe(g, &p.point, &p.deriv)?;
        }
        Ok(sum)
    }
}

/// Hashable identity of a probe location and derivative.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbeKey {
    bits: Vec<u64>,
    deriv: Vec<u32>,
}

impl ProbeKey {
    pub fn new(point: &[f64], deriv: &[u32]) -> Self {
        // -0.0 and 0.0 are the same location
        let bits = point
            .iter()
            .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
            .collect();
        ProbeKey {
            bits,
            deriv: deriv.to_vec(),
        }
    }
}

/// Common interface of the recursive and tensor constructions.
pub trait Embedding: Send + Sync {
    fn dims(&self) -> usize;

    fn axes(&self) -> &[AxisConstraintSet];

    /// `d^d u(x, g)`.
    fn eval(&self, g: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64>;

    /// `C^axis_j[u] - kappa^axis_j` at the cross-axis point `x`.
    fn constraint_residual(&self, g: &dyn Field, axis: usize, j: usize, x: &[f64]) -> Result<f64> {
        let set = &self.axes()[axis];
        let c = &set.constraints[j];
        let zero = vec![0; self.dims()];
        let mut point = x.to_vec();
        let mut deriv = zero.clone();
        let mut lhs = 0.0;
        for t in c.terms() {
            point[axis] = t.location;
            deriv[axis] = t.deriv_order;
            lhs += t.coeff * self.eval(g, &point, &deriv)?;
        }
        Ok(lhs - c.kappa.value(x, &zero)?)
    }
}

/// `u(., g)` viewed as a field so it can be fed back in as a free function.
///
/// Evaluation errors surface as NaN.
pub struct Embedded<'a> {
    pub expr: &'a dyn Embedding,
    pub g: &'a dyn Field,
}

impl Field for Embedded<'_> {
    fn value(&self, x: &[f64], d: &[u32]) -> f64 {
        self.expr.eval(self.g, x, d).unwrap_or(f64::NAN)
    }

    fn max_order(&self) -> Option<u32> {
        self.g.max_order()
    }
}

fn check_axes(axes: &[AxisConstraintSet]) -> Result<()> {
    if axes.is_empty() {
        return Err(TfcError::InvalidArgument(
            "at least one axis is required".into(),
        ));
    }
    for (k, a) in axes.iter().enumerate() {
        if a.axis != k {
            return Err(TfcError::InvalidArgument(format!(
                "axis set at position {k} is labelled axis {}",
                a.axis
            )));
        }
        if a.switching.as_ref().map_or(0, SwitchingSet::len) != a.len() {
            return Err(TfcError::InvalidArgument(format!(
                "axis {k} has no switching functions"
            )));
        }
    }
    Ok(())
}

/// Tensor-form constrained expression.
#[derive(Debug, Clone)]
pub struct ConstrainedExpression {
    axes: Vec<AxisConstraintSet>,
    recipe: MTensorRecipe,
}

pub fn build_univariate(acs: AxisConstraintSet) -> Result<ConstrainedExpression> {
    if acs.axis != 0 {
        return Err(TfcError::InvalidArgument(
            "univariate expression must use axis 0".into(),
        ));
    }
    build_tensor_form(vec![acs])
}

pub fn build_tensor_form(axes: Vec<AxisConstraintSet>) -> Result<ConstrainedExpression> {
    check_axes(&axes)?;
    let recipe = MTensorRecipe::build(&axes);
    Ok(ConstrainedExpression { axes, recipe })
}

impl ConstrainedExpression {
    pub fn recipe(&self) -> &MTensorRecipe {
        &self.recipe
    }

    /// `Phi_k[i]` differentiated `order` times at `x`; `Phi_k[0] = 1`.
    pub fn phi_vector_entry(&self, axis: usize, i: usize, x: f64, order: u32) -> f64 {
        if i == 0 {
            return if order == 0 { 1.0 } else { 0.0 };
        }
        self.axes[axis].phi(i - 1, x, order)
    }

    fn entry_parts(&self, entry: &MEntry) -> Option<(Vec<(usize, usize)>, (usize, usize), f64)> {
        match entry {
            MEntry::Zero => None,
            MEntry::Projection { axis, constraint } => {
                Some((Vec::new(), (*axis, *constraint), 1.0))
            }
            MEntry::Intersection {
                operators,
                rho,
                sign,
            } => Some((operators.clone(), *rho, *sign)),
        }
    }

    /// Visits the pieces of one `M` element: `on_kappa(w, point, deriv, axis, j)`
    /// for right-hand-side evaluations and `on_g(w, point, deriv)` for free-function probes.
    fn walk_entry<K, G>(
        &self,
        operators: &[(usize, usize)],
        rho: (usize, usize),
        sign: f64,
        x: &[f64],
        d: &[u32],
        on_kappa: &mut K,
        on_g: &mut G,
    ) -> Result<()>
    where
        K: FnMut(f64, &[f64], &[u32], &Constraint) -> Result<()>,
        G: FnMut(f64, &[f64], &[u32]) -> Result<()>,
    {
        let mut base = d.to_vec();
        for &(k, _) in operators {
            base[k] = 0;
        }
        base[rho.0] = 0;
        let ops: Vec<(usize, &Constraint)> = operators
            .iter()
            .map(|&(k, j)| (k, &self.axes[k].constraints[j]))
            .collect();
        let rho_c = &self.axes[rho.0].constraints[rho.1];

        let mut point = x.to_vec();
        let mut deriv = base.clone();
        for_each_term_combo(&ops, &mut point, &mut deriv, sign, &mut |w, p, q| {
            on_kappa(w, p, q, rho_c)
        })?;

        let mut all = ops.clone();
        all.push((rho.0, rho_c));
        let mut point = x.to_vec();
        let mut deriv = base;
        for_each_term_combo(&all, &mut point, &mut deriv, -sign, on_g)
    }

    /// Value of `M_idx` (differentiated by `d` along inactive axes) for free function `g`.
    pub fn m_entry(&self, idx: &[usize], g: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64> {
        let Some((ops, rho, sign)) = self.entry_parts(self.recipe.entry(idx)) else {
            return Ok(0.0);
        };
        self.m_entry_from(ops, rho, sign, g, x, d)
    }

    /// Same element, but with the projection functional taken from axis `rho_axis`
    /// and the operators of the other active axes applied to it.
    pub fn m_entry_with_rho_axis(
        &self,
        idx: &[usize],
        rho_axis: usize,
        g: &dyn Field,
        x: &[f64],
        d: &[u32],
    ) -> Result<f64> {
        let active: Vec<usize> = (0..idx.len()).filter(|&k| idx[k] > 0).collect();
        if !active.contains(&rho_axis) {
            return Err(TfcError::InvalidArgument(format!(
                "axis {rho_axis} is not active in {idx:?}"
            )));
        }
        let m = active.len();
        let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
        let ops = active
            .iter()
            .filter(|&&k| k != rho_axis)
            .map(|&k| (k, idx[k] - 1))
            .collect();
        self.m_entry_from(ops, (rho_axis, idx[rho_axis] - 1), sign, g, x, d)
    }

    fn m_entry_from(
        &self,
        ops: Vec<(usize, usize)>,
        rho: (usize, usize),
        sign: f64,
        g: &dyn Field,
        x: &[f64],
        d: &[u32],
    ) -> Result<f64> {
        let mut sum = 0.0;
        let mut sum_g = 0.0;
        self.walk_entry(
            &ops,
            rho,
            sign,
            x,
            d,
            &mut |w, p, q, c| {
                sum += w * c.kappa.value(p, q)?;
                Ok(())
            },
            &mut |w, p, q| {
                sum_g += w * probe(g, p, q)?;
                Ok(())
            },
        )?;
        Ok(sum + sum_g)
    }

    /// Affine expansion of `d^d u(x)` in the free function.
    pub fn expand(&self, x: &[f64], d: &[u32]) -> Result<Expansion> {
        let n = self.axes.len();
        if x.len() != n || d.len() != n {
            return Err(TfcError::InvalidArgument(format!(
                "expected {n}-dimensional point"
            )));
        }
        let mut out = Expansion {
            kappa: 0.0,
            probes: vec![Probe {
                weight: 1.0,
                point: x.to_vec(),
                deriv: d.to_vec(),
            }],
        };
        for (flat, entry) in self.recipe.entries.iter().enumerate() {
            let Some((ops, rho, sign)) = self.entry_parts(entry) else {
                continue;
            };
            let idx = unflatten(flat, &self.recipe.shape);
            let mut phi = 1.0;
            for k in 0..n {
                if idx[k] > 0 {
                    phi *= self.phi_vector_entry(k, idx[k], x[k], d[k]);
                }
            }
            if phi == 0.0 {
                continue;
            }
            let Expansion { kappa, probes } = &mut out;
            self.walk_entry(
                &ops,
                rho,
                sign,
                x,
                d,
                &mut |w, p, q, c| {
                    *kappa += phi * w * c.kappa.value(p, q)?;
                    Ok(())
                },
                &mut |w, p, q| {
                    probes.push(Probe {
                        weight: phi * w,
                        point: p.to_vec(),
                        deriv: q.to_vec(),
                    });
                    Ok(())
                },
            )?;
        }
        Ok(out)
    }

    /// Evaluates many points with one free-function cache.
    pub fn eval_batch(&self, g: &dyn Field, points: &[Vec<f64>], d: &[u32]) -> Result<Vec<f64>> {
        let mut cache: HashMap<ProbeKey, f64> = HashMap::new();
        points
            .iter()
            .map(|x| {
                let e = self.expand(x, d)?;
                let mut sum = e.kappa;
                for p in &e.probes {
                    let key = ProbeKey::new(&p.point, &p.deriv);
                    let v = match cache.get(&key) {
                        Some(v) => *v,
                        None => {
                            let v = probe(g, &p.point, &p.deriv)?;
                            cache.insert(key, v);
                            v
                        }
                    };
                    sum += p.weight * v;
                }
                Ok(sum)
            })
            .collect()
    }
}

impl Embedding for ConstrainedExpression {
    fn dims(&self) -> usize {
        self.axes.len()
    }

    fn axes(&self) -> &[AxisConstraintSet] {
        &self.axes
    }

    fn eval(&self, g: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64> {
        self.expand(x, d)?.apply(g)
    }
}

/// Axis-by-axis composition of univariate constrained expressions.
#[derive(Debug, Clone)]
pub struct RecursiveExpression {
    axes: Vec<AxisConstraintSet>,
    order: Vec<usize>,
}

/// `order` lists the axes in the sequence the univariate expressions are applied.
pub fn build_multivariate_recursive(
    axes: Vec<AxisConstraintSet>,
    order: &[usize],
) -> Result<RecursiveExpression> {
    check_axes(&axes)?;
    let mut seen = vec![false; axes.len()];
    if order.len() != axes.len()
        || order
            .iter()
            .any(|&k| k >= axes.len() || std::mem::replace(&mut seen[k], true))
    {
        return Err(TfcError::InvalidArgument(format!(
            "{order:?} is not a permutation of the axes"
        )));
    }
    Ok(RecursiveExpression {
        axes,
        order: order.to_vec(),
    })
}

impl RecursiveExpression {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn eval_level(&self, level: usize, g: &dyn Field, x: &mut [f64], d: &mut [u32]) -> Result<f64> {
        if level == 0 {
            return probe(g, x, d);
        }
        let k = self.order[level - 1];
        let base = self.eval_level(level - 1, g, x, d)?;
        let set = &self.axes[k];
        if set.is_empty() {
            return Ok(base);
        }
        let (xk, dk) = (x[k], d[k]);
        d[k] = 0;
        let mut sum = base;
        for (j, c) in set.constraints.iter().enumerate() {
            let phi = set.phi(j, xk, dk);
            if phi == 0.0 {
                continue;
            }
            let mut rho = c.kappa.value(x, d)?;
            for t in c.terms() {
                x[k] = t.location;
                d[k] = t.deriv_order;
                rho -= t.coeff * self.eval_level(level - 1, g, x, d)?;
            }
            x[k] = xk;
            d[k] = 0;
            sum += phi * rho;
        }
        d[k] = dk;
        Ok(sum)
    }
}

impl Embedding for RecursiveExpression {
    fn dims(&self) -> usize {
        self.axes.len()
    }

    fn axes(&self) -> &[AxisConstraintSet] {
        &self.axes
    }

    fn eval(&self, g: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64> {
        if x.len() != self.axes.len() || d.len() != self.axes.len() {
            return Err(TfcError::InvalidArgument(format!(
                "expected {}-dimensional point",
                self.axes.len()
            )));
        }
        let mut x = x.to_vec();
        let mut d = d.to_vec();
        self.eval_level(self.order.len(), g, &mut x, &mut d)
    }
}
