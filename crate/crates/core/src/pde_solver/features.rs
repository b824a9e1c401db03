//! Multivariate orthogonal-polynomial free function `g(x) = h(x)^T xi`.

use crate::error::{Result, TfcError};
use crate::expression::AxisConstraintSet;
use crate::field::Field;
use crate::poly_basis::{basis_row, BasisKind, DomainMap};

/// Total-degree-`<= m` exponent tuples, graded then lexicographic, minus the
/// tuples the constrained expression annihilates.
///
/// A tuple is dropped when, on every constrained axis, its degree does not
/// exceed the highest degree among that axis's support functions. Axes
/// without constraints take no part in the test; with no constrained axis at
/// all nothing is dropped.
pub fn build_feature_set(
    m: usize,
    n_dims: usize,
    axes: &[AxisConstraintSet],
) -> Result<Vec<Vec<u32>>> {
    if m < 1 || n_dims < 1 {
        return Err(TfcError::InvalidArgument(format!(
            "need m >= 1 and n >= 1 (got m={m}, n={n_dims})"
        )));
    }
    let caps: Vec<(usize, u32)> = axes
        .iter()
        .filter_map(|a| a.supports().map(|s| (a.axis, s.max_degree() as u32)))
        .collect();
    if caps.iter().any(|&(k, _)| k >= n_dims) {
        return Err(TfcError::InvalidArgument(
            "constraint axis out of range".into(),
        ));
    }

    let mut all = Vec::new();
    let mut cur = vec![0u32; n_dims];
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..=left {
            cur[k] = i;
            rec(k + 1, left - i, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, m as u32, &mut cur, &mut all);
    all.sort_by(|a, b| {
        a.iter()
            .sum::<u32>()
            .cmp(&b.iter().sum())
            .then_with(|| a.cmp(b))
    });

    let features: Vec<Vec<u32>> = all
        .into_iter()
        .filter(|t| caps.is_empty() || !caps.iter().all(|&(k, cap)| t[k] <= cap))
        .collect();
    if features.is_empty() {
        return Err(TfcError::InvalidArgument(format!(
            "no basis functions left at degree {m}"
        )));
    }
    Ok(features)
}

/// Reusable per-axis tables for [`FreeFunction::feature_row`].
#[derive(Debug, Default)]
pub struct RowScratch {
    tables: Vec<Vec<f64>>,
    cascade: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FreeFunction {
    pub kind: BasisKind,
    pub degree: usize,
    pub features: Vec<Vec<u32>>,
    pub maps: Vec<DomainMap>,
    pub xi: Vec<f64>,
}

impl FreeFunction {
    pub fn new(
        kind: BasisKind,
        degree: usize,
        features: Vec<Vec<u32>>,
        maps: Vec<DomainMap>,
    ) -> Self {
        let xi = vec![0.0; features.len()];
        FreeFunction {
            kind,
            degree,
            features,
            maps,
            xi,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// `out[f] = d^d h_f (x)` including the `c_k^{d_k}` chain-rule factors.
    pub fn feature_row(
        &self,
        x: &[f64],
        d: &[u32],
        scratch: &mut RowScratch,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.maps.len();
        scratch.tables.resize_with(n, Vec::new);
        for k in 0..n {
            let map = &self.maps[k];
            let table = &mut scratch.tables[k];
            table.resize(self.degree + 1, 0.0);
            basis_row(
                self.kind,
                self.degree,
                d[k] as usize,
                map.to_z(x[k]),
                &mut scratch.cascade,
                table,
            )?;
            let scale = map.c.powi(d[k] as i32);
            if scale != 1.0 {
                table.iter_mut().for_each(|v| *v *= scale);
            }
        }
        for (o, f) in out.iter_mut().zip(&self.features) {
            let mut v = 1.0;
            for k in 0..n {
                v *= scratch.tables[k][f[k] as usize];
            }
            *o = v;
        }
        Ok(())
    }

    pub fn oracle(&self) -> FreeFunctionOracle<'_> {
        oracle_from_free_function(self)
    }
}

/// `g = h^T xi` as a [`Field`].
pub struct FreeFunctionOracle<'a> {
    ff: &'a FreeFunction,
}

pub fn oracle_from_free_function(ff: &FreeFunction) -> FreeFunctionOracle<'_> {
    FreeFunctionOracle { ff }
}

impl Field for FreeFunctionOracle<'_> {
    fn value(&self, x: &[f64], d: &[u32]) -> f64 {
        let mut scratch = RowScratch::default();
        let mut row = vec![0.0; self.ff.len()];
        match self.ff.feature_row(x, d, &mut scratch, &mut row) {
            Ok(()) => row.iter().zip(&self.ff.xi).map(|(h, c)| h * c).sum(),
            Err(_) => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Constraint;
    use crate::poly_basis::make_map;

    fn two_point_axis(axis: usize) -> AxisConstraintSet {
        AxisConstraintSet::new(
            axis,
            vec![Constraint::value(0.0, 0.0), Constraint::value(1.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn table_counts_for_boundary_value_problems() {
        let axes = [two_point_axis(0), two_point_axis(1)];
        for (m, count) in [(5, 17), (10, 62), (15, 132), (20, 227), (25, 347)] {
            assert_eq!(build_feature_set(m, 2, &axes).unwrap().len(), count);
        }
    }

    #[test]
    fn excluded_tuples_are_the_bilinear_block() {
        let axes = [two_point_axis(0), two_point_axis(1)];
        let f = build_feature_set(5, 2, &axes).unwrap();
        for t in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!(!f.contains(&t.to_vec()));
        }
        assert!(f.contains(&vec![0, 2]));
        assert!(f.contains(&vec![2, 1]));
    }

    #[test]
    fn unconstrained_triangle() {
        let axes = [
            AxisConstraintSet::unconstrained(0),
            AxisConstraintSet::unconstrained(1),
        ];
        let f = build_feature_set(2, 2, &axes).unwrap();
        assert_eq!(f.len(), 6);
        assert_eq!(f[0], vec![0, 0]);
        assert_eq!(build_feature_set(2, 2, &[]).unwrap().len(), 6);
    }

    #[test]
    fn exclusion_emptying_the_set_is_an_error() {
        let axes = [two_point_axis(0)];
        assert!(matches!(
            build_feature_set(1, 1, &axes),
            Err(TfcError::InvalidArgument(_))
        ));
        assert!(build_feature_set(0, 2, &[]).is_err());
    }

    fn sample_ff() -> FreeFunction {
        let maps = vec![
            make_map(0.0, 1.0).unwrap(),
            make_map(0.0, 2.0 * std::f64::consts::PI).unwrap(),
        ];
        let features = build_feature_set(6, 2, &[]).unwrap();
        let mut ff = FreeFunction::new(BasisKind::ChebyshevFirstKind, 6, features, maps);
        for (i, c) in ff.xi.iter_mut().enumerate() {
            *c = ((i * 7919) % 13) as f64 / 13.0 - 0.4;
        }
        ff
    }

    #[test]
    fn constant_feature_has_no_derivatives() {
        let ff = sample_ff();
        let mut row = vec![0.0; ff.len()];
        let mut s = RowScratch::default();
        for d in [[1, 0], [0, 1], [2, 0], [1, 1]] {
            ff.feature_row(&[0.3, 1.0], &d, &mut s, &mut row).unwrap();
            assert_eq!(row[0], 0.0);
        }
    }

    #[test]
    fn mixed_partial_carries_both_map_factors() {
        // h = T1(z_x) T1(z_y) = (2x - 1)(y/pi - 1); d2h/dxdy = 2/pi = c_x c_y
        let ff = sample_ff();
        let idx = ff.features.iter().position(|f| f == &vec![1, 1]).unwrap();
        let mut row = vec![0.0; ff.len()];
        ff.feature_row(&[0.3, 1.7], &[1, 1], &mut RowScratch::default(), &mut row)
            .unwrap();
        let c = ff.maps[0].c * ff.maps[1].c;
        assert!((row[idx] - c).abs() < 1e-15);
        assert!((c - 2.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn oracle_matches_finite_differences() {
        let ff = sample_ff();
        let g = ff.oracle();
        let h = 1e-6;
        let x = [0.41, 2.3];
        for d in [[1u32, 0u32], [0, 1], [2, 0], [1, 1], [0, 2]] {
            let exact = g.value(&x, &d);
            // difference the lower-order partial along the last differentiated axis
            let axis = if d[1] > 0 { 1 } else { 0 };
            let mut lower = d;
            lower[axis] -= 1;
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (g.value(&xp, &lower) - g.value(&xm, &lower)) / (2.0 * h);
            assert!(
                (exact - fd).abs() / exact.abs().max(1.0) < 1e-5,
                "{d:?}: {exact} vs {fd}"
            );
        }
    }
}
