//! Chebyshev (first kind) and Legendre polynomials on `[-1, 1]`, their
//! derivatives, Chebyshev-Gauss-Lobatto nodes and affine domain maps.
//!
//! Values and derivatives are generated with the three-term recurrences and
//! the derivative cascade obtained by differentiating them `d` times:
//!
//! ```text
//! P^(d)_{k+1} = a_k (d P^(d-1)_k + z P^(d)_k) - b_k P^(d)_{k-1}
//! ```
//!
//! with `a_k = 2, b_k = 1` for Chebyshev and `a_k = (2k+1)/(k+1)`,
//! `b_k = k/(k+1)` for Legendre.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Result, TfcError};

const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    ChebyshevFirstKind,
    Legendre,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::ChebyshevFirstKind => "chebyshev",
            BasisKind::Legendre => "legendre",
        }
    }

    /// Recurrence coefficients `(a_k, b_k)` for `P_{k+1} = a_k z P_k - b_k P_{k-1}`, `k >= 1`.
    #[inline]
    fn recurrence(self, k: usize) -> (f64, f64) {
        match self {
            BasisKind::ChebyshevFirstKind => (2.0, 1.0),
            BasisKind::Legendre => {
                let k = k as f64;
                ((2.0 * k + 1.0) / (k + 1.0), k / (k + 1.0))
            }
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = TfcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chebyshev" | "cheb" => Ok(BasisKind::ChebyshevFirstKind),
            "legendre" | "leg" => Ok(BasisKind::Legendre),
            other => Err(TfcError::InvalidArgument(format!(
                "unknown basis kind '{other}'"
            ))),
        }
    }
}

/// Fills `table[q * (max_degree + 1) + k]` with `d^q P_k / dz^q (z)` for
/// `q = 0..=d` and `k = 0..=max_degree`.
fn cascade(kind: BasisKind, max_degree: usize, d: usize, z: f64, table: &mut [f64]) {
    let w = max_degree + 1;
    debug_assert!(table.len() >= (d + 1) * w);
    for q in 0..=d {
        let (lower, row) = table.split_at_mut(q * w);
        let row = &mut row[..w];
        let prev = if q > 0 {
            Some(&lower[(q - 1) * w..q * w])
        } else {
            None
        };

        row[0] = if q == 0 { 1.0 } else { 0.0 };
        if max_degree >= 1 {
            row[1] = match q {
                0 => z,
                1 => 1.0,
                _ => 0.0,
            };
        }
        for k in 1..max_degree {
            let (a, b) = kind.recurrence(k);
            let carry = match prev {
                Some(p) => q as f64 * p[k],
                None => 0.0,
            };
            row[k + 1] = a * (carry + z * row[k]) - b * row[k - 1];
        }
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(z >= -1.0 - DOMAIN_SLACK && z <= 1.0 + DOMAIN_SLACK) {
        return Err(TfcError::Domain { z });
    }
    Ok(())
}

/// Writes the `d`-th derivative of `P_0..=P_max_degree` at a single `z` into `out`.
///
/// `scratch` is reused between calls; it is resized as needed.
pub fn basis_row(
    kind: BasisKind,
    max_degree: usize,
    d: usize,
    z: f64,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) -> Result<()> {
    check_z(z)?;
    let w = max_degree + 1;
    scratch.resize((d + 1) * w, 0.0);
    cascade(kind, max_degree, d, z, scratch);
    out[..w].copy_from_slice(&scratch[d * w..(d + 1) * w]);
    Ok(())
}

/// Basis values (or derivatives) on a point set: one row per point, one
/// column per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    pub values: DMatrix<f64>,
    pub derivative_order: usize,
    pub kind: BasisKind,
}

pub fn eval_basis(kind: BasisKind, max_degree: usize, d: usize, z: &[f64]) -> Result<EvalMatrix> {
    let w = max_degree + 1;
    let mut values = DMatrix::zeros(z.len(), w);
    let mut scratch = Vec::new();
    let mut row = vec![0.0; w];
    for (i, &zi) in z.iter().enumerate() {
        basis_row(kind, max_degree, d, zi, &mut scratch, &mut row)?;
        for (k, v) in row.iter().enumerate() {
            values[(i, k)] = *v;
        }
    }
    Ok(EvalMatrix {
        values,
        derivative_order: d,
        kind,
    })
}

/// Chebyshev-Gauss-Lobatto nodes `z_j = -cos(j pi / N)`, `j = 0..=N`,
/// increasing, with exact `-1`/`+1` endpoints and exact mirror symmetry.
pub fn cgl_nodes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(TfcError::InvalidArgument("CGL nodes need N >= 1".into()));
    }
    let mut z = vec![0.0; n + 1];
    for j in 0..=n / 2 {
        let v = -(j as f64 * PI / n as f64).cos();
        z[j] = v;
        z[n - j] = -v;
    }
    if n % 2 == 0 {
        z[n / 2] = 0.0;
    }
    z[0] = -1.0;
    z[n] = 1.0;
    Ok(z)
}

/// Affine map between a problem interval `[x_lo, x_hi]` and `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainMap {
    pub x_lo: f64,
    pub x_hi: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    /// `dz/dx`.
    pub c: f64,
}

pub fn make_map(x_lo: f64, x_hi: f64) -> Result<DomainMap> {
    if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
        return Err(TfcError::InvalidArgument(format!(
            "degenerate interval [{x_lo}, {x_hi}]"
        )));
    }
    let (z_lo, z_hi) = (-1.0, 1.0);
    Ok(DomainMap {
        x_lo,
        x_hi,
        z_lo,
        z_hi,
        c: (z_hi - z_lo) / (x_hi - x_lo),
    })
}

impl DomainMap {
    pub fn to_z(&self, x: f64) -> f64 {
        if x == self.x_lo {
            return self.z_lo;
        }
        if x == self.x_hi {
            return self.z_hi;
        }
        self.z_lo + self.c * (x - self.x_lo)
    }

    pub fn to_x(&self, z: f64) -> f64 {
        if z == self.z_lo {
            return self.x_lo;
        }
        if z == self.z_hi {
            return self.x_hi;
        }
        self.x_lo + (z - self.z_lo) / self.c
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Numerical inner product `<P_i, P_j>` under the basis measure.
///
/// Chebyshev integrals are taken after the substitution `z = cos t`, which
/// removes the endpoint singularity of `1/sqrt(1 - z^2)`; Legendre integrals
/// use composite Simpson on a uniform grid. Both use 4000 panels.
pub fn orthogonality_check(kind: BasisKind, i: usize, j: usize) -> f64 {
    const PANELS: usize = 4000;
    let max_degree = i.max(j);
    let mut scratch = Vec::new();
    let mut row = vec![0.0; max_degree + 1];
    let mut integrand = |z: f64| {
        basis_row(
            kind,
            max_degree,
            0,
            z.clamp(-1.0, 1.0),
            &mut scratch,
            &mut row,
        )
        .expect("clamped z is in the domain");
        row[i] * row[j]
    };
    let (a, b, map): (f64, f64, fn(f64) -> f64) = match kind {
        BasisKind::ChebyshevFirstKind => (0.0, PI, f64::cos),
        BasisKind::Legendre => (-1.0, 1.0, |z| z),
    };
    let h = (b - a) / PANELS as f64;
    let mut sum = 0.0;
    for p in 0..=PANELS {
        let w = if p == 0 || p == PANELS {
            1.0
        } else if p % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * integrand(map(a + p as f64 * h));
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn row(kind: BasisKind, m: usize, d: usize, z: f64) -> Vec<f64> {
        let e = eval_basis(kind, m, d, &[z]).unwrap();
        e.values.row(0).iter().copied().collect()
    }

    #[test]
    fn chebyshev_values_at_half() {
        let r = row(BasisKind::ChebyshevFirstKind, 3, 0, 0.5);
        for (a, b) in r.iter().zip([1.0, 0.5, -0.5, -1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn chebyshev_first_derivative_at_half() {
        let r = row(BasisKind::ChebyshevFirstKind, 2, 1, 0.5);
        for (a, b) in r.iter().zip([0.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn legendre_values_at_half() {
        let r = row(BasisKind::Legendre, 2, 0, 0.5);
        for (a, b) in r.iter().zip([1.0, 0.5, -0.125]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn low_columns_vanish_for_higher_derivatives() {
        for kind in [BasisKind::ChebyshevFirstKind, BasisKind::Legendre] {
            for d in 1..4 {
                let r = row(kind, 6, d, 0.3);
                assert_eq!(r[0], 0.0);
                if d >= 2 {
                    assert_eq!(r[1], 0.0);
                }
            }
        }
    }

    #[test]
    fn degree_zero_matrix_has_one_column() {
        let e = eval_basis(BasisKind::Legendre, 0, 0, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(e.values.ncols(), 1);
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn out_of_domain_is_rejected() {
        assert!(matches!(
            eval_basis(BasisKind::ChebyshevFirstKind, 3, 0, &[1.1]),
            Err(TfcError::Domain { .. })
        ));
        assert!(eval_basis(BasisKind::Legendre, 3, 0, &[1.0 + 1e-13]).is_ok());
    }

    #[test]
    fn cgl_examples() {
        assert_eq!(cgl_nodes(2).unwrap(), vec![-1.0, 0.0, 1.0]);
        let z = cgl_nodes(4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in z.iter().zip([-1.0, -h, 0.0, h, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(matches!(cgl_nodes(0), Err(TfcError::InvalidArgument(_))));
    }

    #[test]
    fn cgl_endpoints_symmetry_and_order() {
        for n in 1..40 {
            let z = cgl_nodes(n).unwrap();
            assert_eq!(z.len(), n + 1);
            assert_eq!(z[0], -1.0);
            assert_eq!(z[n], 1.0);
            for j in 0..=n {
                assert_eq!(z[j], -z[n - j]);
            }
            assert!(z.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn map_examples() {
        let m = make_map(0.0, 1.0).unwrap();
        assert_eq!(m.c, 2.0);
        assert_eq!(m.to_z(0.0), -1.0);
        assert_eq!(m.to_z(1.0), 1.0);
        let m = make_map(0.0, 2.0 * PI).unwrap();
        assert_abs_diff_eq!(m.c, 1.0 / PI, epsilon = 1e-16);
        assert_eq!(m.to_z(2.0 * PI), 1.0);
        assert!(make_map(1.0, 1.0).is_err());
        assert!(make_map(2.0, 1.0).is_err());
    }

    #[test]
    fn orthogonality_examples() {
        assert_abs_diff_eq!(
            orthogonality_check(BasisKind::Legendre, 1, 2),
            0.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            orthogonality_check(BasisKind::Legendre, 2, 2),
            0.4,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            orthogonality_check(BasisKind::ChebyshevFirstKind, 0, 0),
            PI,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            orthogonality_check(BasisKind::ChebyshevFirstKind, 3, 3),
            PI / 2.0,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            orthogonality_check(BasisKind::ChebyshevFirstKind, 2, 5),
            0.0,
            epsilon = 1e-8
        );
    }

    proptest! {
        #[test]
        fn chebyshev_matches_trig_closed_form(z in -1.0f64..=1.0) {
            let r = row(BasisKind::ChebyshevFirstKind, 10, 0, z);
            for (k, v) in r.iter().enumerate() {
                let exact = (k as f64 * z.acos()).cos();
                prop_assert!((v - exact).abs() < 1e-12, "k={k} z={z}: {v} vs {exact}");
            }
        }

        #[test]
        fn derivatives_match_finite_differences(z in -0.9f64..0.9, d in 1usize..=2) {
            let h = 1e-6;
            for kind in [BasisKind::ChebyshevFirstKind, BasisKind::Legendre] {
                let exact = row(kind, 10, d, z);
                let plus = row(kind, 10, d - 1, z + h);
                let minus = row(kind, 10, d - 1, z - h);
                for k in 0..=10 {
                    let fd = (plus[k] - minus[k]) / (2.0 * h);
                    let scale = exact[k].abs().max(1.0);
                    prop_assert!((fd - exact[k]).abs() / scale < 1e-5,
                        "{kind} k={k} d={d}: {} vs {fd}", exact[k]);
                }
            }
        }

        #[test]
        fn map_round_trip(lo in -10.0f64..10.0, len in 0.1f64..20.0, t in 0.0f64..=1.0) {
            let m = make_map(lo, lo + len).unwrap();
            let x = lo + t * len;
            prop_assert!((m.to_x(m.to_z(x)) - x).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }
}
