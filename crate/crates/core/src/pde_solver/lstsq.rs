use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TfcError};

/// Singular values below `PINV_RCOND * sigma_max` are treated as zero.
pub const PINV_RCOND: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub xi: DVector<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
    /// Singular values of `A`, descending.
    pub singular_values: Vec<f64>,
    pub residual_norm: f64,
}

impl LeastSquares {
    pub fn sigma_ratio(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        }
    }
}

/// Minimum-norm least-squares solution of `A xi = b`.
///
/// A thin QR reduces `A` to its triangular factor, whose SVD gives the
/// pseudo-inverse. Singular values below `PINV_RCOND * sigma_max` are
/// discarded, so rank-deficient systems still get a stable answer.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LeastSquares> {
    let (rows, cols) = a.shape();
    if rows != b.len() {
        return Err(TfcError::InvalidArgument(format!(
            "A has {rows} rows but b has {}",
            b.len()
        )));
    }
    if rows < cols {
        return Err(TfcError::InvalidArgument(format!(
            "underdetermined system: {rows} rows < {cols} columns"
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(TfcError::Numerical(
            "non-finite entry in least-squares system".into(),
        ));
    }

    let qr = a.clone().qr();
    let r = qr.r();
    let qtb = qr.q().transpose() * b;
    let svd = r.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(TfcError::Numerical("SVD did not converge".into())),
    };

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cutoff = PINV_RCOND * smax;

    let mut xi = DVector::zeros(cols);
    let mut rank = 0;
    for &i in &order {
        let s = svd.singular_values[i];
        if s <= cutoff || s == 0.0 {
            continue;
        }
        rank += 1;
        let coef = u.column(i).dot(&qtb) / s;
        xi.axpy(coef, &vt.row(i).transpose(), 1.0);
    }

    let residual_norm = (a * &xi - b).norm();
    Ok(LeastSquares {
        xi,
        rank,
        rank_deficient: rank < cols,
        singular_values: sigma,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_square_system() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let ls = least_squares(&a, &DVector::from_vec(vec![3.0, 4.0])).unwrap();
        assert!((ls.xi[0] - 3.0).abs() < 1e-15 && (ls.xi[1] - 2.0).abs() < 1e-15);
        assert_eq!(ls.rank, 2);
        assert!(!ls.rank_deficient);
    }

    #[test]
    fn overdetermined_averages() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let ls = least_squares(&a, &DVector::from_vec(vec![1.0, 3.0])).unwrap();
        assert!((ls.xi[0] - 2.0).abs() < 1e-15);
        assert!((ls.residual_norm - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn duplicate_columns_give_minimum_norm() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let ls = least_squares(&a, &DVector::from_vec(vec![2.0, 2.0])).unwrap();
        assert!((ls.xi[0] - 1.0).abs() < 1e-14 && (ls.xi[1] - 1.0).abs() < 1e-14);
        assert_eq!(ls.rank, 1);
        assert!(ls.rank_deficient);
    }

    #[test]
    fn shape_and_finiteness_checked() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(least_squares(&a, &DVector::from_vec(vec![1.0])).is_err());
        let a = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(matches!(
            least_squares(&a, &DVector::from_vec(vec![1.0, 1.0])),
            Err(TfcError::Numerical(_))
        ));
    }

    #[test]
    fn matches_normal_equations_on_random_full_rank() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = DMatrix::from_fn(30, 6, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
        let ls = least_squares(&a, &b).unwrap();
        let at = a.transpose();
        let normal = (&at * &a).lu().solve(&(&at * &b)).unwrap();
        assert!((ls.xi - normal).amax() < 1e-12);
    }
}
