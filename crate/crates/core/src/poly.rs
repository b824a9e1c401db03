//! Dense univariate polynomials in the monomial basis.

use std::fmt;

/// `coeffs[i]` multiplies `x^i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    pub fn monomial(power: usize) -> Self {
        let mut c = vec![0.0; power + 1];
        c[power] = 1.0;
        Poly { coeffs: c }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `d^order p / dx^order` evaluated at `x` (Horner on the differentiated
    /// coefficients).
    pub fn eval_derivative(&self, x: f64, order: u32) -> f64 {
        let order = order as usize;
        if order >= self.coeffs.len() {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in (order..self.coeffs.len()).rev() {
            let falling: f64 = ((i - order + 1)..=i).map(|f| f as f64).product();
            acc = acc * x + self.coeffs[i] * falling;
        }
        acc
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + other.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Poly::new(c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*x")?,
                _ => write!(f, "{c}*x^{i}")?,
            }
        }
        Ok(())
    }
}
