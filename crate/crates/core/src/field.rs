//! Scalar fields `f: R^n -> R` that can report arbitrary mixed partials.
//!
//! A [`Field`] is queried with a point and a derivative multi-index `d`,
//! where `d[k]` is the order of differentiation along axis `k`. Free
//! functions, constraint right-hand sides and true solutions all use it.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{Result, TfcError};
use crate::poly::Poly;

pub trait Field: Send + Sync {
    fn value(&self, x: &[f64], d: &[u32]) -> f64;

    /// Highest total derivative order this field can supply; `None` means unbounded.
    fn max_order(&self) -> Option<u32> {
        None
    }
}

impl<F> Field for F
where
    F: Fn(&[f64], &[u32]) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64], d: &[u32]) -> f64 {
        self(x, d)
    }
}

impl Field for Arc<dyn Field> {
    fn value(&self, x: &[f64], d: &[u32]) -> f64 {
        (**self).value(x, d)
    }

    fn max_order(&self) -> Option<u32> {
        (**self).max_order()
    }
}

/// Evaluates `f` after checking it can supply the requested order.
pub fn probe(f: &dyn Field, x: &[f64], d: &[u32]) -> Result<f64> {
    if let Some(available) = f.max_order() {
        let required: u32 = d.iter().sum();
        if required > available {
            return Err(TfcError::Capability {
                required,
                available,
            });
        }
    }
    Ok(f.value(x, d))
}

/// Wraps a field and caps the derivative order it will answer.
pub struct Limited<F> {
    pub inner: F,
    pub max_order: u32,
}

impl<F: Field> Field for Limited<F> {
    fn value(&self, x: &[f64], d: &[u32]) -> f64 {
        self.inner.value(x, d)
    }

    fn max_order(&self) -> Option<u32> {
        Some(self.max_order)
    }
}

/// Univariate building block with closed-form derivatives of every order.
#[derive(Debug, Clone, PartialEq)]
pub enum UniFn {
    Poly(Poly),
    /// `exp(rate * x)`
    Exp {
        rate: f64,
    },
    /// `sin(freq * x + phase)`
    Sin {
        freq: f64,
        phase: f64,
    },
    Product(Box<UniFn>, Box<UniFn>),
}

impl UniFn {
    pub fn one() -> Self {
        UniFn::Poly(Poly::constant(1.0))
    }

    pub fn poly(coeffs: Vec<f64>) -> Self {
        UniFn::Poly(Poly::new(coeffs))
    }

    pub fn exp(rate: f64) -> Self {
        UniFn::Exp { rate }
    }

    pub fn sin(freq: f64) -> Self {
        UniFn::Sin { freq, phase: 0.0 }
    }

    pub fn cos(freq: f64) -> Self {
        UniFn::Sin {
            freq,
            phase: FRAC_PI_2,
        }
    }

    pub fn times(self, other: UniFn) -> Self {
        UniFn::Product(Box::new(self), Box::new(other))
    }

    pub fn derivative(&self, x: f64, d: u32) -> f64 {
        match self {
            UniFn::Poly(p) => p.eval_derivative(x, d),
            UniFn::Exp { rate } => rate.powi(d as i32) * (rate * x).exp(),
            UniFn::Sin { freq, phase } => {
                // Exact cos/sin for the common zero-phase and quarter-turn cases
                // keeps cos(0) == 1 and sin(0) == 0 bit-exact.
                let arg = freq * x;
                let turns = (d as usize + if *phase == FRAC_PI_2 { 1 } else { 0 }) % 4;
                let base = if *phase == 0.0 || *phase == FRAC_PI_2 {
                    match turns {
                        0 => arg.sin(),
                        1 => arg.cos(),
                        2 => -arg.sin(),
                        _ => -arg.cos(),
                    }
                } else {
                    (arg + phase + d as f64 * FRAC_PI_2).sin()
                };
                freq.powi(d as i32) * base
            }
            UniFn::Product(a, b) => {
                let mut sum = 0.0;
                let mut binom = 1.0;
                for i in 0..=d {
                    sum += binom * a.derivative(x, i) * b.derivative(x, d - i);
                    binom = binom * (d - i) as f64 / (i + 1) as f64;
                }
                sum
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }
}

/// Sum of separable products `sum_t c_t prod_k f_{t,k}(x_k)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Separable {
    pub terms: Vec<(f64, Vec<UniFn>)>,
}

impl Separable {
    pub fn new() -> Self {
        Separable::default()
    }

    pub fn term(mut self, coeff: f64, factors: Vec<UniFn>) -> Self {
        self.terms.push((coeff, factors));
        self
    }

    pub fn zero() -> Self {
        Separable::default()
    }
}

impl Field for Separable {
    fn value(&self, x: &[f64], d: &[u32]) -> f64 {
        self.terms
            .iter()
            .map(|(c, factors)| {
                let mut p = *c;
                for (k, f) in factors.iter().enumerate() {
                    if p == 0.0 {
                        break;
                    }
                    p *= f.derivative(x[k], d[k]);
                }
                p
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &UniFn, x: f64, d: u32) -> f64 {
        let h = 1e-5;
        (f.derivative(x + h, d - 1) - f.derivative(x - h, d - 1)) / (2.0 * h)
    }

    #[test]
    fn closed_form_derivatives_agree_with_differences() {
        let fs = [
            UniFn::exp(-1.3),
            UniFn::sin(2.0),
            UniFn::cos(0.7),
            UniFn::Sin {
                freq: 1.5,
                phase: 0.3,
            },
            UniFn::poly(vec![1.0, -2.0, 0.5, 3.0]).times(UniFn::exp(-1.0)),
            UniFn::poly(vec![0.0, 0.0, 1.0]).times(UniFn::sin(std::f64::consts::PI)),
        ];
        for f in &fs {
            for d in 1..4 {
                let x = 0.37;
                let e = f.derivative(x, d);
                assert!(
                    (e - fd(f, x, d)).abs() < 1e-6 * e.abs().max(1.0),
                    "{f:?} d={d}"
                );
            }
        }
    }

    #[test]
    fn cosine_is_exact_at_zero() {
        assert_eq!(UniFn::cos(1.0).eval(0.0), 1.0);
        assert_eq!(UniFn::cos(1.0).derivative(0.0, 1), 0.0);
        assert_eq!(UniFn::sin(3.0).eval(0.0), 0.0);
    }

    #[test]
    fn separable_mixed_partial() {
        // x^2 cos(y)
        let f = Separable::new().term(1.0, vec![UniFn::poly(vec![0.0, 0.0, 1.0]), UniFn::cos(1.0)]);
        let v = f.value(&[2.0, 0.5], &[1, 1]);
        assert!((v - (-4.0 * 0.5f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn limited_field_reports_capability() {
        let f = Limited {
            inner: |_: &[f64], _: &[u32]| 1.0,
            max_order: 1,
        };
        assert!(probe(&f, &[0.0, 0.0], &[1, 0]).is_ok());
        assert_eq!(
            probe(&f, &[0.0, 0.0], &[1, 1]),
            Err(TfcError::Capability {
                required: 2,
                available: 1
            })
        );
    }
}
