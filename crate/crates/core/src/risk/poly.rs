use crate::error::{Error, Result};

/// `P(x) = a0 Σ_{k=0}^{n−2} x^k + σ² x^{n−1}`, the horizon-`n` variance polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyP {
    a0: f64,
    sigma_next_sq: f64,
    n: usize,
}

impl PolyP {
    pub fn new(a0: f64, sigma_next_sq: f64, n: usize) -> Result<Self> {
        if !(a0 >= 0.0 && a0.is_finite()) {
            return Err(Error::invalid(format!("a0 = {a0} must be non-negative")));
        }
        if !(sigma_next_sq > 0.0 && sigma_next_sq.is_finite()) {
            return Err(Error::invalid("sigma_next^2 must be positive"));
        }
        if n == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Ok(Self {
            a0,
            sigma_next_sq,
            n,
        })
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    /// Horner evaluation; `n = 1` gives `σ²` exactly.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.sigma_next_sq;
        for _ in 1..self.n {
            acc = acc * x + self.a0;
        }
        acc
    }
}
