//! Truncated Taylor expansions ("jets") of scalar functions of time.
//!
//! A jet of order `d` at base point `t0` stores the normalized coefficients
//! `c_j = f^(j)(t0) / j!` for `j = 0..=d`. Arithmetic on jets is the
//! arithmetic of truncated power series, so every derivative carried by a
//! jet is exact up to floating-point rounding.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jets have mismatched base points or orders ({0} vs {1})")]
    Mismatch(String, String),
    #[error("division by a jet with vanishing value")]
    DivisionByZeroJet,
    #[error("square root of a jet with non-positive value {0}")]
    NegativeSqrtJet(f64),
    #[error("jet coefficient is not finite")]
    NonFinite,
    #[error("requested order {requested} exceeds jet order {available}")]
    OrderTooHigh { requested: usize, available: usize },
}

/// Truncated Taylor series of a scalar function at `base_point`.
#[derive(Clone, PartialEq)]
pub struct Jet {
    base_point: f64,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet@{}{:?}", self.base_point, self.coeffs)
    }
}

/// Binary and unary jet operations, used by [`Jet::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Scale(f64),
}

impl Jet {
    /// Builds a jet from normalized Taylor coefficients.
    pub fn new(base_point: f64, coeffs: Vec<f64>) -> Result<Self, JetError> {
        if coeffs.is_empty() || !base_point.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(JetError::NonFinite);
        }
        Ok(Self { base_point, coeffs })
    }

    /// Builds a jet from plain derivatives `f^(j)(t0)`.
    pub fn from_derivatives(base_point: f64, derivs: &[f64]) -> Result<Self, JetError> {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(j, d)| {
                if j > 0 {
                    fact *= j as f64;
                }
                d / fact
            })
            .collect();
        Self::new(base_point, coeffs)
    }

    pub fn constant(base_point: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { base_point, coeffs }
    }

    /// The identity function `t - t0 + t0` expanded at `t0`.
    pub fn variable(base_point: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = base_point;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Self { base_point, coeffs }
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `f^(j)(t0) = j! c_j`.
    pub fn derivative_at(&self, j: usize) -> Result<f64, JetError> {
        let c = self.coeffs.get(j).ok_or(JetError::OrderTooHigh { requested: j, available: self.order() })?;
        Ok(c * (1..=j).map(|i| i as f64).product::<f64>())
    }

    /// Jet of the time derivative; the order drops by one.
    pub fn derivative(&self) -> Result<Jet, JetError> {
        if self.order() == 0 {
            return Err(JetError::OrderTooHigh { requested: 1, available: 0 });
        }
        let coeffs = self.coeffs[1..].iter().enumerate().map(|(j, c)| (j + 1) as f64 * c).collect();
        Ok(Jet { base_point: self.base_point, coeffs })
    }

    pub fn truncate(&self, order: usize) -> Result<Jet, JetError> {
        if order > self.order() {
            return Err(JetError::OrderTooHigh { requested: order, available: self.order() });
        }
        Ok(Jet { base_point: self.base_point, coeffs: self.coeffs[..=order].to_vec() })
    }

    /// Evaluates the truncated polynomial at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t - self.base_point;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn check(&self, other: &Jet) -> Result<(), JetError> {
        if self.base_point != other.base_point || self.order() != other.order() {
            return Err(JetError::Mismatch(
                format!("t0={} d={}", self.base_point, self.order()),
                format!("t0={} d={}", other.base_point, other.order()),
            ));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> Jet {
        Jet { base_point: self.base_point, coeffs }
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        Ok(self.with_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        Ok(self.with_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.with_coeffs(self.coeffs.iter().map(|c| s * c).collect())
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let d = self.order();
        let coeffs = (0..=d).map(|j| (0..=j).map(|i| self.coeffs[i] * other.coeffs[j - i]).sum()).collect();
        Ok(self.with_coeffs(coeffs))
    }

    pub fn square(&self) -> Jet {
        self.mul(self).expect("a jet always matches itself")
    }

    /// Series division, solving `q * other = self` order by order.
    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let b0 = other.coeffs[0];
        if b0 == 0.0 {
            return Err(JetError::DivisionByZeroJet);
        }
        let d = self.order();
        let mut q = vec![0.0; d + 1];
        for j in 0..=d {
            let acc: f64 = (0..j).map(|i| q[i] * other.coeffs[j - i]).sum();
            q[j] = (self.coeffs[j] - acc) / b0;
        }
        Ok(self.with_coeffs(q))
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        Jet::constant(self.base_point, 1.0, self.order()).div(self)
    }

    /// Series square root, solving `s * s = self` order by order.
    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(JetError::NegativeSqrtJet(a0));
        }
        let d = self.order();
        let mut s = vec![0.0; d + 1];
        s[0] = a0.sqrt();
        for j in 1..=d {
            let acc: f64 = (1..j).map(|i| s[i] * s[j - i]).sum();
            s[j] = (self.coeffs[j] - acc) / (2.0 * s[0]);
        }
        Ok(self.with_coeffs(s))
    }

    /// Real power `f^p` via the recurrence for `g = f^p`: `f g' = p f' g`.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(JetError::NegativeSqrtJet(a0));
        }
        let d = self.order();
        let a = &self.coeffs;
        let mut g = vec![0.0; d + 1];
        g[0] = a0.powf(p);
        for j in 1..=d {
            let acc: f64 = (1..=j).map(|i| (p * i as f64 - (j - i) as f64) * a[i] * g[j - i]).sum();
            g[j] = acc / (j as f64 * a0);
        }
        Ok(self.with_coeffs(g))
    }

    pub fn apply(&self, op: JetOp, other: Option<&Jet>) -> Result<Jet, JetError> {
        let rhs = || other.ok_or_else(|| JetError::Mismatch(format!("{op:?}"), "missing operand".into()));
        match op {
            JetOp::Add => self.add(rhs()?),
            JetOp::Sub => self.sub(rhs()?),
            JetOp::Mul => self.mul(rhs()?),
            JetOp::Div => self.div(rhs()?),
            JetOp::Sqrt => self.sqrt(),
            JetOp::Scale(s) => Ok(self.scale(s)),
        }
    }
}
