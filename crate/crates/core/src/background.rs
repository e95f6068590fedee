//! Robertson-Walker background with unit-S³ spatial sections.
//!
//! The whole geometry enters through the scale factor `a(t)`; every model
//! supplies its time derivatives analytically as a [`Jet`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Expansion history `a(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleFactorModel {
    /// `a(t) = a`.
    Constant { a: f64 },
    /// `a(t) = (t - t_ref)^p`, defined for `t > t_ref`.
    PowerLaw { p: f64, t_ref: f64 },
    /// `a(t) = exp(H t)`.
    Exponential { hubble: f64 },
    /// `a(t) = sum_j c_j (t - t_ref)^j`.
    Taylor { coeffs: Vec<f64>, t_ref: f64 },
}

impl ScaleFactorModel {
    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match self {
            Self::Constant { a } => {
                finite(*a, "a")?;
                if *a <= 0.0 {
                    return Err(Error::NonPositiveScaleFactor { t: f64::NAN, value: *a });
                }
            }
            Self::PowerLaw { p, t_ref } => {
                finite(*p, "p")?;
                finite(*t_ref, "t_ref")?;
            }
            Self::Exponential { hubble } => finite(*hubble, "hubble")?,
            Self::Taylor { coeffs, t_ref } => {
                finite(*t_ref, "t_ref")?;
                if coeffs.is_empty() {
                    return Err(Error::InvalidParameter("taylor model needs coefficients".into()));
                }
                for c in coeffs {
                    finite(*c, "taylor coefficient")?;
                }
            }
        }
        Ok(())
    }

    /// `(a(t), da/dt(t))`, for the mode ODE right-hand side.
    pub fn value_and_rate(&self, t: f64) -> (f64, f64) {
        match self {
            Self::Constant { a } => (*a, 0.0),
            Self::PowerLaw { p, t_ref } => {
                let x = t - t_ref;
                let a = x.powf(*p);
                (a, p * a / x)
            }
            Self::Exponential { hubble } => {
                let a = (hubble * t).exp();
                (a, hubble * a)
            }
            Self::Taylor { coeffs, t_ref } => {
                let x = t - t_ref;
                let mut a = 0.0;
                let mut da = 0.0;
                for (j, c) in coeffs.iter().enumerate().rev() {
                    a = a * x + c;
                    if j > 0 {
                        da = da * x + j as f64 * c;
                    }
                }
                (a, da)
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.value_and_rate(t).0
    }

    /// Exact order-`d` Taylor jet of `a` at `t0`.
    pub fn jet_at(&self, t0: f64, d: usize) -> Result<Jet> {
        let coeffs: Vec<f64> = match self {
            Self::Constant { a } => {
                let mut c = vec![0.0; d + 1];
                c[0] = *a;
                c
            }
            Self::PowerLaw { p, t_ref } => {
                let x = t0 - t_ref;
                if !(x > 0.0) {
                    return Err(Error::NonPositiveScaleFactor { t: t0, value: 0.0 });
                }
                // binom(p, j) x^(p - j)
                let mut c = Vec::with_capacity(d + 1);
                let mut b = 1.0;
                for j in 0..=d {
                    if j > 0 {
                        b *= (p - (j - 1) as f64) / j as f64;
                    }
                    c.push(b * x.powf(p - j as f64));
                }
                c
            }
            Self::Exponential { hubble } => {
                let a = (hubble * t0).exp();
                let mut c = Vec::with_capacity(d + 1);
                let mut term = a;
                for j in 0..=d {
                    if j > 0 {
                        term *= hubble / j as f64;
                    }
                    c.push(term);
                }
                c
            }
            Self::Taylor { coeffs, t_ref } => {
                if coeffs.len() < d + 1 {
                    return Err(Error::OrderUnavailable { stored: coeffs.len(), requested: d });
                }
                let x = t0 - t_ref;
                (0..=d)
                    .map(|j| {
                        let mut binom = 1.0;
                        let mut pow = 1.0;
                        let mut s = 0.0;
                        for (i, c) in coeffs.iter().enumerate().skip(j) {
                            if i > j {
                                binom *= i as f64 / (i - j) as f64;
                                pow *= x;
                            }
                            s += c * binom * pow;
                        }
                        s
                    })
                    .collect()
            }
        };
        if !(coeffs[0] > 0.0) {
            return Err(Error::NonPositiveScaleFactor { t: t0, value: coeffs[0] });
        }
        Ok(Jet::new(t0, coeffs)?)
    }
}

/// One eigenspace of the Laplacian on the unit three-sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeChannel {
    pub k: u32,
}

impl ModeChannel {
    pub fn new(k: u32) -> Self {
        Self { k }
    }

    /// `k(k+2)`, minus the Laplace-Beltrami eigenvalue.
    pub fn eigenvalue(&self) -> f64 {
        let k = self.k as f64;
        k * (k + 2.0)
    }

    /// `(k+1)^2` harmonics `(l, m)` with `0 <= l <= k`, `|m| <= l`.
    pub fn degeneracy(&self) -> f64 {
        let k = self.k as f64 + 1.0;
        k * k
    }
}

pub(crate) fn check_mass(k: u32, m: f64) -> Result<()> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::InvalidParameter(format!("mass must be finite and >= 0, got {m}")));
    }
    if m == 0.0 && k == 0 {
        return Err(Error::InvalidParameter("massless k = 0 channel has vanishing frequency".into()));
    }
    Ok(())
}

/// `omega_k(t)^2 = k(k+2)/a^2 + m^2` on the instantaneous slice.
pub fn omega_sq(model: &ScaleFactorModel, k: u32, m: f64, t: f64) -> f64 {
    let a = model.value(t);
    ModeChannel::new(k).eigenvalue() / (a * a) + m * m
}

/// Order-`d` jet of `omega_k(t)^2` at `t0`.
pub fn omega_sq_jet(model: &ScaleFactorModel, k: u32, m: f64, t0: f64, d: usize) -> Result<Jet> {
    check_mass(k, m)?;
    let inv_a = model.jet_at(t0, d)?.recip()?;
    Ok(inv_a.square().scale(ModeChannel::new(k).eigenvalue()).add_scalar(m * m))
}

/// Order-`d` jet of `omega_k(t) = sqrt(k(k+2)/a(t)^2 + m^2)` at `t0`.
pub fn omega_jet(model: &ScaleFactorModel, k: u32, m: f64, t0: f64, d: usize) -> Result<Jet> {
    Ok(omega_sq_jet(model, k, m, t0, d)?.sqrt()?)
}
