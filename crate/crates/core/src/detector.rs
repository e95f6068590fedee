//! Response of a comoving monopole detector switched on by a smooth window.
//!
//! Along the worldline at a fixed point of S³ proper time is coordinate time
//! and the spatial coincidence sum of the harmonics is `(k+1)^2 / (2 pi^2)`,
//! so
//!
//! ```text
//! F(E) = sum_{k <= K} (k+1)^2 / (2 pi^2) |int chi(tau) e^{-i E tau} W_k(tau) dtau|^2
//! ```
//!
//! The integral is a trapezoid sum on the solver's uniform dense output; for a
//! smooth compactly supported integrand this converges faster than any power
//! of the grid spacing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::PositivityAction;
use crate::background::{check_mass, ModeChannel, ScaleFactorModel};
use crate::error::{Error, Result};
use crate::fit::{compensated_sum, loglog_fit, LineFit};
use crate::modes::{adiabatic_initial_data, max_frequency, solve_mode, SolveOptions};

/// Samples per period of the fastest combined phase `E + omega_k`.
const SAMPLES_PER_PERIOD: f64 = 16.0;
/// Per-mode quadrature error bound, relative to `int chi |W|`.
pub const QUADRATURE_TOL: f64 = 1e-3;
/// Fewest energies accepted by [`slope_fit`].
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    /// `exp(1 - 1/(1 - x^2))` on `|x| < 1`.
    SmoothBump,
    /// `exp(-x^2 / (2 sigma^2))` times the smooth bump.
    GaussianTruncated { sigma: f64 },
}

/// Switching function `chi`, supported on `[start, end]` with `sup chi = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFunction {
    #[serde(flatten)]
    pub kind: WindowKind,
    pub start: f64,
    pub end: f64,
}

impl WindowFunction {
    pub fn bump(start: f64, end: f64) -> Self {
        Self { kind: WindowKind::SmoothBump, start, end }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.start < self.end) {
            return Err(Error::InvalidParameter("window support must be a finite interval".into()));
        }
        if let WindowKind::GaussianTruncated { sigma } = self.kind {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter("window sigma must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { start: self.start + c, end: self.end + c, ..*self }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let x = (2.0 * tau - self.start - self.end) / (self.end - self.start);
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let bump = (1.0 - 1.0 / (1.0 - x * x)).exp();
        match self.kind {
            WindowKind::SmoothBump => bump,
            WindowKind::GaussianTruncated { sigma } => bump * (-0.5 * x * x / (sigma * sigma)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub cutoff: u32,
    /// `F` truncated at `3K/4`, for the cumulative-cutoff convergence flag.
    pub values_three_quarter: Vec<f64>,
    /// `min_t omega_K(t)` over the window support.
    pub omega_cutoff: f64,
    /// Largest per-mode trapezoid-vs-half-grid discrepancy, relative to `int chi |W|`.
    pub max_quadrature_error: f64,
}

impl ResponseCurve {
    /// Whether the `3K/4` and `K` truncations agree to 1% at each energy.
    pub fn converged(&self) -> Vec<bool> {
        self.values.iter().zip(&self.values_three_quarter).map(|(f, g)| (f - g).abs() <= 1e-2 * f.abs()).collect()
    }

    pub fn cutoff_adequate(&self) -> bool {
        self.energies.iter().all(|e| *e < self.omega_cutoff)
    }
}

#[derive(Debug, Clone)]
pub struct DetectorSetup {
    pub window: WindowFunction,
    pub energies: Vec<f64>,
    pub cutoff: u32,
    pub solver: SolveOptions,
    pub positivity: PositivityAction,
}

/// Per-mode transforms `int chi e^{-iE tau} W_k` for every energy, plus a
/// trapezoid error estimate from the half-resolution grid.
fn mode_transform(
    model: &ScaleFactorModel,
    m: f64,
    n: usize,
    t0: f64,
    k: u32,
    setup: &DetectorSetup,
) -> Result<(Vec<Complex64>, f64)> {
    let win = &setup.window;
    let e_max = setup.energies.iter().cloned().fold(0.0, f64::max);
    let lo = t0.min(win.start);
    let hi = t0.max(win.end);
    let w_max = max_frequency(model, k, m, lo, hi);
    let dt = 2.0 * PI / ((e_max + w_max) * SAMPLES_PER_PERIOD);
    let data = adiabatic_initial_data(model, k, m, n, t0, setup.positivity)?;
    let opts = SolveOptions { sample_dt: Some(dt), ..setup.solver };
    let traj = solve_mode(model, m, &data, (lo, hi), &opts)?;

    let mut taus = Vec::new();
    let mut g = Vec::new();
    let mut scale = 0.0;
    for (tau, w) in traj.times.iter().zip(&traj.w) {
        let chi = win.eval(*tau);
        if chi > 0.0 {
            taus.push(*tau);
            g.push(*w * chi);
            scale += chi * w.norm();
        }
    }
    // trapezoid weights are uniform: chi vanishes at both ends of the support
    let spacing = if traj.len() > 1 { traj.times[1] - traj.times[0] } else { dt };
    scale *= spacing;
    let mut out = Vec::with_capacity(setup.energies.len());
    let mut err: f64 = 0.0;
    for &e in &setup.energies {
        let (full, half) = phase_sums(&taus, &g, e);
        let full = full * spacing;
        let half = half * 2.0 * spacing;
        if scale > 0.0 {
            err = err.max((full - half).norm() / scale);
        }
        out.push(full);
    }
    Ok((out, err))
}

/// `(sum_j g_j e^{-iE tau_j}, sum_{j even} ...)` with the phase re-seeded every 64 samples.
fn phase_sums(taus: &[f64], g: &[Complex64], e: f64) -> (Complex64, Complex64) {
    let mut full = Complex64::new(0.0, 0.0);
    let mut even = Complex64::new(0.0, 0.0);
    if taus.is_empty() {
        return (full, even);
    }
    let step = if taus.len() > 1 { taus[1] - taus[0] } else { 0.0 };
    let rot = Complex64::from_polar(1.0, -e * step);
    for (b, (tb, gb)) in taus.chunks(64).zip(g.chunks(64)).enumerate() {
        let mut ph = Complex64::from_polar(1.0, -e * tb[0]);
        for (i, gi) in gb.iter().enumerate() {
            let term = gi * ph;
            full += term;
            if (b * 64 + i) % 2 == 0 {
                even += term;
            }
            ph *= rot;
        }
    }
    (full, even)
}

/// Detector response of the order-`n` adiabatic state prepared at `t0`.
pub fn detector_response(
    model: &ScaleFactorModel,
    m: f64,
    n: usize,
    t0: f64,
    setup: &DetectorSetup,
) -> Result<ResponseCurve> {
    setup.window.validate()?;
    if setup.energies.is_empty() || setup.energies.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("energies must be positive and finite".into()));
    }
    let k_max = setup.cutoff;
    let e_max = setup.energies.iter().cloned().fold(0.0, f64::max);
    let eig = ModeChannel::new(k_max).eigenvalue();
    let omega_cutoff = (0..=256)
        .map(|i| {
            let t = setup.window.start + (setup.window.end - setup.window.start) * i as f64 / 256.0;
            let a = model.value(t);
            (eig / (a * a) + m * m).sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    if !(omega_cutoff > e_max) {
        return Err(Error::CutoffInadequate { omega_k: omega_cutoff, e_max });
    }
    let k_start = if m == 0.0 { 1 } else { 0 };
    check_mass(k_start, m)?;
    let per_mode = (k_start..=k_max)
        .into_par_iter()
        .map(|k| mode_transform(model, m, n, t0, k, setup).map(|r| (k, r)))
        .collect::<Result<Vec<_>>>()?;

    let k_three_quarter = (3 * k_max) / 4;
    let weight = |k: u32| ModeChannel::new(k).degeneracy() / (2.0 * PI * PI);
    let sum_to = |idx: usize, limit: u32| {
        compensated_sum(
            per_mode.iter().filter(|(k, _)| *k <= limit).map(|(k, (tr, _))| weight(*k) * tr[idx].norm_sqr()),
        )
    };
    let values = (0..setup.energies.len()).map(|i| sum_to(i, k_max)).collect();
    let values_three_quarter = (0..setup.energies.len()).map(|i| sum_to(i, k_three_quarter)).collect();
    let max_quadrature_error = per_mode.iter().map(|(_, (_, e))| *e).fold(0.0, f64::max);
    if max_quadrature_error > QUADRATURE_TOL {
        return Err(Error::ToleranceNotMet(format!(
            "quadrature discrepancy {max_quadrature_error:e} exceeds {QUADRATURE_TOL:e}"
        )));
    }
    Ok(ResponseCurve {
        energies: setup.energies.clone(),
        values,
        cutoff: k_max,
        values_three_quarter,
        omega_cutoff,
        max_quadrature_error,
    })
}

/// Least-squares slope of `log F` against `log E` over `[e_lo, e_hi]`.
pub fn slope_fit(curve: &ResponseCurve, window: (f64, f64)) -> Result<LineFit> {
    if !curve.cutoff_adequate() {
        return Err(Error::CutoffInadequate {
            omega_k: curve.omega_cutoff,
            e_max: curve.energies.iter().cloned().fold(0.0, f64::max),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .energies
        .iter()
        .zip(&curve.values)
        .filter(|(e, _)| **e >= window.0 && **e <= window.1)
        .map(|(e, f)| (*e, *f))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints { got: xs.len(), need: MIN_FIT_POINTS });
    }
    loglog_fit(&xs, &ys)
}

/// `[N - 3/2] = max { j in N_0 : j < N - 3/2 }` for adiabatic order `N = 2n`.
pub fn predicted_decay_exponent(n: usize) -> Option<u32> {
    let bound = 2.0 * n as f64 - 1.5;
    if bound <= 0.0 {
        None
    } else {
        Some((bound.ceil() - 1.0) as u32)
    }
}
