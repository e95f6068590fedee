//! Bogoliubov coefficients between quasifree states, mode by mode.
//!
//! With the bracket `<f, g> = i a^3 (conj(f) g' - conj(f') g)` a normalized
//! mode `W` decomposes over a reference mode `V` as `W = alpha V + beta conj(V)`,
//! `alpha = <V, W>`, `beta = -<conj V, W>`. The degeneracy-weighted sum of
//! `|beta_k|^2` is finite exactly when the two Fock representations are
//! unitarily equivalent, which is what the decay diagnostics below probe.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::adiabatic::{AdiabaticLadder, PositivityAction};
use crate::background::{ModeChannel, ScaleFactorModel};
use crate::error::{Error, Result};
use crate::fit::{compensated_sum, loglog_fit, LineFit};
use crate::modes::{adiabatic_initial_data, solve_mode, wronskian, ModeInitialData, SolveOptions};

/// Largest Wronskian defect accepted by [`bogoliubov_from_modes`].
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovPair {
    pub k: u32,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BogoliubovPair {
    /// `| |alpha|^2 - |beta|^2 - 1 |`.
    pub fn unitarity_defect(&self) -> f64 {
        // (|a| - |b|)(|a| + |b|) keeps precision when |beta| is tiny
        let (a, b) = (self.alpha.norm(), self.beta.norm());
        ((a - b) * (a + b) - 1.0).abs()
    }
}

pub fn bracket(a_cubed: f64, f: Complex64, fdot: Complex64, g: Complex64, gdot: Complex64) -> Complex64 {
    Complex64::i() * a_cubed * (f.conj() * gdot - fdot.conj() * g)
}

/// `(alpha, beta)` expressing `w` over the reference mode `v` at their common time.
pub fn bogoliubov_from_modes(v: &ModeInitialData, w: &ModeInitialData, a_cubed: f64) -> Result<BogoliubovPair> {
    if v.t0 != w.t0 || v.k != w.k {
        return Err(Error::InvalidParameter("mode data must share k and time".into()));
    }
    for d in [v, w] {
        // conjugate (negative-norm) modes carry Wronskian -i
        let wr = wronskian(a_cubed, d.w, d.wdot);
        let defect = (wr - Complex64::i()).norm().min((wr + Complex64::i()).norm());
        if !(defect <= NORMALIZATION_TOL) {
            return Err(Error::NotNormalized(defect));
        }
    }
    let alpha = bracket(a_cubed, v.w, v.wdot, w.w, w.wdot);
    let beta = -bracket(a_cubed, v.w.conj(), v.wdot.conj(), w.w, w.wdot);
    Ok(BogoliubovPair { k: v.k, alpha, beta })
}

/// `(alpha, beta)` of the order-`n2` adiabatic state over the order-`n1` one at
/// the ladder's time.
///
/// Uses the closed form for real-phase data,
/// `alpha = (O1 + O2 + i dr) / (2 sqrt(O1 O2))`, `beta = -(dO + i dr) / (2 sqrt(O1 O2))`,
/// with `dr`, `dO` taken from the ladder's carried differences so that
/// `|beta|` keeps relative precision far below `1e-16`.
pub fn bogoliubov_between_orders(
    ladder: &AdiabaticLadder,
    n1: usize,
    n2: usize,
    action: PositivityAction,
) -> Result<BogoliubovPair> {
    let p = ladder.multipliers(n1, action)?;
    let q = ladder.multipliers(n2, action)?;
    let (dr, dw) = ladder.gaps(n1, n2, action)?;
    let norm = 2.0 * (p.omega * q.omega).sqrt();
    Ok(BogoliubovPair {
        k: ladder.k(),
        alpha: Complex64::new(p.omega + q.omega, dr) / norm,
        beta: -Complex64::new(dw, dr) / norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl Verdict {
    /// Banding around the critical exponent 3/2 of `sum k^2 k^(-2p)`.
    pub fn from_exponent(p: f64) -> Self {
        if p > 1.6 {
            Self::Converging
        } else if p < 1.4 {
            Self::Diverging
        } else {
            Self::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDiagnostics {
    pub cutoff: u32,
    pub ks: Vec<u32>,
    pub alpha_abs: Vec<f64>,
    pub beta_abs: Vec<f64>,
    pub unitarity_defects: Vec<f64>,
    /// `S(K) = sum_{k <= K} (k+1)^2 |beta_k|^2` over the scanned `k`.
    pub partial_sums: Vec<f64>,
    /// `None` when every `|beta_k|` is below `1e-14`.
    pub fit: Option<LineFit>,
    /// Decay exponent `p` of `|beta_k| ~ k^(-p)`.
    pub exponent: Option<f64>,
    pub verdict: Verdict,
}

impl TraceDiagnostics {
    pub fn degenerate(&self) -> bool {
        self.fit.is_none()
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitarity_defects.iter().cloned().fold(0.0, f64::max)
    }

    fn from_pairs(pairs: &[BogoliubovPair]) -> Result<Self> {
        let ks: Vec<u32> = pairs.iter().map(|p| p.k).collect();
        let alpha_abs: Vec<f64> = pairs.iter().map(|p| p.alpha.norm()).collect();
        let beta_abs: Vec<f64> = pairs.iter().map(|p| p.beta.norm()).collect();
        let unitarity_defects = pairs.iter().map(|p| p.unitarity_defect()).collect();
        let mut partial_sums = Vec::with_capacity(pairs.len());
        let mut terms = Vec::with_capacity(pairs.len());
        for (k, b) in ks.iter().zip(&beta_abs) {
            terms.push(ModeChannel::new(*k).degeneracy() * b * b);
            partial_sums.push(compensated_sum(terms.iter().copied()));
        }
        let cutoff = ks.last().copied().unwrap_or(0);
        if beta_abs.iter().all(|b| *b < 1e-14) {
            return Ok(Self {
                cutoff,
                ks,
                alpha_abs,
                beta_abs,
                unitarity_defects,
                partial_sums,
                fit: None,
                exponent: None,
                verdict: Verdict::Converging,
            });
        }
        let lo = ks.first().copied().unwrap_or(0);
        let mid = 0.5 * (lo as f64 + cutoff as f64);
        let (xs, ys): (Vec<f64>, Vec<f64>) = ks
            .iter()
            .zip(&beta_abs)
            .filter(|(k, b)| **k as f64 >= mid && **b > 0.0 && **k > 0)
            .map(|(k, b)| (*k as f64, *b))
            .unzip();
        let fit = loglog_fit(&xs, &ys)?;
        let p = -fit.slope;
        Ok(Self {
            cutoff,
            ks,
            alpha_abs,
            beta_abs,
            unitarity_defects,
            partial_sums,
            fit: Some(fit),
            exponent: Some(p),
            verdict: Verdict::from_exponent(p),
        })
    }
}

/// `|beta_k|` between the order-`n1` and order-`n2` adiabatic states at `t0`,
/// for `k` in `k_range` (inclusive), with the decay fit over its upper half.
pub fn order_vs_order_scan(
    model: &ScaleFactorModel,
    m: f64,
    n1: usize,
    n2: usize,
    t0: f64,
    k_range: (u32, u32),
    action: PositivityAction,
) -> Result<TraceDiagnostics> {
    let (lo, hi) = k_range;
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty k range {lo}..={hi}")));
    }
    let top = n1.max(n2);
    let pairs = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let ladder = AdiabaticLadder::build(model, k, m, top, t0)?;
            bogoliubov_between_orders(&ladder, n1, n2, action)
        })
        .collect::<Result<Vec<_>>>()?;
    TraceDiagnostics::from_pairs(&pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleSpectrum {
    pub ks: Vec<u32>,
    pub numbers: Vec<f64>,
    pub unitarity_defects: Vec<f64>,
    /// `sum (k+1)^2 N_k` over the full range.
    pub density: f64,
    /// The same sum cut at the midpoint of the range.
    pub density_half: f64,
    /// Fit of `log N_k` against `log k` over the upper half of the range.
    pub fit: Option<LineFit>,
}

impl ParticleSpectrum {
    /// Relative change of the density between the half and full cutoff.
    pub fn cutoff_sensitivity(&self) -> f64 {
        if self.density == 0.0 {
            0.0
        } else {
            (self.density - self.density_half) / self.density
        }
    }
}

/// Particle content `N_k = |beta_k|^2` of the order-`n` state prepared at `t0`,
/// evolved to `t1` and compared with the order-`n` state prepared at `t1`.
#[allow(clippy::too_many_arguments)]
pub fn particle_number_evolution(
    model: &ScaleFactorModel,
    m: f64,
    n: usize,
    t0: f64,
    t1: f64,
    k_range: (u32, u32),
    opts: &SolveOptions,
    action: PositivityAction,
) -> Result<ParticleSpectrum> {
    let (lo, hi) = k_range;
    if lo > hi || !(t1 >= t0) {
        return Err(Error::InvalidParameter("need t1 >= t0 and a non-empty k range".into()));
    }
    let a1_cubed = model.value(t1).powi(3);
    let pairs = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let fresh = adiabatic_initial_data(model, k, m, n, t1, action)?;
            if t1 == t0 {
                return bogoliubov_from_modes(&fresh, &fresh, a1_cubed);
            }
            let start = adiabatic_initial_data(model, k, m, n, t0, action)?;
            let traj = solve_mode(model, m, &start, (t0, t1), opts)?;
            let mut end = traj.last();
            end.t0 = t1;
            bogoliubov_from_modes(&fresh, &end, a1_cubed)
        })
        .collect::<Result<Vec<_>>>()?;
    let ks: Vec<u32> = pairs.iter().map(|p| p.k).collect();
    let numbers: Vec<f64> = pairs.iter().map(|p| p.beta.norm_sqr()).collect();
    let unitarity_defects = pairs.iter().map(|p| p.unitarity_defect()).collect();
    let weight = |k: &u32| ModeChannel::new(*k).degeneracy();
    let density = compensated_sum(ks.iter().zip(&numbers).map(|(k, n)| weight(k) * n));
    let mid = 0.5 * (lo as f64 + hi as f64);
    let density_half =
        compensated_sum(ks.iter().zip(&numbers).filter(|(k, _)| **k as f64 <= mid).map(|(k, n)| weight(k) * n));
    let (xs, ys): (Vec<f64>, Vec<f64>) = ks
        .iter()
        .zip(&numbers)
        .filter(|(k, n)| **k as f64 >= mid && **n > 0.0 && **k > 0)
        .map(|(k, n)| (*k as f64, *n))
        .unzip();
    let fit = if xs.len() >= 2 { loglog_fit(&xs, &ys).ok() } else { None };
    Ok(ParticleSpectrum { ks, numbers, unitarity_defects, density, density_half, fit })
}
