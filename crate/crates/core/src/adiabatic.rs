//! Generalized WKB frequencies `Omega_k^(n)` and the multipliers `R_n`, `J_n`.
//!
//! The recursion runs on jets of `S_n = (Omega_k^(n))^2` at the Cauchy time:
//!
//! ```text
//! S_0     = omega_k^2
//! S_{n+1} = omega_k^2 - 3/4 (a'/a)^2 - 3/2 a''/a + 1/16 L_n^2 - 1/4 L_n',   L_n = S_n' / S_n
//! ```
//!
//! Successive differences `D_n = S_{n+1} - S_n` shrink like `omega^(-2n)`, far
//! below the rounding level of `S_n` itself at large `k`. They are therefore
//! carried separately:
//!
//! ```text
//! D_n  = 1/16 dL_n (L_n + L_{n-1}) - 1/4 dL_n',    dL_n = L_n - L_{n-1} = u' / (1 + u),   u = D_{n-1} / S_{n-1}
//! ```
//!
//! which involves only products of small quantities and keeps full relative
//! precision in every difference.

use serde::{Deserialize, Serialize};

use crate::background::{omega_sq_jet, ScaleFactorModel};
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::jet::Jet;

/// Default relative floor `eps` below which `(Omega^(n))^2 < eps omega^2` counts as non-positive.
pub const DEFAULT_FLOOR: f64 = 1e-6;

/// What to do when the recursion drives `(Omega^(n))^2` to or below `eps * omega^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PositivityAction {
    #[default]
    Strict,
    Clamped {
        floor: f64,
    },
}

impl PositivityAction {
    pub fn clamped() -> Self {
        Self::Clamped { floor: DEFAULT_FLOOR }
    }

    fn floor(&self) -> f64 {
        match self {
            Self::Strict => DEFAULT_FLOOR,
            Self::Clamped { floor } => *floor,
        }
    }
}

/// Jet order needed to evaluate the order-`n` frequency and its log-derivative.
pub fn jet_order_for(n: usize) -> usize {
    2 * n + 3
}

/// `(Omega_k^(n))^2` as a jet at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticFrequency {
    pub n: usize,
    pub k: u32,
    pub omega_sq_jet: Jet,
    pub positivity_action: PositivityAction,
    /// Set when the value was lifted to the positivity floor.
    pub clamped: bool,
}

impl AdiabaticFrequency {
    pub fn omega_sq(&self) -> f64 {
        self.omega_sq_jet.value()
    }

    pub fn omega(&self) -> f64 {
        self.omega_sq().sqrt()
    }

    /// `Omega'/Omega = (S'/S) / 2`.
    pub fn log_rate(&self) -> f64 {
        0.5 * self.omega_sq_jet.coeffs()[1] / self.omega_sq()
    }
}

/// All orders `0..=top` of the recursion for one mode at one time.
#[derive(Debug, Clone)]
pub struct AdiabaticLadder {
    k: u32,
    t0: f64,
    hubble_rate: f64,
    /// Jets of `S_n`, `n = 0..=top`; order decreases by two per level.
    squares: Vec<Jet>,
    /// Jets of `L_n = S_n'/S_n`.
    log_rates: Vec<Jet>,
    /// Jets of `D_n = S_{n+1} - S_n`, `n = 0..=top`.
    diffs: Vec<Jet>,
    /// `dL_n(t0) = L_n - L_{n-1}`, `n = 1..=top`, stored at index `n - 1`.
    log_rate_steps: Vec<f64>,
}

impl AdiabaticLadder {
    /// Runs the recursion up to order `top`, also producing `D_top`.
    pub fn build(model: &ScaleFactorModel, k: u32, m: f64, top: usize, t0: f64) -> Result<Self> {
        let d = jet_order_for(top);
        let a = model.jet_at(t0, d)?;
        let da = a.derivative()?;
        let dda = da.derivative()?;
        let h = da.div(&a.truncate(d - 1)?)?;
        let accel = dda.div(&a.truncate(d - 2)?)?;
        // -3/4 (a'/a)^2 - 3/2 a''/a
        let geometric = h.truncate(d - 2)?.square().scale(-0.75).sub(&accel.scale(1.5))?;

        let s0 = omega_sq_jet(model, k, m, t0, d)?;
        let l0 = s0.derivative()?.div(&s0.truncate(d - 1)?)?;
        let d0 = geometric.add(&l0.truncate(d - 2)?.square().scale(1.0 / 16.0))?.sub(&l0.derivative()?.scale(0.25))?;

        let mut squares = vec![s0];
        let mut log_rates = vec![l0];
        let mut diffs = vec![d0];
        let mut log_rate_steps = Vec::with_capacity(top);

        for n in 1..=top {
            let ord = d - 2 * n;
            let s_prev = &squares[n - 1];
            let diff_prev = &diffs[n - 1];
            let s = s_prev.truncate(ord)?.add(diff_prev)?;
            if s.value() == 0.0 {
                return Err(Error::FrequencySquaredNonPositive { k, n, value: 0.0 });
            }
            let l = s.derivative()?.div(&s.truncate(ord - 1)?)?;
            let u = diff_prev.div(&s_prev.truncate(ord)?)?;
            let dl = u.derivative()?.div(&u.truncate(ord - 1)?.add_scalar(1.0))?;
            let l_prev = log_rates[n - 1].truncate(ord - 1)?;
            let dn = dl
                .truncate(ord - 2)?
                .mul(&l.truncate(ord - 2)?.add(&l_prev.truncate(ord - 2)?)?)?
                .scale(1.0 / 16.0)
                .sub(&dl.derivative()?.scale(0.25))?;
            log_rate_steps.push(dl.value());
            squares.push(s);
            log_rates.push(l);
            diffs.push(dn);
        }

        Ok(Self { k, t0, hubble_rate: h.value(), squares, log_rates, diffs, log_rate_steps })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn top(&self) -> usize {
        self.squares.len() - 1
    }

    /// `a'/a` at `t0`.
    pub fn hubble_rate(&self) -> f64 {
        self.hubble_rate
    }

    pub fn omega_sq_jet(&self, n: usize) -> &Jet {
        &self.squares[n]
    }

    /// `(Omega^(n+1))^2 - (Omega^(n))^2` at `t0`.
    pub fn difference(&self, n: usize) -> f64 {
        self.diffs[n].value()
    }

    pub fn log_rate(&self, n: usize) -> f64 {
        self.log_rates[n].value()
    }

    pub fn frequency(&self, n: usize, action: PositivityAction) -> Result<AdiabaticFrequency> {
        let mut jet = self.squares[n].clone();
        let omega_sq = self.squares[0].value();
        let floor = action.floor() * omega_sq;
        let mut clamped = false;
        if !(jet.value() > floor) {
            match action {
                PositivityAction::Strict => {
                    return Err(Error::FrequencySquaredNonPositive { k: self.k, n, value: jet.value() })
                }
                PositivityAction::Clamped { .. } => {
                    let mut coeffs = jet.coeffs().to_vec();
                    coeffs[0] = floor;
                    jet = Jet::new(jet.base_point(), coeffs)?;
                    clamped = true;
                }
            }
        }
        Ok(AdiabaticFrequency { n, k: self.k, omega_sq_jet: jet, positivity_action: action, clamped })
    }

    /// `(r, Omega)` multipliers of `R_n`, `J_n` at `t0`.
    pub fn multipliers(&self, n: usize, action: PositivityAction) -> Result<Multipliers> {
        let f = self.frequency(n, action)?;
        Ok(Multipliers { r: -0.5 * (3.0 * self.hubble_rate + f.log_rate()), omega: f.omega(), clamped: f.clamped })
    }

    /// `(r_{n2} - r_{n1}, Omega_{n2} - Omega_{n1})` summed from the carried differences.
    pub fn gaps(&self, n1: usize, n2: usize, action: PositivityAction) -> Result<(f64, f64)> {
        let p = self.multipliers(n1, action)?;
        let q = self.multipliers(n2, action)?;
        if p.clamped || q.clamped {
            return Ok((q.r - p.r, q.omega - p.omega));
        }
        let (lo, hi, sign) = if n1 <= n2 { (n1, n2, 1.0) } else { (n2, n1, -1.0) };
        let sq: f64 = (lo..hi).map(|j| self.diffs[j].value()).sum();
        let dl: f64 = (lo + 1..=hi).map(|j| self.log_rate_steps[j - 1]).sum();
        Ok((sign * -0.25 * dl, sign * sq / (p.omega + q.omega)))
    }
}

/// Per-mode values of `R_n` and `J_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multipliers {
    pub r: f64,
    pub omega: f64,
    pub clamped: bool,
}

pub fn adiabatic_frequency(
    model: &ScaleFactorModel,
    k: u32,
    m: f64,
    n: usize,
    t0: f64,
    action: PositivityAction,
) -> Result<AdiabaticFrequency> {
    AdiabaticLadder::build(model, k, m, n, t0)?.frequency(n, action)
}

pub fn rj_multipliers(
    model: &ScaleFactorModel,
    k: u32,
    m: f64,
    n: usize,
    t0: f64,
    action: PositivityAction,
) -> Result<Multipliers> {
    AdiabaticLadder::build(model, k, m, n, t0)?.multipliers(n, action)
}

/// One sample of a symbol-order probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub k: u32,
    pub omega: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolProbe {
    pub n: usize,
    pub points: Vec<ProbePoint>,
    pub fit: LineFit,
}

/// Mode indices whose `omega_k(t0)` sit closest to the requested values, deduplicated.
pub fn modes_for_omegas(model: &ScaleFactorModel, m: f64, t0: f64, omegas: &[f64]) -> Vec<u32> {
    let a = model.value(t0);
    let mut ks: Vec<u32> = omegas
        .iter()
        .filter_map(|w| {
            let lap = (a * a * (w * w - m * m)).max(0.0);
            let k = ((1.0 + lap).sqrt() - 1.0).round();
            (k >= 0.0 && k < u32::MAX as f64).then_some(k as u32)
        })
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Fits the slope of `log |(Omega^(n+1))^2 - (Omega^(n))^2|` against `log omega`.
pub fn symbol_order_probe(
    model: &ScaleFactorModel,
    m: f64,
    n: usize,
    t0: f64,
    omega_grid: &[f64],
) -> Result<SymbolProbe> {
    let ks = modes_for_omegas(model, m, t0, omega_grid);
    let points = ks
        .into_iter()
        .map(|k| {
            let ladder = AdiabaticLadder::build(model, k, m, n, t0)?;
            Ok(ProbePoint { k, omega: ladder.omega_sq_jet(0).value().sqrt(), diff: ladder.difference(n) })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.iter().any(|p| !(p.diff.abs() >= f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateFit("frequency difference underflows".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.omega).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.diff.abs()).collect();
    let fit = loglog_fit(&xs, &ys)?;
    Ok(SymbolProbe { n, points, fit })
}

/// Log-spaced grid of `count` points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRICT: PositivityAction = PositivityAction::Strict;

    #[test]
    fn static_background_is_a_fixed_point() {
        let model = ScaleFactorModel::Constant { a: 1.3 };
        for k in [0u32, 1, 7, 100, 500] {
            let ladder = AdiabaticLadder::build(&model, k, 0.8, 6, 0.0).unwrap();
            let w = ladder.omega_sq_jet(0).value().sqrt();
            for n in 0..=6 {
                let mult = ladder.multipliers(n, STRICT).unwrap();
                assert!((mult.omega - w).abs() / w < 1e-12);
                assert_eq!(mult.r, 0.0);
                assert_eq!(ladder.difference(n), 0.0);
            }
        }
    }

    #[test]
    fn order_zero_is_omega_squared() {
        let model = ScaleFactorModel::PowerLaw { p: 0.5, t_ref: -1.0 };
        let f = adiabatic_frequency(&model, 5, 1.0, 0, 0.4, STRICT).unwrap();
        let w2 = omega_sq_jet(&model, 5, 1.0, 0.4, jet_order_for(0)).unwrap();
        assert_eq!(f.omega_sq_jet, w2);
    }

    #[test]
    fn de_sitter_first_order() {
        let h = 0.7;
        let model = ScaleFactorModel::Exponential { hubble: h };
        for k in [1u32, 3, 40] {
            let f1 = adiabatic_frequency(&model, k, 0.0, 1, 0.2, STRICT).unwrap();
            let w2 = omega_sq_jet(&model, k, 0.0, 0.2, 0).unwrap().value();
            let want = w2 - 2.0 * h * h;
            assert!((f1.omega_sq() - want).abs() / want.abs() < 1e-12);
        }
    }

    #[test]
    fn de_sitter_order_zero_multiplier() {
        let h = 0.5;
        let model = ScaleFactorModel::Exponential { hubble: h };
        let mult = rj_multipliers(&model, 4, 0.0, 0, 0.0, STRICT).unwrap();
        assert!((mult.r + h).abs() < 1e-14);
    }

    #[test]
    fn positivity_floor() {
        // de Sitter with H = 1 drives (Omega^(1))^2 negative at k = 0, m = 1.
        let model = ScaleFactorModel::Exponential { hubble: 1.0 };
        let err = adiabatic_frequency(&model, 0, 1.0, 1, 0.0, STRICT).unwrap_err();
        assert!(matches!(err, Error::FrequencySquaredNonPositive { k: 0, n: 1, .. }));
        let f = adiabatic_frequency(&model, 0, 1.0, 1, 0.0, PositivityAction::clamped()).unwrap();
        assert!(f.clamped);
        assert!((f.omega_sq() - DEFAULT_FLOOR).abs() < 1e-12 * DEFAULT_FLOOR);
    }

    #[test]
    fn gaps_match_direct_subtraction_at_low_k() {
        let model = ScaleFactorModel::Exponential { hubble: 0.3 };
        let ladder = AdiabaticLadder::build(&model, 3, 1.0, 3, 0.0).unwrap();
        for (n1, n2) in [(0, 1), (1, 3), (3, 0)] {
            let p = ladder.multipliers(n1, STRICT).unwrap();
            let q = ladder.multipliers(n2, STRICT).unwrap();
            let (dr, dw) = ladder.gaps(n1, n2, STRICT).unwrap();
            assert!((dr - (q.r - p.r)).abs() < 1e-12, "{dr} {}", q.r - p.r);
            assert!((dw - (q.omega - p.omega)).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_degenerate_on_static() {
        let model = ScaleFactorModel::Constant { a: 1.0 };
        let err = symbol_order_probe(&model, 1.0, 1, 0.0, &log_grid(1e2, 1e5, 10)).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(_)));
    }

    #[test]
    fn probe_order_zero_is_bounded() {
        let model = ScaleFactorModel::Exponential { hubble: 1.0 };
        let p = symbol_order_probe(&model, 1.0, 0, 0.0, &log_grid(1e2, 1e5, 16)).unwrap();
        assert!(p.fit.slope.abs() < 0.05, "{:?}", p.fit);
        for pt in &p.points {
            assert!((pt.diff + 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn probe_order_one() {
        let model = ScaleFactorModel::Exponential { hubble: 1.0 };
        let p = symbol_order_probe(&model, 1.0, 1, 0.0, &log_grid(1e2, 1e5, 16)).unwrap();
        assert!(p.fit.slope <= -2.0 + 0.1, "{:?}", p.fit);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e2, 1e5, 4);
        assert!((g[0] - 1e2).abs() < 1e-10 && (g[3] - 1e5).abs() < 1e-6);
        assert!((g[1] - 1e3).abs() < 1e-9);
    }
}
