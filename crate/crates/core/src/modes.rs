//! Mode functions `W_k(t)` of the Klein-Gordon field on the RW background.
//!
//! Each spatial harmonic obeys `W'' + 3 (a'/a) W' + omega_k(t)^2 W = 0`. Mode
//! data is normalized by the Wronskian `a^3 (W conj(W') - conj(W) W') = i`,
//! which is conserved by the equation and is the per-mode symplectic form.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use ode_solvers::dop853::Dop853;
use ode_solvers::dop_shared::{IntegrationError, OutputType};
use ode_solvers::{System, Vector5};

use crate::adiabatic::{AdiabaticLadder, Multipliers, PositivityAction};
use crate::background::{check_mass, ModeChannel, ScaleFactorModel};
use crate::error::{Error, Result};

/// Cauchy data `(W, W')` of one mode at time `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeInitialData {
    pub k: u32,
    pub t0: f64,
    pub w: Complex64,
    pub wdot: Complex64,
}

/// `a^3 (f conj(g') - conj(f) g')`-style Wronskian of a single mode with itself.
pub fn wronskian(a_cubed: f64, w: Complex64, wdot: Complex64) -> Complex64 {
    a_cubed * (w * wdot.conj() - w.conj() * wdot)
}

impl ModeInitialData {
    /// Mode data of the state with multipliers `(r, Omega)`: `W = (2 a^3 Omega)^(-1/2)`, `W' = (r - i Omega) W`.
    pub fn from_multipliers(k: u32, t0: f64, a: f64, mult: Multipliers) -> Self {
        let w = (2.0 * a.powi(3) * mult.omega).sqrt().recip();
        let w = Complex64::new(w, 0.0);
        Self { k, t0, w, wdot: Complex64::new(mult.r, -mult.omega) * w }
    }

    /// Deviation of the Wronskian from `i`.
    pub fn normalization_defect(&self, model: &ScaleFactorModel) -> f64 {
        let a = model.value(self.t0);
        (wronskian(a.powi(3), self.w, self.wdot) - Complex64::i()).norm()
    }

    pub fn conj(&self) -> Self {
        Self { w: self.w.conj(), wdot: self.wdot.conj(), ..*self }
    }
}

/// Order-`n` adiabatic mode data at `t0`, real positive `W(t0)`.
pub fn adiabatic_initial_data(
    model: &ScaleFactorModel,
    k: u32,
    m: f64,
    n: usize,
    t0: f64,
    action: PositivityAction,
) -> Result<ModeInitialData> {
    let mult = AdiabaticLadder::build(model, k, m, n, t0)?.multipliers(n, action)?;
    Ok(ModeInitialData::from_multipliers(k, t0, model.value(t0), mult))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative and absolute tolerance on the scaled state.
    pub tol: f64,
    /// Spacing of the dense output grid; `None` picks 20 samples per shortest period.
    pub sample_dt: Option<f64>,
    /// Largest Wronskian drift accepted before reporting `ToleranceNotMet`.
    pub max_drift: Option<f64>,
    pub max_steps: u32,
    /// Step-size cap expressed as steps per shortest period of `omega_k`.
    pub steps_per_period: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, sample_dt: None, max_drift: None, max_steps: 5_000_000, steps_per_period: 20.0 }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorStats {
    pub steps: u64,
    pub rejected_steps: u64,
    pub evaluations: u64,
    pub max_wronskian_drift: f64,
}

/// Sampled solution of one mode equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectory {
    pub k: u32,
    pub times: Vec<f64>,
    pub w: Vec<Complex64>,
    pub wdot: Vec<Complex64>,
    pub drift: Vec<f64>,
    pub stats: IntegratorStats,
}

impl ModeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample(&self, i: usize) -> ModeInitialData {
        ModeInitialData { k: self.k, t0: self.times[i], w: self.w[i], wdot: self.wdot[i] }
    }

    pub fn last(&self) -> ModeInitialData {
        self.sample(self.len() - 1)
    }

    /// Writes `t, Re W, Im W, Re W', Im W', wronskian_drift` rows.
    pub fn write_csv<Wr: Write>(&self, mut out: Wr) -> std::io::Result<()> {
        writeln!(out, "t,re_w,im_w,re_wdot,im_wdot,wronskian_drift")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                crate::output::fmt_f64(self.times[i]),
                crate::output::fmt_f64(self.w[i].re),
                crate::output::fmt_f64(self.w[i].im),
                crate::output::fmt_f64(self.wdot[i].re),
                crate::output::fmt_f64(self.wdot[i].im),
                crate::output::fmt_f64(self.drift[i]),
            )?;
        }
        Ok(())
    }
}

/// Mode equation in the scaled variables `y = (W / s, W' / (s nu))`, run
/// forward in `u >= 0` with `t = t0 + dir * u`.
///
/// `u` itself is carried as `y[4]`, so the system is autonomous: the
/// backing DOP853 table places its twelfth stage at the wrong abscissa, which
/// only matters when the right-hand side reads the independent variable.
struct ModeEquation<'a> {
    model: &'a ScaleFactorModel,
    eigenvalue: f64,
    mass_sq: f64,
    t0: f64,
    dir: f64,
    nu: f64,
}

impl System<f64, Vector5<f64>> for ModeEquation<'_> {
    fn system(&self, _u: f64, y: &Vector5<f64>, dy: &mut Vector5<f64>) {
        let t = self.t0 + self.dir * y[4];
        let (a, da) = self.model.value_and_rate(t);
        let h = da / a;
        let w2 = self.eigenvalue / (a * a) + self.mass_sq;
        let c = self.dir * w2 / self.nu;
        dy[0] = self.dir * self.nu * y[2];
        dy[1] = self.dir * self.nu * y[3];
        dy[2] = -self.dir * 3.0 * h * y[2] - c * y[0];
        dy[3] = -self.dir * 3.0 * h * y[3] - c * y[1];
        dy[4] = 1.0;
    }
}

/// Largest `omega_k(t)` over `[lo, hi]`, from a fine scan.
pub fn max_frequency(model: &ScaleFactorModel, k: u32, m: f64, lo: f64, hi: f64) -> f64 {
    let eig = ModeChannel::new(k).eigenvalue();
    (0..=256)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / 256.0;
            let a = model.value(t);
            (eig / (a * a) + m * m).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Times, `W`, `W'` and counters of one integration leg.
type Leg = (Vec<f64>, Vec<Complex64>, Vec<Complex64>, IntegratorStats);

fn integrate_leg(
    model: &ScaleFactorModel,
    m: f64,
    data: &ModeInitialData,
    t_end: f64,
    opts: &SolveOptions,
    dt: f64,
    h_max: f64,
) -> Result<Leg> {
    let span = (t_end - data.t0).abs();
    let dir = if t_end >= data.t0 { 1.0 } else { -1.0 };
    let steps = (span / dt).ceil().max(1.0);
    let dx = span / steps;
    let s = data.w.norm().max(f64::MIN_POSITIVE);
    let nu = (data.wdot.norm() / s).max(1e-300);
    let eq =
        ModeEquation { model, eigenvalue: ModeChannel::new(data.k).eigenvalue(), mass_sq: m * m, t0: data.t0, dir, nu };
    let y0 = Vector5::new(data.w.re / s, data.w.im / s, data.wdot.re / (s * nu), data.wdot.im / (s * nu), 0.0);
    // The dense output at the final step boundary is unreliable, so run half a
    // sample past the end and keep only grid points inside the span.
    let mut solver = Dop853::from_param(
        eq,
        0.0,
        span + 0.5 * dx,
        dx,
        y0,
        opts.tol,
        opts.tol,
        0.9,
        0.0,
        0.333,
        6.0,
        h_max,
        0.0,
        opts.max_steps,
        u32::MAX,
        OutputType::Dense,
    );
    let stats = solver.integrate().map_err(|e| match e {
        IntegrationError::StepSizeUnderflow { x } => Error::StepSizeUnderflow(data.t0 + dir * x),
        IntegrationError::MaxNumStepReached { x, n_step } => {
            Error::ToleranceNotMet(format!("step budget {n_step} exhausted at t = {}", data.t0 + dir * x))
        }
        IntegrationError::StiffnessDetected { x } => Error::StepSizeUnderflow(data.t0 + dir * x),
    })?;
    let (us, ys) = solver.results().get();
    let mut times = Vec::with_capacity(us.len());
    let mut w = Vec::with_capacity(us.len());
    let mut wdot = Vec::with_capacity(us.len());
    for (u, y) in us.iter().zip(ys) {
        if *u > span * (1.0 + 1e-12) {
            break;
        }
        times.push(data.t0 + dir * u);
        w.push(Complex64::new(y[0], y[1]) * s);
        wdot.push(Complex64::new(y[2], y[3]) * (s * nu));
    }
    let st = IntegratorStats {
        steps: stats.accepted_steps as u64,
        rejected_steps: stats.rejected_steps as u64,
        evaluations: stats.num_eval as u64,
        max_wronskian_drift: 0.0,
    };
    Ok((times, w, wdot, st))
}

/// Integrates the mode equation over `t_span`, which must contain `data.t0`.
pub fn solve_mode(
    model: &ScaleFactorModel,
    m: f64,
    data: &ModeInitialData,
    t_span: (f64, f64),
    opts: &SolveOptions,
) -> Result<ModeTrajectory> {
    let (lo, hi) = t_span;
    check_mass(data.k, m)?;
    if !(opts.tol > 0.0) || !(opts.steps_per_period > 0.0) || !(lo <= data.t0 && data.t0 <= hi) || !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "t_span ({lo}, {hi}) must contain t0 = {} and tol must be positive",
            data.t0
        )));
    }
    let w_max = max_frequency(model, data.k, m, lo, hi);
    let period = 2.0 * PI / w_max;
    let h_max = period / opts.steps_per_period;
    let dt = opts.sample_dt.unwrap_or(period / 20.0);

    let mut times = Vec::new();
    let mut w = Vec::new();
    let mut wdot = Vec::new();
    let mut stats = IntegratorStats::default();
    if lo < data.t0 {
        let (t, a, b, st) = integrate_leg(model, m, data, lo, opts, dt, h_max)?;
        // reversed, dropping the duplicate t0 sample
        times.extend(t.into_iter().skip(1).rev());
        w.extend(a.into_iter().skip(1).rev());
        wdot.extend(b.into_iter().skip(1).rev());
        stats.steps += st.steps;
        stats.rejected_steps += st.rejected_steps;
        stats.evaluations += st.evaluations;
    }
    if hi > data.t0 {
        let (t, a, b, st) = integrate_leg(model, m, data, hi, opts, dt, h_max)?;
        times.extend(t);
        w.extend(a);
        wdot.extend(b);
        stats.steps += st.steps;
        stats.rejected_steps += st.rejected_steps;
        stats.evaluations += st.evaluations;
    } else {
        times.push(data.t0);
        w.push(data.w);
        wdot.push(data.wdot);
    }

    let reference = wronskian(model.value(data.t0).powi(3), data.w, data.wdot);
    let drift: Vec<f64> = times
        .iter()
        .zip(w.iter().zip(&wdot))
        .map(|(t, (x, dx))| (wronskian(model.value(*t).powi(3), *x, *dx) - reference).norm())
        .collect();
    stats.max_wronskian_drift = drift.iter().cloned().fold(0.0, f64::max);
    let limit = opts.max_drift.unwrap_or(1e4 * opts.tol * (1.0 + (hi - lo)));
    if stats.max_wronskian_drift > limit {
        return Err(Error::ToleranceNotMet(format!(
            "Wronskian drift {:e} exceeds {:e}",
            stats.max_wronskian_drift, limit
        )));
    }
    Ok(ModeTrajectory { k: data.k, times, w, wdot, drift, stats })
}
