//! Experiment suites run by the command line, their checks and artifacts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::adiabatic::{log_grid, symbol_order_probe, AdiabaticLadder};
use crate::background::{ModeChannel, ScaleFactorModel};
use crate::bogoliubov::{order_vs_order_scan, particle_number_evolution};
use crate::config::ExperimentConfig;
use crate::detector::{detector_response, predicted_decay_exponent, slope_fit, DetectorSetup, ResponseCurve};
use crate::error::{Error, Result};
use crate::modes::{adiabatic_initial_data, solve_mode, SolveOptions};
use crate::output::{write_table, Cell};
use crate::states::{mu_sobolev_ratio, random_ensemble, ModeQuasifreeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Suite {
    Frequencies,
    SymbolOrders,
    Modes,
    Bogoliubov,
    ParticleNumbers,
    Detector,
    Invariants,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Frequencies,
        Suite::SymbolOrders,
        Suite::Modes,
        Suite::Bogoliubov,
        Suite::ParticleNumbers,
        Suite::Detector,
        Suite::Invariants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Frequencies => "frequencies",
            Suite::SymbolOrders => "symbol_orders",
            Suite::Modes => "modes",
            Suite::Bogoliubov => "bogoliubov",
            Suite::ParticleNumbers => "particle_numbers",
            Suite::Detector => "detector",
            Suite::Invariants => "invariants",
            Suite::All => "all",
        }
    }
}

/// One asserted quantity: passes iff `value <relation> threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub skipped: bool,
    pub checks: Vec<Check>,
    pub summary: Value,
    pub error: Option<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self { suite: suite.name(), passed: true, skipped: false, checks: Vec::new(), summary: json!({}), error: None }
    }

    fn push(&mut self, name: impl Into<String>, value: f64, relation: &'static str, threshold: f64) {
        let passed = match relation {
            "<" => value < threshold,
            "<=" => value <= threshold,
            ">" => value > threshold,
            ">=" => value >= threshold,
            _ => false,
        };
        self.passed &= passed;
        self.checks.push(Check { name: name.into(), value, relation, threshold, passed });
    }

    fn note(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.summary {
            map.insert(key.into(), value);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Output directory plus the record of everything written to it.
pub struct Artifacts {
    dir: PathBuf,
    pub files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        let sha256 = hex::encode(Sha256::digest(bytes));
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.into(), sha256 });
        Ok(())
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let mut buf = Vec::new();
        write_table(&mut buf, header, rows)?;
        self.write_bytes(name, &buf)
    }
}

/// Runs one suite; failures of the computation itself are recorded in the report.
pub fn run_suite(cfg: &ExperimentConfig, suite: Suite, out: &mut Artifacts) -> SuiteReport {
    let mut report = SuiteReport::new(suite);
    let res = match suite {
        Suite::Frequencies => frequencies(cfg, out, &mut report),
        Suite::SymbolOrders => symbol_orders(cfg, out, &mut report),
        Suite::Modes => modes(cfg, out, &mut report),
        Suite::Bogoliubov => bogoliubov(cfg, out, &mut report),
        Suite::ParticleNumbers => particle_numbers(cfg, out, &mut report),
        Suite::Detector => detector(cfg, out, &mut report),
        Suite::Invariants => invariants(cfg, out, &mut report),
        Suite::All => Err(Error::InvalidParameter("`all` is expanded by the caller".into())),
    };
    if let Err(e) = res {
        report.passed = false;
        report.error = Some(e.to_string());
    }
    report
}

fn is_static(model: &ScaleFactorModel) -> bool {
    matches!(model, ScaleFactorModel::Constant { .. })
}

fn max_of<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn frequencies(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let model = &cfg.background;
    let orders = cfg.sorted_orders();
    let top = *orders.last().unwrap_or(&0);
    let action = cfg.positivity_action;
    let mut rows = Vec::new();
    let mut fixed_point: f64 = 0.0;
    let mut clamped = 0usize;
    for k in cfg.channels() {
        let ladder = AdiabaticLadder::build(model, k, cfg.mass, top, cfg.t0)?;
        let w2 = ladder.omega_sq_jet(0).value();
        for &n in &orders {
            let f = ladder.frequency(n, action)?;
            let mult = ladder.multipliers(n, action)?;
            fixed_point = fixed_point.max((f.omega() - w2.sqrt()).abs() / w2.sqrt());
            clamped += f.clamped as usize;
            rows.push(vec![
                k.into(),
                n.into(),
                w2.into(),
                f.omega_sq().into(),
                f.omega().into(),
                mult.r.into(),
                f.clamped.into(),
            ]);
        }
    }
    let finite = rows.iter().flatten().all(|c| !matches!(c, Cell::Float(x) if !x.is_finite()));
    out.table("frequencies.csv", &["k", "n", "omega_sq", "omega_n_sq", "omega_n", "r", "clamped"], &rows)?;
    rep.push("all_values_finite", finite as u8 as f64, ">=", 1.0);
    rep.note("clamped_channels", json!(clamped));
    if is_static(model) {
        rep.push("static_fixed_point_rel_err", fixed_point, "<", 1e-12);
    }
    if let ScaleFactorModel::Exponential { hubble } = model {
        // massless de Sitter: (Omega^(1))^2 = omega^2 - 2 H^2
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for k in cfg.channels().into_iter().filter(|k| *k >= 1) {
            let ladder = AdiabaticLadder::build(model, k, 0.0, 1, cfg.t0)?;
            let w2 = ladder.omega_sq_jet(0).value();
            let s1 = ladder.omega_sq_jet(1).value();
            let closed = w2 - 2.0 * hubble * hubble;
            let rel = ((s1 - closed) / closed).abs();
            worst = worst.max(rel);
            rows.push(vec![k.into(), w2.into(), s1.into(), closed.into(), rel.into()]);
        }
        out.table("frequencies_massless.csv", &["k", "omega_sq", "omega_1_sq", "closed_form", "rel_err"], &rows)?;
        rep.push("massless_closed_form_rel_err", worst, "<", 1e-12);
    }
    Ok(())
}

fn symbol_orders(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let sc = &cfg.symbol;
    let grid = log_grid(sc.omega_min, sc.omega_max, sc.points);
    let mut rows = Vec::new();
    let mut fits = serde_json::Map::new();
    for n in cfg.sorted_orders().into_iter().filter(|n| *n >= 1) {
        match symbol_order_probe(&cfg.background, cfg.mass, n, cfg.t0, &grid) {
            Ok(probe) => {
                for p in &probe.points {
                    rows.push(vec![n.into(), p.k.into(), p.omega.into(), p.diff.abs().into()]);
                }
                rep.push(format!("slope_n{n}"), probe.fit.slope, "<=", -2.0 * n as f64 + sc.slope_margin);
                fits.insert(format!("n{n}"), json!(probe.fit));
            }
            Err(Error::DegenerateFit(_)) if is_static(&cfg.background) => {
                // every difference vanishes on a static background
                fits.insert(format!("n{n}"), Value::Null);
            }
            Err(e) => return Err(e),
        }
    }
    out.table("symbol_orders.csv", &["n", "k", "omega", "abs_diff"], &rows)?;
    rep.note("fits", Value::Object(fits));
    Ok(())
}

fn modes(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let model = &cfg.background;
    let (lo, hi) = cfg.working_interval();
    let opts = SolveOptions { max_drift: Some(f64::INFINITY), ..SolveOptions::with_tol(cfg.solver.tol) };
    let jobs: Vec<(usize, u32)> =
        cfg.sorted_orders().into_iter().flat_map(|n| cfg.channels().into_iter().map(move |k| (n, k))).collect();
    let trajs = jobs
        .par_iter()
        .map(|&(n, k)| {
            let d = adiabatic_initial_data(model, k, cfg.mass, n, cfg.t0, cfg.positivity_action)?;
            solve_mode(model, cfg.mass, &d, (lo, hi), &opts).map(|t| (d, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let span = (hi - lo).max(1.0);
    let mut worst_drift: f64 = 0.0;
    let mut worst_static: f64 = 0.0;
    let mut stats = Vec::new();
    for ((n, k), (d, traj)) in jobs.iter().zip(&trajs) {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        out.write_bytes(&format!("modes_n{n}_k{k}.csv"), &buf)?;
        worst_drift = worst_drift.max(traj.stats.max_wronskian_drift / span);
        if is_static(model) {
            let a = model.value(cfg.t0);
            let w = (ModeChannel::new(*k).eigenvalue() / (a * a) + cfg.mass * cfg.mass).sqrt();
            // over the first 20 periods of the channel
            for (t, x) in traj.times.iter().zip(&traj.w).filter(|(t, _)| w * (*t - cfg.t0).abs() <= 40.0 * PI) {
                let exact = d.w * Complex64::from_polar(1.0, -w * (t - cfg.t0));
                worst_static = worst_static.max((x - exact).norm() / exact.norm());
            }
        }
        stats.push(json!({
            "n": n, "k": k, "steps": traj.stats.steps, "rejected_steps": traj.stats.rejected_steps,
            "max_wronskian_drift": traj.stats.max_wronskian_drift,
        }));
    }
    rep.push("max_wronskian_drift_per_unit_time", worst_drift, "<", cfg.solver.max_drift_rate);
    if is_static(model) {
        rep.push("static_exact_solution_rel_err", worst_static, "<", 10.0 * cfg.solver.tol);
    }
    rep.note("trajectories", Value::Array(stats));
    Ok(())
}

fn bogoliubov(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let model = &cfg.background;
    let range = (cfg.modes.k_min, cfg.modes.k_max);
    let orders = cfg.sorted_orders();
    let mut worst_unitarity: f64 = 0.0;
    let mut worst_symmetry: f64 = 0.0;
    let mut worst_beta: f64 = 0.0;
    let mut pairs = 0usize;
    let mut exponents: Vec<(usize, f64)> = Vec::new();
    let mut summary = Vec::new();
    for w in orders.windows(2) {
        let (n1, n2) = (w[0], w[1]);
        let scan = order_vs_order_scan(model, cfg.mass, n1, n2, cfg.t0, range, cfg.positivity_action)?;
        let back = order_vs_order_scan(model, cfg.mass, n2, n1, cfg.t0, range, cfg.positivity_action)?;
        let rows: Vec<Vec<Cell>> = (0..scan.ks.len())
            .map(|i| {
                vec![
                    scan.ks[i].into(),
                    scan.alpha_abs[i].into(),
                    scan.beta_abs[i].into(),
                    scan.unitarity_defects[i].into(),
                    scan.partial_sums[i].into(),
                ]
            })
            .collect();
        out.table(
            &format!("bogoliubov_n{n1}_n{n2}.csv"),
            &["k", "abs_alpha", "abs_beta", "unitarity_defect", "partial_sum"],
            &rows,
        )?;
        pairs += scan.ks.len() + back.ks.len();
        worst_unitarity = worst_unitarity.max(scan.max_unitarity_defect()).max(back.max_unitarity_defect());
        worst_symmetry =
            worst_symmetry.max(max_of(scan.beta_abs.iter().zip(&back.beta_abs).map(|(a, b)| (a - b).abs())));
        worst_beta = worst_beta.max(max_of(scan.beta_abs.iter().copied()));
        if let Some(p) = scan.exponent {
            exponents.push((n1.min(n2), p));
        }
        summary.push(json!({
            "n1": n1, "n2": n2, "cutoff": scan.cutoff, "fit": scan.fit, "exponent": scan.exponent,
            "partial_sum": scan.partial_sums.last(), "verdict": scan.verdict,
        }));
    }
    rep.push("max_unitarity_defect", worst_unitarity, "<", 1e-9);
    rep.push("max_beta_swap_asymmetry", worst_symmetry, "<", 1e-10);
    if is_static(model) {
        rep.push("static_max_abs_beta", worst_beta, "<", 1e-10);
    }
    for w in exponents.windows(2) {
        rep.push(
            format!("exponent_gap_min_order_{}_to_{}", w[0].0, w[1].0),
            w[1].1 - w[0].1,
            ">=",
            cfg.bogoliubov.min_exponent_gap,
        );
    }
    rep.note("pairs_computed", json!(pairs));
    rep.note("scans", Value::Array(summary));
    Ok(())
}

fn particle_numbers(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let Some(pc) = &cfg.particles else {
        rep.skipped = true;
        return Ok(());
    };
    let model = &cfg.background;
    let opts =
        SolveOptions { max_drift: Some(f64::INFINITY), ..SolveOptions::with_tol(pc.tol.unwrap_or(cfg.solver.tol)) };
    let range = (cfg.modes.k_min, cfg.modes.k_max);
    let mut worst_unitarity: f64 = 0.0;
    let mut worst_number: f64 = 0.0;
    let mut slopes: Vec<(usize, f64)> = Vec::new();
    let mut summary = Vec::new();
    for n in cfg.sorted_orders() {
        let spectrum =
            particle_number_evolution(model, cfg.mass, n, cfg.t0, pc.t1, range, &opts, cfg.positivity_action)?;
        let rows: Vec<Vec<Cell>> = (0..spectrum.ks.len())
            .map(|i| vec![spectrum.ks[i].into(), spectrum.numbers[i].into(), spectrum.unitarity_defects[i].into()])
            .collect();
        out.table(&format!("particles_n{n}.csv"), &["k", "n_k", "unitarity_defect"], &rows)?;
        worst_unitarity = worst_unitarity.max(max_of(spectrum.unitarity_defects.iter().copied()));
        worst_number = worst_number.max(max_of(spectrum.numbers.iter().copied()));
        let mid = 0.5 * (range.0 as f64 + range.1 as f64);
        let resolved =
            spectrum.ks.iter().zip(&spectrum.numbers).all(|(k, x)| (*k as f64) < mid || *x > pc.resolution_floor);
        if let (Some(f), true) = (spectrum.fit, resolved) {
            slopes.push((n, f.slope));
        }
        summary.push(json!({
            "n": n, "resolved": resolved, "density": spectrum.density, "density_half_cutoff": spectrum.density_half,
            "cutoff_sensitivity": spectrum.cutoff_sensitivity(), "fit": spectrum.fit,
        }));
    }
    rep.push("max_unitarity_defect", worst_unitarity, "<", 1e-9);
    if is_static(model) || pc.t1 == cfg.t0 {
        rep.push("max_particle_number", worst_number, "<", 1e-10);
    }
    for w in slopes.windows(2) {
        rep.push(format!("slope_change_n{}_to_n{}", w[0].0, w[1].0), w[1].1 - w[0].1, "<=", 0.0);
    }
    rep.note("spectra", Value::Array(summary));
    Ok(())
}

fn relative_change(a: &ResponseCurve, b: &ResponseCurve, window: [f64; 2]) -> f64 {
    max_of(
        a.energies
            .iter()
            .zip(a.values.iter().zip(&b.values))
            .filter(|(e, _)| **e >= window[0] && **e <= window[1])
            .map(|(_, (x, y))| (x - y).abs() / x.abs().max(f64::MIN_POSITIVE)),
    )
}

fn detector(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let Some(dc) = &cfg.detector else {
        rep.skipped = true;
        return Ok(());
    };
    let model = &cfg.background;
    let mut orders = dc.orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let setup = DetectorSetup {
        window: dc.window,
        energies: dc.energies.values(),
        cutoff: dc.cutoff,
        solver: SolveOptions { max_drift: Some(f64::INFINITY), ..SolveOptions::with_tol(dc.tol) },
        positivity: cfg.positivity_action,
    };
    let fit_window = (dc.fit[0], dc.fit[1]);
    let mut min_value = f64::INFINITY;
    let mut slopes: Vec<(usize, f64)> = Vec::new();
    let mut summary = Vec::new();
    for n in orders {
        let curve = detector_response(model, cfg.mass, n, cfg.t0, &setup)?;
        let doubled = if dc.check_doubling {
            let s2 = DetectorSetup { cutoff: 2 * dc.cutoff, ..setup.clone() };
            Some(detector_response(model, cfg.mass, n, cfg.t0, &s2)?)
        } else {
            None
        };
        let converged = curve.converged();
        let rows: Vec<Vec<Cell>> = (0..curve.energies.len())
            .map(|i| {
                let mut row = vec![curve.energies[i].into(), curve.values[i].into(), converged[i].into()];
                if let Some(d) = &doubled {
                    row.push(d.values[i].into());
                }
                row
            })
            .collect();
        let mut header = vec!["energy", "response", "converged_in_k"];
        if doubled.is_some() {
            header.push("response_doubled_k");
        }
        out.table(&format!("detector_n{n}.csv"), &header, &rows)?;
        min_value = min_value.min(curve.values.iter().cloned().fold(f64::INFINITY, f64::min));
        rep.push(format!("cutoff_margin_n{n}"), curve.omega_cutoff - dc.energies.max, ">", 0.0);
        let fit = slope_fit(&curve, fit_window)?;
        if let Some(max_slope) = dc.max_slope {
            rep.push(format!("slope_n{n}"), fit.slope, "<", max_slope);
        }
        let mut change = None;
        if let Some(d) = &doubled {
            let c = relative_change(&curve, d, dc.fit);
            rep.push(format!("cutoff_doubling_change_n{n}"), c, "<", 1e-2);
            change = Some(c);
        }
        slopes.push((n, fit.slope));
        summary.push(json!({
            "n": n, "cutoff": curve.cutoff, "omega_cutoff": curve.omega_cutoff, "fit_window": dc.fit,
            "fit": fit, "predicted_bound_exponent": predicted_decay_exponent(n),
            "max_quadrature_error": curve.max_quadrature_error, "cutoff_doubling_change": change,
        }));
    }
    rep.push("min_response", min_value, ">=", 0.0);
    for w in slopes.windows(2) {
        rep.push(format!("slope_change_n{}_to_n{}", w[0].0, w[1].0), w[1].1 - w[0].1, "<=", -dc.min_slope_gap);
    }
    rep.note("curves", Value::Array(summary));
    Ok(())
}

fn invariants(cfg: &ExperimentConfig, out: &mut Artifacts, rep: &mut SuiteReport) -> Result<()> {
    let ic = &cfg.invariants;
    let model = &cfg.background;
    let mut rng = ChaCha8Rng::seed_from_u64(ic.seed);
    let random_state = |rng: &mut ChaCha8Rng| {
        // covers the multipliers of every channel k <= 1000 at H <= 1
        let r = rng.gen_range(-2.0..2.0);
        let omega = 10f64.powf(rng.gen_range(-1.0..3.0));
        ModeQuasifreeState::new(0, 0.0, r, omega)
    };

    let purity = max_of((0..ic.purity_samples).map(|_| random_state(&mut rng).purity_defect()));
    rep.push("max_purity_defect", purity, "<", 1e-12);

    // |sigma(F1, F2)|^2 <= 4 mu(F1, F1) mu(F2, F2)
    let mut cs: f64 = 0.0;
    for _ in 0..ic.pair_samples {
        let st = random_state(&mut rng);
        let f1 = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let f2 = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s = st.sigma(f1, f2);
        cs = cs.max(s * s / (4.0 * st.mu(f1, f1) * st.mu(f2, f2)));
    }
    rep.push("max_cauchy_schwarz_ratio", cs, "<=", 1.0 + 1e-12);

    let mut norm: f64 = 0.0;
    for n in cfg.sorted_orders() {
        for k in cfg.channels() {
            let d = adiabatic_initial_data(model, k, cfg.mass, n, cfg.t0, cfg.positivity_action)?;
            norm = norm.max(d.normalization_defect(model));
        }
    }
    rep.push("max_wronskian_normalization_defect", norm, "<", 1e-12);

    let ensemble = random_ensemble(&mut rng, ic.sobolev_k_max, ic.ensemble);
    let mut rows = Vec::new();
    let orders = match &ic.sobolev_orders {
        Some(o) => o.clone(),
        None => cfg.sorted_orders(),
    };
    for n in orders {
        let states = (0..=ic.sobolev_k_max)
            .into_par_iter()
            .map(|k| {
                let m = AdiabaticLadder::build(model, k, cfg.mass, n, cfg.t0)?.multipliers(n, cfg.positivity_action)?;
                Ok((ModeQuasifreeState::from_multipliers(k, cfg.t0, m), m.clamped))
            })
            .collect::<Result<Vec<_>>>()?;
        // a floored channel's ratio follows the floor, not the state
        let clamped = states.iter().filter(|s| s.1).count();
        let states: Vec<ModeQuasifreeState> = states.into_iter().map(|s| s.0).collect();
        let (lo, hi) = mu_sobolev_ratio(&states, &ensemble);
        rows.push(vec![n.into(), lo.into(), hi.into(), (hi / lo).into(), clamped.into()]);
        rep.push(format!("sobolev_ratio_spread_n{n}"), hi / lo, "<", ic.sobolev_ratio_max);
    }
    out.table("invariants_sobolev.csv", &["n", "ratio_min", "ratio_max", "spread", "clamped_channels"], &rows)?;
    Ok(())
}
