mod common;

use adiavac::adiabatic::{adiabatic_frequency, rj_multipliers, AdiabaticLadder, PositivityAction};
use adiavac::background::ScaleFactorModel;
use adiavac::modes::adiabatic_initial_data;
use common::{de_sitter_eval, de_sitter_omega_sq, Poly};
use num_complex::Complex64;

const STRICT: PositivityAction = PositivityAction::Strict;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn oracle_reduces_to_closed_form_symbolically() {
    for h in [0.2, 1.0, 3.0] {
        for k in [1u32, 10, 123] {
            let lap = (k * (k + 2)) as f64;
            let r = de_sitter_omega_sq(h, k, 0.0, 1);
            // num == (lap x - 2 H^2) den, coefficient by coefficient
            let expect = Poly(vec![-2.0 * h * h, lap]).mul(&r.den);
            let resid = r.num.add(&expect.scale(-1.0));
            let big = expect.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            assert!(resid.0.iter().all(|c| c.abs() <= 1e-13 * big), "H={h} k={k} {resid:?}");
        }
    }
}

#[test]
fn massless_first_order_matches_oracle() {
    for h in [0.2, 1.0, 2.5] {
        let model = ScaleFactorModel::Exponential { hubble: h };
        for k in [1u32, 2, 10, 77, 400] {
            for t0 in [-0.7, 0.0, 0.4] {
                // unclamped: small k at large H goes negative
                let lib = AdiabaticLadder::build(&model, k, 0.0, 1, t0).unwrap().omega_sq_jet(1).value();
                let (oracle, _) = de_sitter_eval(&de_sitter_omega_sq(h, k, 0.0, 1), h, t0);
                let a = (h * t0).exp();
                let closed = (k * (k + 2)) as f64 / (a * a) - 2.0 * h * h;
                assert!(rel(lib, oracle) < 1e-12, "H={h} k={k} t0={t0}: {lib} vs {oracle}");
                assert!(rel(lib, closed) < 1e-12);
            }
        }
    }
}

#[test]
fn massive_higher_orders_match_oracle() {
    let h = 1.0;
    let model = ScaleFactorModel::Exponential { hubble: h };
    // the rational form grows too fast to evaluate beyond n = 2
    for n in 1..=2 {
        for k in [3u32, 10, 40] {
            let lib = adiabatic_frequency(&model, k, 1.0, n, 0.0, STRICT).unwrap().omega_sq();
            let (oracle, _) = de_sitter_eval(&de_sitter_omega_sq(h, k, 1.0, n), h, 0.0);
            assert!(rel(lib, oracle) < 1e-11, "n={n} k={k}: {lib} vs {oracle}");
        }
    }
}

#[test]
fn de_sitter_mode_data_k10() {
    let h = 1.0;
    let model = ScaleFactorModel::Exponential { hubble: h };
    let (s, ds) = de_sitter_eval(&de_sitter_omega_sq(h, 10, 1.0, 1), h, 0.0);
    let omega = s.sqrt();
    let r = -0.5 * (3.0 * h + 0.5 * ds / s);
    let w = (2.0 * omega).sqrt().recip();
    let wdot = Complex64::new(r, -omega) * w;

    let d = adiabatic_initial_data(&model, 10, 1.0, 1, 0.0, STRICT).unwrap();
    assert!((d.w - w).norm() < 1e-13 * w.abs());
    assert!((d.wdot - wdot).norm() < 1e-12 * wdot.norm());
    let m = rj_multipliers(&model, 10, 1.0, 1, 0.0, STRICT).unwrap();
    assert!(rel(m.omega, omega) < 1e-13 && rel(m.r, r) < 1e-12);
}

#[test]
fn power_law_first_order_matches_finite_differences() {
    // a = t^p: a'/a = p/t, a''/a = p(p-1)/t^2, omega^2 from a direct formula
    let (p, k, m) = (0.5, 12u32, 1.0);
    let lap = (k * (k + 2)) as f64;
    let om2 = |t: f64| lap / t.powf(2.0 * p) + m * m;
    let model = ScaleFactorModel::PowerLaw { p, t_ref: 0.0 };
    for t in [0.8, 1.5, 4.0] {
        let e = 1e-3;
        let o = |t: f64| om2(t).sqrt();
        let d1 = (o(t + e) - o(t - e)) / (2.0 * e);
        let d2 = (o(t + e) - 2.0 * o(t) + o(t - e)) / (e * e);
        let hub = p / t;
        let acc = p * (p - 1.0) / (t * t);
        let expect = om2(t) - 0.75 * hub * hub - 1.5 * acc + 0.75 * (d1 / o(t)).powi(2) - 0.5 * d2 / o(t);
        let lib = adiabatic_frequency(&model, k, m, 1, t, STRICT).unwrap().omega_sq();
        assert!(rel(lib, expect) < 1e-6, "t={t}: {lib} vs {expect}");
    }
}
