//! Per-mode quasifree states.
//!
//! On each mode the operators `R_n`, `J_n` act as the scalars `r`, `Omega`, and
//! the one-particle map is `k(q, p) = (2 Omega)^(-1/2) ((r - i Omega) q - p)`.
//! From it `lambda(F1, F2) = conj(k F1) k F2`, `mu = Re lambda` and
//! `sigma = 2 Im lambda` on real Cauchy data.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::adiabatic::Multipliers;
use crate::background::ModeChannel;
use crate::fit::compensated_sum;
use crate::modes::ModeInitialData;

pub type Mat2 = [[Complex64; 2]; 2];

/// The fixed per-mode symplectic matrix, `sigma(F1, F2) = -(q1 p2 - q2 p1)`.
pub const SYMPLECTIC: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeQuasifreeState {
    pub k: u32,
    pub t0: f64,
    pub r: f64,
    pub omega: f64,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl ModeQuasifreeState {
    pub fn new(k: u32, t0: f64, r: f64, omega: f64) -> Self {
        assert!(omega > 0.0 && r.is_finite(), "state needs Omega > 0 and finite r");
        Self { k, t0, r, omega }
    }

    pub fn from_multipliers(k: u32, t0: f64, m: Multipliers) -> Self {
        Self::new(k, t0, m.r, m.omega)
    }

    /// Pure state whose positive-frequency solution is the given normalized mode data.
    pub fn from_mode(data: &ModeInitialData, a: f64) -> Self {
        let ratio = data.wdot / data.w;
        let omega = 1.0 / (2.0 * a.powi(3) * data.w.norm_sqr());
        Self::new(data.k, data.t0, ratio.re, omega)
    }

    pub fn one_particle_map(&self, q: Complex64, p: Complex64) -> Complex64 {
        (c(self.r, -self.omega) * q - p) / (2.0 * self.omega).sqrt()
    }

    /// `lambda(F1, F2) = conj(k F1) k F2`.
    pub fn lambda(&self, f1: (Complex64, Complex64), f2: (Complex64, Complex64)) -> Complex64 {
        self.one_particle_map(f1.0, f1.1).conj() * self.one_particle_map(f2.0, f2.1)
    }

    pub fn mu(&self, f1: (f64, f64), f2: (f64, f64)) -> f64 {
        self.lambda((c(f1.0, 0.0), c(f1.1, 0.0)), (c(f2.0, 0.0), c(f2.1, 0.0))).re
    }

    pub fn sigma(&self, f1: (f64, f64), f2: (f64, f64)) -> f64 {
        2.0 * self.lambda((c(f1.0, 0.0), c(f1.1, 0.0)), (c(f2.0, 0.0), c(f2.1, 0.0))).im
    }

    /// Matrix of `lambda` on the basis `(q, p)`.
    pub fn lambda_matrix(&self) -> Mat2 {
        let basis = [(c(1.0, 0.0), c(0.0, 0.0)), (c(0.0, 0.0), c(1.0, 0.0))];
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.lambda(basis[i], basis[j]);
            }
        }
        out
    }

    /// `Re lambda` on the basis: `[[(r^2 + Omega^2), -r], [-r, 1]] / (2 Omega)`.
    pub fn mu_matrix(&self) -> Mat2 {
        let l = self.lambda_matrix();
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = c(l[i][j].re, 0.0);
            }
        }
        out
    }

    pub fn sigma_matrix(&self) -> Mat2 {
        let l = self.lambda_matrix();
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = c(2.0 * l[i][j].im, 0.0);
            }
        }
        out
    }

    /// The 2x2 projector built from scalar `J = Omega`, `R = r`.
    pub fn s_matrix(&self) -> Mat2 {
        let (r, j) = (self.r, self.omega);
        let i = Complex64::i();
        let one = c(1.0, 0.0);
        [[0.5 * (i * (r / j) + one), 0.5 * (-i / j)], [0.5 * (i * (r * r / j) + i * j), 0.5 * (-i * (r / j) + one)]]
    }

    /// `||S^2 - S||_F`.
    pub fn purity_defect(&self) -> f64 {
        let s = self.s_matrix();
        let s2 = mat_mul(&s, &s);
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += (s2[i][j] - s[i][j]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Smallest eigenvalue of the Hermitian `mu` matrix.
    pub fn mu_min_eigenvalue(&self) -> f64 {
        let m = self.mu_matrix();
        let (a, d, b) = (m[0][0].re, m[1][1].re, m[0][1]);
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b.norm_sqr()).sqrt();
        0.5 * (tr - disc)
    }

    /// `mu(F, F) = |k F|^2`.
    pub fn mu_norm(&self, q: Complex64, p: Complex64) -> f64 {
        self.one_particle_map(q, p).norm_sqr()
    }
}

pub fn purity_check(state: &ModeQuasifreeState) -> f64 {
    state.purity_defect()
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Cauchy data on one mode channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub k: u32,
    pub q: Complex64,
    pub p: Complex64,
}

/// `(sum_k (k+1)^2 (1+k^2)^s |q_k|^2, sum_k (k+1)^2 (1+k^2)^s |p_k|^2)`.
pub fn sobolev_mode_norm(data: &[ModeSample], s: f64) -> (f64, f64) {
    let weight = |k: u32| ModeChannel::new(k).degeneracy() * (1.0 + (k as f64).powi(2)).powf(s);
    let q = compensated_sum(data.iter().map(|d| weight(d.k) * d.q.norm_sqr()));
    let p = compensated_sum(data.iter().map(|d| weight(d.k) * d.p.norm_sqr()));
    (q, p)
}

/// `mu(F, F) / (||q||^2_{1/2} + ||p||^2_{-1/2})` for one band-limited sample.
///
/// `states[k]` must hold the state of channel `k` for every `k` in the sample.
pub fn mu_sobolev_ratio_single(states: &[ModeQuasifreeState], sample: &[ModeSample]) -> f64 {
    let mu = compensated_sum(sample.iter().map(|d| {
        let st = &states[d.k as usize];
        debug_assert_eq!(st.k, d.k);
        ModeChannel::new(d.k).degeneracy() * st.mu_norm(d.q, d.p)
    }));
    let (q, _) = sobolev_mode_norm(sample, 0.5);
    let (_, p) = sobolev_mode_norm(sample, -0.5);
    mu / (q + p)
}

/// Extremes of the ratio over an ensemble.
pub fn mu_sobolev_ratio(states: &[ModeQuasifreeState], ensemble: &[Vec<ModeSample>]) -> (f64, f64) {
    ensemble
        .iter()
        .map(|s| mu_sobolev_ratio_single(states, s))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Random band-limited Cauchy data on channels `0..=k_max`.
///
/// Every fourth sample is a single pure-`q` or pure-`p` channel so the
/// ensemble probes the per-mode extremes, the rest fill random bands with
/// Gaussian amplitudes.
pub fn random_ensemble<R: Rng>(rng: &mut R, k_max: u32, count: usize) -> Vec<Vec<ModeSample>> {
    let gauss = |rng: &mut R| c(rng.sample(StandardNormal), rng.sample(StandardNormal));
    (0..count)
        .map(|i| {
            let zero = c(0.0, 0.0);
            match i % 8 {
                0 => vec![ModeSample { k: rng.gen_range(0..=k_max), q: gauss(rng), p: zero }],
                4 => vec![ModeSample { k: rng.gen_range(0..=k_max), q: zero, p: gauss(rng) }],
                _ => {
                    let a = rng.gen_range(0..=k_max);
                    let b = rng.gen_range(0..=k_max);
                    let (lo, hi) = (a.min(b), a.max(b));
                    (lo..=hi).map(|k| ModeSample { k, q: gauss(rng), p: gauss(rng) }).collect()
                }
            }
        })
        .collect()
}
