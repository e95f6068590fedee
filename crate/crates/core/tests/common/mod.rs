//! Test-side oracles, written without the library's jet machinery.
#![allow(dead_code)]

/// Polynomial in `x = exp(-2 H t)`, coefficients lowest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn c(v: f64) -> Self {
        Poly(vec![v])
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + o.0.get(i).unwrap_or(&0.0)).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// d/dt with dx/dt = -2 H x.
    pub fn dt(&self, h: f64) -> Poly {
        Poly(self.0.iter().enumerate().map(|(j, c)| -2.0 * h * j as f64 * c).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Drops trailing coefficients that are zero up to `tol` times the largest.
    pub fn trimmed(&self, tol: f64) -> Poly {
        let big = self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut v = self.0.clone();
        while v.len() > 1 && v.last().unwrap().abs() <= tol * big {
            v.pop();
        }
        Poly(v)
    }
}

/// Rational function `num / den` in `x = exp(-2 H t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rat {
    pub num: Poly,
    pub den: Poly,
}

impl Rat {
    pub fn poly(p: Poly) -> Self {
        Rat { num: p, den: Poly::c(1.0) }
    }

    pub fn add(&self, o: &Rat) -> Rat {
        if self.den == o.den {
            return Rat { num: self.num.add(&o.num), den: self.den.clone() };
        }
        Rat { num: self.num.mul(&o.den).add(&o.num.mul(&self.den)), den: self.den.mul(&o.den) }
    }

    pub fn scale(&self, s: f64) -> Rat {
        Rat { num: self.num.scale(s), den: self.den.clone() }
    }

    pub fn mul(&self, o: &Rat) -> Rat {
        Rat { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }
    }

    pub fn div(&self, o: &Rat) -> Rat {
        Rat { num: self.num.mul(&o.den), den: self.den.mul(&o.num) }
    }

    pub fn dt(&self, h: f64) -> Rat {
        Rat {
            num: self.num.dt(h).mul(&self.den).add(&self.num.mul(&self.den.dt(h)).scale(-1.0)),
            den: self.den.mul(&self.den),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }
}

/// `(Omega^(n))^2` on `a = exp(H t)` as a rational function of `x = exp(-2 H t)`,
/// straight from the textbook form of the recursion:
/// `S' = w^2 - 3/4 (a'/a)^2 - 3/2 a''/a + 3/4 (O'/O)^2 - 1/2 O''/O`, `O = sqrt(S)`.
pub fn de_sitter_omega_sq(h: f64, k: u32, m: f64, n: usize) -> Rat {
    let lap = (k * (k + 2)) as f64;
    let omega_sq = Rat::poly(Poly(vec![m * m, lap]));
    let mut s = omega_sq.clone();
    for _ in 0..n {
        let ds = s.dt(h);
        let dds = ds.dt(h);
        // O'/O = S'/(2S),  O''/O = S''/(2S) - S'^2/(4S^2)
        let lr = ds.div(&s).scale(0.5);
        let acc = dds.div(&s).scale(0.5).add(&lr.mul(&lr).scale(-1.0));
        s = omega_sq
            .add(&Rat::poly(Poly::c(-0.75 * h * h - 1.5 * h * h)))
            .add(&lr.mul(&lr).scale(0.75))
            .add(&acc.scale(-0.5));
    }
    s
}

/// `d/dt` of the rational function, evaluated at `t`.
pub fn de_sitter_eval(r: &Rat, h: f64, t: f64) -> (f64, f64) {
    let x = (-2.0 * h * t).exp();
    (r.eval(x), r.dt(h).eval(x))
}
