//! Truncated Taylor arithmetic used to differentiate the cutoff profiles exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 4;

/// `c[k] = f^(k)(t0)/k!` for `k <= ORDER`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; ORDER + 1],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; ORDER + 1];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `t0`.
    pub fn variable(t0: f64) -> Self {
        let mut c = [0.0; ORDER + 1];
        c[0] = t0;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Derivatives `f, f', ..., f''''`.
    pub fn derivatives(&self) -> [f64; ORDER + 1] {
        let mut out = self.c;
        let mut fact = 1.0;
        for (k, v) in out.iter_mut().enumerate().skip(1) {
            fact *= k as f64;
            *v *= fact;
        }
        out
    }

    pub fn exp(self) -> Self {
        let mut e = [0.0; ORDER + 1];
        e[0] = self.c[0].exp();
        for k in 1..=ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }

    pub fn scale(self, a: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= a);
        Jet { c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER + 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate().take(ORDER + 1 - i) {
                c[i + j] += a * b;
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; ORDER + 1];
        for k in 0..=ORDER {
            let s: f64 = (1..=k).map(|j| o.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) / o.c[0];
        }
        Jet { c: q }
    }
}
