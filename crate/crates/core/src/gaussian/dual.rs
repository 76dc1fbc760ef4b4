//! Second-order forward-mode automatic differentiation in three variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct D3 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl D3 {
    pub fn constant(v: f64) -> Self {
        D3 { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = D3::constant(v);
        d.g[i] = 1.0;
        d
    }

    /// Applies a scalar function given its value and first two derivatives.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = D3::constant(f);
        for i in 0..3 {
            out.g[i] = df * self.g[i];
            for k in 0..3 {
                out.h[i][k] = df * self.h[i][k] + d2f * self.g[i] * self.g[k];
            }
        }
        out
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for D3 {
    type Output = D3;
    fn add(self, o: D3) -> D3 {
        let mut out = self;
        out.v += o.v;
        for i in 0..3 {
            out.g[i] += o.g[i];
            for k in 0..3 {
                out.h[i][k] += o.h[i][k];
            }
        }
        out
    }
}

impl Neg for D3 {
    type Output = D3;
    fn neg(self) -> D3 {
        self * -1.0
    }
}

impl Sub for D3 {
    type Output = D3;
    fn sub(self, o: D3) -> D3 {
        self + (-o)
    }
}

impl Mul for D3 {
    type Output = D3;
    fn mul(self, o: D3) -> D3 {
        let mut out = D3::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for k in 0..3 {
                out.h[i][k] = self.h[i][k] * o.v
                    + self.v * o.h[i][k]
                    + self.g[i] * o.g[k]
                    + self.g[k] * o.g[i];
            }
        }
        out
    }
}

impl Div for D3 {
    type Output = D3;
    fn div(self, o: D3) -> D3 {
        self * o.recip()
    }
}

impl Add<f64> for D3 {
    type Output = D3;
    fn add(self, c: f64) -> D3 {
        let mut out = self;
        out.v += c;
        out
    }
}

impl Sub<f64> for D3 {
    type Output = D3;
    fn sub(self, c: f64) -> D3 {
        self + (-c)
    }
}

impl Mul<f64> for D3 {
    type Output = D3;
    fn mul(self, c: f64) -> D3 {
        let mut out = self;
        out.v *= c;
        for i in 0..3 {
            out.g[i] *= c;
            for k in 0..3 {
                out.h[i][k] *= c;
            }
        }
        out
    }
}

impl Mul<D3> for f64 {
    type Output = D3;
    fn mul(self, d: D3) -> D3 {
        d * self
    }
}

impl Add<D3> for f64 {
    type Output = D3;
    fn add(self, d: D3) -> D3 {
        d + self
    }
}

impl Sub<D3> for f64 {
    type Output = D3;
    fn sub(self, d: D3) -> D3 {
        (-d) + self
    }
}
