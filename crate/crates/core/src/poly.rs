//! Sparse multivariate polynomials with exact calculus and centred Gaussian
//! moments (Isserlis recursion).

use std::collections::{BTreeMap, HashMap};

pub type Exponent = Vec<u8>;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::monomial(e, 1.0)
    }

    pub fn monomial(exp: Exponent, coeff: f64) -> Self {
        let mut p = Poly::zero(exp.len());
        p.add_term(exp, coeff);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exp: Exponent, coeff: f64) {
        debug_assert_eq!(exp.len(), self.nvars);
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            let key: Vec<_> = self.terms.iter().filter(|(_, c)| **c == 0.0).map(|(k, _)| k.clone()).collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    /// Flips the sign of the listed variables: `p(x) -> p(Rx)`.
    pub fn reflect(&self, flipped: &[usize]) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let odd = flipped.iter().map(|&i| e[i] as u32).sum::<u32>() % 2 == 1;
            out.add_term(e.clone(), if odd { -c } else { *c });
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(k, xi)| xi.powi(*k as i32)).product::<f64>())
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|k| *k as u32).sum()).max().unwrap_or(0)
    }

    /// All monomials with total degree in `1..=max_degree`.
    pub fn monomials_up_to(nvars: usize, max_degree: u32) -> Vec<Exponent> {
        fn rec(nvars: usize, i: usize, left: u32, cur: &mut Exponent, out: &mut Vec<Exponent>) {
            if i == nvars {
                if cur.iter().any(|k| *k > 0) {
                    out.push(cur.clone());
                }
                return;
            }
            for k in 0..=left {
                cur[i] = k as u8;
                rec(nvars, i + 1, left - k, cur, out);
            }
            cur[i] = 0;
        }
        let mut out = Vec::new();
        rec(nvars, 0, max_degree, &mut vec![0; nvars], &mut out);
        out
    }

    /// Exact quadratic form `x^T S x / 2` recovered from a quadratic function by
    /// polarization. Returns the polynomial.
    pub fn from_quadratic_fn(nvars: usize, f: impl Fn(&[f64]) -> f64) -> Poly {
        let mut out = Poly::zero(nvars);
        let unit = |i: usize| {
            let mut x = vec![0.0; nvars];
            x[i] = 1.0;
            x
        };
        let diag: Vec<f64> = (0..nvars).map(|i| f(&unit(i))).collect();
        for i in 0..nvars {
            let mut e = vec![0; nvars];
            e[i] = 2;
            out.add_term(e, diag[i]);
            for k in i + 1..nvars {
                let mut x = unit(i);
                x[k] = 1.0;
                let c = f(&x) - diag[i] - diag[k];
                let mut e = vec![0; nvars];
                e[i] = 1;
                e[k] = 1;
                out.add_term(e, c);
            }
        }
        out
    }

    /// Linear polynomial `x -> f(x)` recovered by probing unit vectors.
    pub fn from_linear_fn(nvars: usize, f: impl Fn(&[f64]) -> f64) -> Poly {
        let mut out = Poly::zero(nvars);
        for i in 0..nvars {
            let mut x = vec![0.0; nvars];
            x[i] = 1.0;
            let mut e = vec![0; nvars];
            e[i] = 1;
            out.add_term(e, f(&x));
        }
        out
    }
}

/// Moments `E[x^alpha]` of a centred Gaussian with covariance `cov`.
pub struct GaussianMoments {
    cov: Vec<Vec<f64>>,
    memo: HashMap<Exponent, f64>,
}

impl GaussianMoments {
    pub fn new(cov: Vec<Vec<f64>>) -> Self {
        GaussianMoments { cov, memo: HashMap::new() }
    }

    pub fn moment(&mut self, alpha: &[u8]) -> f64 {
        let total: u32 = alpha.iter().map(|k| *k as u32).sum();
        if total == 0 {
            return 1.0;
        }
        if total % 2 == 1 {
            return 0.0;
        }
        if let Some(v) = self.memo.get(alpha) {
            return *v;
        }
        // E[x_i x^rest] = sum_j cov_ij rest_j E[x^(rest - e_j)]
        let i = alpha.iter().position(|k| *k > 0).expect("non-zero exponent");
        let mut rest = alpha.to_vec();
        rest[i] -= 1;
        let mut acc = 0.0;
        for j in 0..rest.len() {
            if rest[j] == 0 || self.cov[i][j] == 0.0 {
                continue;
            }
            let mult = rest[j] as f64;
            let mut sub = rest.clone();
            sub[j] -= 1;
            acc += self.cov[i][j] * mult * self.moment(&sub);
        }
        self.memo.insert(alpha.to_vec(), acc);
        acc
    }

    pub fn expect(&mut self, p: &Poly) -> f64 {
        p.terms().map(|(e, c)| c * self.moment(e)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calculus() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x).mul(&y).add(&y.scale(3.0));
        assert_eq!(p.eval(&[2.0, 1.0]), 7.0);
        assert_eq!(p.derivative(0).eval(&[2.0, 1.0]), 4.0);
        assert_eq!(p.derivative(1).eval(&[2.0, 5.0]), 7.0);
        assert_eq!(p.reflect(&[1]).eval(&[2.0, 1.0]), -7.0);
        assert_eq!(p.degree(), 3);
        assert!(p.add(&p.scale(-1.0)).is_zero());
    }

    #[test]
    fn polarization_recovers_quadratic() {
        let f = |x: &[f64]| 2.0 * x[0] * x[0] - 3.0 * x[0] * x[2] + x[1] * x[2];
        let p = Poly::from_quadratic_fn(3, f);
        let pt = [0.3, -1.2, 0.7];
        assert!((p.eval(&pt) - f(&pt)).abs() < 1e-15);
    }

    #[test]
    fn monomial_count() {
        // C(4 + 4, 4) - 1 monomials of degree 1..=4 in 4 variables
        assert_eq!(Poly::monomials_up_to(4, 4).len(), 69);
    }

    #[test]
    fn isserlis_moments() {
        let mut g = GaussianMoments::new(vec![vec![2.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(g.moment(&[2, 0]), 2.0);
        assert_eq!(g.moment(&[4, 0]), 12.0);
        assert_eq!(g.moment(&[1, 1]), 0.5);
        // E[x^2 y^2] = s11 s22 + 2 s12^2
        assert!((g.moment(&[2, 2]) - 2.5).abs() < 1e-15);
        assert_eq!(g.moment(&[3, 0]), 0.0);
    }
}
