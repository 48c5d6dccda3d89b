//! Sparse multivariate polynomials with complex coefficients.
//!
//! Symbols over `(φ, φ̄)` on `M` modes use `2M` variables, `φ` first. Exponent
//! vectors are stored in a `BTreeMap`, so iteration order is deterministic.

use crate::{CMat, C64};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

pub type Exps = Vec<u8>;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Exps, C64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C64::new(1.0, 0.0))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, C64::new(1.0, 0.0))
    }

    pub fn monomial(exps: Exps, c: C64) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    /// `Σ c_i x_i`.
    pub fn linear(coeffs: &[C64]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, *c);
        }
        p
    }

    pub fn add_term(&mut self, exps: Exps, c: C64) {
        debug_assert_eq!(exps.len(), self.nvars);
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        // exact cancellations are dropped; tiny residues are kept
    }

    pub fn coeff(&self, exps: &[u8]) -> C64 {
        self.terms.get(exps).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(|(e, _)| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    /// Complex-conjugates the coefficients only.
    pub fn conj_coeffs(&self) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect() }
    }

    /// Complex conjugate of a symbol over `(φ, φ̄)`: swaps the halves and conjugates coefficients.
    pub fn conj_symbol(&self) -> Self {
        let m = self.nvars / 2;
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut f = e[m..].to_vec();
            f.extend_from_slice(&e[..m]);
            out.add_term(f, c.conj());
        }
        out
    }

    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    /// Multiplies by `x_i`.
    pub fn mul_var(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut f = e.clone();
            f[i] += 1;
            out.add_term(f, *c);
        }
        out
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(*c, |acc, (&k, xi)| acc * xi.powu(k as u32))
            })
            .sum()
    }

    /// Substitutes `x_i ↦ Σ_j l[(i, j)] y_j`; the result has `l.ncols()` variables.
    pub fn linear_subst(&self, l: &CMat) -> Self {
        assert_eq!(l.nrows(), self.nvars);
        let ny = l.ncols();
        let forms: Vec<Poly> =
            (0..self.nvars).map(|i| Poly::linear(&l.row(i).iter().copied().collect::<Vec<_>>())).collect();
        let mut powers: Vec<Vec<Poly>> = forms.iter().map(|f| vec![Poly::one(ny), f.clone()]).collect();
        let mut out = Self::zero(ny);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(ny, *c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = &powers[i][powers[i].len() - 1] * &forms[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][k as usize];
            }
            out = &out + &t;
        }
        out
    }

    /// Embeds into a larger variable set, sending variable `i` to `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        let mut out = Self::zero(nvars);
        for (e, c) in &self.terms {
            let mut f = vec![0u8; nvars];
            for (i, &k) in e.iter().enumerate() {
                f[map[i]] += k;
            }
            out.add_term(f, *c);
        }
        out
    }

    /// `exp(½ Σ q_ij ∂_i ∂_j) p` for symmetric `q`; the series terminates on polynomials.
    pub fn heat(&self, q: &CMat) -> Self {
        let mut acc = self.clone();
        let mut term = self.clone();
        let mut k = 1.0;
        loop {
            let mut next = Self::zero(self.nvars);
            for i in 0..self.nvars {
                let di = term.deriv(i);
                if di.is_zero() {
                    continue;
                }
                for j in 0..self.nvars {
                    let qij = q[(i, j)];
                    if qij == C64::new(0.0, 0.0) {
                        continue;
                    }
                    next = &next + &di.deriv(j).scale(qij * 0.5);
                }
            }
            if next.is_zero() {
                return acc;
            }
            term = next.scale(C64::new(1.0 / k, 0.0));
            acc = &acc + &term;
            k += 1.0;
        }
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_diff(&self, other: &Poly) -> f64 {
        (self - other).terms.values().fold(0.0, |a, c| a.max(c.norm()))
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.norm()))
    }

    /// Drops terms with modulus below `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(e, c)| (e.clone(), *c)).collect() }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exps = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// All exponent vectors over `n` variables with total degree at most `d`,
/// ordered by degree and then lexicographically.
pub fn exponents_up_to(n: usize, d: usize) -> Vec<Exps> {
    let mut out = Vec::new();
    for deg in 0..=d {
        let mut level = Vec::new();
        fill(n, deg, &mut vec![0; n], 0, &mut level);
        level.sort();
        level.reverse();
        out.extend(level);
    }
    out
}

fn fill(n: usize, left: usize, cur: &mut Exps, pos: usize, out: &mut Vec<Exps>) {
    if pos == n {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in 0..=left {
        cur[pos] = k as u8;
        fill(n, left - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}
