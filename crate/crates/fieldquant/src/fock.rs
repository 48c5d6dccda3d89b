//! Truncated bosonic Fock space over a Kähler structure.
//!
//! States are stored in an orthonormal occupation basis `|α⟩`, `|α| ≤ n_max`, built
//! from `z = L⁻¹φ` where `Δ = LLᵗ` is the Cholesky factor. In the holomorphic
//! picture `|α⟩ ↔ z^α/√α!`, `a†^x` is multiplication by `φ^x` and `a^x = Δ^{xy}∂_y`,
//! so `a†^x = Σ_j L_xj b_j†` and `a^x = Σ_j L_xj b_j`.

use crate::gaussmeasure::wick_unorder;
use crate::kahler::KahlerStructure;
use crate::linalg::{c, spectral_norm, to_complex};
use crate::poly::{exponents_up_to, Exps, Poly};
use crate::staralgebra::{TrigOrdering, TrigSymbol};
use crate::{CMat, CVec, RMat, C64};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("operator has no one-particle form; dagger needs a lifted, ladder or scalar operator")]
    UnsupportedForm,
    #[error("operator is tagged with {0:?} coordinates")]
    CoordinateMismatch(Coords),
    #[error("symbol degree {0} exceeds n_max {1}")]
    DegreeOverflow(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    /// Real `2M` coordinates orthonormal for the Fock inner product.
    Darboux,
    /// Holomorphic coefficients, inner product weighted by `Δ`.
    Holomorphic,
    /// Antiholomorphic coefficients, inner product weighted by `-D`.
    Antiholomorphic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpForm {
    Scalar(C64),
    Create(CVec),
    Annihilate(CVec),
    Lift { x: CMat, coords: Coords },
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub mat: CMat,
    pub form: OpForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub coeffs: CVec,
}

#[derive(Debug, Clone)]
pub struct FockSpace {
    pub m: usize,
    pub n_max: usize,
    pub delta: RMat,
    pub chol: RMat,
    pub chol_inv: RMat,
    pub basis: Vec<Exps>,
    index: HashMap<Exps, usize>,
    /// `a†^x` for each mode.
    pub create_ops: Vec<CMat>,
    /// `a^x` for each mode.
    pub annihilate_ops: Vec<CMat>,
}

impl FockState {
    pub fn inner(&self, other: &FockState) -> C64 {
        self.coeffs.dotc(&other.coeffs)
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    pub fn scale(&self, s: C64) -> FockState {
        FockState { coeffs: &self.coeffs * s }
    }
}

impl FockSpace {
    pub fn new(delta: &RMat, n_max: usize) -> Self {
        let m = delta.nrows();
        let chol = nalgebra::Cholesky::new(delta.clone()).expect("Delta must be positive definite").l();
        let chol_inv = chol.clone().try_inverse().expect("Cholesky factor is invertible");
        let basis = exponents_up_to(m, n_max);
        let index: HashMap<Exps, usize> = basis.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let dim = basis.len();
        let mut b_create = Vec::with_capacity(m);
        for j in 0..m {
            let mut bj = CMat::zeros(dim, dim);
            for (col, e) in basis.iter().enumerate() {
                let level: usize = e.iter().map(|&k| k as usize).sum();
                if level >= n_max {
                    continue;
                }
                let mut f = e.clone();
                f[j] += 1;
                bj[(index[&f], col)] = c((f[j] as f64).sqrt(), 0.0);
            }
            b_create.push(bj);
        }
        let lc = to_complex(&chol);
        let create_ops: Vec<CMat> =
            (0..m).map(|x| (0..m).fold(CMat::zeros(dim, dim), |acc, j| acc + &b_create[j] * lc[(x, j)])).collect();
        let annihilate_ops: Vec<CMat> = create_ops.iter().map(|op| op.adjoint()).collect();
        Self { m, n_max, delta: delta.clone(), chol, chol_inv, basis, index, create_ops, annihilate_ops }
    }

    pub fn for_structure(ks: &KahlerStructure, n_max: usize) -> Self {
        Self::new(&ks.delta, n_max)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, e: &[u8]) -> usize {
        self.index[e]
    }

    pub fn level(&self, idx: usize) -> usize {
        self.basis[idx].iter().map(|&k| k as usize).sum()
    }

    /// Indices of basis states with occupancy at most `n`.
    pub fn levels_up_to(&self, n: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.level(i) <= n).collect()
    }

    pub fn vacuum(&self) -> FockState {
        let mut v = CVec::zeros(self.dim());
        v[0] = c(1.0, 0.0);
        FockState { coeffs: v }
    }

    pub fn basis_state(&self, e: &[u8]) -> FockState {
        let mut v = CVec::zeros(self.dim());
        v[self.index_of(e)] = c(1.0, 0.0);
        FockState { coeffs: v }
    }

    pub fn identity(&self) -> FockOperator {
        self.scalar(c(1.0, 0.0))
    }

    pub fn scalar(&self, s: C64) -> FockOperator {
        FockOperator { mat: CMat::identity(self.dim(), self.dim()) * s, form: OpForm::Scalar(s) }
    }

    /// `a†(χ) = χ_x a†^x`.
    pub fn create(&self, chi: &CVec) -> FockOperator {
        let mat = (0..self.m).fold(CMat::zeros(self.dim(), self.dim()), |acc, x| acc + &self.create_ops[x] * chi[x]);
        FockOperator { mat, form: OpForm::Create(chi.clone()) }
    }

    /// `a(χ̄) = χ̄_x a^x`, the adjoint of `create(χ)`.
    pub fn annihilate(&self, chi: &CVec) -> FockOperator {
        let mat = (0..self.m)
            .fold(CMat::zeros(self.dim(), self.dim()), |acc, x| acc + &self.annihilate_ops[x] * chi[x].conj());
        FockOperator { mat, form: OpForm::Annihilate(chi.clone()) }
    }

    /// `a_row(c) = Σ c_x a^x` for an arbitrary complex row.
    pub fn annihilate_row(&self, row: &CVec) -> CMat {
        (0..self.m).fold(CMat::zeros(self.dim(), self.dim()), |acc, x| acc + &self.annihilate_ops[x] * row[x])
    }

    /// Second quantization `Σ Y_ij b_i† b_j` of an orthonormal-basis generator.
    pub fn d_gamma(&self, y: &CMat) -> CMat {
        let dim = self.dim();
        let mut out = CMat::zeros(dim, dim);
        for (col, e) in self.basis.iter().enumerate() {
            for j in 0..self.m {
                if e[j] == 0 {
                    continue;
                }
                let mut lowered = e.clone();
                lowered[j] -= 1;
                let sj = (e[j] as f64).sqrt();
                for i in 0..self.m {
                    let yij = y[(i, j)];
                    if yij == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut f = lowered.clone();
                    f[i] += 1;
                    out[(self.index[&f], col)] += yij * sj * (f[i] as f64).sqrt();
                }
            }
        }
        out
    }

    fn gram_factor(&self, ks: &KahlerStructure, coords: Coords) -> RMat {
        match coords {
            Coords::Holomorphic => self.chol.clone(),
            Coords::Antiholomorphic => nalgebra::Cholesky::new(-&ks.d).expect("-D is positive definite").l(),
            Coords::Darboux => RMat::identity(self.m, self.m),
        }
    }

    /// Number-conserving lift of a one-particle matrix given in `coords`.
    ///
    /// In holomorphic coordinates this is `φ X ∂_φ`; Darboux matrices are real `2M × 2M`
    /// in the realified orthonormal frame.
    pub fn lift(&self, ks: &KahlerStructure, x: &CMat, coords: Coords) -> FockOperator {
        let y = match coords {
            Coords::Darboux => {
                let m = self.m;
                CMat::from_fn(m, m, |i, j| c(x[(i, j)].re, x[(m + i, j)].re))
            }
            _ => {
                let l = to_complex(&self.gram_factor(ks, coords));
                let linv_t = l.clone().try_inverse().unwrap().transpose();
                l.transpose() * x * linv_t
            }
        };
        FockOperator { mat: self.d_gamma(&y), form: OpForm::Lift { x: x.clone(), coords } }
    }

    /// Holomorphic lift `φ X ∂_φ`, used by the Hamiltonian and connection terms.
    pub fn lift_holomorphic(&self, x: &CMat) -> CMat {
        let l = to_complex(&self.chol);
        let y = l.transpose() * x * to_complex(&self.chol_inv).transpose();
        self.d_gamma(&y)
    }

    /// `φ^α φ̄^β ↦ c·a†^α a^β` extended linearly.
    pub fn normal_map(&self, sym: &Poly) -> Result<CMat, FockError> {
        let m = self.m;
        if sym.nvars != 2 * m {
            return Err(FockError::Dimension { expected: 2 * m, got: sym.nvars });
        }
        let deg = sym.degree();
        if deg > self.n_max {
            return Err(FockError::DegreeOverflow(deg, self.n_max));
        }
        let dim = self.dim();
        let mut out = CMat::zeros(dim, dim);
        for (e, coef) in &sym.terms {
            let mut op = CMat::identity(dim, dim);
            for x in 0..m {
                for _ in 0..e[m + x] {
                    op = &self.annihilate_ops[x] * op;
                }
            }
            for x in 0..m {
                for _ in 0..e[x] {
                    op = &self.create_ops[x] * op;
                }
            }
            out += op * *coef;
        }
        Ok(out)
    }

    /// Weyl quantization: chaos coefficients with respect to covariance `Δ/2`, then normal order.
    pub fn weyl_quantize(&self, sym: &Poly) -> Result<FockOperator, FockError> {
        let chaos = wick_unorder(sym, &to_complex(&self.delta));
        Ok(FockOperator { mat: self.normal_map(&chaos)?, form: OpForm::Dense })
    }

    /// Wick quantization, `Q_Weyl ∘ W_{Δ/2}`, equal to plain normal ordering.
    pub fn wick_quantize(&self, sym: &Poly) -> Result<FockOperator, FockError> {
        Ok(FockOperator { mat: self.normal_map(sym)?, form: OpForm::Dense })
    }

    /// `χ̄Δχ`.
    pub fn chi_norm_sq(&self, chi: &CVec) -> f64 {
        (chi.adjoint() * to_complex(&self.delta) * chi)[(0, 0)].re
    }

    fn field_generator(&self, chi: &CVec) -> CMat {
        let i = c(0.0, 1.0);
        let mut g = CMat::zeros(self.dim(), self.dim());
        for x in 0..self.m {
            g += &self.create_ops[x] * (i * chi[x].conj()) + &self.annihilate_ops[x] * (i * chi[x]);
        }
        g
    }

    /// `Q_Weyl(E_χ) = exp(i(χ̄·a† + χ·a))` by dense matrix exponential.
    pub fn weyl_quantize_trig(&self, e: &TrigSymbol) -> FockOperator {
        let mut pre = e.prefactor;
        if e.ordering == TrigOrdering::Wick {
            pre *= (-0.5 * self.chi_norm_sq(&e.chi)).exp();
        }
        FockOperator { mat: self.field_generator(&e.chi).exp() * pre, form: OpForm::Dense }
    }

    /// `Q_Wick = Q_Weyl ∘ W_{Δ/2}` on trigonometric symbols.
    pub fn wick_quantize_trig(&self, e: &TrigSymbol) -> FockOperator {
        let mut op = self.weyl_quantize_trig(e);
        op.mat *= c((0.5 * self.chi_norm_sq(&e.chi)).exp(), 0.0);
        op
    }

    /// Second route to `Q_Weyl(E_χ)`: `e^{-χ̄Δχ/2} exp(iχ̄·a†) exp(iχ·a)`.
    ///
    /// Both factors are nilpotent on the truncated space, so matrix elements between
    /// states of occupancy below `n_max` are exact.
    pub fn weyl_trig_coherent(&self, e: &TrigSymbol) -> CMat {
        let i = c(0.0, 1.0);
        let dim = self.dim();
        let mut up = CMat::zeros(dim, dim);
        let mut down = CMat::zeros(dim, dim);
        for x in 0..self.m {
            up += &self.create_ops[x] * (i * e.chi[x].conj());
            down += &self.annihilate_ops[x] * (i * e.chi[x]);
        }
        let mut pre = e.prefactor * (-0.5 * self.chi_norm_sq(&e.chi)).exp();
        if e.ordering == TrigOrdering::Wick {
            pre *= (-0.5 * self.chi_norm_sq(&e.chi)).exp();
        }
        nilpotent_exp(&up) * nilpotent_exp(&down) * pre
    }

    /// `f_Ĝ(Ψ) = ⟨Ψ, ĜΨ⟩`.
    pub fn quadratic_observable(&self, op: &FockOperator, psi: &FockState) -> Result<C64, FockError> {
        if psi.coeffs.len() != self.dim() {
            return Err(FockError::Dimension { expected: self.dim(), got: psi.coeffs.len() });
        }
        Ok(psi.coeffs.dotc(&(&op.mat * &psi.coeffs)))
    }

    /// Residual of `f_{AB} = f_{A∘B} + (i/2) f_{-i[A,B]}` on `psi`.
    pub fn bracket_check(&self, a: &FockOperator, b: &FockOperator, psi: &FockState) -> f64 {
        let ab = &a.mat * &b.mat;
        let ba = &b.mat * &a.mat;
        let jordan = (&ab + &ba) * c(0.5, 0.0);
        let comm = (&ab - &ba) * c(0.0, -1.0);
        let f = |m: &CMat| psi.coeffs.dotc(&(m * &psi.coeffs));
        (f(&ab) - f(&jordan) - c(0.0, 0.5) * f(&comm)).norm()
    }

    /// Adjoint through the one-particle data of the operator.
    pub fn dagger(&self, ks: &KahlerStructure, op: &FockOperator, coords: Coords) -> Result<FockOperator, FockError> {
        match &op.form {
            OpForm::Scalar(s) => Ok(self.scalar(s.conj())),
            OpForm::Create(chi) => Ok(self.annihilate(chi)),
            OpForm::Annihilate(chi) => Ok(self.create(chi)),
            OpForm::Lift { x, coords: tag } => {
                if *tag != coords {
                    return Err(FockError::CoordinateMismatch(*tag));
                }
                Ok(self.lift(ks, &one_particle_dagger(ks, x, coords), coords))
            }
            OpForm::Dense => Err(FockError::UnsupportedForm),
        }
    }

    /// s.q. ladder operator `D(λ, η) = Σ (λ - η(Aᵗ + i)K)_x a^x / √2`.
    pub fn sq_ladder(&self, ks: &KahlerStructure, lambda: &[f64], eta: &[f64]) -> CMat {
        let l = CVec::from_iterator(self.m, lambda.iter().map(|&v| c(v, 0.0)));
        let e = CVec::from_iterator(self.m, eta.iter().map(|&v| c(v, 0.0)));
        let at_i = to_complex(&ks.a.transpose()) + CMat::identity(self.m, self.m) * c(0.0, 1.0);
        let row = l - (e.transpose() * at_i * to_complex(&ks.k)).transpose();
        self.annihilate_row(&row) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }

    /// `φ̂(λ) = D(λ, 0) + h.c.`
    pub fn sq_field(&self, ks: &KahlerStructure, lambda: &[f64]) -> CMat {
        let d = self.sq_ladder(ks, lambda, &vec![0.0; self.m]);
        &d + d.adjoint()
    }

    /// `π̂(η) = D(0, η) + h.c.`
    pub fn sq_momentum(&self, ks: &KahlerStructure, eta: &[f64]) -> CMat {
        let d = self.sq_ladder(ks, &vec![0.0; self.m], eta);
        &d + d.adjoint()
    }

    /// Largest singular value of the operator restricted to occupancy ≤ `n`.
    pub fn restricted_norm(&self, mat: &CMat, n: usize) -> f64 {
        let idx = self.levels_up_to(n);
        let cols = mat.select_columns(idx.iter());
        spectral_norm(&cols)
    }
}

/// One-particle adjoint: `K Xᴴ Δ`, `D⁻¹ Xᴴ D` or `εᵗOᵗε`.
pub fn one_particle_dagger(ks: &KahlerStructure, x: &CMat, coords: Coords) -> CMat {
    match coords {
        Coords::Holomorphic => to_complex(&ks.k) * x.adjoint() * to_complex(&ks.delta),
        Coords::Antiholomorphic => {
            let dinv = ks.d.clone().try_inverse().unwrap();
            to_complex(&dinv) * x.adjoint() * to_complex(&ks.d)
        }
        Coords::Darboux => {
            let eps = to_complex(&crate::linalg::epsilon(x.nrows() / 2));
            eps.transpose() * x.transpose() * eps
        }
    }
}

/// `exp(N)` for nilpotent `N` by the terminating series.
pub fn nilpotent_exp(n: &CMat) -> CMat {
    let dim = n.nrows();
    let mut acc = CMat::identity(dim, dim);
    let mut term = CMat::identity(dim, dim);
    for k in 1..=dim {
        term = (&term * n) / c(k as f64, 0.0);
        if term.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            break;
        }
        acc += &term;
    }
    acc
}

impl FockOperator {
    pub fn dense(mat: CMat) -> Self {
        Self { mat, form: OpForm::Dense }
    }

    pub fn compose(&self, other: &FockOperator) -> FockOperator {
        FockOperator::dense(&self.mat * &other.mat)
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        FockOperator::dense(&self.mat * &other.mat - &other.mat * &self.mat)
    }

    pub fn apply(&self, psi: &FockState) -> FockState {
        FockState { coeffs: &self.mat * &psi.coeffs }
    }
}

/// Linear symbol `f_φ·φ + f_φ̄·φ̄` from its `2M` coefficients.
pub fn linear_symbol(f: &[C64]) -> Poly {
    Poly::linear(f)
}

/// Poisson bracket of linear symbols, evaluated in the real coordinates `(ϕ, π)`.
///
/// `φ = (ϕ + i(Aϕ + Δπ))/√2`, so that `{φ^x, φ̄^y} = -iΔ^{xy}` with `{ϕ, π} = 1`.
pub fn poisson_linear(ks: &KahlerStructure, f: &[C64], g: &[C64]) -> C64 {
    let m = ks.m();
    let grad = |h: &[C64]| -> (CVec, CVec) {
        let hp = CVec::from_column_slice(&h[..m]);
        let hb = CVec::from_column_slice(&h[m..]);
        let i = c(0.0, 1.0);
        let id = CMat::identity(m, m);
        let a = to_complex(&ks.a);
        let dl = to_complex(&ks.delta);
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let gphi = ((&id + &a * i).transpose() * &hp + (&id - &a * i).transpose() * &hb) * s;
        let gpi = (&dl * &hp * i - &dl * &hb * i) * s;
        (gphi, gpi)
    };
    let (fp, fq) = grad(f);
    let (gp, gq) = grad(g);
    fp.dot(&gq) - fq.dot(&gp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{flat, random_compatible};
    use crate::linalg::max_abs_c;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn low_block(fs: &FockSpace, m: &CMat, n: usize) -> CMat {
        let idx = fs.levels_up_to(n);
        m.select_columns(idx.iter())
    }

    fn rand_cvec(rng: &mut ChaCha8Rng, m: usize) -> CVec {
        CVec::from_fn(m, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn ladder_basics() {
        let ks = from_delta(2.0);
        let fs = FockSpace::for_structure(&ks, 5);
        let one = CVec::from_element(1, c(1.0, 0.0));
        let a = fs.annihilate(&one);
        let ad = fs.create(&one);
        let vac = fs.vacuum();
        assert!(a.apply(&vac).coeffs.norm() == 0.0);
        let comm = a.commutator(&ad).mat;
        let block = low_block(&fs, &comm, 4);
        let expect = low_block(&fs, &(CMat::identity(6, 6) * c(2.0, 0.0)), 4);
        assert!(max_abs_c(&(block - expect)) < 1e-12);
        // a†|0⟩ is the polynomial φ, whose Segal image carries the coefficient χ
        let flat1 = FockSpace::for_structure(&flat(1), 5);
        let chi = CVec::from_element(1, c(0.3, -0.2));
        let st = flat1.create(&chi).apply(&flat1.vacuum());
        assert!((st.coeffs[1] - chi[0]).norm() < 1e-15);
    }

    fn from_delta(d: f64) -> KahlerStructure {
        crate::kahler::from_blocks(&RMat::zeros(1, 1), &RMat::from_element(1, 1, d)).unwrap()
    }

    fn phi(m: usize, x: usize) -> Poly {
        Poly::var(2 * m, x)
    }

    fn phibar(m: usize, x: usize) -> Poly {
        Poly::var(2 * m, m + x)
    }

    #[test]
    fn weyl_and_wick_of_number_symbol() {
        let fs = FockSpace::for_structure(&flat(1), 6);
        let sym = &phi(1, 0) * &phibar(1, 0);
        let weyl = fs.weyl_quantize(&sym).unwrap().mat;
        let wick = fs.wick_quantize(&sym).unwrap().mat;
        let number = &fs.create_ops[0] * &fs.annihilate_ops[0];
        assert!(max_abs_c(&(&wick - &number)) < 1e-14);
        assert!(max_abs_c(&(&weyl - &number - CMat::identity(7, 7) * c(0.5, 0.0))) < 1e-14);
        assert_eq!(fs.weyl_quantize(&Poly::one(2)).unwrap().mat, CMat::identity(7, 7));
        assert!(max_abs_c(&(fs.weyl_quantize(&phi(1, 0)).unwrap().mat - &fs.create_ops[0])) == 0.0);
        assert!(max_abs_c(&(fs.weyl_quantize(&phibar(1, 0)).unwrap().mat - &fs.annihilate_ops[0])) == 0.0);
    }

    fn symmetrized(fs: &FockSpace, e: &[u8]) -> CMat {
        // average over all distinct orderings of the operator multiset
        fn rec(fs: &FockSpace, left: &mut Vec<u8>, acc: &CMat, out: &mut CMat, count: &mut usize) {
            if left.iter().all(|&k| k == 0) {
                *out += acc;
                *count += 1;
                return;
            }
            let m = fs.m;
            for v in 0..2 * m {
                if left[v] == 0 {
                    continue;
                }
                left[v] -= 1;
                let op = if v < m { &fs.create_ops[v] } else { &fs.annihilate_ops[v - m] };
                rec(fs, left, &(op * acc), out, count);
                left[v] += 1;
            }
        }
        let dim = fs.dim();
        let mut out = CMat::zeros(dim, dim);
        let mut count = 0;
        rec(fs, &mut e.to_vec(), &CMat::identity(dim, dim), &mut out, &mut count);
        out / c(count as f64, 0.0)
    }

    #[test]
    fn weyl_matches_symmetrizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 1..=2 {
            let ks = random_compatible(m, &mut rng);
            let fs = FockSpace::for_structure(&ks, 7);
            for e in exponents_up_to(2 * m, 4) {
                let deg: usize = e.iter().map(|&k| k as usize).sum();
                let q = fs.weyl_quantize(&Poly::monomial(e.clone(), c(1.0, 0.0))).unwrap().mat;
                let s = symmetrized(&fs, &e);
                let r = max_abs_c(&low_block(&fs, &(q - s), 7 - deg));
                assert!(r < 1e-12, "{e:?}: {r}");
            }
        }
    }

    #[test]
    fn dirac_conditions_for_linear_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ks = random_compatible(2, &mut rng);
        let fs = FockSpace::for_structure(&ks, 5);
        let f: Vec<C64> = rand_cvec(&mut rng, 4).iter().copied().collect();
        let g: Vec<C64> = rand_cvec(&mut rng, 4).iter().copied().collect();
        let qf = fs.weyl_quantize(&linear_symbol(&f)).unwrap();
        let qg = fs.weyl_quantize(&linear_symbol(&g)).unwrap();
        let sum: Vec<C64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let qsum = fs.weyl_quantize(&linear_symbol(&sum)).unwrap();
        assert!(max_abs_c(&(&qsum.mat - &qf.mat - &qg.mat)) < 1e-12);
        let bracket = poisson_linear(&ks, &f, &g);
        let comm = qf.commutator(&qg).mat;
        let expect = CMat::identity(fs.dim(), fs.dim()) * (c(0.0, -1.0) * bracket);
        assert!(max_abs_c(&low_block(&fs, &(comm - expect), 4)) < 1e-12);
        // {φ^x, φ̄^y} = -iΔ^{xy}
        let mut ex = vec![c(0.0, 0.0); 4];
        ex[0] = c(1.0, 0.0);
        let mut ey = vec![c(0.0, 0.0); 4];
        ey[3] = c(1.0, 0.0);
        assert!((poisson_linear(&ks, &ex, &ey) - c(0.0, -ks.delta[(0, 1)])).norm() < 1e-12);
    }

    #[test]
    fn quadratic_observables() {
        let fs = FockSpace::for_structure(&flat(1), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = FockState { coeffs: rand_cvec(&mut rng, fs.dim()) };
        let id = fs.identity();
        assert!((fs.quadratic_observable(&id, &psi).unwrap().re - psi.norm_sq()).abs() < 1e-12);
        let number = FockOperator::dense(&fs.create_ops[0] * &fs.annihilate_ops[0]);
        let one = fs.basis_state(&[1]);
        assert!((fs.quadratic_observable(&number, &one).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(fs.quadratic_observable(&number, &psi).unwrap().im.abs() < 1e-12);
        let bad = FockState { coeffs: CVec::zeros(3) };
        assert!(fs.quadratic_observable(&number, &bad).is_err());
    }

    #[test]
    fn bracket_check_examples() {
        let fs = FockSpace::for_structure(&flat(1), 10);
        let number = FockOperator::dense(&fs.create_ops[0] * &fs.annihilate_ops[0]);
        let field = FockOperator::dense(&fs.create_ops[0] + &fs.annihilate_ops[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut v = CVec::zeros(fs.dim());
        for i in 0..5 {
            v[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let psi = FockState { coeffs: v };
        assert!(fs.bracket_check(&number, &field, &psi) < 1e-10);
        assert!(fs.bracket_check(&number, &number, &psi) < 1e-10);
        let comm = fs.identity().commutator(&field).mat;
        assert!(max_abs_c(&comm) == 0.0);
    }

    #[test]
    fn trig_quantization_routes_agree() {
        let fs = FockSpace::for_structure(&flat(1), 30);
        let e = TrigSymbol::plain(CVec::from_element(1, c(1.0, 0.0)));
        let q = fs.weyl_quantize_trig(&e).mat;
        let vac = q[(0, 0)];
        assert!((vac.re - (-0.5f64).exp()).abs() < 1e-8 * 0.6);
        let coh = fs.weyl_trig_coherent(&e);
        assert!(max_abs_c(&low_block(&fs, &(q.clone() - coh).rows(0, 6).into_owned(), 5)) < 1e-6);
        let zero = TrigSymbol::plain(CVec::zeros(1));
        assert!(max_abs_c(&(fs.weyl_quantize_trig(&zero).mat - CMat::identity(31, 31))) < 1e-14);
        // Wick-quantized :E: equals Weyl-quantized E
        let wick = TrigSymbol { ordering: TrigOrdering::Wick, ..e.clone() };
        assert!(max_abs_c(&(fs.wick_quantize_trig(&wick).mat - &q)) < 1e-12);
    }

    #[test]
    fn trig_quantization_is_unitary_at_low_occupancy() {
        let fs = FockSpace::for_structure(&flat(1), 30);
        let e = TrigSymbol::plain(CVec::from_element(1, c(0.6, 0.3)));
        let q = fs.weyl_quantize_trig(&e);
        for n in 0..4 {
            let psi = fs.basis_state(&[n]);
            assert!((q.apply(&psi).norm_sq() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn daggers_in_all_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ks = random_compatible(2, &mut rng);
        let fs = FockSpace::for_structure(&ks, 3);
        let x = CMat::from_fn(2, 2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let y = CMat::from_fn(2, 2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let o = crate::linalg::to_complex(&RMat::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0)));
        let o = {
            // a realified complex matrix
            let p = o.view((0, 0), (2, 2)).into_owned();
            let q = o.view((2, 0), (2, 2)).into_owned();
            crate::linalg::block2_c(&p, &-&q, &q, &p)
        };
        for (mat, coords) in [(x.clone(), Coords::Holomorphic), (x.clone(), Coords::Antiholomorphic), (o, Coords::Darboux)] {
            let op = fs.lift(&ks, &mat, coords);
            let dag = fs.dagger(&ks, &op, coords).unwrap();
            assert!(max_abs_c(&(&dag.mat - op.mat.adjoint())) < 1e-10, "{coords:?}");
            let back = fs.dagger(&ks, &dag, coords).unwrap();
            assert!(max_abs_c(&(back.mat - &op.mat)) < 1e-10);
        }
        // (AB)† = B†A† at the one-particle level
        let ab = &x * &y;
        let lhs = one_particle_dagger(&ks, &ab, Coords::Holomorphic);
        let rhs = one_particle_dagger(&ks, &y, Coords::Holomorphic) * one_particle_dagger(&ks, &x, Coords::Holomorphic);
        assert!(max_abs_c(&(lhs - rhs)) < 1e-12);
        let chi = rand_cvec(&mut rng, 2);
        let a = fs.annihilate(&chi);
        assert_eq!(fs.dagger(&ks, &a, Coords::Holomorphic).unwrap().mat, fs.create(&chi).mat);
        let dense = a.compose(&a);
        assert_eq!(fs.dagger(&ks, &dense, Coords::Holomorphic), Err(FockError::UnsupportedForm));
    }

    #[test]
    fn sq_field_momentum_ccr() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ks = random_compatible(2, &mut rng);
        let fs = FockSpace::for_structure(&ks, 5);
        let lam = [0.4, -0.7];
        let eta = [0.2, 0.9];
        let ph = fs.sq_field(&ks, &lam);
        let pi = fs.sq_momentum(&ks, &eta);
        let comm = &ph * &pi - &pi * &ph;
        let expect = CMat::identity(fs.dim(), fs.dim()) * c(0.0, lam[0] * eta[0] + lam[1] * eta[1]);
        assert!(max_abs_c(&low_block(&fs, &(comm - expect), 4)) < 1e-12);
        let pi2 = fs.sq_momentum(&ks, &lam);
        assert!(max_abs_c(&low_block(&fs, &(&pi * &pi2 - &pi2 * &pi), 4)) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn ccr_exact_below_top(seed in any::<u64>(), m in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ks = random_compatible(m, &mut rng);
            let n_max = 4;
            let fs = FockSpace::for_structure(&ks, n_max);
            let c1 = rand_cvec(&mut rng, m);
            let c2 = rand_cvec(&mut rng, m);
            let comm = fs.annihilate(&c1).commutator(&fs.create(&c2)).mat;
            let s = (c1.adjoint() * to_complex(&ks.delta) * &c2)[(0, 0)];
            let expect = CMat::identity(fs.dim(), fs.dim()) * s;
            prop_assert!(max_abs_c(&low_block(&fs, &(comm - expect), n_max - 1)) < 1e-12);
        }

        #[test]
        fn weyl_involution(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ks = random_compatible(2, &mut rng);
            let fs = FockSpace::for_structure(&ks, 5);
            let mut sym = Poly::zero(4);
            for e in exponents_up_to(4, 3) {
                sym.add_term(e, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
            let q = fs.weyl_quantize(&sym).unwrap().mat;
            let qbar = fs.weyl_quantize(&sym.conj_symbol()).unwrap().mat;
            prop_assert!(max_abs_c(&low_block(&fs, &(qbar - q.adjoint()), 2)) < 1e-10);
        }
    }
}
