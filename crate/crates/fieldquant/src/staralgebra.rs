//! Symbol algebra: trigonometric exponentials, Moyal and Wick star products, Weyl
//! norm bounds and the calculus of two-argument exponential kernels.
//!
//! `E_χ = exp(iχ̄·φ + iχ·φ̄)` and `:E_χ: = e^{-χ̄Δχ/2} E_χ`. Kernels are functions of
//! `(φ, σ̄)` composed by white-noise integration, `∫ A(φ, σ̄) B(σ, γ̄)`, with the rule
//! `exp(φXσ̄) ∘ exp(σYγ̄) = exp(φXYγ̄)`.

use crate::gaussmeasure::{complex_pairing, integrate_trailing, GaussError};
use crate::kahler::KahlerStructure;
use crate::linalg::{block2, c, epsilon, to_complex};
use crate::poly::Poly;
use crate::{CMat, CVec, RMat, C64};
use thiserror::Error;

pub const STAR_DEGREE_CAP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StarError {
    #[error("combined degree {0} exceeds the star-product cap {1}")]
    DegreeOverflow(usize, usize),
    #[error("symbols live on different mode counts")]
    Dimension,
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigOrdering {
    Plain,
    Wick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigSymbol {
    pub prefactor: C64,
    pub chi: CVec,
    pub ordering: TrigOrdering,
}

impl TrigSymbol {
    pub fn plain(chi: CVec) -> Self {
        Self { prefactor: c(1.0, 0.0), chi, ordering: TrigOrdering::Plain }
    }

    pub fn wick(chi: CVec) -> Self {
        Self { prefactor: c(1.0, 0.0), chi, ordering: TrigOrdering::Wick }
    }

    /// Complex conjugate: `E_χ ↦ E_{-χ}` with conjugated prefactor.
    pub fn conj(&self) -> Self {
        Self { prefactor: self.prefactor.conj(), chi: -&self.chi, ordering: self.ordering }
    }

    pub fn to_plain(&self, delta: &RMat) -> Self {
        match self.ordering {
            TrigOrdering::Plain => self.clone(),
            TrigOrdering::Wick => Self {
                prefactor: self.prefactor * (-0.5 * quad(delta, &self.chi, &self.chi)).exp(),
                chi: self.chi.clone(),
                ordering: TrigOrdering::Plain,
            },
        }
    }

    pub fn to_wick(&self, delta: &RMat) -> Self {
        match self.ordering {
            TrigOrdering::Wick => self.clone(),
            TrigOrdering::Plain => Self {
                prefactor: self.prefactor * (0.5 * quad(delta, &self.chi, &self.chi)).exp(),
                chi: self.chi.clone(),
                ordering: TrigOrdering::Wick,
            },
        }
    }

    /// Value at a phase-space point `φ`.
    pub fn eval(&self, delta: &RMat, phi: &CVec) -> C64 {
        let p = self.to_plain(delta);
        let i = c(0.0, 1.0);
        let expo: C64 = (0..phi.len()).map(|x| i * (p.chi[x].conj() * phi[x] + p.chi[x] * phi[x].conj())).sum();
        p.prefactor * expo.exp()
    }
}

/// `ūᵗ Δ v`.
fn quad(delta: &RMat, u: &CVec, v: &CVec) -> C64 {
    (u.adjoint() * to_complex(delta) * v)[(0, 0)]
}

/// Weyl cocycle `exp((ρ̄Δα - ᾱΔρ)/2)`.
pub fn weyl_cocycle(rho: &CVec, alpha: &CVec, delta: &RMat) -> C64 {
    ((quad(delta, rho, alpha) - quad(delta, alpha, rho)) * 0.5).exp()
}

/// Closed-form Moyal product of trigonometric symbols, returned in plain ordering.
pub fn moyal_star_trig(e1: &TrigSymbol, e2: &TrigSymbol, delta: &RMat) -> TrigSymbol {
    let a = e1.to_plain(delta);
    let b = e2.to_plain(delta);
    TrigSymbol {
        prefactor: a.prefactor * b.prefactor * weyl_cocycle(&a.chi, &b.chi, delta),
        chi: &a.chi + &b.chi,
        ordering: TrigOrdering::Plain,
    }
}

/// Closed-form Wick product of trigonometric symbols, returned in Wick ordering.
pub fn wick_star_trig(e1: &TrigSymbol, e2: &TrigSymbol, delta: &RMat) -> TrigSymbol {
    let a = e1.to_wick(delta);
    let b = e2.to_wick(delta);
    TrigSymbol {
        prefactor: a.prefactor * b.prefactor * weyl_cocycle(&a.chi, &b.chi, delta),
        chi: &a.chi + &b.chi,
        ordering: TrigOrdering::Wick,
    }
}

fn check_pair(f: &Poly, g: &Poly) -> Result<usize, StarError> {
    if f.nvars != g.nvars || f.nvars % 2 != 0 {
        return Err(StarError::Dimension);
    }
    let deg = f.degree() + g.degree();
    if deg > STAR_DEGREE_CAP {
        return Err(StarError::DegreeOverflow(deg, STAR_DEGREE_CAP));
    }
    Ok(f.nvars / 2)
}

/// Applies `exp(½ Σ q ∂_F ∂_G)` to `F ⊗ G` and sets both arguments equal.
fn bidifferential(f: &Poly, g: &Poly, q: &CMat) -> Poly {
    let n = f.nvars;
    let left: Vec<usize> = (0..n).collect();
    let right: Vec<usize> = (n..2 * n).collect();
    let prod = &f.embed(2 * n, &left) * &g.embed(2 * n, &right);
    let merged: Vec<usize> = (0..2 * n).map(|i| i % n).collect();
    prod.heat(q).embed(n, &merged)
}

/// Moyal product `exp(½Δ(∂̄_F∂_G - ∂_F∂̄_G)) F G`.
pub fn moyal_star(f: &Poly, g: &Poly, delta: &RMat) -> Result<Poly, StarError> {
    let m = check_pair(f, g)?;
    let mut q = CMat::zeros(4 * m, 4 * m);
    for x in 0..m {
        for y in 0..m {
            let d = c(delta[(x, y)], 0.0);
            // ∂_φ̄(F) ∂_φ(G) and ∂_φ(F) ∂_φ̄(G)
            q[(m + x, 2 * m + y)] = d * 0.5;
            q[(2 * m + y, m + x)] = d * 0.5;
            q[(x, 3 * m + y)] = -d * 0.5;
            q[(3 * m + y, x)] = -d * 0.5;
        }
    }
    Ok(bidifferential(f, g, &q))
}

/// Wick product `exp(Δ ∂̄_F ∂_G) F G`.
pub fn wick_star(f: &Poly, g: &Poly, delta: &RMat) -> Result<Poly, StarError> {
    let m = check_pair(f, g)?;
    let mut q = CMat::zeros(4 * m, 4 * m);
    for x in 0..m {
        for y in 0..m {
            q[(m + x, 2 * m + y)] = c(delta[(x, y)], 0.0);
            q[(2 * m + y, m + x)] = c(delta[(x, y)], 0.0);
        }
    }
    Ok(bidifferential(f, g, &q))
}

/// Moyal product by the shifted double Gaussian integral
/// `∫ F(φ + χ, φ̄ + ζ̄) G(φ + ζ, φ̄ - χ̄)` with `⟨χχ̄⟩ = ⟨ζζ̄⟩ = Δ/2`.
pub fn moyal_star_integral(f: &Poly, g: &Poly, delta: &RMat) -> Result<Poly, StarError> {
    let m = check_pair(f, g)?;
    // variables: φ, φ̄, χ, χ̄, ζ, ζ̄
    let n = 6 * m;
    let mut lf = CMat::zeros(2 * m, n);
    let mut lg = CMat::zeros(2 * m, n);
    for x in 0..m {
        lf[(x, x)] = c(1.0, 0.0);
        lf[(x, 2 * m + x)] = c(1.0, 0.0);
        lf[(m + x, m + x)] = c(1.0, 0.0);
        lf[(m + x, 5 * m + x)] = c(1.0, 0.0);
        lg[(x, x)] = c(1.0, 0.0);
        lg[(x, 4 * m + x)] = c(1.0, 0.0);
        lg[(m + x, m + x)] = c(1.0, 0.0);
        lg[(m + x, 3 * m + x)] = c(-1.0, 0.0);
    }
    let prod = &f.linear_subst(&lf) * &g.linear_subst(&lg);
    let half = to_complex(&(delta * 0.5));
    let block = complex_pairing(&half);
    let mut pair = CMat::zeros(4 * m, 4 * m);
    pair.view_mut((0, 0), (2 * m, 2 * m)).copy_from(&block);
    pair.view_mut((2 * m, 2 * m), (2 * m, 2 * m)).copy_from(&block);
    Ok(integrate_trailing(&prod, 2 * m, &pair)?)
}

/// Wick product by `∫ F(φ, φ̄ + √2ζ̄) G(φ + √2ζ, φ̄)` with `⟨ζζ̄⟩ = Δ/2`.
pub fn wick_star_integral(f: &Poly, g: &Poly, delta: &RMat) -> Result<Poly, StarError> {
    let m = check_pair(f, g)?;
    let n = 4 * m;
    let r2 = c(std::f64::consts::SQRT_2, 0.0);
    let mut lf = CMat::zeros(2 * m, n);
    let mut lg = CMat::zeros(2 * m, n);
    for x in 0..m {
        lf[(x, x)] = c(1.0, 0.0);
        lf[(m + x, m + x)] = c(1.0, 0.0);
        lf[(m + x, 3 * m + x)] = r2;
        lg[(x, x)] = c(1.0, 0.0);
        lg[(x, 2 * m + x)] = r2;
        lg[(m + x, m + x)] = c(1.0, 0.0);
    }
    let prod = &f.linear_subst(&lf) * &g.linear_subst(&lg);
    let pair = complex_pairing(&to_complex(&(delta * 0.5)));
    Ok(integrate_trailing(&prod, 2 * m, &pair)?)
}

/// Gram form `Σ F̄ₙFₘ e^{-(χᵐ-χⁿ)†Δ(χᵐ-χⁿ)/2}` with the exponent sign `s`.
fn weighted_gram(terms: &[(C64, CVec)], delta: &RMat, s: f64, absolute: bool) -> f64 {
    let mut acc = c(0.0, 0.0);
    for (fn_, chn) in terms {
        for (fm, chm) in terms {
            let d = chm - chn;
            let w = (s * 0.5 * quad(delta, &d, &d).re).exp();
            let p = fn_.conj() * fm;
            acc += if absolute { c(p.norm() * w, 0.0) } else { p * w };
        }
    }
    acc.re.max(0.0)
}

/// `(‖F‖_cl, upper)` for `F = Σ Fₙ E_{χⁿ}`; the Weyl operator norm lies between them.
pub fn weyl_norm_bounds(terms: &[(C64, CVec)], delta: &RMat) -> (f64, f64) {
    (weighted_gram(terms, delta, -1.0, false).sqrt(), weighted_gram(terms, delta, 1.0, true).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    Exp,
    /// `√2 cosh(M) cos(U)`.
    CoshCos,
    CoshSin,
    SinhCos,
    SinhSin,
}

impl KernelForm {
    pub const TRIG: [KernelForm; 4] = [KernelForm::CoshCos, KernelForm::CoshSin, KernelForm::SinhCos, KernelForm::SinhSin];

    /// `(hyperbolic is sinh, trigonometric is sin)`.
    fn parity(self) -> (bool, bool) {
        match self {
            KernelForm::Exp => (false, false),
            KernelForm::CoshCos => (false, false),
            KernelForm::CoshSin => (false, true),
            KernelForm::SinhCos => (true, false),
            KernelForm::SinhSin => (true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelForm::Exp => "exp",
            KernelForm::CoshCos => "cosh cos",
            KernelForm::CoshSin => "cosh sin",
            KernelForm::SinhCos => "sinh cos",
            KernelForm::SinhSin => "sinh sin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTerm {
    pub coeff: C64,
    pub form: KernelForm,
    pub m: CMat,
    pub u: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub terms: Vec<KernelTerm>,
}

impl GaussianKernel {
    pub fn exp(x: CMat) -> Self {
        let u = CMat::zeros(x.nrows(), x.ncols());
        Self { terms: vec![KernelTerm { coeff: c(1.0, 0.0), form: KernelForm::Exp, m: x, u }] }
    }

    pub fn identity(n: usize) -> Self {
        Self::exp(CMat::identity(n, n))
    }

    pub fn trig(form: KernelForm, m: CMat, u: CMat) -> Self {
        Self { terms: vec![KernelTerm { coeff: c(1.0, 0.0), form, m, u }] }
    }

    /// Pure-exponential expansion: trig-hyperbolic terms become
    /// `√2/4 · (-i)^t · Σ_{p,q=±1} p^s q^t exp(φ(pM + iqU)σ̄)`.
    pub fn expand(&self) -> Vec<(C64, CMat)> {
        let mut out = Vec::new();
        for t in &self.terms {
            if t.form == KernelForm::Exp {
                out.push((t.coeff, t.m.clone()));
                continue;
            }
            let (s, tr) = t.form.parity();
            let base = t.coeff * std::f64::consts::SQRT_2 * 0.25 * if tr { c(0.0, -1.0) } else { c(1.0, 0.0) };
            for p in [1.0, -1.0] {
                for q in [1.0, -1.0] {
                    let sign = (if s { p } else { 1.0 }) * (if tr { q } else { 1.0 });
                    out.push((base * sign, &t.m * c(p, 0.0) + &t.u * c(0.0, q)));
                }
            }
        }
        out
    }

    /// `∫ Dβ(σ) self(φ, σ̄) other(σ, γ̄)` through the exponential expansion.
    pub fn compose(&self, other: &GaussianKernel) -> GaussianKernel {
        let mut terms = Vec::new();
        for (a, x) in self.expand() {
            for (b, y) in other.expand() {
                let u = CMat::zeros(x.nrows(), y.ncols());
                terms.push(KernelTerm { coeff: a * b, form: KernelForm::Exp, m: &x * &y, u });
            }
        }
        GaussianKernel { terms }
    }

    /// Value at `(φ, γ̄)`, with `γ̄` passed as the already-conjugated vector.
    pub fn eval(&self, phi: &CVec, gamma_bar: &CVec) -> C64 {
        self.expand().iter().map(|(a, x)| a * (phi.transpose() * x * gamma_bar)[(0, 0)].exp()).sum()
    }

    /// Evaluates each term in its native trig-hyperbolic form.
    pub fn eval_native(&self, phi: &CVec, gamma_bar: &CVec) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let mm = (phi.transpose() * &t.m * gamma_bar)[(0, 0)];
                let uu = (phi.transpose() * &t.u * gamma_bar)[(0, 0)];
                let v = match t.form {
                    KernelForm::Exp => mm.exp(),
                    KernelForm::CoshCos => mm.cosh() * uu.cos(),
                    KernelForm::CoshSin => mm.cosh() * uu.sin(),
                    KernelForm::SinhCos => mm.sinh() * uu.cos(),
                    KernelForm::SinhSin => mm.sinh() * uu.sin(),
                };
                let w = if t.form == KernelForm::Exp { 1.0 } else { std::f64::consts::SQRT_2 };
                t.coeff * v * w
            })
            .sum()
    }

    /// Acts on a polynomial `Ψ(σ)`: each `exp(φBσ̄)` substitutes `σ ↦ Bᵗφ`.
    pub fn apply(&self, psi: &Poly) -> Poly {
        let mut out = Poly::zero(psi.nvars);
        for (a, b) in self.expand() {
            out = &out + &psi.linear_subst(&b.transpose()).scale(a);
        }
        out
    }

    /// Coefficient-wise distance between two single-exponential kernels' exponents.
    pub fn exponent(&self) -> Option<CMat> {
        match self.terms.as_slice() {
            [t] if t.form == KernelForm::Exp && t.coeff == c(1.0, 0.0) => Some(t.m.clone()),
            _ => None,
        }
    }
}

/// Transcribed right-hand side of the composition table for `A ∘ B`, both trig forms.
pub fn table1_rhs(a: KernelForm, b: KernelForm, m: &CMat, u: &CMat, n: &CMat, v: &CMat, phi: &CVec, gamma_bar: &CVec) -> C64 {
    use KernelForm::*;
    let bil = |x: CMat| (phi.transpose() * x * gamma_bar)[(0, 0)];
    let bp = bil(m * n + u * v); // ⊞
    let bm = bil(m * n - u * v); // ⊟
    let op = bil(u * n + m * v); // ⊕
    let om = bil(u * n - m * v); // ⊖
    let zero = c(0.0, 0.0);
    match (a, b) {
        (CoshCos, CoshCos) => bp.cosh() * om.cos() + bm.cosh() * op.cos(),
        (CoshCos, SinhSin) => -bp.sinh() * om.sin() + bm.sinh() * op.sin(),
        (CoshSin, CoshSin) => bp.sinh() * om.cos() - bm.sinh() * op.cos(),
        (CoshSin, SinhCos) => bp.cosh() * om.sin() + bm.cosh() * op.sin(),
        (SinhCos, CoshSin) => -bp.cosh() * om.sin() + bm.cosh() * op.sin(),
        (SinhCos, SinhCos) => bp.sinh() * om.cos() + bm.sinh() * op.cos(),
        (SinhSin, CoshCos) => bp.sinh() * om.sin() + bm.sinh() * op.sin(),
        (SinhSin, SinhSin) => bp.cosh() * om.cos() - bm.cosh() * op.cos(),
        (Exp, _) | (_, Exp) => panic!("table covers trig-hyperbolic kernels only"),
        _ => zero,
    }
}

/// Realified exponent `[[AD⁻¹, -D⁻¹], [D⁻¹, AD⁻¹]]` of the Fourier kernel.
pub fn fourier_exponent(ks: &KahlerStructure) -> RMat {
    let dinv = ks.d.clone().try_inverse().expect("D is invertible");
    let ad = &ks.a * &dinv;
    block2(&ad, &-&dinv, &dinv, &ad)
}

/// Exponent of the inverse Fourier kernel, `-[[KA, K], [-K, KA]]`.
pub fn fourier_inverse_exponent(ks: &KahlerStructure) -> RMat {
    let ka = &ks.k * &ks.a;
    -block2(&ka, &ks.k, &-&ks.k, &ka)
}

pub fn sq_fourier_kernel(ks: &KahlerStructure) -> (GaussianKernel, GaussianKernel) {
    (GaussianKernel::exp(to_complex(&fourier_exponent(ks))), GaussianKernel::exp(to_complex(&fourier_inverse_exponent(ks))))
}

/// Residuals of `Xᵗ(-D̃)X = Δ̃` and `K̃ εᵗXᵗε (-D̃) = X⁻¹` for the Fourier exponent.
pub fn fourier_kernel_residuals(ks: &KahlerStructure) -> (f64, f64, f64) {
    let n = ks.m();
    let x = fourier_exponent(ks);
    let xi = fourier_inverse_exponent(ks);
    let z = RMat::zeros(n, n);
    let dt = block2(&ks.d, &z, &z, &ks.d);
    let delt = block2(&ks.delta, &z, &z, &ks.delta);
    let kt = block2(&ks.k, &z, &z, &ks.k);
    let eps = epsilon(n);
    let inv_res = crate::linalg::max_abs(&(&x * &xi - RMat::identity(2 * n, 2 * n)));
    let metric_res = crate::linalg::max_abs(&(x.transpose() * -&dt * &x - delt));
    let dagger = kt * eps.transpose() * x.transpose() * eps * -dt;
    let dagger_res = crate::linalg::max_abs(&(dagger - xi));
    (inv_res, metric_res, dagger_res)
}
