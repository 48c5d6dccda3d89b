//! Finite-dimensional Gaussian measures and exact polynomial moments.
//!
//! Complex measures act on `2M` variables `(s, s̄)` with `⟨s_x s̄_y⟩ = cov_xy` and
//! `⟨ss⟩ = ⟨s̄s̄⟩ = 0`. Real measures act on `M` variables with `⟨x_i x_j⟩ = cov_ij`.
//!
//! | kind            | state variable | covariance |
//! |-----------------|----------------|------------|
//! | holomorphic     | `φ`            | `Δ`        |
//! | antiholomorphic | `φ̄`            | `-D`       |
//! | schrodinger     | `ϕ` (real)     | `Δ/2`      |
//! | momentum        | `π` (real)     | `-D/2`     |
//! | weyl            | `φ`            | `Δ/2`      |
//! | white noise     | `σ`            | `1`        |

use crate::fock::{FockSpace, FockState};
use crate::kahler::KahlerStructure;
use crate::linalg::{herm_eigenvalues, max_abs_c, to_complex};
use crate::poly::{Exps, Poly};
use crate::{CMat, CVec, C64};
use std::collections::HashMap;
use thiserror::Error;

pub const MOMENT_DEGREE_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degree {0} exceeds the enumeration limit {1}")]
    DegreeOverflow(usize, usize),
    #[error("covariance is not Hermitian positive definite")]
    BadCovariance,
    #[error("symbol has an antiholomorphic part")]
    NotHolomorphic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Holomorphic,
    Antiholomorphic,
    Schrodinger,
    Momentum,
    Weyl,
    WhiteNoise,
}

impl MeasureKind {
    pub fn is_real(self) -> bool {
        matches!(self, MeasureKind::Schrodinger | MeasureKind::Momentum)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub kind: MeasureKind,
    pub cov: CMat,
}

impl GaussianSpec {
    pub fn new(kind: MeasureKind, cov: CMat) -> Result<Self, GaussError> {
        let herm = max_abs_c(&(&cov - cov.adjoint()));
        let ev = herm_eigenvalues(&cov);
        if herm > 1e-10 * max_abs_c(&cov).max(1.0) || ev.first().map_or(true, |&e| e <= 0.0) {
            return Err(GaussError::BadCovariance);
        }
        Ok(Self { kind, cov })
    }

    pub fn for_structure(kind: MeasureKind, ks: &KahlerStructure) -> Self {
        let cov = match kind {
            MeasureKind::Holomorphic => ks.delta.clone(),
            MeasureKind::Antiholomorphic => -&ks.d,
            MeasureKind::Schrodinger | MeasureKind::Weyl => &ks.delta * 0.5,
            MeasureKind::Momentum => &ks.d * -0.5,
            MeasureKind::WhiteNoise => crate::RMat::identity(ks.m(), ks.m()),
        };
        Self { kind, cov: to_complex(&cov) }
    }

    pub fn m(&self) -> usize {
        self.cov.nrows()
    }

    /// Number of integration variables.
    pub fn nvars(&self) -> usize {
        if self.kind.is_real() {
            self.m()
        } else {
            2 * self.m()
        }
    }

    /// Symmetric pairing matrix over all integration variables.
    pub fn pairing(&self) -> CMat {
        if self.kind.is_real() {
            return self.cov.clone();
        }
        complex_pairing(&self.cov)
    }
}

/// Pairing matrix of a complex Gaussian on `(s, s̄)` with `⟨s s̄ᵗ⟩ = cov`.
pub fn complex_pairing(cov: &CMat) -> CMat {
    let m = cov.nrows();
    let mut p = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            p[(i, m + j)] = cov[(i, j)];
            p[(m + j, i)] = cov[(i, j)];
        }
    }
    p
}

/// `E[exp(i(ρ̄·s + ρ·s̄))] = exp(-ρ̄ᵗ cov ρ)` for complex kinds, `exp(-½ ξᵗ cov ξ)` for real ones.
pub fn characteristic(spec: &GaussianSpec, rho: &[C64]) -> Result<C64, GaussError> {
    if rho.len() != spec.m() {
        return Err(GaussError::Dimension { expected: spec.m(), got: rho.len() });
    }
    let r = CVec::from_column_slice(rho);
    let q = if spec.kind.is_real() {
        (r.transpose() * &spec.cov * &r)[(0, 0)] * 0.5
    } else {
        (r.adjoint() * &spec.cov * &r)[(0, 0)]
    };
    Ok((-q).exp())
}

/// Isserlis expectation of a monomial under the pairing matrix `pair`.
pub fn monomial_moment(pair: &CMat, exps: &[u8], memo: &mut HashMap<Exps, C64>) -> C64 {
    let total: usize = exps.iter().map(|&k| k as usize).sum();
    if total == 0 {
        return C64::new(1.0, 0.0);
    }
    if total % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    if let Some(v) = memo.get(exps) {
        return *v;
    }
    let i = exps.iter().position(|&k| k > 0).unwrap();
    let mut rest = exps.to_vec();
    rest[i] -= 1;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..exps.len() {
        let mult = rest[j];
        if mult == 0 || pair[(i, j)] == C64::new(0.0, 0.0) {
            continue;
        }
        let mut r2 = rest.clone();
        r2[j] -= 1;
        acc += pair[(i, j)] * mult as f64 * monomial_moment(pair, &r2, memo);
    }
    memo.insert(exps.to_vec(), acc);
    acc
}

/// Exact expectation of a polynomial in the measure's integration variables.
pub fn gaussian_moment(spec: &GaussianSpec, p: &Poly) -> Result<C64, GaussError> {
    if p.nvars != spec.nvars() {
        return Err(GaussError::Dimension { expected: spec.nvars(), got: p.nvars });
    }
    moment_with_pairing(&spec.pairing(), p)
}

pub fn moment_with_pairing(pair: &CMat, p: &Poly) -> Result<C64, GaussError> {
    let deg = p.degree();
    if deg > MOMENT_DEGREE_LIMIT {
        return Err(GaussError::DegreeOverflow(deg, MOMENT_DEGREE_LIMIT));
    }
    let mut memo = HashMap::new();
    Ok(p.terms.iter().map(|(e, c)| c * monomial_moment(pair, e, &mut memo)).sum())
}

/// Integrates out the trailing variables `keep..nvars` with pairing `pair`,
/// leaving a polynomial in the first `keep` variables.
pub fn integrate_trailing(p: &Poly, keep: usize, pair: &CMat) -> Result<Poly, GaussError> {
    if keep + pair.nrows() != p.nvars {
        return Err(GaussError::Dimension { expected: p.nvars - keep, got: pair.nrows() });
    }
    let mut memo = HashMap::new();
    let mut out = Poly::zero(keep);
    for (e, c) in &p.terms {
        let tail = &e[keep..];
        let deg: usize = tail.iter().map(|&k| k as usize).sum();
        if deg > MOMENT_DEGREE_LIMIT {
            return Err(GaussError::DegreeOverflow(deg, MOMENT_DEGREE_LIMIT));
        }
        let v = monomial_moment(pair, tail, &mut memo);
        if v != C64::new(0.0, 0.0) {
            out.add_term(e[..keep].to_vec(), c * v);
        }
    }
    Ok(out)
}

/// `⟨f, g⟩` for states given as polynomials in the measure's state variable.
pub fn inner(spec: &GaussianSpec, f: &Poly, g: &Poly) -> Result<C64, GaussError> {
    let m = spec.m();
    if f.nvars != m || g.nvars != m {
        return Err(GaussError::Dimension { expected: m, got: f.nvars.max(g.nvars) });
    }
    if spec.kind.is_real() {
        return gaussian_moment(spec, &(&f.conj_coeffs() * g));
    }
    let bar: Vec<usize> = (m..2 * m).collect();
    let id: Vec<usize> = (0..m).collect();
    let prod = &f.conj_coeffs().embed(2 * m, &bar) * &g.embed(2 * m, &id);
    gaussian_moment(spec, &prod)
}

/// Heat-type operator `exp(s·½Δ_xy ∂_φ̄x ∂_φy)` on symbols over `(φ, φ̄)`.
fn mixed_heat(sym: &Poly, delta: &CMat, s: f64) -> Poly {
    let m = delta.nrows();
    assert_eq!(sym.nvars, 2 * m);
    let q = complex_pairing(delta) * C64::new(0.5 * s, 0.0);
    sym.heat(&q)
}

/// `exp(-½ Δ ∂_φ̄ ∂_φ)`: plain monomials to Wick-ordered form for covariance `Δ/2`.
pub fn wick_order(sym: &Poly, delta: &CMat) -> Poly {
    mixed_heat(sym, delta, -1.0)
}

/// Inverse of [`wick_order`].
pub fn wick_unorder(sym: &Poly, delta: &CMat) -> Poly {
    mixed_heat(sym, delta, 1.0)
}

fn holomorphic_part(sym: &Poly, m: usize) -> Result<Poly, GaussError> {
    if sym.nvars == m {
        return Ok(sym.clone());
    }
    if sym.nvars != 2 * m {
        return Err(GaussError::Dimension { expected: m, got: sym.nvars });
    }
    let mut out = Poly::zero(m);
    for (e, c) in &sym.terms {
        if e[m..].iter().any(|&k| k > 0) {
            if *c != C64::new(0.0, 0.0) {
                return Err(GaussError::NotHolomorphic);
            }
            continue;
        }
        out.add_term(e[..m].to_vec(), *c);
    }
    Ok(out)
}

/// Fock coefficients of a holomorphic polynomial: the `√n!`-weighted Segal map.
pub fn segal_coefficients(sym: &Poly, fs: &FockSpace) -> Result<FockState, GaussError> {
    let holo = holomorphic_part(sym, fs.m)?;
    let deg = holo.degree();
    if deg > fs.n_max {
        return Err(GaussError::DegreeOverflow(deg, fs.n_max));
    }
    let in_z = holo.linear_subst(&to_complex(&fs.chol));
    let mut v = CVec::zeros(fs.dim());
    for (e, c) in &in_z.terms {
        v[fs.index_of(e)] += c * factorial_weight(e).sqrt();
    }
    Ok(FockState { coeffs: v })
}

/// Inverse of [`segal_coefficients`].
pub fn segal_polynomial(state: &FockState, fs: &FockSpace) -> Poly {
    let mut in_z = Poly::zero(fs.m);
    for (idx, e) in fs.basis.iter().enumerate() {
        in_z.add_term(e.clone(), state.coeffs[idx] / factorial_weight(e).sqrt());
    }
    in_z.linear_subst(&to_complex(&fs.chol_inv))
}

/// `α! = Π α_i!`.
pub fn factorial_weight(e: &[u8]) -> f64 {
    e.iter().map(|&k| (1..=k as u32).map(f64::from).product::<f64>()).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{flat, random_compatible};
    use crate::linalg::c;
    use crate::RMat;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phi_phibar(m: usize) -> (Vec<Poly>, Vec<Poly>) {
        ((0..m).map(|i| Poly::var(2 * m, i)).collect(), (0..m).map(|i| Poly::var(2 * m, m + i)).collect())
    }

    #[test]
    fn characteristic_values() {
        let ks = flat(1);
        let hol = GaussianSpec::for_structure(MeasureKind::Holomorphic, &ks);
        assert_eq!(characteristic(&hol, &[c(0.0, 0.0)]).unwrap(), c(1.0, 0.0));
        assert!((characteristic(&hol, &[c(1.0, 0.0)]).unwrap() - c((-1.0f64).exp(), 0.0)).norm() < 1e-15);
        let sch = GaussianSpec::for_structure(MeasureKind::Schrodinger, &ks);
        assert!((characteristic(&sch, &[c(2.0, 0.0)]).unwrap() - c((-1.0f64).exp(), 0.0)).norm() < 1e-15);
        assert!(characteristic(&hol, &[]).is_err());
    }

    #[test]
    fn low_moments() {
        let hol = GaussianSpec::for_structure(MeasureKind::Holomorphic, &flat(1));
        let (p, pb) = phi_phibar(1);
        let ppb = &p[0] * &pb[0];
        assert_eq!(gaussian_moment(&hol, &ppb).unwrap(), c(1.0, 0.0));
        assert_eq!(gaussian_moment(&hol, &(&ppb * &ppb)).unwrap(), c(2.0, 0.0));
        assert_eq!(gaussian_moment(&hol, &(&p[0] * &p[0])).unwrap(), c(0.0, 0.0));
        let big = Poly::monomial(vec![7, 7], c(1.0, 0.0));
        assert_eq!(gaussian_moment(&hol, &big), Err(GaussError::DegreeOverflow(14, 12)));
    }

    #[test]
    fn characteristic_matches_moment_series() {
        // Taylor series of the exponential against the closed form, at small ρ
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ks = random_compatible(2, &mut rng);
        let spec = GaussianSpec::for_structure(MeasureKind::Holomorphic, &ks);
        let rho = [c(0.1, -0.05), c(-0.07, 0.12)];
        let mut lin = Poly::zero(4);
        for x in 0..2 {
            lin = &lin + &Poly::var(4, x).scale(c(0.0, 1.0) * rho[x].conj());
            lin = &lin + &Poly::var(4, 2 + x).scale(c(0.0, 1.0) * rho[x]);
        }
        let mut series = Poly::one(4);
        let mut term = Poly::one(4);
        for k in 1..=12 {
            term = (&term * &lin).scale(c(1.0 / k as f64, 0.0));
            series = &series + &term;
        }
        let got = gaussian_moment(&spec, &series).unwrap();
        assert!((got - characteristic(&spec, &rho).unwrap()).norm() < 1e-12, "{got} {}", characteristic(&spec, &rho).unwrap());
    }

    #[test]
    fn wick_ordering_examples() {
        let delta = CMat::identity(1, 1);
        let (p, pb) = phi_phibar(1);
        assert_eq!(wick_order(&p[0], &delta), p[0]);
        let w = wick_order(&(&p[0] * &pb[0]), &delta);
        assert_eq!(w.coeff(&[1, 1]), c(1.0, 0.0));
        assert_eq!(w.coeff(&[0, 0]), c(-0.5, 0.0));
    }

    #[test]
    fn characteristic_gram_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ks = random_compatible(2, &mut rng);
        let spec = GaussianSpec::for_structure(MeasureKind::Holomorphic, &ks);
        let pts: Vec<[C64; 2]> =
            (0..8).map(|_| [c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))]).collect();
        let g = CMat::from_fn(8, 8, |i, j| {
            let d = [pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]];
            characteristic(&spec, &d).unwrap()
        });
        assert!(herm_eigenvalues(&g)[0] > -1e-12);
    }

    fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, deg: usize) -> Poly {
        let mut p = Poly::zero(nvars);
        for e in crate::poly::exponents_up_to(nvars, deg) {
            p.add_term(e, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        p
    }

    fn tensor_norm(p: &Poly, delta: &RMat, m: usize) -> C64 {
        // Σₙ n!·ψ̄⁽ⁿ⁾Δ^{⊗n}ψ⁽ⁿ⁾ with ψ⁽ⁿ⁾ the symmetric coefficient tensor
        let deg = p.degree();
        let mut total = c(0.0, 0.0);
        for n in 0..=deg {
            let tuples: Vec<Vec<usize>> = (0..m.pow(n as u32))
                .map(|mut k| (0..n).map(|_| { let d = k % m; k /= m; d }).collect())
                .collect();
            let tensor = |t: &Vec<usize>| {
                let mut e = vec![0u8; m];
                for &x in t {
                    e[x] += 1;
                }
                let multinom = (1..=n).map(|v| v as f64).product::<f64>() / factorial_weight(&e);
                p.coeff(&e) / multinom
            };
            let nf: f64 = (1..=n).map(|v| v as f64).product();
            for s in &tuples {
                for t in &tuples {
                    let w: f64 = s.iter().zip(t).map(|(&a, &b)| delta[(a, b)]).product();
                    total += tensor(s).conj() * tensor(t) * w * nf;
                }
            }
        }
        total
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn wick_round_trip(seed in any::<u64>(), m in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ks = random_compatible(m, &mut rng);
            let delta = to_complex(&ks.delta);
            let p = random_poly(&mut rng, 2 * m, 4);
            let back = wick_unorder(&wick_order(&p, &delta), &delta);
            prop_assert!(back.max_diff(&p) < 1e-12);
        }

        #[test]
        fn wick_monomials_have_zero_mean(seed in any::<u64>(), m in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ks = random_compatible(m, &mut rng);
            let weyl = GaussianSpec::for_structure(MeasureKind::Weyl, &ks);
            let delta = to_complex(&ks.delta);
            for e in crate::poly::exponents_up_to(2 * m, 4).into_iter().skip(1) {
                let w = wick_order(&Poly::monomial(e, c(1.0, 0.0)), &delta);
                prop_assert!(gaussian_moment(&weyl, &w).unwrap().norm() < 1e-12);
            }
        }

        #[test]
        fn segal_map_is_unitary(seed in any::<u64>(), m in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ks = random_compatible(m, &mut rng);
            let fs = FockSpace::new(&ks.delta, 4);
            let spec = GaussianSpec::for_structure(MeasureKind::Holomorphic, &ks);
            let p = random_poly(&mut rng, m, if m == 3 { 3 } else { 4 });
            let q = random_poly(&mut rng, m, 3);
            let sp = segal_coefficients(&p, &fs).unwrap();
            let sq = segal_coefficients(&q, &fs).unwrap();
            let lhs = inner(&spec, &p, &q).unwrap();
            let rhs = sp.inner(&sq);
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
            let tn = tensor_norm(&p, &ks.delta, m);
            prop_assert!((tn - sp.inner(&sp)).norm() < 1e-10 * (1.0 + tn.norm()));
            prop_assert!(segal_polynomial(&sp, &fs).max_diff(&p) < 1e-10);
        }
    }

    #[test]
    fn segal_basics() {
        let ks = flat(1);
        let fs = FockSpace::new(&ks.delta, 3);
        let vac = segal_coefficients(&Poly::one(1), &fs).unwrap();
        assert_eq!(vac.coeffs[0], c(1.0, 0.0));
        let one = segal_coefficients(&Poly::var(1, 0), &fs).unwrap();
        assert_eq!(one.coeffs[1], c(1.0, 0.0));
        let anti = Poly::var(2, 1);
        assert_eq!(segal_coefficients(&anti, &fs), Err(GaussError::NotHolomorphic));
    }
}
