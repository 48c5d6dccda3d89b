//! Unitary maps between the four pictures of the same Fock space.
//!
//! States are polynomials relative to each picture's vacuum, in `M` variables:
//! `φ` (holomorphic), `φ̄` (antiholomorphic), `ϕ` (Schrödinger) or `π` (momentum).
//! The Schrödinger vacuum is `exp(i ϕ·KA·ϕ/2)`, the momentum vacuum
//! `exp(i π·AD⁻¹·π/2)`; both have unit modulus so norms only see the polynomial.
//!
//! Constants fixed by exact unitarity against the picture measures:
//!
//! | map                        | action on the relative polynomial                 |
//! |----------------------------|---------------------------------------------------|
//! | holomorphic → Schrödinger  | `p(ϕ) = [exp(-½Δ∂∂)Ψ](√2 ϕ)`                      |
//! | antiholomorphic → momentum | `p(π) = [exp(-½D∂∂)Ψ̂](i√2 π)`                     |
//! | holomorphic → antihol.     | `Ψ̂(w) = Ψ(T w)`, `T = (A + i)D⁻¹`                 |
//! | antihol. → holomorphic     | `Ψ(φ) = Ψ̂(S φ)`, `S = -K(A - i)`                  |

use crate::gaussmeasure::{monomial_moment, GaussError, GaussianSpec, MeasureKind, MOMENT_DEGREE_LIMIT};
use crate::kahler::KahlerStructure;
use crate::linalg::{identity_c, to_complex};
use crate::poly::{exponents_up_to, Poly};
use crate::{CMat, C64};
use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("expected a {expected:?} state, got {got:?}")]
    WrongPicture { expected: Picture, got: Picture },
    #[error("state has {got} variables, structure has {expected} modes")]
    Dimension { expected: usize, got: usize },
    #[error("degree {0} exceeds the supported limit {1}")]
    DegreeOverflow(usize, usize),
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Holomorphic,
    Antiholomorphic,
    Schrodinger,
    Momentum,
}

impl Picture {
    pub fn measure(self) -> MeasureKind {
        match self {
            Picture::Holomorphic => MeasureKind::Holomorphic,
            Picture::Antiholomorphic => MeasureKind::Antiholomorphic,
            Picture::Schrodinger => MeasureKind::Schrodinger,
            Picture::Momentum => MeasureKind::Momentum,
        }
    }
}

/// Largest state degree whose norm the moment enumeration can still evaluate.
pub const STATE_DEGREE_LIMIT: usize = MOMENT_DEGREE_LIMIT / 2;

#[derive(Debug, Clone, PartialEq)]
pub struct PictureState {
    pub picture: Picture,
    pub coeffs: Poly,
    pub spec: GaussianSpec,
}

impl PictureState {
    pub fn new(picture: Picture, coeffs: Poly, ks: &KahlerStructure) -> Result<Self, TransformError> {
        if coeffs.nvars != ks.m() {
            return Err(TransformError::Dimension { expected: ks.m(), got: coeffs.nvars });
        }
        let deg = coeffs.degree();
        if deg > STATE_DEGREE_LIMIT {
            return Err(TransformError::DegreeOverflow(deg, STATE_DEGREE_LIMIT));
        }
        Ok(Self { picture, coeffs, spec: GaussianSpec::for_structure(picture.measure(), ks) })
    }

    pub fn inner(&self, other: &PictureState) -> Result<C64, TransformError> {
        if self.picture != other.picture {
            return Err(TransformError::WrongPicture { expected: self.picture, got: other.picture });
        }
        Ok(crate::gaussmeasure::inner(&self.spec, &self.coeffs, &other.coeffs)?)
    }

    pub fn norm_sq(&self) -> Result<f64, TransformError> {
        Ok(self.inner(self)?.re)
    }
}

fn expect(psi: &PictureState, picture: Picture, ks: &KahlerStructure) -> Result<(), TransformError> {
    if psi.picture != picture {
        return Err(TransformError::WrongPicture { expected: picture, got: psi.picture });
    }
    if psi.coeffs.nvars != ks.m() {
        return Err(TransformError::Dimension { expected: ks.m(), got: psi.coeffs.nvars });
    }
    Ok(())
}

fn scaled(p: &Poly, s: C64) -> Poly {
    p.linear_subst(&(identity_c(p.nvars) * s))
}

/// `T = (A + i)D⁻¹`.
pub fn fourier_matrix(ks: &KahlerStructure) -> CMat {
    let m = ks.m();
    let dinv = ks.d.clone().try_inverse().expect("D is negative definite");
    (to_complex(&ks.a) + identity_c(m) * C64::i()) * to_complex(&dinv)
}

/// `S = -K(A - i)`, the inverse of [`fourier_matrix`].
pub fn fourier_inverse_matrix(ks: &KahlerStructure) -> CMat {
    let m = ks.m();
    -(to_complex(&ks.k) * (to_complex(&ks.a) - identity_c(m) * C64::i()))
}

/// Schrödinger → holomorphic.
pub fn segal_bargmann(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Schrodinger, ks)?;
    let q = scaled(&psi.coeffs, C64::new(1.0 / SQRT_2, 0.0));
    PictureState::new(Picture::Holomorphic, q.heat(&to_complex(&ks.delta)), ks)
}

/// Holomorphic → Schrödinger.
pub fn segal_bargmann_inverse(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Holomorphic, ks)?;
    let g = psi.coeffs.heat(&to_complex(&-&ks.delta));
    PictureState::new(Picture::Schrodinger, scaled(&g, C64::new(SQRT_2, 0.0)), ks)
}

/// Momentum → antiholomorphic.
pub fn momentum_bargmann(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Momentum, ks)?;
    let q = scaled(&psi.coeffs, C64::new(0.0, -1.0 / SQRT_2));
    PictureState::new(Picture::Antiholomorphic, q.heat(&to_complex(&ks.d)), ks)
}

/// Antiholomorphic → momentum.
pub fn momentum_bargmann_inverse(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Antiholomorphic, ks)?;
    let g = psi.coeffs.heat(&to_complex(&-&ks.d));
    PictureState::new(Picture::Momentum, scaled(&g, C64::new(0.0, SQRT_2)), ks)
}

/// Holomorphic → antiholomorphic by the argument substitution `φ ↦ Tφ̄`.
pub fn fourier_hol(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Holomorphic, ks)?;
    PictureState::new(Picture::Antiholomorphic, psi.coeffs.linear_subst(&fourier_matrix(ks)), ks)
}

pub fn fourier_hol_inverse(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Antiholomorphic, ks)?;
    PictureState::new(Picture::Holomorphic, psi.coeffs.linear_subst(&fourier_inverse_matrix(ks)), ks)
}

/// Field → momentum picture, composed from the three maps above.
pub fn fourier_field_momentum(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    let h = segal_bargmann(psi, ks)?;
    let a = fourier_hol(&h, ks)?;
    momentum_bargmann_inverse(&a, ks)
}

pub fn fourier_field_momentum_inverse(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    let a = momentum_bargmann(psi, ks)?;
    let h = fourier_hol_inverse(&a, ks)?;
    segal_bargmann_inverse(&h, ks)
}

/// Same map as [`fourier_field_momentum`] assembled in one step:
/// `p(π) = [exp(½ C∂∂) q](i√2 π)` with `q(w) = p(Tw/√2)` and `C = 2KA(A - i)`.
pub fn fourier_field_momentum_direct(psi: &PictureState, ks: &KahlerStructure) -> Result<PictureState, TransformError> {
    expect(psi, Picture::Schrodinger, ks)?;
    let m = ks.m();
    let t = fourier_matrix(ks);
    let q = psi.coeffs.linear_subst(&(&t * C64::new(1.0 / SQRT_2, 0.0)));
    let ka = to_complex(&(&ks.k * &ks.a));
    let c = &ka * (to_complex(&ks.a) - identity_c(m) * C64::i()) * C64::new(2.0, 0.0);
    let out = scaled(&q.heat(&c), C64::new(0.0, SQRT_2));
    PictureState::new(Picture::Momentum, out, ks)
}

/// One-particle matrix of the field → momentum map: `c·ϕ ↦ (iTᵗc)·π`.
pub fn fourier_one_particle(ks: &KahlerStructure) -> CMat {
    fourier_matrix(ks).transpose() * C64::i()
}

fn var_times(p: &Poly, coeffs: &[C64]) -> Poly {
    let mut out = Poly::zero(p.nvars);
    for (j, c) in coeffs.iter().enumerate() {
        if *c != C64::new(0.0, 0.0) {
            out = &out + &p.mul_var(j).scale(*c);
        }
    }
    out
}

fn row(m: &CMat, i: usize) -> Vec<C64> {
    m.row(i).iter().copied().collect()
}

/// Derivative `∂_j` of `p·exp(i x·S·x/2)` divided by the phase, for symmetric `S`.
fn phased_deriv(p: &Poly, s: &CMat, j: usize) -> Poly {
    let lin: Vec<C64> = row(s, j).iter().map(|z| z * C64::i()).collect();
    &p.deriv(j) + &var_times(p, &lin)
}

/// `Σ_y M_xy ∂_y p` for every `x`.
fn contract_deriv(p: &Poly, mat: &CMat, d: impl Fn(&Poly, usize) -> Poly) -> Vec<Poly> {
    let n = p.nvars;
    let ds: Vec<Poly> = (0..n).map(|y| d(p, y)).collect();
    (0..n)
        .map(|x| {
            let mut acc = Poly::zero(n);
            for y in 0..n {
                if mat[(x, y)] != C64::new(0.0, 0.0) {
                    acc = &acc + &ds[y].scale(mat[(x, y)]);
                }
            }
            acc
        })
        .collect()
}

/// Full-form Schrödinger annihilators `(Δ∂_ϕ - iAϕ)/√2`, with `∂_ϕ` acting on the
/// vacuum phase as well; component `x` of the result.
pub fn sch_annihilate(p: &Poly, ks: &KahlerStructure) -> Vec<Poly> {
    let s = to_complex(&(&ks.k * &ks.a));
    let a = to_complex(&ks.a);
    let d = contract_deriv(p, &to_complex(&ks.delta), |q, j| phased_deriv(q, &s, j));
    let r = 1.0 / SQRT_2;
    (0..p.nvars)
        .map(|x| {
            let shift: Vec<C64> = row(&a, x).iter().map(|z| -z * C64::i()).collect();
            (&d[x] + &var_times(p, &shift)).scale(C64::new(r, 0.0))
        })
        .collect()
}

/// Full-form Schrödinger creators `√2ϕ - a`.
pub fn sch_create(p: &Poly, ks: &KahlerStructure) -> Vec<Poly> {
    let a = sch_annihilate(p, ks);
    (0..p.nvars).map(|x| &p.mul_var(x).scale(C64::new(SQRT_2, 0.0)) - &a[x]).collect()
}

/// Full-form momentum annihilators `-(D∂_π - iAᵗπ)/√2`.
pub fn mom_annihilate(p: &Poly, ks: &KahlerStructure) -> Vec<Poly> {
    let dinv = ks.d.clone().try_inverse().expect("D is negative definite");
    let s = to_complex(&(&ks.a * dinv));
    let at = to_complex(&ks.a.transpose());
    let d = contract_deriv(p, &to_complex(&ks.d), |q, j| phased_deriv(q, &s, j));
    let r = -1.0 / SQRT_2;
    (0..p.nvars)
        .map(|x| {
            let shift: Vec<C64> = row(&at, x).iter().map(|z| -z * C64::i()).collect();
            (&d[x] + &var_times(p, &shift)).scale(C64::new(r, 0.0))
        })
        .collect()
}

/// Full-form momentum creators `√2π - b`.
pub fn mom_create(p: &Poly, ks: &KahlerStructure) -> Vec<Poly> {
    let b = mom_annihilate(p, ks);
    (0..p.nvars).map(|x| &p.mul_var(x).scale(C64::new(SQRT_2, 0.0)) - &b[x]).collect()
}

fn combine(ops: &[Poly], mat: &CMat) -> Vec<Poly> {
    let n = ops.len();
    (0..n)
        .map(|x| {
            let mut acc = Poly::zero(ops[0].nvars);
            for y in 0..n {
                acc = &acc + &ops[y].scale(mat[(x, y)]);
            }
            acc
        })
        .collect()
}

/// Ladder matrix `X` with `𝓕 a 𝓕⁻¹ = X b`: `X = -(1 + iA)D⁻¹`.
pub fn fourier_ladder_matrix(ks: &KahlerStructure) -> CMat {
    let m = ks.m();
    let dinv = to_complex(&ks.d.clone().try_inverse().expect("D is negative definite"));
    -((identity_c(m) + to_complex(&ks.a) * C64::i()) * dinv)
}

/// Named intertwining residuals, each maximised over the monomials of degree `≤ deg`.
pub fn intertwining_residuals(ks: &KahlerStructure, deg: usize) -> Result<Vec<(&'static str, f64)>, TransformError> {
    let m = ks.m();
    let delta = to_complex(&ks.delta);
    let t = fourier_matrix(ks);
    let s = fourier_inverse_matrix(ks);
    let x = fourier_ladder_matrix(ks);
    let xbar = x.map(|z| z.conj());
    let i = C64::i();
    let mut worst = vec![0.0f64; 8];
    for e in exponents_up_to(m, deg) {
        let p = Poly::monomial(e, C64::new(1.0, 0.0));
        // Schrödinger → holomorphic: a_S ↦ Δ∂_φ, a†_S ↦ φ.
        let sch = PictureState::new(Picture::Schrodinger, p.clone(), ks)?;
        let hol = segal_bargmann(&sch, ks)?.coeffs;
        let dh = contract_deriv(&hol, &delta, |q, j| q.deriv(j));
        for (k, ann) in sch_annihilate(&p, ks).iter().enumerate() {
            let img = segal_bargmann(&PictureState::new(Picture::Schrodinger, ann.clone(), ks)?, ks)?.coeffs;
            worst[0] = worst[0].max(img.max_diff(&dh[k]));
        }
        for (k, cr) in sch_create(&p, ks).iter().enumerate() {
            let img = segal_bargmann(&PictureState::new(Picture::Schrodinger, cr.clone(), ks)?, ks)?.coeffs;
            worst[1] = worst[1].max(img.max_diff(&hol.mul_var(k)));
        }
        // momentum → antiholomorphic: b† ↦ -iφ̄, b ↦ i(-D∂_φ̄).
        let mom = PictureState::new(Picture::Momentum, p.clone(), ks)?;
        let anti = momentum_bargmann(&mom, ks)?.coeffs;
        let da = contract_deriv(&anti, &to_complex(&-&ks.d), |q, j| q.deriv(j));
        for (k, ann) in mom_annihilate(&p, ks).iter().enumerate() {
            let img = momentum_bargmann(&PictureState::new(Picture::Momentum, ann.clone(), ks)?, ks)?.coeffs;
            worst[2] = worst[2].max(img.max_diff(&da[k].scale(i)));
        }
        for (k, cr) in mom_create(&p, ks).iter().enumerate() {
            let img = momentum_bargmann(&PictureState::new(Picture::Momentum, cr.clone(), ks)?, ks)?.coeffs;
            worst[3] = worst[3].max(img.max_diff(&anti.mul_var(k).scale(-i)));
        }
        // holomorphic → antiholomorphic: φ ↦ Tφ̄, ∂_φ ↦ Sᵗ∂_φ̄.
        let h = PictureState::new(Picture::Holomorphic, p.clone(), ks)?;
        let fh = fourier_hol(&h, ks)?.coeffs;
        for k in 0..m {
            let img = fourier_hol(&PictureState::new(Picture::Holomorphic, p.mul_var(k), ks)?, ks)?.coeffs;
            let want = var_times(&fh, &row(&t, k));
            worst[4] = worst[4].max(img.max_diff(&want));
        }
        let st = s.transpose();
        let dfh = contract_deriv(&fh, &st, |q, j| q.deriv(j));
        for k in 0..m {
            let img = fourier_hol(&PictureState::new(Picture::Holomorphic, p.deriv(k), ks)?, ks)?.coeffs;
            worst[5] = worst[5].max(img.max_diff(&dfh[k]));
        }
        // field → momentum: a_S ↦ X b, a†_S ↦ X̄ b†.
        let fp = fourier_field_momentum(&sch, ks)?.coeffs;
        let b = combine(&mom_annihilate(&fp, ks), &x);
        let bd = combine(&mom_create(&fp, ks), &xbar);
        for (k, ann) in sch_annihilate(&p, ks).iter().enumerate() {
            let img = fourier_field_momentum(&PictureState::new(Picture::Schrodinger, ann.clone(), ks)?, ks)?.coeffs;
            worst[6] = worst[6].max(img.max_diff(&b[k]));
        }
        for (k, cr) in sch_create(&p, ks).iter().enumerate() {
            let img = fourier_field_momentum(&PictureState::new(Picture::Schrodinger, cr.clone(), ks)?, ks)?.coeffs;
            worst[7] = worst[7].max(img.max_diff(&bd[k]));
        }
    }
    let names = [
        "schrodinger annihilator to holomorphic derivative",
        "schrodinger creator to holomorphic multiplication",
        "momentum annihilator to antiholomorphic derivative",
        "momentum creator to antiholomorphic multiplication",
        "fourier multiplication",
        "fourier derivative",
        "field-momentum annihilator",
        "field-momentum creator",
    ];
    Ok(names.iter().copied().zip(worst).collect())
}

/// Size of the creation component of `𝓕 a 𝓕⁻¹`, read off from its action on the vacuum.
pub fn fourier_mixing(ks: &KahlerStructure) -> Result<f64, TransformError> {
    let m = ks.m();
    let vac = Poly::one(m);
    let mut worst = 0.0f64;
    for ann in sch_annihilate(&vac, ks) {
        let img = fourier_field_momentum(&PictureState::new(Picture::Schrodinger, ann, ks)?, ks)?;
        worst = worst.max(img.coeffs.max_coeff());
    }
    Ok(worst)
}

/// Gram matrix of the given states in one picture, sharing a moment cache.
pub fn gram(states: &[Poly], spec: &GaussianSpec) -> Result<CMat, TransformError> {
    let m = spec.m();
    let n = states.len();
    let pair = spec.pairing();
    let mut memo = HashMap::new();
    let mut g = CMat::zeros(n, n);
    let (left, right): (Vec<Poly>, Vec<Poly>) = if spec.kind.is_real() {
        (states.iter().map(|p| p.conj_coeffs()).collect(), states.to_vec())
    } else {
        let bar: Vec<usize> = (m..2 * m).collect();
        let id: Vec<usize> = (0..m).collect();
        (
            states.iter().map(|p| p.conj_coeffs().embed(2 * m, &bar)).collect(),
            states.iter().map(|p| p.embed(2 * m, &id)).collect(),
        )
    };
    for i in 0..n {
        for j in i..n {
            let prod = &left[i] * &right[j];
            let deg = prod.degree();
            if deg > MOMENT_DEGREE_LIMIT {
                return Err(GaussError::DegreeOverflow(deg, MOMENT_DEGREE_LIMIT).into());
            }
            let v: C64 = prod.terms.iter().map(|(e, c)| c * monomial_moment(&pair, e, &mut memo)).sum();
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Largest entry of `G_out - G_in` over all monomials of degree `≤ deg`.
pub fn unitarity_residual(
    map: impl Fn(&PictureState, &KahlerStructure) -> Result<PictureState, TransformError>,
    from: Picture,
    ks: &KahlerStructure,
    deg: usize,
) -> Result<f64, TransformError> {
    let basis: Vec<PictureState> = exponents_up_to(ks.m(), deg)
        .into_iter()
        .map(|e| PictureState::new(from, Poly::monomial(e, C64::new(1.0, 0.0)), ks))
        .collect::<Result<_, _>>()?;
    let images: Vec<PictureState> = basis.iter().map(|s| map(s, ks)).collect::<Result<_, _>>()?;
    let g_in = gram(&basis.iter().map(|s| s.coeffs.clone()).collect::<Vec<_>>(), &basis[0].spec)?;
    let g_out = gram(&images.iter().map(|s| s.coeffs.clone()).collect::<Vec<_>>(), &images[0].spec)?;
    Ok(crate::linalg::max_abs_c(&(g_out - g_in)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmeasure::gaussian_moment;
    use crate::kahler::{flat, from_blocks, random_compatible};
    use crate::linalg::{c, max_abs_c};
    use crate::RMat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly<R: Rng>(m: usize, deg: usize, rng: &mut R) -> Poly {
        let mut p = Poly::zero(m);
        for e in exponents_up_to(m, deg) {
            p.add_term(e, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        p
    }

    fn structures() -> Vec<KahlerStructure> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        vec![flat(1), flat(2), random_compatible(1, &mut rng), random_compatible(2, &mut rng), random_compatible(3, &mut rng)]
    }

    #[test]
    fn vacuum_maps_to_constant() {
        let ks = flat(2);
        let one = PictureState::new(Picture::Schrodinger, Poly::one(2), &ks).unwrap();
        let h = segal_bargmann(&one, &ks).unwrap();
        assert_eq!(h.coeffs, Poly::one(2));
        let mom = PictureState::new(Picture::Momentum, Poly::one(2), &ks).unwrap();
        assert_eq!(momentum_bargmann(&mom, &ks).unwrap().coeffs, Poly::one(2));
    }

    #[test]
    fn hermite_example() {
        // φ² in the holomorphic picture is 2ϕ² - Δ in the Schrödinger picture.
        let ks = from_blocks(&RMat::zeros(1, 1), &RMat::from_element(1, 1, 0.7)).unwrap();
        let x = Poly::var(1, 0);
        let h = PictureState::new(Picture::Holomorphic, &x * &x, &ks).unwrap();
        let s = segal_bargmann_inverse(&h, &ks).unwrap();
        assert!((s.coeffs.coeff(&[2]) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((s.coeffs.coeff(&[0]) - c(-0.7, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn flat_fourier_substitution() {
        let ks = flat(1);
        let t = fourier_matrix(&ks);
        assert!((t[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ks in structures() {
            let p = random_poly(ks.m(), 3, &mut rng);
            let s = PictureState::new(Picture::Schrodinger, p.clone(), &ks).unwrap();
            let back = segal_bargmann_inverse(&segal_bargmann(&s, &ks).unwrap(), &ks).unwrap();
            assert!(back.coeffs.max_diff(&p) < 1e-12);
            let mo = PictureState::new(Picture::Momentum, p.clone(), &ks).unwrap();
            let back = momentum_bargmann_inverse(&momentum_bargmann(&mo, &ks).unwrap(), &ks).unwrap();
            assert!(back.coeffs.max_diff(&p) < 1e-12);
            let h = PictureState::new(Picture::Holomorphic, p.clone(), &ks).unwrap();
            let back = fourier_hol_inverse(&fourier_hol(&h, &ks).unwrap(), &ks).unwrap();
            assert!(back.coeffs.max_diff(&p) < 1e-12);
            let back = fourier_field_momentum_inverse(&fourier_field_momentum(&s, &ks).unwrap(), &ks).unwrap();
            assert!(back.coeffs.max_diff(&p) < 1e-11);
        }
    }

    #[test]
    fn norms_preserved_on_random_states() {
        // oracle: the moments of |p|² computed separately in each measure
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for ks in structures() {
            let m = ks.m();
            let p = random_poly(m, 3, &mut rng);
            let sch = PictureState::new(Picture::Schrodinger, p.clone(), &ks).unwrap();
            let hol = segal_bargmann(&sch, &ks).unwrap();
            let bar: Vec<usize> = (m..2 * m).collect();
            let id: Vec<usize> = (0..m).collect();
            let abs2 = &hol.coeffs.conj_coeffs().embed(2 * m, &bar) * &hol.coeffs.embed(2 * m, &id);
            let lhs = gaussian_moment(&hol.spec, &abs2).unwrap();
            let rhs = gaussian_moment(&sch.spec, &(&p.conj_coeffs() * &p)).unwrap();
            assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
        }
    }

    #[test]
    fn all_maps_unitary() {
        for ks in structures() {
            let deg = if ks.m() == 3 { 3 } else { 4 };
            assert!(unitarity_residual(segal_bargmann, Picture::Schrodinger, &ks, deg).unwrap() < 1e-10);
            assert!(unitarity_residual(momentum_bargmann, Picture::Momentum, &ks, deg).unwrap() < 1e-10);
            assert!(unitarity_residual(fourier_hol, Picture::Holomorphic, &ks, deg).unwrap() < 1e-10);
            assert!(unitarity_residual(fourier_field_momentum, Picture::Schrodinger, &ks, deg).unwrap() < 1e-10);
        }
    }

    #[test]
    fn intertwining() {
        for ks in structures() {
            for (name, r) in intertwining_residuals(&ks, 3).unwrap() {
                assert!(r < 1e-10, "{name}: {r}");
            }
        }
    }

    #[test]
    fn no_ladder_mixing() {
        for ks in structures() {
            assert!(fourier_mixing(&ks).unwrap() < 1e-12);
        }
    }

    #[test]
    fn flat_composite_is_rescaling() {
        let ks = from_blocks(&RMat::zeros(2, 2), &RMat::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.8])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_poly(2, 3, &mut rng);
        let s = PictureState::new(Picture::Schrodinger, p.clone(), &ks).unwrap();
        let out = fourier_field_momentum(&s, &ks).unwrap();
        assert!(out.coeffs.max_diff(&p.linear_subst(&to_complex(&ks.delta))) < 1e-12);
        // A = 0: a ↦ Δ b
        assert!(max_abs_c(&(fourier_ladder_matrix(&ks) - to_complex(&ks.delta))) < 1e-12);
    }

    #[test]
    fn composite_matches_direct_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for ks in structures() {
            let p = random_poly(ks.m(), 3, &mut rng);
            let s = PictureState::new(Picture::Schrodinger, p, &ks).unwrap();
            let a = fourier_field_momentum(&s, &ks).unwrap();
            let b = fourier_field_momentum_direct(&s, &ks).unwrap();
            assert!(a.coeffs.max_diff(&b.coeffs) < 1e-11);
            // one-particle block
            let lin = Poly::linear(&(0..ks.m()).map(|i| c(1.0 + i as f64, -0.5)).collect::<Vec<_>>());
            let out = fourier_field_momentum(&PictureState::new(Picture::Schrodinger, lin.clone(), &ks).unwrap(), &ks).unwrap();
            let v = nalgebra::DVector::from_iterator(ks.m(), (0..ks.m()).map(|i| c(1.0 + i as f64, -0.5)));
            let w = fourier_one_particle(&ks) * v;
            assert!(out.coeffs.max_diff(&Poly::linear(w.as_slice())) < 1e-12);
        }
    }

    #[test]
    fn conjugated_number_operator_spectrum() {
        // Euler operator φ·∂ carried to the Schrödinger picture keeps eigenvalues = degree.
        let ks = from_blocks(&RMat::zeros(2, 2), &RMat::from_row_slice(2, 2, &[1.1, 0.3, 0.3, 0.9])).unwrap();
        let basis = exponents_up_to(2, 3);
        let n = basis.len();
        let mut mat = RMat::zeros(n, n);
        for (j, e) in basis.iter().enumerate() {
            let s = PictureState::new(Picture::Schrodinger, Poly::monomial(e.clone(), c(1.0, 0.0)), &ks).unwrap();
            let h = segal_bargmann(&s, &ks).unwrap().coeffs;
            let mut euler = Poly::zero(2);
            for k in 0..2 {
                euler = &euler + &h.deriv(k).mul_var(k);
            }
            let back = segal_bargmann_inverse(&PictureState::new(Picture::Holomorphic, euler, &ks).unwrap(), &ks).unwrap();
            for (i, f) in basis.iter().enumerate() {
                mat[(i, j)] = back.coeffs.coeff(f).re;
            }
        }
        let mut ev: Vec<f64> = mat.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = basis.iter().map(|e| e.iter().map(|&k| k as f64).sum()).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn wrong_picture_rejected() {
        let ks = flat(1);
        let h = PictureState::new(Picture::Holomorphic, Poly::one(1), &ks).unwrap();
        assert!(matches!(segal_bargmann(&h, &ks), Err(TransformError::WrongPicture { .. })));
    }
}
