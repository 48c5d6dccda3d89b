//! Classical Kähler structures on the field phase space `(ϕ, π)`.
//!
//! A structure is fixed by `A` and `Δ`; `D` and `K = Δ⁻¹` follow. The complex
//! structure matrix is `[[A, Δ], [D, -Aᵗ]]` acting on `(ϕ, π)` components, the
//! symplectic form is `ω(u, v) = u_π·v_ϕ - u_ϕ·v_π` and `μ(u, v) = ω(u, J v)`.

use crate::linalg::{asymmetry, block2, imaginary_sign, max_abs, min_eigenvalue, sym_fn, to_complex};
use crate::modespace::{shift_generator, theta_operator, ModeError, ModeSpace, SpatialOperator, SymmetryClass};
use crate::{RMat, C64};
use rand::Rng;
use thiserror::Error;

pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KahlerError {
    #[error("incompatible pair: {identity} violated (residual {residual:.3e})")]
    Incompatible { identity: &'static str, residual: f64 },
    #[error("Delta is not positive definite (min eigenvalue {0:.3e})")]
    DeltaNotPositive(f64),
    #[error("Theta is not positive definite (min eigenvalue {0:.3e})")]
    ThetaNotPositive(f64),
    #[error("degenerate generator: sign iteration did not converge")]
    DegenerateGenerator,
    #[error(transparent)]
    Mode(#[from] ModeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KahlerStructure {
    pub a: RMat,
    pub delta: RMat,
    pub d: RMat,
    pub k: RMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalGenerator {
    pub f: RMat,
    /// `[NⁱDᵢ, N, -Θ, Λ]`.
    pub blocks: [SpatialOperator; 4],
}

impl KahlerStructure {
    pub fn m(&self) -> usize {
        self.delta.nrows()
    }

    /// Named residuals of every defining identity, without failing early.
    pub fn identity_residuals(&self) -> Vec<(&'static str, f64)> {
        let n = self.m();
        let id = RMat::identity(n, n);
        vec![
            ("A^2 + Delta D = -1", max_abs(&(&self.a * &self.a + &self.delta * &self.d + &id))),
            ("Delta symmetry", asymmetry(&self.delta)),
            ("D symmetry", asymmetry(&self.d)),
            ("A Delta = Delta A^t", max_abs(&(&self.a * &self.delta - &self.delta * self.a.transpose()))),
            ("A^t D = D A", max_abs(&(self.a.transpose() * &self.d - &self.d * &self.a))),
            ("Delta K = 1", max_abs(&(&self.delta * &self.k - &id))),
            ("Delta > 0", (-min_eigenvalue(&self.delta)).max(0.0)),
            ("D < 0", min_eigenvalue(&-&self.d).min(0.0).abs()),
        ]
    }

    pub fn validate(&self) -> Result<(), KahlerError> {
        for (identity, residual) in self.identity_residuals() {
            let scale = if identity.contains('>') || identity.contains('<') { 0.0 } else { IDENTITY_TOL };
            if residual > scale || residual.is_nan() {
                return Err(KahlerError::Incompatible { identity, residual });
            }
        }
        Ok(())
    }
}

/// Builds the structure from `A` and `Δ`, with `D = (iAᵗ + 1)K(iA - 1)`.
pub fn from_blocks(a: &RMat, delta: &RMat) -> Result<KahlerStructure, KahlerError> {
    let n = delta.nrows();
    let sym = asymmetry(delta);
    if sym > IDENTITY_TOL {
        return Err(KahlerError::Incompatible { identity: "Delta symmetry", residual: sym });
    }
    let lo = min_eigenvalue(delta);
    if !(lo > 1e-12 * max_abs(delta)) {
        return Err(KahlerError::DeltaNotPositive(lo));
    }
    let k = delta.clone().try_inverse().ok_or(KahlerError::DeltaNotPositive(lo))?;
    let i = C64::new(0.0, 1.0);
    let one = to_complex(&RMat::identity(n, n));
    let ac = to_complex(a);
    let dc = (ac.transpose() * i + &one) * to_complex(&k) * (ac * i - &one);
    let imag = dc.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if imag > IDENTITY_TOL {
        return Err(KahlerError::Incompatible { identity: "D real", residual: imag });
    }
    let ks = KahlerStructure { a: a.clone(), delta: delta.clone(), d: dc.map(|z| z.re), k };
    ks.validate()?;
    Ok(ks)
}

pub fn flat(m: usize) -> KahlerStructure {
    from_blocks(&RMat::zeros(m, m), &RMat::identity(m, m)).expect("flat structure is valid")
}

/// `[[A, Δ], [D, -Aᵗ]]`, squaring to `-1`.
pub fn complex_structure(ks: &KahlerStructure) -> RMat {
    block2(&ks.a, &ks.delta, &ks.d, &-ks.a.transpose())
}

/// Matrix of `ω` in `(ϕ, π)` coordinates.
pub fn omega(m: usize) -> RMat {
    let id = RMat::identity(m, m);
    let z = RMat::zeros(m, m);
    block2(&z, &-&id, &id, &z)
}

/// Matrix of `μ(u, v) = ω(u, J v)`, equal to `[[-D, Aᵗ], [A, Δ]]`.
pub fn metric(ks: &KahlerStructure) -> RMat {
    omega(ks.m()) * complex_structure(ks)
}

/// Linear map to holomorphic-adapted coordinates `(ϕ, Aϕ + Δπ)` and its inverse.
pub fn holomorphic_change(ks: &KahlerStructure) -> (RMat, RMat) {
    let n = ks.m();
    let id = RMat::identity(n, n);
    let z = RMat::zeros(n, n);
    let fwd = block2(&id, &z, &ks.a, &ks.delta);
    let inv = block2(&id, &z, &-(&ks.k * &ks.a), &ks.k);
    (fwd, inv)
}

/// Bilinear-form matrix of `ω` in the adapted coordinates, `[[0, -K], [K, 0]]`.
pub fn omega_normal_form(ks: &KahlerStructure) -> RMat {
    let z = RMat::zeros(ks.m(), ks.m());
    block2(&z, &-&ks.k, &ks.k, &z)
}

/// Random compatible structure: `Δ = QQᵗ + εI`, `A = ΣK` with `Σ` symmetric.
pub fn random_compatible<R: Rng>(m: usize, rng: &mut R) -> KahlerStructure {
    let q = RMat::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    let delta = &q * q.transpose() + RMat::identity(m, m) * 0.3;
    let s = RMat::from_fn(m, m, |_, _| rng.gen_range(-0.3..0.3));
    let sigma = (&s + s.transpose()) * 0.5;
    let k = delta.clone().try_inverse().unwrap();
    let a = sigma * k;
    from_blocks(&a, &(&delta + delta.transpose()).scale(0.5)).expect("random pair is compatible by construction")
}

/// `F = [[NⁱDᵢ, N], [-Θ, Λ]]` for constant lapse and shift.
pub fn kg_generator(ms: &ModeSpace, lapse: f64, shift: f64, mass: f64) -> Result<ClassicalGenerator, KahlerError> {
    let theta = theta_operator(ms, lapse, mass)?;
    let alpha = shift_generator(ms, shift);
    let n = RMat::identity(ms.m, ms.m) * lapse;
    let f = block2(&alpha.matrix, &n, &-&theta.matrix, &alpha.matrix);
    let blocks = [
        alpha.clone(),
        SpatialOperator { matrix: n, symmetry: SymmetryClass::Symmetric },
        SpatialOperator { matrix: -theta.matrix, symmetry: SymmetryClass::Symmetric },
        alpha,
    ];
    Ok(ClassicalGenerator { f, blocks })
}

/// `J = |F|⁻¹F` with `|F| = (-F²)^{1/2}`.
pub fn j_from_generator(gen: &ClassicalGenerator) -> Result<RMat, KahlerError> {
    let j = imaginary_sign(&gen.f, 1e-14, 200).ok_or(KahlerError::DegenerateGenerator)?;
    let n = j.nrows();
    let res = max_abs(&(&j * &j + RMat::identity(n, n)));
    if !(res < 1e-8) {
        return Err(KahlerError::DegenerateGenerator);
    }
    Ok(j)
}

/// `A = 0`, `Δ = Θ^{-1/2}N^{1/2}` for vanishing shift.
pub fn null_shift_structure(theta: &SpatialOperator, lapse: f64) -> Result<KahlerStructure, KahlerError> {
    let lo = min_eigenvalue(&theta.matrix);
    if !(lo > 0.0) {
        return Err(KahlerError::ThetaNotPositive(lo));
    }
    let n = theta.dim();
    let delta = sym_fn(&theta.matrix, |x| x.powf(-0.5)) * lapse.sqrt();
    from_blocks(&RMat::zeros(n, n), &delta)
}

/// Classical large-shift structure `diag((-α²)^{-1/2}α, (-Λ²)^{-1/2}Λ)` on the
/// nonzero modes; rows and columns of the zero mode are left at zero.
pub fn huge_shift_structure(ms: &ModeSpace, shift: f64) -> RMat {
    let alpha = shift_generator(ms, shift).matrix;
    let sq = -(&alpha * &alpha);
    let inv_abs = sym_fn(&sq, |x| if x > 1e-14 { x.powf(-0.5) } else { 0.0 });
    let b = inv_abs * &alpha;
    let z = RMat::zeros(ms.m, ms.m);
    block2(&b, &z, &z, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modespace::build_circle;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn flat_case() {
        let ks = flat(2);
        assert_eq!(ks.d, -RMat::identity(2, 2));
        let j = complex_structure(&ks);
        assert_eq!(j, block2(&RMat::zeros(2, 2), &RMat::identity(2, 2), &-RMat::identity(2, 2), &RMat::zeros(2, 2)));
        assert_eq!(&j * &j, -RMat::identity(4, 4));
    }

    #[test]
    fn diagonal_delta_gives_inverse_d() {
        let s = 0.5f64.sqrt();
        let delta = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, s, s]));
        let ks = from_blocks(&RMat::zeros(3, 3), &delta).unwrap();
        let r2 = 2.0f64.sqrt();
        let expect = -RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, r2, r2]));
        assert!(max_abs(&(&ks.d - expect)) < 1e-12);
        assert!(max_abs(&(&ks.d + &ks.k)) < 1e-12);
    }

    #[test]
    fn antisymmetric_a_with_unit_delta() {
        let mut a = RMat::zeros(2, 2);
        a[(0, 1)] = 0.1;
        a[(1, 0)] = -0.1;
        // AΔ = ΔAᵗ fails for antisymmetric A and Δ = I
        match from_blocks(&a, &RMat::identity(2, 2)) {
            Err(KahlerError::Incompatible { identity, .. }) => assert!(identity.contains("Delta") || identity.contains("real")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_delta() {
        let mut d = RMat::identity(2, 2);
        d[(0, 1)] = 0.2;
        let err = from_blocks(&RMat::zeros(2, 2), &d).unwrap_err();
        assert_eq!(err, KahlerError::Incompatible { identity: "Delta symmetry", residual: 0.2 });
    }

    #[test]
    fn holomorphic_change_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ks = random_compatible(2, &mut rng);
        let (p, pinv) = holomorphic_change(&ks);
        assert!(max_abs(&(&p * &pinv - RMat::identity(4, 4))) < 1e-12);
        let pushed = pinv.transpose() * omega(2) * &pinv;
        assert!(max_abs(&(pushed - omega_normal_form(&ks))) < 1e-12);
        let j = complex_structure(&ks);
        let jc = &p * j * &pinv;
        let expect = block2(&RMat::zeros(2, 2), &RMat::identity(2, 2), &-RMat::identity(2, 2), &RMat::zeros(2, 2));
        assert!(max_abs(&(jc - expect)) < 1e-12);
        let flat_p = holomorphic_change(&flat(3)).0;
        assert_eq!(flat_p, RMat::identity(6, 6));
    }

    #[test]
    fn kg_generator_blocks() {
        let ms = build_circle(1, 2.0 * PI, 1.0).unwrap();
        let g = kg_generator(&ms, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(g.f, RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let ms3 = build_circle(3, 2.0 * PI, 1.0).unwrap();
        let g3 = kg_generator(&ms3, 1.0, 0.0, 1.0).unwrap();
        let th = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 2.0]));
        let expect = block2(&RMat::zeros(3, 3), &RMat::identity(3, 3), &-th, &RMat::zeros(3, 3));
        assert!(max_abs(&(g3.f - expect)) < 1e-12);
    }

    #[test]
    fn null_shift_matches_polar_factor() {
        let ms = build_circle(3, 2.0 * PI, 1.0).unwrap();
        for lapse in [1.0, 2.0] {
            let g = kg_generator(&ms, lapse, 0.0, 1.0).unwrap();
            let j = j_from_generator(&g).unwrap();
            let theta = theta_operator(&ms, lapse, 1.0).unwrap();
            let ks = null_shift_structure(&theta, lapse).unwrap();
            assert!(max_abs(&(j - complex_structure(&ks))) < 1e-12);
        }
        let theta = theta_operator(&ms, 1.0, 1.0).unwrap();
        let ks = null_shift_structure(&theta, 1.0).unwrap();
        assert!((ks.delta[(1, 1)] - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn shift_below_threshold_leaves_j_unchanged() {
        let ms = build_circle(3, 2.0 * PI, 1.0).unwrap();
        let j0 = j_from_generator(&kg_generator(&ms, 1.0, 0.0, 1.0).unwrap()).unwrap();
        for ni in [0.5, 0.1, 0.01] {
            let j = j_from_generator(&kg_generator(&ms, 1.0, ni, 1.0).unwrap()).unwrap();
            assert!(max_abs(&(&j * &j + RMat::identity(6, 6))) < 1e-8);
            assert!(max_abs(&(j - &j0)) < 1e-10);
        }
    }

    #[test]
    fn absolute_value_expansion() {
        // |F|² = |F₀|² + |F∞|² - (|F₀|J₀J∞|F∞| + |F∞|J∞J₀|F₀|) with F₀ = |F₀|J₀, F∞ = |F∞|J∞
        let ms = build_circle(3, 2.0 * PI, 1.0).unwrap();
        let g = kg_generator(&ms, 1.0, 0.3, 1.0).unwrap();
        let (f0, finf) = {
            let mut f0 = g.f.clone();
            let mut fi = RMat::zeros(6, 6);
            for (r, c) in [(0, 0), (3, 3)] {
                fi.view_mut((r, c), (3, 3)).copy_from(&g.f.view((r, c), (3, 3)));
                f0.view_mut((r, c), (3, 3)).fill(0.0);
            }
            (f0, fi)
        };
        let abs0 = sym_fn(&-(&f0 * &f0), f64::sqrt);
        let absi = sym_fn(&-(&finf * &finf), f64::sqrt);
        let j0 = j_from_generator(&kg_generator(&ms, 1.0, 0.0, 1.0).unwrap()).unwrap();
        let ji = huge_shift_structure(&ms, 0.3);
        assert!(max_abs(&(&abs0 * &j0 - &f0)) < 1e-12);
        assert!(max_abs(&(&absi * &ji - &finf)) < 1e-12);
        let rhs = &abs0 * &abs0 + &absi * &absi - (&abs0 * &j0 * &ji * &absi + &absi * &ji * &j0 * &abs0);
        assert!(max_abs(&(rhs + &g.f * &g.f)) < 1e-12);
    }

    #[test]
    fn huge_shift_squares_to_minus_one_off_zero_mode() {
        let ms = build_circle(5, 2.0 * PI, 1.0).unwrap();
        let ji = huge_shift_structure(&ms, 3.0);
        let sq = &ji * &ji;
        for i in 0..10 {
            let expect = if i % 5 == 0 { 0.0 } else { -1.0 };
            assert!((sq[(i, i)] - expect).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn random_structures_are_kahler(seed in any::<u64>(), m in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ks = random_compatible(m, &mut rng);
            for (name, r) in ks.identity_residuals() {
                prop_assert!(r < 1e-10, "{name}: {r}");
            }
            let j = complex_structure(&ks);
            prop_assert!(max_abs(&(&j * &j + RMat::identity(2 * m, 2 * m))) < 1e-10);
            prop_assert!(min_eigenvalue(&metric(&ks)) > 0.0);
            prop_assert!(asymmetry(&metric(&ks)) < 1e-10);
        }
    }
}
