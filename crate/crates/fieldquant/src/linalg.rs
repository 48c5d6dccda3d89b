//! Small dense linear-algebra helpers shared across modules.

use crate::{CMat, RMat, C64};
use nalgebra::SymmetricEigen;

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Largest entry of `m - mᵗ` in absolute value.
pub fn asymmetry(m: &RMat) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Applies a scalar function to a symmetric matrix through its eigendecomposition.
pub fn sym_fn(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = RMat::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn sym_eigenvalues(m: &RMat) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn min_eigenvalue(m: &RMat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Eigenvalues of a Hermitian complex matrix, ascending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = m.adjoint() * m;
    herm_eigenvalues(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `[[a, b], [c, d]]` assembled from equally sized square blocks.
pub fn block2(a: &RMat, b: &RMat, c: &RMat, d: &RMat) -> RMat {
    let n = a.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(b);
    out.view_mut((n, 0), (n, n)).copy_from(c);
    out.view_mut((n, n), (n, n)).copy_from(d);
    out
}

pub fn block2_c(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = CMat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(b);
    out.view_mut((n, 0), (n, n)).copy_from(c);
    out.view_mut((n, n), (n, n)).copy_from(d);
    out
}

/// Splits a `2n × 2n` matrix into its four `n × n` blocks.
pub fn blocks(m: &RMat) -> (RMat, RMat, RMat, RMat) {
    let n = m.nrows() / 2;
    (
        m.view((0, 0), (n, n)).into_owned(),
        m.view((0, n), (n, n)).into_owned(),
        m.view((n, 0), (n, n)).into_owned(),
        m.view((n, n), (n, n)).into_owned(),
    )
}

/// Real `2n × 2n` form of a complex `n × n` matrix, with `i` acting as `[[0, -1], [1, 0]]`.
pub fn realify(m: &CMat) -> RMat {
    let p = m.map(|z| z.re);
    let q = m.map(|z| z.im);
    block2(&p, &(-&q), &q, &p)
}

/// The standard symplectic unit `[[0, -1], [1, 0]]` in blocks of size `n`.
pub fn epsilon(n: usize) -> RMat {
    let id = RMat::identity(n, n);
    let z = RMat::zeros(n, n);
    block2(&z, &(-&id), &id, &z)
}

/// Matrix sign-type iteration `X <- (X - X⁻¹)/2`.
///
/// For a real matrix with purely imaginary spectrum this converges to `|F|⁻¹F`,
/// the unique complex structure commuting with `F` whose eigenvalues carry the
/// same signs as those of `-iF`.
pub fn imaginary_sign(f: &RMat, tol: f64, max_iter: usize) -> Option<RMat> {
    let mut x = f.clone();
    for _ in 0..max_iter {
        let inv = x.clone().try_inverse()?;
        // determinant scaling speeds up the first iterations
        let n = x.nrows() as f64;
        let det = x.determinant().abs();
        let g = if det > 0.0 && det.is_finite() { det.powf(-1.0 / n) } else { 1.0 };
        let next = if g.is_finite() && (g - 1.0).abs() > 1e-3 {
            (&x * g - inv / g) * 0.5
        } else {
            (&x - inv) * 0.5
        };
        let diff = max_abs(&(&next - &x));
        x = next;
        if diff < tol {
            return Some(x);
        }
    }
    None
}

pub fn identity_c(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
