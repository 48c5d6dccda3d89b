//! Fourier-mode discretization of a circle of circumference `L`.
//!
//! Mode ordering is `[0, +1, -1, +2, -2, ...]`: index 0 is the constant mode, the
//! `+n` slot holds the `sin(k_n x)` coefficient and the `-n` slot the `cos(k_n x)`
//! coefficient, with `k_n = 2πn/L`. The spatial metric is constant, `h = h_scale²`.

use crate::linalg::{asymmetry, max_abs, min_eigenvalue};
use crate::RMat;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("mode count must be odd and positive, got {0}")]
    EvenModes(usize),
    #[error("circumference must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("metric scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("lapse must be positive, got {0}")]
    NonPositiveLapse(f64),
    #[error("mass must be positive when a zero mode is present, got {0}")]
    SingularTheta(f64),
    #[error("declared symmetry class violated (residual {0:.3e})")]
    SymmetryViolated(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    Symmetric,
    Antisymmetric,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpace {
    pub m: usize,
    pub length: f64,
    pub h_scale: f64,
    pub wavenumbers: Vec<f64>,
    pub volume_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperator {
    pub matrix: RMat,
    pub symmetry: SymmetryClass,
}

impl SpatialOperator {
    pub fn new(matrix: RMat, symmetry: SymmetryClass) -> Result<Self, ModeError> {
        let scale = max_abs(&matrix).max(1.0);
        let res = match symmetry {
            SymmetryClass::Symmetric => asymmetry(&matrix),
            SymmetryClass::Antisymmetric => max_abs(&(&matrix + matrix.transpose())),
            SymmetryClass::None => 0.0,
        };
        if res > 1e-12 * scale {
            return Err(ModeError::SymmetryViolated(res));
        }
        Ok(Self { matrix, symmetry })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Builds the mode space of an odd number `m` of Fourier modes.
pub fn build_circle(m: usize, length: f64, h_scale: f64) -> Result<ModeSpace, ModeError> {
    if m == 0 || m % 2 == 0 {
        return Err(ModeError::EvenModes(m));
    }
    if !(length > 0.0) {
        return Err(ModeError::NonPositiveLength(length));
    }
    if !(h_scale > 0.0) {
        return Err(ModeError::NonPositiveScale(h_scale));
    }
    let mut wavenumbers = vec![0.0];
    for n in 1..=(m / 2) {
        let k = 2.0 * std::f64::consts::PI * n as f64 / length;
        wavenumbers.push(k);
        wavenumbers.push(-k);
    }
    Ok(ModeSpace { m, length, h_scale, wavenumbers, volume_weight: h_scale })
}

impl ModeSpace {
    /// The metric determinant `h = h_scale²`.
    pub fn h(&self) -> f64 {
        self.h_scale * self.h_scale
    }

    /// Lowers a density index: `δ_{xy}`, equal to `I / volume_weight` in the mode basis.
    pub fn pairing_down(&self) -> RMat {
        RMat::identity(self.m, self.m) / self.volume_weight
    }

    /// Raises an index: `δ^{xy}`, equal to `volume_weight · I`.
    pub fn pairing_up(&self) -> RMat {
        RMat::identity(self.m, self.m) * self.volume_weight
    }
}

/// Metric Laplacian `h⁻¹∂ₓ²`, diagonal with entries `-k²/h`.
pub fn laplacian(ms: &ModeSpace) -> SpatialOperator {
    let h = ms.h();
    let d = RMat::from_diagonal(&nalgebra::DVector::from_iterator(
        ms.m,
        ms.wavenumbers.iter().map(|k| -k * k / h),
    ));
    SpatialOperator { matrix: d, symmetry: SymmetryClass::Symmetric }
}

/// `Θ = N(-∇² + m²)` for a spatially constant lapse.
pub fn theta_operator(ms: &ModeSpace, lapse: f64, mass: f64) -> Result<SpatialOperator, ModeError> {
    if !(lapse > 0.0) {
        return Err(ModeError::NonPositiveLapse(lapse));
    }
    if !(mass > 0.0) {
        return Err(ModeError::SingularTheta(mass));
    }
    let lap = laplacian(ms).matrix;
    let id = RMat::identity(ms.m, ms.m);
    let theta = (id * (mass * mass) - lap) * lapse;
    debug_assert!(min_eigenvalue(&theta) > 0.0);
    Ok(SpatialOperator { matrix: theta, symmetry: SymmetryClass::Symmetric })
}

/// `α = Nⁱ∂ₓ` for a constant shift. With constant shift `Λ = α` as well.
pub fn shift_generator(ms: &ModeSpace, shift: f64) -> SpatialOperator {
    let mut a = RMat::zeros(ms.m, ms.m);
    for n in 1..=(ms.m / 2) {
        let k = ms.wavenumbers[2 * n - 1];
        let (sp, cp) = (2 * n - 1, 2 * n);
        // d/dx (s sin kx + c cos kx) = -kc sin kx + ks cos kx
        a[(sp, cp)] = -k * shift;
        a[(cp, sp)] = k * shift;
    }
    SpatialOperator { matrix: a, symmetry: SymmetryClass::Antisymmetric }
}
