//! Time-dependent quantization along a null-shift foliation.
//!
//! States are kept in the fixed orthonormal basis of the flat Fock space (`Δ = I`),
//! i.e. as `√α!`-weighted coefficients of `φ`-monomials. The physical inner product
//! at time `t` is `‖T(t)v‖²`, where `T(t)` re-expands the same polynomial in the
//! orthonormal basis of `Δ(t)`.
//!
//! With `R = -½KΔ̇` and `P = ½KΔ̇ + (δ̇δ)·1` the state equation is
//! `∂ₜv = dΓ(R)v - i dΓ(P + E)v`, `E = ΘΔ`. The sign of `R` is the one that keeps
//! `‖T(t)v‖` constant.

use crate::fock::{FockError, FockOperator, FockSpace, FockState};
use crate::gaussmeasure::{factorial_weight, segal_coefficients, segal_polynomial};
use crate::kahler::{null_shift_structure, KahlerError, KahlerStructure};
use crate::linalg::{identity_c, max_abs, spectral_norm, to_complex};
use crate::modespace::{build_circle, laplacian, theta_operator, ModeError, ModeSpace};
use crate::poly::Poly;
use crate::staralgebra::GaussianKernel;
use crate::{CMat, CVec, RMat, C64};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("only null-shift foliations are evolved (shift = {0})")]
    NonNullShift(f64),
    #[error("connection for A != 0 is not wired into the evolution")]
    GeneralConnection,
    #[error("foliation is not static")]
    NotStatic,
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("scale factor must stay positive (a({t}) = {a})")]
    NonPositiveScale { t: f64, a: f64 },
    #[error("rk4 local error {err:.3e} exceeds budget {budget:.3e} at t = {t}")]
    ErrorBudget { t: f64, err: f64, budget: f64 },
    #[error(transparent)]
    Kahler(#[from] KahlerError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivatives {
    Analytic,
    FiniteDifference,
}

/// Constant-lapse foliation of a circle with polynomial scale factor `a(t) = Σ c_k tᵏ`
/// and `h_scale = a`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoliationCurve {
    pub m: usize,
    pub length: f64,
    pub lapse: f64,
    pub shift: f64,
    pub mass: f64,
    pub scale: Vec<f64>,
    pub derivatives: Derivatives,
}

impl FoliationCurve {
    pub fn minkowski(m: usize, length: f64, lapse: f64, mass: f64) -> Self {
        Self { m, length, lapse, shift: 0.0, mass, scale: vec![1.0], derivatives: Derivatives::Analytic }
    }

    /// `a(t) = 1 + rate·t`.
    pub fn linear_expansion(m: usize, length: f64, lapse: f64, mass: f64, rate: f64) -> Self {
        Self { scale: vec![1.0, rate], ..Self::minkowski(m, length, lapse, mass) }
    }

    pub fn scale_at(&self, t: f64) -> f64 {
        self.scale.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn scale_rate(&self, t: f64) -> f64 {
        self.scale.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }

    pub fn is_static(&self) -> bool {
        self.scale.iter().skip(1).all(|c| *c == 0.0)
    }

    pub fn mode_space(&self, t: f64) -> Result<ModeSpace, EvolutionError> {
        let a = self.scale_at(t);
        if !(a > 0.0) {
            return Err(EvolutionError::NonPositiveScale { t, a });
        }
        Ok(build_circle(self.m, self.length, a)?)
    }

    pub fn theta(&self, t: f64) -> Result<RMat, EvolutionError> {
        Ok(theta_operator(&self.mode_space(t)?, self.lapse, self.mass)?.matrix)
    }

    pub fn theta_dot(&self, t: f64) -> Result<RMat, EvolutionError> {
        let a = self.scale_at(t);
        let unit = build_circle(self.m, self.length, 1.0)?;
        // Θ = N(k²/a² + m²)
        Ok(-laplacian(&unit).matrix * (self.lapse * -2.0 * self.scale_rate(t) / (a * a * a)))
    }

    pub fn delta(&self, t: f64) -> Result<RMat, EvolutionError> {
        Ok(crate::linalg::sym_fn(&self.theta(t)?, |x| x.powf(-0.5)) * self.lapse.sqrt())
    }

    pub fn delta_dot(&self, t: f64) -> Result<RMat, EvolutionError> {
        match self.derivatives {
            Derivatives::Analytic => self.delta_dot_analytic(t),
            Derivatives::FiniteDifference => self.delta_dot_fd(t),
        }
    }

    /// Divided-difference derivative of `Θ^{-1/2}` in the eigenbasis of `Θ`.
    pub fn delta_dot_analytic(&self, t: f64) -> Result<RMat, EvolutionError> {
        let th = self.theta(t)?;
        let eig = nalgebra::SymmetricEigen::new(th);
        let v = &eig.eigenvectors;
        let dot = v.transpose() * self.theta_dot(t)? * v;
        let f = |x: f64| x.powf(-0.5);
        let df = |x: f64| -0.5 * x.powf(-1.5);
        let lam = &eig.eigenvalues;
        let n = lam.len();
        let mut g = RMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let dd = if (lam[i] - lam[j]).abs() < 1e-12 * lam[i].abs().max(1.0) {
                    df(lam[i])
                } else {
                    (f(lam[i]) - f(lam[j])) / (lam[i] - lam[j])
                };
                g[(i, j)] = dd * dot[(i, j)];
            }
        }
        Ok(v * g * v.transpose() * self.lapse.sqrt())
    }

    pub fn delta_dot_fd(&self, t: f64) -> Result<RMat, EvolutionError> {
        let h = fd_step(t);
        Ok((self.delta(t + h)? - self.delta(t - h)?) / (2.0 * h))
    }

    /// The scalar `δ̇δ = -ḣ/(2h) = -ȧ/a`.
    pub fn density_rate(&self, t: f64) -> f64 {
        -self.scale_rate(t) / self.scale_at(t)
    }
}

pub fn fd_step(t: f64) -> f64 {
    1e-5 * t.abs().max(1.0)
}

pub fn kahler_at(fc: &FoliationCurve, t: f64) -> Result<KahlerStructure, EvolutionError> {
    if fc.shift != 0.0 {
        return Err(EvolutionError::NonNullShift(fc.shift));
    }
    let theta = theta_operator(&fc.mode_space(t)?, fc.lapse, fc.mass)?;
    Ok(null_shift_structure(&theta, fc.lapse)?)
}

/// One-particle parts of the connection: `∂ₜv ⊃ dΓ(norm_part)v - i dΓ(phase_part)v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionTerm {
    pub norm_part: RMat,
    pub phase_part: RMat,
}

impl ConnectionTerm {
    pub fn is_zero(&self) -> bool {
        max_abs(&self.norm_part) == 0.0 && max_abs(&self.phase_part) == 0.0
    }

    /// `dΓ(R - iP)` in the flat basis.
    pub fn lift(&self, flat: &FockSpace) -> CMat {
        flat.d_gamma(&(to_complex(&self.norm_part) - to_complex(&self.phase_part) * C64::i()))
    }
}

pub fn connection_at(fc: &FoliationCurve, t: f64, ks: &KahlerStructure) -> Result<ConnectionTerm, EvolutionError> {
    if max_abs(&ks.a) != 0.0 {
        return Err(EvolutionError::GeneralConnection);
    }
    let kd = &ks.k * fc.delta_dot(t)?;
    let n = ks.m();
    Ok(ConnectionTerm {
        norm_part: &kd * -0.5,
        phase_part: &kd * 0.5 + RMat::identity(n, n) * fc.density_rate(t),
    })
}

/// Closed form `Γ̃ = -½(1 - i)KΔ̇ + i(δ̇δ)·1` as a one-particle matrix for `φ Γ̃ ∂`.
pub fn gamma_closed_form(ks: &KahlerStructure, delta_dot: &RMat, density_rate: f64) -> CMat {
    let n = ks.m();
    let kd = to_complex(&(&ks.k * delta_dot));
    kd * C64::new(-0.5, 0.5) + identity_c(n) * C64::new(0.0, density_rate)
}

/// `Γ̃ = -K∇ₜ𝔇` from the ladder derivative
/// `∇ₜ𝔇 = ½Δ̇ + (i/2)(A - is)(D̂⁻¹)˙(Aᵗ + is)` with `D̂⁻¹ = -(A - is)⁻¹Δ(Aᵗ + is)⁻¹`
/// and the pairing `δ^{xy} = s·1`.
pub fn gamma_from_ladder_derivative(a: &RMat, delta: &RMat, a_dot: &RMat, delta_dot: &RMat, s: f64, s_dot: f64) -> CMat {
    let n = a.nrows();
    let i = C64::i();
    let id = identity_c(n);
    let left = to_complex(a) - &id * (i * s);
    let right = to_complex(&a.transpose()) + &id * (i * s);
    let left_dot = to_complex(a_dot) - &id * (i * s_dot);
    let right_dot = to_complex(&a_dot.transpose()) + &id * (i * s_dot);
    let li = left.clone().try_inverse().expect("A - is is invertible");
    let ri = right.clone().try_inverse().expect("Aᵗ + is is invertible");
    let dc = to_complex(delta);
    // d/dt of -(L⁻¹ Δ R⁻¹)
    let dhat_inv_dot = -(-(&li * &left_dot * &li) * &dc * &ri + &li * to_complex(delta_dot) * &ri
        + &li * &dc * -(&ri * &right_dot * &ri));
    let nabla = to_complex(delta_dot) * C64::new(0.5, 0.0) + &left * dhat_inv_dot * &right * (i * 0.5);
    let k = dc.try_inverse().expect("Delta is invertible");
    -(k * nabla)
}

/// Classical connection `[[0, 0], [0, (δ̇δ)·1]]` on `(ϕ, π)`.
pub fn classical_connection(fc: &FoliationCurve, t: f64) -> RMat {
    let n = fc.m;
    let mut g = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        g[(n + i, n + i)] = fc.density_rate(t);
    }
    g
}

/// Complex-linear and antilinear parts of a real map on `(ϕ, π)` in the coordinate
/// `w = ϕ - iΔπ` (for `A = 0`).
pub fn holomorphic_parts(g: &RMat, ks: &KahlerStructure) -> (CMat, CMat) {
    let n = ks.m();
    let blk = |r: usize, c: usize| to_complex(&g.view((r * n, c * n), (n, n)).into_owned());
    let (gpp, gpq, gqp, gqq) = (blk(0, 0), blk(0, 1), blk(1, 0), blk(1, 1));
    let d = to_complex(&ks.delta);
    let k = to_complex(&ks.k);
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    let lin = &gpp * h + &gpq * &k * ih - &d * &gqp * ih + &d * &gqq * &k * h;
    let anti = &gpp * h - &gpq * &k * ih - &d * &gqp * ih - &d * &gqq * &k * h;
    (lin, anti)
}

/// `(‖Γ̃ - Γ_c^lin‖, ‖Γ_c^anti‖)`: how far the classical connection is from the one
/// used on states. Diagnostic only.
pub fn connection_mismatch(fc: &FoliationCurve, t: f64) -> Result<(f64, f64), EvolutionError> {
    let ks = kahler_at(fc, t)?;
    let gt = gamma_closed_form(&ks, &fc.delta_dot(t)?, fc.density_rate(t));
    let (lin, anti) = holomorphic_parts(&classical_connection(fc, t), &ks);
    Ok((spectral_norm(&(gt - lin)), spectral_norm(&anti)))
}

/// `D̂⁻¹ = -(A - is)⁻¹Δ(Aᵗ + is)⁻¹`; equals `D⁻¹` for `s = 1`.
pub fn dhat_inverse(a: &RMat, delta: &RMat, s: f64) -> CMat {
    let n = a.nrows();
    let id = identity_c(n);
    let li = (to_complex(a) - &id * C64::new(0.0, s)).try_inverse().expect("invertible");
    let ri = (to_complex(&a.transpose()) + &id * C64::new(0.0, s)).try_inverse().expect("invertible");
    -(li * to_complex(delta) * ri)
}

/// One-particle energy matrix `E = ΘΔ`.
pub fn one_particle_energy(fc: &FoliationCurve, t: f64, ks: &KahlerStructure) -> Result<RMat, EvolutionError> {
    Ok(fc.theta(t)? * &ks.delta)
}

/// `Ĥ = Θ_xy a†^x a^y` in the orthonormal basis of `Δ(t)`.
pub fn hamiltonian_at(fc: &FoliationCurve, t: f64, ks: &KahlerStructure, n_max: usize) -> Result<FockOperator, EvolutionError> {
    let e = to_complex(&one_particle_energy(fc, t, ks)?);
    let fs = FockSpace::for_structure(ks, n_max);
    Ok(fs.lift(ks, &e, crate::fock::Coords::Holomorphic))
}

/// Matrix of `Ψ(φ) ↦ Ψ(Lᵗφ)`, i.e. `Γ(L)`, in the flat orthonormal basis.
pub fn group_lift(flat: &FockSpace, l: &CMat) -> CMat {
    let dim = flat.dim();
    let n = l.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || l[(i, j)] == C64::new(0.0, 0.0)));
    let mut out = CMat::zeros(dim, dim);
    if diagonal {
        for (idx, e) in flat.basis.iter().enumerate() {
            out[(idx, idx)] = e.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (i, &k)| acc * l[(i, i)].powu(k as u32));
        }
        return out;
    }
    let lt = l.transpose();
    for (col, e) in flat.basis.iter().enumerate() {
        let p = Poly::monomial(e.clone(), C64::new(1.0 / factorial_weight(e).sqrt(), 0.0)).linear_subst(&lt);
        for (f, c) in &p.terms {
            out[(flat.index_of(f), col)] += c * factorial_weight(f).sqrt();
        }
    }
    out
}

/// `T(t)`: flat coefficients to coefficients in the orthonormal basis of `Δ(t)`.
pub fn frame_at(flat: &FockSpace, ks: &KahlerStructure) -> CMat {
    let chol = nalgebra::Cholesky::new(ks.delta.clone()).expect("Delta is positive definite").l();
    group_lift(flat, &to_complex(&chol.transpose()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Cayley,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub norm_t: f64,
    pub norm_flat: f64,
    pub energy: f64,
    pub state: CVec,
}

/// Runs the state equation for one foliation.
#[derive(Debug, Clone)]
pub struct Evolver {
    pub fc: FoliationCurve,
    pub flat: FockSpace,
    pub scheme: Scheme,
    pub connection: bool,
    pub rk4_budget: f64,
}

impl Evolver {
    pub fn new(fc: FoliationCurve, n_max: usize, scheme: Scheme, connection: bool) -> Self {
        let flat = FockSpace::new(&RMat::identity(fc.m, fc.m), n_max);
        Self { fc, flat, scheme, connection, rk4_budget: 1e-6 }
    }

    /// One-particle `(R, P + E)` at time `t`.
    fn parts(&self, t: f64) -> Result<(RMat, RMat), EvolutionError> {
        let ks = kahler_at(&self.fc, t)?;
        let e = one_particle_energy(&self.fc, t, &ks)?;
        if !self.connection {
            return Ok((RMat::zeros(self.fc.m, self.fc.m), e));
        }
        let con = connection_at(&self.fc, t, &ks)?;
        Ok((con.norm_part, con.phase_part + e))
    }

    /// Full generator `dΓ(R - i(P + E))` in the flat basis.
    pub fn generator(&self, t: f64) -> Result<CMat, EvolutionError> {
        let (r, h) = self.parts(t)?;
        Ok(self.flat.d_gamma(&(to_complex(&r) - to_complex(&h) * C64::i())))
    }

    pub fn step(&self, v: &CVec, t: f64, dt: f64) -> Result<CVec, EvolutionError> {
        if !(dt > 0.0) {
            return Err(EvolutionError::BadStep(dt));
        }
        match self.scheme {
            Scheme::Cayley => self.cayley_step(v, t, dt),
            Scheme::Rk4 => {
                let full = self.rk4_step(v, t, dt)?;
                let half = self.rk4_step(&self.rk4_step(v, t, dt / 2.0)?, t + dt / 2.0, dt / 2.0)?;
                let err = (&full - &half).norm() / 15.0 / v.norm().max(1e-300);
                if err > self.rk4_budget {
                    return Err(EvolutionError::ErrorBudget { t, err, budget: self.rk4_budget });
                }
                Ok(half)
            }
        }
    }

    fn rk4_step(&self, v: &CVec, t: f64, dt: f64) -> Result<CVec, EvolutionError> {
        let g0 = self.generator(t)?;
        let gm = self.generator(t + dt / 2.0)?;
        let g1 = self.generator(t + dt)?;
        let k1 = &g0 * v;
        let k2 = &gm * (v + &k1 * C64::new(dt / 2.0, 0.0));
        let k3 = &gm * (v + &k2 * C64::new(dt / 2.0, 0.0));
        let k4 = &g1 * (v + &k3 * C64::new(dt, 0.0));
        Ok(v + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0))
    }

    /// Strang splitting: half steps of the norm-correcting flow around a Cayley step
    /// of the anti-Hermitian part.
    fn cayley_step(&self, v: &CVec, t: f64, dt: f64) -> Result<CVec, EvolutionError> {
        let mut w = v.clone();
        if self.connection {
            let (r, _) = self.parts(t + dt / 4.0)?;
            w = self.norm_flow(&r, dt / 2.0) * w;
        }
        let (_, h) = self.parts(t + dt / 2.0)?;
        let g = self.flat.d_gamma(&(to_complex(&h) * -C64::i()));
        let id = CMat::identity(self.flat.dim(), self.flat.dim());
        let lhs = &id - &g * C64::new(dt / 2.0, 0.0);
        let rhs = (&id + &g * C64::new(dt / 2.0, 0.0)) * w;
        w = lhs.lu().solve(&rhs).expect("Cayley matrix is invertible");
        if self.connection {
            let (r, _) = self.parts(t + 3.0 * dt / 4.0)?;
            w = self.norm_flow(&r, dt / 2.0) * w;
        }
        Ok(w)
    }

    /// `exp(s dΓ(R)) = Γ(exp(sR))`.
    fn norm_flow(&self, r: &RMat, s: f64) -> CMat {
        let e = (r * s).exp();
        group_lift(&self.flat, &to_complex(&e))
    }

    pub fn norm_t(&self, v: &CVec, t: f64) -> Result<f64, EvolutionError> {
        let ks = kahler_at(&self.fc, t)?;
        Ok((frame_at(&self.flat, &ks) * v).norm_squared())
    }

    /// `⟨Ĥ⟩` in the time-`t` inner product.
    pub fn energy(&self, v: &CVec, t: f64) -> Result<f64, EvolutionError> {
        let ks = kahler_at(&self.fc, t)?;
        let frame = frame_at(&self.flat, &ks);
        let e = to_complex(&one_particle_energy(&self.fc, t, &ks)?);
        let w = &frame * v;
        let hv = &frame * (self.flat.d_gamma(&e) * v);
        Ok((w.dotc(&hv) / w.norm_squared()).re)
    }

    fn record(&self, v: &CVec, t: f64) -> Result<StepRecord, EvolutionError> {
        Ok(StepRecord {
            t,
            norm_t: self.norm_t(v, t)?,
            norm_flat: v.norm_squared(),
            energy: self.energy(v, t)?,
            state: v.clone(),
        })
    }

    /// Integrates from `t0` to `t1` with `round((t1 - t0)/dt)` equal steps. On failure
    /// the records produced so far are returned with the error.
    pub fn run(&self, v0: &CVec, t0: f64, t1: f64, dt: f64) -> Result<Vec<StepRecord>, (Vec<StepRecord>, EvolutionError)> {
        let mut out = Vec::new();
        match self.record(v0, t0) {
            Ok(r) => out.push(r),
            Err(e) => return Err((out, e)),
        }
        if t1 <= t0 {
            return Ok(out);
        }
        if !(dt > 0.0) {
            return Err((out, EvolutionError::BadStep(dt)));
        }
        let n = ((t1 - t0) / dt).round().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let mut v = v0.clone();
        for k in 0..n {
            let t = t0 + k as f64 * h;
            match self.step(&v, t, h).and_then(|w| self.record(&w, t0 + (k + 1) as f64 * h).map(|r| (w, r))) {
                Ok((w, r)) => {
                    v = w;
                    out.push(r);
                }
                Err(e) => return Err((out, e)),
            }
        }
        Ok(out)
    }

    /// `|⟨u, v⟩_t|² / (‖u‖²_t ‖v‖²_t)`.
    pub fn fidelity(&self, u: &CVec, v: &CVec, t: f64) -> Result<f64, EvolutionError> {
        let ks = kahler_at(&self.fc, t)?;
        let frame = frame_at(&self.flat, &ks);
        let (a, b) = (&frame * u, &frame * v);
        Ok(a.dotc(&b).norm_sqr() / (a.norm_squared() * b.norm_squared()))
    }
}

/// Largest relative deviation of `norm_t` from its initial value, per unit time.
pub fn norm_drift(records: &[StepRecord]) -> f64 {
    let first = &records[0];
    let last = records.last().unwrap();
    let span = (last.t - first.t).max(1e-300);
    records.iter().fold(0.0f64, |m, r| m.max((r.norm_t - first.norm_t).abs() / first.norm_t)) / span
}

/// Closed-form propagation for a static foliation: the kernel `exp(φ e^{-itE} σ̄)`
/// applied to the state's polynomial.
pub fn stationary_solution(flat: &FockSpace, psi0: &FockState, fc: &FoliationCurve, t: f64) -> Result<FockState, EvolutionError> {
    if !fc.is_static() {
        return Err(EvolutionError::NotStatic);
    }
    let ks = kahler_at(fc, 0.0)?;
    let e = to_complex(&one_particle_energy(fc, 0.0, &ks)?);
    let b = (e * C64::new(0.0, -t)).exp();
    let poly = segal_polynomial(psi0, flat);
    let out = GaussianKernel::exp(b).apply(&poly);
    segal_coefficients(&out, flat).map_err(|_| EvolutionError::Fock(FockError::Dimension { expected: flat.m, got: out.nvars }))
}

/// Linear observable `F = λ·ϕ + η·π` as an operator in the flat basis at time `t`.
fn linear_observable(flat: &FockSpace, ks: &KahlerStructure, lambda: &[f64], eta: &[f64]) -> CMat {
    let m = flat.m;
    let dim = flat.dim();
    let r = 1.0 / std::f64::consts::SQRT_2;
    let mut q = CMat::zeros(dim, dim);
    for x in 0..m {
        let mut a_t = CMat::zeros(dim, dim);
        for y in 0..m {
            a_t += &flat.annihilate_ops[y] * C64::new(ks.delta[(x, y)], 0.0);
        }
        // ϕ_x = (a†_x + a_x)/√2,  π_x = -i(K_xy a†_y - ∂_x)/√2
        q += (&flat.create_ops[x] + &a_t) * C64::new(lambda[x] * r, 0.0);
        let mut kc = CMat::zeros(dim, dim);
        for y in 0..m {
            kc += &flat.create_ops[y] * C64::new(ks.k[(x, y)], 0.0);
        }
        q += (kc - &flat.annihilate_ops[x]) * C64::new(0.0, -eta[x] * r);
    }
    q
}

/// `‖∂ₜQ(F) + [Γ, Q(F)]‖` for a fixed linear `F`, where `Γ = -dΓ(R - iP)` is the
/// state connection; measured in the time-`t` frame on occupancies `< n_max`.
pub fn curvature_residual(fc: &FoliationCurve, t: f64, lambda: &[f64], eta: &[f64], n_max: usize) -> Result<f64, EvolutionError> {
    let flat = FockSpace::new(&RMat::identity(fc.m, fc.m), n_max);
    let h = fd_step(t);
    let q_at = |s: f64| -> Result<CMat, EvolutionError> { Ok(linear_observable(&flat, &kahler_at(fc, s)?, lambda, eta)) };
    let dq = (q_at(t + h)? - q_at(t - h)?) / C64::new(2.0 * h, 0.0);
    let ks = kahler_at(fc, t)?;
    let gamma = -connection_at(fc, t, &ks)?.lift(&flat);
    let q = q_at(t)?;
    let res = dq + &gamma * &q - &q * &gamma;
    let frame = frame_at(&flat, &ks);
    let finv = frame.clone().try_inverse().expect("frame is invertible");
    let full = frame * res * finv;
    let cols = flat.levels_up_to(n_max - 1);
    let sub = CMat::from_fn(flat.dim(), cols.len(), |i, j| full[(i, cols[j])]);
    Ok(spectral_norm(&sub))
}
