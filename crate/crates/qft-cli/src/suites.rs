//! Invariant suites behind `qft validate`.

use fieldquant::evolution::{
    connection_mismatch, curvature_residual, gamma_closed_form, gamma_from_ladder_derivative, FoliationCurve,
};
use fieldquant::fock::{linear_symbol, poisson_linear, FockSpace};
use fieldquant::gaussmeasure::wick_order;
use fieldquant::kahler::{
    complex_structure, from_blocks, j_from_generator, kg_generator, metric, null_shift_structure, KahlerStructure,
};
use fieldquant::linalg::{c, max_abs, max_abs_c, min_eigenvalue, spectral_norm, to_complex};
use fieldquant::modespace::{build_circle, theta_operator};
use fieldquant::poly::{exponents_up_to, Poly};
use fieldquant::staralgebra::{
    fourier_kernel_residuals, moyal_star_trig, sq_fourier_kernel, table1_rhs, weyl_norm_bounds, GaussianKernel,
    KernelForm, TrigSymbol,
};
use fieldquant::transforms::{
    fourier_field_momentum, fourier_hol, fourier_mixing, intertwining_residuals, momentum_bargmann, segal_bargmann,
    unitarity_residual, Picture,
};
use fieldquant::{CMat, CVec, RMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITES: [&str; 11] = [
    "kahler",
    "polar",
    "fock",
    "ordering",
    "gns",
    "staralgebra",
    "norm-bounds",
    "transforms",
    "table1",
    "fourier-kernel",
    "connection",
];

const TIGHT: f64 = 1e-10;
/// Diagnostics are reported but never fail.
const REPORT: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance }
    }

    pub fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Everything a suite may need.
pub struct Context {
    pub ks: KahlerStructure,
    /// Structure taken from the geometry (not an override).
    pub from_geometry: bool,
    pub fc: FoliationCurve,
    pub t0: f64,
    pub n_max: usize,
    pub degree: usize,
    pub seed: u64,
}

impl Context {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }

    /// Single mode carrying `Δ₀₀`, for suites that need deep truncations.
    fn one_mode(&self) -> KahlerStructure {
        let d = self.ks.delta[(0, 0)];
        from_blocks(&RMat::zeros(1, 1), &RMat::from_element(1, 1, d)).expect("positive scalar")
    }
}

/// Builds `(A, Δ, D, K)` without validation, so broken overrides reach the named checks.
pub fn raw_structure(a: &RMat, delta: &RMat) -> KahlerStructure {
    let n = delta.nrows();
    let k = delta.clone().try_inverse().unwrap_or_else(|| RMat::from_element(n, n, f64::NAN));
    let i = c(0.0, 1.0);
    let one = CMat::identity(n, n);
    let ac = to_complex(a);
    let d = (ac.transpose() * i + &one) * to_complex(&k) * (ac * i - &one);
    KahlerStructure { a: a.clone(), delta: delta.clone(), d: d.map(|z| z.re), k }
}

pub fn run_suite(name: &str, ctx: &Context) -> Vec<CheckRow> {
    match name {
        "kahler" => kahler(ctx),
        "polar" => polar(ctx),
        "fock" => fock(ctx),
        "ordering" => ordering(ctx),
        "gns" => gns(ctx),
        "staralgebra" => staralgebra(ctx),
        "norm-bounds" => norm_bounds(ctx),
        "transforms" => transforms(ctx),
        "table1" => table1(ctx),
        "fourier-kernel" => fourier_kernel(ctx),
        "connection" => connection(ctx),
        other => vec![CheckRow::new(format!("unknown suite {other}"), f64::NAN, 0.0)],
    }
}

fn kahler(ctx: &Context) -> Vec<CheckRow> {
    let ks = &ctx.ks;
    let n = ks.m();
    let mut rows: Vec<CheckRow> = ks
        .identity_residuals()
        .into_iter()
        .map(|(name, r)| CheckRow::new(name, r, if name.contains('>') || name.contains('<') { 0.0 } else { TIGHT }))
        .collect();
    let j = complex_structure(ks);
    rows.push(CheckRow::new("J^2 = -1", max_abs(&(&j * &j + RMat::identity(2 * n, 2 * n))), TIGHT));
    let mu = min_eigenvalue(&metric(ks));
    rows.push(CheckRow::new("mu > 0", if mu > 0.0 { 0.0 } else { mu.abs().max(f64::MIN_POSITIVE) }, 0.0));
    rows
}

fn polar(ctx: &Context) -> Vec<CheckRow> {
    let fc = &ctx.fc;
    let ms = match build_circle(fc.m, fc.length, fc.scale_at(ctx.t0)) {
        Ok(ms) => ms,
        Err(e) => return vec![CheckRow::new(format!("mode space: {e}"), f64::NAN, 0.0)],
    };
    let mut rows = Vec::new();
    let theta = theta_operator(&ms, fc.lapse, fc.mass).expect("validated geometry");
    let j0 = kg_generator(&ms, fc.lapse, 0.0, fc.mass).and_then(|g| j_from_generator(&g));
    let ks0 = null_shift_structure(&theta, fc.lapse);
    match (&j0, ks0) {
        (Ok(j0), Ok(ks0)) => rows.push(CheckRow::new("polar factor = null-shift J", max_abs(&(j0 - complex_structure(&ks0))), TIGHT)),
        _ => rows.push(CheckRow::new("polar factor = null-shift J", f64::NAN, TIGHT)),
    }
    if fc.shift != 0.0 {
        match (kg_generator(&ms, fc.lapse, fc.shift, fc.mass).and_then(|g| j_from_generator(&g)), &j0) {
            (Ok(j), Ok(j0)) => {
                let n = 2 * fc.m;
                rows.push(CheckRow::new("polar factor J^2 = -1 at shift", max_abs(&(&j * &j + RMat::identity(n, n))), 1e-8));
                rows.push(CheckRow::new("distance to null-shift J", max_abs(&(j - j0)), REPORT));
            }
            _ => rows.push(CheckRow::new("polar factor at shift", f64::NAN, 1e-8)),
        }
    }
    rows
}

fn rc<R: Rng>(rng: &mut R, n: usize, r: f64) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen_range(-r..r), rng.gen_range(-r..r)))
}

fn low_cols(fs: &FockSpace, m: &CMat, n: usize) -> CMat {
    m.select_columns(fs.levels_up_to(n).iter())
}

fn fock(ctx: &Context) -> Vec<CheckRow> {
    let ks = &ctx.ks;
    let m = ks.m();
    let fs = FockSpace::for_structure(ks, ctx.n_max);
    let id = CMat::identity(fs.dim(), fs.dim());
    let below = ctx.n_max - 1;
    let mut rng = ctx.rng(1);
    let mut ccr: f64 = 0.0;
    let mut dirac: f64 = 0.0;
    for _ in 0..3 {
        let (c1, c2) = (rc(&mut rng, m, 1.0), rc(&mut rng, m, 1.0));
        let comm = fs.annihilate(&c1).commutator(&fs.create(&c2)).mat;
        let s = (c1.adjoint() * to_complex(&ks.delta) * &c2)[(0, 0)];
        ccr = ccr.max(max_abs_c(&low_cols(&fs, &(comm - &id * s), below)));
        let f: Vec<C64> = rc(&mut rng, 2 * m, 1.0).iter().copied().collect();
        let g: Vec<C64> = rc(&mut rng, 2 * m, 1.0).iter().copied().collect();
        let (qf, qg) = (fs.weyl_quantize(&linear_symbol(&f)).unwrap(), fs.weyl_quantize(&linear_symbol(&g)).unwrap());
        let expect = &id * (c(0.0, -1.0) * poisson_linear(ks, &f, &g));
        dirac = dirac.max(max_abs_c(&low_cols(&fs, &(qf.commutator(&qg).mat - expect), below)));
    }
    vec![CheckRow::new("CCR [a, a+] = chi Delta chi", ccr, 1e-12), CheckRow::new("Dirac [Q(F), Q(G)] = -i Q({F, G})", dirac, 1e-12)]
}

fn ordering(ctx: &Context) -> Vec<CheckRow> {
    let ks = &ctx.ks;
    let m = ks.m();
    if ctx.n_max < 2 {
        return vec![CheckRow::new("Weyl - Wick shift (needs n_max >= 2)", f64::NAN, TIGHT)];
    }
    let fs = FockSpace::for_structure(ks, ctx.n_max);
    let id = CMat::identity(fs.dim(), fs.dim());
    let mut shift: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    for x in 0..m {
        let mut e = vec![0u8; 2 * m];
        e[x] = 1;
        e[m + x] = 1;
        let sym = Poly::monomial(e, c(1.0, 0.0));
        let diff = fs.weyl_quantize(&sym).unwrap().mat - fs.wick_quantize(&sym).unwrap().mat;
        let half = c(ks.delta[(x, x)] / 2.0, 0.0);
        shift = shift.max(max_abs_c(&(diff - &id * half)));
        let ordered = wick_order(&sym, &to_complex(&ks.delta));
        contraction = contraction.max(ordered.max_diff(&(&sym - &Poly::constant(2 * m, half))));
    }
    let mut vac: f64 = 0.0;
    for e in exponents_up_to(2 * m, ctx.n_max.min(4)).into_iter().skip(1) {
        let q = fs.wick_quantize(&Poly::monomial(e, c(1.0, 0.0))).unwrap().mat;
        vac = vac.max(q[(0, 0)].norm());
    }
    vec![
        CheckRow::new("Weyl - Wick = Delta/2", shift, 1e-12),
        CheckRow::new("Wick ordering contraction", contraction, 1e-12),
        CheckRow::new("Wick vacuum expectation", vac, 1e-12),
    ]
}

fn gns(ctx: &Context) -> Vec<CheckRow> {
    let ks = ctx.one_mode();
    let fs = FockSpace::for_structure(&ks, 30);
    let mut rng = ctx.rng(2);
    let mut alphas = vec![c(1.0, 0.0), c(0.0, 1.0)];
    for _ in 0..6 {
        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        alphas.push(z / z.norm().max(1.0));
    }
    let mut worst: f64 = 0.0;
    for a in alphas {
        let q = fs.weyl_quantize_trig(&TrigSymbol::plain(CVec::from_element(1, a))).mat[(0, 0)];
        let expect = (-a.norm_sqr() * ks.delta[(0, 0)] / 2.0).exp();
        worst = worst.max((q - expect).norm() / expect);
    }
    vec![CheckRow::new("vacuum expectation of E_alpha", worst, 1e-8)]
}

fn staralgebra(ctx: &Context) -> Vec<CheckRow> {
    let ks = &ctx.ks;
    let m = ks.m();
    let mut rng = ctx.rng(3);
    let mut assoc: f64 = 0.0;
    let mut inv: f64 = 0.0;
    for _ in 0..10 {
        let e: Vec<TrigSymbol> = (0..3).map(|_| TrigSymbol::plain(rc(&mut rng, m, 1.0))).collect();
        let l = moyal_star_trig(&moyal_star_trig(&e[0], &e[1], &ks.delta), &e[2], &ks.delta);
        let r = moyal_star_trig(&e[0], &moyal_star_trig(&e[1], &e[2], &ks.delta), &ks.delta);
        assoc = assoc.max((l.prefactor - r.prefactor).norm()).max((l.chi - r.chi).camax());
        let p = moyal_star_trig(&e[0].conj(), &e[0], &ks.delta);
        inv = inv.max((p.prefactor - c(1.0, 0.0)).norm()).max(p.chi.camax());
    }
    let one = ctx.one_mode();
    let fs = FockSpace::for_structure(&one, 30);
    let mut hom: f64 = 0.0;
    for _ in 0..3 {
        let mut unit = || {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            TrigSymbol::plain(CVec::from_element(1, z / z.norm().max(1.0)))
        };
        let (rho, alpha) = (unit(), unit());
        let prod = moyal_star_trig(&rho, &alpha, &one.delta);
        let lhs = fs.weyl_quantize_trig(&rho).mat * fs.weyl_quantize_trig(&alpha).mat;
        let diff = lhs - fs.weyl_quantize_trig(&prod).mat;
        hom = hom.max(spectral_norm(&low_cols(&fs, &diff, 4).rows(0, 10).into_owned()));
    }
    vec![
        CheckRow::new("trig star associativity", assoc, 1e-14),
        CheckRow::new("conj(E) star E = 1", inv, 1e-14),
        CheckRow::new("Weyl homomorphism (low occupancy)", hom, 1e-6),
    ]
}

fn norm_bounds(ctx: &Context) -> Vec<CheckRow> {
    let ks = ctx.one_mode();
    let fs = FockSpace::for_structure(&ks, 30);
    let mut rng = ctx.rng(4);
    let mut violation: f64 = 0.0;
    for _ in 0..20 {
        let terms: Vec<(C64, CVec)> = (0..2).map(|_| (c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rc(&mut rng, 1, 0.7))).collect();
        let (lo, hi) = weyl_norm_bounds(&terms, &ks.delta);
        let mut op = CMat::zeros(fs.dim(), fs.dim());
        for (f, chi) in &terms {
            op += fs.weyl_quantize_trig(&TrigSymbol::plain(chi.clone())).mat * *f;
        }
        let est = spectral_norm(&low_cols(&fs, &op, 4).rows(0, 16).into_owned());
        violation = violation.max(lo - est).max(est - hi);
    }
    let (lo1, hi1) = weyl_norm_bounds(&[(c(1.0, 0.0), CVec::from_element(1, c(0.6, -0.3)))], &ks.delta);
    vec![
        CheckRow::new("classical <= operator <= upper", violation.max(0.0), 1e-9),
        CheckRow::new("single term bounds = 1", (lo1 - 1.0).abs().max((hi1 - 1.0).abs()), 0.0),
    ]
}

fn transforms(ctx: &Context) -> Vec<CheckRow> {
    let ks = &ctx.ks;
    let deg = ctx.degree;
    let mut rows = Vec::new();
    let unit = [
        ("segal_bargmann unitary", unitarity_residual(segal_bargmann, Picture::Schrodinger, ks, deg)),
        ("momentum_bargmann unitary", unitarity_residual(momentum_bargmann, Picture::Momentum, ks, deg)),
        ("fourier_hol unitary", unitarity_residual(fourier_hol, Picture::Holomorphic, ks, deg)),
        ("fourier_field_momentum unitary", unitarity_residual(fourier_field_momentum, Picture::Schrodinger, ks, deg)),
    ];
    for (name, r) in unit {
        rows.push(CheckRow::new(name, r.unwrap_or(f64::NAN), TIGHT));
    }
    match intertwining_residuals(ks, deg.min(3)) {
        Ok(list) => rows.extend(list.into_iter().map(|(n, r)| CheckRow::new(format!("intertwining {n}"), r, TIGHT))),
        Err(_) => rows.push(CheckRow::new("intertwining", f64::NAN, TIGHT)),
    }
    rows.push(CheckRow::new("ladder mixing under F", fourier_mixing(ks).unwrap_or(f64::NAN), 1e-12));
    rows
}

fn table1(ctx: &Context) -> Vec<CheckRow> {
    let dim = ctx.ks.m();
    let mut rng = ctx.rng(5);
    let rm = |rng: &mut ChaCha8Rng| CMat::from_fn(dim, dim, |_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
    let (m, u, n, v) = (rm(&mut rng), rm(&mut rng), rm(&mut rng), rm(&mut rng));
    let mut rows = Vec::new();
    for a in KernelForm::TRIG {
        for b in KernelForm::TRIG {
            let k = GaussianKernel::trig(a, m.clone(), u.clone()).compose(&GaussianKernel::trig(b, n.clone(), v.clone()));
            let mut worst: f64 = 0.0;
            for _ in 0..3 {
                let phi = rc(&mut rng, dim, 1.0);
                let g = rc(&mut rng, dim, 1.0);
                worst = worst.max((k.eval(&phi, &g) - table1_rhs(a, b, &m, &u, &n, &v, &phi, &g)).norm());
            }
            rows.push(CheckRow::new(format!("{} o {}", a.name(), b.name()), worst, TIGHT));
        }
    }
    rows
}

fn fourier_kernel(ctx: &Context) -> Vec<CheckRow> {
    let ks = &ctx.ks;
    let (inv, met, dag) = fourier_kernel_residuals(ks);
    let (f, fi) = sq_fourier_kernel(ks);
    let n = 2 * ks.m();
    let comp = f.compose(&fi).exponent().map(|e| max_abs_c(&(e - CMat::identity(n, n)))).unwrap_or(f64::NAN);
    vec![
        CheckRow::new("F F^-1 = 1 (exponents)", inv, TIGHT),
        CheckRow::new("F^t (-D) F = Delta", met, TIGHT),
        CheckRow::new("F^dagger = F^-1", dag, TIGHT),
        CheckRow::new("kernel composition F o F^-1 = identity", comp, TIGHT),
    ]
}

fn connection(ctx: &Context) -> Vec<CheckRow> {
    if !ctx.from_geometry {
        return vec![];
    }
    let fc = &ctx.fc;
    let t = ctx.t0;
    let m = fc.m;
    let mut rows = Vec::new();
    let closed = (|| {
        let ks = fieldquant::evolution::kahler_at(fc, t)?;
        let dd = fc.delta_dot(t)?;
        let z = RMat::zeros(m, m);
        let g1 = gamma_closed_form(&ks, &dd, fc.density_rate(t));
        let g2 = gamma_from_ladder_derivative(&z, &ks.delta, &z, &dd, fc.scale_at(t), fc.scale_rate(t));
        Ok::<f64, fieldquant::evolution::EvolutionError>(max_abs_c(&(g1 - g2)))
    })();
    rows.push(CheckRow::new("connection closed form = ladder derivative", closed.unwrap_or(f64::NAN), TIGHT));
    match connection_mismatch(fc, t) {
        Ok((gap, anti)) => {
            rows.push(CheckRow::new("classical vs state connection gap", gap, REPORT));
            rows.push(CheckRow::new("classical connection antilinear part", anti, REPORT));
        }
        Err(_) => rows.push(CheckRow::new("classical vs state connection gap", f64::NAN, REPORT)),
    }
    let mut rng = ctx.rng(6);
    let lam: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let eta: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cr = curvature_residual(fc, t, &lam, &eta, ctx.n_max.max(2)).unwrap_or(f64::NAN);
    rows.push(CheckRow::new("curvature residual", cr, REPORT));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use fieldquant::kahler::flat;
    use std::f64::consts::PI;

    fn ctx(ks: KahlerStructure, from_geometry: bool) -> Context {
        let m = ks.m();
        Context {
            ks,
            from_geometry,
            fc: FoliationCurve::minkowski(m, 2.0 * PI, 1.0, 1.0),
            t0: 0.0,
            n_max: 4,
            degree: 3,
            seed: 1,
        }
    }

    #[test]
    fn raw_structure_matches_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ks = fieldquant::kahler::random_compatible(2, &mut rng);
        let raw = raw_structure(&ks.a, &ks.delta);
        assert!(max_abs(&(raw.d - &ks.d)) < 1e-12);
    }

    #[test]
    fn broken_delta_is_named() {
        let delta = RMat::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]);
        let rows = kahler(&ctx(raw_structure(&RMat::zeros(2, 2), &delta), false));
        let bad: Vec<&str> = rows.iter().filter(|r| !r.pass()).map(|r| r.name.as_str()).collect();
        assert!(bad.contains(&"Delta symmetry"), "{bad:?}");
    }

    #[test]
    fn flat_suites_pass() {
        let c = ctx(flat(1), true);
        for s in SUITES {
            for row in run_suite(s, &c) {
                assert!(row.pass(), "{s}: {row:?}");
            }
        }
    }

    #[test]
    fn table_has_sixteen_rows() {
        let rows = table1(&ctx(flat(2), true));
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.residual < 1e-10));
    }

    #[test]
    fn nan_never_passes() {
        assert!(!CheckRow::new("x", f64::NAN, f64::INFINITY).pass());
    }
}
