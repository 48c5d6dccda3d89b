//! `validate`, `evolve` and `sweep`.

use crate::config::{ConfigError, InitialState, ScenarioConfig};
use crate::output::{num, write_csv, write_svg};
use crate::suites::{raw_structure, run_suite, CheckRow, Context, SUITES};
use fieldquant::evolution::{kahler_at, stationary_solution, EvolutionError, Evolver, FoliationCurve, StepRecord};
use fieldquant::fock::{FockSpace, FockState};
use fieldquant::kahler::null_shift_structure;
use fieldquant::linalg::c;
use fieldquant::modespace::{build_circle, theta_operator};
use fieldquant::staralgebra::TrigSymbol;
use fieldquant::CVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    CheckFailure = 1,
    ConfigError = 2,
    Budget = 3,
}

#[derive(Debug)]
pub struct Outcome {
    pub exit: Exit,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn io_fail(e: std::io::Error) -> ConfigError {
    ConfigError(format!("cannot write output: {e}"))
}

pub const SUITE_HEADER: [&str; 4] = ["check", "residual", "tolerance", "pass"];
pub const STEP_HEADER: [&str; 7] = ["t", "norm_t", "norm_flat", "energy", "fidelity_vs_oracle", "drift_with_connection", "drift_without"];
pub const SWEEP_HEADER: [&str; 8] = ["index", "mass", "n_max", "dt", "final_fidelity", "max_drift", "trig_unitarity_residual", "status"];

pub fn cmd_validate(cfg: &ScenarioConfig) -> Result<Outcome, ConfigError> {
    let fc = cfg.foliation();
    let t0 = cfg.evolution.as_ref().map_or(0.0, |e| e.t0);
    let (ks, from_geometry) = match cfg.kahler_matrices() {
        Some((a, delta)) => (raw_structure(&a, &delta), false),
        None => {
            let ms = build_circle(fc.m, fc.length, fc.scale_at(t0)).map_err(|e| ConfigError(format!("invalid value for `geometry.scale`: {e}")))?;
            let theta = theta_operator(&ms, fc.lapse, fc.mass).map_err(|e| ConfigError(format!("invalid geometry: {e}")))?;
            (null_shift_structure(&theta, fc.lapse).map_err(|e| ConfigError(format!("invalid geometry: {e}")))?, true)
        }
    };
    let ctx = Context { ks, from_geometry, fc, t0, n_max: cfg.truncation.n_max, degree: cfg.truncation.degree, seed: cfg.seed };
    let suites: Vec<&str> = if cfg.checks.is_empty() { SUITES.to_vec() } else { cfg.checks.iter().map(String::as_str).collect() };
    let mut rows: Vec<CheckRow> = Vec::new();
    let mut summary = Vec::new();
    let structure_ok = ctx.ks.validate().is_ok();
    for s in suites {
        if s != "kahler" && !structure_ok {
            summary.push(format!("suite {s} skipped: structure is invalid"));
            continue;
        }
        rows.extend(run_suite(s, &ctx).into_iter().map(|mut r| {
            r.name = format!("{s}: {}", r.name);
            r
        }));
    }
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass()).collect();
    for r in &failed {
        summary.push(format!("FAILED {} (residual {:.3e}, tolerance {:.1e})", r.name, r.residual, r.tolerance));
    }
    summary.push(format!("{} checks, {} failed", rows.len(), failed.len()));
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.name.clone(), num(r.residual), num(r.tolerance), r.pass().to_string()])
        .collect();
    let path = cfg.output_dir.join(format!("{}_validate.csv", cfg.name));
    write_csv(&path, &SUITE_HEADER, &table).map_err(io_fail)?;
    let exit = if failed.is_empty() && structure_ok { Exit::Pass } else { Exit::CheckFailure };
    Ok(Outcome { exit, files: vec![path], summary })
}

fn initial_state(cfg: &ScenarioConfig, flat: &FockSpace) -> CVec {
    let ev = cfg.evolution.as_ref().expect("checked by caller");
    match ev.initial {
        InitialState::Vacuum => flat.vacuum().coeffs,
        InitialState::Basis => flat.basis_state(ev.occupation.as_ref().expect("validated")).coeffs,
        InitialState::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            CVec::from_fn(flat.dim(), |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).normalize()
        }
    }
}

type RunResult = Result<Vec<StepRecord>, (Vec<StepRecord>, EvolutionError)>;

fn relative_drift(recs: &[StepRecord], k: usize) -> f64 {
    match (recs.first(), recs.get(k)) {
        (Some(a), Some(b)) => (b.norm_t - a.norm_t).abs() / a.norm_t,
        _ => f64::NAN,
    }
}

fn per_unit_time(recs: &[StepRecord]) -> f64 {
    if recs.len() < 2 {
        return 0.0;
    }
    fieldquant::evolution::norm_drift(recs)
}

fn oracle_fidelity(ev: &Evolver, v0: &CVec, rec: &StepRecord, t0: f64) -> f64 {
    if !ev.fc.is_static() {
        return f64::NAN;
    }
    let psi0 = FockState { coeffs: v0.clone() };
    match stationary_solution(&ev.flat, &psi0, &ev.fc, rec.t - t0) {
        Ok(o) => ev.fidelity(&rec.state, &o.coeffs, rec.t).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

fn split(r: RunResult) -> (Vec<StepRecord>, Option<EvolutionError>) {
    match r {
        Ok(v) => (v, None),
        Err((v, e)) => (v, Some(e)),
    }
}

fn evolution_error(e: &EvolutionError) -> ConfigError {
    ConfigError(format!("scenario rejected by the evolution: {e}"))
}

pub fn cmd_evolve(cfg: &ScenarioConfig, no_connection: bool, plots: bool) -> Result<Outcome, ConfigError> {
    let ev_cfg = cfg.evolution_or_err()?;
    let fc = cfg.foliation();
    let mk = |conn: bool| {
        let mut e = Evolver::new(fc.clone(), cfg.truncation.n_max, ev_cfg.scheme(), conn);
        e.rk4_budget = ev_cfg.rk4_budget;
        e
    };
    let (main, paired) = (mk(!no_connection), mk(no_connection));
    let v0 = initial_state(cfg, &main.flat);
    let (t0, t1, dt) = (ev_cfg.t0, ev_cfg.t1, ev_cfg.dt);
    let (recs, err) = split(main.run(&v0, t0, t1, dt));
    if let Some(e) = &err {
        if !matches!(e, EvolutionError::ErrorBudget { .. }) {
            return Err(evolution_error(e));
        }
    }
    let (other, _) = split(paired.run(&v0, t0, t1, dt));
    let (with, without) = if no_connection { (&other, &recs) } else { (&recs, &other) };
    let mut table: Vec<Vec<String>> = recs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                num(r.t),
                num(r.norm_t),
                num(r.norm_flat),
                num(r.energy),
                num(oracle_fidelity(&main, &v0, r, t0)),
                num(relative_drift(with, k)),
                num(relative_drift(without, k)),
            ]
        })
        .collect();
    let mut summary = Vec::new();
    let exit = match &err {
        Some(e) => {
            let mut marker = vec!["truncated".to_string()];
            marker.extend(std::iter::repeat(String::new()).take(STEP_HEADER.len() - 1));
            table.push(marker);
            summary.push(format!("run truncated: {e}"));
            Exit::Budget
        }
        None => Exit::Pass,
    };
    let suffix = if no_connection { "_no_connection" } else { "" };
    let path = cfg.output_dir.join(format!("{}_evolve{suffix}.csv", cfg.name));
    write_csv(&path, &STEP_HEADER, &table).map_err(io_fail)?;
    let mut files = vec![path];
    if plots {
        let ts: Vec<f64> = recs.iter().map(|r| r.t).collect();
        let norm = cfg.output_dir.join(format!("{}_norm{suffix}.svg", cfg.name));
        let energy = cfg.output_dir.join(format!("{}_energy{suffix}.svg", cfg.name));
        write_svg(&norm, "norm_t vs t", &ts, &recs.iter().map(|r| r.norm_t).collect::<Vec<_>>()).map_err(io_fail)?;
        write_svg(&energy, "energy vs t", &ts, &recs.iter().map(|r| r.energy).collect::<Vec<_>>()).map_err(io_fail)?;
        files.extend([norm, energy]);
    }
    let (dw, dn) = (per_unit_time(with), per_unit_time(without));
    summary.push(format!("steps: {}", recs.len().saturating_sub(1)));
    summary.push(format!("norm drift per unit time: with connection {dw:.3e}, without {dn:.3e}"));
    if dw > 0.0 {
        summary.push(format!("drift ratio (without / with): {:.3e}", dn / dw));
    }
    Ok(Outcome { exit, files, summary })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub mass: f64,
    pub n_max: usize,
    pub dt: f64,
}

pub fn sweep_grid(cfg: &ScenarioConfig) -> Result<Vec<GridPoint>, ConfigError> {
    let ev = cfg.evolution_or_err()?;
    let grid = cfg.sweep.as_ref().ok_or_else(|| ConfigError("missing table `[sweep]`".into()))?;
    let masses = grid.mass.clone().unwrap_or_else(|| vec![cfg.geometry.mass]);
    let n_maxes = grid.n_max.clone().unwrap_or_else(|| vec![cfg.truncation.n_max]);
    let dts = grid.dt.clone().unwrap_or_else(|| vec![ev.dt]);
    let mut out = Vec::new();
    for &mass in &masses {
        for &n_max in &n_maxes {
            for &dt in &dts {
                out.push(GridPoint { mass, n_max, dt });
            }
        }
    }
    Ok(out)
}

/// `|‖Q(E_χ)|0⟩‖² - 1|` with the nilpotent (coherent) form of the Weyl operator.
pub fn trig_unitarity_residual(fc: &FoliationCurve, t: f64, n_max: usize) -> Result<f64, EvolutionError> {
    let ks = kahler_at(fc, t)?;
    let fs = FockSpace::for_structure(&ks, n_max);
    let chi = CVec::from_element(fc.m, c(0.8 / (fc.m as f64).sqrt(), 0.0));
    let q = fs.weyl_trig_coherent(&TrigSymbol::plain(chi));
    Ok((q.column(0).norm_squared() - 1.0).abs())
}

struct PointResult {
    row: Vec<String>,
    seconds: f64,
}

fn run_point(cfg: &ScenarioConfig, index: usize, p: GridPoint, no_connection: bool) -> PointResult {
    let start = Instant::now();
    let ev_cfg = cfg.evolution.as_ref().expect("checked by grid");
    let mut fc = cfg.foliation();
    fc.mass = p.mass;
    let mut evolver = Evolver::new(fc.clone(), p.n_max, ev_cfg.scheme(), !no_connection);
    evolver.rk4_budget = ev_cfg.rk4_budget;
    let mut point_cfg = cfg.clone();
    point_cfg.truncation.n_max = p.n_max;
    let valid_basis = match (&ev_cfg.initial, &ev_cfg.occupation) {
        (InitialState::Basis, Some(o)) => o.iter().map(|&k| k as usize).sum::<usize>() <= p.n_max,
        _ => true,
    };
    let (fid, drift, status) = if !valid_basis {
        (f64::NAN, f64::NAN, "error: occupation exceeds n_max".to_string())
    } else {
        let v0 = initial_state(&point_cfg, &evolver.flat);
        let (recs, err) = split(evolver.run(&v0, ev_cfg.t0, ev_cfg.t1, p.dt));
        let fid = recs.last().map_or(f64::NAN, |r| oracle_fidelity(&evolver, &v0, r, ev_cfg.t0));
        let status = match err {
            None => "ok".to_string(),
            Some(e) => format!("error: {e}"),
        };
        (fid, per_unit_time(&recs), status)
    };
    let trig = trig_unitarity_residual(&fc, ev_cfg.t0, p.n_max).unwrap_or(f64::NAN);
    let row = vec![index.to_string(), num(p.mass), p.n_max.to_string(), num(p.dt), num(fid), num(drift), num(trig), status];
    PointResult { row, seconds: start.elapsed().as_secs_f64() }
}

fn thread_cap() -> Option<usize> {
    std::env::var("QFT_THREADS").ok()?.trim().parse().ok().filter(|n: &usize| *n > 0)
}

pub fn cmd_sweep(cfg: &ScenarioConfig, no_connection: bool) -> Result<Outcome, ConfigError> {
    let grid = sweep_grid(cfg)?;
    let work = || -> Vec<PointResult> { grid.par_iter().enumerate().map(|(i, p)| run_point(cfg, i, *p, no_connection)).collect() };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError(format!("invalid value for `QFT_THREADS`: {e}")))?
            .install(work),
        None => work(),
    };
    let rows: Vec<Vec<String>> = results.iter().map(|r| r.row.clone()).collect();
    let timing: Vec<Vec<String>> = results.iter().enumerate().map(|(i, r)| vec![i.to_string(), format!("{:.6}", r.seconds)]).collect();
    let path = cfg.output_dir.join(format!("{}_sweep.csv", cfg.name));
    let tpath = cfg.output_dir.join(format!("{}_sweep_timing.csv", cfg.name));
    write_csv(&path, &SWEEP_HEADER, &rows).map_err(io_fail)?;
    write_csv(&tpath, &["index", "wall_seconds"], &timing).map_err(io_fail)?;
    let failures = rows.iter().filter(|r| r.last().map_or(false, |s| s != "ok")).count();
    let summary = vec![format!("{} grid points, {failures} failed", rows.len())];
    Ok(Outcome { exit: Exit::Pass, files: vec![path, tpath], summary })
}
