//! Uniform bounds: pointwise boundary-layer control of Navier-Stokes runs over the
//! viscosity sweep, and seeded audits of the norm inequalities.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::biot_savart::velocity_from_vorticity;
use crate::error::Result;
use crate::grid::ZGrid;
use crate::harness::config::RunConfig;
use crate::harness::data::{family, random_field, rng};
use crate::harness::fit::{holdout_bound_fit, ratio_bound_fit};
use crate::harness::ns_run::ns_config;
use crate::harness::report::{ExperimentReport, Point};
use crate::harness::stokes::BC_TOL;
use crate::harness::{cache_for, grid_for};
use crate::norms::{analytic_norm, bl_norm, bl_weight, embedding_constant, Flavor, NormParams};
use crate::ns::{advect, solve_ns};
use crate::spectral::{dealiased_nx, from_modes, Axis, SpectralField};

pub const NAME: &str = "bound-check";

/// Earliest time entering the wall-vorticity fit.
const WALL_T_MIN: f64 = 0.01;
/// Largest admissible spread of the pointwise constant across the sweep.
const SPREAD_LIMIT: f64 = 3.0;
/// Samples per norm audit, and per validation corpus of the fitted audits.
const CORPUS: usize = 60;
/// Calibration corpus of the fitted audits: large enough that its maximum ratio
/// approaches the supremum rather than a mid-tail quantile.
const CALIBRATION: usize = 200;
/// Relative slack for inequalities that hold exactly on the discrete level.
const EXACT_SLACK: f64 = 1e-12;

/// `max_{x,z} |omega| e^{beta0 z} / weight(z)` on the alias-free x-grid.
pub fn pointwise_constant(w: &SpectralField, params: &NormParams) -> Result<f64> {
    let grid = w.grid();
    let f = from_modes(w, dealiased_nx(w.max_mode().max(1)))?;
    let nz = grid.len();
    let scale: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&z| (params.beta0 * z).exp() / bl_weight(z, params))
        .collect();
    Ok(f.values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.abs() * scale[i % nz])
        .fold(0.0, f64::max))
}

/// Per-viscosity result of the sweep.
struct SweepPoint {
    nu: f64,
    c_max: f64,
    wall: Vec<(f64, f64)>,
}

fn sweep(rep: &mut ExperimentReport, cfg: &RunConfig) -> Result<(Vec<SweepPoint>, f64)> {
    let beta = cfg.beta;
    let mut out = Vec::new();
    let mut bc_worst = 0.0_f64;
    for &nu in &cfg.nu {
        let p = Point::new(nu, beta);
        let grid = grid_for(cfg, nu)?;
        let cache = cache_for(cfg, nu, beta, cfg.modes, grid.clone())?;
        let w0 = family(&cfg.data, &grid, cfg.modes, nu, beta, cfg.amplitude)?;
        let traj = solve_ns(&w0, cfg.t_final, &cache, &ns_config(cfg))?;
        for s in &traj.steps {
            rep.at_most(p.at(s.t), &format!("bc_residual_{}", cfg.data), s.bc_residual, BC_TOL);
            bc_worst = bc_worst.max(s.bc_residual);
        }
        let mut cs = Vec::new();
        let mut wall = Vec::new();
        for ((t, w), wm) in traj.times.iter().zip(&traj.fields).zip(&traj.wall_max) {
            let c = pointwise_constant(w, &NormParams::new(nu, *t))?;
            rep.info(p.at(*t), "pointwise_constant", c);
            cs.push((*t, c));
            if *t >= WALL_T_MIN {
                rep.info(p.at(*t), "wall_vorticity_max", *wm);
                wall.push((*t, *wm));
            }
        }
        if cfg.data == "well_prepared" {
            let c0 = cs[0].1;
            for &(t, c) in &cs[1..] {
                rep.at_most(p.at(t), "pointwise_constant_over_initial", c / c0, SPREAD_LIMIT);
            }
        }
        let c_max = cs.iter().map(|c| c.1).fold(0.0, f64::max);
        rep.info(p, "pointwise_constant_max", c_max);
        rep.curve(&format!("pointwise_constant_nu{nu}"), "t", "C(t)", cs);
        rep.curve(
            &format!("wall_scaled_nu{nu}"),
            "t",
            "max_x |omega(t,x,0)| sqrt(nu t)",
            wall.iter().map(|&(t, w)| (t, w * (nu * t).sqrt())).collect(),
        );
        out.push(SweepPoint { nu, c_max, wall });
    }
    Ok((out, bc_worst))
}

fn nu_bounds(rep: &mut ExperimentReport, cfg: &RunConfig) -> Result<(bool, f64, String)> {
    let (pts, bc_worst) = sweep(rep, cfg)?;
    let cmax = pts.iter().map(|p| p.c_max).fold(0.0, f64::max);
    let cmin = pts.iter().map(|p| p.c_max).fold(f64::INFINITY, f64::min);
    let spread = cmax / cmin;
    let pb = Point {
        beta: Some(cfg.beta),
        ..Point::default()
    };
    let spread_ok = rep.at_most(pb, "pointwise_constant_spread", spread, SPREAD_LIMIT);

    let per = pts.iter().map(|p| p.wall.len()).min().unwrap_or(0);
    let pairs: Vec<(f64, f64)> = pts
        .iter()
        .flat_map(|p| p.wall.iter().take(per).map(move |&(t, w)| (w, 1.0 / (p.nu * t).sqrt())))
        .collect();
    let fit = ratio_bound_fit(
        "max_x |omega(t,x,0)| <= C / sqrt(nu t)",
        &format!("nu in {:?}, t in [{WALL_T_MIN}, {}], data {}", cfg.nu, cfg.t_final, cfg.data),
        &pairs,
        per.max(1),
        cfg.fit_margin,
    );
    let wall_ok = rep.verdict(pb, "wall_bound_violations", fit.violations as f64, Some(0.0), fit.violations == 0);
    let detail = format!(
        "pointwise constant spread {spread:.3} (limit {SPREAD_LIMIT}); wall fit C = {:.4}, {} violations, worst/C {:.3}",
        fit.value, fit.violations, fit.residual
    );
    rep.fits.push(fit);
    Ok((spread_ok && wall_ok, bc_worst, detail))
}

/// `psi d_z f` with `psi = z / (1 + z)`.
pub fn conormal(f: &SpectralField) -> Result<SpectralField> {
    let fz = f.differentiate(Axis::Z)?;
    let psi: Vec<f64> = f.grid().nodes().iter().map(|z| z / (1.0 + z)).collect();
    fz.map_modes(|_, v| Ok(v.iter().zip(&psi).map(|(x, p)| x * *p).collect()))
}

/// Exact product of two spectral fields, every mode of the convolution kept.
fn product(f: &SpectralField, g: &SpectralField) -> SpectralField {
    let (kf, kg) = (f.max_mode() as i64, g.max_mode() as i64);
    let n = f.grid().len();
    let mut out = SpectralField::zeros(f.grid().clone(), (kf + kg) as usize);
    for a in 0..=(kf + kg) {
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for b in -kf..=kf {
            let c = a - b;
            if c.abs() > kg {
                continue;
            }
            for ((s, x), y) in acc.iter_mut().zip(f.mode(b)).zip(g.mode(c)) {
                *s += x * y;
            }
        }
        out.set_mode_pair(a, &acc);
    }
    out
}

struct Audit {
    name: &'static str,
    ok: bool,
    detail: String,
}

pub fn corpus_field(r: &mut rand_chacha::ChaCha8Rng, grid: &Arc<ZGrid>, k: usize, nu: f64) -> SpectralField {
    let decay = r.gen_range(0.6..1.2);
    let delta = match r.gen_range(0..3) {
        0 => None,
        1 => Some(nu.sqrt()),
        _ => Some((nu * r.gen_range(0.01..1.0_f64)).sqrt()),
    };
    random_field(r, grid, k, decay, delta)
}

fn norm_audits(rep: &mut ExperimentReport, cfg: &RunConfig) -> Result<Vec<Audit>> {
    let nu = cfg.nu[0];
    let grid = grid_for(cfg, nu)?;
    let k = cfg.modes;
    let rho = cfg.rho0;
    let mut audits = Vec::new();
    let pn = Point {
        nu: Some(nu),
        ..Point::default()
    };

    // Embedding of the boundary-layer norm into L1, mode by mode.
    let mut r = rng(cfg.seed, 1);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for _ in 0..CORPUS {
        let t = r.gen_range(0.01..1.0);
        let params = NormParams::new(nu, t);
        let cst = embedding_constant(&grid, &params);
        let f = corpus_field(&mut r, &grid, k, nu);
        for a in 0..=k as i64 {
            let bl = bl_norm(&grid, f.mode(a), &params);
            if bl > 0.0 {
                worst = worst.max(f.mode_l1(a) / (cst * bl));
                count += 1;
            }
        }
    }
    let ok = rep.at_most(pn, "embedding_ratio_max", worst, 1.0 + EXACT_SLACK);
    audits.push(Audit {
        name: "embedding",
        ok,
        detail: format!("max ||f||_1 / (C_emb ||f||_bl) = {worst:.6} over {count} modes"),
    });

    // x-derivative recovery between analyticity radii.
    let mut r = rng(cfg.seed, 2);
    let params = NormParams::new(nu, 0.5);
    let mut worst = 0.0_f64;
    for _ in 0..CORPUS {
        let rp = r.gen_range(0.05 * rho..0.95 * rho);
        let f = corpus_field(&mut r, &grid, k, nu);
        let fx = f.differentiate(Axis::X)?;
        let lhs = analytic_norm(&fx, &params.with_rho(rp), Flavor::L1, 0)?;
        let rhs = analytic_norm(&f, &params.with_rho(rho), Flavor::L1, 0)? / (std::f64::consts::E * (rho - rp));
        worst = worst.max(lhs / rhs);
    }
    let ok = rep.at_most(pn, "x_derivative_ratio_max", worst, 1.0 + EXACT_SLACK);
    audits.push(Audit {
        name: "x-derivative recovery",
        ok,
        detail: format!("max ratio {worst:.6} over {CORPUS} fields"),
    });

    // Elliptic bound per mode, alpha in -16..=16.
    let ke = 16;
    let elliptic = |stream: u64, n: usize| -> Result<Vec<(f64, f64)>> {
        let mut r = rng(cfg.seed, stream);
        let mut pairs = Vec::new();
        for _ in 0..n {
            let f = corpus_field(&mut r, &grid, ke, nu);
            let u = velocity_from_vorticity(&f)?;
            for a in -(ke as i64)..=ke as i64 {
                let sup = |m: &[Complex64]| m.iter().map(|v| v.norm()).fold(0.0, f64::max);
                pairs.push((sup(u.u1.mode(a)) + sup(u.u2.mode(a)), f.mode_l1(a)));
            }
        }
        Ok(pairs)
    };
    let fit = holdout_bound_fit(
        "sup|u1_a| + sup|u2_a| <= C ||omega_a||_1",
        &format!("{CALIBRATION} + {CORPUS} fields, |alpha| <= {ke}, nu = {nu}"),
        &elliptic(3, CALIBRATION)?,
        &elliptic(13, CORPUS)?,
        cfg.fit_margin,
    );
    let ok = rep.verdict(pn, "elliptic_bound_violations", fit.violations as f64, Some(0.0), fit.violations == 0);
    audits.push(Audit {
        name: "elliptic",
        ok,
        detail: format!("C = {:.4}, {} violations, worst/C {:.3}", fit.value, fit.violations, fit.residual),
    });
    rep.fits.push(fit);

    // Bilinear estimate for u . grad omega~ in the analytic L1 norm.
    let params = NormParams::new(nu, 0.5).with_rho(rho);
    let norm = |f: &SpectralField| analytic_norm(f, &params, Flavor::L1, 0);
    let bilinear = |stream: u64, n: usize| -> Result<Vec<(f64, f64)>> {
        let mut r = rng(cfg.seed, stream);
        let mut pairs = Vec::new();
        for _ in 0..n {
            let w = corpus_field(&mut r, &grid, k, nu).with_max_mode(2 * k);
            let wt = corpus_field(&mut r, &grid, k, nu).with_max_mode(2 * k);
            let lhs = norm(&advect(&w, &wt)?)?;
            let nw = norm(&w)?;
            let rhs = nw * norm(&wt.differentiate(Axis::X)?)? + (nw + norm(&w.differentiate(Axis::X)?)?) * norm(&conormal(&wt)?)?;
            pairs.push((lhs, rhs));
        }
        Ok(pairs)
    };
    let fit = holdout_bound_fit(
        "||u.grad w~|| <= C (||w|| ||w~_x|| + (||w|| + ||w_x||) ||psi d_z w~||)",
        &format!("{CALIBRATION} + {CORPUS} pairs, rho = {rho}, nu = {nu}"),
        &bilinear(4, CALIBRATION)?,
        &bilinear(14, CORPUS)?,
        cfg.fit_margin,
    );
    let ok = rep.verdict(pn, "bilinear_bound_violations", fit.violations as f64, Some(0.0), fit.violations == 0);
    audits.push(Audit {
        name: "bilinear",
        ok,
        detail: format!("C = {:.4}, {} violations, worst/C {:.3}", fit.value, fit.violations, fit.residual),
    });
    rep.fits.push(fit);

    // Product inequality with the exact convolution.
    let mut r = rng(cfg.seed, 5);
    let mut worst = 0.0_f64;
    for _ in 0..CORPUS {
        let f = corpus_field(&mut r, &grid, k, nu);
        let g = corpus_field(&mut r, &grid, k, nu);
        let fg = product(&f, &g);
        let lhs = analytic_norm(&fg, &params, Flavor::L1, 0)?;
        let rhs = analytic_norm(&f, &params, Flavor::Linf, 0)? * analytic_norm(&g, &params, Flavor::L1, 0)?;
        worst = worst.max(lhs / rhs);
    }
    let ok = rep.at_most(pn, "product_ratio_max", worst, 1.0 + EXACT_SLACK);
    audits.push(Audit {
        name: "product",
        ok,
        detail: format!("max ratio {worst:.6} over {CORPUS} pairs"),
    });
    Ok(audits)
}

pub fn run(cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME);
    let (ok10, bc_worst, detail) = nu_bounds(&mut rep, cfg)?;
    rep.check(10, "uniform pointwise and wall bounds", ok10, detail);
    rep.check(6, "wall condition (bound-check runs)", bc_worst <= BC_TOL, format!("worst relative residual {bc_worst:.2e}"));
    let audits = norm_audits(&mut rep, cfg)?;
    let ok12 = audits.iter().all(|a| a.ok);
    let detail = audits
        .iter()
        .map(|a| format!("{}: {}", a.name, a.detail))
        .collect::<Vec<_>>()
        .join("; ");
    rep.check(12, "norm inequalities on seeded corpora", ok12, detail);
    Ok(rep)
}
