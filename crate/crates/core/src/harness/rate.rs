//! Inviscid-limit rates: the velocity gap between the viscous solution and the Euler
//! reference, swept over the viscosity.
//!
//! Shear data are steady for Euler, so the reference is the initial velocity, and
//! `N = 0` makes the Navier-Stokes solution equal to the Stokes one. Other data use
//! a Navier-Stokes run at `euler_nu` as a surrogate reference.

use crate::biot_savart::{velocity_from_vorticity, VelocityPair};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::data::family;
use crate::harness::fit::{loglog_fit, ratio_bound_fit};
use crate::harness::ns_run::ns_config;
use crate::harness::report::{ExperimentReport, Point};
use crate::harness::{cache_for, grid_for};
use crate::ns::solve_ns;
use crate::semigroup::{solve_stokes, StokesProblem};
use crate::spectral::SpectralField;

pub const NAME: &str = "inviscid-rate";

/// `||u - U||_{L^2(T x R+)}` from the Fourier modes (Parseval, period `2 pi`).
pub fn velocity_l2_distance(a: &VelocityPair, b: &VelocityPair) -> f64 {
    let grid = a.u1.grid().clone();
    let mut sum = 0.0;
    for (fa, fb) in [(&a.u1, &b.u1), (&a.u2, &b.u2)] {
        for alpha in fa.alphas() {
            let d: Vec<f64> = fa.mode(alpha).iter().zip(fb.mode(alpha)).map(|(x, y)| (x - y).norm_sqr()).collect();
            sum += grid.integrate(&d);
        }
    }
    (2.0 * std::f64::consts::PI * sum).sqrt()
}

fn is_shear(w: &SpectralField) -> bool {
    w.alphas().filter(|&a| a != 0).all(|a| w.mode(a).iter().all(|v| v.norm() == 0.0))
}

/// Viscous evolution sampled at `times` (shear) or at the step ends (general data).
fn evolve(cfg: &RunConfig, w0: &SpectralField, nu: f64, times: &[f64]) -> Result<(Vec<f64>, Vec<SpectralField>)> {
    let grid = w0.grid().clone();
    let cache = cache_for(cfg, nu, cfg.beta, w0.max_mode(), grid)?;
    if is_shear(w0) {
        let sol = solve_stokes(
            &StokesProblem {
                omega0: w0.clone(),
                forcing: None,
                nu,
                beta: cfg.beta,
                times: times.to_vec(),
            },
            &cache,
        )?;
        return Ok((sol.times, sol.fields));
    }
    let traj = solve_ns(w0, cfg.t_final, &cache, &ns_config(cfg))?;
    Ok((traj.times, traj.fields))
}

pub fn run(cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME);
    let beta = cfg.beta;
    if cfg.nu.len() < 2 {
        return Err(Error::Config("inviscid-rate needs at least two viscosities".into()));
    }
    let mut nus = cfg.nu.clone();
    nus.sort_by(|a, b| b.total_cmp(a));
    let nu_min = nus.last().copied().unwrap_or(cfg.euler_nu).min(cfg.euler_nu);
    // One grid, fine enough for every viscosity, so velocities compare node by node.
    let grid = grid_for(cfg, nu_min)?;
    let w0 = family(&cfg.data, &grid, cfg.modes, nu_min, beta, cfg.amplitude)?;
    let shear = is_shear(&w0);

    let (ref_times, reference): (Vec<f64>, Vec<VelocityPair>) = if shear {
        let u0 = velocity_from_vorticity(&w0)?;
        (cfg.output_times.clone(), vec![u0; cfg.output_times.len()])
    } else {
        rep.note(format!("surrogate Euler reference: Navier-Stokes at nu = {}", cfg.euler_nu));
        let (t, f) = evolve(cfg, &w0, cfg.euler_nu, &[])?;
        (t, f.iter().map(velocity_from_vorticity).collect::<Result<_>>()?)
    };
    let t_end = ref_times.last().copied().unwrap_or(cfg.t_final);

    let mut gaps = Vec::new();
    for &nu in &nus {
        let p = Point::new(nu, beta);
        let (times, fields) = evolve(cfg, &w0, nu, &ref_times)?;
        let mut curve = Vec::new();
        for ((t, f), u_ref) in times.iter().zip(&fields).zip(&reference) {
            let g = velocity_l2_distance(&velocity_from_vorticity(f)?, u_ref);
            rep.info(p.at(*t), "velocity_l2_gap", g);
            curve.push((*t, g));
        }
        let e = curve.iter().map(|c| c.1).fold(0.0, f64::max);
        rep.info(p, "max_velocity_l2_gap", e);
        rep.curve(&format!("gap_nu{nu}"), "t", "||u - U||_2", curve);
        gaps.push(e);
    }
    rep.curve("gap_vs_nu", "nu", "max_t ||u - U||_2", nus.iter().copied().zip(gaps.iter().copied()).collect());

    let (slope, _, rms) = loglog_fit(&nus, &gaps);
    let pb = Point {
        beta: Some(beta),
        ..Point::default()
    };
    rep.info(pb, "rate_slope_fit_rms", rms);
    if beta < 1.0 {
        let target = 0.5 * (1.0 - beta);
        let ok = rep.verdict(pb, "rate_slope", slope, Some(cfg.slope_band), (slope - target).abs() <= cfg.slope_band);
        rep.check(
            8,
            &format!("rate slope at beta = {beta}"),
            ok,
            format!("fitted slope {slope:.3}, expected {target:.3} +/- {}", cfg.slope_band),
        );
    } else {
        rep.info(pb, "rate_slope", slope);
        let pairs: Vec<(f64, f64)> = nus
            .iter()
            .zip(&gaps)
            .map(|(nu, e)| (*e, nu.sqrt() + (nu * t_end).powf(0.25)))
            .collect();
        let fit = ratio_bound_fit(
            "gap <= C (sqrt(nu) + (nu T)^(1/4))",
            &format!("beta = {beta}, nu in [{:e}, {:e}], T = {t_end}", nu_min.max(nus[nus.len() - 1]), nus[0]),
            &pairs,
            1,
            cfg.fit_margin,
        );
        let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
        rep.verdict(pb, "rate_bound_violations", fit.violations as f64, Some(0.0), fit.violations == 0);
        rep.verdict(pb, "gap_decreasing_in_nu", f64::from(u8::from(monotone)), None, monotone);
        rep.check(
            9,
            "beta = 1 rate bound",
            fit.violations == 0 && monotone,
            format!(
                "C = {:.4}, {} violations, worst/C {:.3}, decreasing: {monotone}, slope {slope:.3}",
                fit.value, fit.violations, fit.residual
            ),
        );
        rep.fits.push(fit);
    }
    Ok(rep)
}
