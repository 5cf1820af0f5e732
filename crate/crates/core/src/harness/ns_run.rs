//! Navier-Stokes runs: the shear consistency check and Picard contraction on genuinely
//! two-dimensional data.

use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::harness::data::family;
use crate::harness::report::{ExperimentReport, Point};
use crate::harness::stokes::BC_TOL;
use crate::harness::{cache_for, grid_for};
use crate::ns::{nonlinear_term, ns_step, solve_ns, track_analytic_norms, NsConfig, NsRunState};
use crate::semigroup::{bc_relative_residual, solve_stokes, KernelCache, StokesProblem};

pub const NAME: &str = "ns-run";

const SHEAR_MATCH_TOL: f64 = 1e-10;
const CONTRACTION_LIMIT: f64 = 0.5;
/// Picard changes below this are roundoff and excluded from contraction ratios.
pub const CONTRACTION_FLOOR: f64 = 1e-13;

/// Solver controls from the run configuration. The wall residual is reported
/// per step by the harness rather than aborting the run.
pub fn ns_config(cfg: &RunConfig) -> NsConfig {
    NsConfig {
        dt: cfg.dt,
        snapshots: cfg.snapshots,
        picard_tol: cfg.picard_tol,
        bc_tol: f64::INFINITY,
        ..NsConfig::default()
    }
}

/// Shear data: `N = 0` identically and each step must reproduce the Stokes solve.
fn shear_check(rep: &mut ExperimentReport, cfg: &RunConfig, p: Point, cache: &KernelCache) -> Result<(bool, f64)> {
    let grid = cache.grid().clone();
    let (nu, beta) = (cache.nu(), cache.beta());
    let ncfg = ns_config(cfg);
    let w0 = family("shear_exp", &grid, cfg.modes, nu, beta, 1.0)?;
    let steps = (cfg.t_final / ncfg.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = cfg.t_final / steps as f64;
    let mut ok = true;
    let mut bc_worst = 0.0_f64;
    let mut state = NsRunState::new(w0.clone());
    for _ in 0..steps {
        let n = nonlinear_term(&state.omega)?;
        ok &= rep.at_most(p.at(state.t), "shear_nonlinear_l1", n.l1(), 0.0);
        let stokes = solve_stokes(
            &StokesProblem {
                omega0: state.omega.clone(),
                forcing: None,
                nu,
                beta,
                times: vec![dt],
            },
            cache,
        )?;
        state = ns_step(&state, dt, cache, &ncfg)?;
        let d = state.omega.rel_l1_distance(&stokes.fields[0]);
        ok &= rep.at_most(p.at(state.t), "shear_ns_vs_stokes_rel_l1", d, SHEAR_MATCH_TOL);
        let bc = bc_relative_residual(&state.omega, nu, beta);
        rep.at_most(p.at(state.t), "bc_residual_shear", bc, BC_TOL);
        bc_worst = bc_worst.max(bc);
    }
    // Composition of steps against a single solve over [0, T]: semigroup consistency, informational.
    let direct = solve_stokes(
        &StokesProblem {
            omega0: w0,
            forcing: None,
            nu,
            beta,
            times: vec![state.t],
        },
        cache,
    )?;
    rep.info(p.at(state.t), "shear_step_composition_rel_l1", state.omega.rel_l1_distance(&direct.fields[0]));
    Ok((ok, bc_worst))
}

pub fn run(cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME);
    let beta = cfg.beta;
    let mut c11 = true;
    let mut worst_ratio = 0.0_f64;
    let mut bc_worst = 0.0_f64;
    for &nu in &cfg.nu {
        let p = Point::new(nu, beta);
        let grid = grid_for(cfg, nu)?;
        let cache = cache_for(cfg, nu, beta, cfg.modes, grid.clone())?;

        let (shear_ok, shear_bc) = shear_check(&mut rep, cfg, p, &cache)?;
        c11 &= shear_ok;
        bc_worst = bc_worst.max(shear_bc);

        let w0 = family(&cfg.data, &grid, cfg.modes, nu, beta, cfg.amplitude)?;
        let traj = solve_ns(&w0, cfg.t_final, &cache, &ns_config(cfg))?;
        for s in &traj.steps {
            let ratio = s.max_contraction(CONTRACTION_FLOOR).unwrap_or(0.0);
            c11 &= rep.at_most(p.at(s.t), "picard_contraction", ratio, CONTRACTION_LIMIT);
            rep.info(p.at(s.t), "picard_iterations", s.iterations as f64);
            rep.at_most(p.at(s.t), &format!("bc_residual_{}", cfg.data), s.bc_residual, BC_TOL);
            worst_ratio = worst_ratio.max(ratio);
            bc_worst = bc_worst.max(s.bc_residual);
        }
        let tracks = track_analytic_norms(&traj, nu, cfg.rho0, cfg.gamma)?;
        for tr in &tracks {
            rep.info(p.at(tr.t), "analytic_norm_l1", tr.a_series);
            rep.info(p.at(tr.t), "analytic_norm_layer", tr.b_series);
        }
        if tracks.iter().any(|t| t.flagged) {
            rep.note(format!("nu = {nu}: analytic norm grew more than tenfold"));
        }
        rep.curve(
            &format!("analytic_norm_nu{nu}"),
            "t",
            "sum_alpha e^{rho(t)|alpha|} ||omega_alpha||_1",
            tracks.iter().map(|t| (t.t, t.a_series)).collect(),
        );
        rep.curve(
            &format!("wall_vorticity_nu{nu}"),
            "t",
            "max_x |omega(t,x,0)|",
            traj.times.iter().copied().zip(traj.wall_max.iter().copied()).collect(),
        );
    }
    rep.check(
        11,
        "shear consistency and Picard contraction",
        c11,
        format!("largest contraction ratio {worst_ratio:.3} (limit {CONTRACTION_LIMIT}), data `{}`, amplitude {}", cfg.data, cfg.amplitude),
    );
    rep.check(6, "wall condition (Navier-Stokes runs)", bc_worst <= BC_TOL, format!("worst relative residual {bc_worst:.2e}"));
    Ok(rep)
}
