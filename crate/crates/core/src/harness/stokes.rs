//! Linear Stokes experiments: Duhamel solves with manufactured solutions, and the
//! cross-check against the method-of-lines oracle.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::ZGrid;
use crate::harness::config::RunConfig;
use crate::harness::data::family;
use crate::harness::report::{ExperimentReport, Point};
use crate::harness::{cache_for, grid_for};
use crate::oracle::{solve_stokes_direct, MolSystem, Scheme};
use crate::semigroup::{bc_relative_residual, check_duhamel_pde_residual, solve_stokes, StokesProblem, StokesSolution};
use crate::spectral::SpectralField;

pub const STOKES: &str = "stokes-run";
pub const ORACLE: &str = "oracle-check";

/// Wall-condition tolerance relative to `||omega_alpha||_1`.
pub const BC_TOL: f64 = 1e-6;
const MANUFACTURED_TOL: f64 = 1e-4;
const PDE_TOL: f64 = 1e-3;

/// Records the wall residual at every output time; returns the worst value.
pub fn record_bc(rep: &mut ExperimentReport, p: Point, label: &str, times: &[f64], fields: &[SpectralField]) -> f64 {
    let (nu, beta) = (p.nu.unwrap_or(f64::NAN), p.beta.unwrap_or(f64::NAN));
    let mut worst = 0.0_f64;
    for (t, w) in times.iter().zip(fields) {
        let r = bc_relative_residual(w, nu, beta);
        rep.at_most(p.at(*t), &format!("bc_residual_{label}"), r, BC_TOL);
        worst = worst.max(r);
    }
    worst
}

/// `phi_alpha = e^{-z} + c_alpha e^{-2z}` with `c_alpha` fixing the discrete wall condition.
fn manufactured_profile(grid: &ZGrid, alpha: i64, nu: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let m = grid.exp_moments_real(alpha.unsigned_abs() as f64);
    let nb = nu.powf(beta);
    let e1: Vec<f64> = grid.nodes().iter().map(|z| (-z).exp()).collect();
    let e2: Vec<f64> = grid.nodes().iter().map(|z| (-2.0 * z).exp()).collect();
    let b = |v: &[f64]| nb * v[0] + m.iter().zip(v).map(|(w, x)| w * x).sum::<f64>();
    let c = -b(&e1) / b(&e2);
    let phi = e1.iter().zip(&e2).map(|(a, b)| a + c * b).collect();
    let lap = e1.iter().zip(&e2).map(|(a, b)| a + 4.0 * c * b).collect();
    (phi, lap)
}

/// `omega* = (1 + t) sum_alpha g_alpha phi_alpha(z) e^{i alpha x}` and its forcing.
struct Manufactured {
    grid: Arc<ZGrid>,
    k: usize,
    nu: f64,
    profiles: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Manufactured {
    fn new(grid: Arc<ZGrid>, k: usize, nu: f64, beta: f64) -> Self {
        let profiles = (0..=k as i64).map(|a| manufactured_profile(&grid, a, nu, beta)).collect();
        Self { grid, k, nu, profiles }
    }

    fn coef(alpha: i64) -> Complex64 {
        Complex64::new(1.0, 0.5 * alpha as f64) / (1.0 + (alpha * alpha) as f64)
    }

    fn exact(&self, t: f64) -> SpectralField {
        let mut w = SpectralField::zeros(self.grid.clone(), self.k);
        for alpha in 0..=self.k as i64 {
            let c = Self::coef(alpha) * (1.0 + t);
            let v: Vec<Complex64> = self.profiles[alpha as usize].0.iter().map(|p| c * *p).collect();
            w.set_mode_pair(alpha, &v);
        }
        w
    }

    /// `d_t omega* - nu (d_z^2 - alpha^2) omega*`.
    fn forcing(&self, t: f64) -> SpectralField {
        let mut f = SpectralField::zeros(self.grid.clone(), self.k);
        for alpha in 0..=self.k as i64 {
            let c = Self::coef(alpha);
            let a2 = (alpha * alpha) as f64;
            let (phi, lap) = &self.profiles[alpha as usize];
            let v: Vec<Complex64> = phi
                .iter()
                .zip(lap)
                .map(|(p, l)| c * (p - self.nu * (1.0 + t) * (l - a2 * p)))
                .collect();
            f.set_mode_pair(alpha, &v);
        }
        f
    }
}

pub fn run_stokes(cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(STOKES);
    let beta = cfg.beta;
    let mut bc_worst = 0.0_f64;
    for &nu in &cfg.nu {
        let p = Point::new(nu, beta);
        let grid = grid_for(cfg, nu)?;
        let cache = cache_for(cfg, nu, beta, cfg.modes, grid.clone())?;

        // Free evolution of the configured data.
        let w0 = family(&cfg.data, &grid, cfg.modes, nu, beta, cfg.amplitude)?;
        let prob = StokesProblem {
            omega0: w0,
            forcing: None,
            nu,
            beta,
            times: cfg.output_times.clone(),
        };
        let sol = solve_stokes(&prob, &cache)?;
        bc_worst = bc_worst.max(record_bc(&mut rep, p, "free", &sol.times, &sol.fields));
        rep.curve(
            &format!("l1_nu{nu}"),
            "t",
            "sum_alpha ||omega_alpha||_1",
            sol.times.iter().zip(&sol.fields).map(|(t, f)| (*t, f.l1())).collect(),
        );

        // Manufactured solution.
        let m = Manufactured::new(grid.clone(), cfg.modes, nu, beta);
        let force = |t: f64| -> Result<SpectralField> { Ok(m.forcing(t)) };
        let times = vec![0.4, 0.45, 0.5, 0.55, 0.6];
        let mp = StokesProblem {
            omega0: m.exact(0.0),
            forcing: Some(&force),
            nu,
            beta,
            times: times.clone(),
        };
        let ms = solve_stokes(&mp, &cache)?;
        let mut worst = 0.0_f64;
        for (t, f) in ms.times.iter().zip(&ms.fields) {
            let e = f.rel_l1_distance(&m.exact(*t));
            rep.at_most(p.at(*t), "manufactured_rel_l1", e, MANUFACTURED_TOL);
            worst = worst.max(e);
        }
        bc_worst = bc_worst.max(record_bc(&mut rep, p, "manufactured", &ms.times, &ms.fields));
        let pde = check_duhamel_pde_residual(&ms, &mp)?;
        let pde_worst = pde.iter().map(|r| r.relative_l1).fold(0.0, f64::max);
        rep.at_most(p, "manufactured_pde_residual", pde_worst, PDE_TOL);
        rep.info(p, "manufactured_max_panels", ms.panels.iter().copied().max().unwrap_or(0) as f64);
        rep.note(format!("nu = {nu}: manufactured solution error {worst:.2e}, PDE residual {pde_worst:.2e}"));
    }
    rep.check(6, "wall condition (Stokes runs)", bc_worst <= BC_TOL, format!("worst relative residual {bc_worst:.2e}"));
    Ok(rep)
}

/// Families compared against the oracle, with their tolerances on the relative L1 difference.
pub const ORACLE_FAMILIES: &[(&str, f64)] = &[
    ("gaussian", 1e-3),
    ("wall_layer", 3e-3),
    ("shear_exp", 1e-2),
    ("two_mode", 1e-2),
    ("ill_prepared", 1e-2),
    ("well_prepared", 1e-2),
    ("zero", 0.0),
];

fn max_constraint_residual(sol: &StokesSolution, nu: f64, beta: f64) -> f64 {
    let grid = sol.fields[0].grid();
    let k = sol.fields[0].max_mode() as i64;
    let systems: Vec<MolSystem> = (0..=k).map(|a| MolSystem::new(grid, nu, beta, a)).collect();
    let mut worst = 0.0_f64;
    for f in &sol.fields {
        for (a, sys) in systems.iter().enumerate() {
            let scale = f.mode_l1(a as i64).max(1e-300);
            worst = worst.max(sys.constraint_residual(f.mode(a as i64)).norm() / scale);
        }
    }
    worst
}

pub fn run_oracle(cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(ORACLE);
    let beta = cfg.beta;
    let k = cfg.modes.max(2);
    let mut c5 = true;
    let mut c5_detail = Vec::new();
    let mut bc_worst = 0.0_f64;
    for &nu in &cfg.nu {
        let p = Point::new(nu, beta);
        let grid = grid_for(cfg, nu)?;
        let cache = cache_for(cfg, nu, beta, k, grid.clone())?;
        for &(name, tol) in ORACLE_FAMILIES {
            let w0 = family(name, &grid, k, nu, beta, 1.0)?;
            let prob = StokesProblem {
                omega0: w0,
                forcing: None,
                nu,
                beta,
                times: cfg.output_times.clone(),
            };
            let green = solve_stokes(&prob, &cache)?;
            let mol = solve_stokes_direct(&prob, Scheme::Trapezoidal, cfg.mol_dt)?;
            bc_worst = bc_worst.max(record_bc(&mut rep, p, name, &green.times, &green.fields));
            rep.info(p, &format!("oracle_constraint_residual_{name}"), max_constraint_residual(&mol, nu, beta));
            for ((t, g), m) in green.times.iter().zip(&green.fields).zip(&mol.fields) {
                let d = g.rel_l1_distance(m);
                let ok = rep.verdict(p.at(*t), &format!("oracle_rel_l1_{name}"), d, Some(tol), d <= tol);
                if name == "gaussian" || name == "wall_layer" {
                    c5 &= ok;
                    c5_detail.push(format!("{name} nu={nu} t={t}: {d:.2e}"));
                }
            }
        }
    }
    rep.check(5, "oracle equivalence", c5, c5_detail.join("; "));
    rep.check(6, "wall condition (oracle-check Green runs)", bc_worst <= BC_TOL, format!("worst relative residual {bc_worst:.2e}"));
    Ok(rep)
}
