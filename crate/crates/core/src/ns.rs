//! Navier-Stokes evolution as a restarted Duhamel fixed point.
//!
//! On each step `[t_n, t_n + dt]` the vorticity is stored at `M` equally spaced
//! snapshots `tau_j = t_n + j h`. With `N` interpolated linearly between snapshots,
//!
//! `omega(tau_j) = S(j h) omega_n - sum_{i < j} int_{tau_i}^{tau_{i+1}} S(tau_j - s) N(s) ds`,
//!
//! where the piece touching `s = tau_j` uses `s = tau_j - r^2` and the others use
//! Gauss nodes in `s` directly. All kernel times are multiples of `h` or fixed
//! fractions of it, so the kernel cache is reused across steps and iterations.

use serde::{Deserialize, Serialize};

use crate::biot_savart::velocity_from_vorticity;
use crate::error::{Error, Result};
use crate::grid::gauss_legendre;
use crate::norms::{analytic_norm, Flavor, NormParams};
use crate::semigroup::{apply_semigroup, bc_relative_residual, KernelCache};
use crate::spectral::{dealiased_nx, from_modes, to_modes, Axis, RealField, SpectralField};

/// Time-marching controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NsConfig {
    /// Largest step; the run uses `T / ceil(T / dt)`.
    pub dt: f64,
    /// Snapshots per step.
    pub snapshots: usize,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Largest admissible L1 fraction carried by the top decade of modes.
    pub tail_limit: f64,
    /// Largest admissible boundary-condition residual relative to `||omega_alpha||_1`.
    pub bc_tol: f64,
}

impl Default for NsConfig {
    fn default() -> Self {
        Self {
            dt: 0.025,
            snapshots: 4,
            picard_tol: 1e-10,
            max_picard: 25,
            tail_limit: 1e-8,
            bc_tol: 1e-6,
        }
    }
}

/// `N = u . grad omega`, products formed on an alias-free physical grid.
pub fn nonlinear_term(w: &SpectralField) -> Result<SpectralField> {
    advect(w, w)
}

fn is_shear(w: &SpectralField) -> bool {
    w.alphas().filter(|&a| a != 0).all(|a| w.mode(a).iter().all(|v| v.norm() == 0.0))
}

/// `u(w) . grad target`: velocity of `w` transporting `target`.
pub fn advect(w: &SpectralField, target: &SpectralField) -> Result<SpectralField> {
    w.check_reality(1e-10)?;
    target.check_reality(1e-10)?;
    let k = w.max_mode().max(target.max_mode());
    if is_shear(w) && is_shear(target) {
        return Ok(SpectralField::zeros(w.grid().clone(), k));
    }
    let vel = velocity_from_vorticity(w)?;
    let tx = target.differentiate(Axis::X)?;
    let tz = target.differentiate(Axis::Z)?;
    let nx = dealiased_nx(k);
    let [u1, u2, tx, tz] = [&vel.u1, &vel.u2, &tx, &tz].map(|f| from_modes(f, nx));
    let (u1, u2, tx, tz) = (u1?, u2?, tx?, tz?);
    let prod: Vec<f64> = (0..u1.values().len())
        .map(|i| u1.values()[i] * tx.values()[i] + u2.values()[i] * tz.values()[i])
        .collect();
    let field = RealField::from_samples(u1.x().to_vec(), w.grid().clone(), prod)?;
    to_modes(&field, k)
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub iterations: usize,
    /// Relative L1 change between successive Picard iterates.
    pub deltas: Vec<f64>,
    pub bc_residual: f64,
}

impl StepRecord {
    /// Largest ratio of successive Picard changes (ignoring changes already below `floor`).
    pub fn max_contraction(&self, floor: f64) -> Option<f64> {
        self.deltas
            .windows(2)
            .filter(|d| d[0] > floor && d[1] > floor)
            .map(|d| d[1] / d[0])
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct NsRunState {
    pub t: f64,
    pub omega: SpectralField,
    pub records: Vec<StepRecord>,
}

impl NsRunState {
    pub fn new(omega: SpectralField) -> Self {
        Self {
            t: 0.0,
            omega,
            records: Vec::new(),
        }
    }
}

fn tail_fraction(w: &SpectralField) -> f64 {
    let k = w.max_mode() as i64;
    let total = w.l1();
    if total == 0.0 || k < 10 {
        return 0.0;
    }
    let cut = k - k / 10;
    let tail: f64 = w.alphas().filter(|a| a.abs() > cut).map(|a| w.mode_l1(a)).sum();
    tail / total
}

fn combine(a: &SpectralField, wa: f64, b: &SpectralField, wb: f64) -> SpectralField {
    let mut out = a.clone();
    out.scale(wa);
    out.axpy(wb, b);
    out
}

/// `sum_{i<j} int_{tau_i}^{tau_{i+1}} S(tau_j - s) N(s) ds` for snapshot `j`.
fn memory_integral(nl: &[SpectralField], j: usize, h: f64, cache: &KernelCache) -> Result<SpectralField> {
    let mut acc = SpectralField::zeros(nl[0].grid().clone(), nl[0].max_mode());
    if nl[..=j].iter().all(SpectralField::is_zero) {
        return Ok(acc);
    }
    let rh = h.sqrt();
    for i in 0..j {
        let m = j - 1 - i;
        let (lo, hi) = (&nl[i], &nl[i + 1]);
        if m == 0 {
            // s = tau_j - r^2, r in [0, sqrt h]; N(s) = N_j - (r^2 / h)(N_j - N_{j-1}).
            for &(x, w) in gauss_legendre(16) {
                let r = 0.5 * rh * (x + 1.0);
                let frac = r * r / h;
                let ns = combine(hi, 1.0 - frac, lo, frac);
                let prop = apply_semigroup(&ns, r * r, cache)?;
                acc.axpy(0.5 * w * rh * 2.0 * r, &prop);
            }
        } else {
            // offset (m + x) h; N(s) = N_{i+1} - x (N_{i+1} - N_i).
            for &(x, w) in gauss_legendre(8) {
                let x = 0.5 * (x + 1.0);
                let ns = combine(hi, 1.0 - x, lo, x);
                let prop = apply_semigroup(&ns, (m as f64 + x) * h, cache)?;
                acc.axpy(0.5 * w * h, &prop);
            }
        }
    }
    Ok(acc)
}

fn max_rel_change(a: &[SpectralField], b: &[SpectralField]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = y.l1();
            if scale == 0.0 {
                x.l1()
            } else {
                x.rel_l1_distance(y)
            }
        })
        .fold(0.0, f64::max)
}

/// One restarted Duhamel step with Picard iteration over the snapshots.
pub fn ns_step(state: &NsRunState, dt: f64, cache: &KernelCache, cfg: &NsConfig) -> Result<NsRunState> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveTime(dt));
    }
    let m = cfg.snapshots.max(1);
    let h = dt / m as f64;
    let w0 = &state.omega;
    let free: Vec<SpectralField> = (0..=m)
        .map(|j| apply_semigroup(w0, j as f64 * h, cache))
        .collect::<Result<_>>()?;
    let mut iterate = free.clone();
    let mut deltas = Vec::new();
    loop {
        let nl: Vec<SpectralField> = iterate.iter().map(nonlinear_term).collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(m + 1);
        next.push(w0.clone());
        for j in 1..=m {
            let mem = memory_integral(&nl, j, h, cache)?;
            next.push(combine(&free[j], 1.0, &mem, -1.0));
        }
        let delta = max_rel_change(&next, &iterate);
        deltas.push(delta);
        iterate = next;
        if delta <= cfg.picard_tol {
            break;
        }
        if deltas.len() >= cfg.max_picard {
            return Err(Error::PicardDivergence {
                iterations: deltas.len(),
                last_delta: delta,
                dt,
            });
        }
    }
    let omega = iterate.pop().expect("m >= 1 snapshots");
    let frac = tail_fraction(&omega);
    if frac > cfg.tail_limit {
        return Err(Error::SpectralTail {
            fraction: frac,
            limit: cfg.tail_limit,
        });
    }
    let bc = bc_relative_residual(&omega, cache.nu(), cache.beta());
    if bc > cfg.bc_tol {
        return Err(Error::NotConverged {
            what: "wall condition after a step",
            estimate: bc,
            tolerance: cfg.bc_tol,
        });
    }
    let mut records = state.records.clone();
    records.push(StepRecord {
        t: state.t + dt,
        iterations: deltas.len(),
        deltas,
        bc_residual: bc,
    });
    Ok(NsRunState {
        t: state.t + dt,
        omega,
        records,
    })
}

/// Trajectory at every step end, with wall diagnostics.
#[derive(Debug, Clone)]
pub struct NsTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    pub steps: Vec<StepRecord>,
    /// `max_x |omega(t, x, 0)|` at each time.
    pub wall_max: Vec<f64>,
}

/// `max_x |omega(x, 0)|` from the wall values of the modes.
pub fn wall_vorticity_max(w: &SpectralField) -> Result<f64> {
    let nx = dealiased_nx(w.max_mode().max(1));
    let f = from_modes(w, nx)?;
    Ok(f.wall_trace().into_iter().map(f64::abs).fold(0.0, f64::max))
}

pub fn solve_ns(omega0: &SpectralField, t_final: f64, cache: &KernelCache, cfg: &NsConfig) -> Result<NsTrajectory> {
    if !(t_final > 0.0) {
        return Err(Error::NonPositiveTime(t_final));
    }
    omega0.check_reality(1e-10)?;
    let steps = (t_final / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut state = NsRunState::new(omega0.clone());
    let mut traj = NsTrajectory {
        times: vec![0.0],
        fields: vec![omega0.clone()],
        steps: Vec::new(),
        wall_max: vec![wall_vorticity_max(omega0)?],
    };
    for _ in 0..steps {
        state = ns_step(&state, dt, cache, cfg)?;
        traj.times.push(state.t);
        traj.wall_max.push(wall_vorticity_max(&state.omega)?);
        traj.fields.push(state.omega.clone());
    }
    traj.steps = state.records;
    Ok(traj)
}

/// Analytic-norm track at one output time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormTrack {
    pub t: f64,
    pub rho: f64,
    /// `sum_alpha e^{rho(t)|alpha|} ||omega_alpha||_1`.
    pub a_series: f64,
    /// Boundary-layer analogue with the `delta`, `delta_t` weights.
    pub b_series: f64,
    /// Set once a series exceeds ten times its initial value.
    pub flagged: bool,
}

/// Analytic-norm diagnostics with the shrinking radius `rho(t) = rho0 - gamma t`.
pub fn track_analytic_norms(traj: &NsTrajectory, nu: f64, rho0: f64, gamma: f64) -> Result<Vec<NormTrack>> {
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    if rho0 - gamma * t_end <= 0.0 {
        return Err(Error::Config(format!(
            "analyticity radius rho0 - gamma T = {} is not positive",
            rho0 - gamma * t_end
        )));
    }
    let mut out: Vec<NormTrack> = Vec::new();
    for (t, w) in traj.times.iter().zip(&traj.fields) {
        let rho = rho0 - gamma * t;
        let params = NormParams::new(nu, *t).with_rho(rho);
        let a = analytic_norm(w, &params, Flavor::L1, 0)?;
        let b = analytic_norm(w, &params, Flavor::Bl, 0)?;
        let flagged = out
            .first()
            .is_some_and(|f| (f.a_series > 0.0 && a > 10.0 * f.a_series) || (f.b_series > 0.0 && b > 10.0 * f.b_series));
        out.push(NormTrack {
            t: *t,
            rho,
            a_series: a,
            b_series: b,
            flagged: flagged || out.last().is_some_and(|l| l.flagged),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::stokes_green::ContourSpec;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn grid(nu: f64) -> Arc<crate::grid::ZGrid> {
        Arc::new(GridSpec::default().build(nu).unwrap())
    }

    #[test]
    fn shear_has_no_nonlinearity() {
        let w = SpectralField::shear(grid(1e-3), 4, |z| (-z).exp());
        assert!(nonlinear_term(&w).unwrap().is_zero());
    }

    #[test]
    fn single_mode_feeds_only_zero_and_double() {
        let g = grid(1e-3);
        let mut w = SpectralField::zeros(g.clone(), 6);
        let v: Vec<Complex64> = g.nodes().iter().map(|&z| Complex64::new(z * (-z).exp(), 0.5 * z * z * (-z).exp())).collect();
        w.set_mode_pair(2, &v);
        let n = nonlinear_term(&w).unwrap();
        let peak = n.max_abs();
        assert!(peak > 1e-3);
        for alpha in n.alphas() {
            if ![0, 4, -4].contains(&alpha) {
                assert!(n.mode(alpha).iter().all(|x| x.norm() < 1e-10 * peak), "alpha {alpha}");
            }
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid(1e-3);
        let cache = KernelCache::new(1e-3, 1.0, 2, g.clone(), ContourSpec::production());
        let cfg = NsConfig {
            dt: 0.1,
            snapshots: 2,
            ..NsConfig::default()
        };
        let traj = solve_ns(&SpectralField::zeros(g, 2), 0.2, &cache, &cfg).unwrap();
        assert!(traj.fields.iter().all(|f| f.is_zero()));
        let track = track_analytic_norms(&traj, 1e-3, 0.5, 0.1).unwrap();
        assert!(track.iter().all(|r| r.a_series == 0.0 && r.b_series == 0.0));
    }
}
