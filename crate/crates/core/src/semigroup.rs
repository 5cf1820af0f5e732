//! Stokes semigroup `e^{nu t B}` and the Duhamel solution of the forced Stokes problem.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fornberg, gauss_legendre, ZGrid};
use crate::spectral::SpectralField;
use crate::stokes_green::{load_table, store_table, ContourSpec, KernelSet, KernelTable, TableKey};

/// Memoized kernel sets for fixed `(nu, beta, K, grid, contour)`, keyed by time offset.
#[derive(Debug)]
pub struct KernelCache {
    nu: f64,
    beta: f64,
    max_alpha: usize,
    grid: Arc<ZGrid>,
    contour: ContourSpec,
    sets: Mutex<HashMap<u64, Arc<KernelSet>>>,
    dir: Option<PathBuf>,
}

impl KernelCache {
    pub fn new(nu: f64, beta: f64, max_alpha: usize, grid: Arc<ZGrid>, contour: ContourSpec) -> Self {
        Self {
            nu,
            beta,
            max_alpha,
            grid,
            contour,
            sets: Mutex::new(HashMap::new()),
            dir: None,
        }
    }

    /// Also persist tables under `dir` and reload them on later runs.
    pub fn with_disk(mut self, dir: PathBuf) -> Self {
        self.dir = Some(dir);
        self
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn max_alpha(&self) -> usize {
        self.max_alpha
    }

    pub fn grid(&self) -> &Arc<ZGrid> {
        &self.grid
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.contour
    }

    pub fn len(&self) -> usize {
        self.sets.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.sets.lock().expect("cache lock").clear();
    }

    fn from_disk(&self, t: f64) -> Result<Option<KernelSet>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let mut tables = Vec::with_capacity(self.max_alpha + 1);
        for alpha in 0..=self.max_alpha as i64 {
            let key = TableKey::new(t, self.nu, self.beta, alpha, &self.grid, &self.contour);
            match load_table(dir, &key, self.grid.clone())? {
                Some(tab) => tables.push(tab),
                None => return Ok(None),
            }
        }
        Ok(Some(KernelSet {
            time: tables[0].time_kernel().clone(),
            tables,
        }))
    }

    pub fn get(&self, t: f64) -> Result<Arc<KernelSet>> {
        if let Some(s) = self.sets.lock().expect("cache lock").get(&t.to_bits()) {
            return Ok(s.clone());
        }
        let set = match self.from_disk(t)? {
            Some(set) => set,
            None => {
                let set = KernelSet::build(t, self.nu, self.beta, self.max_alpha, self.grid.clone(), &self.contour)?;
                if let Some(dir) = &self.dir {
                    for tab in &set.tables {
                        store_table(dir, tab)?;
                    }
                }
                set
            }
        };
        let set = Arc::new(set);
        self.sets.lock().expect("cache lock").insert(t.to_bits(), set.clone());
        Ok(set)
    }

    /// Single-mode table at time `t`.
    pub fn table(&self, t: f64, alpha: i64) -> Result<KernelTable> {
        Ok(self.get(t)?.table(alpha).clone())
    }
}

fn check_compatible(w: &SpectralField, cache: &KernelCache) -> Result<()> {
    if w.max_mode() > cache.max_alpha {
        return Err(Error::InvalidInput(format!(
            "field has modes up to {}, kernel cache up to {}",
            w.max_mode(),
            cache.max_alpha
        )));
    }
    if w.grid().fingerprint() != cache.grid.fingerprint() {
        return Err(Error::InvalidInput("field and kernel cache use different grids".into()));
    }
    Ok(())
}

/// `omega_alpha(t, z) = int_0^L G_alpha(t, z, y) omega_alpha(y) dy` for every mode.
pub fn apply_semigroup(w: &SpectralField, t: f64, cache: &KernelCache) -> Result<SpectralField> {
    if t < 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    if t == 0.0 {
        return Ok(w.clone());
    }
    check_compatible(w, cache)?;
    let set = cache.get(t)?;
    w.map_modes(|alpha, v| Ok(set.table(alpha).apply(v)))
}

/// `nu^beta omega_alpha(0) + int_0^L e^{-|alpha| z} omega_alpha(z) dz`.
pub fn bc_residual(grid: &ZGrid, omega: &[Complex64], alpha: i64, nu: f64, beta: f64) -> Complex64 {
    let m = grid.exp_moments_real(alpha.unsigned_abs() as f64);
    let integral: Complex64 = m.iter().zip(omega).map(|(w, v)| v * *w).sum();
    omega[0] * nu.powf(beta) + integral
}

/// Modes carrying less than this fraction of the total L1 mass are at round-off level
/// and are measured against the floor `BC_FLOOR * ||omega||_1` instead of their own norm.
pub const BC_FLOOR: f64 = 1e-10;

/// Largest `|bc_residual| / ||omega_alpha||_{L^1}` over the modes.
pub fn bc_relative_residual(w: &SpectralField, nu: f64, beta: f64) -> f64 {
    let grid = w.grid();
    let floor = BC_FLOOR * w.l1();
    let mut worst = 0.0_f64;
    for alpha in 0..=w.max_mode() as i64 {
        let l1 = w.mode_l1(alpha).max(floor);
        if l1 == 0.0 {
            continue;
        }
        worst = worst.max(bc_residual(grid, w.mode(alpha), alpha, nu, beta).norm() / l1);
    }
    worst
}

/// Forcing `f(s)` as a spectral field.
pub type Forcing<'a> = dyn Fn(f64) -> Result<SpectralField> + 'a;

/// Forced Stokes problem `d_t omega - nu Delta omega = f` with the nonlocal slip condition.
pub struct StokesProblem<'a> {
    pub omega0: SpectralField,
    pub forcing: Option<&'a Forcing<'a>>,
    pub nu: f64,
    pub beta: f64,
    pub times: Vec<f64>,
}

/// Solution samples plus the time-quadrature record per output time.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    /// Gauss panels in `r = sqrt(t - s)` used for each output time (0 without forcing).
    pub panels: Vec<usize>,
    /// Relative L1 change of the Duhamel integral at the last panel doubling.
    pub quadrature_change: Vec<f64>,
}

const DUHAMEL_TOL: f64 = 1e-6;
const MAX_PANELS: usize = 16;

/// `int_0^t e^{nu (t-s) B} f(s) ds` with `s = t - r^2` and `m` Gauss panels in `r`.
fn duhamel_integral(
    f: &Forcing<'_>,
    t: f64,
    panels: usize,
    template: &SpectralField,
    cache: &KernelCache,
) -> Result<SpectralField> {
    let mut acc = SpectralField::zeros(template.grid().clone(), template.max_mode());
    let rt = t.sqrt();
    let h = rt / panels as f64;
    for p in 0..panels {
        for &(x, w) in gauss_legendre(16) {
            let r = h * (p as f64 + 0.5 * (x + 1.0));
            let s = t - r * r;
            let fs = f(s)?;
            if fs.max_mode() != template.max_mode() {
                return Err(Error::InvalidInput("forcing has a different mode count".into()));
            }
            let prop = apply_semigroup(&fs, r * r, cache)?;
            acc.axpy(0.5 * h * w * 2.0 * r, &prop);
        }
    }
    Ok(acc)
}

/// Duhamel solution with the panel count doubled until the integral changes by <= 1e-6 (relative L1).
pub fn solve_stokes(p: &StokesProblem<'_>, cache: &KernelCache) -> Result<StokesSolution> {
    if p.nu != cache.nu || p.beta != cache.beta {
        return Err(Error::InvalidInput("kernel cache built for a different (nu, beta)".into()));
    }
    let mut out = StokesSolution {
        times: p.times.clone(),
        fields: Vec::with_capacity(p.times.len()),
        panels: Vec::new(),
        quadrature_change: Vec::new(),
    };
    for &t in &p.times {
        let free = apply_semigroup(&p.omega0, t, cache)?;
        let Some(f) = p.forcing.filter(|_| t > 0.0) else {
            out.fields.push(free);
            out.panels.push(0);
            out.quadrature_change.push(0.0);
            continue;
        };
        let mut panels = 1;
        let mut prev = duhamel_integral(f, t, panels, &p.omega0, cache)?;
        let mut change;
        loop {
            let next = duhamel_integral(f, t, 2 * panels, &p.omega0, cache)?;
            let mut diff = next.clone();
            diff.axpy(-1.0, &prev);
            let scale = next.l1().max(free.l1()).max(f64::MIN_POSITIVE);
            change = diff.l1() / scale;
            panels *= 2;
            prev = next;
            if change <= DUHAMEL_TOL {
                break;
            }
            if panels >= MAX_PANELS {
                return Err(Error::NotConverged {
                    what: "Duhamel time quadrature",
                    estimate: change,
                    tolerance: DUHAMEL_TOL,
                });
            }
        }
        let mut total = free;
        total.axpy(1.0, &prev);
        out.fields.push(total);
        out.panels.push(panels);
        out.quadrature_change.push(change);
    }
    Ok(out)
}

/// PDE residual of a sampled solution at one output time.
#[derive(Debug, Clone)]
pub struct PdeResidual {
    pub t: f64,
    pub alpha: i64,
    /// `||d_t omega - nu Delta omega - f||_1 / (||d_t omega||_1 + ||nu Delta omega||_1 + ||f||_1)`.
    pub relative_l1: f64,
}

/// Finite-difference check of `d_t omega - nu Delta_alpha omega = f` at every output time.
///
/// Time derivatives use Fornberg weights over the (up to) five nearest samples; the
/// rows at `z = 0` are skipped, since the wall value is fixed by the boundary condition.
pub fn check_duhamel_pde_residual(sol: &StokesSolution, p: &StokesProblem<'_>) -> Result<Vec<PdeResidual>> {
    let nt = sol.times.len();
    if nt < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 samples, have {nt}")));
    }
    let grid = sol.fields[0].grid().clone();
    let n = grid.len();
    let mut out = Vec::new();
    for (it, &t) in sol.times.iter().enumerate() {
        let width = nt.min(5);
        let start = it.saturating_sub(width / 2).min(nt - width);
        let wts = fornberg(t, &sol.times[start..start + width], 1);
        let f = match p.forcing {
            Some(f) => Some(f(t)?),
            None => None,
        };
        for alpha in 0..=sol.fields[0].max_mode() as i64 {
            let a2 = (alpha * alpha) as f64;
            let om = sol.fields[it].mode(alpha);
            let d2 = grid.d2(om);
            let mut res = 0.0;
            let mut scale = 0.0;
            for i in 1..n {
                let dt: Complex64 = (0..width).map(|k| sol.fields[start + k].mode(alpha)[i] * wts[k]).sum();
                let lap = (d2[i] - om[i] * a2) * p.nu;
                let fi = f.as_ref().map_or(Complex64::new(0.0, 0.0), |f| f.mode(alpha)[i]);
                let wq = grid.weights()[i];
                res += wq * (dt - lap - fi).norm();
                scale += wq * (dt.norm() + lap.norm() + fi.norm());
            }
            out.push(PdeResidual {
                t,
                alpha,
                relative_l1: if scale > 0.0 { res / scale } else { 0.0 },
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn setup(nu: f64, beta: f64, k: usize) -> (Arc<ZGrid>, KernelCache) {
        let g = Arc::new(GridSpec::default().build(nu).unwrap());
        let c = KernelCache::new(nu, beta, k, g.clone(), ContourSpec::production());
        (g, c)
    }

    #[test]
    fn zero_time_is_identity() {
        let (g, c) = setup(1e-3, 1.0, 2);
        let w = SpectralField::shear(g, 2, |z| (-z).exp());
        let out = apply_semigroup(&w, 0.0, &c).unwrap();
        assert_eq!(out.mode(0), w.mode(0));
        assert!(c.is_empty());
    }

    #[test]
    fn interior_data_follows_free_heat_flow() {
        // Mode 8 centred at z = 4: the wall coupling is O(e^{-32}).
        let nu = 1e-3;
        let (g, c) = setup(nu, 1.0, 8);
        let mut w = SpectralField::zeros(g.clone(), 8);
        let prof: Vec<Complex64> =
            g.nodes().iter().map(|&z| Complex64::new((-(z - 4.0).powi(2) / 0.5).exp(), 0.0)).collect();
        w.set_mode_pair(8, &prof);
        let t = 0.5;
        let out = apply_semigroup(&w, t, &c).unwrap();
        // Gaussian of variance 0.25 spreads to variance 0.25 + 2 nu t and decays by e^{-64 nu t}.
        let var = 0.25 + 2.0 * nu * t;
        let amp = (0.25 / var).sqrt() * (-64.0 * nu * t).exp();
        let mut err = 0.0;
        let mut norm = 0.0;
        for (i, &z) in g.nodes().iter().enumerate() {
            let exact = amp * (-(z - 4.0).powi(2) / (2.0 * var)).exp();
            err += g.weights()[i] * (out.mode(8)[i] - exact).norm();
            norm += g.weights()[i] * exact;
        }
        assert!(err / norm < 1e-6, "{}", err / norm);
    }

    #[test]
    fn shear_mode_feels_the_wall_at_any_distance() {
        // For alpha = 0 the wall condition couples to the total mass, so interior data
        // still seed a wall layer that removes the mass.
        let nu = 1e-3;
        let (g, c) = setup(nu, 1.0, 0);
        let w = SpectralField::shear(g.clone(), 0, |z| (-(z - 3.0).powi(2) / 0.02).exp());
        let out = apply_semigroup(&w, 0.5, &c).unwrap();
        assert!(out.mode(0)[0].re < -1.0);
        assert!(bc_relative_residual(&out, nu, 1.0) < 1e-6);
    }

    #[test]
    fn output_satisfies_the_wall_condition() {
        for &beta in &[0.0, 1.0] {
            let (g, c) = setup(1e-3, beta, 3);
            let mut w = SpectralField::zeros(g.clone(), 3);
            let prof: Vec<Complex64> = g.nodes().iter().map(|&z| Complex64::new(z * (-z).exp(), 0.3 * (-2.0 * z).exp())).collect();
            w.set_mode_pair(3, &prof);
            w.set_mode_pair(0, &prof.iter().map(|v| Complex64::new(v.re, 0.0)).collect::<Vec<_>>());
            let out = apply_semigroup(&w, 0.2, &c).unwrap();
            assert!(bc_relative_residual(&out, 1e-3, beta) < 1e-6);
        }
    }
}
