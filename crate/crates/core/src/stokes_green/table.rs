//! Tabulated temporal Green function as a product-integration operator on a [`ZGrid`].
//!
//! Row `i` of each operator holds `int_0^L G(t, z_i, y) l_j(y) dy` for the cardinal
//! functions `l_j` of the grid interpolant. The heat part is a banded matrix
//! shared by all modes (`H_alpha = e^{-alpha^2 nu t} H_0`). The residual part
//! is kept in factorized form: on the shifted hyperbola `mu_k = sqrt(lambda'_k / nu)`
//! does not depend on alpha, so
//! `R_alpha = 2 Re sum_k e^{-mu_k z} [P_k(alpha) M(mu_k) + Q_k(alpha) M(|alpha|)]`
//! with exponential moments `M(mu)_j = int e^{-mu y} l_j(y) dy`. Applying it costs
//! `O(n_nodes (N_z + N_y))`.

use std::sync::Arc;

use num_complex::Complex64;

use super::contour::{hyperbola_nodes, ContourFamily, ContourNode, ContourSpec};
use super::resolvent::{temporal_heat_kernel, ResolventQuery};
use super::weighted_residual;
use crate::error::{Error, Result};
use crate::grid::{gauss_legendre, ZGrid, STENCIL};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Half-width of the heat-kernel window in units of `sqrt(nu t)`.
const HEAT_WINDOW: f64 = 12.0;

/// Mode-independent part of the kernel at one time offset.
#[derive(Debug, Clone)]
pub struct TimeKernel {
    pub(crate) t: f64,
    pub(crate) nu: f64,
    pub(crate) beta: f64,
    pub(crate) grid: Arc<ZGrid>,
    pub(crate) contour: ContourSpec,
    /// Fingerprint of the contour requested before node doubling.
    pub(crate) requested: u64,
    /// Banded rows of the alpha = 0 heat operator: `(first column, values)`.
    pub(crate) heat_rows: Vec<(usize, Vec<f64>)>,
    /// Upper-half hyperbola nodes before the `-alpha^2 nu` shift.
    pub(crate) nodes: Vec<ContourNode>,
    pub(crate) mu: Vec<Complex64>,
    /// `exp_z[i * nk + k] = e^{-mu_k z_i}`.
    pub(crate) exp_z: Vec<Complex64>,
    /// `moments[k * n + j] = M(mu_k)_j`.
    pub(crate) moments: Vec<Complex64>,
}

/// Kernel of one Fourier mode at one time offset.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub(crate) shared: Arc<TimeKernel>,
    pub(crate) alpha: i64,
    pub(crate) heat_factor: f64,
    pub(crate) moments_a: Vec<f64>,
    pub(crate) p: Vec<Complex64>,
    pub(crate) q: Vec<Complex64>,
}

/// Kernels of all modes `0..=K` at one time offset.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub time: Arc<TimeKernel>,
    pub tables: Vec<KernelTable>,
}

fn heat_rows(grid: &ZGrid, tau: f64) -> Vec<(usize, Vec<f64>)> {
    let s = tau.sqrt();
    let w = HEAT_WINDOW * s;
    let norm = 1.0 / (4.0 * std::f64::consts::PI * tau).sqrt();
    let gl = gauss_legendre(8);
    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    for &z in grid.nodes() {
        let lo = (z - w).max(0.0);
        let hi = (z + w).min(grid.length());
        let c_lo = grid.cell_index(lo);
        let c_hi = grid.cell_index(hi);
        let (first, _) = grid.cardinal_values(c_lo, lo);
        let (last, _) = grid.cardinal_values(c_hi, hi);
        let mut row = vec![0.0; last + STENCIL - first];
        for c in c_lo..=c_hi {
            let (a, b) = grid.cell_bounds(c);
            let (a, b) = (a.max(lo), b.min(hi));
            if b <= a {
                continue;
            }
            let pieces = ((b - a) / s).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            for piece in 0..pieces {
                let left = a + piece as f64 * h;
                for &(x, wq) in gl {
                    let y = left + 0.5 * h * (x + 1.0);
                    let g = norm
                        * ((-(y - z) * (y - z) / (4.0 * tau)).exp()
                            + (-(y + z) * (y + z) / (4.0 * tau)).exp());
                    let (start, l) = grid.cardinal_values(c, y);
                    let f = 0.5 * h * wq * g;
                    for (m, lm) in l.iter().enumerate() {
                        row[start + m - first] += f * lm;
                    }
                }
            }
        }
        rows.push((first, row));
    }
    rows
}

fn probe_residual(
    nodes: &[ContourNode],
    t: f64,
    nu: f64,
    beta: f64,
    alpha: i64,
    z: f64,
    y: f64,
) -> Result<f64> {
    let a = alpha.unsigned_abs() as f64;
    let mut acc = 0.0;
    for n in nodes {
        let q = ResolventQuery::new(n.lambda - a * a * nu, alpha, nu, beta);
        acc += (n.weight * weighted_residual(&q, t, z, y)?).re;
    }
    Ok(2.0 * acc)
}

/// Doubles the hyperbola node count until residual values at probe points agree to 1e-9.
fn converged_nodes(
    t: f64,
    nu: f64,
    beta: f64,
    max_alpha: i64,
    contour: &ContourSpec,
) -> Result<(ContourSpec, Vec<ContourNode>)> {
    let tau = nu * t;
    let s = tau.sqrt();
    let scale = 1.0 / (std::f64::consts::PI * tau).sqrt();
    let probes = [0.0, s, 3.0 * s];
    let alphas = [0, 1.min(max_alpha), max_alpha];
    let eval = |nodes: &[ContourNode]| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &z in &probes {
                for &y in &probes {
                    out.push(probe_residual(nodes, t, nu, beta, alpha, z, y)?);
                }
            }
        }
        Ok(out)
    };
    let mut spec = *contour;
    let mut nodes = hyperbola_nodes(t, &spec)?;
    let mut vals = eval(&nodes)?;
    let mut diff = f64::INFINITY;
    for _ in 0..5 {
        let next_spec = spec.with_nodes(spec.n_nodes * 2);
        let next_nodes = hyperbola_nodes(t, &next_spec)?;
        let next_vals = eval(&next_nodes)?;
        let peak = next_vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        diff = vals
            .iter()
            .zip(&next_vals)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if diff <= 1e-9 * peak.max(1e-4 * scale) {
            return Ok((spec, nodes));
        }
        spec = next_spec;
        nodes = next_nodes;
        vals = next_vals;
    }
    Err(Error::NotConverged {
        what: "kernel table contour",
        estimate: diff / scale,
        tolerance: 1e-9,
    })
}

impl TimeKernel {
    pub fn build(
        t: f64,
        nu: f64,
        beta: f64,
        max_alpha: usize,
        grid: Arc<ZGrid>,
        contour: &ContourSpec,
    ) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        if !(nu > 0.0) || !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!("nu = {nu}, beta = {beta}")));
        }
        if contour.family != ContourFamily::Production {
            return Err(Error::InvalidContour(
                "kernel tables use the production hyperbola; analytic families are pointwise".into(),
            ));
        }
        let requested = contour.fingerprint();
        let (contour, nodes) = converged_nodes(t, nu, beta, max_alpha as i64, contour)?;
        let n = grid.len();
        let nk = nodes.len();
        let mu: Vec<Complex64> = nodes.iter().map(|nd| (nd.lambda / nu).sqrt()).collect();
        let mut exp_z = vec![C0; n * nk];
        for (i, &z) in grid.nodes().iter().enumerate() {
            for (k, m) in mu.iter().enumerate() {
                exp_z[i * nk + k] = (-m * z).exp();
            }
        }
        let mut moments = vec![C0; nk * n];
        for (k, m) in mu.iter().enumerate() {
            grid.add_exp_moments(*m, Complex64::new(1.0, 0.0), &mut moments[k * n..(k + 1) * n]);
        }
        Ok(Self {
            t,
            nu,
            beta,
            heat_rows: heat_rows(&grid, nu * t),
            grid,
            contour,
            requested,
            nodes,
            mu,
            exp_z,
            moments,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.contour
    }

    pub fn grid(&self) -> &Arc<ZGrid> {
        &self.grid
    }

    fn heat_apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.heat_rows
            .iter()
            .map(|(first, row)| row.iter().zip(&v[*first..]).map(|(w, x)| x * *w).sum())
            .collect()
    }
}

impl KernelTable {
    pub fn new(shared: Arc<TimeKernel>, alpha: i64) -> Self {
        let a = alpha.unsigned_abs() as f64;
        let (t, nu, beta) = (shared.t, shared.nu, shared.beta);
        let tau = nu * t;
        let nb = nu.powf(beta);
        let nb1 = nu.powf(beta - 1.0);
        let mut p = Vec::with_capacity(shared.nodes.len());
        let mut q = Vec::with_capacity(shared.nodes.len());
        for (node, mu) in shared.nodes.iter().zip(&shared.mu) {
            let lambda = node.lambda - a * a * nu;
            let k = (a + mu) / (nb * (a + mu) + 1.0);
            let w = node.weight * (node.lambda * t - a * a * tau).exp() * k / lambda;
            p.push(w * (a - lambda * nb1) / mu);
            q.push(-w);
        }
        Self {
            moments_a: shared.grid.exp_moments_real(a),
            heat_factor: (-a * a * tau).exp(),
            shared,
            alpha,
            p,
            q,
        }
    }

    pub fn alpha(&self) -> i64 {
        self.alpha
    }

    pub fn t(&self) -> f64 {
        self.shared.t
    }

    pub fn nu(&self) -> f64 {
        self.shared.nu
    }

    pub fn beta(&self) -> f64 {
        self.shared.beta
    }

    pub fn grid(&self) -> &Arc<ZGrid> {
        &self.shared.grid
    }

    pub fn time_kernel(&self) -> &Arc<TimeKernel> {
        &self.shared
    }

    /// `S(v)_i = sum_k e^{-mu_k z_i} (P_k M(mu_k).v + Q_k M(a).v)` over the upper half nodes.
    fn half_residual(&self, v: &[Complex64]) -> Vec<Complex64> {
        let sh = &self.shared;
        let n = sh.grid.len();
        let nk = sh.nodes.len();
        let sigma: Complex64 = self.moments_a.iter().zip(v).map(|(m, x)| x * *m).sum();
        let coef: Vec<Complex64> = (0..nk)
            .map(|k| {
                let row = &sh.moments[k * n..(k + 1) * n];
                let s: Complex64 = row.iter().zip(v).map(|(m, x)| m * x).sum();
                self.p[k] * s + self.q[k] * sigma
            })
            .collect();
        (0..n)
            .map(|i| {
                sh.exp_z[i * nk..(i + 1) * nk]
                    .iter()
                    .zip(&coef)
                    .map(|(e, c)| e * c)
                    .sum()
            })
            .collect()
    }

    /// Residual operator applied to nodal data.
    pub fn apply_residual(&self, v: &[Complex64]) -> Vec<Complex64> {
        let direct = self.half_residual(v);
        let conj_in: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
        let mirrored = self.half_residual(&conj_in);
        direct.iter().zip(&mirrored).map(|(a, b)| a + b.conj()).collect()
    }

    pub fn apply_heat(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.shared.heat_apply(v);
        for x in out.iter_mut() {
            *x *= self.heat_factor;
        }
        out
    }

    /// `int_0^L G_alpha(t, z_i, y) v(y) dy` for the interpolant of `v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.apply_heat(v);
        for (o, r) in out.iter_mut().zip(self.apply_residual(v)) {
            *o += r;
        }
        out
    }

    /// Dense heat operator `int H_alpha(t, z_i, y) l_j(y) dy`.
    pub fn heat_part(&self) -> Vec<Vec<f64>> {
        let n = self.shared.grid.len();
        self.shared
            .heat_rows
            .iter()
            .map(|(first, row)| {
                let mut dense = vec![0.0; n];
                for (j, w) in row.iter().enumerate() {
                    dense[first + j] = w * self.heat_factor;
                }
                dense
            })
            .collect()
    }

    /// Dense residual operator `int R_alpha(t, z_i, y) l_j(y) dy`.
    pub fn residual_part(&self) -> Vec<Vec<f64>> {
        let sh = &self.shared;
        let n = sh.grid.len();
        let nk = sh.nodes.len();
        (0..n)
            .map(|i| {
                let e = &sh.exp_z[i * nk..(i + 1) * nk];
                (0..n)
                    .map(|j| {
                        let mut acc = C0;
                        for k in 0..nk {
                            acc += e[k] * (self.p[k] * sh.moments[k * n + j] + self.q[k] * self.moments_a[j]);
                        }
                        2.0 * acc.re
                    })
                    .collect()
            })
            .collect()
    }

    /// Point value of the heat kernel.
    pub fn heat_at(&self, z: f64, y: f64) -> Result<f64> {
        temporal_heat_kernel(self.shared.t, self.shared.nu, self.alpha, z, y)
    }

    /// Point value of the residual kernel on the table's contour.
    pub fn residual_at(&self, z: f64, y: f64) -> Result<f64> {
        let sh = &self.shared;
        probe_residual(&sh.nodes, sh.t, sh.nu, sh.beta, self.alpha, z, y)
    }
}

impl KernelSet {
    pub fn build(
        t: f64,
        nu: f64,
        beta: f64,
        max_alpha: usize,
        grid: Arc<ZGrid>,
        contour: &ContourSpec,
    ) -> Result<Self> {
        let time = Arc::new(TimeKernel::build(t, nu, beta, max_alpha, grid, contour)?);
        let tables = (0..=max_alpha as i64)
            .map(|alpha| KernelTable::new(time.clone(), alpha))
            .collect();
        Ok(Self { time, tables })
    }

    pub fn table(&self, alpha: i64) -> &KernelTable {
        &self.tables[alpha.unsigned_abs() as usize]
    }
}

/// Kernel table for a single mode.
pub fn build_kernel_table(
    t: f64,
    nu: f64,
    beta: f64,
    alpha: i64,
    grid: Arc<ZGrid>,
    contour: &ContourSpec,
) -> Result<KernelTable> {
    let time = TimeKernel::build(t, nu, beta, alpha.unsigned_abs() as usize, grid, contour)?;
    Ok(KernelTable::new(Arc::new(time), alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::stokes_green::temporal_residual_closed_form;

    fn grid(nu: f64) -> Arc<ZGrid> {
        Arc::new(GridSpec::default().build(nu).unwrap())
    }

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
    }

    #[test]
    fn heat_rows_conserve_mass() {
        let g = grid(1e-3);
        let tab = build_kernel_table(0.5, 1e-3, 1.0, 0, g.clone(), &ContourSpec::production()).unwrap();
        let ones = real(&vec![1.0; g.len()]);
        let out = tab.apply_heat(&ones);
        for (i, &z) in g.nodes().iter().enumerate() {
            if z < 100.0 {
                assert!((out[i].re - 1.0).abs() < 1e-8, "z={z}: {}", out[i].re);
            }
        }
    }

    #[test]
    fn residual_matches_closed_form_pointwise() {
        let g = grid(1e-3);
        for &alpha in &[0, 5] {
            let tab = build_kernel_table(0.3, 1e-3, 1.0, alpha, g.clone(), &ContourSpec::production()).unwrap();
            let s = (1e-3_f64 * 0.3).sqrt();
            for &(z, y) in &[(0.0, 0.0), (s, 2.0 * s), (3.0 * s, 0.5 * s)] {
                let exact = temporal_residual_closed_form(0.3, 1e-3, 1.0, alpha, z, y).unwrap();
                let got = tab.residual_at(z, y).unwrap();
                assert!((got - exact).abs() < 1e-9 / s, "{got} vs {exact}");
            }
        }
    }

    #[test]
    fn factorized_residual_matches_dense() {
        let g = grid(1e-2);
        let tab = build_kernel_table(0.2, 1e-2, 1.0, 3, g.clone(), &ContourSpec::production()).unwrap();
        let v: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|&z| Complex64::new((-z).exp() * z, (-2.0 * z).exp()))
            .collect();
        let fast = tab.apply_residual(&v);
        let dense = tab.residual_part();
        for (i, row) in dense.iter().enumerate() {
            let slow: Complex64 = row.iter().zip(&v).map(|(w, x)| x * *w).sum();
            assert!((slow - fast[i]).norm() < 1e-10 * (1.0 + slow.norm()));
        }
    }
}
