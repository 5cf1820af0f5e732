//! Graded wall-normal grid on `[0, L]`.
//!
//! Nodal data are interpreted through the piecewise-quintic Lagrange interpolant
//! (six-node stencils, clamped at the ends). Every integral the solver needs
//! (plain quadrature, exponential moments, Green-function convolutions) is taken
//! exactly against that interpolant, so narrow kernels never have to be
//! resolved by the nodes themselves.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes per interpolation stencil.
pub(crate) const STENCIL: usize = 6;

/// Piecewise-polynomial cell data: stencil start and the monomial coefficients of
/// the cardinal polynomials in the local variable.
#[derive(Debug, Clone)]
struct Cell {
    left: f64,
    width: f64,
    start: usize,
    /// `fwd[m][p]`: coefficient of `x^p`, `x = y - left`.
    fwd: [[f64; STENCIL]; STENCIL],
    /// `rev[m][p]`: coefficient of `x^p`, `x = right - y`.
    rev: [[f64; STENCIL]; STENCIL],
}

#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    weights: Vec<f64>,
}

/// Parameters of [`ZGrid::hybrid`]; the wall cell is supplied separately
/// because it depends on the viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub length: f64,
    pub growth: f64,
    pub core_spacing: f64,
    pub far_scale: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            length: 120.0,
            growth: 0.05,
            core_spacing: 0.05,
            far_scale: 12.0,
        }
    }
}

impl GridSpec {
    /// Wall cell used for viscosity `nu`: 1/48 of the layer thickness `sqrt(nu)`.
    pub fn wall_cell(nu: f64) -> f64 {
        nu.sqrt() / 48.0
    }

    pub fn build(&self, nu: f64) -> Result<ZGrid> {
        ZGrid::hybrid(self, Self::wall_cell(nu))
    }
}

/// Truncated half-line grid with exponential grading towards the wall.
#[derive(Debug, Clone)]
pub struct ZGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    length: f64,
    grading: f64,
    cells: Vec<Cell>,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
}

impl ZGrid {
    /// `z(xi) = L (e^{c xi} - 1) / (e^c - 1)` sampled at `intervals + 1` uniform `xi`.
    pub fn graded(length: f64, intervals: usize, grading: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if intervals < STENCIL {
            return Err(Error::InvalidGrid(format!(
                "need at least {STENCIL} intervals, got {intervals}"
            )));
        }
        if !(grading >= 0.0) || grading > 500.0 {
            return Err(Error::InvalidGrid(format!("grading {grading} out of range [0, 500]")));
        }
        let n = intervals;
        let mut nodes: Vec<f64> = (0..=n)
            .map(|k| {
                let xi = k as f64 / n as f64;
                if grading < 1e-12 {
                    length * xi
                } else {
                    length * (grading * xi).exp_m1() / grading.exp_m1()
                }
            })
            .collect();
        nodes[0] = 0.0;
        nodes[n] = length;
        Self::from_nodes(nodes, grading)
    }

    /// Graded grid whose first cell equals `wall_cell` (uniform if `L/intervals` is already smaller).
    pub fn with_wall_cell(length: f64, intervals: usize, wall_cell: f64) -> Result<Self> {
        if !(wall_cell > 0.0) {
            return Err(Error::InvalidGrid(format!("wall cell must be positive, got {wall_cell}")));
        }
        let n = intervals as f64;
        let first = |c: f64| {
            if c < 1e-12 {
                length / n
            } else {
                length * (c / n).exp_m1() / c.exp_m1()
            }
        };
        if first(0.0) <= wall_cell {
            return Self::graded(length, intervals, 0.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 400.0_f64);
        if first(hi) > wall_cell {
            return Err(Error::InvalidGrid(format!(
                "{intervals} intervals cannot reach a wall cell of {wall_cell:e} on [0, {length}]"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if first(mid) > wall_cell {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::graded(length, intervals, hi)
    }

    /// Production layout: spacing `min(h0 + g z, hc e^{z / kappa}, smax)`.
    ///
    /// Geometric growth from the wall cell `h0` resolves the boundary layers,
    /// the core spacing `hc` carries O(1) structure, and the slow exponential
    /// coarsening matches the decay of admissible data toward `z = L`.
    pub fn hybrid(spec: &GridSpec, wall_cell: f64) -> Result<Self> {
        let GridSpec {
            length,
            growth,
            core_spacing,
            far_scale,
        } = *spec;
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(length) && ok(growth) && ok(core_spacing) && ok(far_scale) && ok(wall_cell)) {
            return Err(Error::InvalidGrid(format!(
                "grid parameters must be positive: {spec:?}, wall cell {wall_cell}"
            )));
        }
        if growth > 0.25 {
            return Err(Error::InvalidGrid(format!("growth {growth} exceeds 0.25")));
        }
        let smax = length / 60.0;
        let spacing = |z: f64| {
            (wall_cell + growth * z)
                .min(core_spacing * (z / far_scale).exp())
                .min(smax)
                .max(wall_cell)
        };
        let mut nodes = vec![0.0];
        let mut z = 0.0;
        while z < length {
            z += spacing(z);
            nodes.push(z);
            if nodes.len() > 1_000_000 {
                return Err(Error::InvalidGrid("node count exceeds 10^6".into()));
            }
        }
        // The overshoot is at most `smax`, so pulling the nodes in keeps the
        // spacing profile intact and never enlarges the wall cell.
        let shrink = length / z;
        for v in nodes.iter_mut() {
            *v *= shrink;
        }
        let n = nodes.len();
        nodes[n - 1] = length;
        Self::from_nodes(nodes, growth)
    }

    /// Build from explicit nodes (strictly increasing, starting at 0).
    pub fn from_nodes(nodes: Vec<f64>, grading: f64) -> Result<Self> {
        let n = nodes.len();
        if n < STENCIL + 1 {
            return Err(Error::InvalidGrid(format!("need at least {} nodes, got {n}", STENCIL + 1)));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be z = 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidGrid("nodes must be finite and strictly increasing".into()));
        }
        let length = nodes[n - 1];
        let cells: Vec<Cell> = (0..n - 1).map(|c| build_cell(&nodes, c)).collect();
        let mut weights = vec![0.0; n];
        for cell in &cells {
            let mom = real_power_moments(0.0, cell.width);
            for m in 0..STENCIL {
                weights[cell.start + m] += dot(&cell.fwd[m], &mom);
            }
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidGrid(
                "grading too abrupt: interpolatory quadrature weights are not all positive".into(),
            ));
        }
        let d1 = (0..n).map(|i| stencil(&nodes, i, 5, 1)).collect();
        let d2 = (0..n)
            .map(|i| {
                if i >= 2 && i + 2 < n {
                    stencil(&nodes, i, 5, 2)
                } else {
                    stencil(&nodes, i, 6, 2)
                }
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            length,
            grading,
            cells,
            d1,
            d2,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn first_cell(&self) -> f64 {
        self.nodes[1]
    }

    /// Number of nodes in `[0, depth]`.
    pub fn nodes_within(&self, depth: f64) -> usize {
        self.nodes.iter().take_while(|&&z| z <= depth).count()
    }

    /// Checks the boundary-layer resolution requirement for viscosity `nu`.
    pub fn check_layer_resolution(&self, nu: f64) -> Result<()> {
        let delta = nu.sqrt();
        if delta >= self.length * 1e-6 && self.nodes_within(delta) < 8 {
            return Err(Error::InvalidGrid(format!(
                "only {} nodes inside the boundary layer [0, {delta:e}]",
                self.nodes_within(delta)
            )));
        }
        Ok(())
    }

    /// Stable content hash of the node positions.
    pub fn fingerprint(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for z in &self.nodes {
            h.update(z.to_bits().to_le_bytes());
        }
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Quadrature of nodal values (exact for the interpolant).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(values).map(|(w, v)| v * *w).sum()
    }

    pub fn l1_norm(&self, values: &[Complex64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v.norm()).sum()
    }

    /// Index of the cell containing `y` (clamped to the grid).
    pub fn cell_index(&self, y: f64) -> usize {
        let n = self.nodes.len();
        if y <= 0.0 {
            return 0;
        }
        if y >= self.length {
            return n - 2;
        }
        match self.nodes.binary_search_by(|z| z.partial_cmp(&y).expect("finite nodes")) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Values of the cardinal functions of cell `c` at `y`, with the stencil start.
    pub(crate) fn cardinal_values(&self, c: usize, y: f64) -> (usize, [f64; STENCIL]) {
        let cell = &self.cells[c];
        let x = y - cell.left;
        let mut out = [0.0; STENCIL];
        for (m, o) in out.iter_mut().enumerate() {
            *o = cell.fwd[m].iter().rev().fold(0.0, |acc, c| acc * x + c);
        }
        (cell.start, out)
    }

    pub fn interpolate(&self, values: &[Complex64], y: f64) -> Complex64 {
        let (s, l) = self.cardinal_values(self.cell_index(y), y);
        (0..STENCIL).map(|m| values[s + m] * l[m]).sum()
    }

    pub fn interpolate_real(&self, values: &[f64], y: f64) -> f64 {
        let (s, l) = self.cardinal_values(self.cell_index(y), y);
        (0..STENCIL).map(|m| values[s + m] * l[m]).sum()
    }

    /// `M_j(mu) = int_0^L e^{-mu y} l_j(y) dy` for every cardinal function `l_j`.
    pub fn exp_moments(&self, mu: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nodes.len()];
        self.add_exp_moments(mu, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// Accumulates `scale * M_j(mu)` into `out`.
    pub(crate) fn add_exp_moments(&self, mu: Complex64, scale: Complex64, out: &mut [Complex64]) {
        for cell in &self.cells {
            let shift = -mu * cell.left;
            if shift.re < -745.0 {
                break;
            }
            let factor = scale * shift.exp();
            let mom = power_moments(mu, cell.width);
            for m in 0..STENCIL {
                let v: Complex64 = cell.fwd[m].iter().zip(&mom).map(|(c, q)| q * *c).sum();
                out[cell.start + m] += factor * v;
            }
        }
    }

    /// Real-rate version of [`ZGrid::exp_moments`].
    pub fn exp_moments_real(&self, a: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        for cell in &self.cells {
            let shift = -a * cell.left;
            if shift < -745.0 {
                break;
            }
            let factor = shift.exp();
            let mom = real_power_moments(a, cell.width);
            for m in 0..STENCIL {
                out[cell.start + m] += factor * dot(&cell.fwd[m], &mom);
            }
        }
        out
    }

    /// Cell integrals `int_cell e^{-a x} l_m dx` for the stencil nodes, with
    /// `x` measured from the left end (`reversed = false`) or the right end.
    pub(crate) fn cell_exp_weights(
        &self,
        c: usize,
        a: f64,
        reversed: bool,
    ) -> (usize, [f64; STENCIL]) {
        let cell = &self.cells[c];
        let mom = real_power_moments(a, cell.width);
        let coef = if reversed { &cell.rev } else { &cell.fwd };
        (cell.start, std::array::from_fn(|m| dot(&coef[m], &mom)))
    }

    pub(crate) fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn cell_bounds(&self, c: usize) -> (f64, f64) {
        let cell = &self.cells[c];
        (cell.left, cell.left + cell.width)
    }

    /// Fourth-order first derivative on the graded grid (one-sided near the ends).
    pub fn d1_real(&self, values: &[f64]) -> Vec<f64> {
        apply_stencils(&self.d1, values)
    }

    pub fn d1(&self, values: &[Complex64]) -> Vec<Complex64> {
        apply_stencils_c(&self.d1, values)
    }

    /// Second derivative (five-point interior, six-point one-sided stencils at the ends).
    pub fn d2(&self, values: &[Complex64]) -> Vec<Complex64> {
        apply_stencils_c(&self.d2, values)
    }

    pub fn d2_real(&self, values: &[f64]) -> Vec<f64> {
        apply_stencils(&self.d2, values)
    }

    /// Second-derivative stencil at node `i` as `(start, weights)`.
    pub fn d2_stencil(&self, i: usize) -> (usize, &[f64]) {
        (self.d2[i].start, &self.d2[i].weights)
    }
}

fn apply_stencils(st: &[Stencil], values: &[f64]) -> Vec<f64> {
    st.iter()
        .map(|s| s.weights.iter().zip(&values[s.start..]).map(|(w, v)| w * v).sum())
        .collect()
}

fn apply_stencils_c(st: &[Stencil], values: &[Complex64]) -> Vec<Complex64> {
    st.iter()
        .map(|s| s.weights.iter().zip(&values[s.start..]).map(|(w, v)| v * *w).sum())
        .collect()
}

fn stencil(nodes: &[f64], i: usize, width: usize, order: usize) -> Stencil {
    let n = nodes.len();
    let start = i.saturating_sub(width / 2).min(n - width);
    let weights = fornberg(nodes[i], &nodes[start..start + width], order);
    Stencil { start, weights }
}

/// Finite-difference weights for the `order`-th derivative at `x0` (Fornberg's recursion).
pub fn fornberg(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

fn dot(a: &[f64; STENCIL], b: &[f64; STENCIL]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn build_cell(nodes: &[f64], c: usize) -> Cell {
    let n = nodes.len();
    let start = c.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
    let left = nodes[c];
    let right = nodes[c + 1];
    let local: [f64; STENCIL] = std::array::from_fn(|m| nodes[start + m] - left);
    let local_rev: [f64; STENCIL] = std::array::from_fn(|m| right - nodes[start + m]);
    Cell {
        left,
        width: right - left,
        start,
        fwd: std::array::from_fn(|m| lagrange_monomials(&local, m)),
        rev: std::array::from_fn(|m| lagrange_monomials(&local_rev, m)),
    }
}

/// Monomial coefficients of the `m`-th Lagrange polynomial on `pts`.
fn lagrange_monomials(pts: &[f64; STENCIL], m: usize) -> [f64; STENCIL] {
    let mut poly = [0.0; STENCIL];
    poly[0] = 1.0;
    let mut deg = 0;
    let mut denom = 1.0;
    for (k, &pk) in pts.iter().enumerate() {
        if k == m {
            continue;
        }
        for d in (0..=deg + 1).rev() {
            let lower = if d > 0 { poly[d - 1] } else { 0.0 };
            let here = if d <= deg { poly[d] } else { 0.0 };
            poly[d] = lower - pk * here;
        }
        deg += 1;
        denom *= pts[m] - pk;
    }
    poly.map(|c| c / denom)
}

/// Below this `|mu h|` the moments come from the power series; above it the
/// forward recurrence loses at most `5! / 2^5` in relative accuracy.
const SERIES_LIMIT: f64 = 2.0;

/// `int_0^h x^p e^{-mu x} dx` for `p = 0..=5`.
pub(crate) fn power_moments(mu: Complex64, h: f64) -> [Complex64; STENCIL] {
    let w = mu * h;
    if w.norm() < SERIES_LIMIT {
        let mut out = [Complex64::new(0.0, 0.0); STENCIL];
        let mut hp = h;
        for (p, o) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(1.0 / (p as f64 + 1.0), 0.0);
            for k in 1..40 {
                term *= -w / k as f64;
                sum += term / (p + k + 1) as f64;
            }
            *o = sum * hp;
            hp *= h;
        }
        out
    } else {
        let e = (-w).exp();
        let inv = 1.0 / mu;
        let mut out = [Complex64::new(0.0, 0.0); STENCIL];
        out[0] = (1.0 - e) * inv;
        let mut hp = 1.0;
        for p in 1..STENCIL {
            hp *= h;
            out[p] = (out[p - 1] * p as f64 - e * hp) * inv;
        }
        out
    }
}

pub(crate) fn real_power_moments(a: f64, h: f64) -> [f64; STENCIL] {
    let w = a * h;
    if w.abs() < SERIES_LIMIT {
        let mut out = [0.0; STENCIL];
        let mut hp = h;
        for (p, o) in out.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 1.0 / (p as f64 + 1.0);
            for k in 1..40 {
                term *= -w / k as f64;
                sum += term / (p + k + 1) as f64;
            }
            *o = sum * hp;
            hp *= h;
        }
        out
    } else {
        let e = (-w).exp();
        let mut out = [0.0; STENCIL];
        out[0] = -(-w).exp_m1() / a;
        let mut hp = 1.0;
        for p in 1..STENCIL {
            hp *= h;
            out[p] = (out[p - 1] * p as f64 - e * hp) / a;
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`; orders 8 and 16 are cached.
pub(crate) fn gauss_legendre(order: usize) -> &'static [(f64, f64)] {
    static GL8: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static GL16: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let build = |n: usize| {
        GaussLegendre::new(n)
            .expect("order >= 2")
            .as_node_weight_pairs()
            .to_vec()
    };
    match order {
        8 => GL8.get_or_init(|| build(8)),
        16 => GL16.get_or_init(|| build(16)),
        _ => panic!("unsupported Gauss-Legendre order {order}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ZGrid {
        ZGrid::with_wall_cell(120.0, 240, 1e-3).unwrap()
    }

    #[test]
    fn endpoints_and_monotone() {
        let g = grid();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(*g.nodes().last().unwrap(), 120.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!((g.first_cell() - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn weights_sum_to_length() {
        let g = grid();
        let total: f64 = g.weights().iter().sum();
        assert!((total - g.length()).abs() <= 1e-12 * g.length());
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn quadrature_of_decaying_exponential() {
        let g = GridSpec::default().build(1e-5).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|z| (-z).exp()).collect();
        let exact = 1.0 - (-120.0f64).exp();
        assert!((g.integrate(&f) - exact).abs() < 1e-10, "{}", g.integrate(&f) - exact);
    }

    #[test]
    fn production_grid_layout() {
        for &nu in &[1e-2, 1e-3, 1e-4, 1e-5] {
            let g = GridSpec::default().build(nu).unwrap();
            assert!(g.first_cell() <= nu.sqrt() / 8.0);
            assert!(g.check_layer_resolution(nu).is_ok());
            assert!(g.len() < 420, "{} nodes", g.len());
            assert_eq!(*g.nodes().last().unwrap(), 120.0);
        }
    }

    #[test]
    fn layer_resolution_check() {
        let g = grid();
        assert!(g.check_layer_resolution(1e-4).is_ok());
        let coarse = ZGrid::graded(120.0, 40, 0.0).unwrap();
        assert!(coarse.check_layer_resolution(1e-4).is_err());
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(ZGrid::from_nodes(vec![0.0, 1.0, 0.5, 2.0, 3.0], 0.0).is_err());
        assert!(ZGrid::from_nodes(vec![0.1, 1.0, 2.0, 3.0, 4.0], 0.0).is_err());
        assert!(ZGrid::graded(-1.0, 10, 1.0).is_err());
    }

    #[test]
    fn exp_moments_match_closed_form() {
        let g = grid();
        for &a in &[0.0, 0.5, 3.0, 40.0] {
            let f: Vec<f64> = g.nodes().iter().map(|z| (-z).exp()).collect();
            let m = g.exp_moments_real(a);
            let got: f64 = m.iter().zip(&f).map(|(w, v)| w * v).sum();
            let exact = 1.0 / (1.0 + a);
            assert!((got - exact).abs() < 1e-8, "a={a}: {got} vs {exact}");
        }
        let mu = Complex64::new(2.0, 5.0);
        let f: Vec<Complex64> = g.nodes().iter().map(|z| Complex64::new((-z).exp(), 0.0)).collect();
        let got: Complex64 = g.exp_moments(mu).iter().zip(&f).map(|(w, v)| w * v).sum();
        let exact = 1.0 / (mu + 1.0);
        assert!((got - exact).norm() < 1e-8);
    }

    #[test]
    fn power_moments_branches_agree() {
        for &(re, im) in &[(0.3, 0.2), (0.9, 0.4), (1.2, -0.5), (1.5, 1.3), (2.5, 0.1), (7.0, 30.0)] {
            let mu = Complex64::new(re, im);
            let h = 1.0;
            let m = power_moments(mu, h);
            // composite midpoint-free check via 16-point Gauss-Legendre on sub-panels
            for p in 0..STENCIL {
                let mut acc = Complex64::new(0.0, 0.0);
                let panels = 64;
                for k in 0..panels {
                    let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
                    for &(x, w) in gauss_legendre(16) {
                        let s = 0.5 * (b - a) * x + 0.5 * (a + b);
                        acc += 0.5 * (b - a) * w * s.powi(p as i32) * (-mu * s).exp();
                    }
                }
                assert!((acc - m[p]).norm() < 1e-13, "mu={mu} p={p}");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_quintics() {
        let g = grid();
        let f = |z: f64| 1.0 + z - 0.3 * z * z + 0.01 * z.powi(3) - 1e-4 * z.powi(5);
        let vals: Vec<f64> = g.nodes().iter().map(|&z| f(z)).collect();
        for &y in &[0.0, 1e-4, 0.37, 5.5, 60.1, 119.9] {
            let rel = (g.interpolate_real(&vals, y) - f(y)).abs() / f(y).abs().max(1.0);
            assert!(rel < 1e-9, "y={y}");
        }
    }

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
    }

    fn d1_error(intervals: usize) -> f64 {
        let g = ZGrid::graded(10.0, intervals, 3.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|z| (-z).exp()).collect();
        g.d1_real(&f)
            .iter()
            .zip(g.nodes())
            .map(|(d, z)| (d + (-z).exp()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn z_derivative_is_fourth_order() {
        let e1 = d1_error(80);
        let e2 = d1_error(160);
        let e3 = d1_error(320);
        let order = ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0;
        assert!(order >= 3.5, "observed order {order}");
    }
}
