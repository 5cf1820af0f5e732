//! Fields on the strip: Fourier modes in `x`, nodal values on a [`ZGrid`] in `z`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::ZGrid;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Axis for [`SpectralField::differentiate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// Vorticity or velocity component stored as modes `alpha = -K..=K`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    k: usize,
    grid: Arc<ZGrid>,
    modes: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: Arc<ZGrid>, k: usize) -> Self {
        let n = grid.len();
        Self {
            k,
            grid,
            modes: vec![vec![C0; n]; 2 * k + 1],
        }
    }

    /// Real shear field: only mode 0, given by `profile(z)`.
    pub fn shear(grid: Arc<ZGrid>, k: usize, profile: impl Fn(f64) -> f64) -> Self {
        let mut f = Self::zeros(grid, k);
        let vals: Vec<Complex64> = f.grid.nodes().iter().map(|&z| Complex64::new(profile(z), 0.0)).collect();
        f.modes[k] = vals;
        f
    }

    pub fn max_mode(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> &Arc<ZGrid> {
        &self.grid
    }

    pub fn mode(&self, alpha: i64) -> &[Complex64] {
        &self.modes[self.index(alpha)]
    }

    pub fn mode_mut(&mut self, alpha: i64) -> &mut [Complex64] {
        let i = self.index(alpha);
        &mut self.modes[i]
    }

    /// Sets mode `alpha` and its conjugate partner `-alpha`.
    pub fn set_mode_pair(&mut self, alpha: i64, values: &[Complex64]) {
        let i = self.index(alpha);
        let j = self.index(-alpha);
        self.modes[i].copy_from_slice(values);
        if i != j {
            for (dst, v) in self.modes[j].iter_mut().zip(values) {
                *dst = v.conj();
            }
        } else {
            for v in self.modes[i].iter_mut() {
                v.im = 0.0;
            }
        }
    }

    fn index(&self, alpha: i64) -> usize {
        assert!(
            alpha.unsigned_abs() as usize <= self.k,
            "mode {alpha} outside -{k}..={k}",
            k = self.k
        );
        (alpha + self.k as i64) as usize
    }

    pub fn alphas(&self) -> impl Iterator<Item = i64> {
        let k = self.k as i64;
        -k..=k
    }

    /// Largest deviation from `f_{-alpha} = conj(f_alpha)`, relative to the field's max modulus.
    pub fn reality_defect(&self) -> (i64, f64) {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst = (0, 0.0);
        for alpha in 0..=self.k as i64 {
            let a = self.mode(alpha);
            let b = self.mode(-alpha);
            let d = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y.conj()).norm())
                .fold(0.0, f64::max)
                / scale;
            if d > worst.1 {
                worst = (alpha, d);
            }
        }
        worst
    }

    pub fn check_reality(&self, tol: f64) -> Result<()> {
        let (alpha, defect) = self.reality_defect();
        if defect > tol {
            return Err(Error::RealityViolated { alpha, defect });
        }
        if self.modes.iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite spectral values".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.modes.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `||f_alpha||_{L^1(0, L)}` by the grid quadrature.
    pub fn mode_l1(&self, alpha: i64) -> f64 {
        self.grid.l1_norm(self.mode(alpha))
    }

    /// Sum over modes of the L1 norms.
    pub fn l1(&self) -> f64 {
        self.alphas().map(|a| self.mode_l1(a)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().flatten().all(|v| *v == C0)
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.modes.iter_mut().flatten() {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        assert_eq!(self.k, other.k, "mode count mismatch");
        for (a, b) in self.modes.iter_mut().flatten().zip(other.modes.iter().flatten()) {
            *a += b * s;
        }
    }

    /// Relative L1 distance `sum_alpha ||f - g|| / sum_alpha ||g||`.
    pub fn rel_l1_distance(&self, reference: &SpectralField) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for alpha in self.alphas() {
            let diff: Vec<Complex64> = self
                .mode(alpha)
                .iter()
                .zip(reference.mode(alpha))
                .map(|(a, b)| a - b)
                .collect();
            num += self.grid.l1_norm(&diff);
            den += reference.mode_l1(alpha);
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Spectral `d/dx` (multiply by `i alpha`) or fourth-order `d/dz`.
    pub fn differentiate(&self, axis: Axis) -> Result<SpectralField> {
        let mut out = self.clone();
        match axis {
            Axis::X => {
                for alpha in self.alphas() {
                    let f = Complex64::new(0.0, alpha as f64);
                    for v in out.mode_mut(alpha) {
                        *v *= f;
                    }
                }
            }
            Axis::Z => {
                if self.grid.len() < 5 {
                    return Err(Error::TooFewNodes {
                        need: 5,
                        have: self.grid.len(),
                    });
                }
                for (dst, src) in out.modes.iter_mut().zip(&self.modes) {
                    *dst = self.grid.d1(src);
                }
            }
        }
        Ok(out)
    }

    /// Applies `op` to each mode `alpha >= 0` and fills negative modes by conjugation.
    pub fn map_modes(
        &self,
        mut op: impl FnMut(i64, &[Complex64]) -> Result<Vec<Complex64>>,
    ) -> Result<SpectralField> {
        let mut out = SpectralField::zeros(self.grid.clone(), self.k);
        for alpha in 0..=self.k as i64 {
            let v = op(alpha, self.mode(alpha))?;
            out.set_mode_pair(alpha, &v);
        }
        Ok(out)
    }

    /// Same modes on a larger (or smaller) truncation, padding with zeros.
    pub fn with_max_mode(&self, k: usize) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid.clone(), k);
        let m = k.min(self.k) as i64;
        for alpha in -m..=m {
            out.mode_mut(alpha).copy_from_slice(self.mode(alpha));
        }
        out
    }
}

/// Physical-space field on a uniform periodic `x`-grid times the z-grid.
#[derive(Debug, Clone)]
pub struct RealField {
    x: Vec<f64>,
    grid: Arc<ZGrid>,
    /// `values[ix * nz + iz]`.
    values: Vec<f64>,
}

impl RealField {
    pub fn from_fn(nx: usize, grid: Arc<ZGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let x = uniform_x(nx);
        let mut values = Vec::with_capacity(nx * grid.len());
        for &xi in &x {
            for &z in grid.nodes() {
                values.push(f(xi, z));
            }
        }
        Self { x, grid, values }
    }

    /// Builds a field from explicit samples; `x` must lie on `[0, 2 pi)`.
    pub fn from_samples(x: Vec<f64>, grid: Arc<ZGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != x.len() * grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                x.len() * grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite physical values".into()));
        }
        Ok(Self { x, grid, values })
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn grid(&self) -> &Arc<ZGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iz: usize) -> f64 {
        self.values[ix * self.grid.len() + iz]
    }

    /// Values along the wall `z = 0`.
    pub fn wall_trace(&self) -> Vec<f64> {
        (0..self.nx()).map(|ix| self.get(ix, 0)).collect()
    }

    fn check_uniform(&self) -> Result<()> {
        let n = self.x.len();
        let h = 2.0 * std::f64::consts::PI / n as f64;
        for (j, &x) in self.x.iter().enumerate() {
            if (x - j as f64 * h).abs() > 1e-12 {
                return Err(Error::NonUniformXGrid(format!(
                    "node {j} at {x}, expected {}",
                    j as f64 * h
                )));
            }
        }
        Ok(())
    }
}

pub fn uniform_x(nx: usize) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / nx as f64;
    (0..nx).map(|j| j as f64 * h).collect()
}

/// Fourier coefficients `f_alpha(z) = (1/2pi) int f(x, z) e^{-i alpha x} dx` for `|alpha| <= k`.
pub fn to_modes(f: &RealField, k: usize) -> Result<SpectralField> {
    let nx = f.nx();
    if nx < 2 * k + 1 {
        return Err(Error::NonUniformXGrid(format!(
            "{nx} points cannot resolve {k} modes (need {})",
            2 * k + 1
        )));
    }
    f.check_uniform()?;
    let nz = f.grid.len();
    let fft = FftPlanner::new().plan_fft_forward(nx);
    let mut out = SpectralField::zeros(f.grid.clone(), k);
    let mut buf = vec![C0; nx];
    let inv = 1.0 / nx as f64;
    for iz in 0..nz {
        for (ix, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(f.values[ix * nz + iz], 0.0);
        }
        fft.process(&mut buf);
        for alpha in 0..=k as i64 {
            let c = buf[alpha as usize] * inv;
            out.mode_mut(alpha)[iz] = c;
            if alpha > 0 {
                out.mode_mut(-alpha)[iz] = c.conj();
            } else {
                out.mode_mut(0)[iz] = Complex64::new(c.re, 0.0);
            }
        }
    }
    Ok(out)
}

/// Synthesis on a uniform grid of `nx` points (`nx >= 2K + 1`).
pub fn from_modes(w: &SpectralField, nx: usize) -> Result<RealField> {
    w.check_reality(1e-10)?;
    let k = w.k;
    if nx < 2 * k + 1 {
        return Err(Error::NonUniformXGrid(format!(
            "{nx} points cannot represent {k} modes"
        )));
    }
    let nz = w.grid.len();
    let fft = FftPlanner::new().plan_fft_inverse(nx);
    let mut values = vec![0.0; nx * nz];
    let mut buf = vec![C0; nx];
    for iz in 0..nz {
        buf.iter_mut().for_each(|b| *b = C0);
        buf[0] = Complex64::new(w.mode(0)[iz].re, 0.0);
        for alpha in 1..=k as i64 {
            let c = w.mode(alpha)[iz];
            buf[alpha as usize] += c;
            buf[nx - alpha as usize] += c.conj();
        }
        fft.process(&mut buf);
        for ix in 0..nx {
            values[ix * nz + iz] = buf[ix].re;
        }
    }
    Ok(RealField {
        x: uniform_x(nx),
        grid: w.grid.clone(),
        values,
    })
}

/// Smallest FFT-friendly grid size with at least `3K + 1` points (products stay alias-free).
pub fn dealiased_nx(k: usize) -> usize {
    let need = 3 * k + 1;
    let mut n = 1;
    while n < need {
        n *= 2;
    }
    n.max(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<ZGrid> {
        Arc::new(ZGrid::with_wall_cell(40.0, 120, 1e-2).unwrap())
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let f = RealField::from_fn(9, grid(), |_, _| 2.5);
        let w = to_modes(&f, 4).unwrap();
        for alpha in w.alphas() {
            for v in w.mode(alpha) {
                let expect = if alpha == 0 { 2.5 } else { 0.0 };
                assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn cosine_splits_into_pair() {
        let g = grid();
        let f = RealField::from_fn(16, g.clone(), |x, z| x.cos() * (-z).exp());
        let w = to_modes(&f, 5).unwrap();
        for (iz, &z) in g.nodes().iter().enumerate() {
            assert!((w.mode(1)[iz].re - 0.5 * (-z).exp()).abs() < 1e-14);
            assert!((w.mode(-1)[iz].re - 0.5 * (-z).exp()).abs() < 1e-14);
            assert!(w.mode(2)[iz].norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let g = grid();
        let mut x = uniform_x(8);
        x[3] += 0.01;
        let f = RealField::from_samples(x, g.clone(), vec![0.0; 8 * g.len()]).unwrap();
        assert!(matches!(to_modes(&f, 3), Err(Error::NonUniformXGrid(_))));
    }

    #[test]
    fn synthesis_rejects_non_real_modes() {
        let mut w = SpectralField::zeros(grid(), 2);
        w.mode_mut(1)[3] = Complex64::new(1.0, 0.0);
        assert!(matches!(from_modes(&w, 8), Err(Error::RealityViolated { .. })));
    }

    #[test]
    fn x_derivative_is_exact() {
        let g = grid();
        let mut w = SpectralField::zeros(g.clone(), 3);
        let v: Vec<Complex64> = g.nodes().iter().map(|&z| Complex64::new(z, 1.0)).collect();
        w.set_mode_pair(2, &v);
        let d = w.differentiate(Axis::X).unwrap();
        for (a, b) in d.mode(2).iter().zip(&v) {
            assert_eq!(*a, b * Complex64::new(0.0, 2.0));
        }
    }
}
