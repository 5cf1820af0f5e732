//! Velocity from vorticity through the Dirichlet stream function.
//!
//! Per mode, `Delta_alpha phi = omega` with `phi(0) = 0` and decay at infinity.
//! With `a = |alpha|` the solution splits into the one-sided convolutions
//! `Left(z) = int_0^z e^{-a(z-y)} omega` and `Right(z) = int_z^L e^{-a(y-z)} omega`,
//! both swept by exact recurrences over the cells of the grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ZGrid;
use crate::spectral::SpectralField;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Velocity components as spectral fields.
#[derive(Debug, Clone)]
pub struct VelocityPair {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

struct Sweeps {
    left: Vec<Complex64>,
    right: Vec<Complex64>,
    /// `int_0^L e^{-a y} omega(y) dy`.
    moment: Complex64,
}

fn sweeps(grid: &ZGrid, omega: &[Complex64], a: f64) -> Sweeps {
    let n = grid.len();
    let mut left = vec![C0; n];
    let mut right = vec![C0; n];
    for c in 0..grid.cell_count() {
        let (lo, hi) = grid.cell_bounds(c);
        let decay = (-a * (hi - lo)).exp();
        let (s, w) = grid.cell_exp_weights(c, a, true);
        let cell: Complex64 = w.iter().enumerate().map(|(m, wm)| omega[s + m] * *wm).sum();
        left[c + 1] = left[c] * decay + cell;
    }
    for c in (0..grid.cell_count()).rev() {
        let (lo, hi) = grid.cell_bounds(c);
        let decay = (-a * (hi - lo)).exp();
        let (s, w) = grid.cell_exp_weights(c, a, false);
        let cell: Complex64 = w.iter().enumerate().map(|(m, wm)| omega[s + m] * *wm).sum();
        right[c] = right[c + 1] * decay + cell;
    }
    let moment = right[0];
    Sweeps {
        left,
        right,
        moment,
    }
}

fn check_decay(omega: &[Complex64]) -> Result<()> {
    let max = omega.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = omega.last().map_or(0.0, |v| v.norm());
    if tail > 1e-8 * max {
        return Err(Error::InvalidInput(format!(
            "vorticity does not decay at the grid end: |omega(L)| = {tail:e}, max {max:e}"
        )));
    }
    Ok(())
}

/// `phi_alpha(z) = (1/2a) int_0^L (e^{-a(y+z)} - e^{-a|y-z|}) omega(y) dy`, `a = |alpha|`.
pub fn stream_function(grid: &ZGrid, omega: &[Complex64], alpha: i64) -> Result<Vec<Complex64>> {
    if alpha == 0 {
        return Err(Error::ZeroMode);
    }
    check_decay(omega)?;
    let a = alpha.unsigned_abs() as f64;
    let sw = sweeps(grid, omega, a);
    let mut phi: Vec<Complex64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &z)| (sw.moment * (-a * z).exp() - sw.left[i] - sw.right[i]) / (2.0 * a))
        .collect();
    phi[0] = C0;
    Ok(phi)
}

/// `u1_alpha = d phi_alpha / dz` from the differentiated kernel; `u1_0 = -int_z^L omega_0`.
pub fn mode_u1(grid: &ZGrid, omega: &[Complex64], alpha: i64) -> Vec<Complex64> {
    let a = alpha.unsigned_abs() as f64;
    let sw = sweeps(grid, omega, a);
    if alpha == 0 {
        return sw.right.iter().map(|r| -r).collect();
    }
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(i, &z)| 0.5 * (-sw.moment * (-a * z).exp() + sw.left[i] - sw.right[i]))
        .collect()
}

/// `u1_alpha(0) = -int_0^L e^{-|alpha| y} omega_alpha(y) dy`.
pub fn boundary_trace_u1(grid: &ZGrid, omega: &[Complex64], alpha: i64) -> Complex64 {
    let a = alpha.unsigned_abs() as f64;
    let m = grid.exp_moments_real(a);
    -m.iter().zip(omega).map(|(w, v)| v * *w).sum::<Complex64>()
}

/// Velocity of a real vorticity field (`u2_alpha = -i alpha phi_alpha`, `u2_0 = 0`).
pub fn velocity_from_vorticity(w: &SpectralField) -> Result<VelocityPair> {
    w.check_reality(1e-10)?;
    let grid = w.grid().clone();
    let u1 = w.map_modes(|alpha, om| Ok(mode_u1(&grid, om, alpha)))?;
    let u2 = w.map_modes(|alpha, om| {
        if alpha == 0 {
            return Ok(vec![C0; om.len()]);
        }
        let phi = stream_function(&grid, om, alpha)?;
        let f = Complex64::new(0.0, -(alpha as f64));
        Ok(phi.into_iter().map(|p| p * f).collect())
    })?;
    Ok(VelocityPair { u1, u2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> ZGrid {
        GridSpec::default().build(1e-3).unwrap()
    }

    fn sample(g: &ZGrid, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        g.nodes().iter().map(|&z| Complex64::new(f(z), 0.0)).collect()
    }

    #[test]
    fn zero_vorticity_gives_zero_stream_function() {
        let g = grid();
        let phi = stream_function(&g, &vec![C0; g.len()], 3).unwrap();
        assert!(phi.iter().all(|p| *p == C0));
    }

    #[test]
    fn zero_mode_is_rejected() {
        let g = grid();
        assert!(matches!(stream_function(&g, &vec![C0; g.len()], 0), Err(Error::ZeroMode)));
    }

    #[test]
    fn exponential_profile_closed_form() {
        // (d^2 - 1) phi = e^{-z}, phi(0) = 0: phi = -(z/2) e^{-z}.
        let g = grid();
        let om = sample(&g, |z| (-z).exp());
        let phi = stream_function(&g, &om, 1).unwrap();
        let u1 = mode_u1(&g, &om, 1);
        for (i, &z) in g.nodes().iter().enumerate() {
            assert!((phi[i].re + 0.5 * z * (-z).exp()).abs() < 1e-9, "z={z}");
            let du = -0.5 * (-z).exp() + 0.5 * z * (-z).exp();
            assert!((u1[i].re - du).abs() < 1e-9, "z={z}");
        }
        assert!((boundary_trace_u1(&g, &om, 1).re + 0.5).abs() < 1e-10);
        assert!((boundary_trace_u1(&g, &om, -1) - u1[0]).norm() < 1e-12);
    }

    #[test]
    fn narrow_layer_with_high_mode() {
        // omega = e^{-z/d}: phi(z) = d^2 (e^{-z/d} - e^{-a z}) / (1 - a^2 d^2).
        let g = grid();
        let (d, a) = (0.01_f64, 16.0_f64);
        let om = sample(&g, |z| (-z / d).exp());
        let phi = stream_function(&g, &om, 16).unwrap();
        for (i, &z) in g.nodes().iter().enumerate() {
            let exact = d * d * ((-z / d).exp() - (-a * z).exp()) / (1.0 - a * a * d * d);
            assert!((phi[i].re - exact).abs() < 1e-5 * d * d, "z={z}");
        }
    }
}
