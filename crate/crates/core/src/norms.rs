//! Boundary-layer weighted and analytic norms, evaluated on real `z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ZGrid;
use crate::spectral::SpectralField;

/// Parameters of the weighted norms.
///
/// `sigma` is carried as metadata only: suprema are taken over the real grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub rho: f64,
    pub sigma: f64,
    pub beta0: f64,
    pub p: f64,
    pub delta: f64,
    pub delta_t: f64,
}

impl NormParams {
    /// `beta0 = 1/4`, `P = 2`, `rho = 1/2`, `delta = sqrt(nu)`, `delta_t = sqrt(nu t)`.
    pub fn new(nu: f64, t: f64) -> Self {
        Self {
            rho: 0.5,
            sigma: 0.0,
            beta0: 0.25,
            p: 2.0,
            delta: nu.sqrt(),
            delta_t: (nu * t).max(0.0).sqrt(),
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0) || !(self.p > 1.0) || !(self.delta >= 0.0) || !(self.delta_t >= 0.0) || !(self.rho >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid norm parameters {self:?}")));
        }
        Ok(())
    }
}

fn phi(x: f64, p: f64) -> f64 {
    1.0 / (1.0 + x.abs().powf(p))
}

/// `1 + delta_t^{-1} phi_P(z / delta_t) + delta^{-1} phi_P(z / delta)`; a zero scale drops its term.
pub fn bl_weight(z: f64, params: &NormParams) -> f64 {
    let mut w = 1.0;
    for d in [params.delta_t, params.delta] {
        if d > 0.0 {
            w += phi(z / d, params.p) / d;
        }
    }
    w
}

/// `max_i |f(z_i)| e^{beta0 z_i} / weight(z_i)`.
pub fn bl_norm(grid: &ZGrid, f: &[Complex64], params: &NormParams) -> f64 {
    grid.nodes()
        .iter()
        .zip(f)
        .map(|(&z, v)| v.norm() * (params.beta0 * z).exp() / bl_weight(z, params))
        .fold(0.0, f64::max)
}

/// `int_0^L e^{-beta0 z} weight(z) dz`: constant of the embedding of the boundary-layer norm into L1.
pub fn embedding_constant(grid: &ZGrid, params: &NormParams) -> f64 {
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&z| (-params.beta0 * z).exp() * bl_weight(z, params))
        .collect();
    grid.integrate(&vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    L1,
    Linf,
    Bl,
}

fn mode_norm(grid: &ZGrid, f: &[Complex64], params: &NormParams, flavor: Flavor) -> f64 {
    match flavor {
        Flavor::L1 => grid.l1_norm(f),
        Flavor::Linf => f.iter().map(|v| v.norm()).fold(0.0, f64::max),
        Flavor::Bl => bl_norm(grid, f, params),
    }
}

/// `sum_alpha e^{rho |alpha|} sum_{j + l <= k} || (i alpha)^j (psi d_z)^l f_alpha ||`, `psi = z / (1 + z)`.
pub fn analytic_norm(w: &SpectralField, params: &NormParams, flavor: Flavor, k: usize) -> Result<f64> {
    params.validate()?;
    let kmax = w.max_mode() as f64;
    if params.rho * kmax > 600.0 {
        return Err(Error::OverflowGuard(params.rho * kmax));
    }
    let grid = w.grid();
    let psi: Vec<f64> = grid.nodes().iter().map(|z| z / (1.0 + z)).collect();
    let mut total = 0.0;
    for alpha in w.alphas() {
        let mut derivs = vec![w.mode(alpha).to_vec()];
        for _ in 0..k {
            let d = grid.d1(derivs.last().expect("nonempty"));
            derivs.push(d.iter().zip(&psi).map(|(v, p)| v * *p).collect());
        }
        let a = alpha.unsigned_abs() as f64;
        let mut s = 0.0;
        for (l, f) in derivs.iter().enumerate() {
            let base = mode_norm(grid, f, params, flavor);
            for j in 0..=(k - l) {
                s += a.powi(j as i32) * base;
            }
        }
        total += (params.rho * a).exp() * s;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::sync::Arc;

    #[test]
    fn weight_examples() {
        let p = NormParams {
            rho: 0.0,
            sigma: 0.0,
            beta0: 0.25,
            p: 2.0,
            delta: 1e-2,
            delta_t: 0.0,
        };
        assert_eq!(bl_weight(1e-2, &p), 51.0);
        assert_eq!(bl_weight(0.0, &p), 101.0);
        assert!(bl_weight(1e6, &p) - 1.0 < 1e-9);
        let q = NormParams { delta_t: 1e-3, ..p };
        assert_eq!(bl_weight(0.0, &q), 1.0 + 1e3 + 1e2);
    }

    #[test]
    fn pure_exponential_has_norm_near_one() {
        let g = GridSpec::default().build(1e-3).unwrap();
        let p = NormParams::new(1e-3, 0.0);
        let f: Vec<Complex64> = g.nodes().iter().map(|&z| Complex64::new((-p.beta0 * z).exp(), 0.0)).collect();
        let n = bl_norm(&g, &f, &p);
        assert!((0.99..=1.0).contains(&n), "{n}");
    }

    #[test]
    fn single_mode_analytic_norm() {
        let g = Arc::new(GridSpec::default().build(1e-3).unwrap());
        let mut w = SpectralField::zeros(g.clone(), 4);
        let f: Vec<Complex64> = g.nodes().iter().map(|&z| Complex64::new((-z).exp(), 0.0)).collect();
        w.mode_mut(3).copy_from_slice(&f);
        let p = NormParams::new(1e-3, 0.1).with_rho(0.7);
        let m = g.l1_norm(&f);
        let n = analytic_norm(&w, &p, Flavor::L1, 0).unwrap();
        assert!((n - (0.7_f64 * 3.0).exp() * m).abs() < 1e-12 * n);
        let big = NormParams { rho: 200.0, ..p };
        assert!(matches!(analytic_norm(&w, &big, Flavor::L1, 0), Err(Error::OverflowGuard(_))));
    }
}
