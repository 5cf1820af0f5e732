//! Method-of-lines oracle for the forced Stokes problem.
//!
//! Per mode, `d_t omega = nu (D2 - alpha^2) omega + f` on the z-grid with the
//! nonlocal wall condition as the first row and `omega(L) = 0` as the last.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ZGrid;
use crate::semigroup::{StokesProblem, StokesSolution};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    Trapezoidal,
}

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
struct Lu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        let mut piv = vec![0; n];
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .expect("nonempty range");
            if a[p * n + k].abs() <= 1e-14 * scale {
                return Err(Error::Singular("method-of-lines step matrix"));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                if l == 0.0 {
                    continue;
                }
                a[i * n + k] = l;
                for j in k + 1..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
            }
        }
        Ok(Self { n, a, piv })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[i * n + j] * b[j]).sum();
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[i * n + j] * b[j]).sum();
            b[i] = (b[i] - s) / self.a[i * n + i];
        }
    }

    fn solve_complex(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut re: Vec<f64> = b.iter().map(|v| v.re).collect();
        let mut im: Vec<f64> = b.iter().map(|v| v.im).collect();
        self.solve(&mut re);
        self.solve(&mut im);
        re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect()
    }
}

/// Semi-discrete operator of one mode.
#[derive(Debug, Clone)]
pub struct MolSystem {
    alpha: i64,
    /// Banded rows of `nu (D2 - alpha^2)`: `(first column, weights)`.
    rows: Vec<(usize, Vec<f64>)>,
    /// `nu^beta e_0 + exponential moments`.
    constraint: Vec<f64>,
}

impl MolSystem {
    pub fn new(grid: &ZGrid, nu: f64, beta: f64, alpha: i64) -> Self {
        let a2 = (alpha * alpha) as f64;
        let rows = (0..grid.len())
            .map(|i| {
                let (start, w) = grid.d2_stencil(i);
                let mut w: Vec<f64> = w.iter().map(|x| nu * x).collect();
                w[i - start] -= nu * a2;
                (start, w)
            })
            .collect();
        let mut constraint = grid.exp_moments_real(alpha.unsigned_abs() as f64);
        constraint[0] += nu.powf(beta);
        Self {
            alpha,
            rows,
            constraint,
        }
    }

    pub fn alpha(&self) -> i64 {
        self.alpha
    }

    /// `nu^beta omega(0) + int e^{-|alpha| z} omega dz` as the discrete row sees it.
    pub fn constraint_residual(&self, omega: &[Complex64]) -> Complex64 {
        self.constraint.iter().zip(omega).map(|(c, v)| v * *c).sum()
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|(s, w)| w.iter().zip(&v[*s..]).map(|(c, x)| x * *c).sum())
            .collect()
    }

    /// `I - theta dt A` with the boundary rows replaced.
    fn step_matrix(&self, theta_dt: f64) -> Result<Lu> {
        let n = self.rows.len();
        let mut m = vec![0.0; n * n];
        for (i, (s, w)) in self.rows.iter().enumerate().take(n - 1).skip(1) {
            for (j, c) in w.iter().enumerate() {
                m[i * n + s + j] -= theta_dt * c;
            }
            m[i * n + i] += 1.0;
        }
        m[..n].copy_from_slice(&self.constraint);
        m[(n - 1) * n + n - 1] = 1.0;
        Lu::factor(n, m)
    }

    fn rhs(
        &self,
        v: &[Complex64],
        explicit_dt: f64,
        f_dt: Option<(&[Complex64], f64)>,
        f2_dt: Option<(&[Complex64], f64)>,
    ) -> Vec<Complex64> {
        let mut b = v.to_vec();
        if explicit_dt != 0.0 {
            for (bi, ai) in b.iter_mut().zip(self.apply(v)) {
                *bi += ai * explicit_dt;
            }
        }
        for (f, c) in [f_dt, f2_dt].into_iter().flatten() {
            for (bi, fi) in b.iter_mut().zip(f) {
                *bi += fi * c;
            }
        }
        let n = b.len();
        b[0] = Complex64::new(0.0, 0.0);
        b[n - 1] = Complex64::new(0.0, 0.0);
        b
    }
}

fn mode_forcing(p: &StokesProblem<'_>, t: f64, alpha: i64) -> Result<Option<Vec<Complex64>>> {
    match p.forcing {
        Some(f) => Ok(Some(f(t)?.mode(alpha).to_vec())),
        None => Ok(None),
    }
}

struct Stepper<'s> {
    sys: &'s MolSystem,
    cached: Option<(u64, Scheme, Lu)>,
}

impl Stepper<'_> {
    fn lu(&mut self, dt: f64, scheme: Scheme) -> Result<&Lu> {
        let fresh = match &self.cached {
            Some((bits, s, _)) => *bits != dt.to_bits() || *s != scheme,
            None => true,
        };
        if fresh {
            let theta = if scheme == Scheme::Trapezoidal { 0.5 } else { 1.0 };
            self.cached = Some((dt.to_bits(), scheme, self.sys.step_matrix(theta * dt)?));
        }
        Ok(&self.cached.as_ref().expect("just filled").2)
    }

    fn step(&mut self, p: &StokesProblem<'_>, v: &[Complex64], t: f64, dt: f64, scheme: Scheme) -> Result<Vec<Complex64>> {
        let alpha = self.sys.alpha;
        let f1 = mode_forcing(p, t + dt, alpha)?;
        let b = match scheme {
            Scheme::ImplicitEuler => self.sys.rhs(v, 0.0, f1.as_deref().map(|f| (f, dt)), None),
            Scheme::Trapezoidal => {
                let f0 = mode_forcing(p, t, alpha)?;
                self.sys.rhs(
                    v,
                    0.5 * dt,
                    f0.as_deref().map(|f| (f, 0.5 * dt)),
                    f1.as_deref().map(|f| (f, 0.5 * dt)),
                )
            }
        };
        Ok(self.lu(dt, scheme)?.solve_complex(&b))
    }
}

/// Time-steps every mode to the requested output times.
///
/// Trapezoidal runs start with four implicit-Euler quarter steps (Rannacher
/// start-up) so the wall-layer transient of data violating the boundary
/// condition is damped.
pub fn solve_stokes_direct(p: &StokesProblem<'_>, scheme: Scheme, dt: f64) -> Result<StokesSolution> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
    }
    let grid = p.omega0.grid().clone();
    let k = p.omega0.max_mode();
    let mut fields = vec![SpectralField::zeros(grid.clone(), k); p.times.len()];
    for alpha in 0..=k as i64 {
        let sys = MolSystem::new(&grid, p.nu, p.beta, alpha);
        let mut stepper = Stepper { sys: &sys, cached: None };
        let mut v = p.omega0.mode(alpha).to_vec();
        let mut t = 0.0;
        let mut started = false;
        for (slot, &target) in p.times.iter().enumerate() {
            if target < t {
                return Err(Error::InvalidInput("output times must be increasing".into()));
            }
            let span = target - t;
            if span > 0.0 {
                let steps = (span / dt).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for s in 0..steps {
                    let tn = t + s as f64 * h;
                    if scheme == Scheme::Trapezoidal && !started {
                        for q in 0..4 {
                            v = stepper.step(p, &v, tn + q as f64 * 0.25 * h, 0.25 * h, Scheme::ImplicitEuler)?;
                        }
                        started = true;
                    } else {
                        v = stepper.step(p, &v, tn, h, scheme)?;
                    }
                }
                t = target;
            }
            fields[slot].set_mode_pair(alpha, &v);
        }
    }
    Ok(StokesSolution {
        times: p.times.clone(),
        fields,
        panels: vec![0; p.times.len()],
        quadrature_change: vec![0.0; p.times.len()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::sync::Arc;

    #[test]
    fn lu_solves_a_small_system() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = Lu::factor(3, a.clone()).unwrap();
        let mut b = vec![3.0, 2.0, 4.0];
        lu.solve(&mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * b[j]).sum();
            assert!((r - [3.0, 2.0, 4.0][i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Arc::new(GridSpec::default().build(1e-3).unwrap());
        let p = StokesProblem {
            omega0: SpectralField::zeros(g, 2),
            forcing: None,
            nu: 1e-3,
            beta: 1.0,
            times: vec![0.1, 0.2],
        };
        let sol = solve_stokes_direct(&p, Scheme::Trapezoidal, 0.01).unwrap();
        assert!(sol.fields.iter().all(|f| f.is_zero()));
    }

    #[test]
    fn constraint_row_holds_every_step() {
        let nu = 1e-3;
        let g = Arc::new(GridSpec::default().build(nu).unwrap());
        let w = SpectralField::shear(g.clone(), 0, |z| (-z).exp());
        let p = StokesProblem {
            omega0: w,
            forcing: None,
            nu,
            beta: 1.0,
            times: vec![0.01, 0.02, 0.05],
        };
        let sol = solve_stokes_direct(&p, Scheme::Trapezoidal, 0.005).unwrap();
        let sys = MolSystem::new(&g, nu, 1.0, 0);
        for f in &sol.fields {
            assert!(sys.constraint_residual(f.mode(0)).norm() < 1e-12 * f.mode_l1(0).max(1.0));
        }
    }
}
