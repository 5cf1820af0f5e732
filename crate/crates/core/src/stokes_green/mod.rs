//! Stokes Green function `G_alpha = H_alpha + R_alpha` for the slip problem.

mod cache;
mod contour;
mod resolvent;
mod table;

use num_complex::Complex64;

pub use cache::{load_table, store_table, TableKey, CACHE_VERSION};
pub use contour::{hyperbola_nodes, analytic_nodes, ContourFamily, ContourNode, ContourSpec, HYPERBOLA_PHI};
pub use resolvent::{
    mu_branch, pole_denominator, pole_numerator, residual_coefficient_by_solve, resolvent_kernel,
    temporal_heat_kernel, temporal_residual_closed_form, ResolventQuery,
};
pub use table::{build_kernel_table, KernelSet, KernelTable, TimeKernel};

use crate::error::{Error, Result};
use resolvent::{e1, parts};

/// `e^{lambda t} R_lambda(z, y)` with all exponentials merged before evaluation,
/// so contours with large `Re lambda t` do not overflow.
fn weighted_residual(q: &ResolventQuery, t: f64, z: f64, y: f64) -> Result<Complex64> {
    let p = parts(q)?;
    let a = q.alpha.unsigned_abs() as f64;
    let mu = p.mu;
    let lt = q.lambda * t;
    let x = p.eps * y;
    let wall = if x.norm() < 0.5 {
        (lt - mu * z - a * y).exp() * (a * y * e1(x) + 1.0)
    } else {
        (lt - mu * z - a * y).exp() * (a / p.eps + 1.0) - (lt - mu * (z + y)).exp() * (a / p.eps)
    } / q.nu;
    let mirror = (a + mu) * q.nu.powf(q.beta - 1.0) * (lt - mu * (z + y)).exp();
    Ok(-p.pref * (wall + mirror))
}

fn contour_sum(
    t: f64,
    nu: f64,
    beta: f64,
    alpha: i64,
    z: f64,
    y: f64,
    spec: &ContourSpec,
) -> Result<f64> {
    let a = alpha.unsigned_abs() as f64;
    let nodes = match spec.family {
        ContourFamily::Production => {
            let mut nodes = hyperbola_nodes(t, spec)?;
            for n in nodes.iter_mut() {
                n.lambda -= a * a * nu;
            }
            nodes
        }
        _ => analytic_nodes(t, nu, alpha, z, y, spec)?,
    };
    let mut acc = 0.0;
    for n in &nodes {
        let q = ResolventQuery::new(n.lambda, alpha, nu, beta);
        acc += (n.weight * weighted_residual(&q, t, z, y)?).re;
    }
    Ok(2.0 * acc)
}

/// Largest number of node doublings tried before giving up.
const MAX_DOUBLINGS: usize = 5;

/// `R_alpha(t, z, y) = (1/2 pi i) int_Gamma e^{lambda t} R_lambda(z, y) d lambda`,
/// with the node count doubled until two successive values agree to `1e-9`.
pub fn temporal_residual_kernel(
    t: f64,
    nu: f64,
    beta: f64,
    alpha: i64,
    z: f64,
    y: f64,
    contour: &ContourSpec,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let scale = 1.0 / (std::f64::consts::PI * nu * t).sqrt();
    let mut spec = *contour;
    let mut prev = contour_sum(t, nu, beta, alpha, z, y, &spec)?;
    let mut diff = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        spec.n_nodes *= 2;
        let next = contour_sum(t, nu, beta, alpha, z, y, &spec)?;
        diff = (next - prev).abs();
        if diff <= 1e-9 * next.abs() || diff <= 1e-13 * scale {
            return Ok(next);
        }
        prev = next;
    }
    if diff <= 1e-8 * scale {
        return Ok(prev);
    }
    Err(Error::NotConverged {
        what: "contour quadrature",
        estimate: diff / scale,
        tolerance: 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_contour_matches_closed_form() {
        for &(t, nu, beta, alpha, z, y) in &[
            (1.0, 1e-2, 1.0, 0, 0.0, 0.0),
            (0.5, 1e-3, 1.0, 3, 0.01, 0.02),
            (0.1, 1e-4, 0.0, 16, 0.002, 0.0),
            (1.0, 1e-2, 0.5, 64, 0.05, 0.1),
            (1e-3, 1e-5, 1.0, 1, 0.0, 1e-4),
        ] {
            let exact = temporal_residual_closed_form(t, nu, beta, alpha, z, y).unwrap();
            let got = temporal_residual_kernel(t, nu, beta, alpha, z, y, &ContourSpec::production()).unwrap();
            let scale = 1.0 / (nu * t).sqrt();
            assert!((got - exact).abs() < 1e-9 * scale, "t={t} nu={nu} a={alpha}: {got} vs {exact}");
        }
    }

    #[test]
    fn analytic_contours_match_closed_form() {
        let cases = [
            (ContourFamily::GammaPmC, 0.5, 1e-2, 2, 0.05, 0.08),
            (ContourFamily::Gamma1, 1.0, 1e-2, 12, 0.05, 0.02),
            (ContourFamily::Gamma2, 0.05, 1e-2, 12, 0.012, 0.01),
        ];
        for &(family, t, nu, alpha, z, y) in &cases {
            let exact = temporal_residual_closed_form(t, nu, 1.0, alpha, z, y).unwrap();
            let got = temporal_residual_kernel(t, nu, 1.0, alpha, z, y, &ContourSpec::analytic(family)).unwrap();
            assert!((got - exact).abs() < 1e-8 * exact.abs().max(1e-3), "{family:?}: {got} vs {exact}");
        }
    }
}
