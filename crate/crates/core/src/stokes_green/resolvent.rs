//! Resolvent kernels of `lambda - nu Delta_alpha` with the nonlocal slip condition
//! `nu^beta G(0, y) + int_0^inf e^{-|alpha| z} G(z, y) dz = 0`, and the closed-form
//! temporal kernels used as independent references.

use errorfunctions::RealErrorFunctions;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Frequency, mode and physical parameters of one resolvent evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventQuery {
    pub lambda: Complex64,
    pub alpha: i64,
    pub nu: f64,
    /// Slip length is `nu^beta`; `beta = 1` is the critical case.
    pub beta: f64,
}

impl ResolventQuery {
    pub fn new(lambda: Complex64, alpha: i64, nu: f64, beta: f64) -> Self {
        Self {
            lambda,
            alpha,
            nu,
            beta,
        }
    }

    fn a(&self) -> f64 {
        self.alpha.unsigned_abs() as f64
    }

    fn cut_tip(&self) -> f64 {
        -self.a() * self.a() * self.nu
    }
}

/// `mu = sqrt(lambda / nu + alpha^2)` on the principal branch (`Re mu > 0`).
pub fn mu_branch(q: &ResolventQuery) -> Result<Complex64> {
    if !(q.nu > 0.0) {
        return Err(Error::InvalidInput(format!("viscosity must be positive, got {}", q.nu)));
    }
    let arg = q.lambda / q.nu + q.a() * q.a();
    // On the cut the argument is real and non-positive, so Re mu would vanish.
    if arg.im == 0.0 && arg.re <= 0.0 {
        return Err(Error::BranchCut {
            re: q.lambda.re,
            im: q.lambda.im,
            cut_tip: q.cut_tip(),
        });
    }
    let mu = arg.sqrt();
    if !(mu.re > 0.0) {
        return Err(Error::BranchCut {
            re: q.lambda.re,
            im: q.lambda.im,
            cut_tip: q.cut_tip(),
        });
    }
    Ok(mu)
}

/// `(1 - e^{-x}) / x`, accurate near `x = 0`.
pub(crate) fn e1(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..22 {
            term *= -x / k as f64;
            sum += term;
        }
        sum
    } else {
        (1.0 - (-x).exp()) / x
    }
}

/// Pieces shared by the pointwise and factorized residual evaluations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ResolventParts {
    pub mu: Complex64,
    /// `mu - a`, computed without cancellation.
    pub eps: Complex64,
    /// `1 / (mu (nu^beta (a + mu) + 1))`.
    pub pref: Complex64,
}

pub(crate) fn parts(q: &ResolventQuery) -> Result<ResolventParts> {
    let mu = mu_branch(q)?;
    let a = q.a();
    let eps = (q.lambda / q.nu) / (mu + a);
    let denom = q.nu.powf(q.beta) * (a + mu) + 1.0;
    Ok(ResolventParts {
        mu,
        eps,
        pref: 1.0 / (mu * denom),
    })
}

/// `a y e^{-a y} E1(eps y)` without overflow for large `|eps y|`.
fn layer_term(a: f64, y: f64, mu: Complex64, eps: Complex64) -> Complex64 {
    let x = eps * y;
    if x.norm() < 0.5 {
        a * y * (-a * y).exp() * e1(x)
    } else {
        a / eps * ((-a * y).exp() - (-mu * y).exp())
    }
}

/// `R_lambda(z, y)` in the pole-free form
/// `-e^{-mu z} / (mu (nu^beta (a+mu) + 1)) [ e^{-a y} (a y E1((mu-a) y) + 1) / nu + (a+mu) nu^{beta-1} e^{-mu y} ]`.
pub(crate) fn residual_stable(q: &ResolventQuery, p: &ResolventParts, z: f64, y: f64) -> Complex64 {
    let a = q.a();
    let mu = p.mu;
    let wall = (layer_term(a, y, mu, p.eps) + (-a * y).exp()) / q.nu;
    let mirror = (a + mu) * q.nu.powf(q.beta - 1.0) * (-mu * y).exp();
    -(-mu * z).exp() * p.pref * (wall + mirror)
}

/// Heat part `H_lambda(z, y) = (e^{-mu|y-z|} + e^{-mu(y+z)}) / (2 mu nu)`.
pub(crate) fn heat_resolvent(q: &ResolventQuery, mu: Complex64, z: f64, y: f64) -> Complex64 {
    ((-mu * (y - z).abs()).exp() + (-mu * (y + z)).exp()) / (2.0 * mu * q.nu)
}

/// Resolvent kernel `(H_lambda, R_lambda)` at `(z, y)`.
pub fn resolvent_kernel(q: &ResolventQuery, z: f64, y: f64) -> Result<(Complex64, Complex64)> {
    if z < 0.0 || y < 0.0 {
        return Err(Error::InvalidInput(format!("z = {z}, y = {y} must be non-negative")));
    }
    let p = parts(q)?;
    Ok((heat_resolvent(q, p.mu, z, y), residual_stable(q, &p, z, y)))
}

/// Denominator `D = lambda nu^{beta-1} + mu - a` of the combined fraction
/// `R = [((a - lambda nu^{beta-1}) / mu) e^{-mu(y+z)} - e^{-a y - mu z}] / (nu D)`.
/// At `beta = 1` it is `lambda + mu - alpha`.
pub fn pole_denominator(q: &ResolventQuery) -> Result<Complex64> {
    let p = parts(q)?;
    Ok(q.lambda * q.nu.powf(q.beta - 1.0) + p.eps)
}

/// `D * R_lambda(z, y)`: the numerator of the combined fraction, which vanishes
/// at `lambda = 0` together with `D`.
pub fn pole_numerator(q: &ResolventQuery, z: f64, y: f64) -> Result<Complex64> {
    let p = parts(q)?;
    let a = q.a();
    let mu = p.mu;
    // (a/mu) e^{-mu y} - e^{-a y} = -(eps e^{-a y} / mu) (a y E1(eps y) + 1)
    let base = if (p.eps * y).norm() < 0.5 {
        -(p.eps * (-a * y).exp() / mu) * (a * y * e1(p.eps * y) + 1.0)
    } else {
        (a / mu) * (-mu * y).exp() - (-a * y).exp()
    };
    let slip = q.lambda * q.nu.powf(q.beta - 1.0) / mu * (-mu * y).exp();
    Ok((-mu * z).exp() * (base - slip) / q.nu)
}

/// Coefficient `c(y)` of `R_lambda = c(y) e^{-mu z}` obtained by solving the
/// continuity, jump and boundary conditions as a linear system instead of
/// using the closed form. Used as a cross-check.
pub fn residual_coefficient_by_solve(q: &ResolventQuery, y: f64) -> Result<Complex64> {
    let p = parts(q)?;
    let (a, mu, nb) = (q.a(), p.mu, q.nu.powf(q.beta));
    // z < y: G = A e^{-mu z} + Bt e^{mu (z - y)}; z > y: G = Ct e^{-mu (z - y)}.
    // The jump of -nu G' at y fixes Bt = 1 / (2 nu mu).
    let bt = 1.0 / (2.0 * q.nu * mu);
    let emy = (-mu * y).exp();
    let eay = (-a * y).exp();
    // int_0^y e^{-a z} e^{mu (z - y)} dz = (e^{-a y} - e^{-mu y}) / (mu - a)
    let inner = y * eay * e1(p.eps * y);
    // rows: continuity A e^{-mu y} + Bt - Ct = 0;
    //       BC nu^b (A + Bt e^{-mu y}) + A (1 - e^{-(a+mu) y})/(a+mu) + Bt inner + Ct e^{-a y}/(a+mu) = 0
    let m11 = emy;
    let m12 = Complex64::new(-1.0, 0.0);
    let r1 = -bt;
    let m21 = nb + (1.0 - (-(a + mu) * y).exp()) / (a + mu);
    let m22 = eay / (a + mu);
    let r2 = -bt * (nb * emy + inner);
    let det = m11 * m22 - m12 * m21;
    if det.norm() < 1e-300 {
        return Err(Error::Singular("resolvent coefficient system"));
    }
    let coef_a = (r1 * m22 - m12 * r2) / det;
    Ok(coef_a - bt * emy)
}

/// `H_alpha(t, z, y) = (4 pi nu t)^{-1/2} (e^{-(y-z)^2/4nu t} + e^{-(y+z)^2/4nu t}) e^{-alpha^2 nu t}`.
pub fn temporal_heat_kernel(t: f64, nu: f64, alpha: i64, z: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let tau = nu * t;
    let a = alpha.unsigned_abs() as f64;
    let g = |d: f64| (-d * d / (4.0 * tau) - a * a * tau).exp();
    Ok((g(y - z) + g(y + z)) / (4.0 * std::f64::consts::PI * tau).sqrt())
}

/// `e^{-a^2 tau} e^{-k^2/4tau} [ (pi tau)^{-1/2} - h erfcx(k/(2 sqrt tau) + h sqrt tau) ]`,
/// the inverse transform of `e^{-mu k} / (mu + h)` up to the factor `nu`.
fn j_term(k: f64, h: f64, tau: f64, a: f64) -> f64 {
    let s = tau.sqrt();
    let gauss = (-k * k / (4.0 * tau) - a * a * tau).exp() / (std::f64::consts::PI * tau).sqrt();
    if h == 0.0 {
        return gauss;
    }
    let x = k / (2.0 * s) + h * s;
    if x >= 0.0 {
        gauss - h * (-k * k / (4.0 * tau) - a * a * tau).exp() * x.erfcx()
    } else {
        gauss - h * (h * k + (h * h - a * a) * tau).exp() * RealErrorFunctions::erfc(x)
    }
}

/// Closed-form temporal residual kernel, exact to rounding in the far tails.
///
/// With `tau = nu t`, `b = a + nu^{-beta}`, `S = y + z`:
/// `R = nu^{-beta} e^{-a^2 tau} [A0 J(S,0) + (J(S,-a) - J(S,b))/(a+b) - e^{-a y}(J(z,-a) - J(z,b))/(a+b)]`
/// with `A0 = -(1 + nu^beta a)/b`. Independent of any contour quadrature.
pub fn temporal_residual_closed_form(
    t: f64,
    nu: f64,
    beta: f64,
    alpha: i64,
    z: f64,
    y: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let tau = nu * t;
    let a = alpha.unsigned_abs() as f64;
    let nb = nu.powf(beta);
    let b = a + 1.0 / nb;
    let s = y + z;
    let a0 = -(1.0 + nb * a) / b;
    let mirror = a0 * j_term(s, 0.0, tau, a) + (j_term(s, -a, tau, a) - j_term(s, b, tau, a)) / (a + b);
    let wall = (-a * y).exp() * (j_term(z, -a, tau, a) - j_term(z, b, tau, a)) / (a + b);
    Ok((mirror - wall) / nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(lambda: Complex64, alpha: i64) -> ResolventQuery {
        ResolventQuery::new(lambda, alpha, 1e-2, 1.0)
    }

    #[test]
    fn mu_at_zero_frequency_is_alpha() {
        let mu = mu_branch(&q(Complex64::new(0.0, 0.0), 3)).unwrap();
        assert!((mu - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_on_shifted_unit() {
        let nu = 1e-2;
        let lambda = Complex64::new(-9.0 * nu + 1.0, 0.0);
        let mu = mu_branch(&q(lambda, 3)).unwrap();
        assert!((mu.re - nu.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn cut_is_rejected() {
        let lambda = Complex64::new(-1.0, 0.0);
        assert!(matches!(mu_branch(&q(lambda, 1)), Err(Error::BranchCut { .. })));
    }

    #[test]
    fn heat_part_at_origin() {
        let query = q(Complex64::new(0.3, 0.7), 2);
        let mu = mu_branch(&query).unwrap();
        let (h, _) = resolvent_kernel(&query, 0.0, 0.0).unwrap();
        assert!((h - 1.0 / (mu * query.nu)).norm() < 1e-12 * h.norm());
    }

    #[test]
    fn closed_form_at_critical_slip() {
        // (1/(mu nu)) (a - lambda)/(lambda + mu - a) e^{-mu(y+z)} - e^{-a y - mu z}/(nu (lambda + mu - a))
        let nu = 1e-2;
        for &(lr, li, alpha, z, y) in &[
            (0.5, 2.0, 1, 0.1, 0.2),
            (-0.01, 0.3, 4, 0.0, 0.05),
            (3.0, -1.0, 16, 0.02, 0.0),
        ] {
            let lambda = Complex64::new(lr, li);
            let query = ResolventQuery::new(lambda, alpha, nu, 1.0);
            let mu = mu_branch(&query).unwrap();
            let a = alpha as f64;
            let d = lambda + mu - a;
            let expected = (a - lambda) / (mu * nu * d) * (-mu * (y + z)).exp()
                - (-a * y - mu * z).exp() / (nu * d);
            let (_, r) = resolvent_kernel(&query, z, y).unwrap();
            assert!((r - expected).norm() < 1e-11 * expected.norm(), "{r} vs {expected}");
        }
    }

    #[test]
    fn coefficient_solve_matches_closed_form() {
        for &beta in &[0.0, 0.5, 1.0] {
            for &(lr, li, alpha, y) in &[(0.5, 2.0, 1, 0.2), (-0.01, 0.3, 4, 0.05), (3.0, -1.0, 0, 0.7)] {
                let query = ResolventQuery::new(Complex64::new(lr, li), alpha, 1e-2, beta);
                let c = residual_coefficient_by_solve(&query, y).unwrap();
                let (_, r) = resolvent_kernel(&query, 0.0, y).unwrap();
                assert!((c - r).norm() < 1e-12 * r.norm().max(1.0), "beta={beta}: {c} vs {r}");
            }
        }
    }

    #[test]
    fn heat_kernel_normalization() {
        let tau = 1.0 / (4.0 * std::f64::consts::PI);
        let h = temporal_heat_kernel(tau / 1e-2, 1e-2, 0, 0.0, 0.0).unwrap();
        assert!((h - 2.0).abs() < 1e-14);
        assert!(matches!(temporal_heat_kernel(0.0, 1.0, 0, 0.0, 0.0), Err(Error::NonPositiveTime(_))));
    }
}
