//! Inverse-Laplace contours.
//!
//! Every family is symmetric under conjugation, so only the upper half is
//! stored and `(1/2 pi i) int e^{lambda t} F dlambda = 2 Re sum_k w_k e^{lambda_k t} F(lambda_k)`
//! for kernels `F` that are real on the real axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::gauss_legendre;

/// Contour families: the three analytic paths and the production hyperbola.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourFamily {
    /// Shifted parabolas `Gamma_+-` joined by the arc `Gamma_c` (`alpha^2 nu <= 1`).
    GammaPmC,
    /// `-nu alpha^2 + nu (A + i b)^2` (`alpha^2 nu >= 1`, `|A - alpha| >= alpha/2`).
    Gamma1,
    /// `-nu alpha^2 / 8 + nu (A + i b)^2` (`alpha^2 nu >= 1`, `|A - alpha| <= alpha/2`).
    Gamma2,
    /// Fixed hyperbola `lambda = m (1 + sin(i u - phi)) - alpha^2 nu`, `m = vertex / t`.
    Production,
}

impl ContourFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GammaPmC => "gamma_pm_c",
            Self::Gamma1 => "gamma1",
            Self::Gamma2 => "gamma2",
            Self::Production => "production",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gamma_pm_c" => Ok(Self::GammaPmC),
            "gamma1" => Ok(Self::Gamma1),
            "gamma2" => Ok(Self::Gamma2),
            "production" => Ok(Self::Production),
            other => Err(Error::Config(format!("unknown contour family '{other}'"))),
        }
    }
}

/// Hyperbola opening angle.
pub const HYPERBOLA_PHI: f64 = 1.1721;

/// Contour parameters. Zero-valued `vertex`, `radius`, `b_max` select automatic values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub family: ContourFamily,
    /// Analytic families: vertex `A` of `mu = A + i b`. Production: `m t`.
    pub vertex: f64,
    /// Arc radius `M` of `Gamma_c`.
    pub radius: f64,
    /// Truncation of `b` (analytic families) or of `u` (production).
    pub b_max: f64,
    /// Total node count over the full (conjugate-completed) contour.
    pub n_nodes: usize,
}

impl ContourSpec {
    pub fn production() -> Self {
        Self {
            family: ContourFamily::Production,
            vertex: 20.0,
            radius: 0.0,
            b_max: 1.9,
            n_nodes: 96,
        }
    }

    pub fn analytic(family: ContourFamily) -> Self {
        Self {
            family,
            vertex: 0.0,
            radius: 0.0,
            b_max: 0.0,
            n_nodes: 256,
        }
    }

    /// Case split: `Gamma_+- u Gamma_c` for `alpha^2 nu <= 1`,
    /// otherwise `Gamma_1` or `Gamma_2` depending on `A = z / (2 nu t)`.
    pub fn case_split(alpha: i64, nu: f64, t: f64, z: f64) -> Self {
        let a = alpha.unsigned_abs() as f64;
        if a * a * nu <= 1.0 {
            return Self::analytic(ContourFamily::GammaPmC);
        }
        let vertex = z / (2.0 * nu * t);
        if (vertex - a).abs() >= 0.5 * a {
            Self::analytic(ContourFamily::Gamma1)
        } else {
            Self::analytic(ContourFamily::Gamma2)
        }
    }

    pub fn with_nodes(mut self, n: usize) -> Self {
        self.n_nodes = n;
        self
    }

    /// Hash of the parameters, used to key cached kernel tables.
    pub fn fingerprint(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.family.name().as_bytes());
        for v in [self.vertex, self.radius, self.b_max] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update((self.n_nodes as u64).to_le_bytes());
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
    }

    fn check_common(&self) -> Result<()> {
        if self.n_nodes < 32 || self.n_nodes % 2 != 0 {
            return Err(Error::InvalidContour(format!(
                "n_nodes must be even and at least 32, got {}",
                self.n_nodes
            )));
        }
        for (name, v) in [("vertex", self.vertex), ("radius", self.radius), ("b_max", self.b_max)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidContour(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// One node of the upper half contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourNode {
    pub lambda: Complex64,
    /// Includes `1 / (2 pi i)`, `d lambda / ds` and the quadrature weight.
    pub weight: Complex64,
}

/// Nodes of the production hyperbola before the `-alpha^2 nu` shift; they do not depend on alpha.
pub fn hyperbola_nodes(t: f64, spec: &ContourSpec) -> Result<Vec<ContourNode>> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    spec.check_common()?;
    if spec.family != ContourFamily::Production {
        return Err(Error::InvalidContour("hyperbola nodes need the production family".into()));
    }
    if !(spec.vertex > 0.0 && spec.b_max > 0.0) {
        return Err(Error::InvalidContour("production contour needs vertex > 0 and b_max > 0".into()));
    }
    let m = spec.vertex / t;
    let n = spec.n_nodes;
    let u_max = spec.b_max;
    let h = 2.0 * u_max / n as f64;
    // The vertex m (1 - sin phi) must sit right of the origin and the ends must be negligible.
    let tail = (m * t * (1.0 - HYPERBOLA_PHI.sin() * u_max.cosh())).exp();
    if tail > 1e-14 {
        return Err(Error::InvalidContour(format!(
            "hyperbola truncation leaves e^(lambda t) = {tail:e} at the ends"
        )));
    }
    Ok((n / 2..n)
        .map(|k| {
            let u = -u_max + (k as f64 + 0.5) * h;
            let w = Complex64::new(-HYPERBOLA_PHI, u);
            ContourNode {
                lambda: m * (1.0 + w.sin()),
                weight: h * m / (2.0 * PI) * w.cos(),
            }
        })
        .collect())
}

/// Nodes of an analytic contour for the evaluation point `(z, y)`.
pub fn analytic_nodes(t: f64, nu: f64, alpha: i64, z: f64, y: f64, spec: &ContourSpec) -> Result<Vec<ContourNode>> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    spec.check_common()?;
    let a = alpha.unsigned_abs() as f64;
    let tau = nu * t;
    let b_max = if spec.b_max > 0.0 {
        spec.b_max
    } else {
        (40.0 / tau).sqrt()
    };
    if tau * b_max * b_max < 23.0 {
        return Err(Error::InvalidContour(format!(
            "b_max = {b_max} leaves a tail e^(-nu t b^2) = {:e}",
            (-tau * b_max * b_max).exp()
        )));
    }
    let (shift, vertex, radius) = match spec.family {
        ContourFamily::Production => {
            return Err(Error::InvalidContour("use hyperbola_nodes for the production family".into()))
        }
        ContourFamily::GammaPmC => {
            if a * a * nu > 1.0 {
                return Err(Error::InvalidContour(format!(
                    "Gamma_+- u Gamma_c needs alpha^2 nu <= 1, got {}",
                    a * a * nu
                )));
            }
            let vertex = if spec.vertex > 0.0 { spec.vertex } else { (y + z) / (2.0 * tau) };
            let c0 = -0.5 * a * a * nu + nu * vertex * vertex;
            let radius = if spec.radius > 0.0 { spec.radius } else { (-c0).max(0.0) + 2.0 / t };
            if c0 + radius <= 0.0 {
                return Err(Error::InvalidContour(format!(
                    "arc radius {radius} leaves the pole lambda = 0 right of the contour"
                )));
            }
            (-0.5 * a * a * nu, vertex, radius)
        }
        ContourFamily::Gamma1 | ContourFamily::Gamma2 => {
            if a * a * nu < 1.0 {
                return Err(Error::InvalidContour(format!(
                    "Gamma_1 / Gamma_2 need alpha^2 nu >= 1, got {}",
                    a * a * nu
                )));
            }
            let vertex = if spec.vertex > 0.0 { spec.vertex } else { z / (2.0 * tau) };
            if !(vertex > 0.0) {
                return Err(Error::InvalidContour(
                    "Gamma_1 / Gamma_2 need a positive vertex (z > 0) to stay off the cut".into(),
                ));
            }
            let far = (vertex - a).abs() >= 0.5 * a;
            if spec.family == ContourFamily::Gamma1 && !far {
                return Err(Error::InvalidContour(format!(
                    "Gamma_1 needs |A - alpha| >= alpha/2 (A = {vertex}, alpha = {a})"
                )));
            }
            if spec.family == ContourFamily::Gamma2 && far {
                return Err(Error::InvalidContour(format!(
                    "Gamma_2 needs |A - alpha| <= alpha/2 (A = {vertex}, alpha = {a})"
                )));
            }
            let shift = if spec.family == ContourFamily::Gamma1 { -nu * a * a } else { -nu * a * a / 8.0 };
            (shift, vertex, 0.0)
        }
    };
    let n_half = spec.n_nodes / 2;
    let arc_nodes = if radius > 0.0 { (n_half / 4).max(16) / 8 * 8 } else { 0 };
    let panels = ((n_half - arc_nodes) / 8).max(1);
    let gl = gauss_legendre(8);
    let mut nodes = Vec::with_capacity(n_half);
    let width = b_max / panels as f64;
    let lift = Complex64::new(0.0, radius);
    for p in 0..panels {
        let lo = p as f64 * width;
        for &(x, w) in gl {
            let b = lo + 0.5 * width * (x + 1.0);
            let mu_line = Complex64::new(vertex, b);
            nodes.push(ContourNode {
                lambda: shift + nu * mu_line * mu_line + lift,
                weight: nu * mu_line / PI * (0.5 * width * w),
            });
        }
    }
    if arc_nodes > 0 {
        let c0 = shift + nu * vertex * vertex;
        let arc_panels = arc_nodes / 8;
        let dtheta = 0.5 * PI / arc_panels as f64;
        for p in 0..arc_panels {
            for &(x, w) in gl {
                let theta = (p as f64 + 0.5 * (x + 1.0)) * dtheta;
                let e = Complex64::from_polar(1.0, theta);
                nodes.push(ContourNode {
                    lambda: c0 + radius * e,
                    weight: radius * e / (2.0 * PI) * (0.5 * dtheta * w),
                });
            }
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(1/2 pi i) int e^{lambda t} / lambda d lambda = 1` for any contour with the origin on its left.
    fn unit_step(nodes: &[ContourNode], t: f64) -> f64 {
        2.0 * nodes
            .iter()
            .map(|n| (n.weight * (n.lambda * t).exp() / n.lambda).re)
            .sum::<f64>()
    }

    #[test]
    fn hyperbola_inverts_unit_step() {
        for &t in &[1e-3, 0.5, 2.0] {
            let nodes = hyperbola_nodes(t, &ContourSpec::production().with_nodes(192)).unwrap();
            assert!((unit_step(&nodes, t) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn arc_contour_inverts_unit_step() {
        let spec = ContourSpec::analytic(ContourFamily::GammaPmC).with_nodes(1024);
        let nodes = analytic_nodes(0.5, 1e-2, 3, 0.05, 0.1, &spec).unwrap();
        assert!((unit_step(&nodes, 0.5) - 1.0).abs() < 1e-9, "{}", unit_step(&nodes, 0.5));
    }

    #[test]
    fn case_split_validation() {
        let spec = ContourSpec::analytic(ContourFamily::GammaPmC);
        assert!(analytic_nodes(1.0, 1e-2, 20, 0.1, 0.1, &spec).is_err());
        let g1 = ContourSpec::analytic(ContourFamily::Gamma1);
        assert!(analytic_nodes(1.0, 1e-2, 20, 0.0, 0.1, &g1).is_err());
        assert!(analytic_nodes(1.0, 1e-2, 4, 0.1, 0.1, &g1).is_err());
        assert!(hyperbola_nodes(1.0, &ContourSpec::production().with_nodes(16)).is_err());
        assert!(hyperbola_nodes(0.0, &ContourSpec::production()).is_err());
    }
}
