//! Initial-data families and seeded random corpora.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::ZGrid;
use crate::spectral::SpectralField;

pub const FAMILIES: &[&str] = &[
    "zero",
    "shear_exp",
    "gaussian",
    "wall_layer",
    "two_mode",
    "ill_prepared",
    "well_prepared",
];

fn profile(grid: &ZGrid, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
    grid.nodes().iter().map(|&z| Complex64::new(f(z), 0.0)).collect()
}

fn scaled(grid: &ZGrid, f: impl Fn(f64) -> f64, c: Complex64) -> Vec<Complex64> {
    grid.nodes().iter().map(|&z| c * f(z)).collect()
}

/// Mode `alpha` of `g + c l` with `c` chosen so the discrete wall condition
/// `nu^beta f(0) + int e^{-|alpha| z} f dz = 0` holds exactly.
fn balanced(grid: &ZGrid, g: &[Complex64], layer: &[f64], alpha: i64, nu: f64, beta: f64) -> Vec<Complex64> {
    let m = grid.exp_moments_real(alpha.unsigned_abs() as f64);
    let nb = nu.powf(beta);
    let bg: Complex64 = nb * g[0] + m.iter().zip(g).map(|(w, v)| v * *w).sum::<Complex64>();
    let bl: f64 = nb * layer[0] + m.iter().zip(layer).map(|(w, v)| w * v).sum::<f64>();
    let c = -bg / bl;
    g.iter().zip(layer).map(|(v, l)| v + c * *l).collect()
}

/// Builds a named family on `grid` with modes up to `k`.
///
/// * `shear_exp`: `e^{-z}`, mode 0 only.
/// * `gaussian`: bump `e^{-(z-2)^2/0.5} (1 + cos x + 0.5 sin 2x)`.
/// * `wall_layer`: `e^{-z/sqrt(nu)} (1 + cos x)`.
/// * `two_mode`: `e^{-z} + z e^{-z} cos x + z^2 e^{-z} sin 2x / 2`.
/// * `ill_prepared`: `e^{-z} (1 + cos x + 0.5 sin 2x)`, O(1) wall value.
/// * `well_prepared`: `two_mode` profiles plus a `sqrt(nu)`-layer fixing the wall condition per mode.
///
/// Every family is multiplied by `amplitude`.
pub fn family(name: &str, grid: &Arc<ZGrid>, k: usize, nu: f64, beta: f64, amplitude: f64) -> Result<SpectralField> {
    let g = grid.as_ref();
    let mut w = SpectralField::zeros(grid.clone(), k);
    let half = Complex64::new(0.5, 0.0);
    let minus_quarter_i = Complex64::new(0.0, -0.25);
    let need = |m: usize| -> Result<()> {
        if k < m {
            return Err(Error::Config(format!("data family `{name}` needs at least {m} modes, got {k}")));
        }
        Ok(())
    };
    match name {
        "zero" => {}
        "shear_exp" => w.set_mode_pair(0, &profile(g, |z| (-z).exp())),
        "gaussian" => {
            need(2)?;
            let bump = |z: f64| (-(z - 2.0) * (z - 2.0) / 0.5).exp();
            w.set_mode_pair(0, &profile(g, bump));
            w.set_mode_pair(1, &scaled(g, bump, half));
            w.set_mode_pair(2, &scaled(g, bump, minus_quarter_i));
        }
        "wall_layer" => {
            need(1)?;
            let d = nu.sqrt();
            let layer = |z: f64| (-z / d).exp();
            w.set_mode_pair(0, &profile(g, layer));
            w.set_mode_pair(1, &scaled(g, layer, half));
        }
        "two_mode" => {
            need(2)?;
            w.set_mode_pair(0, &profile(g, |z| (-z).exp()));
            w.set_mode_pair(1, &scaled(g, |z| z * (-z).exp(), half));
            w.set_mode_pair(2, &scaled(g, |z| z * z * (-z).exp(), minus_quarter_i));
        }
        "ill_prepared" => {
            need(2)?;
            let e = |z: f64| (-z).exp();
            w.set_mode_pair(0, &profile(g, e));
            w.set_mode_pair(1, &scaled(g, e, half));
            w.set_mode_pair(2, &scaled(g, e, minus_quarter_i));
        }
        "well_prepared" => {
            need(2)?;
            let d = nu.sqrt();
            let layer: Vec<f64> = g.nodes().iter().map(|&z| (-z / d).exp() / d).collect();
            let m0 = profile(g, |z| (-z).exp());
            let m1 = scaled(g, |z| (1.0 + z) * (-z).exp(), half);
            let m2 = scaled(g, |z| (1.0 + z * z) * (-z).exp(), minus_quarter_i);
            w.set_mode_pair(0, &balanced(g, &m0, &layer, 0, nu, beta));
            w.set_mode_pair(1, &balanced(g, &m1, &layer, 1, nu, beta));
            w.set_mode_pair(2, &balanced(g, &m2, &layer, 2, nu, beta));
        }
        other => {
            return Err(Error::Config(format!(
                "unknown data family `{other}` (known: {})",
                FAMILIES.join(", ")
            )))
        }
    }
    w.scale(amplitude);
    Ok(w)
}

/// Seeded generator for corpora.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random analytic field: each mode is a sum of `c z^p e^{-s z}` terms, optionally
/// with a `delta`-layer, and mode amplitudes decaying like `e^{-decay |alpha|}`.
pub fn random_field(r: &mut ChaCha8Rng, grid: &Arc<ZGrid>, k: usize, decay: f64, delta: Option<f64>) -> SpectralField {
    let mut w = SpectralField::zeros(grid.clone(), k);
    for alpha in 0..=k as i64 {
        let amp = (-decay * alpha as f64).exp();
        let terms: Vec<(Complex64, i32, f64)> = (0..3)
            .map(|_| {
                let c = Complex64::new(r.gen_range(-1.0..1.0), if alpha == 0 { 0.0 } else { r.gen_range(-1.0..1.0) });
                (c * amp, r.gen_range(0..3), r.gen_range(0.5..3.0))
            })
            .collect();
        let layer = delta.map(|d| {
            let c = Complex64::new(r.gen_range(-1.0..1.0), if alpha == 0 { 0.0 } else { r.gen_range(-1.0..1.0) });
            (c * amp, d)
        });
        let v: Vec<Complex64> = grid
            .nodes()
            .iter()
            .map(|&z| {
                let mut s: Complex64 = terms.iter().map(|(c, p, rate)| c * z.powi(*p) * (-rate * z).exp()).sum();
                if let Some((c, d)) = layer {
                    s += c * (-z / d).exp();
                }
                s
            })
            .collect();
        w.set_mode_pair(alpha, &v);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::semigroup::bc_relative_residual;

    #[test]
    fn families_are_real_and_decay() {
        let g = Arc::new(GridSpec::default().build(1e-3).unwrap());
        for name in FAMILIES {
            let w = family(name, &g, 4, 1e-3, 1.0, 0.3).unwrap();
            w.check_reality(1e-14).unwrap();
            for a in w.alphas() {
                assert!(w.mode(a).last().unwrap().norm() <= 1e-8 * w.max_abs().max(1e-300));
            }
        }
        assert!(family("nope", &g, 4, 1e-3, 1.0, 1.0).is_err());
        assert!(family("two_mode", &g, 1, 1e-3, 1.0, 1.0).is_err());
    }

    #[test]
    fn well_prepared_satisfies_the_wall_condition() {
        let g = Arc::new(GridSpec::default().build(1e-4).unwrap());
        for beta in [0.0, 0.5, 1.0] {
            let w = family("well_prepared", &g, 3, 1e-4, beta, 1.0).unwrap();
            assert!(bc_relative_residual(&w, 1e-4, beta) < 1e-12);
            let ill = family("ill_prepared", &g, 3, 1e-4, beta, 1.0).unwrap();
            assert!(bc_relative_residual(&ill, 1e-4, beta) > 0.1);
        }
    }

    #[test]
    fn corpora_are_reproducible() {
        let g = Arc::new(GridSpec::default().build(1e-3).unwrap());
        let a = random_field(&mut rng(3, 1), &g, 4, 0.5, Some(0.03));
        let b = random_field(&mut rng(3, 1), &g, 4, 0.5, Some(0.03));
        let c = random_field(&mut rng(3, 2), &g, 4, 0.5, Some(0.03));
        assert_eq!(a.rel_l1_distance(&b), 0.0);
        assert!(a.rel_l1_distance(&c) > 0.0);
        a.check_reality(1e-14).unwrap();
    }
}
