//! Constant fits with a calibration/validation split, and log-log regression.

use crate::harness::report::Fit;

/// Least-squares line `y = slope x + intercept`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Slope of `log10 y` against `log10 x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    linear_fit(&lx, &ly)
}

/// Fits `C` in `lhs <= C rhs`.
///
/// Pairs come in consecutive groups of `group` (one group per sweep point); groups
/// alternate between calibration (even) and validation (odd).
/// `C = margin * max(lhs / rhs)` over the calibration half; violations are
/// counted over every point. With a single group it serves as its own calibration.
pub fn ratio_bound_fit(name: &str, domain: &str, pairs: &[(f64, f64)], group: usize, margin: f64) -> Fit {
    let group = group.max(1);
    let (cal, val): (Vec<_>, Vec<_>) = pairs.iter().enumerate().partition(|(i, _)| (i / group) % 2 == 0);
    let cal: Vec<(f64, f64)> = cal.into_iter().map(|(_, p)| *p).collect();
    let val: Vec<(f64, f64)> = val.into_iter().map(|(_, p)| *p).collect();
    holdout_bound_fit(name, domain, &cal, &val, margin)
}

fn ratio(&(l, r): &(f64, f64)) -> f64 {
    if r > 0.0 {
        l / r
    } else if l > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `C = margin * max(lhs / rhs)` over `calibration`; violations counted over both sets.
pub fn holdout_bound_fit(name: &str, domain: &str, calibration: &[(f64, f64)], validation: &[(f64, f64)], margin: f64) -> Fit {
    let c = margin * calibration.iter().map(ratio).fold(0.0, f64::max);
    let all = || calibration.iter().chain(validation);
    let worst = all().map(ratio).fold(0.0, f64::max);
    let violations = all().filter(|p| ratio(p) > c).count();
    Fit {
        name: name.to_string(),
        value: c,
        residual: if c > 0.0 { worst / c } else { 0.0 },
        residual_kind: "largest lhs/(C rhs) over all points".into(),
        domain: domain.to_string(),
        calibration_points: calibration.len(),
        validation_points: validation.len(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let xs = [1e-2, 1e-3, 1e-4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.25)).collect();
        let (s, i, r) = loglog_fit(&xs, &ys);
        assert!((s - 0.25).abs() < 1e-12 && (i - 3f64.log10()).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn bound_fit_counts_holdout_violations() {
        let pairs = [(1.0, 1.0), (3.0, 1.0), (2.0, 1.0), (1.0, 1.0)];
        let f = ratio_bound_fit("c", "demo", &pairs, 1, 1.25);
        assert_eq!(f.value, 2.5);
        assert_eq!(f.violations, 1);
        assert_eq!((f.calibration_points, f.validation_points), (2, 2));
    }
}
