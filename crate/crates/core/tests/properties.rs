use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use slipflow::harness::fit::{holdout_bound_fit, ratio_bound_fit};
use slipflow::harness::report::{parse_csv, to_csv, ExperimentReport, Point};
use slipflow::harness::RunConfig;
use slipflow::norms::{analytic_norm, bl_norm, bl_weight, embedding_constant, Flavor, NormParams};
use slipflow::{from_modes, to_modes, GridSpec, SpectralField, ZGrid};

fn grid() -> Arc<ZGrid> {
    Arc::new(GridSpec::default().build(1e-3).unwrap())
}

fn field(grid: &Arc<ZGrid>, coefs: &[(f64, f64, f64)]) -> SpectralField {
    let k = coefs.len() - 1;
    let mut w = SpectralField::zeros(grid.clone(), k);
    for (a, &(re, im, rate)) in coefs.iter().enumerate() {
        let c = Complex64::new(re, if a == 0 { 0.0 } else { im });
        let v: Vec<Complex64> = grid.nodes().iter().map(|&z| c * (1.0 + z) * (-rate * z).exp()).collect();
        w.set_mode_pair(a as i64, &v);
    }
    w
}

fn coefs(max_k: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.5..4.0f64), 1..=max_k + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_text_round_trips(
        nu in prop::collection::vec(1e-7..1.0f64, 1..5),
        beta in 0.0..=1.0f64,
        modes in 1usize..64,
        amplitude in -10.0..10.0f64,
        seed in any::<u64>(),
    ) {
        let mut c = RunConfig::default();
        c.nu = nu;
        c.beta = beta;
        c.modes = modes;
        c.amplitude = amplitude;
        c.seed = seed;
        let back = RunConfig::parse(&c.to_text()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn csv_rows_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let mut r = ExperimentReport::new("prop");
        for (i, v) in values.iter().enumerate() {
            let p = Point::new(1e-3, 0.5).at(i as f64 * 0.1);
            if i % 2 == 0 {
                r.info(p, "q", *v);
            } else {
                r.at_most(Point::default(), "r", *v, v.abs());
            }
        }
        prop_assert_eq!(parse_csv(&to_csv(&r.rows)).unwrap(), r.rows);
    }

    #[test]
    fn layer_weight_is_at_least_one_and_decreasing(nu in 1e-6..1e-1f64, t in 0.0..2.0f64, z in 0.0..50.0f64, dz in 0.0..5.0f64) {
        let p = NormParams::new(nu, t);
        let (a, b) = (bl_weight(z, &p), bl_weight(z + dz, &p));
        prop_assert!(a >= 1.0 && b >= 1.0);
        prop_assert!(b <= a * (1.0 + 1e-15));
    }

    #[test]
    fn layer_norm_embeds_into_l1(c in coefs(0), t in 0.01..1.0f64) {
        let g = grid();
        let w = field(&g, &c);
        let p = NormParams::new(1e-3, t);
        let lhs = w.mode_l1(0);
        let rhs = embedding_constant(&g, &p) * bl_norm(&g, w.mode(0), &p);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn analytic_norm_grows_with_radius(c in coefs(6), r1 in 0.0..1.0f64, dr in 0.0..1.0f64) {
        let w = field(&grid(), &c);
        let p = NormParams::new(1e-3, 0.5);
        for flavor in [Flavor::L1, Flavor::Linf, Flavor::Bl] {
            let a = analytic_norm(&w, &p.with_rho(r1), flavor, 1).unwrap();
            let b = analytic_norm(&w, &p.with_rho(r1 + dr), flavor, 1).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-14));
        }
    }

    #[test]
    fn physical_round_trip_is_exact(c in coefs(6)) {
        let w = field(&grid(), &c);
        let k = w.max_mode();
        let back = to_modes(&from_modes(&w, 2 * k + 1).unwrap(), k).unwrap();
        prop_assert!(back.rel_l1_distance(&w) < 1e-13);
    }

    #[test]
    fn bound_fit_covers_its_calibration(pairs in prop::collection::vec((0.0..10.0f64, 0.1..10.0f64), 2..40), margin in 1.0..2.0f64) {
        let f = holdout_bound_fit("c", "prop", &pairs, &pairs, margin);
        prop_assert_eq!(f.violations, 0);
        let g = ratio_bound_fit("c", "prop", &pairs, 1, margin);
        prop_assert_eq!(g.calibration_points + g.validation_points, pairs.len());
        prop_assert!(g.value <= f.value * (1.0 + 1e-15));
    }
}
