use std::sync::Arc;

use approx::assert_relative_eq;

use slipflow::biot_savart::velocity_from_vorticity;
use slipflow::harness::data::family;
use slipflow::ns::{nonlinear_term, solve_ns, NsConfig};
use slipflow::oracle::{solve_stokes_direct, Scheme};
use slipflow::semigroup::{apply_semigroup, bc_relative_residual, solve_stokes, KernelCache, StokesProblem};
use slipflow::stokes_green::ContourSpec;
use slipflow::{Error, GridSpec, SpectralField, ZGrid};

const NU: f64 = 1e-3;

fn setup(k: usize, beta: f64) -> (Arc<ZGrid>, KernelCache) {
    let g = Arc::new(GridSpec::default().build(NU).unwrap());
    let c = KernelCache::new(NU, beta, k, g.clone(), ContourSpec::production());
    (g, c)
}

#[test]
fn semigroup_is_identity_at_zero_and_composes() {
    let (g, cache) = setup(2, 1.0);
    let w = family("gaussian", &g, 2, NU, 1.0, 1.0).unwrap();
    assert_eq!(apply_semigroup(&w, 0.0, &cache).unwrap().rel_l1_distance(&w), 0.0);
    let once = apply_semigroup(&w, 0.3, &cache).unwrap();
    let twice = apply_semigroup(&apply_semigroup(&w, 0.1, &cache).unwrap(), 0.2, &cache).unwrap();
    assert!(twice.rel_l1_distance(&once) < 1e-5);
    assert!(bc_relative_residual(&once, NU, 1.0) < 1e-6);
}

#[test]
fn ill_prepared_data_relaxes_to_the_wall_condition() {
    for beta in [0.0, 0.5, 1.0] {
        let (g, cache) = setup(2, beta);
        let w = family("ill_prepared", &g, 2, NU, beta, 1.0).unwrap();
        assert!(bc_relative_residual(&w, NU, beta) > 0.1);
        let s = apply_semigroup(&w, 0.2, &cache).unwrap();
        assert!(bc_relative_residual(&s, NU, beta) < 1e-6, "beta = {beta}");
    }
}

#[test]
fn green_solver_matches_method_of_lines() {
    let (g, cache) = setup(1, 1.0);
    let p = StokesProblem {
        omega0: family("wall_layer", &g, 1, NU, 1.0, 1.0).unwrap(),
        forcing: None,
        nu: NU,
        beta: 1.0,
        times: vec![0.25],
    };
    let green = solve_stokes(&p, &cache).unwrap();
    let mol = solve_stokes_direct(&p, Scheme::Trapezoidal, 1e-3).unwrap();
    assert!(green.fields[0].rel_l1_distance(&mol.fields[0]) < 3e-3);
}

#[test]
fn shear_flow_has_no_nonlinearity_and_follows_stokes() {
    let (g, cache) = setup(3, 1.0);
    let w = family("shear_exp", &g, 3, NU, 1.0, 1.0).unwrap();
    assert!(nonlinear_term(&w).unwrap().is_zero());
    let cfg = NsConfig {
        dt: 0.05,
        ..NsConfig::default()
    };
    let traj = solve_ns(&w, 0.05, &cache, &cfg).unwrap();
    let p = StokesProblem {
        omega0: w,
        forcing: None,
        nu: NU,
        beta: 1.0,
        times: vec![0.05],
    };
    let stokes = solve_stokes(&p, &cache).unwrap();
    assert!(traj.fields[1].rel_l1_distance(&stokes.fields[0]) < 1e-10);
}

#[test]
fn zero_data_stays_zero() {
    let (g, cache) = setup(2, 1.0);
    let traj = solve_ns(&SpectralField::zeros(g, 2), 0.05, &cache, &NsConfig::default()).unwrap();
    assert!(traj.fields.iter().all(SpectralField::is_zero));
}

#[test]
fn shear_velocity_is_minus_exponential() {
    let g = Arc::new(GridSpec::default().build(NU).unwrap());
    let w = family("shear_exp", &g, 1, NU, 1.0, 1.0).unwrap();
    let u = velocity_from_vorticity(&w).unwrap();
    for (z, v) in g.nodes().iter().zip(u.u1.mode(0)) {
        assert_relative_eq!(v.re, -(-z).exp(), epsilon = 1e-9);
    }
    assert!(u.u2.is_zero());
}

#[test]
fn invalid_inputs_are_rejected() {
    let (g, cache) = setup(2, 1.0);
    let w = family("gaussian", &g, 2, NU, 1.0, 1.0).unwrap();
    assert!(matches!(solve_ns(&w, -1.0, &cache, &NsConfig::default()), Err(Error::NonPositiveTime(_))));
    let p = StokesProblem {
        omega0: w,
        forcing: None,
        nu: 2.0 * NU,
        beta: 1.0,
        times: vec![0.1],
    };
    assert!(solve_stokes(&p, &cache).is_err());
    assert!(family("no_such_family", &g, 2, NU, 1.0, 1.0).is_err());
}
