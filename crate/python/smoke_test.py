"""Smoke test for the slipflow_py extension.

Build and install first:  pip install -e crates/python --no-build-isolation
"""

import json
import math

import slipflow_py as sf


def main():
    print("slipflow_py", sf.__version__, "experiments:", ", ".join(sf.experiments()))

    cfg = sf.Config("experiment = stokes-run\nnu = 1e-3\nmodes = 2\n")
    assert sf.Config(cfg.to_text()).hash() == cfg.hash()
    try:
        sf.Config("no_such_key = 1")
    except ValueError as e:
        print("unknown key rejected:", e)
    else:
        raise AssertionError("unknown key accepted")

    nu, beta = 1e-3, 1.0
    w0 = sf.Field.family("gaussian", nu, beta, modes=2)
    print(w0)
    w1 = sf.apply_semigroup(w0, 0.5, nu, beta)
    assert w1.bc_residual(nu, beta) < 1e-6
    mol = sf.solve_stokes_oracle(w0, [0.5], nu, beta)[0]
    gap = w1.distance(mol)
    print(f"Green vs method-of-lines at t = 0.5: {gap:.2e}")
    assert gap < 1e-3

    u1, u2 = sf.Field.family("shear_exp", nu, beta, modes=1).velocity()
    z = u1.z()
    # U = -e^{-z} for omega = e^{-z}
    err = max(abs(u1.mode(0)[i][0] + math.exp(-z[i])) for i in range(len(z)))
    print(f"shear velocity error: {err:.2e}")
    assert err < 1e-8

    traj = sf.solve_ns(sf.Field.family("two_mode", nu, beta, modes=4, amplitude=0.05), 0.05, nu, beta)
    t, w = traj[-1]
    print(f"Navier-Stokes t = {t}: {w}, wall max {w.wall_max():.4f}")

    report = cfg.run()
    print("stokes-run passed:", report.passed(), [c[:3] for c in report.checks()])
    assert report.to_csv().startswith("experiment,nu,beta,t,quantity,value,tolerance,verdict\n")
    json.loads(report.to_json())
    print("ok")


if __name__ == "__main__":
    main()
