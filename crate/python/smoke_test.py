"""Smoke test for the pyminimax extension module.

Build and install first, e.g.
    pip install maturin && maturin develop -m crates/py/Cargo.toml
then run `python python/smoke_test.py`.
"""

import math

import pyminimax as pm


def main():
    data = pm.Dataset.synthetic("quadratic", n=60, dim=3, seed=1)
    spec = pm.ProblemSpec("quadratic-scsc", rho=1.0)
    problem = spec.build(data)
    assert (problem.primal_dim, problem.dual_dim) == (3, 3)

    w, v = problem.saddle(data)
    assert problem.weak_gap(w, v, data) < 1e-8

    gw, gv = problem.grad([0.1, -0.2, 0.3], [0.0, 0.5, -0.1], data)
    assert len(gw) == 3 and len(gv) == 3

    traj = pm.run(problem, data, pm.schedule("inv-rho-t", rho=1.0), 600, seed=3)
    gap = problem.weak_gap(traj.averaged_w, traj.averaged_v, data)
    assert 0.0 <= gap < 1.0, gap

    first = data.features[0]
    steps, deltas = pm.paired_run(spec, data, 0, first, data.labels[0], pm.schedule("constant", eta=0.05), 120)
    assert steps[-1] == 120 and all(d == 0.0 for d in deltas)

    steps, deltas = pm.paired_run(spec, data, 0, [0.5] * len(first), 0.0, pm.schedule("constant", eta=0.05), 120, seed=5)
    assert any(d > 0.0 for d in deltas)

    value = pm.bound("argstab_cc_nonsmooth", eta=0.01, G=1.0, t=100, n=100)
    assert math.isclose(value, 0.44, rel_tol=1e-12)
    assert "pl_gap" in pm.bound_names()

    try:
        pm.bound("argstab_scsc", G=1.0)
    except ValueError as err:
        assert "rho" in str(err) or "t" in str(err)
    else:
        raise AssertionError("missing parameters should raise ValueError")

    print("pyminimax", pm.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
