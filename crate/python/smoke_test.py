"""Smoke test for the polyscreen Python bindings."""

import math
import os
import tempfile

import polyscreen as ps


def main():
    print("polyscreen", ps.__version__)

    c = ps.screen_coefficients(2, 0.1, [0.01, -0.02, 0.03])
    assert len(c) == 27
    assert abs(ps.screen_moment(2, 0.1, [0.01, -0.02, 0.03], [0, 0, 0]) - 1.0) < 1e-12
    assert abs(ps.screen_moment(2, 0.1, [0.01, -0.02, 0.03], [1, 2, 0])) < 1e-14

    far = ps.screen_potential(2, 1.0, [0.1, 0.0, -0.2], [20.0, 0.0, 0.0])
    assert abs(far * math.hypot(19.9, 0.2) - 1.0) < 1e-4

    mesh = ps.Mesh(1.0, 15, 2)
    element, offset = mesh.locate([0.5, 0.5, 0.5])
    assert element == [7, 7, 7] and max(abs(o) for o in offset) < 1e-12

    try:
        ps.RunConfig("n = 3\n")
    except ps.PolyscreenError as e:
        assert "exit code 2" in str(e)
    else:
        raise AssertionError("odd n accepted")

    cfg = ps.RunConfig("n = 40\nq = 1\nn_el = 7\nseed = 2\n")
    assert cfg.to_dict()["n"] == 40
    tables = ps.PotentialTable.build(1)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.bin")
        tables.save(path)
        again = ps.PotentialTable.load(path, 1)
        assert again.eval_basis(3, [1.0, 2.0, 0.5]) == tables.eval_basis(3, [1.0, 2.0, 0.5])

    charges = ps.generate_biased_cubes(40, seed=2)
    assert len(charges) == 40 and charges.total_charge() == 0.0
    res = ps.run_pipeline(cfg, charges, tables)
    assert res["achieved_residual"] <= 1e-7
    assert len(res["phi_total"]) == 40
    phi_e = ps.ewald_potential(charges)
    m = ps.error_metrics(res["phi_total"], phi_e)
    assert abs(m["rms_rel"] - res["rms_rel"]) < 1e-15
    print("pipeline rms relative error", m["rms_rel"])
    print("smoke test passed")


if __name__ == "__main__":
    main()
