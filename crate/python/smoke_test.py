"""Smoke test for the toric_ale_py extension.

Build and install first:

    pip install -e crates/py --no-build-isolation
    python python/smoke_test.py
"""

import json
import math

import toric_ale_py as ta


def main() -> None:
    tree = json.loads(ta.classify([5, 3, 2, 1]))
    assert tree["verdict"] == "yes", tree
    assert tree["tree"]["weights"] == [5, 3, 2, 1]

    assert ta.ricci_flat(5, [2, 3])
    assert not ta.ricci_flat(7, [2, 3])

    a = ta.Ansatz(7, [2, 3])
    assert (a.m, a.ell) == (2, 2)
    assert a.alpha == ["-21", "-14"]
    assert a.f_ell == ["0", "98", "2"]
    g = a.full_gram([-18.0, 5.0])
    assert abs(g[0][1] - g[1][0]) < 1e-12
    ok, report = a.verify(["abreu", "positivity"])
    assert ok, report
    assert json.loads(report)["pass"] is True

    fitted, closed = a.decay_coefficient()
    assert abs(fitted - closed) <= 0.05 * abs(closed), (fitted, closed)

    s = ta.Surface(7, 2, 3)
    assert s.kind == "orthotoric" and s.lambda_a == "294"
    assert math.isclose(s.gram(-18.0, 5.0)[0][0], 564 / 23, rel_tol=1e-14)
    sigma, h_tilde, factor = s.bochner_dual(-18.0, 5.0)
    assert math.isclose(sigma[0], 1 / 23) and math.isclose(h_tilde[0][0], 564 / 12167)
    assert s.is_polynomial(3) and not s.is_polynomial(2)
    assert ta.Surface(5, 1, 1).lambda_a == "1"

    out, err, code = ta.run_cli(["surface", "5", "2", "3"])
    assert code == 0, err
    assert json.loads(out)["pass"] is True
    assert ta.run_cli(["classify", "4", "2", "1"])[2] == 2

    try:
        ta.Ansatz(0, [1, 2])
    except ValueError:
        pass
    else:
        raise AssertionError("invalid weights accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
