"""Smoke test for the thingap_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/thingap_py-*.whl
"""

import json
import sys
import tempfile

import thingap_py as tg


def main():
    g = tg.GapGeometry(1e-2)
    assert abs(g.delta(0.0) - 1e-2) < 1e-15
    assert abs(g.delta(0.5) - (1e-2 + 2 * 0.5 ** 1.5)) < 1e-12
    grad = g.grad_bar_u((0.0, 0.0))
    assert abs(grad[1] - 100.0) < 1e-9, grad
    assert json.loads(g.check_invariants(200))["passed"]

    keys = [k for k, _, _ in tg.config_keys()]
    assert "epsilons" in keys and "seed" in keys
    try:
        tg.config_text({"no.such.key": 1})
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    affine = json.loads(tg.check_affine(0.1))
    assert affine["passed"], affine

    report = json.loads(tg.sweep({"epsilons": "1e-1,1e-2,1e-3", "sweep.reliability_gate": "false"}))
    records = report["report"]["records"]
    assert len(records) == 3
    assert records[-1]["m_center"] > records[0]["m_center"]
    print("rho =", report["report"]["rho"])

    with tempfile.TemporaryDirectory() as d:
        code = tg.run_cli(["validate-geometry", "--out", d])
        assert code == 0, code
        assert tg.run_cli(["sweep", "--set", "bogus=1", "--out", d]) == 2

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
