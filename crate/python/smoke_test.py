"""Smoke test for the compiled extension.

Build and install it first, e.g.

    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml

then run ``python python/smoke_test.py``.
"""

import json
import math
import os
import sys
import tempfile

import hartree


def main() -> int:
    h = hartree.solve_monoatomic(3, coupling=0.0, r_max=40.0, n=4000)
    assert abs(h.mu + 0.25) < 1e-3, h.mu
    print(h)

    atom = hartree.solve_monoatomic(2, coupling=1.0, r_max=60.0, n=2000)
    assert atom.mu < 0 and atom.residual <= 1e-8
    k = atom.decay_rate()
    fit = atom.fit_decay(5.0 / k, 15.0 / k)
    assert abs(fit["rate"] - k) <= 0.02 * k, fit
    print(f"planar Hartree atom: mu={atom.mu:.8f} sqrt|mu|={k:.5f} fitted rate={fit['rate']:.5f}")

    pair = hartree.DiatomicSystem(hartree.solve_monoatomic(2, coupling=0.0, r_max=30.0, n=800), 0.25, 13.0, 11.0)
    rec = pair.solve(4.0)
    assert rec["gap"] > 0 and rec["mu_plus"] < rec["mu_minus"] < 0
    print(f"hydrogen pair at L=4: gap={rec['gap']:.6e} T_L={rec['T_L']:.6e}")

    hydrogen_2d = hartree.solve_monoatomic(2, coupling=0.0, r_max=30.0, n=800)
    sweep = hartree.run_sweep(hydrogen_2d, 0.25, 14.0, 11.0, [2.0, 3.0, 4.0, 5.0])
    assert len(sweep) == 4
    with tempfile.TemporaryDirectory() as tmp:
        sweep.write_csv(os.path.join(tmp, "sweep.csv"))
        sweep.write_json(os.path.join(tmp, "sweep.json"))
        with open(os.path.join(tmp, "sweep.json")) as f:
            report = json.load(f)
        assert [r["L"] for r in report["rows"]] == [2.0, 3.0, 4.0, 5.0]

    stab = hartree.stability_check(atom, trials=20, seed=11)
    assert stab["violations"] == 0 and stab["seed"] == 11

    conv = hartree.convolution_decay_check(1.0, 0.5, 2, radii=[5.0, 10.0])
    assert all(math.isfinite(x) for x in conv["self_ratios"])

    try:
        hartree.solve_monoatomic(4)
    except ValueError as e:
        print(f"rejected d=4: {e}")
    else:
        raise AssertionError("d=4 accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
