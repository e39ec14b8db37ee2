#!/usr/bin/env python3
"""Smoke test for the nvfid_py extension module.

Build it first:

    cargo build --release -p nvfid-py

The script copies the resulting shared library next to itself (as
nvfid_py.so) if it is not importable yet.
"""

import math
import pathlib
import shutil
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

try:
    import nvfid_py
except ImportError:
    built = HERE.parent / "target" / "release" / "libnvfid_py.so"
    if not built.is_file():
        sys.exit("build the extension first: cargo build --release -p nvfid-py")
    shutil.copy2(built, HERE / "nvfid_py.so")
    import nvfid_py


def close(a, b, tol):
    return abs(a - b) < tol


def main():
    bath = nvfid_py.Bath.generate(seed=11)
    assert len(bath) == 520, len(bath)
    assert bath.inner_count() == 10, bath.inner_count()
    print(f"bath: {bath!r}")

    # determinism
    again = nvfid_py.Bath.generate(seed=11)
    assert bath.positions() == again.positions()

    # polarizing the inner sites only touches the inner sites
    polarized = bath.polarize([0.0, 0.0, 1.0])
    n_polarized = sum(1 for p in polarized.polarizations() if p != [0.0, 0.0, 0.0])
    assert n_polarized == bath.inner_count(), n_polarized

    times = [i * 0.1 for i in range(101)]
    phi = nvfid_py.analytic_series(polarized, 100.0, times)
    assert close(phi[0], 1.0, 1e-12), phi[0]
    assert all(abs(v) <= 1.0 + 1e-12 for v in phi)
    print(f"analytic: phi(10us) = {phi[-1]:.6f}")

    # the circuit backend reproduces the closed form on a small group
    idx = [0, 1, 2]
    short = times[:21]
    exact = nvfid_py.circuit_series(polarized, idx, 100.0, short)
    closed = nvfid_py.analytic_series(polarized, 100.0, short, indices=idx)
    worst = max(abs(a - b) for a, b in zip(exact, closed))
    assert worst < 1e-9, worst
    print(f"circuit vs closed form: max deviation {worst:.2e}")

    # shot noise stays within a few standard errors
    shots = nvfid_py.circuit_series(polarized, idx, 100.0, short, shots=4096, seed=5)
    worst = max(abs(a - b) for a, b in zip(shots, closed))
    assert worst < 0.15, worst
    print(f"4096 shots: max deviation {worst:.3f}")

    # crosstalk on a coupled placement leaves an imaginary part;
    # the isolated placement does not
    proto = polarized.polarize([0.0, 0.0, 0.0])
    quiet = nvfid_py.device_series(proto, [0, 1], 100.0, short, placement="left_right")
    noisy = nvfid_py.device_series(proto, [0, 1], 100.0, short, placement="top_right")
    assert max(abs(v.imag) for v in quiet) < 1e-9
    assert max(abs(v.imag) for v in noisy) > 1e-3
    print("crosstalk: only the coupled placement picks up Im phi")

    # spectrum integrates to ~1 and is essentially positive here
    grid = [i * 0.05 for i in range(401)]
    phi = nvfid_py.analytic_series(polarized, 100.0, grid)
    omegas, weights, neg = nvfid_py.spectrum(grid, phi, sigma=5.0)
    total = sum(weights) * (omegas[1] - omegas[0])
    assert close(total, 1.0, 1e-6), total
    assert neg < 1e-3, neg
    print(f"spectrum: total weight {total:.6f}, negativity {neg:.2e}")

    theta, phi_g, lam, gamma = nvfid_py.conditional_gate_params([0.0, 0.0, 0.9], 100.0, 1.0)
    for v in (theta, phi_g, lam, gamma):
        assert math.isfinite(v)
    print(f"gate params at 1us: theta={theta:.4f}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
