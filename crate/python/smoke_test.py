"""Smoke test for the ssdkit extension module.

Install the module first, either as a wheel (`maturin build --release` in
crates/py, then `pip install` the result) or by copying
`target/release/libssdkit.so` to `ssdkit.so` somewhere on `PYTHONPATH`.
"""

import math

import ssdkit


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    tri = ssdkit.Space.triple()
    close(tri.q([1.0, -1.0, 2.0]), 1.0, 1e-12)

    thetas = [-2 * math.pi + 4 * math.pi * k / 79 for k in range(80)]
    assert ssdkit.PointSet.helix(1.0, thetas).is_q_positive()["positive"]
    half = ssdkit.PointSet.helix(0.5, thetas).is_q_positive()
    assert not half["positive"] and half["witness"] is not None

    r = ssdkit.posneg_decompose(
        ssdkit.Space.product(1),
        ssdkit.ConvexFunction.quadratic([[0.5, 0.5], [0.5, 0.5]], [0.0, 0.0]),
        ssdkit.ConvexFunction.g0(2),
        [1.0, 0.0],
    )
    for got, want in zip(r["p"] + r["n"], [0.5, 0.5, -0.5, 0.5]):
        close(got, want, 1e-6)

    conj = ssdkit.ConvexFunction.abs().conjugate()
    assert conj([0.5]) == 0.0 and conj([2.0]) == math.inf

    abs_op = ssdkit.MonotoneOp.subdiff(ssdkit.ConvexFunction.abs())
    close(ssdkit.surjectivity_solve(abs_op, [3.0])["x"][0], 2.0, 1e-10)

    h = ssdkit.hammerstein_solve(ssdkit.MonotoneOp.identity(1), ssdkit.MonotoneOp.identity(1), [1.0])
    close(h["y"][0], 0.5, 1e-8)

    try:
        ssdkit.Space.hilbert(2).pair([1.0], [1.0, 2.0])
    except ValueError:
        pass
    else:
        raise AssertionError("dimension mismatch accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
