"""Smoke test for the mlpagerank_py extension.

Build and install first, e.g. from crates/py:

    maturin build --release -o dist && pip install dist/*.whl
"""

import math

import mlpagerank_py as mp


def close(a, b, tol):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    t = mp.StochasticTensor.random(5, 2, 42)
    assert (t.n, t.m) == (5, 2)
    assert len(t.rows()) == 5 and len(t.rows()[0]) == 25

    x = [0.2] * 5
    y = t.apply(x)
    assert math.isclose(sum(y), 1.0, abs_tol=1e-12)

    p = mp.Problem(t, 0.99)
    assert math.isclose(sum(p.v), 1.0)
    j = p.jacobian_h(x)
    assert len(j) == 5 and len(j[0]) == 6

    pcn = mp.pc_newton(p)
    assert pcn.converged, pcn
    assert pcn.residual_norm <= math.sqrt(2.0**-52)
    assert math.isclose(sum(pcn.x), 1.0, abs_tol=1e-10)
    alphas = [row[0] for row in pcn.trace]
    assert alphas[0] < alphas[-1]

    low = mp.Problem(t, 0.45)
    a = mp.newton(low)
    b = mp.fixed_point(low)
    assert a.converged and b.converged
    assert close(a.x, b.x, 1e-6)

    c = mp.c_alpha(0.9, 2)
    assert math.isclose(0.9 * c * c - c + 0.1, 0.0, abs_tol=1e-14)
    m = mp.minimal_solution(mp.Problem(t, 0.9))
    assert math.isclose(sum(m.x), c, abs_tol=1e-6)

    rows, status = mp.trace_curve(low, alpha_stop=0.95)
    assert status == "converged" and rows[-1][0] >= 0.95

    try:
        mp.Problem(t, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha = 1 accepted")

    try:
        mp.StochasticTensor([[0.5, 0.5, 0.5, 0.5], [0.0, 0.0, 0.0, 0.0]], 2)
    except ValueError:
        pass
    else:
        raise AssertionError("non-stochastic tensor accepted")

    counts = mp.failure_counts(["n", "pcn"], [0.99], ensemble=200)
    assert dict(((meth, a), f) for meth, a, f in counts)[("pcn", 0.99)] == 0

    print("ok")


if __name__ == "__main__":
    main()
