"""GridFunction plumbing and p-variation norms."""

import numpy as np
import pytest

from linresp.bvspaces import (GridFunction, bvp_norm, quadrature_weights,
                              sup_norm, var_p, var_p_bruteforce)


def test_grid_function_basics():
    u = GridFunction.from_callable(lambda x: x**2, 16)
    assert u.grid_size == 16
    assert u.nodes[0] == -1.0 and u.nodes[-1] == 1.0
    assert abs(u.h - 2.0 / 16) < 1e-15
    # trapezoid of x^2 on [-1,1] with the composite rule
    assert abs(u.quadrature() - 2.0 / 3.0) < 1e-2


def test_linear_interpolation_is_exact_on_lines():
    u = GridFunction.from_callable(lambda x: 3.0 * x - 0.5, 32)
    xq = np.linspace(-1, 1, 257)
    assert np.allclose(u(xq), 3.0 * xq - 0.5, atol=1e-14)


def test_quadrature_weights_sum_to_length():
    w = quadrature_weights(64)
    assert abs(w.sum() - 2.0) < 1e-14
    assert w[0] == w[-1] == w[1] / 2.0


def test_var_1_is_sum_of_increments():
    vals = np.array([0.0, 1.0, -1.0, 0.5])
    assert abs(var_p(vals, 1.0) - (1.0 + 2.0 + 1.5)) < 1e-15


def test_var_p_monotone_sequence():
    vals = np.linspace(0.0, 1.0, 9)
    for p in (1.0, 1.5, 2.0, 3.0):
        # a monotone sequence has p-variation |b - a|^p -> var_p root = 1
        assert abs(var_p(vals, p) - 1.0) < 1e-14


def test_var_p_matches_bruteforce_seeded():
    rng = np.random.default_rng(123)
    for _ in range(60):
        n = int(rng.integers(2, 11))
        vals = rng.normal(size=n)
        for p in (1.0, 1.5, 2.0, 3.0):
            assert abs(var_p(vals, p) - var_p_bruteforce(vals, p)) <= 1e-12


def test_var_p_invalid_p():
    with pytest.raises(ValueError):
        var_p([0.0, 1.0], 0.5)


def test_bvp_norm_includes_support_extension():
    # zero extension outside [-1,1] contributes the two endpoint jumps
    u = GridFunction(np.ones(17))
    assert bvp_norm(u, 1.0) == pytest.approx(2.0)
    assert sup_norm(u) == 1.0


def test_holder_embedding_bound():
    # 1/p-Holder functions embed in BV_p: bvp_norm <= holder constant times
    # 2^{1/p} plus the support-extension jumps (2 sup|u|)
    from linresp import catalog
    from linresp.conjugacy import holder_norm
    for name in ("sinpi", "bump", "xbump", "x2"):
        fn = catalog.resolve(name)
        u = GridFunction.from_callable(fn.f, 512)
        for p in (1.5, 2.0):
            bound = (holder_norm(u, 1.0 / p).constant * 2 ** (1.0 / p)
                     + 2.0 * sup_norm(u))
            assert bvp_norm(u, p) <= bound


def test_jump_tags_give_one_sided_values():
    vals = np.zeros(9)
    vals[4:] = 1.0  # jump at node 4 (x = 0)
    u = GridFunction(vals, jump_tags=(4,))
    assert u(-0.01) == 0.0
    assert u(0.01) == 1.0
