"""Transfer operator discretization, spectra, resolvent, binary dump."""

import struct

import numpy as np
import pytest

import linresp as lr
from linresp import catalog
from linresp.bvspaces import GridFunction, quadrature_weights
from linresp.maps import MapFamily
from linresp.transfer import (MeanZeroError, apply_transfer_pointwise,
                              build_operator, leading_spectrum,
                              resolvent_solve, weighted_operator)


def test_operator_preserves_lebesgue_integral():
    m = lr.tent_map()
    op = build_operator(m, None, 256)
    qw = quadrature_weights(256)
    rng = np.random.default_rng(3)
    phi = np.interp(op.nodes, np.linspace(-1, 1, 17), rng.normal(size=17))
    assert abs(qw @ op.apply(phi) - qw @ phi) < 1e-10


def test_tent_constant_density_is_exact_fixed_point():
    m = lr.tent_map()
    op = build_operator(m, None, 512)
    ones = np.ones(513)
    assert np.max(np.abs(op.apply(ones) - ones)) < 1e-13


def test_leading_spectrum_tent():
    sd = leading_spectrum(build_operator(lr.tent_map(), None, 512))
    assert sd.leading_eigenvalue == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(sd.density.values - 0.5)) < 1e-12
    assert sd.density.quadrature() == pytest.approx(1.0, abs=1e-13)
    # dual normalized against the constant function
    assert sd.dual.sum() * 1.0 == pytest.approx(1.0, rel=1e-10)


def test_resolvent_solves_linear_system():
    m = lr.tent_map()
    op = build_operator(m, None, 256)
    sd = leading_spectrum(op)
    xs = op.nodes
    w = GridFunction(xs.copy())  # mean zero for the tent quadrature
    u = resolvent_solve(op, sd, w)
    res = u.values - op.apply(u.values) - w.values
    # the residual may contain a rho_0 component from deflation; remove it
    qw = quadrature_weights(256)
    res = res - sd.density.values * (qw @ res)
    assert np.max(np.abs(res)) < 1e-9
    assert abs(qw @ u.values) < 1e-12


def test_resolvent_rejects_nonzero_mean():
    m = lr.tent_map()
    op = build_operator(m, None, 128)
    sd = leading_spectrum(op)
    with pytest.raises(MeanZeroError):
        resolvent_solve(op, sd, GridFunction(np.ones(129)))


def test_weighted_operator_reduces_to_plain_at_origin():
    fam = MapFamily.conjugation(lr.tent_map(), catalog.BUMP, t_max=0.06)
    wop = weighted_operator(fam, 0.0, 0.0, catalog.X.f, 256)
    op = build_operator(lr.tent_map(), None, 256)
    assert np.max(np.abs(wop.dense() - op.dense())) < 1e-12


def test_weighted_eigenvalue_is_pressure_of_tent():
    # lambda_{s,0} for psi = x2 satisfies lambda >= 1 and lambda(0) = 1
    fam = MapFamily.conjugation(lr.tent_map(), catalog.BUMP, t_max=0.06)
    lam0 = leading_spectrum(weighted_operator(fam, 0.0, 0.0, catalog.X2.f, 256))
    lam1 = leading_spectrum(weighted_operator(fam, 0.1, 0.0, catalog.X2.f, 256))
    assert lam0.leading_eigenvalue == pytest.approx(1.0, abs=1e-10)
    assert lam1.leading_eigenvalue > 1.0


def test_pointwise_transfer_matches_matrix_on_linear_input():
    m = lr.tent_map()
    op = build_operator(m, None, 128)
    phi = GridFunction(op.nodes * 0.3 - 0.1)
    direct = apply_transfer_pointwise(m, None, phi, op.nodes)
    assert np.max(np.abs(direct - op.apply(phi.values))) < 1e-12


def test_matrix_dump_format(tmp_path):
    op = build_operator(lr.tent_map(), None, 64)
    path = tmp_path / "op.xfer"
    op.dump(path)
    blob = path.read_bytes()
    magic, M, flags = struct.unpack_from("<4sII", blob, 0)
    assert magic == b"XFER"
    assert M == 64 and flags == 0
    body = np.frombuffer(blob, dtype="<f8", offset=16).reshape(M + 1, M + 1)
    assert np.max(np.abs(body - op.dense())) == 0.0


def test_second_eigenvalue_gap_reported():
    sd = leading_spectrum(build_operator(lr.tent_map(), None, 256))
    assert 0.0 <= sd.gap_estimate < 1.0
