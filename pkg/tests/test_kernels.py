import math

import numpy as np
import pytest

from bwp import kernels
from bwp.geometry import TOL, crossing_count, link_crossings, make_office_layout

OFFICE = make_office_layout()


def _rays(n, seed, ue=(55.3, 7.1)):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * math.pi, n)
    # include axis-aligned and corner-hitting directions
    theta[:8] = np.arange(8) * math.pi / 4
    r = rng.uniform(0.1, 120.0, n)
    return np.column_stack((np.cos(theta), np.sin(theta))), r


def test_backend_resolved():
    assert kernels.BACKEND in kernels.BACKENDS
    assert "python" in kernels.BACKENDS


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")
def test_backends_agree():
    dirs, r = _rays(4000, 1)
    walls = OFFICE.wall_array
    py, cy = kernels.BACKENDS["python"], kernels.BACKENDS["cython"]
    np.testing.assert_array_equal(py.first_hits(55.3, 7.1, dirs, r, walls, TOL),
                                  cy.first_hits(55.3, 7.1, dirs, r, walls, TOL))
    t_py, a_py = py.all_hits(55.3, 7.1, dirs, r, walls, TOL)
    t_cy, a_cy = cy.all_hits(55.3, 7.1, dirs, r, walls, TOL)
    np.testing.assert_allclose(t_py, t_cy, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(a_py, a_cy)


@pytest.mark.parametrize("name", sorted(kernels.BACKENDS))
def test_kernel_matches_scalar_crossings(name):
    impl = kernels.BACKENDS[name]
    ue = (55.3, 7.1)
    dirs, r = _rays(400, 2)
    t, att = impl.all_hits(ue[0], ue[1], dirs, r, OFFICE.wall_array, TOL)
    first = impl.first_hits(ue[0], ue[1], dirs, r, OFFICE.wall_array, TOL)
    for k in range(len(r)):
        tx = (ue[0] + r[k] * dirs[k, 0], ue[1] + r[k] * dirs[k, 1])
        # scalar routine measures from tx; the kernel from the UE
        cr = link_crossings(OFFICE, ue, tx)
        n = int(np.isfinite(t[k]).sum())
        assert n == len(cr) == crossing_count(OFFICE, tx, ue)
        if n:
            np.testing.assert_allclose(t[k, :n], [c[0] for c in cr], atol=1e-9)
            np.testing.assert_array_equal(att[k, :n], [c[2] for c in cr])
            assert first[k] == pytest.approx(cr[0][0], abs=1e-9)
        else:
            assert math.isinf(first[k])


def test_empty_wall_array():
    dirs, r = _rays(10, 3)
    for impl in kernels.BACKENDS.values():
        assert np.all(np.isinf(impl.first_hits(0.0, 0.0, dirs, r, np.zeros((0, 5)), TOL)))
