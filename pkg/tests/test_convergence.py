import numpy as np
import pytest

from varmatern.convergence import (
    coupled_loads,
    estimate_rate,
    injection,
    level_error,
    level_error_quadrature,
    rate_from_systems,
)
from varmatern.mesh import build_uniform
from varmatern.sampler import draw_noise

from conftest import PROFILES


def test_injection_structure():
    coarse = build_uniform(3, 4, 2)
    fine = build_uniform(3, 4, 3)
    p = injection(coarse, fine)
    assert p.shape == (fine.interior_node_count, coarse.interior_node_count)
    # coinciding nodes copy: each coarse column has a single 1 on even rows
    even = p[::2]
    assert np.array_equal(even, np.eye(coarse.interior_node_count))
    # midpoints average the two coarse neighbours
    odd = p[1::2]
    assert np.all(np.sum(odd != 0, axis=1) == 2)
    assert np.allclose(odd[odd != 0], 0.5)
    # constant-1 coarse vector interpolates to 1 at every fine unknown
    assert np.allclose(p @ np.ones(coarse.interior_node_count), 1.0)


def test_injection_rejects_incompatible():
    with pytest.raises(ValueError):
        injection(build_uniform(3, 4, 2), build_uniform(3, 4, 4))
    with pytest.raises(ValueError):
        injection(build_uniform(3, 5, 2), build_uniform(3, 4, 3))


def test_coupled_loads_single_level(build_system):
    system = build_system("const05", 2.5, 3)
    loads = coupled_loads(system, [], 8, seed=3)
    assert len(loads) == 1
    assert np.array_equal(loads[0], draw_noise(system.mass_cholesky, 8, seed=3))


def test_coupled_loads_restriction_linearity(build_system):
    fine = build_system("const05", 2.5, 4)
    coarse_mesh = build_uniform(3, 4, 3)
    p = injection(coarse_mesh, fine.mesh)
    b1 = draw_noise(fine.mass_cholesky, 4, seed=1)
    b2 = draw_noise(fine.mass_cholesky, 4, seed=2)
    assert np.allclose(p.T @ (b1 + b2), p.T @ b1 + p.T @ b2)


def test_coupled_loads_galerkin_mass(build_system):
    fine = build_system("const05", 2.5, 3)
    coarse = build_system("const05", 2.5, 2)
    m = 10_000
    loads = coupled_loads(fine, [coarse.mesh], m, seed=17)
    b_c = loads[1]
    emp = b_c @ b_c.T / m
    p = injection(coarse.mesh, fine.mesh)
    ref = p.T @ fine.m @ p
    stderr = np.sqrt((np.outer(np.diag(ref), np.diag(ref)) + ref**2) / m)
    assert np.all(np.abs(emp - ref) <= 5 * stderr)


def test_level_error_identical_and_unit_vector(build_system):
    fine = build_system("const05", 2.5, 3)
    coarse = build_system("const05", 2.5, 2)
    p = injection(coarse.mesh, fine.mesh)
    u_c = np.zeros((coarse.n, 3))
    u_f = p @ u_c
    assert level_error(u_f, u_c, p, fine.m) == 0.0
    # d = e_i gives E^2 = M_ii
    i = 5
    d = np.zeros((fine.n, 1))
    d[i] = 1.0
    e = level_error(p @ u_c[:, :1] + d, u_c[:, :1], p, fine.m)
    assert e == pytest.approx(np.sqrt(fine.m[i, i]), rel=1e-13)
    with pytest.raises(ValueError):
        level_error(u_f, u_c[:, :2], p, fine.m)


def test_quadrature_norm_close_to_mass_norm(build_system):
    systems = [build_system("const05", 2.5, lev) for lev in (5, 4, 3)]
    rep_mass = rate_from_systems(systems, 200, seed=31, norm_kind="mass_matrix")
    rep_quad = rate_from_systems(systems, 200, seed=31, norm_kind="quadrature")
    for lev in (5, 4):
        ratio = rep_quad.errors[lev] / rep_mass.errors[lev]
        assert abs(ratio - 1.0) < 0.10


def test_estimate_rate_report_contents():
    report = estimate_rate(
        PROFILES["const05"](), 2.5, 1.0, 3.0, 4.0, [5, 4, 3], 100, seed=19
    )
    assert report.levels == [5, 4, 3]
    assert report.m == 100
    assert all(v > 0 for v in report.errors.values())
    assert report.r_hat == pytest.approx(
        np.log2(report.errors[4] / report.errors[5]), abs=1e-14
    )
    d = report.to_dict()
    assert set(d) == {"levels", "m", "errors", "r_hat", "norm_kind", "config"}
    assert d["config"]["quad_n_per_level"]["5"] >= 4
    assert report.per_sample[5].shape == (100,)


def test_estimate_rate_validates_levels():
    prof = PROFILES["const05"]()
    with pytest.raises(ValueError):
        estimate_rate(prof, 2.5, 1.0, 3.0, 4.0, [5, 3, 2], 10, seed=1)
    with pytest.raises(ValueError):
        estimate_rate(prof, 2.5, 1.0, 3.0, 4.0, [5, 4], 10, seed=1)


def test_rate_from_systems_validates_order(build_system):
    systems = [build_system("const05", 2.5, lev) for lev in (3, 4, 5)]
    with pytest.raises(ValueError):
        rate_from_systems(systems, 10, seed=1)


def test_stage_failure_names_stage(monkeypatch, build_system):
    systems = [build_system("const05", 2.5, lev) for lev in (5, 4, 3)]
    import varmatern.convergence as conv

    def boom(*a, **k):
        raise RuntimeError("synthetic")

    monkeypatch.setattr(conv, "draw_noise", boom)
    with pytest.raises(RuntimeError, match="coupled load"):
        rate_from_systems(systems, 10, seed=1)
