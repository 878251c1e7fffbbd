"""Coupled-noise nested-mesh strong-error estimation and rate reporting.

One fine Gaussian vector drives every level: the fine load is b_f = L_f z,
coarser loads are successive restrictions P^T b. The strong error between
consecutive levels is measured in the fine-level mass norm (or the
quadrature variant), and the rate estimate is log2(E_{l-1} / E_l).
"""

from __future__ import annotations

import numpy as np

from .assembly import assemble_stiffness
from .kernel import KernelContext
from .linalg import solve_with_factor
from .mesh import build_uniform
from .quadrature import gauss_legendre_01
from .sampler import draw_noise

__all__ = [
    "RateReport",
    "injection",
    "coupled_loads",
    "level_error",
    "level_error_samples",
    "level_error_quadrature",
    "rate_from_systems",
    "estimate_rate",
]


class RateReport:
    """Per-level strong errors and the estimated convergence rate."""

    __slots__ = ("levels", "m", "errors", "r_hat", "norm_kind", "config", "per_sample")

    def __init__(self, levels, m, errors, r_hat, norm_kind, config, per_sample=None):
        self.levels = list(levels)
        self.m = int(m)
        self.errors = dict(errors)
        self.r_hat = float(r_hat)
        self.norm_kind = norm_kind
        self.config = dict(config)
        self.per_sample = dict(per_sample or {})

    def to_dict(self):
        return {
            "levels": self.levels,
            "m": self.m,
            "errors": {str(k): v for k, v in self.errors.items()},
            "r_hat": self.r_hat,
            "norm_kind": self.norm_kind,
            "config": self.config,
        }


def injection(coarse, fine):
    """Coarse-to-fine nodal interpolation matrix on the interior unknowns.

    Coinciding nodes copy, fine midpoints average their coarse neighbours;
    coarse values beyond the unknowns follow the zero-extension convention.
    """
    if fine.level != coarse.level + 1 or fine.r_int != coarse.r_int or \
            fine.r_ext != coarse.r_ext:
        raise ValueError(
            f"incompatible meshes: fine level {fine.level} vs coarse {coarse.level}"
        )
    xf = fine.interior_coords
    xc = coarse.interior_coords
    p = np.zeros((xf.size, xc.size))
    # Even fine nodes coincide with coarse nodes, odd ones are midpoints.
    p[np.arange(0, xf.size, 2), np.arange(xc.size)] = 1.0
    mid = np.arange(1, xf.size, 2)
    left = (mid - 1) // 2
    p[mid, left] = 0.5
    p[mid, left + 1] = 0.5
    return p


def coupled_loads(fine_system, coarser_meshes, m, seed):
    """Loads per level: fine b = L z, then successive restrictions P^T b.

    ``coarser_meshes`` is ordered fine-to-coarse, each one level below the
    previous; the returned list starts with the fine load.
    """
    loads = [draw_noise(fine_system.mass_cholesky, m, seed)]
    mesh_fine = fine_system.mesh
    for mesh_coarse in coarser_meshes:
        p = injection(mesh_coarse, mesh_fine)
        loads.append(p.T @ loads[-1])
        mesh_fine = mesh_coarse
    return loads


def level_error_samples(fine_batch, coarse_batch, p, mass_fine):
    """Per-sample mass-norm distances between coupled level solutions."""
    if fine_batch.shape[1] != coarse_batch.shape[1]:
        raise ValueError(
            f"sample count mismatch: {fine_batch.shape[1]} vs {coarse_batch.shape[1]}"
        )
    d = fine_batch - p @ coarse_batch
    return np.sqrt(np.einsum("ik,ij,jk->k", d, mass_fine, d))


def level_error(fine_batch, coarse_batch, p, mass_fine):
    """Root-mean-square mass-norm distance between coupled level solutions."""
    return float(
        np.sqrt(np.mean(level_error_samples(fine_batch, coarse_batch, p, mass_fine) ** 2))
    )


def level_error_quadrature(fine_batch, coarse_batch, p, fine_mesh, n=2):
    """Alternative norm: per-element Gauss quadrature of the squared error.

    Runs over every element of the fine mesh, so it also sees the hat tails
    on the first exterior elements (the mass-norm variant integrates over D
    only).
    """
    if fine_batch.shape[1] != coarse_batch.shape[1]:
        raise ValueError(
            f"sample count mismatch: {fine_batch.shape[1]} vs {coarse_batch.shape[1]}"
        )
    d = fine_batch - p @ coarse_batch
    # nodal values of the error on all nodes (zero on the exterior ones)
    full = np.zeros((fine_mesh.n_nodes, d.shape[1]))
    full[fine_mesh.interior_slice] = d
    rule = gauss_legendre_01(n)
    left = full[:-1, :]
    right = full[1:, :]
    vals_sq = 0.0
    for xq, wq in zip(rule.nodes, rule.weights):
        vq = (1.0 - xq) * left + xq * right
        vals_sq = vals_sq + wq * vq**2
    per_sample = fine_mesh.h * np.sum(vals_sq, axis=0)
    return float(np.sqrt(np.mean(per_sample)))


def rate_from_systems(systems, m, seed, norm_kind="mass_matrix", extra_config=None):
    """Rate estimate from three prebuilt systems ordered fine to coarse."""
    if norm_kind not in ("mass_matrix", "quadrature"):
        raise ValueError(f"unknown norm kind {norm_kind!r}")
    levels = [s.mesh.level for s in systems]
    if len(systems) != 3 or levels[0] - levels[1] != 1 or levels[1] - levels[2] != 1:
        raise ValueError(f"need three consecutive levels fine to coarse, got {levels}")
    meshes = [s.mesh for s in systems]
    mu = systems[0].ctx.mu
    try:
        loads = coupled_loads(systems[0], meshes[1:], m, seed)
    except Exception as exc:
        raise RuntimeError(f"coupled load generation failed: {exc}") from exc

    sols = []
    for sys_l, b in zip(systems, loads):
        try:
            sols.append(solve_with_factor(sys_l.stiffness_cholesky, b) / mu)
        except Exception as exc:
            raise RuntimeError(
                f"solve failed at level {sys_l.mesh.level}: {exc}"
            ) from exc

    errors = {}
    per_sample = {}
    for i in (0, 1):
        p = injection(meshes[i + 1], meshes[i])
        if norm_kind == "mass_matrix":
            samples = level_error_samples(sols[i], sols[i + 1], p, systems[i].m)
            per_sample[levels[i]] = samples
            e = float(np.sqrt(np.mean(samples**2)))
        else:
            e = level_error_quadrature(sols[i], sols[i + 1], p, meshes[i])
        errors[levels[i]] = e
    r_hat = float(np.log2(errors[levels[1]] / errors[levels[0]]))
    config = {
        "kernel": systems[0].ctx.to_dict(),
        "mesh": meshes[0].to_dict(),
        "seed": seed,
        "quad_n_per_level": {
            str(s.mesh.level): s.quad_meta["n_disjoint"] for s in systems
        },
    }
    config.update(extra_config or {})
    return RateReport(levels, m, errors, r_hat, norm_kind, config, per_sample)


def estimate_rate(
    profile,
    kappa,
    mu,
    r_int,
    r_ext,
    levels,
    m,
    seed,
    *,
    quad_c=1.0,
    target_rate=None,
    n_override=None,
    norm_kind="mass_matrix",
    strategy="auto",
    threads=1,
):
    """Estimate the strong L2 rate from three consecutive levels.

    Assembles one system per level (quadrature order grows with the level
    so that the quadrature error stays subdominant), couples the noise by
    successive restriction, and returns log2(E_{l-1} / E_l).
    """
    levels = sorted(set(int(l) for l in levels), reverse=True)
    if len(levels) != 3 or levels[0] - levels[1] != 1 or levels[1] - levels[2] != 1:
        raise ValueError(f"need three consecutive levels, got {levels}")
    ctx = KernelContext(kappa, mu, profile)
    systems = []
    for lev in levels:
        try:
            mesh = build_uniform(r_int, r_ext, lev)
            systems.append(
                assemble_stiffness(
                    mesh, ctx, n=n_override, c=quad_c, target_rate=target_rate,
                    strategy=strategy, threads=threads,
                )
            )
        except Exception as exc:
            raise RuntimeError(f"assembly failed at level {lev}: {exc}") from exc
    extra = {
        "quad_c": quad_c,
        "target_rate": target_rate,
        "n_override": n_override,
        "r_int": r_int,
        "r_ext": r_ext,
    }
    return rate_from_systems(systems, m, seed, norm_kind, extra)
