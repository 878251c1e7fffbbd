"""Kernel property sweeps: two-regime bounds and uniform Bessel bounds.

These back the kernel-check command and the acceptance suite. The split
radius r0 = z0 / kappa uses z0 = 1, which separates the power-law regime
from the exponential one cleanly for orders nu in (1/2, 3/2).
"""

from __future__ import annotations

import numpy as np

from .kernel import abs_gamma_neg, bessel_k, gamma_kernel
from .smoothness import beta as beta_of
from scipy.special import gamma as _gamma_fn

__all__ = ["Z0_DEFAULT", "near_field_limit", "two_regime_summary", "bessel_bound_summary"]

Z0_DEFAULT = 1.0


def near_field_limit(b):
    """Closed-form r -> 0 limit of gamma * r^{1 + 2 beta} (kappa-independent)."""
    b = np.asarray(b, dtype=float)
    nu = 0.5 + b
    out = 2.0 ** (2.0 * b) * _gamma_fn(nu) / (2.0 * np.sqrt(np.pi) * abs_gamma_neg(b))
    if np.ndim(b) == 0:
        return float(out)
    return out


def _sample_pairs(rng, domain, r_lo, r_hi, count):
    lo, hi = domain
    r = np.exp(rng.uniform(np.log(r_lo), np.log(r_hi), count))
    x = rng.uniform(lo, hi, count)
    y = x + np.where(rng.uniform(size=count) < 0.5, r, -r)
    # reflect back into the domain when the step leaves it
    flip = (y < lo) | (y > hi)
    y = np.where(flip, x - (y - x), y)
    ok = (y >= lo) & (y <= hi)
    return x[ok], y[ok], r[ok]


def two_regime_summary(ctx, domain, n_pairs=10_000, seed=0, z0=Z0_DEFAULT,
                       r_min=1e-6):
    """Near/far kernel-regime sweep over random pairs.

    Near field (r <= z0/kappa): gamma * r^(1+2 beta) must stay inside a
    single positive interval and approach its closed-form limit as r -> 0.
    Far field (r >= z0/kappa): gamma * r^(1/2) exp(kappa r) likewise.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    lo, hi = float(domain[0]), float(domain[1])
    diam = hi - lo
    r0 = z0 / ctx.kappa
    out = {"z0": z0, "r0": r0, "domain": [lo, hi], "n_pairs": int(n_pairs)}

    x, y, r = _sample_pairs(rng, (lo, hi), r_min, min(r0, diam), n_pairs)
    b = beta_of(ctx.profile, x, y)
    near = gamma_kernel(ctx, x, y) * r ** (1.0 + 2.0 * b)
    out["near"] = {
        "min": float(near.min()),
        "max": float(near.max()),
        "ratio": float(near.max() / near.min()),
    }

    # limit check at the smallest sampled radius
    xs = rng.uniform(lo + r_min, hi - r_min, 512)
    ys = xs + r_min
    bs = beta_of(ctx.profile, xs, ys)
    val = gamma_kernel(ctx, xs, ys) * r_min ** (1.0 + 2.0 * bs)
    lim = near_field_limit(bs)
    out["near_limit_max_rel_dev"] = float(np.max(np.abs(val - lim) / lim))

    if r0 < diam:
        x, y, r = _sample_pairs(rng, (lo, hi), r0, diam, n_pairs)
        far = gamma_kernel(ctx, x, y) * np.sqrt(r) * np.exp(ctx.kappa * r)
        out["far"] = {
            "min": float(far.min()),
            "max": float(far.max()),
            "ratio": float(far.max() / far.min()),
        }
    return out


def bessel_bound_summary(nu_lo=0.85, nu_hi=1.35, n_nu=11, z0=Z0_DEFAULT,
                         z_max=50.0, n_z=400):
    """Empirical constants of the uniform small-/large-argument K_nu bounds.

    For each order on the grid: K_nu(z) z^nu over z <= z0 (bounded interval
    [c0, c1]) and K_nu(z) z^(1/2) e^z over z >= z0 (bounded above by c2).
    """
    nus = np.linspace(nu_lo, nu_hi, n_nu)
    z_small = np.geomspace(1e-8, z0, n_z)
    z_large = np.geomspace(z0, z_max, n_z)
    per_nu = []
    for nu in nus:
        small = bessel_k(np.full_like(z_small, nu), z_small) * z_small**nu
        large = bessel_k(np.full_like(z_large, nu), z_large) * np.sqrt(z_large) * np.exp(z_large)
        per_nu.append(
            {
                "nu": float(nu),
                "c0": float(small.min()),
                "c1": float(small.max()),
                "c2": float(large.max()),
            }
        )
    return {
        "z0": z0,
        "nu_grid": [p["nu"] for p in per_nu],
        "per_nu": per_nu,
        "c0_global": float(min(p["c0"] for p in per_nu)),
        "c1_global": float(max(p["c1"] for p in per_nu)),
        "c2_global": float(max(p["c2"] for p in per_nu)),
    }
