"""Dense assembly of the variable-order nonlocal stiffness and mass matrices.

The stiffness splits as A = A1 + A2: A1 is the kappa^{2 s(x)}-weighted mass
over interior elements, A2 the nonlocal pair sum over all element pairs.
Vertex-sharing and identical pairs are integrated with the singularity-
resolving changes of variables (Duffy map plus power substitutions whose
exponent uses the pair-local upper order bound, which coincides with the
global bound for constant-order profiles); disjoint pairs use plain tensor
Gauss.

Pair bookkeeping: each unordered pair is computed once and off-diagonal
pairs enter with factor 2 (the ordered double sum visits them twice). Pairs
with both elements exterior are skipped. Note the double sum formally runs
over all pairs while the constrained test space only sees unknown indices;
the two agree except that the skipping also drops the exterior tails of the
two hats sitting exactly on +-r_int - a recorded convention whose effect is
confined to the outermost unknowns.

The polynomial factors of the basis differences inside the transformed
integrands are derived from the affine maps at assembly time (not
hard-coded sign tables), and beta is evaluated at mapped physical points,
never frozen per element.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import smoothness
from .kernel import _phi_from_beta, _prefactor_from_beta, bessel_k
from .linalg import cholesky
from .mesh import adjacent_pair_maps, classify_pair, hat_eval
from .quadrature import gauss_legendre_01, quadrature_order

__all__ = [
    "AssemblyError",
    "AssembledSystem",
    "assemble_plain_mass",
    "assemble_weighted_mass",
    "pair_block_identical",
    "pair_block_adjacent",
    "pair_block_disjoint",
    "assemble_stiffness",
]


class AssemblyError(RuntimeError):
    """Numerical failure during assembly (non-finite block, bad pair)."""


class AssembledSystem:
    """Assembled dense system: stiffness A = A1 + A2 and plain mass M.

    Both matrices live on the N interior unknowns (ascending coordinates).
    Cholesky factors are computed lazily and cached.
    """

    def __init__(self, mesh, ctx, a, m, a1, quad_meta):
        self.mesh = mesh
        self.ctx = ctx
        self.a = a
        self.m = m
        self.a1 = a1
        self.quad_meta = dict(quad_meta)
        self._chol_a = None
        self._chol_m = None

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def stiffness_cholesky(self):
        if self._chol_a is None:
            self._chol_a = cholesky(self.a)
        return self._chol_a

    @property
    def mass_cholesky(self):
        if self._chol_m is None:
            self._chol_m = cholesky(self.m)
        return self._chol_m

    def to_manifest(self):
        return {
            "mesh": self.mesh.to_dict(),
            "kernel": self.ctx.to_dict(),
            "quadrature": self.quad_meta,
        }


def assemble_plain_mass(mesh):
    """Mass matrix over D: tridiagonal P1 Gram matrix, assembled exactly.

    The nodes at +-r_int have only one supporting element inside D, so their
    diagonal entry is h/3 instead of 2h/3.
    """
    n = mesh.interior_node_count
    h = mesh.h
    m = np.zeros((n, n))
    diag = np.full(n, 2.0 * h / 3.0)
    diag[0] = diag[-1] = h / 3.0
    np.fill_diagonal(m, diag)
    off = np.full(n - 1, h / 6.0)
    m[np.arange(n - 1), np.arange(1, n)] = off
    m[np.arange(1, n), np.arange(n - 1)] = off
    return m


def assemble_weighted_mass(mesh, ctx, rule):
    """A1: kappa^{2 s(x)}-weighted mass over interior elements, per-element Gauss."""
    n = mesh.interior_node_count
    lo = mesh.first_interior_node
    els = np.flatnonzero(mesh.element_interior)
    lefts = mesh.nodes[els]
    xq, wq = rule.nodes, rule.weights
    pts = lefts[:, None] + mesh.h * xq[None, :]
    weight = ctx.kappa ** (2.0 * smoothness.evaluate(ctx.profile, pts))
    psi = np.stack([1.0 - xq, xq])
    local = mesh.h * np.einsum("eq,q,aq,bq->eab", weight, wq, psi, psi)
    a1 = np.zeros((n, n))
    flat = a1.ravel()
    first = int(els[0]) - lo
    stride = n + 1
    for da in range(2):
        for db in range(2):
            start = (first + da) * n + (first + db)
            flat[start : start + els.size * stride : stride] += local[:, da, db]
    return a1


def _element_order_max(profile, mesh):
    """Per-element maximum of s, sampled densely (includes the endpoints).

    Drives the pair-local upper bound used in the singularity-resolving
    substitutions. The substitution is exact for any admissible exponent;
    the local bound keeps the power of the transformed variable near zero,
    which preserves the fast tensor-Gauss convergence even for profiles
    whose order jumps between elements (local and global bounds coincide
    for constant-order profiles).
    """
    samples = np.linspace(0.0, 1.0, 33)
    pts = mesh.nodes[: mesh.n_elements, None] + mesh.h * samples[None, :]
    s_vals = smoothness.evaluate(profile, pts)
    return np.max(s_vals, axis=1)


def _identical_common(ctx, h, rule, s_up, anchor_coords, sign=1.0, swapped=False):
    """Transformed identical-pair integrand (one triangle half), summed.

    Returns the quadrature value of the scalar part for each element (the
    basis-difference product contributes only signs q_a q_b = +-1).
    ``swapped`` selects the second triangle half (xhat = xi eta, yhat = xi);
    beta and the regularized factor are symmetric, so both halves agree.
    ``sign`` picks the endpoint the refinement anchors to (+1: reference
    origin at the left endpoint, -1: at the right endpoint); both
    parameterizations are exact, and assembly averages them so that
    mirror-symmetric profiles produce mirror-symmetric matrices.
    anchor_coords and the upper bounds s_up both have shape (E,).
    """
    zeta = rule.nodes
    t = rule.nodes
    s_up = s_up[:, None, None]
    xi = zeta[None, :, None] ** (1.0 / (3.0 - 2.0 * s_up))  # (E, n, 1)
    one_m_eta = t[None, None, :] ** (1.0 / (2.0 - 2.0 * s_up))  # (E, 1, n)
    x = anchor_coords[:, None, None] + sign * h * xi + 0.0 * one_m_eta
    y = anchor_coords[:, None, None] + sign * h * xi * (1.0 - one_m_eta)
    if swapped:
        x, y = y, x
    b = smoothness.beta(ctx.profile, x, y)
    r = h * xi * one_m_eta  # product form: no cancellation
    ph = _phi_from_beta(ctx.kappa, b, r)
    log_h = np.log(h)
    log_zeta = np.log(zeta)[None, :, None]
    log_t = np.log(t)[None, None, :]
    common = (
        1.0
        / ((2.0 - 2.0 * s_up) * (3.0 - 2.0 * s_up))
        * np.exp(
            (1.0 - 2.0 * b) * log_h
            + (2.0 * s_up - 2.0 * b) / (3.0 - 2.0 * s_up) * log_zeta
            + (2.0 * s_up - 2.0 * b) / (2.0 - 2.0 * s_up) * log_t
        )
        * ph
    )
    return np.einsum("i,j,eij->e", rule.weights, rule.weights, common)


def _identical_q_signs(mesh, e):
    # Slopes of the two supporting hats through the element, from the map.
    tmap = mesh.affine_map(e)
    return np.array(
        [
            hat_eval(mesh, node, tmap(1.0)) - hat_eval(mesh, node, tmap(0.0))
            for node in (e, e + 1)
        ]
    )


def pair_block_identical(mesh, ctx, e, n):
    """Local 2x2 block of an element with itself, both triangle halves.

    Each half is evaluated from both element endpoints and averaged (the
    two anchors parameterize the same integral; averaging keeps mirror
    symmetry exact for even profiles). Returns (block, (node, node+1)).
    Row sums vanish: the basis difference of the constant function is zero.
    """
    rule = gauss_legendre_01(n)
    s_up = _element_order_max(ctx.profile, mesh)[e : e + 1]
    left = np.array([mesh.nodes[e]])
    right = np.array([mesh.nodes[e + 1]])
    total = 0.0
    for anchor, sign in ((left, 1.0), (right, -1.0)):
        for swapped in (False, True):
            total += float(
                _identical_common(ctx, mesh.h, rule, s_up, anchor, sign, swapped)[0]
            )
    q = _identical_q_signs(mesh, e)
    block = np.outer(q, q) * (0.5 * total)
    return block, (e, e + 1)


def _adjacent_delta_coeffs(mesh, e_left):
    """(alpha_a, delta_a) of the affine basis difference for a shared-vertex pair.

    Delta psi_a(xhat, yhat) = alpha_a xhat + delta_a yhat for the three
    shared-support nodes; the constant term vanishes because both maps send
    0 to the shared vertex.
    """
    t_left, t_right = adjacent_pair_maps(mesh, e_left, e_left + 1)
    nodes3 = (e_left, e_left + 1, e_left + 2)
    alpha = np.array(
        [hat_eval(mesh, a, t_left(1.0)) - hat_eval(mesh, a, t_left(0.0)) for a in nodes3]
    )
    delta = np.array(
        [-(hat_eval(mesh, a, t_right(1.0)) - hat_eval(mesh, a, t_right(0.0))) for a in nodes3]
    )
    return alpha, delta


def _adjacent_blocks(ctx, h, rule, s_up, shared_coords, alpha, delta):
    """3x3 blocks of vertex-sharing pairs; shared_coords and s_up are (P,)."""
    zeta = rule.nodes
    eta = rule.nodes
    w = rule.weights
    s_up = s_up[:, None, None]
    xi = zeta[None, :, None] ** (1.0 / (3.0 - 2.0 * s_up))  # (P, n, 1)
    log_h = np.log(h)
    log_zeta = np.log(zeta)[None, :, None]
    r = h * xi * (1.0 + eta[None, None, :])  # same for both halves
    p_half1 = alpha[:, None] + delta[:, None] * eta[None, :]  # p_a(eta), half 1
    p_half2 = alpha[:, None] * eta[None, :] + delta[:, None]  # half 2
    blocks = np.zeros((shared_coords.size, 3, 3))
    for p_fac, swap in ((p_half1, False), (p_half2, True)):
        x_scale = xi + 0.0 * eta[None, None, :]
        y_scale = xi * eta[None, None, :]
        if swap:
            x_scale, y_scale = y_scale, x_scale
        x = shared_coords[:, None, None] - h * x_scale
        y = shared_coords[:, None, None] + h * y_scale
        b = smoothness.beta(ctx.profile, x, y)
        ph = _phi_from_beta(ctx.kappa, b, r)
        common = (
            1.0
            / (3.0 - 2.0 * s_up)
            * np.exp(
                (1.0 - 2.0 * b) * log_h
                + (2.0 * (s_up - b) / (3.0 - 2.0 * s_up)) * log_zeta
            )
            * (1.0 + eta[None, None, :]) ** (-(1.0 + 2.0 * b))
            * ph
        )
        s_eta = np.einsum("i,pij->pj", w, common)
        blocks += np.einsum("pj,j,aj,bj->pab", s_eta, w, p_fac, p_fac)
    return blocks


def pair_block_adjacent(mesh, ctx, e_left, e_right, n):
    """Local 3x3 block of a vertex-sharing pair over its shared-support nodes.

    Maps are oriented so both send 0 to the shared vertex; violations raise.
    Returns (block, (e_left, e_left+1, e_left+2)) in geometric node indices.
    """
    if classify_pair(mesh, e_left, e_right) != "vertex_sharing":
        raise AssemblyError(f"elements ({e_left}, {e_right}) do not share a vertex")
    rule = gauss_legendre_01(n)
    el_max = _element_order_max(ctx.profile, mesh)
    s_up = np.array([0.5 * (el_max[e_left] + el_max[e_right])])
    alpha, delta = _adjacent_delta_coeffs(mesh, e_left)
    shared = np.array([mesh.nodes[e_left + 1]])
    block = _adjacent_blocks(ctx, mesh.h, rule, s_up, shared, alpha, delta)[0]
    return block, (e_left, e_left + 1, e_left + 2)


def _disjoint_blocks_direct(ctx, h, lefts_x, lefts_y, rule):
    """(sxx, sxy, syy) 2x2 blocks for disjoint pairs, direct tensor Gauss."""
    xq, wq = rule.nodes, rule.weights
    x = lefts_x[:, None] + h * xq[None, :]
    y = lefts_y[:, None] + h * xq[None, :]
    s_x = smoothness.evaluate(ctx.profile, x)
    s_y = smoothness.evaluate(ctx.profile, y)
    b = 0.5 * (s_x[:, :, None] + s_y[:, None, :])
    r = np.abs(x[:, :, None] - y[:, None, :])
    nu = 0.5 + b
    g = _phi_from_beta(ctx.kappa, b, r) * r ** (-2.0 * nu)
    psi = np.stack([1.0 - xq, xq])
    col = np.einsum("pab,b->pa", g, wq)
    row = np.einsum("pab,a->pb", g, wq)
    sxx = h * h * np.einsum("pa,a,ia,ja->pij", col, wq, psi, psi)
    syy = h * h * np.einsum("pb,b,ib,jb->pij", row, wq, psi, psi)
    gw = g * wq[None, :, None] * wq[None, None, :]
    sxy = -h * h * np.einsum("pab,ia,jb->pij", gw, psi, psi)
    return sxx, sxy, syy


def pair_block_disjoint(mesh, ctx, e1, e2, n):
    """Local symmetric block of a disjoint pair over its four supporting nodes.

    Layout: rows/cols (e1, e1+1, e2, e2+1) in geometric node indices. The
    kernel is evaluated directly; disjoint pairs keep r >= h away from the
    singularity.
    """
    if classify_pair(mesh, e1, e2) != "disjoint":
        raise AssemblyError(f"elements ({e1}, {e2}) are not disjoint")
    rule = gauss_legendre_01(n)
    sxx, sxy, syy = _disjoint_blocks_direct(
        ctx, mesh.h, np.array([mesh.nodes[e1]]), np.array([mesh.nodes[e2]]), rule
    )
    block = np.block([[sxx[0], sxy[0]], [sxy[0].T, syy[0]]])
    return block, (e1, e1 + 1, e2, e2 + 1)


def _band_add(flat, n_all, first_node, dr, dc, vec):
    stride = n_all + 1
    start = (first_node + dr) * n_all + (first_node + dc)
    flat[start : start + vec.size * stride : stride] += vec


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise AssemblyError(f"non-finite entries while assembling {what}")


def _disjoint_offset_general(ctx, mesh, k, rule):
    n_el = mesh.n_elements
    lefts = mesh.nodes[: n_el - k]
    rights = mesh.nodes[k : n_el]
    return _disjoint_blocks_direct(ctx, mesh.h, lefts, rights, rule)


def _disjoint_offset_grouped(ctx, mesh, k, rule, s_el):
    """Blocks for offset k when s is constant per element: one kernel grid
    per distinct pair order beta, scaled per pair by its smooth prefactor."""
    n_el = mesh.n_elements
    count = n_el - k
    xq, wq = rule.nodes, rule.weights
    h = mesh.h
    b_pair = 0.5 * (s_el[:count] + s_el[k : k + count])
    # distance grid depends only on the offset: r_ab = h * (k + y_b - x_a)
    r = h * (k + xq[None, :] - xq[:, None])
    psi = np.stack([1.0 - xq, xq])
    sxx = np.zeros((count, 2, 2))
    sxy = np.zeros((count, 2, 2))
    syy = np.zeros((count, 2, 2))
    for b_val in np.unique(b_pair):
        nu = 0.5 + b_val
        g = _prefactor_from_beta(ctx.kappa, b_val) * bessel_k(nu, ctx.kappa * r) * r ** (-nu)
        col = g @ wq
        row = wq @ g
        cxx = h * h * np.einsum("a,a,ia,ja->ij", col, wq, psi, psi)
        cyy = h * h * np.einsum("b,b,ib,jb->ij", row, wq, psi, psi)
        gw = g * wq[:, None] * wq[None, :]
        cxy = -h * h * np.einsum("ab,ia,jb->ij", gw, psi, psi)
        mask = (b_pair == b_val).astype(float)
        sxx += mask[:, None, None] * cxx
        sxy += mask[:, None, None] * cxy
        syy += mask[:, None, None] * cyy
    return sxx, sxy, syy


def _accumulate_disjoint(flat, n_all, k, keep, blocks):
    sxx, sxy, syy = blocks
    m = keep.astype(float)[:, None, None]
    sxx = sxx * m
    sxy = sxy * m
    syy = syy * m
    # factor 2: unordered pair computed once, ordered sum visits both
    for da in range(2):
        for db in range(2):
            _band_add(flat, n_all, 0, da, db, 2.0 * sxx[:, da, db])
            _band_add(flat, n_all, 0, k + da, k + db, 2.0 * syy[:, da, db])
            _band_add(flat, n_all, 0, da, k + db, 2.0 * sxy[:, da, db])
            _band_add(flat, n_all, 0, k + da, db, 2.0 * sxy[:, db, da])


def assemble_stiffness(
    mesh,
    ctx,
    n=None,
    *,
    c=1.0,
    target_rate=None,
    n_min=4,
    n_max=64,
    strategy="auto",
    deterministic=True,
    threads=1,
):
    """Assemble the full system (stiffness A = A1 + A2, plain mass M).

    ``n`` fixes the tensor-Gauss order for every pair class; when omitted it
    is derived from the log(1/h) rule with constant ``c`` and the target
    rate (defaulting to the expected strong rate of the profile).
    ``strategy`` selects the disjoint-pair path: "grouped" exploits
    profiles that are constant per element, "general" evaluates the kernel
    at every quadrature point, "auto" picks grouped when valid.
    """
    profile = ctx.profile
    if n is None:
        n = quadrature_order(mesh.h, profile.s_upper, profile.s_lower, c, target_rate,
                             n_min=n_min, n_max=n_max)
    n = int(n)
    rule = gauss_legendre_01(n)
    if strategy == "auto":
        strategy = "grouped" if profile.is_elementwise_constant else "general"
    if strategy not in ("grouped", "general"):
        raise ValueError(f"unknown assembly strategy {strategy!r}")
    if strategy == "grouped" and not profile.is_elementwise_constant:
        raise ValueError("grouped assembly requires an elementwise-constant profile")

    n_all = mesh.n_nodes
    n_el = mesh.n_elements
    h = mesh.h
    el_max = _element_order_max(profile, mesh)
    interior_el = mesh.element_interior
    ext = ~interior_el
    a2 = np.zeros((n_all, n_all))
    flat = a2.ravel()

    # identical pairs: the two triangle halves coincide bitwise (beta and
    # the regularized factor are symmetric), so each anchor needs one half
    # doubled; the two anchors are averaged for mirror symmetry
    keep_id = interior_el
    vals = _identical_common(
        ctx, h, rule, el_max, mesh.nodes[:n_el], 1.0
    ) + _identical_common(ctx, h, rule, el_max, mesh.nodes[1 : n_el + 1], -1.0)
    if not np.all(np.isfinite(vals)):
        e_bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise AssemblyError(
            f"non-finite block for identical element pair ({e_bad}, {e_bad})"
        )
    vals = vals * keep_id
    q = _identical_q_signs(mesh, 0)
    for da in range(2):
        for db in range(2):
            _band_add(flat, n_all, 0, da, db, q[da] * q[db] * vals)

    # vertex-sharing pairs
    keep_adj = ~(ext[: n_el - 1] & ext[1:])
    alpha, delta = _adjacent_delta_coeffs(mesh, 0)
    s_up_adj = 0.5 * (el_max[:-1] + el_max[1:])
    adj = _adjacent_blocks(ctx, h, rule, s_up_adj, mesh.nodes[1:n_el], alpha, delta)
    if not np.all(np.isfinite(adj)):
        e_bad = int(np.argwhere(~np.isfinite(adj))[0][0])
        raise AssemblyError(
            f"non-finite block for adjacent element pair ({e_bad}, {e_bad + 1})"
        )
    adj = adj * keep_adj[:, None, None]
    for da in range(3):
        for db in range(3):
            _band_add(flat, n_all, 0, da, db, 2.0 * adj[:, da, db])

    # disjoint pairs, one batch per index offset
    offsets = list(range(2, n_el))
    if strategy == "grouped":
        mids = 0.5 * (mesh.nodes[:n_el] + mesh.nodes[1:])
        s_el = smoothness.evaluate(profile, mids)

        def compute(k):
            return _disjoint_offset_grouped(ctx, mesh, k, rule, s_el)

    else:

        def compute(k):
            return _disjoint_offset_general(ctx, mesh, k, rule)

    def accumulate(k, blocks):
        for part in blocks:
            if not np.all(np.isfinite(part)):
                bad = np.argwhere(~np.isfinite(part))
                e1 = int(bad[0][0])
                raise AssemblyError(
                    f"non-finite disjoint block for element pair ({e1}, {e1 + k})"
                )
        keep = ~(ext[: n_el - k] & ext[k:n_el])
        _accumulate_disjoint(flat, n_all, k, keep, blocks)

    threads = int(threads) if threads else 1
    if threads > 1 and len(offsets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            if deterministic:
                for k, blocks in zip(offsets, ex.map(compute, offsets)):
                    accumulate(k, blocks)
            else:
                from concurrent.futures import as_completed

                futs = {ex.submit(compute, k): k for k in offsets}
                for fut in as_completed(futs):
                    accumulate(futs[fut], fut.result())
    else:
        for k in offsets:
            accumulate(k, compute(k))

    sl = mesh.interior_slice
    a1 = assemble_weighted_mass(mesh, ctx, rule)
    a = a1 + a2[sl, sl]
    _check_finite(a, "stiffness")
    m = assemble_plain_mass(mesh)
    quad_meta = {
        "n_identical": n,
        "n_adjacent": n,
        "n_disjoint": n,
        "n_weighted_mass": n,
        "c": c,
        "target_rate": target_rate,
        "strategy": strategy,
        "deterministic": bool(deterministic),
        "threads": threads,
    }
    return AssembledSystem(mesh, ctx, a, m, a1, quad_meta)
