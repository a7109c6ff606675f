"""Adaptive Gauss-Kronrod quadrature over the band and a 1-d concave maximiser."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, QuadratureFailure

# Kronrod 15-point nodes (positive half, descending) and weights; the embedded
# 7-point Gauss rule uses every other node, starting from index 1.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes, ascending
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[1:7:2] = _WG[:3]
GAUSS_W[7] = _WG[3]
GAUSS_W[9:14:2] = _WG[2::-1]

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class EnergyGrid:
    """Nodes strictly inside the open band, plus optional weights and breakpoints."""

    nodes: np.ndarray
    weights: np.ndarray | None = None
    breakpoints: tuple = ()

    def __post_init__(self):
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=float))
        if nodes.size and (np.any(np.abs(nodes) >= 1.0) or np.any(np.diff(nodes) <= 0)):
            raise ValueError("grid nodes must be strictly increasing inside (-1, 1)")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "breakpoints", clean_breakpoints(self.breakpoints))

    @classmethod
    def uniform(cls, emin, emax, n):
        if not (-1.0 < emin < emax < 1.0) or n < 2:
            raise ValueError("need -1 < emin < emax < 1 and n >= 2")
        return cls(np.linspace(emin, emax, n))


@dataclass(frozen=True)
class QuadratureResult:
    value: float | np.ndarray
    error_estimate: float
    panels_used: int
    edges: np.ndarray | None = None  # sorted panel endpoints, for reuse

    def rule(self):
        """The final panel set as a fixed Kronrod rule ``(nodes, weights)``."""
        return panel_rule(self.edges)


def panel_rule(edges):
    """Nodes and weights of the 15-point Kronrod rule on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    weights = (half[:, None] * KRONROD_W[None, :]).ravel()
    return nodes, weights


def clean_breakpoints(points, a=-1.0, b=1.0):
    pts = sorted({float(p) for p in points if a < float(p) < b})
    return tuple(pts)


def _panel(f, lo, hi):
    """Kronrod value, |K - G| (max over components) for each panel in lo/hi."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    y = np.asarray(f(x))
    if y.shape[0] != x.size:
        raise ValueError("integrand must return one value (or row) per node")
    if not np.all(np.isfinite(y)):
        raise QuadratureFailure("integrand returned a non-finite value")
    y = y.reshape((lo.size, 15) + y.shape[1:])
    kron = np.tensordot(y, KRONROD_W, axes=([1], [0]))
    gauss = np.tensordot(y, GAUSS_W, axes=([1], [0]))
    scale = half.reshape((-1,) + (1,) * (kron.ndim - 1))
    kron = kron * scale
    err = np.abs((gauss * scale) - kron)
    if err.ndim > 1:
        err = err.reshape(err.shape[0], -1).max(axis=1)
    return kron, err


def integrate(f, a, b, abs_tol=1e-10, breakpoints=(), budget=DEFAULT_BUDGET) -> QuadratureResult:
    """Adaptive Gauss-Kronrod (7-15) integral of a vectorised integrand on (a, b).

    ``f`` takes a 1-d array of nodes and returns an array whose first axis
    matches the nodes (extra axes give a vector-valued integral, with the
    error estimate taken as the max over components).  Panels whose error
    exceeds their length-proportional share of ``abs_tol`` are bisected until
    the summed estimate falls below ``abs_tol``.
    """
    if not abs_tol > 0:
        raise ValueError("abs_tol must be positive")
    cuts = np.array((a,) + clean_breakpoints(breakpoints, a, b) + (b,), dtype=float)
    lo, hi = cuts[:-1], cuts[1:]
    vals, errs = _panel(f, lo, hi)
    width = b - a
    while True:
        total = errs.sum()
        if total <= abs_tol:
            break
        bad = errs > abs_tol * (hi - lo) / width
        if not bad.any():  # rounding: shares sum to abs_tol, so this is rare
            bad = errs == errs.max()
        if lo.size + bad.sum() > budget:
            raise QuadratureFailure(
                f"panel budget {budget} exhausted with error estimate {total:.3e} > {abs_tol:.1e}"
            )
        mid = 0.5 * (lo[bad] + hi[bad])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        nv, ne = _panel(f, new_lo, new_hi)
        keep = ~bad
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
    order = np.argsort(lo, kind="stable")
    value = vals[order].sum(axis=0)
    if np.ndim(value) == 0:
        value = float(value.real) if np.isrealobj(value) else complex(value)
    edges = np.append(lo[order], hi[order][-1])
    return QuadratureResult(value, float(errs.sum()), int(lo.size), edges)


def integrate_band(f, abs_tol=1e-10, breakpoints=(), budget=DEFAULT_BUDGET) -> QuadratureResult:
    """Integral over the open band (-1, 1); the rule never touches the endpoints."""
    return integrate(f, -1.0, 1.0, abs_tol=abs_tol, breakpoints=breakpoints, budget=budget)


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def maximize_concave_1d(h, x0=0.0, step=1.0, xtol=1e-8, max_expand=60, max_iter=500):
    """Maximise a concave function of one variable.

    A bracket ``a < b < c`` with ``h(b) >= max(h(a), h(c))`` is grown
    geometrically from ``x0``, then refined by golden-section search.

    Returns
    -------
    (argmax, max)

    Raises
    ------
    BracketFailure
        If no interior maximum is found within ``max_expand`` doublings.
    """
    a, b = x0, x0 + step
    fa, fb = h(a), h(b)
    if fb < fa:
        a, b, fa, fb = b, a, fb, fa
    # now moving from a towards b is uphill
    direction = b - a
    c = b + direction
    fc = h(c)
    n = 0
    while fc >= fb:
        n += 1
        if n > max_expand:
            raise BracketFailure("no interior maximum within the expansion budget")
        direction *= 2.0
        a, fa = b, fb
        b, fb = c, fc
        c = b + direction
        fc = h(c)
    lo, hi = min(a, c), max(a, c)
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = h(x1), h(x2)
    for _ in range(max_iter):
        if hi - lo <= xtol * max(1.0, abs(x1)):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = h(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = h(x1)
    if f1 >= f2:
        return float(x1), float(f1)
    return float(x2), float(f2)
