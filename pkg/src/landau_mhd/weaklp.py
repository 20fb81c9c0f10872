"""Weak-L^p (Marcinkiewicz) norms of piecewise-constant functions on (0, T].

A :class:`Sampled1D` is constant on each mesh cell ``(nodes[i-1], nodes[i]]``
with ``nodes[-1] = 0`` implied. For such functions the supremum over Borel
sets in

    ||f||_{p,inf} = sup_E |E|^(1/p - 1) int_E |f|

is attained on super-level sets, so sorting cells by value and scanning the
prefix integrals gives the exact norm.
"""
import itertools
from dataclasses import dataclass

import numpy as np


@dataclass
class Sampled1D:
    """Piecewise-constant nonnegative function on ``(0, nodes[-1]]``.

    Parameters
    ----------
    nodes : ndarray
        Strictly increasing right cell edges; the first cell starts at 0.
    values : ndarray
        One finite nonnegative value per cell.
    """
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.shape != self.values.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and values must be 1-D of equal length")
        if not (self.nodes[0] > 0 and np.all(np.diff(self.nodes) > 0)):
            raise ValueError("nodes must be positive and strictly increasing")
        if not (np.all(np.isfinite(self.values)) and np.all(self.values >= 0)):
            raise ValueError("values must be finite and nonnegative")

    @property
    def widths(self):
        return np.diff(self.nodes, prepend=0.0)

    @property
    def T(self):
        return float(self.nodes[-1])

    @classmethod
    def uniform(cls, T, n, values):
        return cls(T * np.arange(1, n + 1) / n, values)

    @classmethod
    def from_function(cls, func, T, n, rule="average", resolution=16):
        """Sample ``func`` on a uniform mesh of ``n`` cells.

        ``rule="average"`` uses cell averages from a ``resolution``-point
        Gauss-Legendre rule, which stays finite for integrable singularities
        at 0; ``rule="midpoint"`` samples cell midpoints.
        """
        edges = T * np.arange(n + 1) / n
        if rule == "midpoint":
            vals = func(0.5 * (edges[1:] + edges[:-1]))
        elif rule == "average":
            x, w = np.polynomial.legendre.leggauss(resolution)
            a, b = edges[:-1, None], edges[1:, None]
            pts = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
            vals = 0.5 * np.sum(w[None, :] * func(pts), axis=1)
        else:
            raise ValueError(f"unknown rule {rule!r}")
        return cls(edges[1:], vals)

    @classmethod
    def from_antiderivative(cls, F, T, n):
        """Exact cell averages ``(F(b) - F(a))/(b - a)`` on a uniform mesh."""
        edges = T * np.arange(n + 1) / n
        vals = np.diff(F(edges)) / np.diff(edges)
        return cls(edges[1:], vals)

    def integral(self):
        return float(np.sum(self.values * self.widths))


def weak_norm(f, p):
    """Exact ``||f||_{p,inf}`` of a piecewise-constant function.

    Parameters
    ----------
    f : Sampled1D
    p : float
        Exponent, strictly greater than 1.

    Returns
    -------
    float
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    order = np.argsort(-f.values, kind="stable")
    v = f.values[order]
    w = f.widths[order]
    t = np.cumsum(w)
    mass = np.cumsum(v * w)
    # within a block of equal value the ratio is monotone in the block length,
    # so the sup sits at a cell boundary; for decreasing v it is attained at
    # a prefix end
    return float(np.max(t ** (1.0 / p - 1.0) * mass))


def strong_norm(f, p):
    return float(np.sum(f.values ** p * f.widths) ** (1.0 / p))


def weak_norm_bruteforce(f, p, max_pieces=None):
    """Sup of ``|E|^(1/p-1) int_E f`` over unions of mesh cells, by enumeration.

    Parameters
    ----------
    f : Sampled1D
        A dozen cells at most; the cost is exponential.
    p : float
    max_pieces : int, optional
        Restrict ``E`` to unions of at most this many runs of adjacent cells.
        ``None`` enumerates every nonempty set of cells.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    n = len(f.values)
    if n > 16:
        raise ValueError("brute force is limited to 16 cells")
    if max_pieces is None:
        codes = np.arange(1, 2 ** n)
    else:
        runs = [((1 << j) - 1) ^ ((1 << i) - 1) for i in range(n) for j in range(i + 1, n + 1)]
        found = set()
        for k in range(1, max_pieces + 1):
            for combo in itertools.combinations(runs, k):
                m = 0
                for c in combo:
                    m |= c
                found.add(m)
        codes = np.array(sorted(found))
    cells = (codes[:, None] >> np.arange(n)[None, :]) & 1
    size = cells @ f.widths
    mass = cells @ (f.values * f.widths)
    return float(np.max(size ** (1.0 / p - 1.0) * mass))


def _same_mesh(f, g):
    if f.nodes.shape != g.nodes.shape or not np.allclose(f.nodes, g.nodes, rtol=1e-12, atol=0):
        raise ValueError("functions live on different meshes")
    wid = f.widths
    if not np.allclose(wid, wid[0], rtol=1e-9):
        raise ValueError("convolution needs a uniform mesh")
    return wid[0]


def convolve(f, g):
    """Causal convolution ``(f*g)(s) = int_0^s f(s - u) g(u) du`` on the shared mesh.

    Both factors are piecewise constant with cell width ``h``; the result is
    the cell average of the exact convolution, which for uniform meshes is
    ``h/2`` times the sum of two consecutive discrete convolution entries.
    """
    h = _same_mesh(f, g)
    n = len(f.values)
    c = np.convolve(f.values, g.values)[:n] * h
    prev = np.concatenate(([0.0], c[:-1]))
    return Sampled1D(f.nodes.copy(), 0.5 * (c + prev))


def _exponent_check(p, q, r):
    if not (p > 1 and q > 1 and 1 < r < np.inf):
        raise ValueError(f"need p, q > 1 and 1 < r < inf, got p={p}, q={q}, r={r}")


def young_exponent(p, q):
    """``r`` with ``1 + 1/r = 1/p + 1/q``."""
    inv = 1.0 / p + 1.0 / q - 1.0
    return np.inf if inv <= 0 else 1.0 / inv


def holder_exponent(p, q):
    """``r`` with ``1/r = 1/p + 1/q``."""
    return 1.0 / (1.0 / p + 1.0 / q)


def check_weak_young(f, g, p, q):
    """``||f*g||_{r,inf} / (||f||_{p,inf} ||g||_{q,inf})`` with ``1 + 1/r = 1/p + 1/q``."""
    r = young_exponent(p, q)
    _exponent_check(p, q, r)
    return weak_norm(convolve(f, g), r) / (weak_norm(f, p) * weak_norm(g, q))


def check_weak_holder(f, g, p, q):
    """``||fg||_{r,inf} / (||f||_{p,inf} ||g||_{q,inf})`` with ``1/r = 1/p + 1/q``."""
    r = holder_exponent(p, q)
    if not r > 1:
        raise ValueError(f"Holder exponent r={r} must exceed 1")
    _same_nodes = f.nodes.shape == g.nodes.shape and np.allclose(f.nodes, g.nodes)
    if not _same_nodes:
        raise ValueError("functions live on different meshes")
    prod = Sampled1D(f.nodes.copy(), f.values * g.values)
    return weak_norm(prod, r) / (weak_norm(f, p) * weak_norm(g, q))


def random_piecewise(rng, n, T=1.0, spikes=3):
    """Random nonnegative piecewise-constant function with a few tall spikes."""
    vals = rng.exponential(1.0, n)
    idx = rng.integers(0, n, spikes)
    vals[idx] *= rng.uniform(5, 50, spikes)
    return Sampled1D.uniform(T, n, vals)
