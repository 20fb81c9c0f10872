"""Exponent bookkeeping for the decay-rate bootstrap.

All functions accept ``fractions.Fraction`` and return exact rationals for
rational input; floats go through the same formulas. With ``r`` the
integrability exponent of the nonlinear flux and ``d`` the currently known
decay exponent of ``||w(t)||_2``, one bootstrap round combines

    1/c3 = 3/(2r) - 1/4,   1/c4 = d (3/r - 1),   1/c5 = 3/2 (1 - 1/r)

through ``1 + 1/alpha = 1/c3 + 1/c4 + 1/c5`` and is admissible only when
``0 < 1/c4 + 1/c5 < 1``.
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError

R_LOW = Fraction(6, 5)
R_HIGH = Fraction(2)
PINNED_R = (Fraction(3, 2), Fraction(15, 8), Fraction(4, 3))


class InadmissiblePairError(DomainError):
    """The pair ``(current_decay, r)`` fails the admissibility gate."""


def _num(x):
    return x if isinstance(x, Fraction) else float(x)


def _check_r(r):
    if not R_LOW < r <= R_HIGH:
        raise DomainError(f"r must lie in (6/5, 2], got {r}")


def gn_theta(r):
    """Interpolation weight ``theta = 3/2 (1 - 1/r)`` for ``r`` in ``(6/5, 2]``."""
    r = _num(r)
    _check_r(r)
    theta = Fraction(3, 2) * (1 - 1 / Fraction(r)) if isinstance(r, Fraction) else 1.5 * (1 - 1 / r)
    if not 0 < theta < 1:
        raise DomainError(f"theta={theta} outside (0, 1)")
    return theta


def nonlinear_kernel_exponent(r):
    """Time exponent ``3/2 (1/r - 1/2) + 1/2`` of the divergence-form semigroup bound."""
    r = _num(r)
    _check_r(r)
    half = Fraction(1, 2) if isinstance(r, Fraction) else 0.5
    return 3 * half * (1 / r - half) + half


def heat_rate(q):
    """``3/2 (1/q - 1/2)``, the L^q to L^2 smoothing exponent."""
    q = _num(q)
    half = Fraction(1, 2) if isinstance(q, Fraction) else 0.5
    return 3 * half * (1 / q - half)


def gate(current_decay, r):
    """``1/c4 + 1/c5`` for the pair; admissible iff strictly inside ``(0, 1)``."""
    d, r = _num(current_decay), _num(r)
    _check_r(r)
    three_half = Fraction(3, 2) if isinstance(r, Fraction) else 1.5
    return d * (3 / r - 1) + three_half * (1 - 1 / r)


def bootstrap_alpha(current_decay, r):
    """Improved averaged-decay exponent ``1/alpha`` after one round.

    Parameters
    ----------
    current_decay : Fraction or float
        Known decay exponent, at least 0.
    r : Fraction or float
        Flux exponent in ``(6/5, 2]``.

    Raises
    ------
    InadmissiblePairError
        If ``1/c4 + 1/c5`` is not strictly between 0 and 1.
    """
    d, r = _num(current_decay), _num(r)
    if d < 0:
        raise DomainError("current_decay must be >= 0")
    g = gate(d, r)
    if not 0 < g < 1:
        raise InadmissiblePairError(f"gate {g} outside (0, 1) for decay={d}, r={r}")
    c3 = 3 / (2 * r) - (Fraction(1, 4) if isinstance(r, Fraction) else 0.25)
    return c3 + g - 1


@dataclass
class ChainResult:
    """Bootstrap chain outcome.

    Attributes
    ----------
    q : data exponent
    theory : ``3/2 (1/q - 1/2)``
    steps : list of ``(exponent, r)`` per round
    rate : ``min(theory, last exponent)``
    binds_at : round (1-based) where the theory rate first binds, or None
    """
    q: object
    theory: object
    steps: list = field(default_factory=list)
    rate: object = 0
    binds_at: object = None

    @property
    def peak(self):
        return max((e for e, _ in self.steps), default=0)


def decay_chain(q, mode="free", rounds=20, n_grid=800, min_gain=1e-3):
    """Iterate :func:`bootstrap_alpha` starting from zero known decay.

    Parameters
    ----------
    q : Fraction or float
        Data exponent in ``[1, 2)``.
    mode : {"free", "pinned"}
        ``pinned`` uses the fixed exponents 3/2, 15/8, 4/3 in exact arithmetic
        and stops once the theory rate binds. ``free`` picks each ``r`` on a
        uniform grid of ``(6/5, 2]`` by a one-round lookahead (the greedy
        choice stalls at 5/8). Both modes stop once the theory rate binds or
        no admissible ``r`` improves the exponent by ``min_gain``.
    rounds : int
        Maximum number of rounds.
    n_grid : int
        Grid size of the ``r`` search in free mode.
    min_gain : float
        Smallest per-round improvement accepted in free mode; without it the
        lookahead creeps towards 1/2 instead of jumping past it.

    Returns
    -------
    ChainResult
    """
    if not 1 <= q < 2:
        raise DomainError(f"q must lie in [1, 2), got {q}")
    theory = heat_rate(q)
    res = ChainResult(q=q, theory=theory)
    if mode == "pinned":
        d = Fraction(0)
        for k, r in enumerate(PINNED_R, start=1):
            a = bootstrap_alpha(d, r)
            res.steps.append((a, r))
            d = min(theory, a)
            if a >= theory:
                res.binds_at = k
                break
        res.rate = d
        return res
    if mode != "free":
        raise ValueError(f"unknown mode {mode!r}")
    theory = float(theory)
    grid = 1.2 + 0.8 * np.arange(1, n_grid + 1) / n_grid
    d = 0.0
    for k in range(1, rounds + 1):
        a = _alpha_vec(d, grid)
        if k > 1:
            a = np.where(a >= d + min_gain, a, -np.inf)
        if not np.any(np.isfinite(a)):
            break
        d1 = np.minimum(theory, a)
        ahead = np.max(_alpha_vec(d1[:, None], grid[None, :]), axis=1)
        score = np.where(np.isfinite(a), np.maximum(ahead, a), -np.inf)
        i = int(np.lexsort((a, score))[-1])
        res.steps.append((float(a[i]), float(grid[i])))
        d = min(theory, float(a[i]))
        if a[i] >= theory:
            res.binds_at = k
            break
    res.rate = d
    return res


def _alpha_vec(d, r):
    """Vectorised :func:`bootstrap_alpha`; inadmissible entries are ``-inf``."""
    g = d * (3 / r - 1) + 1.5 * (1 - 1 / r)
    a = 3 / (2 * r) - 0.25 + g - 1
    return np.where((g > 0) & (g < 1), a, -np.inf)


def q_for_rate(rate):
    """Data exponent ``q`` whose heat rate ``3/2 (1/q - 1/2)`` equals ``rate``."""
    rate = _num(rate)
    half = Fraction(1, 2) if isinstance(rate, Fraction) else 0.5
    return 1 / (2 * rate / 3 + half)


def regime_boundaries():
    """Smallest ``q`` at which each pinned-chain exponent already matches the heat rate.

    Returns
    -------
    list of (step, exponent, q)
        Exact rationals; for ``q`` at or above the listed value the chain can
        stop at that step. The last exponent, 3/4, gives ``q = 1``.
    """
    out = []
    d = Fraction(0)
    for k, r in enumerate(PINNED_R, start=1):
        d = bootstrap_alpha(d, r)
        out.append((k, d, q_for_rate(d)))
    return out
