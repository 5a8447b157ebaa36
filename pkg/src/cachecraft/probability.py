"""Order statistics of multinomial demand vectors.

The delivery-rate objectives of the simplified placement problems price each
grouped variable by how often its file index is the m-th smallest one in a
random demand vector.  This module computes those probabilities two ways:

* ``order_stat_pmf`` evaluates the closed-form expressions (prefix/suffix
  power sums plus a double sum over multinomial splits), and
* ``order_stat_oracle`` enumerates every demand vector exhaustively.

The oracle is deliberately dumb and is the authority in tests; the closed
form must agree with it to 1e-12 or the build is considered broken.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

ENUM_CAP_ENV = "CACHECRAFT_ENUM_CAP"
DEFAULT_ENUM_CAP = 10**7

# Entries more negative than this are treated as a genuine numerical failure
# rather than benign cancellation noise.
CANCELLATION_TOL = 1e-12


class EnumerationCapError(RuntimeError):
    """Demand-space enumeration would exceed the configured cap."""


class NumericalInstabilityError(ArithmeticError):
    """Closed-form PMF produced a value too negative to be rounding noise."""


def enumeration_cap() -> int:
    """Enumeration guard, overridable through CACHECRAFT_ENUM_CAP."""
    raw = os.environ.get(ENUM_CAP_ENV)
    if raw is None:
        return DEFAULT_ENUM_CAP
    cap = int(raw)
    if cap <= 0:
        raise ValueError(f"{ENUM_CAP_ENV} must be positive, got {cap}")
    return cap


def binom(n: int, k: int) -> int:
    """Binomial coefficient with C(n,k)=0 for n<0, k<0 or k>n."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def multinomial_coefficient(n: int, parts) -> int:
    """n! / (k_1! ... k_m!) for nonnegative parts summing to n."""
    parts = tuple(parts)
    if any(p < 0 for p in parts) or sum(parts) != n:
        raise ValueError(f"parts {parts} must be nonnegative and sum to {n}")
    return _multinom(n, parts)


def _multinom(n: int, parts: tuple) -> int:
    out = 1
    remaining = n
    for p in parts:
        out *= math.comb(remaining, p)
        remaining -= p
    return out


@dataclass(frozen=True)
class Multinomial:
    """A count vector: `parts` nonnegative integers summing to `n`."""

    n: int
    parts: tuple

    def __post_init__(self):
        if sum(self.parts) != self.n or any(p < 0 for p in self.parts):
            raise ValueError("parts must be nonnegative and sum to n")

    @property
    def coefficient(self) -> int:
        return _multinom(self.n, self.parts)


@dataclass(frozen=True)
class OrderStatTable:
    """probs[m, i-1] = Pr[Y_m = i]: the (m+1)-th smallest index equals i.

    Rows m = 0..K-1, columns i = 1..N.  Each row is a PMF.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 2:
            raise ValueError("probs must be a 2-D matrix")
        if np.any(probs < 0.0) or np.any(probs > 1.0 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        row_sums = probs.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-12):
            worst = np.abs(row_sums - 1.0).max()
            raise ValueError(f"rows must sum to 1 (worst deviation {worst:.3e})")

    @property
    def num_trials(self) -> int:
        return self.probs.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.probs.shape[1]

    def prob(self, m: int, i: int) -> float:
        """Pr[Y_m = i] with 1-based outcome index i."""
        return float(self.probs[m, i - 1])


def _check_popularities(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("popularities must be a nonempty 1-D sequence")
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ValueError("popularities must lie in (0, 1]")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"popularities must sum to 1, got {p.sum()!r}")
    return p


def _clamp(value: float) -> float:
    if value < 0.0:
        if value < -CANCELLATION_TOL:
            raise NumericalInstabilityError(
                f"PMF entry {value!r} is below the -{CANCELLATION_TOL} cancellation floor"
            )
        return 0.0
    return value


def order_stat_pmf(p, num_trials: int) -> OrderStatTable:
    """Closed-form PMF table of the sorted outcomes of `num_trials` draws.

    Draw `num_trials` i.i.d. outcomes from {1..N} with probabilities `p` and
    sort them ascending into Y_0 <= ... <= Y_{K-1}.  Row m of the result is
    the PMF of Y_m.

    The m = 0 row is a difference of suffix-sum powers, the m = 1 row adds a
    two-term correction, and rows 2..K-1 combine a single "all smaller draws
    distinct from i" term with a double sum over the number of repeats of i
    and the number of draws below i.  Empty sums raised to the zeroth power
    count as 1 (Python's 0.0**0 already does this).
    """
    p = _check_popularities(p)
    k = int(num_trials)
    if k < 1:
        raise ValueError("num_trials must be >= 1")
    n = p.size

    # tail[i] = p_i + ... + p_N (1-based); prefix[i] = p_1 + ... + p_i.
    tail = np.zeros(n + 2)
    tail[1 : n + 1] = np.cumsum(p[::-1])[::-1]
    prefix = np.zeros(n + 1)
    prefix[1:] = np.cumsum(p)

    probs = np.zeros((k, n))

    for i in range(1, n + 1):
        probs[0, i - 1] = _clamp(tail[i] ** k - tail[i + 1] ** k)

    if k >= 2:
        for i in range(1, n + 1):
            correction = k * (
                prefix[i - 1] * tail[i] ** (k - 1) - prefix[i] * tail[i + 1] ** (k - 1)
            )
            probs[1, i - 1] = _clamp(probs[0, i - 1] + correction)

    for m in range(2, k):
        # i = 1: at least m+1 of the draws hit the smallest outcome.
        p1 = p[0]
        total = 0.0
        for extra in range(k - m):
            total += binom(k, m + 1 + extra) * p1 ** (m + 1 + extra) * (1.0 - p1) ** (
                k - m - 1 - extra
            )
        probs[m, 0] = _clamp(total)

        for i in range(2, n + 1):
            lead = (
                binom(k, k - m)
                * (tail[i] ** (k - m) - tail[i + 1] ** (k - m))
                * prefix[i - 1] ** m
            )
            rep = 0.0
            for extra in range(k - 1):  # extra repeats of outcome i beyond two
                lo = max(0, m - 1 - extra)
                hi = min(m - 1, k - 2 - extra)
                for below in range(lo, hi + 1):
                    rep += (
                        _multinom(k, (2 + extra, below, k - 2 - extra - below))
                        * p[i - 1] ** (2 + extra)
                        * prefix[i - 1] ** below
                        * tail[i + 1] ** (k - 2 - extra - below)
                    )
            probs[m, i - 1] = _clamp(lead + rep)

    return OrderStatTable(probs=probs)


def group_order_stat_pmf(p, group_size: int) -> OrderStatTable:
    """PMF table for the demands of one user group of `group_size` users.

    The group draws from the same catalog with the same popularities, so this
    is just the full table with the trial count replaced.
    """
    return order_stat_pmf(p, group_size)


def enumerate_demands(num_outcomes: int, num_trials: int, cap: int | None = None) -> np.ndarray:
    """All demand vectors in [1..N]^K as an (N^K, K) int array, or raise."""
    cap = enumeration_cap() if cap is None else cap
    count = num_outcomes**num_trials
    if count > cap:
        raise EnumerationCapError(
            f"{num_outcomes}^{num_trials} = {count} demand vectors exceed the cap {cap}"
        )
    grids = np.meshgrid(*([np.arange(1, num_outcomes + 1)] * num_trials), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def order_stat_oracle(p, num_trials: int, cap: int | None = None) -> OrderStatTable:
    """Exhaustive-enumeration PMF table; the definition of Y_m, bit for bit.

    Enumerates all N^K demand vectors, sorts each, and accumulates exact
    probabilities.  Independent of the closed form on purpose.
    """
    p = _check_popularities(p)
    k = int(num_trials)
    if k < 1:
        raise ValueError("num_trials must be >= 1")
    n = p.size

    demands = enumerate_demands(n, k, cap)
    weights = np.prod(p[demands - 1], axis=1)
    ordered = np.sort(demands, axis=1)

    probs = np.empty((k, n))
    for m in range(k):
        for i in range(1, n + 1):
            probs[m, i - 1] = weights[ordered[:, m] == i].sum()
    return OrderStatTable(probs=probs)
