"""Problem instances and placements.

A SystemConfig is the full description of one caching problem: K users with
individual cache budgets, N files with individual lengths and request
popularities, and optionally a two-class cache annotation (the first K_S
users are the small-cache class).  A Placement assigns a nonnegative size to
every (file, user-subset) pair plus a per-user per-file memory split.

File lengths, cache sizes and rates all share one unit (call it "file-length
units"); nothing is silently normalized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .subsets import canonical_subsets, parse_subset_key, subset_index, subset_key

POPULARITY_RENORM_TOL = 1e-9

# Six-file demonstration catalog used throughout the bundled studies: graded
# lengths paired with Zipf(0.56) popularities so that length and popularity
# are deliberately uncorrelated.  GRADED_POPULARITY_RANKS[l] is the
# popularity rank (1 = most popular) of the l-th longest file.
GRADED_FILE_LENGTHS = (9 / 6, 8 / 6, 7 / 6, 5 / 6, 4 / 6, 3 / 6)
GRADED_POPULARITY_RANKS = (5, 3, 2, 6, 1, 4)
GRADED_ZIPF_EXPONENT = 0.56


class ConfigError(ValueError):
    """A configuration violates the schema or an invariant."""


class StructuralError(ValueError):
    """A grouped scheme or placement breaks a structural constraint."""


@dataclass(frozen=True)
class CacheClasses:
    """Two-class cache annotation: the first num_small users hold small_size."""

    num_small: int
    small_size: float
    large_size: float

    def __post_init__(self):
        if self.num_small < 0:
            raise ConfigError("classes: K_S must be >= 0")
        if self.small_size < 0 or self.large_size < 0:
            raise ConfigError("classes: cache sizes must be >= 0")
        if self.small_size > self.large_size:
            raise ConfigError("classes: M_S must be <= M_L")


@dataclass(frozen=True)
class SystemConfig:
    """One problem instance (immutable after construction)."""

    num_users: int
    num_files: int
    file_lengths: tuple
    popularities: tuple
    cache_sizes: tuple
    classes: CacheClasses | None = None

    def __post_init__(self):
        if self.num_users < 1:
            raise ConfigError("K must be a positive integer")
        if self.num_files < 1:
            raise ConfigError("N must be a positive integer")
        object.__setattr__(self, "file_lengths", tuple(float(x) for x in self.file_lengths))
        object.__setattr__(self, "popularities", tuple(float(x) for x in self.popularities))
        object.__setattr__(self, "cache_sizes", tuple(float(x) for x in self.cache_sizes))
        if len(self.file_lengths) != self.num_files:
            raise ConfigError(f"F must list {self.num_files} file lengths")
        if len(self.popularities) != self.num_files:
            raise ConfigError(f"p must list {self.num_files} popularities")
        if len(self.cache_sizes) != self.num_users:
            raise ConfigError(f"M must list {self.num_users} cache sizes")
        if any(f <= 0 for f in self.file_lengths):
            raise ConfigError("F: all file lengths must be strictly positive")
        if any(not 0.0 < p <= 1.0 for p in self.popularities):
            raise ConfigError("p: popularities must lie in (0, 1]")
        total = sum(self.popularities)
        if abs(total - 1.0) > POPULARITY_RENORM_TOL:
            raise ConfigError(f"p: popularities must sum to 1 (got {total!r})")
        if abs(total - 1.0) > 0:
            object.__setattr__(
                self, "popularities", tuple(p / total for p in self.popularities)
            )
        if any(m < 0 for m in self.cache_sizes):
            raise ConfigError("M: cache sizes must be >= 0")
        if self.classes is not None:
            cls = self.classes
            if cls.num_small > self.num_users:
                raise ConfigError("classes: K_S cannot exceed K")
            expected = (cls.small_size,) * cls.num_small + (cls.large_size,) * (
                self.num_users - cls.num_small
            )
            if any(abs(a - b) > 1e-12 for a, b in zip(self.cache_sizes, expected)):
                raise ConfigError(
                    "M: per-user cache sizes must agree with the class annotation "
                    "(first K_S users small, remainder large)"
                )

    # Short aliases for math-heavy call sites.
    @property
    def K(self) -> int:
        return self.num_users

    @property
    def N(self) -> int:
        return self.num_files

    @property
    def uniform_lengths(self) -> bool:
        return max(self.file_lengths) - min(self.file_lengths) <= 1e-12

    @property
    def uniform_popularities(self) -> bool:
        return max(self.popularities) - min(self.popularities) <= 1e-12

    @property
    def uniform_caches(self) -> bool:
        return max(self.cache_sizes) - min(self.cache_sizes) <= 1e-12

    @property
    def small_users(self) -> tuple:
        if self.classes is None:
            return ()
        return tuple(range(1, self.classes.num_small + 1))

    @property
    def large_users(self) -> tuple:
        if self.classes is None:
            return ()
        return tuple(range(self.classes.num_small + 1, self.num_users + 1))

    def scaled_caches(self, factor: float) -> "SystemConfig":
        """Copy with every cache size (and class sizes) multiplied by factor."""
        classes = self.classes
        if classes is not None:
            classes = CacheClasses(
                classes.num_small, classes.small_size * factor, classes.large_size * factor
            )
        return SystemConfig(
            num_users=self.num_users,
            num_files=self.num_files,
            file_lengths=self.file_lengths,
            popularities=self.popularities,
            cache_sizes=tuple(m * factor for m in self.cache_sizes),
            classes=classes,
        )

    def to_json_dict(self) -> dict:
        out = {
            "K": self.num_users,
            "N": self.num_files,
            "F": list(self.file_lengths),
            "p": list(self.popularities),
            "M": list(self.cache_sizes),
        }
        if self.classes is not None:
            out["classes"] = {
                "K_S": self.classes.num_small,
                "M_S": self.classes.small_size,
                "M_L": self.classes.large_size,
            }
        return out


def config_from_dict(data: dict) -> SystemConfig:
    try:
        num_users = int(data["K"])
        num_files = int(data["N"])
        lengths = data["F"]
        pops = data["p"]
        caches = data["M"]
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc.args[0]!r}") from exc
    classes = None
    if data.get("classes") is not None:
        raw = data["classes"]
        try:
            classes = CacheClasses(int(raw["K_S"]), float(raw["M_S"]), float(raw["M_L"]))
        except KeyError as exc:
            raise ConfigError(f"missing classes field {exc.args[0]!r}") from exc
    return SystemConfig(
        num_users=num_users,
        num_files=num_files,
        file_lengths=lengths,
        popularities=pops,
        cache_sizes=caches,
        classes=classes,
    )


def load_config(path) -> SystemConfig:
    """Load and validate a JSON config.

    Popularities off from 1 by at most 1e-9 are renormalized; anything worse
    is rejected.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return config_from_dict(data)


def save_config(cfg: SystemConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_json_dict(), indent=2, sort_keys=True) + "\n")


def zipf_popularities(num_files: int, exponent: float) -> tuple:
    """p_l proportional to l^(-exponent), normalized, most popular first."""
    if num_files < 1:
        raise ValueError("num_files must be >= 1")
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    weights = np.arange(1, num_files + 1, dtype=float) ** (-float(exponent))
    weights /= weights.sum()
    return tuple(weights.tolist())


def uniform_config(num_users: int, num_files: int, cache_size: float, file_length: float = 1.0) -> SystemConfig:
    """Fully homogeneous instance: one length, one popularity, one cache size."""
    return SystemConfig(
        num_users=num_users,
        num_files=num_files,
        file_lengths=(file_length,) * num_files,
        popularities=(1.0 / num_files,) * num_files,
        cache_sizes=(cache_size,) * num_users,
    )


def graded_catalog_config(
    num_users: int = 4,
    cache_size: float = 1.0,
    classes: CacheClasses | None = None,
) -> SystemConfig:
    """The six-file graded-length catalog with Zipf(0.56) popularities.

    Files are listed longest first; popularity of the l-th longest file is
    the Zipf value of rank GRADED_POPULARITY_RANKS[l].  With `classes` given,
    per-user budgets come from the annotation and `cache_size` is ignored.
    """
    zipf = zipf_popularities(len(GRADED_FILE_LENGTHS), GRADED_ZIPF_EXPONENT)
    pops = tuple(zipf[rank - 1] for rank in GRADED_POPULARITY_RANKS)
    if classes is not None:
        caches = (classes.small_size,) * classes.num_small + (classes.large_size,) * (
            num_users - classes.num_small
        )
    else:
        caches = (cache_size,) * num_users
    return SystemConfig(
        num_users=num_users,
        num_files=len(GRADED_FILE_LENGTHS),
        file_lengths=GRADED_FILE_LENGTHS,
        popularities=pops,
        cache_sizes=caches,
        classes=classes,
    )


@dataclass(frozen=True)
class Placement:
    """Subfile sizes w[l-1, s] (canonical subset order) plus memory split mu[k-1, l-1]."""

    num_users: int
    num_files: int
    w: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if w.shape != (self.num_files, 1 << self.num_users):
            raise StructuralError(
                f"w must have shape (N, 2^K) = ({self.num_files}, {1 << self.num_users})"
            )
        if mu.shape != (self.num_users, self.num_files):
            raise StructuralError(f"mu must have shape (K, N) = ({self.num_users}, {self.num_files})")
        w = w.copy()
        mu = mu.copy()
        w.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "mu", mu)

    def size(self, file_index: int, subset: frozenset) -> float:
        """|W_S^(l)| for 1-based file index and subset of 1-based users."""
        si = subset_index(self.num_users)[frozenset(subset)]
        return float(self.w[file_index - 1, si])

    def cache_use(self, user: int, file_index: int) -> float:
        """Total size of file `file_index` subfiles cached by `user`."""
        total = 0.0
        for si, s in enumerate(canonical_subsets(self.num_users)):
            if user in s:
                total += self.w[file_index - 1, si]
        return total

    def to_json_dict(self) -> dict:
        subsets = canonical_subsets(self.num_users)
        sizes = {}
        for l in range(1, self.num_files + 1):
            row = {}
            for si, s in enumerate(subsets):
                value = float(self.w[l - 1, si])
                if value != 0.0:
                    row[subset_key(s)] = value
            sizes[str(l)] = row
        return {
            "K": self.num_users,
            "N": self.num_files,
            "sizes": sizes,
            "mu": [[float(v) for v in row] for row in self.mu],
        }


def placement_from_sizes(num_users: int, num_files: int, sizes: dict, mu=None) -> Placement:
    """Build a Placement from a {(file, subset): size} mapping.

    With mu omitted, the per-user memory split is the exact amount cached,
    i.e. mu[k,l] = sum of |W_S^(l)| over subsets S containing k.
    """
    w = np.zeros((num_files, 1 << num_users))
    index = subset_index(num_users)
    for (l, subset), value in sizes.items():
        if not 1 <= l <= num_files:
            raise StructuralError(f"file index {l} out of range 1..{num_files}")
        s = frozenset(subset)
        if s not in index:
            raise StructuralError(f"subset {sorted(s)} out of range for K={num_users}")
        w[l - 1, index[s]] = value
    if mu is None:
        mu = _mu_from_w(num_users, num_files, w)
    return Placement(num_users=num_users, num_files=num_files, w=w, mu=mu)


def _mu_from_w(num_users: int, num_files: int, w: np.ndarray) -> np.ndarray:
    mu = np.zeros((num_users, num_files))
    for si, s in enumerate(canonical_subsets(num_users)):
        for k in s:
            mu[k - 1, :] += w[:, si]
    return mu


def placement_from_json_dict(data: dict) -> Placement:
    try:
        num_users = int(data["K"])
        num_files = int(data["N"])
        raw_sizes = data["sizes"]
    except KeyError as exc:
        raise ConfigError(f"missing placement field {exc.args[0]!r}") from exc
    sizes = {}
    for file_key, row in raw_sizes.items():
        l = int(file_key)
        for key, value in row.items():
            sizes[(l, parse_subset_key(key))] = float(value)
    mu = np.array(data["mu"], dtype=float) if "mu" in data else None
    return placement_from_sizes(num_users, num_files, sizes, mu)


def load_placement(path) -> Placement:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return placement_from_json_dict(data)


def save_placement(pl: Placement, path) -> None:
    Path(path).write_text(json.dumps(pl.to_json_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class PlacementViolation:
    kind: str  # "negative-size" | "reconstruction" | "per-file-cache" | "total-cache"
    subject: str
    amount: float

    def __str__(self):
        return f"{self.kind} at {self.subject}: violated by {self.amount:.3e}"


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "feasible"
        return "\n".join(str(v) for v in self.violations)


def validate_placement(
    cfg: SystemConfig, pl: Placement, tol: float = 1e-9, relative: bool = False
) -> FeasibilityReport:
    """Check the three placement constraint families against cfg.

    Lists every violated constraint with the amount by which it is violated;
    an empty report means the placement is feasible within tol.  With
    `relative=True` each constraint's tolerance scales with its right-hand
    magnitude (rounding error in a published table accumulates with the
    number of summed entries, i.e. with the row's scale).
    """
    if pl.num_users != cfg.num_users or pl.num_files != cfg.num_files:
        raise StructuralError(
            f"placement is for K={pl.num_users}, N={pl.num_files}; "
            f"config has K={cfg.num_users}, N={cfg.num_files}"
        )

    def allowed(scale: float) -> float:
        return tol * max(1.0, scale) if relative else tol

    violations = []
    subsets = canonical_subsets(cfg.num_users)

    for l in range(1, cfg.num_files + 1):
        for si, s in enumerate(subsets):
            value = pl.w[l - 1, si]
            if value < -tol:
                violations.append(
                    PlacementViolation("negative-size", f"l={l}, S={{{subset_key(s)}}}", -value)
                )
        gap = abs(pl.w[l - 1, :].sum() - cfg.file_lengths[l - 1])
        if gap > allowed(cfg.file_lengths[l - 1]):
            violations.append(PlacementViolation("reconstruction", f"l={l}", gap))

    for k in range(1, cfg.num_users + 1):
        for l in range(1, cfg.num_files + 1):
            cached = pl.cache_use(k, l)
            excess = cached - pl.mu[k - 1, l - 1]
            if excess > allowed(pl.mu[k - 1, l - 1]):
                violations.append(PlacementViolation("per-file-cache", f"k={k}, l={l}", excess))
        excess = pl.mu[k - 1, :].sum() - cfg.cache_sizes[k - 1]
        if excess > allowed(cfg.cache_sizes[k - 1]):
            violations.append(PlacementViolation("total-cache", f"k={k}", excess))

    return FeasibilityReport(violations=tuple(violations))
