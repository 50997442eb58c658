"""Shared domain types: bounds, sampled datasets, pairwise preference labels.

Decision vectors are plain 1-D float arrays. User-facing APIs take natural
units; all surrogate and acquisition math runs on points scaled to the unit
hypercube, so a single kernel width is meaningful across problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DuplicatePointError, InvalidValueError

#: Two points closer than this (in scaled units) count as duplicates. The
#: exploration term is singular at exact duplicates, so the dataset refuses
#: them outright.
TAU_DUP = 1e-9


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DomainError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Bounds:
    """Box constraints for an n-dimensional decision vector, natural units."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _freeze(_as_vector(self.lower))
        hi = _freeze(_as_vector(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape:
            raise DomainError("lower and upper must have equal length")
        if lo.size < 1:
            raise DomainError("bounds need at least one dimension")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise InvalidValueError("bounds must be finite")
        if not np.all(lo < hi):
            raise DomainError("each lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = _as_vector(x)
        if x.size != self.dim:
            return False
        pad = tol * np.maximum(1.0, np.abs(self.span))
        return bool(np.all(x >= self.lower - pad) and np.all(x <= self.upper + pad))

    def clip(self, x) -> np.ndarray:
        return np.clip(_as_vector(x), self.lower, self.upper)


def scale_to_unit(x, bounds: Bounds) -> np.ndarray:
    """Map a natural-units point into [0, 1]^n."""
    x = _as_vector(x)
    if x.size != bounds.dim:
        raise DomainError(f"point has dimension {x.size}, bounds have {bounds.dim}")
    if not bounds.contains(x):
        raise DomainError(f"point {x} outside bounds")
    return (x - bounds.lower) / bounds.span


def scale_from_unit(u, bounds: Bounds) -> np.ndarray:
    """Inverse of :func:`scale_to_unit`; round-trips to ~1e-12 relative error."""
    u = _as_vector(u)
    if u.size != bounds.dim:
        raise DomainError(f"point has dimension {u.size}, bounds have {bounds.dim}")
    return bounds.lower + u * bounds.span


def encode_preference(fa: float, fb: float, tol: float = 0.0) -> int:
    """Turn two (latent) objective values into a pairwise label.

    Returns -1 when the first option wins under minimization, +1 when the
    second wins, 0 when the gap is within ``tol``. Antisymmetric in (fa, fb).
    """
    fa = float(fa)
    fb = float(fb)
    if not (np.isfinite(fa) and np.isfinite(fb)):
        raise InvalidValueError(f"objective values must be finite, got ({fa}, {fb})")
    if tol < 0:
        raise InvalidValueError("tol must be nonnegative")
    if fa < fb - tol:
        return -1
    if fb < fa - tol:
        return +1
    return 0


@dataclass(frozen=True)
class Dataset:
    """Sampled decision vectors with their unit-cube images.

    Immutable; ``with_point`` returns a new dataset. Duplicate points (within
    ``TAU_DUP`` in scaled units) are rejected.
    """

    bounds: Bounds
    points: np.ndarray        # (N, n) natural units
    scaled: np.ndarray = field(default=None)  # (N, n) in [0, 1]

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise DomainError("a dataset needs at least one point")
        if pts.shape[1] != self.bounds.dim:
            raise DomainError("point dimension does not match bounds")
        scaled = np.empty_like(pts)
        for i, p in enumerate(pts):
            scaled[i] = scale_to_unit(p, self.bounds)
        for i in range(1, len(scaled)):
            d = np.linalg.norm(scaled[:i] - scaled[i], axis=1)
            if np.any(d <= TAU_DUP):
                raise DuplicatePointError(f"point {i} duplicates an earlier point")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "scaled", _freeze(scaled))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_point(self, x) -> "Dataset":
        """Return a new dataset with ``x`` (natural units) appended."""
        x = _as_vector(x)
        u = scale_to_unit(x, self.bounds)
        d = np.linalg.norm(self.scaled - u, axis=1)
        if np.any(d <= TAU_DUP):
            raise DuplicatePointError("new point duplicates an existing sample")
        return Dataset(self.bounds, np.vstack([self.points, x[None, :]]))


@dataclass(frozen=True)
class Preference:
    """One pairwise judgment between dataset points i and j.

    ``label`` follows the minimization convention: -1 means point i preferred,
    +1 means point j preferred, 0 means judged equivalent.
    """

    i: int
    j: int
    label: int

    def __post_init__(self):
        if self.i == self.j:
            raise DomainError("a preference must compare two distinct points")
        if self.i < 0 or self.j < 0:
            raise DomainError("preference indices must be nonnegative")
        if self.label not in (-1, 0, 1):
            raise InvalidValueError(f"label must be in {{-1, 0, +1}}, got {self.label}")


@dataclass(frozen=True)
class PreferenceSet:
    """An ordered collection of preferences over one dataset."""

    items: tuple = ()

    def __post_init__(self):
        items = tuple(self.items)
        seen = set()
        for p in items:
            if not isinstance(p, Preference):
                raise InvalidValueError("PreferenceSet items must be Preference")
            key = (min(p.i, p.j), max(p.i, p.j))
            if key in seen:
                raise DomainError(f"duplicate comparison for pair {key}")
            seen.add(key)
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def validate_against(self, dataset: Dataset) -> None:
        n = len(dataset)
        for p in self.items:
            if p.i >= n or p.j >= n:
                raise DomainError(f"preference ({p.i}, {p.j}) out of range for N={n}")

    def with_item(self, p: Preference) -> "PreferenceSet":
        return PreferenceSet(self.items + (p,))
