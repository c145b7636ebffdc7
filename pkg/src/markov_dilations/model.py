"""State spaces, stochastic matrices, deterministic maps and distributions.

States are the integers ``0..N-1``. Observables ``f: E -> C`` are length-N
complex vectors and a stochastic matrix acts on them as ``(Pf)(i) = sum_j P[i, j] f(j)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import HorizonExceeded, NegativeEntry, RowSumDeviation

ROW_SUM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateSpace:
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"state space size must be >= 1, got {self.n}")

    def states(self) -> range:
        return range(self.n)


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Row-stochastic matrix; build it through :func:`validate_stochastic`."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, StochasticMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def apply(self, f) -> np.ndarray:
        """Return ``Pf`` for an observable ``f``."""
        return self.entries @ np.asarray(f, dtype=complex)

    def push(self, pi) -> np.ndarray:
        """Return the distribution ``pi P`` after one step."""
        return np.asarray(pi, dtype=float) @ self.entries

    def is_permutation(self) -> bool:
        e = self.entries
        return bool(np.all((e == 0) | (e == 1)) and np.all(e.sum(axis=0) == 1))

    def is_deterministic(self) -> bool:
        e = self.entries
        return bool(np.all((e == 0) | (e == 1)) and np.all(e.sum(axis=1) == 1))

    def to_json(self) -> dict:
        return {"n": self.n, "rows": self.entries.tolist()}


def validate_stochastic(raw, tol: float = ROW_SUM_TOL) -> StochasticMatrix:
    """Check a square matrix for nonnegativity and unit row sums.

    Rows whose sum deviates from one by less than ``tol`` are renormalized;
    larger deviations raise :class:`RowSumDeviation`.
    """
    a = np.array(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    neg = np.argwhere(a < 0)
    if len(neg):
        i, j = neg[0]
        raise NegativeEntry(int(i), int(j), float(a[i, j]))
    sums = a.sum(axis=1)
    dev = sums - 1.0
    bad = np.flatnonzero(np.abs(dev) >= tol)
    if len(bad):
        r = int(bad[0])
        raise RowSumDeviation(r, float(dev[r]))
    a = a / sums[:, None]
    return StochasticMatrix(_frozen(a))


def identity_matrix(n: int) -> StochasticMatrix:
    return StochasticMatrix(_frozen(np.eye(n)))


@dataclass(frozen=True, eq=False)
class DeterministicMap:
    """A map ``beta: E -> E`` stored as its value table."""

    table: tuple

    def __post_init__(self):
        n = len(self.table)
        if n == 0:
            raise ValueError("empty map")
        for v in self.table:
            if not 0 <= v < n:
                raise ValueError(f"map value {v} outside 0..{n - 1}")
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))

    @property
    def n(self) -> int:
        return len(self.table)

    def __call__(self, i: int) -> int:
        return self.table[i]

    def __eq__(self, other):
        if not isinstance(other, DeterministicMap):
            return NotImplemented
        return self.table == other.table

    def __hash__(self):
        return hash(self.table)

    def __repr__(self):
        return f"DeterministicMap({list(self.table)})"

    def is_bijective(self) -> bool:
        return len(set(self.table)) == self.n


def det_matrix(beta: DeterministicMap) -> StochasticMatrix:
    """Matrix ``D[i, j] = [beta(i) == j]``, so that ``D f = f o beta``."""
    n = beta.n
    d = np.zeros((n, n))
    d[np.arange(n), beta.table] = 1.0
    return StochasticMatrix(_frozen(d))


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability weights on ``0..M-1``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if len(w) == 0:
            raise ValueError("empty distribution")
        if np.any(w < 0):
            raise ValueError("negative probability weight")
        s = w.sum()
        if abs(s - 1.0) >= ROW_SUM_TOL:
            raise ValueError(f"weights sum to {s!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w / s))

    @property
    def size(self) -> int:
        return len(self.weights)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    @classmethod
    def point_mass(cls, size: int, at: int) -> "Distribution":
        w = np.zeros(size)
        w[at] = 1.0
        return cls(w)


class MatrixSequence:
    """Transition matrices ``P(1), ..., P(T)``; ``P(0)`` is the identity."""

    def __init__(self, matrices: Iterable[StochasticMatrix]):
        ms = tuple(m if isinstance(m, StochasticMatrix) else validate_stochastic(m)
                   for m in matrices)
        if not ms:
            raise ValueError("a matrix sequence needs at least one matrix")
        n = ms[0].n
        if any(m.n != n for m in ms):
            raise ValueError("all matrices in a sequence must share one state space")
        self._ms = ms

    @classmethod
    def constant(cls, p, length: int = 1) -> "MatrixSequence":
        p = p if isinstance(p, StochasticMatrix) else validate_stochastic(p)
        return cls([p] * length)

    @property
    def n(self) -> int:
        return self._ms[0].n

    @property
    def homogeneous(self) -> bool:
        first = self._ms[0]
        return all(m == first for m in self._ms[1:])

    def __len__(self):
        return len(self._ms)

    def __iter__(self):
        return iter(self._ms)

    def __getitem__(self, t: int) -> StochasticMatrix:
        """Return ``P(t)``; indexing is 1-based, ``P(0)`` is the identity."""
        if t == 0:
            return identity_matrix(self.n)
        if not 1 <= t <= len(self._ms):
            raise HorizonExceeded(f"P({t}) requested, sequence has {len(self._ms)} matrices")
        return self._ms[t - 1]

    def product(self, t: int) -> np.ndarray:
        """``P(1) P(2) ... P(t)`` as a dense array."""
        out = np.eye(self.n)
        for s in range(1, t + 1):
            out = out @ self[s].entries
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "matrices": [m.entries.tolist() for m in self._ms],
                "homogeneous": self.homogeneous}


def evolve_observable(seq: MatrixSequence, f, t: int) -> np.ndarray:
    """Return ``P(1) ... P(t) f``."""
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    if t > len(seq):
        raise HorizonExceeded(f"horizon {t} exceeds sequence length {len(seq)}")
    v = np.asarray(f, dtype=complex).copy()
    if v.shape != (seq.n,):
        raise ValueError(f"observable must have length {seq.n}")
    for s in range(t, 0, -1):
        v = seq[s].entries @ v
    return v


def as_sequence(obj: StochasticMatrix | MatrixSequence | Sequence) -> MatrixSequence:
    if isinstance(obj, MatrixSequence):
        return obj
    if isinstance(obj, StochasticMatrix):
        return MatrixSequence([obj])
    return MatrixSequence.constant(obj)
