"""Convex decompositions of stochastic matrices into deterministic matrices.

Deterministic maps ``beta: E -> E`` are labelled by integers ``0..N**N - 1``:
the base-N digits of the label, most significant first, are
``beta(0), ..., beta(N-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import LabelOutOfRange, LabelSpaceTooLarge, NonConvergence
from .model import DeterministicMap, StochasticMatrix, det_matrix, validate_stochastic

LABEL_CAP = 10**6
WEIGHT_SUM_TOL = 1e-10
GREEDY_RESIDUAL_TOL = 1e-12


def label_count(n: int) -> int:
    return n**n


def map_from_label(label: int, n: int) -> DeterministicMap:
    label = int(label)
    if not 0 <= label < n**n:
        raise LabelOutOfRange(f"label {label} outside 0..{n**n - 1} for N={n}")
    digits = [0] * n
    for i in range(n - 1, -1, -1):
        label, digits[i] = divmod(label, n)
    return DeterministicMap(tuple(digits))


def label_of_map(beta: DeterministicMap | Sequence[int]) -> int:
    table = beta.table if isinstance(beta, DeterministicMap) else tuple(beta)
    n = len(table)
    label = 0
    for v in table:
        if not 0 <= v < n:
            raise LabelOutOfRange(f"map value {v} outside 0..{n - 1}")
        label = label * n + int(v)
    return label


def label_table(n: int, cap: int = LABEL_CAP) -> np.ndarray:
    """All maps as an ``(N**N, N)`` array; row ``l`` is the table of ``beta_l``."""
    if n**n > cap:
        raise LabelSpaceTooLarge(f"N**N = {n**n} exceeds cap {cap}")
    # np.indices enumerates in C order, matching most-significant-digit-first labels.
    return np.indices((n,) * n).reshape(n, -1).T.copy()


@dataclass(frozen=True, eq=False)
class ConvexDecomposition:
    """Weights ``p_l`` and labels ``l`` with ``P = sum_l p_l D_l``."""

    n: int
    weights: np.ndarray
    labels: np.ndarray
    mode: str = "sparse"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        labs = np.array(self.labels, dtype=np.int64).ravel()
        if len(w) != len(labs) or len(w) == 0:
            raise ValueError("weights and labels must be non-empty and of equal length")
        if self.mode not in ("full", "sparse"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if np.any(w < 0):
            raise ValueError("negative weight in decomposition")
        if self.mode == "sparse" and np.any(w <= 0):
            raise ValueError("sparse decompositions carry strictly positive weights only")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}")
        if len(np.unique(labs)) != len(labs):
            raise ValueError("labels must be distinct")
        if np.any(labs < 0) or np.any(labs >= self.n**self.n):
            raise LabelOutOfRange("label outside 0..N**N-1")
        w.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", labs)

    def __len__(self):
        return len(self.weights)

    def __iter__(self) -> Iterator[tuple[float, int]]:
        return zip(self.weights.tolist(), self.labels.tolist())

    def maps(self) -> list[DeterministicMap]:
        return [map_from_label(l, self.n) for l in self.labels]

    def positive(self) -> "ConvexDecomposition":
        """Drop zero-weight terms."""
        keep = self.weights > 0
        return ConvexDecomposition(self.n, self.weights[keep], self.labels[keep], "sparse")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "terms": [{"weight": w, "beta": list(map_from_label(l, self.n).table)}
                      for w, l in self],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConvexDecomposition":
        terms = obj["terms"]
        n = int(obj.get("n", len(terms[0]["beta"])))
        return cls(n, [t["weight"] for t in terms],
                   [label_of_map(t["beta"]) for t in terms], obj.get("mode", "sparse"))


def decompose_full(p: StochasticMatrix, cap: int = LABEL_CAP) -> ConvexDecomposition:
    """Weight every deterministic map by ``prod_i P[i, beta(i)]``.

    All ``N**N`` terms are kept, zero weights included.
    """
    n = p.n
    table = label_table(n, cap)
    weights = np.prod(p.entries[np.arange(n), table], axis=1)
    return ConvexDecomposition(n, weights, np.arange(n**n), "full")


def greedy_steps(p: StochasticMatrix, tol: float = GREEDY_RESIDUAL_TOL):
    """Yield ``(weight, label, residual)`` for each greedy subtraction.

    Each row picks its largest residual entry (smallest column on ties), the
    step weight is the smallest picked entry, and ``weight * D`` is removed.
    """
    n = p.n
    resid = p.entries.copy()
    rows = np.arange(n)
    for _ in range(n * n + 1):
        if resid.max() <= tol:
            return
        cols = np.argmax(resid, axis=1)
        w = resid[rows, cols].min()
        if w <= 0:
            raise NonConvergence(f"residual stalled with max entry {resid.max():.3e}")
        resid[rows, cols] -= w
        yield float(w), label_of_map(cols.tolist()), resid.copy()
    raise NonConvergence("greedy decomposition did not terminate within N**2 + 1 steps")


def decompose_greedy(p: StochasticMatrix) -> ConvexDecomposition:
    """Sparse decomposition with at most ``N**2 - N + 1`` terms."""
    weights, labels = [], []
    for w, label, _ in greedy_steps(p):
        weights.append(w)
        labels.append(label)
    return ConvexDecomposition(p.n, weights, labels, "sparse")


def recombine(dec: ConvexDecomposition, n: int | None = None) -> StochasticMatrix:
    n = dec.n if n is None else n
    if n != dec.n:
        raise ValueError(f"decomposition is over N={dec.n}, not {n}")
    out = np.zeros((n, n))
    for w, l in dec:
        if w:
            out += w * det_matrix(map_from_label(l, n)).entries
    return validate_stochastic(out, tol=WEIGHT_SUM_TOL)
