"""Standard universal dilation: environment alphabet, invertible coupling and
the global dynamics ``alpha = shift o phi_1`` on ``E x G^Z``.

Index conventions
-----------------
* An environment symbol ``g = (j, l)`` (``j`` a state, ``l`` a map label from
  the alphabet's label list) has index ``g = j * |L| + pos(l)``; labels are
  kept sorted, so index order is lexicographic order of ``(j, l)``.
* A point ``(i, g)`` of ``E x G`` has flat index ``x = i * |G| + g``.
* The distinguished first coordinate is ``j = 0``.

The bi-infinite environment is represented by a finite window of
materialized coordinates; touching anything outside it raises
:class:`WindowUnderflow`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .decompose import (LABEL_CAP, ConvexDecomposition, decompose_full, decompose_greedy,
                        label_table, map_from_label)
from .errors import (CompletionImpossible, HorizonExceeded, LabelNotInAlphabet,
                     LabelSpaceTooLarge, WindowUnderflow)
from .model import Distribution, StochasticMatrix, as_sequence, validate_stochastic

UNIVERSAL = "universal"
MINIMAL = "minimal"


@dataclass(frozen=True, eq=False)
class EnvironmentAlphabet:
    n: int
    mode: str
    labels: np.ndarray

    def __post_init__(self):
        labs = np.unique(np.asarray(self.labels, dtype=np.int64))
        labs.setflags(write=False)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "_pos", {int(l): k for k, l in enumerate(labs)})

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        return self.n * self.n_labels

    def index(self, j: int, label: int) -> int:
        try:
            return j * self.n_labels + self._pos[int(label)]
        except KeyError:
            raise LabelNotInAlphabet(f"label {label} not in alphabet") from None

    def __contains__(self, label) -> bool:
        return int(label) in self._pos

    def symbol(self, g: int) -> tuple[int, int]:
        j, pos = divmod(int(g), self.n_labels)
        return j, int(self.labels[pos])

    def symbols(self) -> list[tuple[int, int]]:
        return [self.symbol(g) for g in range(self.size)]

    def __eq__(self, other):
        if not isinstance(other, EnvironmentAlphabet):
            return NotImplemented
        return (self.n, self.mode) == (other.n, other.mode) and np.array_equal(
            self.labels, other.labels)

    def __hash__(self):
        return hash((self.n, self.mode, self.labels.tobytes()))


def build_alphabet(n: int, mode: str = UNIVERSAL,
                   dec: ConvexDecomposition | Iterable[ConvexDecomposition] | None = None,
                   cap: int = LABEL_CAP) -> EnvironmentAlphabet:
    """Build ``G = E x L``.

    ``universal`` takes every map label; ``minimal`` takes only the labels
    carrying positive weight in ``dec`` (one decomposition or several).
    """
    if mode == UNIVERSAL:
        if n * n**n > cap:
            raise LabelSpaceTooLarge(f"|G| = {n * n**n} exceeds cap {cap}")
        return EnvironmentAlphabet(n, mode, np.arange(n**n))
    if mode != MINIMAL:
        raise ValueError(f"unknown alphabet mode {mode!r}")
    if dec is None:
        raise ValueError("minimal alphabets need a decomposition")
    decs = [dec] if isinstance(dec, ConvexDecomposition) else list(dec)
    labels = set()
    for d in decs:
        if d.n != n:
            raise ValueError(f"decomposition over N={d.n}, alphabet over N={n}")
        labels.update(int(l) for w, l in d if w > 0)
    return EnvironmentAlphabet(n, mode, np.array(sorted(labels), dtype=np.int64))


class Coupling:
    """Bijection ``phi`` of ``E x G`` stored as forward and inverse index tables."""

    def __init__(self, n: int, gsize: int, forward, alphabet: EnvironmentAlphabet | None = None):
        fwd = np.array(forward, dtype=np.int64).ravel()
        if fwd.shape != (n * gsize,):
            raise ValueError(f"forward table must have {n * gsize} entries")
        inv = np.full_like(fwd, -1)
        if fwd.min() < 0 or fwd.max() >= len(fwd):
            raise CompletionImpossible("coupling table has out-of-range entries")
        inv[fwd] = np.arange(len(fwd))
        if np.any(inv < 0):
            raise CompletionImpossible("coupling table is not a bijection")
        fwd.setflags(write=False)
        inv.setflags(write=False)
        self.n, self.gsize, self.alphabet = n, gsize, alphabet
        self.forward, self.inverse = fwd, inv
        e, g = np.divmod(fwd, gsize)
        self.phi_e = e.reshape(n, gsize)
        self.phi_g = g.reshape(n, gsize)

    @classmethod
    def identity(cls, n: int, gsize: int) -> "Coupling":
        return cls(n, gsize, np.arange(n * gsize))

    def __call__(self, i: int, g: int) -> tuple[int, int]:
        return divmod(int(self.forward[i * self.gsize + g]), self.gsize)

    def inv(self, i: int, g: int) -> tuple[int, int]:
        return divmod(int(self.inverse[i * self.gsize + g]), self.gsize)

    def flat(self, i: int, g: int) -> int:
        return i * self.gsize + g

    def is_bijective(self) -> bool:
        return np.array_equal(np.sort(self.forward), np.arange(len(self.forward)))

    def __eq__(self, other):
        if not isinstance(other, Coupling):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.forward, other.forward)

    __hash__ = None


def build_coupling(alphabet: EnvironmentAlphabet,
                   labels: Sequence[int] | None = None) -> Coupling:
    """Coupling with ``phi(i, (0, l)) = (beta_l(i), (i, l))``.

    Points off the distinguished stratum are matched to the unused image
    points, both taken in lexicographic order of ``(i, j, l)``.
    """
    if labels is not None and set(int(l) for l in labels) - set(alphabet.labels.tolist()):
        raise LabelNotInAlphabet("coupling labels must belong to the alphabet")
    n, gs, nl = alphabet.n, alphabet.size, alphabet.n_labels
    total = n * gs
    fwd = np.full(total, -1, dtype=np.int64)
    if alphabet.mode == UNIVERSAL:
        tables = label_table(n, cap=max(LABEL_CAP, n**n))
    else:
        tables = np.array([map_from_label(l, n).table for l in alphabet.labels],
                          dtype=np.int64).reshape(nl, n)
    i_idx = np.repeat(np.arange(n), nl)
    pos = np.tile(np.arange(nl), n)
    dom = i_idx * gs + pos  # (i, (0, l)) with j = 0
    img = tables[pos, i_idx] * gs + (i_idx * nl + pos)  # (beta_l(i), (i, l))
    fwd[dom] = img
    used = np.zeros(total, dtype=bool)
    used[img] = True
    rest_dom = np.flatnonzero(fwd < 0)
    rest_img = np.flatnonzero(~used)
    if len(rest_dom) != len(rest_img):
        raise CompletionImpossible("distinguished stratum images collide")
    fwd[rest_dom] = rest_img
    coupling = Coupling(n, gs, fwd, alphabet)
    if not coupling.is_bijective():
        raise CompletionImpossible("completed coupling is not bijective")
    return coupling


@dataclass(frozen=True)
class GlobalState:
    """System state plus a window ``[lo, hi]`` of environment coordinates."""

    system: int
    lo: int
    values: tuple
    clock: int = 0

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("environment window must contain at least one coordinate")
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    def has(self, n: int) -> bool:
        return self.lo <= n <= self.hi

    def env(self, n: int) -> int:
        if not self.has(n):
            raise WindowUnderflow(n, self.lo, self.hi)
        return self.values[n - self.lo]

    def window(self) -> dict[int, int]:
        return {self.lo + k: v for k, v in enumerate(self.values)}

    def widen(self, lo: int, hi: int, fill: Callable[[int], int]) -> "GlobalState":
        """Extend the window to cover ``[lo, hi]``; existing values are kept."""
        lo, hi = min(lo, self.lo), max(hi, self.hi)
        vals = [self.values[n - self.lo] if self.has(n) else int(fill(n))
                for n in range(lo, hi + 1)]
        return replace(self, lo=lo, values=tuple(vals))

    @classmethod
    def from_window(cls, system: int, window: dict[int, int], clock: int = 0) -> "GlobalState":
        lo, hi = min(window), max(window)
        return cls(system, lo, tuple(window[n] for n in range(lo, hi + 1)), clock)


def _coupling_of(obj) -> Coupling:
    return obj if isinstance(obj, Coupling) else obj.coupling


def shift(z: GlobalState, k: int = 1) -> GlobalState:
    """Left shift ``theta**k`` of the environment: new coordinate n holds old n + k."""
    return replace(z, lo=z.lo - k)


def alpha_apply(spec, z: GlobalState, steps: int) -> GlobalState:
    """Apply ``alpha**steps``; negative steps use the exact inverse."""
    phi = _coupling_of(spec)
    system, lo, vals = z.system, z.lo, list(z.values)
    hi = lo + len(vals) - 1
    for _ in range(steps):
        if not lo <= 1 <= hi:
            raise WindowUnderflow(1, lo, hi)
        k = 1 - lo
        system, vals[k] = phi(system, vals[k])
        lo, hi = lo - 1, hi - 1
    for _ in range(-steps):
        # inverse shift moves coordinate 0 to 1, then undo the coupling there
        if not lo <= 0 <= hi:
            raise WindowUnderflow(0, lo, hi)
        lo, hi = lo + 1, hi + 1
        k = 1 - lo
        system, vals[k] = phi.inv(system, vals[k])
    return GlobalState(system, lo, tuple(vals), z.clock + steps)


def system_path(spec, z0: GlobalState, t: int) -> list[int]:
    """``X_0, ..., X_t`` from ``X_s = phi^E(X_{s-1}, Y_s)``."""
    phi = _coupling_of(spec)
    xs = [z0.system]
    for s in range(1, t + 1):
        xs.append(int(phi.phi_e[xs[-1], z0.env(s)]))
    return xs


def env_component(spec, z0: GlobalState, n: int, t: int) -> int:
    """Coordinate ``n`` of the environment at time ``t >= 1``, by the closed formula."""
    if t < 1:
        raise ValueError("t must be >= 1")
    phi = _coupling_of(spec)
    if n <= -t or n >= 1:
        return z0.env(n + t)
    x = system_path(phi, z0, t - 1 + n)[-1]
    return int(phi.phi_g[x, z0.env(n + t)])


def cocycle_apply(spec, z: GlobalState, t: int) -> GlobalState:
    """Apply ``phi_t o ... o phi_1`` in place, without shifting.

    ``phi_s`` couples the system with coordinate ``s``; coordinates ``<= 0``
    are never read or written.
    """
    phi = _coupling_of(spec)
    system, vals = z.system, list(z.values)
    for s in range(1, t + 1):
        if not z.has(s):
            raise WindowUnderflow(s, z.lo, z.hi)
        k = s - z.lo
        system, vals[k] = phi(system, vals[k])
    return GlobalState(system, z.lo, tuple(vals), z.clock + t)


def induced_transition(coupling: Coupling, q: Distribution) -> StochasticMatrix:
    """``P[i, j] = sum_g q_g [phi^E(i, g) == j]``."""
    if q.size != coupling.gsize:
        raise ValueError(f"distribution on {q.size} symbols, coupling has |G|={coupling.gsize}")
    n = coupling.n
    supp = q.support()
    p = np.zeros((n, n))
    for i in range(n):
        np.add.at(p[i], coupling.phi_e[i, supp], q.weights[supp])
    return validate_stochastic(p, tol=1e-10)


def universal_q(dec: ConvexDecomposition, alphabet: EnvironmentAlphabet) -> Distribution:
    """``q(j, l) = p_l`` if ``j == 0`` else 0."""
    if dec.n != alphabet.n:
        raise ValueError("decomposition and alphabet disagree on N")
    w = np.zeros(alphabet.size)
    for p, label in dec:
        if p == 0 and label not in alphabet:
            continue
        w[alphabet.index(0, label)] = p
    return Distribution(w / w.sum())


@dataclass(frozen=True, eq=False)
class DilationSpec:
    """The term ``(G, phi, Q0 x q(1) x q(2) x ...)`` of a standard dilation.

    ``q0`` is the one-site law used i.i.d. on coordinates ``<= 0``; ``None``
    means ``q(1)``. When ``homogeneous`` is set, ``q(t) = q(1)`` for all t.
    """

    alphabet: EnvironmentAlphabet
    coupling: Coupling
    q: tuple
    homogeneous: bool = False
    q0: Distribution | None = None
    decompositions: tuple = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(self.q))
        if not self.q:
            raise ValueError("at least one input law q(1) is required")
        for d in self.q:
            if d.size != self.alphabet.size:
                raise ValueError("input law size does not match |G|")

    @property
    def n(self) -> int:
        return self.alphabet.n

    @property
    def gsize(self) -> int:
        return self.alphabet.size

    @property
    def horizon(self) -> float:
        return float("inf") if self.homogeneous else len(self.q)

    def q_at(self, t: int) -> Distribution:
        if t < 1:
            raise ValueError("input laws are indexed from t = 1")
        if t <= len(self.q):
            return self.q[t - 1]
        if self.homogeneous:
            return self.q[0]
        raise HorizonExceeded(f"q({t}) undefined; spec covers t <= {len(self.q)}")

    def stratum_decomposition(self, t: int = 1) -> ConvexDecomposition | None:
        """Read ``p(t)`` back from ``q(t) = delta_0 x p(t)``; None if q leaves the stratum."""
        w = self.q_at(t).weights
        nl = self.alphabet.n_labels
        if np.any(w[nl:] > 0):
            return None
        keep = w[:nl] > 0
        return ConvexDecomposition(self.n, w[:nl][keep], self.alphabet.labels[keep], "sparse")

    def negative_law(self) -> Distribution:
        return self.q0 if self.q0 is not None else self.q[0]

    def transition(self, t: int) -> StochasticMatrix:
        return induced_transition(self.coupling, self.q_at(t))

    def with_q(self, q, homogeneous: bool | None = None) -> "DilationSpec":
        return replace(self, q=tuple(q),
                       homogeneous=self.homogeneous if homogeneous is None else homogeneous)

    def sample_state(self, k: int, lo: int, hi: int, rng: np.random.Generator) -> GlobalState:
        """Draw a window ``[lo, hi]`` under ``delta_k x Q0 x q(1) x ...``."""
        vals = []
        for m in range(lo, hi + 1):
            law = self.negative_law() if m <= 0 else self.q_at(m)
            vals.append(int(rng.choice(law.size, p=law.weights)))
        return GlobalState(k, lo, tuple(vals))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "mode": self.alphabet.mode,
            "labels": self.alphabet.labels.tolist(),
            "gsize": self.gsize,
            "coupling": {
                "index": "x = i*gsize + g, g = j*len(labels) + position of label",
                "forward": self.coupling.forward.tolist(),
            },
            "q": [d.weights.tolist() for d in self.q],
            "homogeneous": self.homogeneous,
            "q0": None if self.q0 is None else self.q0.weights.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DilationSpec":
        n = int(obj["n"])
        alphabet = EnvironmentAlphabet(n, obj["mode"], np.array(obj["labels"], dtype=np.int64))
        if alphabet.size != int(obj.get("gsize", alphabet.size)):
            raise ValueError("gsize does not match labels")
        coupling = Coupling(n, alphabet.size, obj["coupling"]["forward"], alphabet)
        q = tuple(Distribution(w) for w in obj["q"])
        q0 = None if obj.get("q0") is None else Distribution(obj["q0"])
        return cls(alphabet, coupling, q, bool(obj.get("homogeneous", False)), q0)


def dilate(target, mode: str = UNIVERSAL, coupling: Coupling | None = None,
           decompositions: Sequence[ConvexDecomposition] | None = None) -> DilationSpec:
    """Standard dilation of a matrix or matrix sequence.

    ``universal`` uses the full product-formula decomposition of every
    ``P(t)``; ``minimal`` uses the greedy decompositions and an alphabet
    holding just their labels. Pass ``coupling`` to reuse one universal
    coupling across many targets.
    """
    seq = as_sequence(target)
    mats = list(seq)
    if decompositions is None:
        decomp = decompose_full if mode == UNIVERSAL else decompose_greedy
        cache: dict = {}
        decompositions = []
        for m in mats:
            if m not in cache:
                cache[m] = decomp(m)
            decompositions.append(cache[m])
    if coupling is not None and coupling.alphabet is not None:
        alphabet = coupling.alphabet
    else:
        alphabet = build_alphabet(seq.n, mode, decompositions if mode == MINIMAL else None)
    if coupling is None:
        coupling = build_coupling(alphabet)
    q = tuple(universal_q(d, alphabet) for d in decompositions)
    homogeneous = seq.homogeneous
    if homogeneous:
        q = q[:1]
    return DilationSpec(alphabet, coupling, q, homogeneous, None, tuple(decompositions))
