"""Quantum extension of a standard dilation of a homogeneous chain.

Hilbert spaces are ``H = C^N`` (system) and ``Z = C^|G|`` (one environment
site). On ``H (x) Z`` the basis vector ``|i, g>`` has index ``i * |G| + g``,
the same flat index the classical coupling uses, so ``V |x> = |phi(x)>``.

Operators on ``H (x) Z_lo (x) ... (x) Z_hi`` are :class:`WindowOperator`
objects: a dense matrix whose tensor factors are ordered system first, then
environment coordinates ``lo..hi`` ascending; the identity is implied on every
coordinate outside the window. An empty window has ``hi == lo - 1``.

Channels act in the Heisenberg picture, ``T(a) = sum_g K_g^dagger a K_g``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .decompose import ConvexDecomposition, map_from_label
from .dilation import Coupling, DilationSpec, GlobalState, alpha_apply
from .errors import (DimensionTooLarge, DimMismatch, NotAPermutation, UnitalityViolation,
                     WindowTooLarge)
from .model import Distribution, StochasticMatrix
from .report import VerificationReport

DENSE_CAP = 5000
UNITALITY_TOL = 1e-10


def is_unitary(m: np.ndarray, atol: float = 1e-10) -> bool:
    return np.allclose(m.conj().T @ m, np.eye(m.shape[1]), rtol=0, atol=atol)


def is_hermitian(m: np.ndarray, atol: float = 1e-10) -> bool:
    return np.allclose(m, m.conj().T, rtol=0, atol=atol)


def multiplication_operator(f) -> np.ndarray:
    """``m_f = diag(f)``."""
    return np.diag(np.asarray(f, dtype=complex))


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


class UnitaryV:
    """Permutation unitary ``V = sum |phi(i, g)><i, g|`` on ``H (x) Z``."""

    def __init__(self, coupling: Coupling):
        self.coupling = coupling
        self.n, self.gsize = coupling.n, coupling.gsize
        self.perm = coupling.forward
        dim = len(self.perm)
        m = np.zeros((dim, dim), dtype=complex)
        m[self.perm, np.arange(dim)] = 1.0
        self.matrix = m

    @property
    def dim(self) -> int:
        return len(self.perm)

    def block(self, g: int, g2: int) -> np.ndarray:
        """``V_{g g'} = sum_{ij} |i><i, g| phi(j, g')><j|``."""
        return self.blocks()[g, g2]

    def blocks(self) -> np.ndarray:
        """All blocks as an array indexed ``[g, g', i, j]``."""
        v4 = self.matrix.reshape(self.n, self.gsize, self.n, self.gsize)
        return v4.transpose(1, 3, 0, 2)

    def conjugate(self, a: np.ndarray) -> np.ndarray:
        """``V^dagger (a (x) 1) V`` for ``a`` on ``H``."""
        if a.shape != (self.n, self.n):
            raise DimMismatch(f"expected an {self.n}x{self.n} operator")
        big = np.kron(a, np.eye(self.gsize))
        return big[np.ix_(self.perm, self.perm)]


def build_unitary(coupling: Coupling) -> UnitaryV:
    return UnitaryV(coupling)


@dataclass(frozen=True, eq=False)
class EnvVector:
    vector: np.ndarray

    @property
    def size(self) -> int:
        return len(self.vector)

    def power(self, w: int) -> np.ndarray:
        """``upsilon^{(x) w}``."""
        out = np.ones(1, dtype=complex)
        for _ in range(w):
            out = np.kron(out, self.vector)
        return out


def build_env_vector(q: Distribution) -> EnvVector:
    """``upsilon = sum_g sqrt(q_g) |g>``."""
    v = np.sqrt(q.weights).astype(complex)
    v.setflags(write=False)
    return EnvVector(v)


class KrausChannel:
    """Unital completely positive map ``a -> sum_g K_g^dagger a K_g``."""

    def __init__(self, kraus: np.ndarray, labels: Sequence | None = None,
                 tol: float = UNITALITY_TOL):
        ops = np.asarray(kraus, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimMismatch("Kraus operators must be a stack of square matrices")
        self.kraus = ops
        self.labels = list(labels) if labels is not None else list(range(len(ops)))
        dev = self.unitality_deviation()
        if dev > tol:
            raise UnitalityViolation(f"sum K^dagger K deviates from I by {dev:.3e}")

    @property
    def n(self) -> int:
        return self.kraus.shape[1]

    def unitality_deviation(self) -> float:
        s = np.einsum("gki,gkj->ij", self.kraus.conj(), self.kraus)
        return max_abs(s - np.eye(self.n))

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.n, self.n):
            raise DimMismatch(f"expected an {self.n}x{self.n} operator, got {a.shape}")
        return np.einsum("gki,kl,glj->ij", self.kraus.conj(), a, self.kraus)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k]
                      for k in self.kraus],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KrausChannel":
        arr = np.array(obj["kraus"], dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])


def kraus_channel(v: UnitaryV, upsilon: EnvVector) -> KrausChannel:
    """Kraus operators ``K_g = sum_{g'} sqrt(q_{g'}) V_{g g'}``."""
    if upsilon.size != v.gsize:
        raise DimMismatch("environment vector does not match |G|")
    ops = np.einsum("hkij,k->hij", v.blocks(), upsilon.vector)
    return KrausChannel(ops)


def heisenberg_apply(channel: KrausChannel, a, t: int = 1) -> np.ndarray:
    if t < 0:
        raise ValueError("power must be nonnegative")
    a = np.asarray(a, dtype=complex)
    if a.shape != (channel.n, channel.n):
        raise DimMismatch(f"expected an {channel.n}x{channel.n} operator, got {a.shape}")
    for _ in range(t):
        a = channel(a)
    return a


def davis_channel(dec: ConvexDecomposition) -> KrausChannel:
    """``T a = sum_{l, i} p_l |i><beta_l(i)| a |beta_l(i)><i|``.

    One Kraus operator ``sqrt(p_l) |beta_l(i)><i|`` per positive-weight
    label ``l`` and state ``i``.
    """
    n = dec.n
    ops, labels = [], []
    for w, label in dec:
        if w <= 0:
            continue
        beta = map_from_label(label, n)
        for i in range(n):
            k = np.zeros((n, n), dtype=complex)
            k[beta(i), i] = np.sqrt(w)
            ops.append(k)
            labels.append((i, label))
    return KrausChannel(np.array(ops), labels)


def matrix_units(n: int):
    for a in range(n):
        for b in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[a, b] = 1.0
            yield (a, b), e


def channel_distance(t1: KrausChannel, t2: KrausChannel) -> float:
    """Largest entrywise difference of two channels over all matrix units."""
    if t1.n != t2.n:
        raise DimMismatch("channels act on different spaces")
    return max(max_abs(t1(e) - t2(e)) for _, e in matrix_units(t1.n))


def verify_cms_extension(channel: KrausChannel, p: StochasticMatrix,
                         tol: float = 1e-10) -> VerificationReport:
    """Check ``T m_f = m_{P f}`` on every basis indicator ``f = e_j``."""
    report = VerificationReport("CMS extension")
    n = p.n
    if channel.n != n:
        raise DimMismatch("channel and matrix act on different state spaces")
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        dev = max_abs(channel(multiplication_operator(e)) - multiplication_operator(p.apply(e)))
        report.add("extension", dev, tol, f=f"e{j}")
    off = max((max_abs(channel(m)) for (a, b), m in matrix_units(n) if a != b), default=0.0)
    # off-diagonal behavior is not constrained, only recorded
    report.add("unitality", channel.unitality_deviation(), tol, off_diagonal_response=off)
    return report


def permutation_automorphism(p: StochasticMatrix, phases=None):
    """Unitary ``u`` with ``u|j> = phase_j P^T |j>`` and its verification report."""
    if not p.is_permutation():
        raise NotAPermutation("matrix is not a permutation")
    n = p.n
    phases = np.ones(n, dtype=complex) if phases is None else np.asarray(phases, dtype=complex)
    if phases.shape != (n,) or not np.allclose(np.abs(phases), 1.0, rtol=0, atol=1e-12):
        raise ValueError("phases must be n unit-modulus numbers")
    u = p.entries.T.astype(complex) * phases[None, :]
    channel = KrausChannel(u[None])
    return u, verify_cms_extension(channel, p)


def conditional_expectation(a, state, sys_dim: int | None = None) -> np.ndarray:
    """Compress an operator on ``H (x) K`` to ``H`` with an environment state.

    ``state`` is a vector ``kappa`` (giving ``<h'| E[A] |h> = <h' kappa| A |h kappa>``),
    a density/trace-class matrix ``tau`` on ``K``, or an :class:`EnvVector`,
    in which case ``a`` may be a :class:`WindowOperator` and the product vector
    ``upsilon^{(x) width}`` is used.
    """
    if isinstance(a, WindowOperator):
        sys_dim = a.n
        if isinstance(state, EnvVector):
            state = state.power(a.width)
        a = a.matrix
    if isinstance(state, EnvVector):
        state = state.vector
    a = np.asarray(a, dtype=complex)
    state = np.asarray(state, dtype=complex)
    k = state.shape[0]
    if sys_dim is None:
        sys_dim = a.shape[0] // k
    if a.shape != (sys_dim * k, sys_dim * k):
        raise DimMismatch(f"operator of shape {a.shape} does not split as {sys_dim} x {k}")
    a4 = a.reshape(sys_dim, k, sys_dim, k)
    if state.ndim == 1:
        return np.einsum("k,xkyl,l->xy", state.conj(), a4, state)
    if state.shape != (k, k):
        raise DimMismatch("environment state must be square")
    return np.einsum("xkyl,lk->xy", a4, state)


class WindowOperator:
    """Dense operator on ``H (x) Z_lo (x) ... (x) Z_hi``."""

    def __init__(self, matrix, n: int, gsize: int, lo: int, hi: int):
        self.n, self.gsize, self.lo, self.hi = n, gsize, lo, hi
        if hi < lo - 1:
            raise ValueError("window bounds out of order")
        m = np.asarray(matrix, dtype=complex)
        d = self.dim
        if m.shape != (d, d):
            raise DimMismatch(f"window [{lo}, {hi}] needs a {d}x{d} matrix, got {m.shape}")
        self.matrix = m

    @classmethod
    def system(cls, a, gsize: int, at: int = 1) -> "WindowOperator":
        a = np.asarray(a, dtype=complex)
        return cls(a, a.shape[0], gsize, at, at - 1)

    @classmethod
    def identity(cls, n: int, gsize: int, lo: int = 1, hi: int = 0) -> "WindowOperator":
        d = n * gsize ** (hi - lo + 1)
        return cls(np.eye(d), n, gsize, lo, hi)

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def dim(self) -> int:
        return self.n * self.gsize**self.width

    def extend(self, lo: int, hi: int) -> "WindowOperator":
        """Tensor with identities so that the window covers ``[lo, hi]``."""
        if self.width:
            lo, hi = min(lo, self.lo), max(hi, self.hi)
            left, right = self.lo - lo, hi - self.hi
        else:
            left, right = 0, hi - lo + 1
        if left == 0 and right == 0:
            return self
        dl, dm, dr = self.gsize**left, self.gsize**self.width, self.gsize**right
        d = self.n * dl * dm * dr
        if d > DENSE_CAP:
            raise DimensionTooLarge(f"window [{lo}, {hi}] exceeds dense cap {DENSE_CAP}")
        a4 = self.matrix.reshape(self.n, dm, self.n, dm)
        out = np.einsum("xmyn,lL,rR->xlmryLnR", a4, np.eye(dl), np.eye(dr))
        return WindowOperator(out.reshape(d, d), self.n, self.gsize, lo, hi)

    def aligned(self, other: "WindowOperator"):
        if self.width == 0 and other.width == 0:
            return self, other
        if self.width == 0:
            lo, hi = other.lo, other.hi
        elif other.width == 0:
            lo, hi = self.lo, self.hi
        else:
            lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return self.extend(lo, hi), other.extend(lo, hi)

    def shifted(self, k: int) -> "WindowOperator":
        """Move the window content by ``k`` coordinates (``k = 1`` is the right shift)."""
        return WindowOperator(self.matrix, self.n, self.gsize, self.lo + k, self.hi + k)

    def __matmul__(self, other: "WindowOperator") -> "WindowOperator":
        a, b = self.aligned(other)
        return WindowOperator(a.matrix @ b.matrix, a.n, a.gsize, a.lo, a.hi)

    def __add__(self, other: "WindowOperator") -> "WindowOperator":
        a, b = self.aligned(other)
        return WindowOperator(a.matrix + b.matrix, a.n, a.gsize, a.lo, a.hi)

    def scale(self, c) -> "WindowOperator":
        return WindowOperator(c * self.matrix, self.n, self.gsize, self.lo, self.hi)

    def dagger(self) -> "WindowOperator":
        return WindowOperator(self.matrix.conj().T, self.n, self.gsize, self.lo, self.hi)

    def distance(self, other: "WindowOperator") -> float:
        a, b = self.aligned(other)
        return max_abs(a.matrix - b.matrix)

    def __repr__(self):
        return f"WindowOperator(N={self.n}, |G|={self.gsize}, window=[{self.lo}, {self.hi}])"


def _site_permutation(coupling: Coupling, lo: int, hi: int, site: int,
                      inverse: bool = False) -> np.ndarray:
    """Basis permutation of ``V`` acting on the system and coordinate ``site``."""
    n, g = coupling.n, coupling.gsize
    left, right = g ** (site - lo), g ** (hi - site)
    table = coupling.inverse if inverse else coupling.forward
    fe, fg = np.divmod(table.reshape(n, g), g)
    i = np.arange(n)[:, None, None, None]
    lft = np.arange(left)[None, :, None, None]
    c = np.arange(g)[None, None, :, None]
    rgt = np.arange(right)[None, None, None, :]
    perm = ((fe[i, c] * left + lft) * g + fg[i, c]) * right + rgt
    return perm.ravel()


def automorphism_J(v: UnitaryV | Coupling, a: WindowOperator) -> WindowOperator:
    """``J(A) = V_1^dagger Theta(A) V_1`` with ``Theta`` the right shift."""
    coupling = v.coupling if isinstance(v, UnitaryV) else v
    b = a.shifted(1).extend(1, 1)
    perm = _site_permutation(coupling, b.lo, b.hi, 1)
    return WindowOperator(b.matrix[np.ix_(perm, perm)], b.n, b.gsize, b.lo, b.hi)


def automorphism_J_inverse(v: UnitaryV | Coupling, a: WindowOperator) -> WindowOperator:
    """``J^{-1}(A) = Theta^{-1}(V_1 A V_1^dagger)``."""
    coupling = v.coupling if isinstance(v, UnitaryV) else v
    b = a.extend(1, 1)
    perm = _site_permutation(coupling, b.lo, b.hi, 1, inverse=True)
    return WindowOperator(b.matrix[np.ix_(perm, perm)], b.n, b.gsize, b.lo, b.hi).shifted(-1)


def automorphism_power(v, a: WindowOperator, t: int) -> WindowOperator:
    step = automorphism_J if t >= 0 else automorphism_J_inverse
    for _ in range(abs(t)):
        a = step(v, a)
    return a


def flow(v: UnitaryV, upsilon: EnvVector, a, t: int, cap: int = DENSE_CAP):
    """Quantum stochastic flow ``j_t(a)`` on ``H (x) Z_1 (x) ... (x) Z_t``.

    ``j_t(a) = sum_{z z'} j_{t-1}(E_{|z><z'|}[V^dagger a V]) (x) |z'><z|``.
    Returns ``(j_t(a), deviation)`` with deviation
    ``max |E_{upsilon^t}[j_t(a)] - T^t(a)|`` against the Kraus channel of ``(V, upsilon)``.
    """
    a = np.asarray(a, dtype=complex)
    n, g = v.n, v.gsize
    if a.shape != (n, n):
        raise DimMismatch(f"expected an {n}x{n} operator")
    if n * g**t > cap:
        raise DimensionTooLarge(f"N*|G|^t = {n * g**t} exceeds dense cap {cap}")
    jt = _flow_batch(v, a[None], t)[0]
    op = WindowOperator(jt, n, g, 1, t)
    channel = kraus_channel(v, upsilon)
    dev = max_abs(conditional_expectation(op, upsilon) - heisenberg_apply(channel, a, t))
    return op, dev


def _flow_batch(v: UnitaryV, stack: np.ndarray, t: int) -> np.ndarray:
    if t == 0:
        return stack
    n, g = v.n, v.gsize
    m = len(stack)
    b = np.stack([v.conjugate(a) for a in stack]).reshape(m, n, g, n, g)
    # slices E_{|z><z'|}[B] = <z'| B |z>, arranged [m, z', z, i, j]
    slices = b.transpose(0, 2, 4, 1, 3).reshape(m * g * g, n, n)
    inner = _flow_batch(v, slices, t - 1)
    d = inner.shape[-1]
    inner = inner.reshape(m, g, g, d, d)
    out = inner.transpose(0, 3, 1, 4, 2)  # [m, x, z', y, z]
    return out.reshape(m, d * g, d * g)


class DiagonalObservable:
    """Global random variable ``F`` on ``E x G^{[lo, hi]}``, stored as ``diag(m_F)``."""

    def __init__(self, values, n: int, gsize: int, lo: int, hi: int):
        vals = np.asarray(values, dtype=complex).ravel()
        if len(vals) != n * gsize ** (hi - lo + 1):
            raise DimMismatch("observable values do not match the window size")
        self.values, self.n, self.gsize, self.lo, self.hi = vals, n, gsize, lo, hi

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @classmethod
    def from_function(cls, fn: Callable[[int, tuple], complex], n: int, gsize: int,
                      lo: int, hi: int) -> "DiagonalObservable":
        vals = [fn(i, cfg) for i in range(n)
                for cfg in itertools.product(range(gsize), repeat=hi - lo + 1)]
        return cls(vals, n, gsize, lo, hi)

    @classmethod
    def indicator(cls, n: int, gsize: int, lo: int, hi: int, system: int | None,
                  config: Mapping[int, int] | None = None) -> "DiagonalObservable":
        """Indicator of ``X = system`` (if given) and ``Y_m = config[m]``."""
        config = dict(config or {})

        def fn(i, cfg):
            if system is not None and i != system:
                return 0.0
            return float(all(cfg[m - lo] == s for m, s in config.items()))

        return cls.from_function(fn, n, gsize, lo, hi)

    @classmethod
    def system_function(cls, f, gsize: int, lo: int, hi: int) -> "DiagonalObservable":
        f = np.asarray(f, dtype=complex)
        return cls.from_function(lambda i, cfg: f[i], len(f), gsize, lo, hi)

    def __call__(self, i: int, cfg: Sequence[int]) -> complex:
        idx = i
        for c in cfg:
            idx = idx * self.gsize + c
        return self.values[idx]

    def operator(self) -> WindowOperator:
        return WindowOperator(np.diag(self.values), self.n, self.gsize, self.lo, self.hi)

    def __mul__(self, other: "DiagonalObservable") -> "DiagonalObservable":
        if (self.lo, self.hi) != (other.lo, other.hi):
            raise DimMismatch("observables live on different windows")
        return DiagonalObservable(self.values * other.values, self.n, self.gsize,
                                  self.lo, self.hi)


def _basis_states(n: int, gsize: int, lo: int, hi: int):
    for i in range(n):
        for cfg in itertools.product(range(gsize), repeat=hi - lo + 1):
            yield i, cfg


def evolved_window(lo: int, hi: int, t: int) -> tuple[int, int]:
    """Window of ``J^t(m_F)`` for ``F`` on ``[lo, hi]``."""
    for _ in range(t):
        lo, hi = min(lo + 1, 1), max(hi + 1, 1)
    return lo, hi


def compose_with_alpha(coupling: Coupling, obs: DiagonalObservable, t: int,
                       window: tuple[int, int] | None = None) -> DiagonalObservable:
    """``F o alpha^t`` on the window of ``J^t(m_F)`` (or a wider one), computed classically."""
    lo, hi = window or evolved_window(obs.lo, obs.hi, t)
    vals = []
    for i, cfg in _basis_states(obs.n, obs.gsize, lo, hi):
        z = alpha_apply(coupling, GlobalState(i, lo, cfg), t)
        vals.append(obs(z.system, [z.env(m) for m in range(obs.lo, obs.hi + 1)]))
    return DiagonalObservable(vals, obs.n, obs.gsize, lo, hi)


def check_cqd1(coupling: Coupling, v: UnitaryV, observables, t: int,
               tol: float = 1e-10) -> VerificationReport:
    """Compare ``J^t(m_F)`` with ``m_{F o alpha^t}`` entrywise for each ``F``."""
    if isinstance(observables, DiagonalObservable):
        observables = [observables]
    report = VerificationReport("J(m_F) = m_{F o alpha}")
    worst, where = 0.0, None
    cache: dict = {}
    for k, obs in enumerate(observables):
        lo, hi = evolved_window(obs.lo, obs.hi, t)
        if obs.n * obs.gsize ** (hi - lo + 1) > DENSE_CAP:
            raise DimensionTooLarge("evolved window exceeds dense cap")
        quantum = automorphism_power(v, obs.operator(), t)
        key = (obs.lo, obs.hi, lo, hi)
        if key not in cache:
            # alpha^t as an index map from the evolved window to the source window
            idx = compose_with_alpha(
                coupling, DiagonalObservable(np.arange(obs.n * obs.gsize**obs.width),
                                             obs.n, obs.gsize, obs.lo, obs.hi), t, (lo, hi))
            cache[key] = idx.values.real.astype(np.int64)
        # m_{F o alpha^t} is diagonal: compare the diagonal, then require zeros elsewhere
        absq = np.abs(quantum.matrix)
        np.fill_diagonal(absq, 0.0)
        dev = max(max_abs(np.diagonal(quantum.matrix) - obs.values[cache[key]]), absq.max())
        if where is None or dev > worst:
            worst, where = dev, k
    report.add("cqd1", worst, tol, t=t, observables=len(observables), worst_index=where)
    return report


Polynomial = Mapping[tuple, complex]


def eval_polynomial(eta: Polynomial, values: Sequence) -> complex:
    return sum(c * np.prod([v**e for v, e in zip(values, exps)]) for exps, c in eta.items())


def eval_polynomial_operators(eta: Polynomial, ops: Sequence[np.ndarray]) -> np.ndarray:
    """``eta(A_1, ..., A_n)`` for commuting matrices via matrix products."""
    d = ops[0].shape[0]
    out = np.zeros((d, d), dtype=complex)
    for exps, c in eta.items():
        term = np.eye(d, dtype=complex)
        for a, e in zip(ops, exps):
            for _ in range(e):
                term = term @ a
        out += c * term
    return out


def check_cqd2(spec: DilationSpec, v: UnitaryV, upsilon: EnvVector, k: int,
               observables: Sequence[DiagonalObservable], eta: Polynomial,
               times: Sequence[int] | None = None, tol: float = 1e-10,
               max_width: int = 4) -> VerificationReport:
    """``E_k[eta(F_1 o alpha^{s_1}, ...)] = tr[eta(J^{s_1}(m_{F_1}), ...) rho_k]``.

    The classical side enumerates the common window under ``delta_k x q^{(x) width}``;
    the quantum side evolves each ``m_F`` with ``J``, evaluates ``eta`` by
    operator products and takes the trace against
    ``|k><k| (x) |upsilon^{(x) width}><upsilon^{(x) width}|``.
    """
    times = list(times) if times is not None else [0] * len(observables)
    if len(times) != len(observables):
        raise ValueError("one time per observable is required")
    ops = [automorphism_power(v, obs.operator(), s) for obs, s in zip(observables, times)]
    lo = min(o.lo for o in ops if o.width) if any(o.width for o in ops) else 1
    hi = max(o.hi for o in ops if o.width) if any(o.width for o in ops) else 0
    width = hi - lo + 1
    if width > max_width:
        raise WindowTooLarge(f"common window [{lo}, {hi}] wider than {max_width}")
    ops = [o.extend(lo, hi) for o in ops]
    n, g = spec.n, spec.gsize
    q = spec.q_at(1).weights
    # classical side
    evolved = [compose_with_alpha(spec.coupling, obs, s, (lo, hi))
               for obs, s in zip(observables, times)]
    classical = 0.0
    for cfg in itertools.product(range(g), repeat=width):
        p = float(np.prod(q[list(cfg)]))
        if p == 0:
            continue
        classical += p * eval_polynomial(eta, [e(k, cfg) for e in evolved])
    # quantum side
    psi = np.kron(np.eye(n)[k], upsilon.power(width))
    rho = np.outer(psi, psi.conj())
    quantum = np.trace(eval_polynomial_operators(eta, [o.matrix for o in ops]) @ rho)
    report = VerificationReport("E_k[eta(F)] = tr[eta(m_F) rho]")
    report.add("cqd2", abs(classical - quantum), tol, k=k, window=[lo, hi],
               classical=complex(classical), quantum=complex(quantum))
    return report
