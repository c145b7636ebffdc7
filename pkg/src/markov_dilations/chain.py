"""The Markov chain carried by a standard dilation.

``X_0 = k`` and ``X_t = phi^E(X_{t-1}, Y_t)`` with independent inputs
``Y_t ~ q(t)``. Path laws are computed exactly by enumerating inputs over the
supports of the ``q(t)``; simulation uses one Philox stream per trajectory
(key = seed, counter = trajectory index), whose ``t``-th draw feeds step ``t``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decompose import ConvexDecomposition, map_from_label
from .dilation import DilationSpec, induced_transition
from .errors import EnumerationTooLarge, HorizonExceeded
from .model import MatrixSequence, as_sequence, evolve_observable
from .report import VerificationReport

ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class TrajectoryRecord:
    start: int
    inputs: tuple
    states: tuple

    @property
    def horizon(self) -> int:
        return len(self.inputs)

    def noise_counts(self, gsize: int) -> np.ndarray:
        """``N^g_t = sum_{s<=t} [Y_s == g]`` as a ``(T + 1, |G|)`` array."""
        out = np.zeros((self.horizon + 1, gsize), dtype=np.int64)
        for t, g in enumerate(self.inputs, start=1):
            out[t] = out[t - 1]
            out[t, g] += 1
        return out

    def to_json(self) -> dict:
        return {"k": self.start, "inputs": list(self.inputs), "states": list(self.states)}


def _uniforms(seed: int, n_traj: int, horizon: int) -> np.ndarray:
    """Row ``r`` holds draws ``r*T .. r*T + T - 1`` of one Philox stream keyed by the seed,
    so a trajectory never depends on how many others are drawn."""
    return np.random.Generator(np.random.Philox(key=seed)).random((n_traj, horizon))


def _inverse_cdf(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    supp = np.flatnonzero(weights > 0)
    cdf = np.cumsum(weights[supp])
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return supp[np.minimum(idx, len(supp) - 1)]


def simulate_arrays(spec: DilationSpec, k: int, horizon: int, seed: int,
                    n_traj: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized simulation; returns ``(inputs[n, T], states[n, T + 1])``."""
    if horizon > spec.horizon:
        raise HorizonExceeded(f"spec defines q(t) only for t <= {spec.horizon}")
    u = _uniforms(int(seed) % 2**64, n_traj, horizon)
    inputs = np.empty((n_traj, horizon), dtype=np.int64)
    states = np.empty((n_traj, horizon + 1), dtype=np.int64)
    states[:, 0] = k
    phi_e = spec.coupling.phi_e
    for t in range(1, horizon + 1):
        inputs[:, t - 1] = _inverse_cdf(spec.q_at(t).weights, u[:, t - 1])
        states[:, t] = phi_e[states[:, t - 1], inputs[:, t - 1]]
    return inputs, states


def simulate(spec: DilationSpec, k: int, horizon: int, seed: int,
             n_traj: int = 1) -> list[TrajectoryRecord]:
    inputs, states = simulate_arrays(spec, k, horizon, seed, n_traj)
    return [TrajectoryRecord(k, tuple(y), tuple(x))
            for y, x in zip(inputs.tolist(), states.tolist())]


class PathLaw:
    """Exact law of ``(X_1, ..., X_T)`` under ``P_k``."""

    def __init__(self, start: int, horizon: int, n: int, table: dict):
        self.start, self.horizon, self.n = start, horizon, n
        self.table = table

    def __getitem__(self, path) -> float:
        return self.table.get(tuple(path), 0.0)

    def __iter__(self):
        return iter(self.table.items())

    def __len__(self):
        return len(self.table)

    def total(self) -> float:
        return math.fsum(self.table.values())

    def marginal(self, t: int) -> np.ndarray:
        """Law of ``X_t``."""
        out = np.zeros(self.n)
        if t == 0:
            out[self.start] = 1.0
            return out
        for path, p in self.table.items():
            out[path[t - 1]] += p
        return out

    def prefix_law(self, t: int) -> dict:
        out: dict = {}
        for path, p in self.table.items():
            key = path[:t]
            out[key] = out.get(key, 0.0) + p
        return out

    def max_abs_difference(self, other: "PathLaw") -> float:
        keys = set(self.table) | set(other.table)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)


def _check_enumeration(sizes: Sequence[int], cap: int) -> None:
    count = math.prod(sizes)
    if count > cap:
        raise EnumerationTooLarge(f"{count} input sequences exceed cap {cap}")


def exact_path_law(spec: DilationSpec, k: int, horizon: int,
                   cap: int = ENUMERATION_CAP) -> PathLaw:
    """Path probabilities from enumerating input sequences over the supports of q(t).

    Sequences leading to the same state path are accumulated as they are
    enumerated, one step at a time.
    """
    laws = [spec.q_at(t) for t in range(1, horizon + 1)]
    _check_enumeration([len(q.support()) for q in laws], cap)
    phi_e = spec.coupling.phi_e
    table: dict = {(): 1.0}
    for q in laws:
        supp = q.support()
        nxt: dict = {}
        for path, p in table.items():
            x = path[-1] if path else k
            for g in supp:
                key = path + (int(phi_e[x, g]),)
                nxt[key] = nxt.get(key, 0.0) + p * q.weights[g]
        table = nxt
    return PathLaw(k, horizon, spec.n, table)


def automaton_path_law(decompositions: Sequence[ConvexDecomposition], k: int,
                       horizon: int, cap: int = ENUMERATION_CAP) -> PathLaw:
    """Path law of ``X_t = beta_{l_t}(X_{t-1})`` with independent ``l_t ~ p(t)``.

    The last decomposition is reused past the end of the list.
    """
    decs = [decompositions[min(t, len(decompositions) - 1)] for t in range(horizon)]
    terms = [[(w, map_from_label(l, d.n)) for w, l in d if w > 0] for d in decs]
    _check_enumeration([len(t) for t in terms], cap)
    table: dict = {}
    for choice in itertools.product(*terms):
        x, p, path = k, 1.0, []
        for w, beta in choice:
            x = beta(x)
            p *= w
            path.append(x)
        key = tuple(path)
        table[key] = table.get(key, 0.0) + p
    return PathLaw(k, horizon, decs[0].n, table)


def verify_markov(spec: DilationSpec, target, horizon: int, tol: float = 1e-10,
                  cap: int = ENUMERATION_CAP) -> VerificationReport:
    """Compare exact conditional transition probabilities with ``target``.

    For every start ``k``, every ``t < horizon`` and every positive-probability
    prefix ``(X_1..X_t)``, ``P(X_{t+1} = j | prefix)`` must equal
    ``P(t+1)[X_t, j]``. The one-step formula ``sum_g q_g(t) [phi^E(i,g)=j]`` is
    also compared with ``P(t)``.
    """
    seq = as_sequence(target)
    if horizon > len(seq) and not seq.homogeneous:
        raise HorizonExceeded(f"target covers t <= {len(seq)}")
    mat = (lambda t: seq[min(t, len(seq))]) if seq.homogeneous else (lambda t: seq[t])
    report = VerificationReport("markov property")
    for t in range(1, horizon + 1):
        dev = np.abs(induced_transition(spec.coupling, spec.q_at(t)).entries - mat(t).entries)
        report.add("transition_formula", dev.max(), tol, t=t)
    worst = [0.0] * horizon
    where: list = [None] * horizon
    for k in range(spec.n):
        law = exact_path_law(spec, k, horizon, cap)
        for t in range(horizon):
            prefixes = law.prefix_law(t)
            extended = law.prefix_law(t + 1)
            p_next = mat(t + 1).entries
            for prefix, mass in prefixes.items():
                if mass <= 0:
                    continue
                x = prefix[-1] if prefix else k
                for j in range(spec.n):
                    cond = extended.get(prefix + (j,), 0.0) / mass
                    d = abs(cond - p_next[x, j])
                    if where[t] is None or d > worst[t]:
                        worst[t], where[t] = d, {"k": k, "prefix": list(prefix), "j": j}
    for t in range(horizon):
        report.add("conditional_transition", worst[t], tol, t=t + 1, location=where[t])
    return report


def marginal_consistency(spec: DilationSpec, target, f, t: int, k: int,
                         cap: int = ENUMERATION_CAP) -> tuple[complex, complex, float]:
    """``((P(1)...P(t) f)(k), E_k[f(X_t)], |difference|)``."""
    seq = as_sequence(target)
    if seq.homogeneous and t > len(seq):
        seq = MatrixSequence.constant(seq[1], t)
    f = np.asarray(f, dtype=complex)
    lhs = complex(evolve_observable(seq, f, t)[k])
    if t == 0:
        rhs = complex(f[k])
    else:
        law = exact_path_law(spec, k, t, cap)
        rhs = complex(sum(p * f[path[-1]] for path, p in law))
    return lhs, rhs, abs(lhs - rhs)


def stochastic_equation_residual(spec: DilationSpec, record: TrajectoryRecord, f) -> float:
    """Largest pathwise gap in ``f(X_t) = sum_g f(phi^E(X_{t-1}, g)) [Y_t = g]``."""
    f = np.asarray(f, dtype=complex)
    phi_e = spec.coupling.phi_e
    worst = 0.0
    for t in range(1, record.horizon + 1):
        x_prev = record.states[t - 1]
        increments = np.zeros(spec.gsize)
        increments[record.inputs[t - 1]] = 1.0
        rhs = np.sum(f[phi_e[x_prev]] * increments)
        worst = max(worst, abs(f[record.states[t]] - rhs))
    return worst


def path_frequency_check(states: np.ndarray, law: PathLaw,
                         n_sigma: float = 4.0) -> VerificationReport:
    """Compare empirical path frequencies with exact probabilities.

    ``states`` is the ``(n, T + 1)`` array from :func:`simulate_arrays`.
    Each path is flagged when it lies more than ``n_sigma`` binomial standard
    errors from its exact probability.
    """
    n = len(states)
    paths, counts = np.unique(states[:, 1:], axis=0, return_counts=True)
    observed = {tuple(p): c / n for p, c in zip(paths.tolist(), counts)}
    report = VerificationReport("monte carlo path frequencies")
    for path in sorted(set(law.table) | set(observed)):
        p = law[path]
        freq = observed.get(path, 0.0)
        se = math.sqrt(max(p * (1 - p), 0.0) / n)
        if se == 0:
            report.add("path_frequency", abs(freq - p), 0.0, path=list(path), p=p, freq=freq)
        else:
            report.add("path_frequency", abs(freq - p), n_sigma * se, path=list(path), p=p,
                       freq=freq, z=(freq - p) / se)
    return report
