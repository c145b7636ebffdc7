"""Command-line front end.

Inputs are JSON files holding a matrix ``{"n", "rows"}``, a sequence
``{"n", "matrices", "homogeneous"}`` or a dilation spec as written by
``dilate`` (which embeds its target under ``"target"``).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import chain, dilation, quantum
from .decompose import decompose_full, decompose_greedy
from .dilation import MINIMAL, UNIVERSAL, DilationSpec, GlobalState
from .errors import BadInput, DilationError
from .model import MatrixSequence, validate_stochastic
from .report import VerificationReport

DEFAULT_TOL = 1e-10


def load_input(path: str):
    """Return ``(target, spec)``; ``spec`` is None unless the file holds a dilation."""
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BadInput(f"{path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise BadInput(f"{path}: top-level JSON value must be an object")
    try:
        if "coupling" in obj:
            spec = DilationSpec.from_json(obj)
            if "target" not in obj:
                raise BadInput(f"{path}: dilation spec lacks a 'target' field")
            return _parse_target(obj["target"], path), spec
        return _parse_target(obj, path), None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, BadInput):
            raise
        raise BadInput(f"{path}: {type(exc).__name__}: {exc}") from exc


def _parse_target(obj: dict, path: str) -> MatrixSequence:
    if "rows" in obj:
        m = validate_stochastic(obj["rows"])
        if "n" in obj and int(obj["n"]) != m.n:
            raise BadInput(f"{path}: 'n' = {obj['n']} but matrix is {m.n}x{m.n}")
        return MatrixSequence([m])
    if "matrices" in obj:
        seq = MatrixSequence(validate_stochastic(m) for m in obj["matrices"])
        if "n" in obj and int(obj["n"]) != seq.n:
            raise BadInput(f"{path}: 'n' = {obj['n']} but matrices are {seq.n}x{seq.n}")
        return seq
    raise BadInput(f"{path}: expected 'rows', 'matrices' or a dilation spec")


def _spec_for(target: MatrixSequence, spec: DilationSpec | None, mode: str) -> DilationSpec:
    return spec if spec is not None else dilation.dilate(target, mode)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _dumps(obj, pretty: bool) -> str:
    return json.dumps(obj, indent=2 if pretty else None, sort_keys=True)


def cmd_decompose(args) -> int:
    target, _ = load_input(args.input)
    decomp = decompose_full if args.method == "full" else decompose_greedy
    decs = [decomp(m).to_json() for m in target]
    _emit(_dumps(decs[0] if len(decs) == 1 else decs, args.pretty), args.out)
    return 0


def cmd_dilate(args) -> int:
    target, _ = load_input(args.input)
    spec = dilation.dilate(target, args.mode)
    obj = spec.to_json()
    obj["target"] = target.to_json()
    _emit(_dumps(obj, args.pretty), args.out)
    return 0


def cmd_simulate(args) -> int:
    target, spec = load_input(args.input)
    spec = _spec_for(target, spec, args.mode)
    records = chain.simulate(spec, args.start, args.horizon, args.seed, args.trajectories)
    _emit("\n".join(json.dumps(r.to_json()) for r in records), args.out)
    return 0


def _sample_states(spec: DilationSpec, rng, count: int, lo: int, hi: int) -> list[GlobalState]:
    return [GlobalState(int(rng.integers(spec.n)), lo,
                        tuple(int(v) for v in rng.integers(spec.gsize, size=hi - lo + 1)))
            for _ in range(count)]


def classical_report(target: MatrixSequence, spec: DilationSpec, horizon: int, tol: float,
                     seed: int = 0, trajectories: int = 0, samples: int = 200) -> VerificationReport:
    report = VerificationReport("verify-classical")
    report.extend(chain.verify_markov(spec, target, horizon, tol))
    seq = target if len(target) >= horizon or not target.homogeneous else \
        MatrixSequence.constant(target[1], horizon)
    worst = 0.0
    for t in range(horizon + 1):
        for k in range(spec.n):
            for j in range(spec.n):
                f = np.zeros(spec.n)
                f[j] = 1.0
                worst = max(worst, chain.marginal_consistency(spec, seq, f, t, k)[2])
    report.add("marginal_consistency", worst, tol)

    rng = np.random.default_rng(seed)
    h = max(horizon, 1)
    states = _sample_states(spec, rng, samples, -2 * h - 3, 2 * h + 3)
    mismatches = {"alpha_round_trip": 0, "group_law": 0, "env_component": 0,
                  "cocycle_vs_alpha": 0, "cocycle_property": 0}
    for z in states:
        for steps in range(1, h + 1):
            fwd = dilation.alpha_apply(spec, z, steps)
            mismatches["alpha_round_trip"] += dilation.alpha_apply(spec, fwd, -steps) != z
            for n in range(-3, 4):
                mismatches["env_component"] += (
                    dilation.env_component(spec, z, n, steps) != fwd.env(n))
            cocycle = dilation.cocycle_apply(spec, z, steps)
            mismatches["cocycle_vs_alpha"] += cocycle != dilation.shift(fwd, -steps)
        for s in range(-2, 3):
            for t in range(-2, 3):
                lhs = dilation.alpha_apply(spec, z, s + t)
                rhs = dilation.alpha_apply(spec, dilation.alpha_apply(spec, z, t), s)
                mismatches["group_law"] += lhs != rhs
        for t in (1, 2):
            for s in (1, 2):
                lhs = dilation.cocycle_apply(spec, z, t + s)
                mid = dilation.shift(dilation.cocycle_apply(spec, z, t), t)
                rhs = dilation.shift(dilation.cocycle_apply(spec, mid, s), -t)
                mismatches["cocycle_property"] += (lhs.system, lhs.window()) != (
                    rhs.system, rhs.window())
    for name, count in mismatches.items():
        report.add(name, float(count), 0.0, samples=samples)

    if trajectories:
        inputs, states_arr = chain.simulate_arrays(spec, 0, horizon, seed, trajectories)
        f = np.arange(spec.n) + 1j
        resid = max(chain.stochastic_equation_residual(
            spec, chain.TrajectoryRecord(0, tuple(y), tuple(x)), f)
            for y, x in zip(inputs[:1000].tolist(), states_arr[:1000].tolist()))
        report.add("stochastic_equation", resid, tol)
        law = chain.exact_path_law(spec, 0, horizon)
        mc = chain.path_frequency_check(states_arr, law)
        worst = max(c.max_abs_deviation / c.tolerance if c.tolerance else
                    (0.0 if c.passed else float("inf")) for c in mc)
        report.add("monte_carlo_4sigma", worst, 1.0, trajectories=trajectories,
                   note="deviation in units of 4 standard errors")
    return report


def _random_matrix(rng, n: int, hermitian: bool) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2 if hermitian else a


def quantum_report(target: MatrixSequence, spec: DilationSpec, horizon: int, tol: float,
                   seed: int = 0, samples: int = 20) -> VerificationReport:
    if not target.homogeneous:
        raise BadInput("verify-quantum handles homogeneous chains only")
    p = target[1]
    report = VerificationReport("verify-quantum")
    v = quantum.build_unitary(spec.coupling)
    ups = quantum.build_env_vector(spec.q_at(1))
    try:
        channel = quantum.kraus_channel(v, ups)
    except DilationError as exc:
        report.add("kraus_channel", float("nan"), tol, passed=False, error=str(exc))
        return report
    report.extend(quantum.verify_cms_extension(channel, p, tol))
    rng = np.random.default_rng(seed)
    one_step = 0.0
    for s in range(samples):
        a = _random_matrix(rng, spec.n, hermitian=s % 2 == 0)
        e = quantum.conditional_expectation(v.conjugate(a), ups, spec.n)
        one_step = max(one_step, quantum.max_abs(e - channel(a)))
    report.add("one_step_dilation", one_step, tol, samples=samples)
    for t in range(1, horizon + 1):
        if spec.n * spec.gsize**t > quantum.DENSE_CAP:
            break
        dev = max(quantum.flow(v, ups, _random_matrix(rng, spec.n, s % 2 == 0), t)[1]
                  for s in range(max(samples // 4, 1)))
        report.add("flow_dilation", dev, max(tol, 1e-9), t=t)
    width = 1 if spec.n * spec.gsize**3 > 1000 else 2
    lo, hi = -width + 1, 0
    family = [quantum.DiagonalObservable.indicator(spec.n, spec.gsize, lo, hi, i,
                                                   dict(zip(range(lo, hi + 1), cfg)))
              for i, cfg in quantum._basis_states(spec.n, spec.gsize, lo, hi)]
    for t in (1, 2):
        report.extend(quantum.check_cqd1(spec.coupling, v, family, t, tol))
    worst = 0.0
    for _ in range(samples):
        obs = [family[int(rng.integers(len(family)))] for _ in range(2)]
        eta = _random_polynomial(rng, 2, 3)
        times = [int(x) for x in rng.integers(0, 2, size=2)]
        worst = max(worst, quantum.check_cqd2(spec, v, ups, int(rng.integers(spec.n)), obs,
                                              eta, times, tol).checks[0].max_abs_deviation)
    report.add("cqd2", worst, tol, samples=samples)
    dec = spec.decompositions[0] if spec.decompositions else spec.stratum_decomposition(1)
    if dec is not None:
        dev = quantum.channel_distance(quantum.davis_channel(dec), channel)
        report.add("davis_equivalence", dev, tol)
    return report


def _random_polynomial(rng, nvars: int, degree: int) -> dict:
    eta = {}
    for _ in range(int(rng.integers(1, 5))):
        exps = [0] * nvars
        for _ in range(int(rng.integers(0, degree + 1))):
            exps[int(rng.integers(nvars))] += 1
        coef = complex(rng.normal(), rng.normal())
        eta[tuple(exps)] = eta.get(tuple(exps), 0) + coef
    return eta


def _verify(args, builder, default_mode: str) -> int:
    target, spec = load_input(args.input)
    spec = _spec_for(target, spec, args.mode or default_mode)
    kwargs = {"seed": args.seed}
    if builder is classical_report:
        kwargs["trajectories"] = args.trajectories
    report = builder(target, spec, args.horizon, args.tol, **kwargs)
    _emit(report.to_json(pretty=args.pretty, timestamp=not args.no_timestamp), args.out)
    if args.pretty:
        sys.stderr.write(report.summary() + "\n")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markov-dilations", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode_default=None):
        p.add_argument("--input", required=True)
        p.add_argument("--out")
        p.add_argument("--pretty", action="store_true")
        p.add_argument("--mode", choices=[UNIVERSAL, MINIMAL], default=mode_default)
        return p

    p = common(sub.add_parser("decompose", help="convex decomposition into deterministic maps"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--greedy", dest="method", action="store_const", const="greedy")
    g.add_argument("--full", dest="method", action="store_const", const="full")
    p.set_defaults(method="greedy", func=cmd_decompose)

    p = common(sub.add_parser("dilate", help="emit a dilation spec"), UNIVERSAL)
    p.set_defaults(func=cmd_dilate)

    p = common(sub.add_parser("simulate", help="simulate trajectories (JSON lines)"), UNIVERSAL)
    p.add_argument("--horizon", type=_nonneg, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trajectories", type=_nonneg, default=10)
    p.add_argument("--start", type=_nonneg, default=0)
    p.set_defaults(func=cmd_simulate)

    for name, builder, default_mode in (("verify-classical", classical_report, UNIVERSAL),
                                        ("verify-quantum", quantum_report, MINIMAL)):
        p = common(sub.add_parser(name), None)
        p.add_argument("--horizon", type=_nonneg, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=_positive, default=DEFAULT_TOL)
        p.add_argument("--trajectories", type=_nonneg, default=0)
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the timestamp so identical runs give identical bytes")
        p.set_defaults(func=lambda a, b=builder, m=default_mode: _verify(a, b, m))
    return parser


def _nonneg(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DilationError as exc:
        report = VerificationReport(args.command)
        report.add("error", float("nan"), 0.0, passed=False, error=f"{type(exc).__name__}: {exc}")
        _emit(report.to_json(pretty=getattr(args, "pretty", False),
                             timestamp=not getattr(args, "no_timestamp", False)),
              getattr(args, "out", None))
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
