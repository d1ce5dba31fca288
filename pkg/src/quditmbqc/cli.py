"""Command-line front end.

Subcommands: ``gen`` (example instances), ``convert`` (circuit/pattern
compilers), ``rewrite`` (standardisation passes), ``run`` (simulate),
``verify`` (equivalence of two artifacts via all-basis plus
random-state simulation) and ``analyze`` (depth/size/entanglement
reports and scaling sweeps).

Exit codes: 0 success, 1 verification failure, 2 malformed input.
All randomness flows from the single --seed value; measurement k of a
run draws from the stream spawned with key (k,) off that seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import DimensionContext
from .circuit import (
    Circuit,
    circuit_from_json,
    circuit_to_json,
    depth_and_size,
    lower_to_guni,
    simulate_circuit,
)
from .convert import (
    circuit_to_pattern_cluster,
    circuit_to_pattern_standard,
    clifford_constant_depth,
    pattern_to_circuit_coherent,
    pattern_to_fanout_circuit,
)
from .generate import (
    cascade_circuit,
    fanout_gate_circuit,
    random_clifford_circuit,
    random_guni_circuit,
)
from .pattern import (
    Pattern,
    entanglement_depth,
    entanglement_graph,
    pattern_depth_and_size,
    pattern_from_json,
    pattern_to_json,
    run,
    run_branches,
)
from .rewrite import completely_standardise, pauli_simplify, signal_shift, standardise
from .sim import StateVector, basis_state, random_state

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2

DEFAULT_TOL = 1e-9
BRANCH_ENUMERATION_CAP = 256


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    mode: str = "sampled"
    tolerance: float = DEFAULT_TOL
    fmt: str = "json"


# -- artifact I/O -------------------------------------------------------------


def load_artifact(path: str) -> Circuit | Pattern:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        if "ops" in doc:
            return circuit_from_json(text)
        if "commands" in doc:
            return pattern_from_json(text)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    raise InputError(f"{path}: neither a circuit ('ops') nor a pattern ('commands')")


def dump_artifact(artifact: Circuit | Pattern, out: str | None) -> None:
    text = circuit_to_json(artifact) if isinstance(artifact, Circuit) else pattern_to_json(artifact)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def emit(doc: dict, cfg: RunConfig, out: str | None) -> None:
    if cfg.fmt == "json":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = _as_table(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _as_table(doc: dict, prefix: str = "") -> str:
    lines = []
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.append(f"{prefix}{key}:")
            lines.append(_as_table(value, prefix + "  "))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            keys = list(value[0].keys())
            lines.append(f"{prefix}{key}:")
            lines.append(prefix + "  " + "  ".join(f"{k:>10}" for k in keys))
            for row in value:
                lines.append(prefix + "  " + "  ".join(f"{row.get(k, ''):>10}" for k in keys))
        else:
            lines.append(f"{prefix}{key}: {value}")
    return "\n".join(lines) + "\n"


# -- equivalence verification ---------------------------------------------------


def _artifact_io(a: Circuit | Pattern) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return (a.inputs, a.outputs)


def _output_states(
    artifact: Circuit | Pattern, input_state: StateVector, seed: int
) -> list[StateVector]:
    """Representative output states on O (subnormalized for circuits whose
    ancillas fail to disentangle, so infidelity surfaces naturally)."""
    if isinstance(artifact, Circuit):
        final = simulate_circuit(artifact, input_state)
        ancillas = tuple(q for q in artifact.qudits if q not in set(artifact.outputs))
        final = final.with_sites_order(artifact.outputs + ancillas)
        d = artifact.ctx.d
        block = final.amplitudes.reshape(d ** len(artifact.outputs), -1)[:, 0]
        return [StateVector(artifact.ctx, artifact.outputs, block)]
    measured = len(artifact.measured_qudits())
    if artifact.ctx.d**measured <= BRANCH_ENUMERATION_CAP:
        branches = run_branches(artifact, input_state, lazy=True)
        return [b.state for b in branches]
    states = []
    for k in range(4):
        res = run(artifact, input_state, mode="sampled", seed=seed + k, lazy=True)
        states.append(res.state)
    return states


def verify_equivalent(
    a: Circuit | Pattern, b: Circuit | Pattern, cfg: RunConfig, random_inputs: int = 4
) -> float:
    """Max infidelity over all basis inputs plus random input states."""
    in_a, _ = _artifact_io(a)
    in_b, _ = _artifact_io(b)
    if len(in_a) != len(in_b):
        raise InputError(f"input arities differ: {len(in_a)} vs {len(in_b)}")
    if a.ctx.d != b.ctx.d:
        raise InputError(f"dimensions differ: {a.ctx.d} vs {b.ctx.d}")
    d = a.ctx.d
    n = len(in_a)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    inputs: list[np.ndarray] = []
    for idx in range(d**n):
        digits = []
        x = idx
        for _ in range(n):
            x, r = divmod(x, d)
            digits.append(r)
        state = basis_state(a.ctx, range(n), digits[::-1])
        inputs.append(state.amplitudes)
    for _ in range(random_inputs):
        inputs.append(random_state(a.ctx, range(n), rng).amplitudes)
    for amps in inputs:
        sa = _output_states(a, StateVector(a.ctx, in_a, amps.copy()), cfg.seed)
        sb = _output_states(b, StateVector(b.ctx, in_b, amps.copy()), cfg.seed)
        # compare by output position: relabel b's outputs onto a's
        relabel = dict(zip(b.outputs, a.outputs))
        for out_a in sa:
            ref = out_a.with_sites_order(a.outputs).amplitudes
            for out_b in sb:
                renamed = StateVector(a.ctx, tuple(relabel[s] for s in out_b.sites), out_b.amplitudes)
                fid = abs(np.vdot(ref, renamed.with_sites_order(a.outputs).amplitudes))
                worst = max(worst, 1.0 - float(fid))
    return worst


# -- subcommand handlers ---------------------------------------------------------


def _cmd_gen(args) -> int:
    ctx = DimensionContext.of(args.d)
    if args.family == "guni":
        artifact = random_guni_circuit(ctx, args.n, args.gates, args.seed)
    elif args.family == "clifford":
        artifact = random_clifford_circuit(ctx, args.n, args.gates, args.seed)
    elif args.family == "cascade":
        artifact = cascade_circuit(ctx, args.n)
    elif args.family == "fanout":
        artifact = fanout_gate_circuit(ctx, args.n)
    else:
        raise InputError(f"unknown family {args.family}")
    dump_artifact(artifact, args.out)
    return EXIT_OK


def _cmd_convert(args) -> int:
    artifact = load_artifact(args.input)
    cfg = RunConfig(seed=args.seed, fmt=args.format)
    report: dict = {}
    if args.kind == "def7":
        if not isinstance(artifact, Circuit):
            raise InputError("def7 expects a circuit")
        result = circuit_to_pattern_standard(lower_to_guni(artifact))
    elif args.kind == "def8":
        if not isinstance(artifact, Circuit):
            raise InputError("def8 expects a circuit")
        result = circuit_to_pattern_cluster(artifact)
    elif args.kind == "def9":
        if not isinstance(artifact, Pattern):
            raise InputError("def9 expects a pattern")
        result = pattern_to_circuit_coherent(artifact)
    elif args.kind == "fanout-compile":
        if not isinstance(artifact, Pattern):
            raise InputError("fanout-compile expects a pattern")
        compiled = pattern_to_fanout_circuit(artifact)
        result = compiled.circuit
        report = {
            "pattern": {"depth": compiled.pattern_report.depth, "size": compiled.pattern_report.size},
            "circuit": {"depth": compiled.circuit_report.depth, "size": compiled.circuit_report.size},
            "ancillas_added": len(result.qudits) - len(artifact.qudits),
        }
    elif args.kind == "clifford-const":
        if not isinstance(artifact, Circuit):
            raise InputError("clifford-const expects a circuit")
        if args.target == "pattern":
            result = clifford_constant_depth(artifact, "pattern")
        else:
            result = clifford_constant_depth(artifact, "fanout_circuit").circuit
    else:
        raise InputError(f"unknown conversion {args.kind}")
    dump_artifact(result, args.out)
    if args.report:
        emit(report or _analysis_doc(result), cfg, args.report)
    return EXIT_OK


def _cmd_rewrite(args) -> int:
    artifact = load_artifact(args.input)
    if not isinstance(artifact, Pattern):
        raise InputError("rewrite passes operate on patterns")
    passes = {
        "standardise": standardise,
        "pauli": pauli_simplify,
        "shift": signal_shift,
        "complete": completely_standardise,
    }
    result = passes[args.pass_name](artifact)
    dump_artifact(result, args.out)
    return EXIT_OK


def _cmd_run(args) -> int:
    artifact = load_artifact(args.input)
    cfg = RunConfig(seed=args.seed, mode=args.mode, fmt=args.format)
    if isinstance(artifact, Circuit):
        final = simulate_circuit(artifact)
        doc = {
            "kind": "circuit-run",
            "sites": list(final.sites),
            "amplitudes": [[float(a.real), float(a.imag)] for a in final.amplitudes],
        }
        emit(doc, cfg, args.out)
        return EXIT_OK
    if args.mode == "all-branches":
        branches = run_branches(artifact, lazy=True)
        doc = {
            "kind": "pattern-branches",
            "branches": [
                {
                    "outcomes": {str(k): v for k, v in sorted(b.outcomes.items())},
                    "probability": b.probability,
                }
                for b in branches
            ],
        }
        emit(doc, cfg, args.out)
        return EXIT_OK
    forced = None
    if args.mode == "forced":
        if not args.outcomes:
            raise InputError("forced mode requires --outcomes JSON, e.g. '{\"1\": 0}'")
        forced = {int(k): int(v) for k, v in json.loads(args.outcomes).items()}
    res = run(artifact, mode=args.mode, seed=args.seed, forced_outcomes=forced, lazy=True)
    doc = {
        "kind": "pattern-run",
        "outcomes": {str(k): v for k, v in sorted(res.outcomes.items())},
        "probability": res.probability,
        "sites": list(res.state.sites),
        "amplitudes": [[float(a.real), float(a.imag)] for a in res.state.amplitudes],
    }
    emit(doc, cfg, args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    a = load_artifact(args.first)
    b = load_artifact(args.second)
    cfg = RunConfig(seed=args.seed, tolerance=args.tol, fmt=args.format)
    worst = verify_equivalent(a, b, cfg)
    doc = {"max_infidelity": worst, "tolerance": cfg.tolerance, "equivalent": worst <= cfg.tolerance}
    emit(doc, cfg, args.out)
    return EXIT_OK if worst <= cfg.tolerance else EXIT_VERIFY_FAILED


def _analysis_doc(artifact: Circuit | Pattern) -> dict:
    if isinstance(artifact, Circuit):
        rep = depth_and_size(artifact)
        return {
            "kind": "circuit",
            "qudits": len(artifact.qudits),
            "depth": rep.depth,
            "size": rep.size,
        }
    rep = pattern_depth_and_size(artifact)
    graph = entanglement_graph(artifact)
    ent = entanglement_depth(graph)
    return {
        "kind": "pattern",
        "qudits": len(artifact.qudits),
        "depth": rep.depth,
        "size": rep.size,
        "entanglement": {
            "max_degree": ent.lower_bound,
            "achieved_depth": ent.achieved,
            "exact": ent.exact,
            "within_degree_plus_one": ent.within_degree_lemma,
        },
    }


def _cmd_analyze(args) -> int:
    cfg = RunConfig(seed=args.seed, fmt=args.format)
    if args.sweep:
        rng_text = args.sweep.removeprefix("n=").replace("..", ":")
        try:
            lo, hi = (int(x) for x in rng_text.split(":"))
        except ValueError:
            raise InputError(f"bad sweep range {args.sweep!r}; use LO:HI or n=LO..HI") from None
        rows = []
        for n in range(lo, hi + 1):
            ctx = DimensionContext.of(args.d)
            circuit = random_clifford_circuit(ctx, n, args.gates_per_n * n, args.seed + n)
            pat = clifford_constant_depth(circuit, "pattern")
            compiled = clifford_constant_depth(circuit, "fanout_circuit")
            prep = pattern_depth_and_size(pat)
            rows.append(
                {
                    "n": n,
                    "pattern_depth": prep.depth,
                    "pattern_size": prep.size,
                    "circuit_depth": compiled.circuit_report.depth,
                    "circuit_size": compiled.circuit_report.size,
                }
            )
        emit({"kind": "clifford-const-sweep", "d": args.d, "rows": rows}, cfg, args.out)
        return EXIT_OK
    if not args.input:
        raise InputError("analyze needs --in FILE or --sweep LO:HI")
    artifact = load_artifact(args.input)
    emit(_analysis_doc(artifact), cfg, args.out)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quditmbqc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an example circuit")
    p.add_argument("family", choices=["guni", "clifford", "cascade", "fanout"])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--gates", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("convert", help="convert between circuits and patterns")
    p.add_argument("kind", choices=["def7", "def8", "def9", "fanout-compile", "clifford-const"])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--target", choices=["pattern", "fanout-circuit"], default="pattern")
    p.add_argument("--report", default=None, help="also write a depth/size report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("rewrite", help="run standardisation passes on a pattern")
    p.add_argument("pass_name", choices=["standardise", "pauli", "shift", "complete"])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_rewrite)

    p = sub.add_parser("run", help="simulate a circuit or pattern")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=["sampled", "forced", "all-branches"], default="sampled")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outcomes", default=None, help="forced outcomes as JSON {qudit: dit}")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="check two artifacts for equivalence")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("analyze", help="depth/size/entanglement report or scaling sweep")
    p.add_argument("--in", dest="input", default=None)
    p.add_argument("--sweep", default=None, help="n range LO:HI for a clifford-const sweep")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--gates-per-n", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=_cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
