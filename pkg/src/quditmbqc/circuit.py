"""Circuit intermediate representation: qudits, I/O sets, gate sequence.

Provides depth/size analysis, simulation against the statevector
oracle, serial/parallel composition, gate-set validation and lowering
to the universal two-gate set {CZ, v(theta)}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import DimensionContext, xi_p
from .sim import (
    Gate,
    GateName,
    StateVector,
    apply_gate,
    basis_state,
    gate_inverse_ops,
)

__all__ = [
    "Operation",
    "Circuit",
    "DepthReport",
    "depth_and_size",
    "simulate_circuit",
    "circuit_unitary",
    "compose_serial",
    "compose_parallel",
    "lower_to_guni",
    "validate_gate_set",
    "inverse_circuit",
    "circuit_to_json",
    "circuit_from_json",
]

ANCILLA_RESIDUE_TOL = 1e-8


@dataclass(frozen=True)
class Operation:
    gate: Gate
    sites: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))


@dataclass(frozen=True)
class Circuit:
    """A computation: qudit set, ordered input/output wires, op sequence.

    Non-input qudits are implicitly prepared in |0>.  When the circuit
    implements a unitary, ``inputs`` and ``outputs`` have equal length
    and the k-th output wire carries the image of the k-th input wire.
    """

    ctx: DimensionContext
    qudits: tuple[int, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    ops: tuple[Operation, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "qudits", tuple(self.qudits))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "ops", tuple(self.ops))
        qs = set(self.qudits)
        if len(qs) != len(self.qudits):
            raise ValueError("duplicate qudit identifiers")
        if not set(self.inputs) <= qs or not set(self.outputs) <= qs:
            raise ValueError("inputs and outputs must be subsets of the qudit set")
        for op in self.ops:
            if len(op.sites) != op.gate.arity:
                raise ValueError(f"{op.gate.name.value} expects {op.gate.arity} sites, got {len(op.sites)}")
            if len(set(op.sites)) != len(op.sites):
                raise ValueError("op sites must be distinct")
            if not set(op.sites) <= qs:
                raise ValueError(f"op touches unknown qudit(s) {set(op.sites) - qs}")
            op.gate.validate(self.ctx)

    @property
    def num_qudits(self) -> int:
        return len(self.qudits)

    def with_ops(self, ops) -> "Circuit":
        return replace(self, ops=tuple(ops))


@dataclass(frozen=True)
class DepthReport:
    depth: int
    size: int
    longest_path: tuple[int, ...]


def depth_and_size(c: Circuit) -> DepthReport:
    """Depth = longest chain of ops linked by qudit sharing, one pass.

    Size is the total number of qudit touches.  The witness is the op
    index sequence of one longest chain.
    """
    heights: dict[int, int] = {}
    pred: dict[int, int] = {}
    parents: list[int] = []
    size = 0
    best_idx, best = -1, 0
    for idx, op in enumerate(c.ops):
        level = 0
        parent = -1
        for s in op.sites:
            h = heights.get(s, 0)
            if h > level:
                level = h
                parent = pred.get(s, -1)
        level += 1
        parents.append(parent)
        for s in op.sites:
            heights[s] = level
            pred[s] = idx
        size += len(op.sites)
        if level > best:
            best, best_idx = level, idx
    path = []
    while best_idx >= 0:
        path.append(best_idx)
        best_idx = parents[best_idx]
    return DepthReport(best, size, tuple(reversed(path)))


def simulate_circuit(c: Circuit, input_state: StateVector | None = None) -> StateVector:
    """Run the circuit; returns the full state over all qudits.

    ``input_state`` must be defined on the input wires (any site
    order); missing qudits are prepared in |0>.
    """
    if input_state is None:
        input_state = basis_state(c.ctx, c.inputs, [0] * len(c.inputs))
    if set(input_state.sites) != set(c.inputs):
        raise ValueError("input state must be defined exactly on the circuit inputs")
    ancillas = [q for q in c.qudits if q not in set(c.inputs)]
    state = input_state
    if ancillas:
        state = state.extend(basis_state(c.ctx, ancillas, [0] * len(ancillas)))
    for op in c.ops:
        state = apply_gate(state, op.gate, op.sites)
    return state


def circuit_unitary(c: Circuit, residue_tol: float = ANCILLA_RESIDUE_TOL) -> np.ndarray:
    """The d^|I| unitary implemented on the input -> output wires.

    Simulates every basis input; ancillas must return to |0> (checked
    within ``residue_tol``), otherwise the circuit does not implement a
    unitary on its declared wires.
    """
    if len(c.inputs) != len(c.outputs):
        raise ValueError("|inputs| must equal |outputs| for a unitary")
    d = c.ctx.d
    dim = d ** len(c.inputs)
    cols = []
    ancillas = tuple(q for q in c.qudits if q not in set(c.outputs))
    for b in range(dim):
        digits = []
        x = b
        for _ in range(len(c.inputs)):
            x, r = divmod(x, d)
            digits.append(r)
        digits.reverse()
        final = simulate_circuit(c, basis_state(c.ctx, c.inputs, digits))
        final = final.with_sites_order(c.outputs + ancillas)
        tensor = final.amplitudes.reshape(dim, -1)
        col = tensor[:, 0]
        residue = 1.0 - float(np.linalg.norm(col)) ** 2
        if residue > residue_tol:
            raise ValueError(
                f"ancillas do not return to |0> (residue {residue:.3e}) on basis input {b}"
            )
        cols.append(col)
    return np.stack(cols, axis=1)


def _relabeled(c: Circuit, mapping: dict[int, int]) -> Circuit:
    return Circuit(
        c.ctx,
        tuple(mapping[q] for q in c.qudits),
        tuple(mapping[q] for q in c.inputs),
        tuple(mapping[q] for q in c.outputs),
        tuple(Operation(op.gate, tuple(mapping[s] for s in op.sites)) for op in c.ops),
    )


def compose_serial(c1: Circuit, c0: Circuit) -> Circuit:
    """Serial composite: run c0, then c1 with its inputs wired to c0's outputs.

    c1 is relabeled so its k-th input is c0's k-th output; its other
    qudits get fresh identifiers.  Depths satisfy depth <= depth0 +
    depth1 and sizes add.
    """
    if c0.ctx != c1.ctx:
        raise ValueError("circuits live in different dimensions")
    if len(c0.outputs) != len(c1.inputs):
        raise ValueError(f"cannot compose: {len(c0.outputs)} outputs vs {len(c1.inputs)} inputs")
    mapping = dict(zip(c1.inputs, c0.outputs))
    fresh = max(set(c0.qudits) | set(c1.qudits), default=0) + 1
    for q in c1.qudits:
        if q not in mapping:
            mapping[q] = fresh
            fresh += 1
    c1r = _relabeled(c1, mapping)
    qudits = c0.qudits + tuple(q for q in c1r.qudits if q not in set(c0.qudits))
    return Circuit(c0.ctx, qudits, c0.inputs, c1r.outputs, c0.ops + c1r.ops)


def compose_parallel(c1: Circuit, c0: Circuit) -> Circuit:
    """Parallel (tensor) composite of circuits on disjoint qudits."""
    if c0.ctx != c1.ctx:
        raise ValueError("circuits live in different dimensions")
    if set(c0.qudits) & set(c1.qudits):
        raise ValueError("parallel composition requires disjoint qudit sets")
    return Circuit(
        c0.ctx,
        c0.qudits + c1.qudits,
        c0.inputs + c1.inputs,
        c0.outputs + c1.outputs,
        c0.ops + c1.ops,
    )


def inverse_circuit(c: Circuit) -> Circuit:
    """Gate-by-gate inverse in reverse order, on the same wires."""
    ops: list[Operation] = []
    for op in reversed(c.ops):
        for g, sites in gate_inverse_ops(op.gate, op.sites, c.ctx.d):
            ops.append(Operation(g, sites))
    return Circuit(c.ctx, c.qudits, c.outputs, c.inputs, tuple(ops))


# -- gate-set validation ----------------------------------------------------

_UNBOUNDED = {GateName.FANOUT, GateName.MOD}


def validate_gate_set(c: Circuit, model: str = "standard", max_arity: int = 2) -> list[str]:
    """Check ops against a circuit model; returns diagnostics (empty = ok).

    ``standard`` admits only gates acting on at most ``max_arity``
    qudits.  ``fanout`` additionally admits the fan-out/modulo family
    at any arity.
    """
    if model not in ("standard", "fanout"):
        raise ValueError(f"unknown model {model!r}")
    problems = []
    for idx, op in enumerate(c.ops):
        if len(op.sites) <= max_arity:
            continue
        if model == "fanout" and op.gate.name in _UNBOUNDED:
            continue
        problems.append(
            f"op {idx}: {op.gate.name.value} on {len(op.sites)} qudits exceeds arity {max_arity}"
        )
    return problems


# -- lowering to the universal set -------------------------------------------


def _r_angles_for_z(d: int, k: int) -> tuple[float, ...]:
    return tuple(2.0 * math.pi * ((k * j) % d) / d for j in range(d))


def _phase_gate_angles(ctx: DimensionContext) -> tuple[float, ...]:
    return tuple(2.0 * math.pi * xi_p(ctx, j) / ctx.D for j in range(ctx.d))


def _lower_op(op: Operation, ctx: DimensionContext) -> list[Operation]:
    d = ctx.d
    g, s = op.gate, op.sites
    name = g.name
    zero = (0.0,) * d

    def v(theta, site):
        return Operation(Gate.v(theta), (site,))

    def f_power(site, power):
        return [v(zero, site) for _ in range(power % 4)]

    if name == GateName.CZ:
        return [Operation(Gate.cz(), s) for _ in range(g.k % d)]
    if name == GateName.V:
        return [op]
    if name == GateName.F:
        return [v(zero, s[0])]
    if name == GateName.FINV:
        return f_power(s[0], 3)
    if name == GateName.R:
        # R = F^3 . v(theta)
        return [v(g.theta, s[0])] + f_power(s[0], 3)
    if name == GateName.DIAG:
        return [v(g.angles, s[0])] + f_power(s[0], 3)
    if name == GateName.P:
        return [v(_phase_gate_angles(ctx), s[0])] + f_power(s[0], 3)
    if name == GateName.Z:
        if g.k % d == 0:
            return []
        return _lower_op(Operation(Gate.r(_r_angles_for_z(d, g.k)), s), ctx)
    if name == GateName.X:
        if g.k % d == 0:
            return []
        # X^k = F^dagger Z^k F
        inner = _lower_op(Operation(Gate.z(g.k), s), ctx)
        return [v(zero, s[0])] + inner + f_power(s[0], 3)
    if name == GateName.CX:
        # CX^k(i -> j) = F_j^dagger CZ^k F_j
        i, j = s
        out = [v(zero, j)]
        out += [Operation(Gate.cz(), (i, j)) for _ in range(g.k % d)]
        out += f_power(j, 3)
        return out
    if name == GateName.SWAP:
        # three CX-type gates plus the F^2 negation fix-up on the first site
        i, j = s
        seq = [
            Operation(Gate.cx(), (i, j)),
            Operation(Gate.cx(d - 1), (j, i)),
            Operation(Gate.cx(), (i, j)),
            Operation(Gate.f(), (i,)),
            Operation(Gate.f(), (i,)),
        ]
        out = []
        for sub in seq:
            out += _lower_op(sub, ctx)
        return out
    if name == GateName.FANOUT:
        control, targets = s[0], s[1:]
        out = []
        for cft, t in zip(g.coeffs, targets):
            out += _lower_op(Operation(Gate.cx(cft % d), (control, t)), ctx)
        return out
    if name == GateName.MOD:
        # MOD(v) = F^(x) . FANOUT(-v) . Finv^(x)
        out = [Operation(Gate.finv(), (q,)) for q in s]
        out.append(Operation(Gate.fanout(tuple((-cft) % d for cft in g.coeffs)), s))
        out += [Operation(Gate.f(), (q,)) for q in s]
        lowered = []
        for sub in out:
            lowered += _lower_op(sub, ctx)
        return lowered
    raise ValueError(f"cannot lower gate {name!r}")


def lower_to_guni(c: Circuit) -> Circuit:
    """Semantics-preserving rewrite onto the universal set {CZ, v(theta)}."""
    ops: list[Operation] = []
    for op in c.ops:
        ops += _lower_op(op, c.ctx)
    return c.with_ops(ops)


# -- JSON format --------------------------------------------------------------


def _gate_to_json(gate: Gate) -> dict:
    params: dict = {}
    if gate.name in (GateName.X, GateName.Z, GateName.CZ, GateName.CX):
        params["k"] = gate.k
    if gate.theta is not None:
        params["theta"] = list(gate.theta)
    if gate.coeffs is not None:
        params["v"] = list(gate.coeffs)
    if gate.angles is not None:
        params["angles"] = list(gate.angles)
    return params


def _gate_from_json(name: str, params: dict) -> Gate:
    name_enum = GateName(name)
    kwargs: dict = {}
    if "k" in params:
        kwargs["k"] = int(params["k"])
    if "theta" in params:
        kwargs["theta"] = tuple(float(t) for t in params["theta"])
    if "v" in params:
        kwargs["coeffs"] = tuple(int(x) for x in params["v"])
    if "angles" in params:
        kwargs["angles"] = tuple(float(a) for a in params["angles"])
    return Gate(name_enum, **kwargs)


def circuit_to_json(c: Circuit) -> str:
    doc = {
        "d": c.ctx.d,
        "qudits": list(c.qudits),
        "inputs": list(c.inputs),
        "outputs": list(c.outputs),
        "ops": [
            {"gate": op.gate.name.value, "params": _gate_to_json(op.gate), "sites": list(op.sites)}
            for op in c.ops
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def circuit_from_json(text: str) -> Circuit:
    doc = json.loads(text)
    ctx = DimensionContext.of(int(doc["d"]))
    ops = tuple(
        Operation(_gate_from_json(entry["gate"], entry.get("params", {})), tuple(entry["sites"]))
        for entry in doc["ops"]
    )
    return Circuit(
        ctx,
        tuple(doc["qudits"]),
        tuple(doc["inputs"]),
        tuple(doc["outputs"]),
        ops,
    )
