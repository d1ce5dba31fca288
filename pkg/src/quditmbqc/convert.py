"""Bidirectional compilers between circuits and patterns, plus the
constant- and low-depth circuit builders for the unbounded fan-out model.

Circuit -> pattern goes through the two basic patterns (one for CZ, one
for v(theta)); pattern -> circuit goes through the coherent replacement
of classical control by controlled gates, optionally parallelized into
constant-depth blocks with fan-out machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import DimensionContext
from .circuit import (
    Circuit,
    DepthReport,
    Operation,
    depth_and_size,
    inverse_circuit,
    lower_to_guni,
)
from .pattern import (
    CorrectX,
    CorrectZ,
    Entangle,
    Measure,
    Pattern,
    Signal,
    entanglement_depth,
    entanglement_graph,
    pattern_depth_and_size,
    require_valid,
)
from .rewrite import completely_standardise, is_completely_standard
from .sim import Gate, GateName, gate_matrix

__all__ = [
    "basic_cz_pattern",
    "basic_v_pattern",
    "circuit_to_pattern_standard",
    "circuit_to_pattern_cluster",
    "insert_fourier_breaks",
    "pattern_to_circuit_coherent",
    "pattern_to_fanout_circuit",
    "FanoutCompileResult",
    "build_fanout",
    "build_generalized",
    "parallelize_commuting",
    "controlled_pauli_constant_depth",
    "clifford_constant_depth",
    "CxMatrix",
]


# -- basic patterns ------------------------------------------------------------


def basic_cz_pattern(ctx: DimensionContext, i: int, j: int) -> Pattern:
    """The measurement-free pattern implementing CZ on two wires."""
    return Pattern(ctx, (i, j), (i, j), (i, j), (Entangle(i, j),))


def basic_v_pattern(ctx: DimensionContext, src: int, dst: int, theta) -> Pattern:
    """One-step teleportation pattern implementing v(theta): entangle a fresh
    wire, measure the old wire, correct the new one."""
    d = ctx.d
    return Pattern(
        ctx,
        (src, dst),
        (src,),
        (dst,),
        (
            Entangle(src, dst),
            Measure(src, tuple(theta), Signal.zero(d), Signal.zero(d)),
            CorrectX(dst, Signal.unit(d, src)),
        ),
    )


# -- circuit -> pattern ---------------------------------------------------------


def _require_guni(c: Circuit) -> None:
    for op in c.ops:
        ok = (op.gate.name == GateName.CZ and op.gate.k % c.ctx.d == 1) or op.gate.name == GateName.V
        if not ok:
            raise ValueError(
                f"unsupported gate {op.gate.name.value} (lower to the {{CZ, v}} set first)"
            )


def circuit_to_pattern_standard(c: Circuit, standardise: bool = True) -> Pattern:
    """Gate-by-gate measurement-pattern simulation of a {CZ, v} circuit.

    Each CZ becomes an entangling command on the current wires; each
    v(theta) becomes the basic teleportation pattern with a fresh wire.
    With ``standardise`` (the default) the composite is completely
    standardised.
    """
    _require_guni(c)
    if set(c.inputs) != set(c.qudits) or set(c.outputs) != set(c.qudits):
        raise ValueError("conversion expects a circuit acting in place (inputs = outputs = qudits)")
    d = c.ctx.d
    wire = {q: q for q in c.qudits}
    qudits = list(c.qudits)
    fresh = max(c.qudits, default=0) + 1
    seq = []
    for op in c.ops:
        if op.gate.name == GateName.CZ:
            i, j = op.sites
            seq.append(Entangle(wire[i], wire[j]))
        else:
            (i,) = op.sites
            new = fresh
            fresh += 1
            qudits.append(new)
            seq.append(Entangle(wire[i], new))
            seq.append(Measure(wire[i], op.gate.theta, Signal.zero(d), Signal.zero(d)))
            seq.append(CorrectX(new, Signal.unit(d, wire[i])))
            wire[i] = new
    pat = Pattern(c.ctx, tuple(qudits), c.inputs, tuple(wire[q] for q in c.outputs), tuple(seq))
    require_valid(pat)
    return completely_standardise(pat) if standardise else pat


def insert_fourier_breaks(c: Circuit) -> Circuit:
    """Insert four Fourier gates wherever two CZ gates act consecutively on
    the same qudit; F^4 = identity, so semantics are untouched."""
    ops: list[Operation] = []
    last: dict[int, GateName] = {}
    for op in c.ops:
        if op.gate.name == GateName.CZ:
            for q in op.sites:
                if last.get(q) == GateName.CZ:
                    ops.extend(Operation(Gate.f(), (q,)) for _ in range(4))
                    last[q] = GateName.F
            ops.append(op)
            for q in op.sites:
                last[q] = GateName.CZ
        else:
            ops.append(op)
            for q in op.sites:
                last[q] = op.gate.name
    return c.with_ops(ops)


def circuit_to_pattern_cluster(c: Circuit) -> Pattern:
    """Cluster-style conversion: break consecutive CZ pairs with F^4 before
    the standard conversion, capping the entanglement graph degree at 3."""
    # lower first so repeated-CZ expansions are visible to the break pass,
    # then lower once more for the inserted Fourier gates
    broken = lower_to_guni(insert_fourier_breaks(lower_to_guni(c)))
    pat = circuit_to_pattern_standard(broken, standardise=True)
    delta = entanglement_graph(pat).max_degree()
    if delta > 3:
        raise AssertionError(f"cluster conversion produced entanglement degree {delta} > 3")
    return pat


# -- pattern -> circuit ----------------------------------------------------------


def _correction_gates(signal: Signal, target: int, controlled: GateName) -> list[Operation]:
    ops = []
    for q, coeff in signal.coeffs:
        gate = Gate.cx(coeff) if controlled == GateName.CX else Gate.cz(coeff)
        ops.append(Operation(gate, (q, target)))
    return ops


def pattern_to_circuit_coherent(p: Pattern) -> Circuit:
    """Fully unitary circuit simulation of a completely standard pattern.

    Non-input wires get an initial Fourier gate (preparing F|0>), each
    entangling command becomes CZ, each measurement becomes its v(theta)
    rotation preceded by the controlled-X gates realizing its adapted
    X power, and output corrections become controlled-X / controlled-Z
    products.  For any input, the outputs disentangle from the other
    wires and carry the pattern's unitary.
    """
    require_valid(p)
    if not is_completely_standard(p):
        raise ValueError("coherent conversion expects a completely standard pattern")
    ops: list[Operation] = []
    inputs = set(p.inputs)
    for q in p.qudits:
        if q not in inputs:
            ops.append(Operation(Gate.f(), (q,)))
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            ops.append(Operation(Gate.cz(), (cmd.i, cmd.j)))
        elif isinstance(cmd, Measure):
            ops.extend(_correction_gates(cmd.x_signal, cmd.site, GateName.CX))
            ops.append(Operation(Gate.v(cmd.theta), (cmd.site,)))
        elif isinstance(cmd, CorrectX):
            ops.extend(_correction_gates(cmd.signal, cmd.site, GateName.CX))
        else:
            ops.extend(_correction_gates(cmd.signal, cmd.site, GateName.CZ))
    return Circuit(p.ctx, p.qudits, p.inputs, p.outputs, tuple(ops))


# -- fan-out builders ------------------------------------------------------------


def build_fanout(ctx: DimensionContext, n: int, variant: str = "logdepth") -> Circuit:
    """Standard-circuit decompositions of the n-target fan-out gate.

    ``naive``: n controlled-X gates sharing the control; exact for all
    inputs, depth n.  ``logdepth``: the doubling tree padded to the
    2**ceil(log2(n+1)) - 1 shape with surplus gates omitted; depth
    ceil(log2(n+1)), exact on the quantum-copy configuration (targets
    prepared in |0>).  No bounded-arity circuit of that depth can
    reproduce the fan-out unitary on arbitrary target states, so the
    tree trades full-input generality for minimal depth.
    """
    if n < 1:
        raise ValueError("need at least one target")
    qudits = tuple(range(n + 1))
    ops: list[Operation] = []
    if variant == "naive":
        ops = [Operation(Gate.cx(), (0, t)) for t in range(1, n + 1)]
    elif variant == "logdepth":
        levels = math.ceil(math.log2(n + 1))
        for level in range(levels):
            for holder in range(2**level):
                target = holder + 2**level
                if target <= n:
                    ops.append(Operation(Gate.cx(), (holder, target)))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return Circuit(ctx, qudits, qudits, qudits, tuple(ops))


def build_generalized(ctx: DimensionContext, coeffs, kind: str = "fanout") -> Circuit:
    """Constant-depth fan-out-model circuits for the coefficient-vector
    fan-out and modulo gates.

    fanout(v): copy the control into n-1 ancillas with one fan-out,
    apply the per-target controlled-X powers in parallel, then undo the
    copy with d-1 plain fan-outs.  mod(v): conjugate fanout(-v) by a
    Fourier layer.
    """
    coeffs = tuple(int(c) % ctx.d for c in coeffs)
    n = len(coeffs)
    if n < 1:
        raise ValueError("need at least one coefficient")
    control = 0
    targets = tuple(range(1, n + 1))
    mains = (control,) + targets
    if kind == "fanout":
        if n == 1:
            ops = [Operation(Gate.cx(coeffs[0]), (control, targets[0]))] if coeffs[0] else []
            return Circuit(ctx, mains, mains, mains, tuple(ops))
        copies = tuple(range(n + 1, n + n))  # n - 1 ancillas
        ops = [Operation(Gate.fanout((1,) * (n - 1)), (control,) + copies)]
        sources = (control,) + copies
        for src, tgt, c in zip(sources, targets, coeffs):
            if c:
                ops.append(Operation(Gate.cx(c), (src, tgt)))
        for _ in range(ctx.d - 1):
            ops.append(Operation(Gate.fanout((1,) * (n - 1)), (control,) + copies))
        return Circuit(ctx, mains + copies, mains, mains, tuple(ops))
    if kind == "mod":
        inner = build_generalized(ctx, tuple((-c) % ctx.d for c in coeffs), "fanout")
        ops = [Operation(Gate.finv(), (q,)) for q in mains]
        ops += list(inner.ops)
        ops += [Operation(Gate.f(), (q,)) for q in mains]
        return Circuit(ctx, inner.qudits, mains, mains, tuple(ops))
    raise ValueError(f"unknown kind {kind!r}")


# -- commuting-unitary parallelization --------------------------------------------

_DIAGONAL_GATES = {GateName.Z, GateName.CZ, GateName.P, GateName.R, GateName.DIAG}
_DIAG_DENSE_CHECK_LIMIT = 4096


def _check_diagonal(c: Circuit) -> None:
    if all(op.gate.name in _DIAGONAL_GATES for op in c.ops):
        return
    dim = c.ctx.d ** len(c.qudits)
    if dim > _DIAG_DENSE_CHECK_LIMIT:
        raise ValueError("cannot certify diagonality: non-diagonal gate kinds on a large register")
    u = np.eye(dim, dtype=np.complex128)
    for op in c.ops:
        full = _embed(gate_matrix(op.gate, c.ctx), c, op.sites)
        u = full @ u
    if np.max(np.abs(u - np.diag(np.diag(u)))) > 1e-10:
        raise ValueError("block is not diagonal in the computational basis")


def _embed(m: np.ndarray, c: Circuit, sites) -> np.ndarray:
    d = c.ctx.d
    n = len(c.qudits)
    axes = [c.qudits.index(s) for s in sites]
    k = len(axes)
    tensor = np.eye(d**n, dtype=np.complex128).reshape((d,) * (2 * n))
    src = np.moveaxis(tensor, axes, range(k)).reshape(d**k, -1)
    src = m @ src
    tensor = np.moveaxis(src.reshape((d,) * k + (d,) * (2 * n - k)), range(k), axes)
    return tensor.reshape(d**n, d**n)


def _remap_ops(ops, mapping: dict[int, int]) -> list[Operation]:
    return [Operation(op.gate, tuple(mapping[s] for s in op.sites)) for op in ops]


def parallelize_commuting(
    b: Circuit, diagonals: list[Circuit], ancilla_ids: list[int] | None = None
) -> Circuit:
    """Run n pairwise-commuting unitaries B^dagger D_i B in fan-out-parallel.

    The output applies B once, copies the k-qudit register into n-1
    ancilla registers with k parallel fan-outs, applies every D_i on its
    own register simultaneously, undoes the copies with d-1 fan-out
    layers and finishes with B^dagger.  Ancillas are returned in |0>.
    """
    if not diagonals:
        raise ValueError("need at least one diagonal block")
    mains = b.qudits
    ctx = b.ctx
    for diag in diagonals:
        if diag.ctx != ctx or set(diag.qudits) != set(mains):
            raise ValueError("diagonal blocks must act on the same register as the basis change")
        _check_diagonal(diag)
    n = len(diagonals)
    k = len(mains)
    binv = inverse_circuit(b)
    if n == 1:
        ops = list(b.ops) + list(diagonals[0].ops) + list(binv.ops)
        return Circuit(ctx, mains, mains, mains, tuple(ops))
    total = k * (n - 1)
    if ancilla_ids is None:
        start = max(mains, default=0) + 1
        ancilla_ids = list(range(start, start + total))
    if len(ancilla_ids) != total:
        raise ValueError(f"need exactly {total} ancilla ids")
    registers = [mains]
    for i in range(n - 1):
        registers.append(tuple(ancilla_ids[i * k : (i + 1) * k]))
    ops: list[Operation] = list(b.ops)
    fan_targets = [tuple(registers[i][pos] for i in range(1, n)) for pos in range(k)]
    for pos in range(k):
        ops.append(Operation(Gate.fanout((1,) * (n - 1)), (mains[pos],) + fan_targets[pos]))
    for i, diag in enumerate(diagonals):
        mapping = dict(zip(mains, registers[i]))
        ops += _remap_ops(diag.ops, mapping)
    for _ in range(ctx.d - 1):
        for pos in range(k):
            ops.append(Operation(Gate.fanout((1,) * (n - 1)), (mains[pos],) + fan_targets[pos]))
    ops += list(binv.ops)
    qudits = tuple(mains) + tuple(ancilla_ids)
    return Circuit(ctx, qudits, mains, mains, tuple(ops))


# -- constant-depth controlled-Pauli compiler --------------------------------------


@dataclass(frozen=True)
class CxMatrix:
    """The Z(d)-linear action of a controlled-X-only circuit.

    ``rows[j]`` holds the coefficients of the input digits in the final
    value of qudit j.  Always invertible: the matrix is a product of
    elementary row-addition transvections.
    """

    d: int
    rows: tuple[tuple[int, ...], ...]
    gates: tuple[tuple[int, int, int], ...]  # (control_index, target_index, power)

    @classmethod
    def from_gates(cls, d: int, n: int, gates) -> "CxMatrix":
        rows = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
        for ci, ti, k in gates:
            rows[ti] = [(rows[ti][c] + k * rows[ci][c]) % d for c in range(n)]
        return cls(d, tuple(tuple(r) for r in rows), tuple(gates))

    def inverse(self) -> "CxMatrix":
        """Replay the gate list backwards with inverted updates."""
        inv_gates = [(ci, ti, (-k) % self.d) for ci, ti, k in reversed(self.gates)]
        inv = CxMatrix.from_gates(self.d, len(self.rows), inv_gates)
        prod = _matmul_mod(inv.rows, self.rows, self.d)
        if prod != tuple(tuple(1 if i == j else 0 for i in range(len(self.rows))) for j in range(len(self.rows))):
            raise AssertionError("transvection replay did not invert the matrix")
        return inv


def _matmul_mod(a, b, d):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) % d for j in range(n)) for i in range(n)
    )


class _AncillaPool:
    """Deterministic ancilla ids, reusable across stages that clean up."""

    def __init__(self, start: int):
        self.start = start
        self.allocated: list[int] = []

    def take(self, count: int) -> list[int]:
        while len(self.allocated) < count:
            self.allocated.append(self.start + len(self.allocated))
        return self.allocated[:count]


def _normalize_controlled_pauli(c: Circuit):
    """Split a {CZ^k, CX^k, Z^k, X^k} circuit into a front diagonal phase
    polynomial, a controlled-X middle, and a trailing local X layer.

    Each qudit's running value is tracked as an affine form over the
    input digits; diagonal gates then contribute quadratic phase terms
    over the inputs and can all be emitted up front.
    """
    d = c.ctx.d
    n = len(c.qudits)
    index = {q: i for i, q in enumerate(c.qudits)}
    rows = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    consts = [0] * n
    cross: dict[tuple[int, int], int] = {}
    quad: dict[int, int] = {}
    lin: dict[int, int] = {}
    cx_gates: list[tuple[int, int, int]] = []

    def add_product(fi, ci, fj, cj, k):
        # phase += k * (fi + ci) * (fj + cj), dropping the global constant
        for a in range(n):
            for bb in range(n):
                coeff = (k * fi[a] * fj[bb]) % d
                if not coeff:
                    continue
                if a == bb:
                    quad[a] = (quad.get(a, 0) + coeff) % d
                else:
                    key = (min(a, bb), max(a, bb))
                    cross[key] = (cross.get(key, 0) + coeff) % d
        for a in range(n):
            coeff = (k * (fi[a] * cj + fj[a] * ci)) % d
            if coeff:
                lin[a] = (lin.get(a, 0) + coeff) % d

    def add_linear(f, k):
        # the constant part of the affine form only shifts the global phase
        for a in range(n):
            coeff = (k * f[a]) % d
            if coeff:
                lin[a] = (lin.get(a, 0) + coeff) % d

    for op in c.ops:
        g = op.gate
        k = g.k % d
        if g.name == GateName.X:
            if k:
                consts[index[op.sites[0]]] = (consts[index[op.sites[0]]] + k) % d
        elif g.name == GateName.CX:
            if k:
                ci, ti = index[op.sites[0]], index[op.sites[1]]
                rows[ti] = [(rows[ti][a] + k * rows[ci][a]) % d for a in range(n)]
                consts[ti] = (consts[ti] + k * consts[ci]) % d
                cx_gates.append((ci, ti, k))
        elif g.name == GateName.Z:
            if k:
                add_linear(rows[index[op.sites[0]]], k)
        elif g.name == GateName.CZ:
            if k:
                i, j = index[op.sites[0]], index[op.sites[1]]
                add_product(rows[i], consts[i], rows[j], consts[j], k)
        else:
            raise ValueError(f"gate {g.name.value} outside the controlled-Pauli set")
    return cross, quad, lin, cx_gates, consts


def _diagonal_layers(c: Circuit, cross, quad, lin) -> list[Circuit]:
    """Emit the phase polynomial as depth-1 diagonal layers on the full register."""
    d = c.ctx.d
    layers: list[list[Operation]] = []
    # proper edge coloring by greedy assignment gives disjoint CZ layers
    busy: list[set[int]] = []
    for (a, b), coeff in sorted(cross.items()):
        placed = False
        for li, owned in enumerate(busy):
            if a not in owned and b not in owned:
                layers[li].append(Operation(Gate.cz(coeff), (c.qudits[a], c.qudits[b])))
                owned.update((a, b))
                placed = True
                break
        if not placed:
            layers.append([Operation(Gate.cz(coeff), (c.qudits[a], c.qudits[b]))])
            busy.append({a, b})
    local_ops = []
    for a in range(len(c.qudits)):
        cq = quad.get(a, 0)
        cl = lin.get(a, 0)
        if cq or cl:
            theta = tuple(2.0 * math.pi * ((cq * j * j + cl * j) % d) / d for j in range(d))
            local_ops.append(Operation(Gate.r(theta), (c.qudits[a],)))
    if local_ops:
        layers.append(local_ops)
    return [Circuit(c.ctx, c.qudits, c.qudits, c.qudits, tuple(ops)) for ops in layers]


def controlled_pauli_constant_depth(c: Circuit, ancilla_start: int | None = None) -> Circuit:
    """Compile a {CZ^k, CX^k, Z^k, X^k} circuit to constant depth.

    The circuit is rearranged into a diagonal part followed by a
    controlled-X part (plus local X shifts).  The diagonal part runs as
    parallel depth-1 layers on fanned-out register copies; the
    controlled-X part evaluates its Z(d) matrix row-per-register with
    generalized modulo gates, writes the result register, uncomputes,
    clears the original register through the replayed inverse matrix
    and swaps the registers back.  Size grows quadratically in the
    register width while depth stays fixed.
    """
    mains = c.qudits
    ctx = c.ctx
    d = ctx.d
    n = len(mains)
    cross, quad, lin, cx_gates, shifts = _normalize_controlled_pauli(c)
    pool = _AncillaPool(max(mains, default=0) + 1 if ancilla_start is None else ancilla_start)
    ops: list[Operation] = []

    layers = _diagonal_layers(c, cross, quad, lin)
    if layers:
        # always run the parallel form so the layer schedule (and hence the
        # depth) is independent of how many diagonal layers the input needed
        if len(layers) == 1:
            layers.append(Circuit(ctx, mains, mains, mains, ()))
        empty = Circuit(ctx, mains, mains, mains, ())
        ancillas = pool.take(n * (len(layers) - 1))
        block = parallelize_commuting(empty, layers, ancilla_ids=ancillas)
        ops += list(block.ops)

    if cx_gates:
        matrix = CxMatrix.from_gates(d, n, cx_gates)
        inverse = matrix.inverse()
        regs_flat = pool.take(n * n + n)
        registers = [regs_flat[l * n : (l + 1) * n] for l in range(n)]
        result = regs_flat[n * n : n * n + n]

        def compute_rows(source: list[int], rows) -> list[Operation]:
            """Copy ``source`` into the registers, evaluate row k on register
            k's diagonal slot; emitted once forward, once backward.  Zero-power
            placeholders are kept so the layer schedule never depends on the
            matrix entries."""
            forward: list[Operation] = []
            for r in range(n):
                targets = tuple(registers[l][r] for l in range(n) if l != r)
                forward.append(Operation(Gate.fanout((1,) * (n - 1)), (source[r],) + targets))
            for kq in range(n):
                coeffs = tuple(rows[kq][j] for j in range(n) if j != kq)
                controls = tuple(registers[kq][j] for j in range(n) if j != kq)
                forward.append(Operation(Gate.mod(coeffs), (registers[kq][kq],) + controls))
            for kq in range(n):
                forward.append(Operation(Gate.cx(rows[kq][kq] % d), (source[kq], registers[kq][kq])))
            return forward

        def uncompute(forward: list[Operation]) -> list[Operation]:
            out = []
            for op in reversed(forward):
                if op.gate.name == GateName.FANOUT:
                    out.append(Operation(Gate.fanout(tuple((d - 1) for _ in op.gate.coeffs)), op.sites))
                elif op.gate.name == GateName.MOD:
                    out.append(Operation(Gate.mod(tuple((-x) % d for x in op.gate.coeffs)), op.sites))
                else:
                    out.append(Operation(Gate.cx((-op.gate.k) % d), op.sites))
            return out

        forward = compute_rows(list(mains), matrix.rows)
        ops += forward
        ops += [Operation(Gate.cx(), (registers[kq][kq], result[kq])) for kq in range(n)]
        ops += uncompute(forward)

        backward = compute_rows(list(result), inverse.rows)
        ops += backward
        ops += [Operation(Gate.cx(d - 1), (registers[kq][kq], mains[kq])) for kq in range(n)]
        ops += uncompute(backward)

        ops += [Operation(Gate.swap(), (mains[kq], result[kq])) for kq in range(n)]

    for i, shift in enumerate(shifts):
        if shift:
            ops.append(Operation(Gate.x(shift), (mains[i],)))

    qudits = tuple(mains) + tuple(pool.allocated)
    return Circuit(ctx, qudits, mains, mains, tuple(ops))


# -- pattern -> unbounded fan-out circuit -------------------------------------------


@dataclass(frozen=True)
class FanoutCompileResult:
    circuit: Circuit
    circuit_report: DepthReport
    pattern_report: DepthReport


def _measurement_layers(p: Pattern) -> list[list[Measure]]:
    level: dict[int, int] = {}
    layers: list[list[Measure]] = []
    for cmd in p.seq:
        if not isinstance(cmd, Measure):
            continue
        lvl = 1 + max((level.get(q, 0) for q in cmd.x_signal.qudits()), default=0)
        level[cmd.site] = lvl
        while len(layers) < lvl:
            layers.append([])
        layers[lvl - 1].append(cmd)
    return layers


def pattern_to_fanout_circuit(p: Pattern) -> FanoutCompileResult:
    """Compile a completely standard pattern to the unbounded fan-out model.

    Entangling commands run verbatim; each dependency layer of
    measurements becomes a constant-depth controlled-X block followed
    by a unit-depth layer of local rotations; the final output
    corrections become one more constant-depth controlled-Pauli block.
    """
    require_valid(p)
    if not is_completely_standard(p):
        raise ValueError("fan-out compilation expects a completely standard pattern")
    ctx = p.ctx
    ops: list[Operation] = []
    inputs = set(p.inputs)
    all_qudits = list(p.qudits)
    fresh = max(p.qudits, default=0) + 1
    for q in p.qudits:
        if q not in inputs:
            ops.append(Operation(Gate.f(), (q,)))
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            ops.append(Operation(Gate.cz(), (cmd.i, cmd.j)))

    def compile_block(block_ops: list[Operation]) -> None:
        nonlocal fresh
        touched = tuple(dict.fromkeys(s for op in block_ops for s in op.sites))
        block = Circuit(ctx, touched, touched, touched, tuple(block_ops))
        compiled = controlled_pauli_constant_depth(block, ancilla_start=fresh)
        added = [q for q in compiled.qudits if q not in set(touched)]
        all_qudits.extend(added)
        fresh = max([fresh - 1] + added) + 1
        ops.extend(compiled.ops)

    for layer in _measurement_layers(p):
        block_ops: list[Operation] = []
        for m in layer:
            block_ops.extend(_correction_gates(m.x_signal, m.site, GateName.CX))
        if block_ops:
            compile_block(block_ops)
        for m in layer:
            ops.append(Operation(Gate.v(m.theta), (m.site,)))

    block_ops = []
    for cmd in p.seq:
        if isinstance(cmd, CorrectX):
            block_ops.extend(_correction_gates(cmd.signal, cmd.site, GateName.CX))
        elif isinstance(cmd, CorrectZ):
            block_ops.extend(_correction_gates(cmd.signal, cmd.site, GateName.CZ))
    if block_ops:
        compile_block(block_ops)

    circuit = Circuit(ctx, tuple(all_qudits), p.inputs, p.outputs, tuple(ops))
    return FanoutCompileResult(circuit, depth_and_size(circuit), pattern_depth_and_size(p))


# -- constant-depth Clifford pipeline ------------------------------------------------

_CLIFFORD_GATES = {GateName.F, GateName.P, GateName.CZ}


def _sorted_entangling_prefix(p: Pattern) -> Pattern:
    """Reorder the entangling block by edge-coloring layers; entangling
    commands commute, and the written depth then matches the coloring."""
    graph = entanglement_graph(p)
    report = entanglement_depth(graph)
    edges = graph.unit_edges()
    by_color: dict[int, list[Entangle]] = {}
    for (i, j), color in zip(edges, report.coloring):
        by_color.setdefault(color, []).append(Entangle(i, j))
    ordered = [e for color in sorted(by_color) for e in by_color[color]]
    rest = [cmd for cmd in p.seq if not isinstance(cmd, Entangle)]
    return p.with_seq(tuple(ordered) + tuple(rest))


def clifford_constant_depth(c: Circuit, target: str = "pattern"):
    """Compile an {F, P, CZ} circuit to a constant-depth pattern, or further
    to an unbounded fan-out circuit.

    The cluster-style pattern of a Clifford circuit is completely
    standard with every measurement independent, so the measurements
    form one layer and the entangling block runs in edge-coloring depth.
    """
    for op in c.ops:
        if op.gate.name not in _CLIFFORD_GATES or (op.gate.name == GateName.CZ and op.gate.k % c.ctx.d != 1):
            raise ValueError(f"gate {op.gate.name.value} is not in the {{F, P, CZ}} set")
    pat = circuit_to_pattern_cluster(lower_to_guni(c))
    for cmd in pat.seq:
        if isinstance(cmd, Measure) and not cmd.is_independent():
            raise AssertionError("Clifford pattern kept a dependent measurement")
    pat = _sorted_entangling_prefix(pat)
    if target == "pattern":
        return pat
    if target == "fanout_circuit":
        return pattern_to_fanout_circuit(pat)
    raise ValueError(f"unknown target {target!r}")
