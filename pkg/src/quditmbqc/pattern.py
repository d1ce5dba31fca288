"""Measurement-pattern intermediate representation.

A pattern is a computation (V, I, O, command sequence) built from
entangling commands E(i,j), destructive single-qudit measurements with
classical signal dependencies, and Pauli corrections.  Non-input
qudits are implicitly prepared in the conjugate-basis state F|0>.

Signals are Z(d)-linear combinations of measurement outcomes; they
carry the classical dependency structure that the rewrite passes and
the depth analyzer operate on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import DimensionContext
from .circuit import DepthReport
from .sim import (
    Gate,
    StateVector,
    apply_gate,
    basis_state,
    measure,
    measure_branches,
    plus_state,
)

__all__ = [
    "Signal",
    "Entangle",
    "Measure",
    "CorrectX",
    "CorrectZ",
    "Command",
    "Pattern",
    "Violation",
    "validate",
    "run",
    "run_branches",
    "RunResult",
    "pattern_depth_and_size",
    "EntanglementGraph",
    "entanglement_graph",
    "entanglement_depth",
    "EntanglementDepthReport",
    "compose_serial",
    "compose_parallel",
    "pattern_to_json",
    "pattern_from_json",
]



@dataclass(frozen=True)
class Signal:
    """A formal Z(d)-linear combination of measurement-outcome dits.

    Coefficients are stored reduced mod d with zero entries removed;
    the empty signal is the constant zero.  Signals are pure linear
    forms: there is no constant term.
    """

    d: int
    coeffs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        reduced = {}
        for q, c in self.coeffs:
            c = c % self.d
            if c:
                reduced[q] = (reduced.get(q, 0) + c) % self.d
        items = tuple(sorted((q, c) for q, c in reduced.items() if c))
        object.__setattr__(self, "coeffs", items)

    @classmethod
    def zero(cls, d: int) -> "Signal":
        return cls(d)

    @classmethod
    def of(cls, d: int, mapping: dict[int, int] | None = None) -> "Signal":
        return cls(d, tuple((mapping or {}).items()))

    @classmethod
    def unit(cls, d: int, qudit: int) -> "Signal":
        return cls(d, ((qudit, 1),))

    def is_zero(self) -> bool:
        return not self.coeffs

    def qudits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.coeffs)

    def coefficient(self, qudit: int) -> int:
        for q, c in self.coeffs:
            if q == qudit:
                return c
        return 0

    def __add__(self, other: "Signal") -> "Signal":
        if other.d != self.d:
            raise ValueError("signal moduli differ")
        return Signal(self.d, self.coeffs + other.coeffs)

    def __sub__(self, other: "Signal") -> "Signal":
        return self + other.scaled(-1)

    def scaled(self, factor: int) -> "Signal":
        return Signal(self.d, tuple((q, c * factor) for q, c in self.coeffs))

    def relabel(self, mapping: dict[int, int]) -> "Signal":
        return Signal(self.d, tuple((mapping.get(q, q), c) for q, c in self.coeffs))

    def evaluate(self, outcomes: dict[int, int]) -> int:
        total = 0
        for q, c in self.coeffs:
            total += c * outcomes[q]
        return total % self.d

    def to_mapping(self) -> dict[int, int]:
        return dict(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return "+".join(f"{c}*s[{q}]" if c != 1 else f"s[{q}]" for q, c in self.coeffs)


@dataclass(frozen=True)
class Entangle:
    """E(i,j): a controlled-Z between two distinct qudits; symmetric."""

    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("entangling command needs two distinct qudits")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j) if self.i < self.j else (self.j, self.i)

    def sites(self) -> tuple[int, ...]:
        return (self.i, self.j)


@dataclass(frozen=True)
class Measure:
    """Destructive measurement of one qudit with angle vector theta.

    ``x_signal`` adapts the measured observable by an X power and
    ``z_signal`` by a Z power, both evaluated mod d from earlier
    outcomes.  Empty signals give an independent measurement.
    """

    site: int
    theta: tuple[float, ...]
    x_signal: Signal
    z_signal: Signal

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))

    def sites(self) -> tuple[int, ...]:
        return (self.site,)

    def is_independent(self) -> bool:
        return self.x_signal.is_zero() and self.z_signal.is_zero()


@dataclass(frozen=True)
class CorrectX:
    """Classically controlled X^signal correction."""

    site: int
    signal: Signal

    def sites(self) -> tuple[int, ...]:
        return (self.site,)


@dataclass(frozen=True)
class CorrectZ:
    """Classically controlled Z^signal correction."""

    site: int
    signal: Signal

    def sites(self) -> tuple[int, ...]:
        return (self.site,)


Command = Entangle | Measure | CorrectX | CorrectZ


def _command_signals(cmd: Command) -> tuple[Signal, ...]:
    if isinstance(cmd, Measure):
        return (cmd.x_signal, cmd.z_signal)
    if isinstance(cmd, (CorrectX, CorrectZ)):
        return (cmd.signal,)
    return ()


def normalize_commands(cmds, d: int) -> tuple[Command, ...]:
    """Drop corrections whose signal is statically zero."""
    out = []
    for cmd in cmds:
        if isinstance(cmd, (CorrectX, CorrectZ)) and cmd.signal.is_zero():
            continue
        out.append(cmd)
    return tuple(out)


@dataclass(frozen=True)
class Pattern:
    """A measurement pattern (V, I, O, command sequence)."""

    ctx: DimensionContext
    qudits: tuple[int, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    seq: tuple[Command, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "qudits", tuple(self.qudits))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "seq", normalize_commands(self.seq, self.ctx.d))
        if len(set(self.qudits)) != len(self.qudits):
            raise ValueError("duplicate qudit identifiers")

    def measured_qudits(self) -> tuple[int, ...]:
        return tuple(cmd.site for cmd in self.seq if isinstance(cmd, Measure))

    def with_seq(self, seq) -> "Pattern":
        return replace(self, seq=tuple(seq))


@dataclass(frozen=True)
class Violation:
    index: int | None
    message: str

    def __str__(self):
        where = "pattern" if self.index is None else f"command {self.index}"
        return f"{where}: {self.message}"


def validate(p: Pattern) -> Violation | None:
    """First violated wellformedness invariant, or None when the pattern is ok."""
    qs = set(p.qudits)
    if not set(p.inputs) <= qs or not set(p.outputs) <= qs:
        return Violation(None, "inputs and outputs must be subsets of the qudit set")
    outputs = set(p.outputs)
    measured: set[int] = set()
    for idx, cmd in enumerate(p.seq):
        for s in cmd.sites():
            if s not in qs:
                return Violation(idx, f"unknown qudit {s}")
            if s in measured:
                return Violation(idx, f"qudit {s} was already measured")
        for sig in _command_signals(cmd):
            if sig.d != p.ctx.d:
                return Violation(idx, "signal modulus differs from the pattern dimension")
            for q in sig.qudits():
                if q not in measured:
                    return Violation(idx, f"signal depends on qudit {q} not yet measured")
        if isinstance(cmd, Measure):
            if cmd.site in outputs:
                return Violation(idx, f"output qudit {cmd.site} must not be measured")
            if len(cmd.theta) != p.ctx.d:
                return Violation(idx, f"angle vector must have length {p.ctx.d}")
            measured.add(cmd.site)
    unmeasured = qs - outputs - measured
    if unmeasured:
        return Violation(None, f"non-output qudit(s) {sorted(unmeasured)} never measured")
    return None


def require_valid(p: Pattern) -> None:
    bad = validate(p)
    if bad is not None:
        raise ValueError(f"pattern is not wellformed: {bad}")


# -- execution ----------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    state: StateVector
    outcomes: dict[int, int]
    probability: float


def _rng_for_measurement(seed: int, index: int) -> np.random.Generator:
    # one root seed, split into an independent stream per measurement index
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.default_rng(ss)


class _Executor:
    """Shared command-walk machinery for sampled/forced/all-branch runs.

    With ``lazy=True`` entangling commands are deferred and flushed
    just before a non-entangling command touches one of their qudits;
    qudits are only materialized (appended in F|0>) when first needed,
    which keeps the live state small for chain-like patterns.  This is
    sound because E commands mutually commute and commute with any
    command on disjoint qudits.
    """

    def __init__(self, p: Pattern, input_state: StateVector | None, lazy: bool):
        require_valid(p)
        self.p = p
        self.lazy = lazy
        if input_state is None and p.inputs:
            input_state = basis_state(p.ctx, p.inputs, [0] * len(p.inputs))
        if p.inputs:
            if input_state is None or set(input_state.sites) != set(p.inputs):
                raise ValueError("input state must be defined exactly on the pattern inputs")
        ancillas = [q for q in p.qudits if q not in set(p.inputs)]
        if input_state is None:
            state = _all_plus(p.ctx, ancillas)
            self.materialized = set(ancillas) if not lazy else set()
            self.state = state if not lazy else StateVector(p.ctx, (), np.ones(1, dtype=np.complex128))
        else:
            self.state = input_state
            self.materialized = set(p.inputs)
            if not lazy and ancillas:
                self.state = self.state.extend(_all_plus(p.ctx, ancillas))
                self.materialized |= set(ancillas)
        self.pending: list[Entangle] = []

    def _materialize(self, q: int) -> None:
        if q in self.materialized:
            return
        self.state = self.state.extend(plus_state(self.p.ctx, q)) if self.state.num_sites else plus_state(self.p.ctx, q)
        self.materialized.add(q)

    def entangle(self, cmd: Entangle) -> None:
        if self.lazy:
            self.pending.append(cmd)
        else:
            self.state = apply_gate(self.state, Gate.cz(), (cmd.i, cmd.j))

    def flush(self, q: int | None = None) -> None:
        if not self.lazy:
            return
        keep = []
        for e in self.pending:
            if q is None or q in (e.i, e.j):
                self._materialize(e.i)
                self._materialize(e.j)
                self.state = apply_gate(self.state, Gate.cz(), (e.i, e.j))
            else:
                keep.append(e)
        self.pending = keep

    def touch(self, q: int) -> None:
        if self.lazy:
            self._materialize(q)
            self.flush(q)

    def correct(self, cmd: CorrectX | CorrectZ, outcomes: dict[int, int]) -> None:
        self.touch(cmd.site)
        k = cmd.signal.evaluate(outcomes)
        if k:
            gate = Gate.x(k) if isinstance(cmd, CorrectX) else Gate.z(k)
            self.state = apply_gate(self.state, gate, (cmd.site,))

    def finish(self) -> StateVector:
        if self.lazy:
            for q in self.p.outputs:
                self._materialize(q)
            self.flush(None)
        out = self.state
        if set(out.sites) != set(self.p.outputs):
            raise AssertionError("execution did not end on the output qudits")
        return out.with_sites_order(self.p.outputs)


def _all_plus(ctx: DimensionContext, sites) -> StateVector:
    state = None
    for q in sites:
        nxt = plus_state(ctx, q)
        state = nxt if state is None else state.extend(nxt)
    if state is None:
        return StateVector(ctx, (), np.ones(1, dtype=np.complex128))
    return state


def run(
    p: Pattern,
    input_state: StateVector | None = None,
    mode: str = "sampled",
    seed: int = 0,
    forced_outcomes: dict[int, int] | None = None,
    lazy: bool = False,
) -> RunResult:
    """Execute a pattern in ``sampled`` or ``forced`` mode.

    Sampled mode draws each outcome from a stream split off a single
    root seed (stream k for the k-th measurement in execution order),
    so runs are bit-reproducible.  Forced mode takes an outcome per
    measured qudit and fails on zero-probability branches.
    """
    if mode not in ("sampled", "forced"):
        raise ValueError(f"unknown run mode {mode!r}")
    ex = _Executor(p, input_state, lazy)
    outcomes: dict[int, int] = {}
    probability = 1.0
    m_index = 0
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            ex.entangle(cmd)
        elif isinstance(cmd, Measure):
            ex.touch(cmd.site)
            s_val = cmd.x_signal.evaluate(outcomes)
            t_val = cmd.z_signal.evaluate(outcomes)
            if mode == "forced":
                if forced_outcomes is None or cmd.site not in forced_outcomes:
                    raise ValueError(f"forced mode needs an outcome for qudit {cmd.site}")
                res = measure(ex.state, cmd.site, cmd.theta, s_val, t_val, forced=forced_outcomes[cmd.site])
            else:
                res = measure(ex.state, cmd.site, cmd.theta, s_val, t_val, rng=_rng_for_measurement(seed, m_index))
            ex.state = res.state
            outcomes[cmd.site] = res.outcome
            probability *= res.probability
            m_index += 1
        else:
            ex.correct(cmd, outcomes)
    return RunResult(ex.finish(), outcomes, probability)


def run_branches(
    p: Pattern,
    input_state: StateVector | None = None,
    min_probability: float = 1e-12,
    lazy: bool = False,
) -> list[RunResult]:
    """Full branch enumeration: every outcome assignment with its probability."""
    require_valid(p)

    results: list[RunResult] = []

    def walk(ex: _Executor, pos: int, outcomes: dict[int, int], prob: float) -> None:
        for idx in range(pos, len(p.seq)):
            cmd = p.seq[idx]
            if isinstance(cmd, Entangle):
                ex.entangle(cmd)
            elif isinstance(cmd, Measure):
                ex.touch(cmd.site)
                s_val = cmd.x_signal.evaluate(outcomes)
                t_val = cmd.z_signal.evaluate(outcomes)
                branches = measure_branches(ex.state, cmd.site, cmd.theta, s_val, t_val, min_probability)
                for res in branches:
                    sub = _clone_executor(ex)
                    sub.state = res.state
                    walk(sub, idx + 1, {**outcomes, cmd.site: res.outcome}, prob * res.probability)
                return
            else:
                ex.correct(cmd, outcomes)
        results.append(RunResult(ex.finish(), dict(outcomes), prob))

    walk(_Executor(p, input_state, lazy), 0, {}, 1.0)
    return results


def _clone_executor(ex: _Executor) -> _Executor:
    clone = object.__new__(_Executor)
    clone.p = ex.p
    clone.lazy = ex.lazy
    clone.state = ex.state
    clone.materialized = set(ex.materialized)
    clone.pending = list(ex.pending)
    return clone


# -- metrics ------------------------------------------------------------------


def pattern_depth_and_size(p: Pattern) -> DepthReport:
    """Depth over the written sequence; chains link commands that share a
    qudit or reference an earlier measurement's outcome.  Sizes: E
    counts 2, measurements and corrections count 1 (classical control
    adds no quantum size)."""
    require_valid(p)
    qudit_height: dict[int, int] = {}
    qudit_pred: dict[int, int] = {}
    outcome_height: dict[int, int] = {}
    outcome_pred: dict[int, int] = {}
    parents: list[int] = []
    size = 0
    best, best_idx = 0, -1
    for idx, cmd in enumerate(p.seq):
        level, parent = 0, -1
        for s in cmd.sites():
            h = qudit_height.get(s, 0)
            if h > level:
                level, parent = h, qudit_pred.get(s, -1)
        for sig in _command_signals(cmd):
            for q in sig.qudits():
                h = outcome_height.get(q, 0)
                if h > level:
                    level, parent = h, outcome_pred.get(q, -1)
        level += 1
        parents.append(parent)
        for s in cmd.sites():
            qudit_height[s] = level
            qudit_pred[s] = idx
        if isinstance(cmd, Measure):
            outcome_height[cmd.site] = level
            outcome_pred[cmd.site] = idx
        size += len(cmd.sites())
        if level > best:
            best, best_idx = level, idx
    path = []
    while best_idx >= 0:
        path.append(best_idx)
        best_idx = parents[best_idx]
    return DepthReport(best, size, tuple(reversed(path)))


# -- entanglement graph and entanglement depth --------------------------------


@dataclass(frozen=True)
class EntanglementGraph:
    """Multigraph of entangling commands with multiplicities in Z(d)."""

    nodes: tuple[int, ...]
    multiplicities: tuple[tuple[tuple[int, int], int], ...]

    def degree(self, node: int) -> int:
        return sum(m for (i, j), m in self.multiplicities if node in (i, j))

    def max_degree(self) -> int:
        return max((self.degree(n) for n in self.nodes), default=0)

    def edge_count(self) -> int:
        return sum(m for _, m in self.multiplicities)

    def unit_edges(self) -> list[tuple[int, int]]:
        out = []
        for (i, j), m in self.multiplicities:
            out.extend([(i, j)] * m)
        return out


def entanglement_graph(p: Pattern) -> EntanglementGraph:
    """Collect all E commands into a multigraph, multiplicities mod d."""
    counts: dict[tuple[int, int], int] = {}
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            counts[cmd.pair] = (counts.get(cmd.pair, 0) + 1) % p.ctx.d
    items = tuple(sorted((pair, m) for pair, m in counts.items() if m))
    return EntanglementGraph(tuple(p.qudits), items)


@dataclass(frozen=True)
class EntanglementDepthReport:
    achieved: int
    lower_bound: int
    exact: bool
    within_degree_lemma: bool
    coloring: tuple[int, ...]


EXACT_COLORING_EDGE_LIMIT = 12


def _greedy_coloring(edges: list[tuple[int, int]]) -> list[int]:
    used: dict[int, set[int]] = {}
    colors = []
    for i, j in edges:
        taken = used.setdefault(i, set()) | used.setdefault(j, set())
        c = 1
        while c in taken:
            c += 1
        colors.append(c)
        used[i].add(c)
        used[j].add(c)
    return colors


def _fan_rotation_coloring(edges: list[tuple[int, int]], max_degree: int) -> list[int] | None:
    """Misra-Gries fan rotation: properly colors any simple graph with at
    most max_degree + 1 colors.  Returns None for multigraphs."""
    if len(set(tuple(sorted(e)) for e in edges)) != len(edges):
        return None
    k = max_degree + 1
    color = [0] * len(edges)
    at: dict[int, dict[int, int]] = {}  # vertex -> color -> edge index

    def other(e: int, v: int) -> int:
        a, b = edges[e]
        return b if a == v else a

    def is_free(v: int, c: int) -> bool:
        return c not in at.setdefault(v, {})

    def free_color(v: int) -> int:
        for c in range(1, k + 1):
            if is_free(v, c):
                return c
        raise AssertionError("no free color within the degree+1 palette")

    def set_color(e: int, c: int) -> None:
        a, b = edges[e]
        old = color[e]
        if old:
            del at[a][old]
            del at[b][old]
        color[e] = c
        if c:
            at.setdefault(a, {})[c] = e
            at.setdefault(b, {})[c] = e

    def invert_path(start: int, c: int, dd: int) -> None:
        # walk the maximal path from start alternating dd, c, ... first,
        # then swap the two colors along it
        path: list[int] = []
        want, node = dd, start
        while want in at.get(node, {}):
            e = at[node][want]
            path.append(e)
            node = other(e, node)
            want = dd if want == c else c
        swapped = [(e, c if color[e] == dd else dd) for e in path]
        for e, _ in swapped:
            set_color(e, 0)
        for e, nc in swapped:
            set_color(e, nc)

    for idx, (u, v) in enumerate(edges):
        # fan entries pair the edge with its non-pivot endpoint; entry 0 is
        # the uncolored edge being inserted
        fan_v = [v]
        fan_e = [idx]
        in_fan = {v}
        grew = True
        while grew:
            grew = False
            for ce in sorted(at.get(u, {})):
                e = at[u][ce]
                x = other(e, u)
                if x not in in_fan and is_free(fan_v[-1], ce):
                    fan_v.append(x)
                    fan_e.append(e)
                    in_fan.add(x)
                    grew = True
                    break
        c = free_color(u)
        dd = free_color(fan_v[-1])
        if c != dd:
            invert_path(u, c, dd)
        # longest prefix that is still a fan and whose end has dd free
        w = None
        for end in range(len(fan_v), 0, -1):
            if not is_free(fan_v[end - 1], dd):
                continue
            if all(is_free(fan_v[i], color[fan_e[i + 1]]) for i in range(end - 1)):
                w = end
                break
        if w is None:
            return None
        for i in range(w - 1):
            ce = color[fan_e[i + 1]]
            set_color(fan_e[i + 1], 0)
            set_color(fan_e[i], ce)
        set_color(fan_e[w - 1], dd)
    return color


def _exact_coloring(edges: list[tuple[int, int]], lower: int, upper: int) -> list[int] | None:
    # iterative deepening: smallest k admitting a proper edge coloring
    order = sorted(range(len(edges)), key=lambda e: (edges[e][0], edges[e][1], e))
    for k in range(max(lower, 1), upper + 1):
        assign = [0] * len(edges)
        used: dict[int, set[int]] = {}

        def backtrack(pos: int) -> bool:
            if pos == len(order):
                return True
            i, j = edges[order[pos]]
            for c in range(1, k + 1):
                if c in used.get(i, set()) or c in used.get(j, set()):
                    continue
                used.setdefault(i, set()).add(c)
                used.setdefault(j, set()).add(c)
                assign[order[pos]] = c
                if backtrack(pos + 1):
                    return True
                used[i].discard(c)
                used[j].discard(c)
            return False

        if backtrack(0):
            return assign
    return None


def entanglement_depth(g: EntanglementGraph) -> EntanglementDepthReport:
    """Minimum depth of the entangling stage via proper edge coloring.

    Parallel edges between one pair are necessarily sequential, so each
    unit edge is colored separately.  Exhaustive search runs when the
    multigraph has at most EXACT_COLORING_EDGE_LIMIT unit edges, else a
    greedy pass gives an upper bound.  The achieved count is always at
    least the maximum degree.
    """
    edges = g.unit_edges()
    delta = g.max_degree()
    if not edges:
        return EntanglementDepthReport(0, 0, True, True, ())
    exact = len(edges) <= EXACT_COLORING_EDGE_LIMIT
    if exact:
        greedy = _greedy_coloring(edges)
        coloring = _exact_coloring(edges, delta, max(greedy))
        if coloring is None:  # greedy bound is always admissible
            coloring = greedy
    else:
        coloring = _fan_rotation_coloring(edges, delta)
        if coloring is None:  # parallel edges: fall back to first-fit
            coloring = _greedy_coloring(edges)
    achieved = max(coloring)
    if achieved < delta:
        raise AssertionError("edge coloring below the degree lower bound")
    return EntanglementDepthReport(achieved, delta, exact, achieved <= delta + 1, tuple(coloring))


# -- composition ---------------------------------------------------------------


def _relabel_pattern(p: Pattern, mapping: dict[int, int]) -> Pattern:
    def m(q):
        return mapping.get(q, q)

    seq = []
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            seq.append(Entangle(m(cmd.i), m(cmd.j)))
        elif isinstance(cmd, Measure):
            seq.append(Measure(m(cmd.site), cmd.theta, cmd.x_signal.relabel(mapping), cmd.z_signal.relabel(mapping)))
        elif isinstance(cmd, CorrectX):
            seq.append(CorrectX(m(cmd.site), cmd.signal.relabel(mapping)))
        else:
            seq.append(CorrectZ(m(cmd.site), cmd.signal.relabel(mapping)))
    return Pattern(
        p.ctx,
        tuple(m(q) for q in p.qudits),
        tuple(m(q) for q in p.inputs),
        tuple(m(q) for q in p.outputs),
        tuple(seq),
    )


def compose_serial(p1: Pattern, p0: Pattern) -> Pattern:
    """Run p0 then p1, wiring p1's k-th input to p0's k-th output."""
    if p0.ctx != p1.ctx:
        raise ValueError("patterns live in different dimensions")
    if len(p0.outputs) != len(p1.inputs):
        raise ValueError(f"cannot compose: {len(p0.outputs)} outputs vs {len(p1.inputs)} inputs")
    mapping = dict(zip(p1.inputs, p0.outputs))
    fresh = max(set(p0.qudits) | set(p1.qudits), default=0) + 1
    for q in p1.qudits:
        if q not in mapping:
            mapping[q] = fresh
            fresh += 1
    p1r = _relabel_pattern(p1, mapping)
    qudits = p0.qudits + tuple(q for q in p1r.qudits if q not in set(p0.qudits))
    return Pattern(p0.ctx, qudits, p0.inputs, p1r.outputs, p0.seq + p1r.seq)


def compose_parallel(p1: Pattern, p0: Pattern) -> Pattern:
    if p0.ctx != p1.ctx:
        raise ValueError("patterns live in different dimensions")
    if set(p0.qudits) & set(p1.qudits):
        raise ValueError("parallel composition requires disjoint qudit sets")
    return Pattern(
        p0.ctx,
        p0.qudits + p1.qudits,
        p0.inputs + p1.inputs,
        p0.outputs + p1.outputs,
        p0.seq + p1.seq,
    )


# -- JSON format ---------------------------------------------------------------


def _signal_to_json(sig: Signal) -> dict:
    return {str(q): c for q, c in sig.coeffs}


def _signal_from_json(d: int, doc: dict | None) -> Signal:
    if not doc:
        return Signal.zero(d)
    return Signal(d, tuple((int(q), int(c)) for q, c in doc.items()))


def pattern_to_json(p: Pattern) -> str:
    cmds = []
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            cmds.append({"kind": "E", "sites": [cmd.i, cmd.j]})
        elif isinstance(cmd, Measure):
            entry = {"kind": "M", "sites": [cmd.site], "theta": list(cmd.theta)}
            if not cmd.x_signal.is_zero():
                entry["s"] = _signal_to_json(cmd.x_signal)
            if not cmd.z_signal.is_zero():
                entry["t"] = _signal_to_json(cmd.z_signal)
            cmds.append(entry)
        elif isinstance(cmd, CorrectX):
            cmds.append({"kind": "X", "sites": [cmd.site], "s": _signal_to_json(cmd.signal)})
        else:
            cmds.append({"kind": "Z", "sites": [cmd.site], "t": _signal_to_json(cmd.signal)})
    doc = {
        "d": p.ctx.d,
        "qudits": list(p.qudits),
        "inputs": list(p.inputs),
        "outputs": list(p.outputs),
        "commands": cmds,
    }
    return json.dumps(doc, indent=2) + "\n"


def pattern_from_json(text: str) -> Pattern:
    doc = json.loads(text)
    d = int(doc["d"])
    ctx = DimensionContext.of(d)
    seq: list[Command] = []
    for entry in doc["commands"]:
        kind = entry["kind"]
        sites = entry["sites"]
        if kind == "E":
            seq.append(Entangle(sites[0], sites[1]))
        elif kind == "M":
            seq.append(
                Measure(
                    sites[0],
                    tuple(float(t) for t in entry["theta"]),
                    _signal_from_json(d, entry.get("s")),
                    _signal_from_json(d, entry.get("t")),
                )
            )
        elif kind == "X":
            seq.append(CorrectX(sites[0], _signal_from_json(d, entry.get("s"))))
        elif kind == "Z":
            seq.append(CorrectZ(sites[0], _signal_from_json(d, entry.get("t"))))
        else:
            raise ValueError(f"unknown command kind {kind!r}")
    return Pattern(ctx, tuple(doc["qudits"]), tuple(doc["inputs"]), tuple(doc["outputs"]), tuple(seq))
