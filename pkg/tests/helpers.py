"""Shared test oracles, independent of the code paths they check.

- brute-force longest dependent-path search for depth reports
- global-phase-insensitive unitary comparison
- a sparse phase-polynomial simulator for circuits built from basis
  permutations and Z(d)-integer diagonal phases (the controlled-Pauli
  gate family), exact at any register width
- a stabilizer-table tracker with group-membership tests, built on the
  matrix-verified symbolic Pauli conjugation (prime d)
"""

from __future__ import annotations

from itertools import product

import numpy as np

from quditmbqc.algebra import DimensionContext, PauliOperator, xi_p
from quditmbqc.circuit import Circuit, Operation
from quditmbqc.pattern import CorrectX, CorrectZ, Entangle, Measure, Pattern
from quditmbqc.sim import Gate, GateName

CONST = "#const"


# -- depth oracle ---------------------------------------------------------------


def longest_dependent_path(items: list[tuple[tuple[int, ...], tuple[int, ...], int | None]]) -> int:
    """Longest chain by dynamic programming over the explicit link relation.

    Each item is (sites, referenced_outcome_qudits, measured_qudit_or_None).
    Item j links to an earlier item i when they share a site or item j
    references the outcome that item i produced.
    """
    best = [0] * len(items)
    for j, (sites_j, refs_j, _) in enumerate(items):
        longest = 0
        for i in range(j):
            sites_i, _, measured_i = items[i]
            linked = bool(set(sites_i) & set(sites_j))
            if not linked and measured_i is not None and measured_i in refs_j:
                linked = True
            if linked:
                longest = max(longest, best[i])
        best[j] = longest + 1
    return max(best, default=0)


def circuit_items(c: Circuit):
    return [(op.sites, (), None) for op in c.ops]


def pattern_items(p: Pattern):
    items = []
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            items.append(((cmd.i, cmd.j), (), None))
        elif isinstance(cmd, Measure):
            refs = tuple(cmd.x_signal.qudits()) + tuple(cmd.z_signal.qudits())
            items.append(((cmd.site,), refs, cmd.site))
        elif isinstance(cmd, (CorrectX, CorrectZ)):
            items.append(((cmd.site,), tuple(cmd.signal.qudits()), None))
    return items


# -- unitary comparison -----------------------------------------------------------


def max_diff_up_to_phase(u: np.ndarray, v: np.ndarray) -> float:
    if u.shape != v.shape:
        raise ValueError("shape mismatch")
    k = np.argmax(np.abs(u))
    if abs(v.flat[k]) < 1e-14:
        return float(np.max(np.abs(u - v)))
    phase = u.flat[k] / v.flat[k]
    phase /= abs(phase)
    return float(np.max(np.abs(u - phase * v)))


# -- phase-polynomial oracle --------------------------------------------------------


def _poly_from_angles(angles, d: int):
    """Match exp(i*angles[q]) against omega^(c2*q^2 + c1*q + c0); returns
    (c2, c1) or None when the vector is not an integer phase polynomial."""
    target = np.exp(1j * np.asarray(angles, dtype=float))
    omega = np.exp(2j * np.pi / d)
    qs = np.arange(d)
    for c2 in range(d):
        for c1 in range(d):
            probe = omega ** ((c2 * qs * qs + c1 * qs) % d)
            ratio = target / probe
            if np.max(np.abs(ratio - ratio[0])) < 1e-9:
                return c2, c1
    return None


class PhasePoly:
    """Exact symbolic state of a permutation-plus-diagonal circuit.

    Every qudit's running value is a sparse affine form over the initial
    digits, and the accumulated phase is a sparse quadratic form; both
    live in Z(d).  Constant phase terms are dropped (global phase).
    """

    def __init__(self, ctx: DimensionContext, qudits):
        self.d = ctx.d
        self.rows: dict[int, dict] = {q: {q: 1} for q in qudits}
        self.cross: dict[tuple, int] = {}
        self.lin: dict[int, int] = {}

    def _add_lin(self, form: dict, k: int) -> None:
        for var, c in form.items():
            if var == CONST:
                continue
            self.lin[var] = (self.lin.get(var, 0) + k * c) % self.d

    def _add_product(self, f: dict, g: dict, k: int) -> None:
        for va, ca in f.items():
            for vb, cb in g.items():
                coeff = (k * ca * cb) % self.d
                if not coeff:
                    continue
                if va == CONST and vb == CONST:
                    continue
                if va == CONST:
                    self.lin[vb] = (self.lin.get(vb, 0) + coeff) % self.d
                elif vb == CONST:
                    self.lin[va] = (self.lin.get(va, 0) + coeff) % self.d
                else:
                    key = (va, vb) if va <= vb else (vb, va)
                    self.cross[key] = (self.cross.get(key, 0) + coeff) % self.d

    def _row_add(self, target: int, source_form: dict, k: int) -> None:
        row = self.rows[target]
        for var, c in source_form.items():
            row[var] = (row.get(var, 0) + k * c) % self.d
            if not row[var]:
                del row[var]

    def apply(self, gate: Gate, sites) -> None:
        d = self.d
        name = gate.name
        if name == GateName.X:
            self._row_add(sites[0], {CONST: 1}, gate.k % d)
        elif name == GateName.CX:
            self._row_add(sites[1], dict(self.rows[sites[0]]), gate.k % d)
        elif name == GateName.SWAP:
            self.rows[sites[0]], self.rows[sites[1]] = self.rows[sites[1]], self.rows[sites[0]]
        elif name == GateName.FANOUT:
            src = dict(self.rows[sites[0]])
            for t, coeff in zip(sites[1:], gate.coeffs):
                self._row_add(t, src, coeff % d)
        elif name == GateName.MOD:
            for ctl, coeff in zip(sites[1:], gate.coeffs):
                self._row_add(sites[0], dict(self.rows[ctl]), coeff % d)
        elif name == GateName.Z:
            self._add_lin(self.rows[sites[0]], gate.k % d)
        elif name == GateName.CZ:
            self._add_product(self.rows[sites[0]], self.rows[sites[1]], gate.k % d)
        elif name in (GateName.R, GateName.DIAG):
            vec = gate.theta if name == GateName.R else gate.angles
            poly = _poly_from_angles(vec, d)
            if poly is None:
                raise ValueError("diagonal gate is not an integer phase polynomial")
            c2, c1 = poly
            form = self.rows[sites[0]]
            self._add_product(form, form, c2)
            self._add_lin(form, c1)
        else:
            raise ValueError(f"gate {name.value} outside the phase-polynomial family")

    def run(self, circuit: Circuit) -> "PhasePoly":
        for op in circuit.ops:
            self.apply(op.gate, op.sites)
        return self

    def restricted(self, keep_vars) -> tuple[dict, dict, dict]:
        """Substitute zero for every variable outside ``keep_vars``; returns
        (rows, cross, diag) in canonical form.  The per-variable diagonal
        phase is canonicalized as the length-d function it computes, since
        coefficient pairs are not unique mod d (for even d the square and
        linear monomials differ by a multiple of d/2)."""
        keep = set(keep_vars) | {CONST}
        rows = {}
        for q, row in self.rows.items():
            rows[q] = {v: c for v, c in row.items() if v in keep and c % self.d}
        cross = {}
        squares: dict = {}
        for (va, vb), c in self.cross.items():
            if not {va, vb} <= keep or not c % self.d:
                continue
            if va == vb:
                squares[va] = c % self.d
            else:
                cross[(va, vb)] = c % self.d
        diag = {}
        for v in set(squares) | {v for v, c in self.lin.items() if v in keep and c % self.d}:
            c2 = squares.get(v, 0)
            c1 = self.lin.get(v, 0)
            fun = tuple((c2 * q * q + c1 * q) % self.d for q in range(self.d))
            if any(fun):
                diag[v] = fun
        return rows, cross, diag


def phase_poly_equivalent(compiled: Circuit, source: Circuit) -> bool:
    """Exact equality (up to global phase) of two controlled-Pauli-family
    computations: same value map on the source wires, clean ancillas, and
    the same phase polynomial, with non-input digits fixed to zero."""
    mains = tuple(source.qudits)
    if tuple(compiled.inputs) != tuple(source.inputs) or tuple(compiled.outputs) != tuple(source.outputs):
        return False
    a = PhasePoly(compiled.ctx, compiled.qudits).run(compiled)
    b = PhasePoly(source.ctx, source.qudits).run(source)
    rows_a, cross_a, diag_a = a.restricted(mains)
    rows_b, cross_b, diag_b = b.restricted(mains)
    for q in mains:
        if rows_a[q] != rows_b[q]:
            return False
    for q in compiled.qudits:
        if q in set(mains):
            continue
        if rows_a[q]:  # ancilla must come back to zero
            return False
    return cross_a == cross_b and diag_a == diag_b


# -- stabilizer-table oracle ---------------------------------------------------------


def match_clifford_diagonal(ctx: DimensionContext, angles) -> tuple[int, int] | None:
    """Match exp(i*angles[q]) against the diagonal of P^a Z^b (up to a global
    phase); returns (a, b) or None.  Covers both omega- and omega_hat-valued
    Clifford diagonals."""
    target = np.exp(1j * np.asarray(angles, dtype=float))
    d, D = ctx.d, ctx.D
    omega_hat = np.exp(2j * np.pi / D)
    unit = D // d
    xi = np.array([xi_p(ctx, q) for q in range(d)])
    qs = np.arange(d)
    for a in range(D):
        base = omega_hat ** ((a * xi) % D)
        for b in range(d):
            probe = base * omega_hat ** ((unit * b * qs) % D)
            ratio = target / probe
            if np.max(np.abs(ratio - ratio[0])) < 1e-9:
                return a, b
    return None


def diagonal_clifford_word(ctx: DimensionContext, site: int, a: int, b: int):
    word = [("P", site)] * (a % ctx.D)
    if b % ctx.d:
        word.append(("PAULI", site, 0, b % ctx.d))
    return word


def clifford_word(ctx: DimensionContext, gate: Gate, sites) -> list[tuple]:
    """Elementary conjugation steps, in execution order, for every gate kind
    this repo's Clifford pipelines emit."""
    d = ctx.d
    name = gate.name
    if name == GateName.F:
        return [("F", sites[0])]
    if name == GateName.FINV:
        return [("F", sites[0])] * 3
    if name == GateName.P:
        return [("P", sites[0])]
    if name == GateName.CZ:
        return [("CZ", sites[0], sites[1])] * (gate.k % d)
    if name == GateName.CX:
        i, j = sites
        return [("F", j)] + [("CZ", i, j)] * (gate.k % d) + [("F", j)] * 3
    if name == GateName.X:
        return [("PAULI", sites[0], gate.k % d, 0)]
    if name == GateName.Z:
        return [("PAULI", sites[0], 0, gate.k % d)]
    if name == GateName.SWAP:
        i, j = sites
        out = clifford_word(ctx, Gate.cx(), (i, j))
        out += clifford_word(ctx, Gate.cx(d - 1), (j, i))
        out += clifford_word(ctx, Gate.cx(), (i, j))
        out += [("F", i), ("F", i)]
        return out
    if name == GateName.FANOUT:
        out = []
        for t, coeff in zip(sites[1:], gate.coeffs):
            out += clifford_word(ctx, Gate.cx(coeff % d), (sites[0], t))
        return out
    if name == GateName.MOD:
        out = [("F", q) for q in sites] * 3
        inner = Gate.fanout(tuple((-c) % d for c in gate.coeffs))
        out += clifford_word(ctx, inner, sites)
        out += [("F", q) for q in sites]
        return out
    if name in (GateName.V, GateName.R, GateName.DIAG):
        vec = gate.theta if name != GateName.DIAG else gate.angles
        match = match_clifford_diagonal(ctx, vec)
        if match is None:
            raise ValueError("angle vector is not Clifford")
        word = diagonal_clifford_word(ctx, sites[0], *match)
        if name == GateName.V:
            word = word + [("F", sites[0])]
        return word
    raise ValueError(f"no Clifford word for {name.value}")


class StabilizerTable:
    """Pauli generators as integer arrays, conjugated gate by gate.

    Columns are indexed by position in ``sites``; x/z hold exponents in
    Z(d), phase holds omega_hat exponents in Z(D).  Every update follows
    the exact conjugation rules of the symbolic algebra.
    """

    def __init__(self, ctx: DimensionContext, sites):
        self.ctx = ctx
        self.sites = tuple(sites)
        self.index = {s: i for i, s in enumerate(self.sites)}
        n = len(self.sites)
        self.x = np.zeros((0, n), dtype=np.int64)
        self.z = np.zeros((0, n), dtype=np.int64)
        self.phase = np.zeros(0, dtype=np.int64)

    @classmethod
    def computational_input(cls, ctx, sites, digits: dict[int, int]) -> "StabilizerTable":
        """Stabilizers of the product state with each site in |digit>
        (default 0): generator omega^{-digit} Z per site."""
        table = cls(ctx, sites)
        n = len(table.sites)
        table.x = np.zeros((n, n), dtype=np.int64)
        table.z = np.eye(n, dtype=np.int64)
        unit = ctx.D // ctx.d
        table.phase = np.array(
            [(-unit * digits.get(s, 0)) % ctx.D for s in table.sites], dtype=np.int64
        )
        return table

    def _apply_step(self, step: tuple) -> None:
        d, D = self.ctx.d, self.ctx.D
        delta = self.ctx.delta_d
        unit = D // d
        kind = step[0]
        if kind == "F":
            i = self.index[step[1]]
            a, b = self.x[:, i].copy(), self.z[:, i].copy()
            self.phase = (self.phase + (a * b) * (delta - 2)) % D
            self.x[:, i] = (-b) % d
            self.z[:, i] = a
        elif kind == "P":
            i = self.index[step[1]]
            a = self.x[:, i]
            num = a * (2 - (a - 1) * (delta - 2))
            assert not np.any(num % 2)
            self.phase = (self.phase + num // 2) % D
            self.z[:, i] = (self.z[:, i] + a) % d
        elif kind == "CZ":
            i, j = self.index[step[1]], self.index[step[2]]
            self.phase = (self.phase + unit * self.x[:, i] * self.x[:, j]) % D
            zi = (self.z[:, i] + self.x[:, j]) % d
            zj = (self.z[:, j] + self.x[:, i]) % d
            self.z[:, i], self.z[:, j] = zi, zj
        elif kind == "PAULI":
            _, site, a, b = step
            i = self.index[site]
            self.phase = (self.phase + unit * (a * self.z[:, i] - b * self.x[:, i])) % D
        else:
            raise ValueError(kind)

    def conjugate_through(self, circuit: Circuit) -> "StabilizerTable":
        for op in circuit.ops:
            for step in clifford_word(self.ctx, op.gate, op.sites):
                self._apply_step(step)
        return self

    def generators(self) -> list[PauliOperator]:
        out = []
        for r in range(self.x.shape[0]):
            out.append(
                PauliOperator(
                    self.ctx,
                    len(self.sites),
                    int(self.phase[r]),
                    tuple(int(v) for v in self.x[r]),
                    tuple(int(v) for v in self.z[r]),
                )
            )
        return out

    def contains(self, x_exp: dict[int, int], z_exp: dict[int, int], phase: int) -> bool:
        """Exact group membership of one Pauli (given site -> exponent maps),
        including the phase, by symplectic elimination mod prime d."""
        d, D = self.ctx.d, self.ctx.D
        unit = D // d
        n = len(self.sites)
        gx, gz, gp = self.x.copy(), self.z.copy(), self.phase.copy()
        tx = np.zeros(n, dtype=np.int64)
        tz = np.zeros(n, dtype=np.int64)
        for s, e in x_exp.items():
            tx[self.index[s]] = e % d
        for s, e in z_exp.items():
            tz[self.index[s]] = e % d
        tp = phase % D

        def mul_into(ax, az, ap, bx, bz, bp, k):
            # (a) *= (b)^k in normal form; returns new (x, z, phase)
            # b^k carries k*phase_b plus the Weyl reordering term C(k,2)*z.x
            kp = (k * bp + unit * (k * (k - 1) // 2) * int((bz * bx).sum())) % D
            kx = (k * bx) % d
            kz = (k * bz) % d
            cross = unit * int((az * kx).sum())
            return (ax + kx) % d, (az + kz) % d, (ap + kp + cross) % D

        # eliminate the target's symplectic coordinates column by column
        rows = list(range(gx.shape[0]))
        used = set()
        for col, block in [(c, "x") for c in range(n)] + [(c, "z") for c in range(n)]:
            vec = gx if block == "x" else gz
            pivot = None
            for r in rows:
                if r in used:
                    continue
                if vec[r, col] % d:
                    pivot = r
                    break
            if pivot is None:
                continue
            used.add(pivot)
            pv = int(vec[pivot, col]) % d
            pv_inv = pow(pv, -1, d)  # prime d only
            tgt = int((tx if block == "x" else tz)[col]) % d
            if tgt:
                k = (-tgt * pv_inv) % d
                tx, tz, tp = mul_into(tx, tz, tp, gx[pivot], gz[pivot], int(gp[pivot]), k)
            for r in rows:
                if r == pivot or r in used and r != pivot:
                    continue
                cur = int(vec[r, col]) % d
                if cur:
                    k = (-cur * pv_inv) % d
                    nx, nz, nph = mul_into(gx[r], gz[r], int(gp[r]), gx[pivot], gz[pivot], int(gp[pivot]), k)
                    gx[r], gz[r], gp[r] = nx, nz, nph
        return not tx.any() and not tz.any() and tp % D == 0


def target_stabilizers(circuit: Circuit, digits) -> list[tuple[dict, dict, int]]:
    """Stabilizer generators of the circuit's action on the basis input
    |digits>, as (x_map, z_map, phase) keyed by output site."""
    ctx = circuit.ctx
    table = StabilizerTable.computational_input(
        ctx, circuit.qudits, dict(zip(circuit.inputs, digits))
    )
    table.conjugate_through(circuit)
    out = []
    for gen in table.generators():
        xs = {circuit.qudits[i]: v for i, v in enumerate(gen.x_exp) if v}
        zs = {circuit.qudits[i]: v for i, v in enumerate(gen.z_exp) if v}
        out.append((xs, zs, gen.phase_exp))
    return out


# -- misc generators -----------------------------------------------------------------


def random_controlled_pauli_circuit(
    ctx: DimensionContext, n: int, gates: int, seed: int, locals_too: bool = False
) -> Circuit:
    rng = np.random.default_rng(seed)
    qudits = tuple(range(1, n + 1))
    kinds = ["CZ", "CX"] + (["Z", "X"] if locals_too else [])
    ops = []
    for _ in range(gates):
        kind = kinds[rng.integers(len(kinds))]
        k = int(rng.integers(1, ctx.d))
        if kind in ("CZ", "CX"):
            i, j = (int(x) + 1 for x in rng.choice(n, size=2, replace=False))
            ops.append(Operation(Gate.cz(k) if kind == "CZ" else Gate.cx(k), (i, j)))
        else:
            q = int(rng.integers(n)) + 1
            ops.append(Operation(Gate.z(k) if kind == "Z" else Gate.x(k), (q,)))
    return Circuit(ctx, qudits, qudits, qudits, tuple(ops))


def all_digit_tuples(d: int, n: int):
    return product(range(d), repeat=n)
