"""Semantics-preserving pattern rewrite passes.

``standardise`` moves every entangling command to the front, absorbs
interleaved Pauli corrections into the measurements they precede, and
merges what remains into at most one X and one Z correction per output
qudit.  ``pauli_simplify`` drops redundant dependencies from the two
distinguished measurement directions (the Fourier direction theta = 0
and the phase-gate direction theta = p).  ``signal_shift`` removes all
Z-type dependencies by classical post-processing.  Running the three
passes in that order yields a completely standard pattern.
"""

from __future__ import annotations

import math

from .algebra import DimensionContext, xi_p
from .pattern import (
    CorrectX,
    CorrectZ,
    Entangle,
    Measure,
    Pattern,
    Signal,
    pattern_depth_and_size,
    require_valid,
)

__all__ = [
    "zero_angles",
    "pauli_angles",
    "angles_match",
    "is_fourier_direction",
    "is_phase_direction",
    "standardise",
    "pauli_simplify",
    "signal_shift",
    "completely_standardise",
    "is_standard",
    "is_completely_standard",
]

ANGLE_TOL = 1e-12


def zero_angles(d: int) -> tuple[float, ...]:
    """Angle vector of the Fourier-direction measurement: v(0) = F."""
    return (0.0,) * d


def pauli_angles(d: int) -> tuple[float, ...]:
    """Angle vector p with v(p) = F.P, i.e. p_j = pi * j * (j + delta_d) / d."""
    ctx = DimensionContext.of(d)
    # equivalently 2*pi*xi_p(j)/D, which keeps the entries exactly
    # representable for the runtime phase-gate diagonal
    return tuple(2.0 * math.pi * xi_p(ctx, j) / ctx.D for j in range(d))


def angles_match(theta, reference, tol: float = ANGLE_TOL) -> bool:
    """Exact match for canonically constructed vectors, small-tolerance
    comparison modulo 2*pi otherwise."""
    if tuple(theta) == tuple(reference):
        return True
    for a, b in zip(theta, reference):
        diff = (a - b) % (2.0 * math.pi)
        if min(diff, 2.0 * math.pi - diff) > tol:
            return False
    return len(tuple(theta)) == len(tuple(reference))


def is_fourier_direction(theta, d: int) -> bool:
    return angles_match(theta, zero_angles(d))


def is_phase_direction(theta, d: int) -> bool:
    return angles_match(theta, pauli_angles(d))


def _split(seq):
    es = [c for c in seq if isinstance(c, Entangle)]
    ms = [c for c in seq if isinstance(c, Measure)]
    cs = [c for c in seq if isinstance(c, (CorrectX, CorrectZ))]
    return es, ms, cs


def is_standard(p: Pattern) -> bool:
    """Entangling commands first, then measurements, then corrections on
    output qudits only."""
    seq = p.seq
    outputs = set(p.outputs)
    stage = 0
    for cmd in seq:
        if isinstance(cmd, Entangle):
            if stage > 0:
                return False
        elif isinstance(cmd, Measure):
            if stage > 1:
                return False
            stage = 1
        else:
            stage = 2
            if cmd.site not in outputs:
                return False
    return True


def is_completely_standard(p: Pattern) -> bool:
    """Standard form, no Z dependencies anywhere, and no X dependency on
    Fourier-direction measurements."""
    if not is_standard(p):
        return False
    for cmd in p.seq:
        if isinstance(cmd, Measure):
            if not cmd.z_signal.is_zero():
                return False
            if is_fourier_direction(cmd.theta, p.ctx.d) and not cmd.x_signal.is_zero():
                return False
    return True


def standardise(p: Pattern) -> Pattern:
    """Rewrite into standard form: all E first, then M, then output corrections.

    A single left-to-right pass accumulates, per qudit, the net pending
    correction X^sx Z^sz floating at the current position (the X/Z
    order inside a pending pair only affects a global phase).  An
    entangling command jumps over the pending pair at the cost of a
    Z^sx correction on the opposite qudit; a measurement absorbs the
    pending pair into its signals; whatever remains at the end lands on
    the output qudits as one X then one Z correction each.
    """
    require_valid(p)
    d = p.ctx.d
    pending_x: dict[int, Signal] = {}
    pending_z: dict[int, Signal] = {}

    def px(q):
        return pending_x.get(q, Signal.zero(d))

    def pz(q):
        return pending_z.get(q, Signal.zero(d))

    entangles: list[Entangle] = []
    measures: list[Measure] = []
    for cmd in p.seq:
        if isinstance(cmd, Entangle):
            sx_i, sx_j = px(cmd.i), px(cmd.j)
            if not sx_i.is_zero():
                pending_z[cmd.j] = pz(cmd.j) + sx_i
            if not sx_j.is_zero():
                pending_z[cmd.i] = pz(cmd.i) + sx_j
            entangles.append(cmd)
        elif isinstance(cmd, Measure):
            measures.append(
                Measure(
                    cmd.site,
                    cmd.theta,
                    cmd.x_signal + px(cmd.site),
                    cmd.z_signal + pz(cmd.site),
                )
            )
            pending_x.pop(cmd.site, None)
            pending_z.pop(cmd.site, None)
        elif isinstance(cmd, CorrectX):
            pending_x[cmd.site] = px(cmd.site) + cmd.signal
        else:
            pending_z[cmd.site] = pz(cmd.site) + cmd.signal
    tail = []
    for q in sorted(set(pending_x) | set(pending_z)):
        sx, sz = px(q), pz(q)
        if not sx.is_zero():
            tail.append(CorrectX(q, sx))
        if not sz.is_zero():
            tail.append(CorrectZ(q, sz))
    return p.with_seq(tuple(entangles) + tuple(measures) + tuple(tail))


def pauli_simplify(p: Pattern) -> Pattern:
    """Drop dependencies that the two Clifford measurement directions ignore.

    Fourier-direction measurements lose their X dependency; phase-
    direction measurements convert the X dependency into an extra Z
    dependency.
    """
    d = p.ctx.d
    seq = []
    for cmd in p.seq:
        if isinstance(cmd, Measure):
            if is_fourier_direction(cmd.theta, d):
                cmd = Measure(cmd.site, cmd.theta, Signal.zero(d), cmd.z_signal)
            elif is_phase_direction(cmd.theta, d):
                cmd = Measure(cmd.site, cmd.theta, Signal.zero(d), cmd.x_signal + cmd.z_signal)
        seq.append(cmd)
    return p.with_seq(seq)


def signal_shift(p: Pattern) -> Pattern:
    """Remove every Z dependency, re-pointing later signal references.

    Processing measurements in execution order, each measurement's Z
    signal t is dropped and every later reference to that outcome s_i
    is replaced by s_i - t (classical post-processing mod d).
    """
    d = p.ctx.d
    shifts: dict[int, Signal] = {}

    def substituted(sig: Signal) -> Signal:
        # shift expressions are already fully resolved, so the corrections
        # are computed from the argument's own coefficients in one shot
        out = sig
        for q, shift in shifts.items():
            c = sig.coefficient(q)
            if c:
                out = out + shift.scaled(-c)
        return out

    seq = []
    for cmd in p.seq:
        if isinstance(cmd, Measure):
            s = substituted(cmd.x_signal)
            t = substituted(cmd.z_signal)
            if not t.is_zero():
                shifts[cmd.site] = t
            seq.append(Measure(cmd.site, cmd.theta, s, Signal.zero(d)))
        elif isinstance(cmd, CorrectX):
            seq.append(CorrectX(cmd.site, substituted(cmd.signal)))
        elif isinstance(cmd, CorrectZ):
            seq.append(CorrectZ(cmd.site, substituted(cmd.signal)))
        else:
            seq.append(cmd)
    return p.with_seq(seq)


def completely_standardise(p: Pattern) -> Pattern:
    """standardise, then pauli_simplify, then signal_shift.

    Depth never increases; this is asserted.  Size can grow by a
    handful of correction commands: pushing an entangling command past
    an X correction necessarily leaves a Z correction on the partner
    qudit, and when the partner is an output that previously carried no
    correction this is a new command (smallest case: the composite of
    one teleportation step followed by one entangling command).
    """
    before = pattern_depth_and_size(p)
    out = signal_shift(pauli_simplify(standardise(p)))
    after = pattern_depth_and_size(out)
    if after.depth > before.depth:
        raise AssertionError(
            f"standardisation increased depth: {before.depth} -> {after.depth}"
        )
    return out
