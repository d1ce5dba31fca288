"""The test oracles get validated here against dense ground truth on
instances small enough to simulate directly."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from helpers import (
    PhasePoly,
    StabilizerTable,
    clifford_word,
    longest_dependent_path,
    max_diff_up_to_phase,
    phase_poly_equivalent,
    random_controlled_pauli_circuit,
    target_stabilizers,
)

from quditmbqc.algebra import DimensionContext, pauli_to_matrix
from quditmbqc.circuit import Circuit, Operation, circuit_unitary, simulate_circuit
from quditmbqc.generate import random_clifford_circuit
from quditmbqc.sim import Gate, GateName, basis_state, gate_matrix


def ctx_of(d):
    return DimensionContext.of(d)


class TestDepthOracle:
    def test_chains_and_parallel(self):
        items = [((1, 2), (), None), ((3, 4), (), None), ((2, 3), (), None)]
        assert longest_dependent_path(items) == 2
        items = [((1,), (), 1), ((2,), (1,), 2), ((3,), (2,), None)]
        assert longest_dependent_path(items) == 3
        assert longest_dependent_path([]) == 0


class TestPhasePolyOracle:
    @pytest.mark.parametrize("d,seed", [(2, 0), (2, 1), (3, 2), (3, 3)])
    def test_agrees_with_dense_on_equal_circuits(self, d, seed):
        ctx = ctx_of(d)
        a = random_controlled_pauli_circuit(ctx, 3, 10, seed, locals_too=True)
        # a reshuffled-but-equal variant: append a gate and its inverse
        extra = Operation(Gate.cx(1), (1, 2))
        undo = Operation(Gate.cx((d - 1) % d), (1, 2))
        b = a.with_ops(list(a.ops) + [extra, undo])
        assert phase_poly_equivalent(b, a)
        assert max_diff_up_to_phase(circuit_unitary(a), circuit_unitary(b)) < 1e-12

    @pytest.mark.parametrize("d,seed", [(2, 4), (3, 5)])
    def test_flags_genuinely_different_circuits(self, d, seed):
        ctx = ctx_of(d)
        a = random_controlled_pauli_circuit(ctx, 3, 8, seed)
        for tweak in [
            Operation(Gate.cz(1), (1, 3)),
            Operation(Gate.x(1), (2,)),
            Operation(Gate.z(1), (1,)),
            Operation(Gate.cx(1), (3, 1)),
        ]:
            b = a.with_ops(list(a.ops) + [tweak])
            dense_differs = max_diff_up_to_phase(circuit_unitary(a), circuit_unitary(b)) > 1e-6
            assert phase_poly_equivalent(b, a) == (not dense_differs)

    def test_handles_fanout_family_and_swap(self):
        ctx = ctx_of(3)
        qudits = (1, 2, 3, 4)
        ops = (
            Operation(Gate.fanout((1, 2)), (1, 2, 3)),
            Operation(Gate.swap(), (2, 4)),
            Operation(Gate.mod((2, 1)), (4, 1, 3)),
            Operation(Gate.cz(2), (1, 4)),
        )
        a = Circuit(ctx, qudits, qudits, qudits, ops)
        prefix = PhasePoly(ctx, qudits).run(a)
        # compare against the dense unitary through a round trip: a followed
        # by its gate-by-gate inverse must be the identity polynomial
        from quditmbqc.circuit import inverse_circuit

        round_trip = a.with_ops(list(a.ops) + list(inverse_circuit(a).ops))
        identity = Circuit(ctx, qudits, qudits, qudits, ())
        assert phase_poly_equivalent(round_trip, identity)
        assert prefix.rows  # simulation actually ran

    def test_rejects_non_polynomial_diagonal(self):
        ctx = ctx_of(3)
        poly = PhasePoly(ctx, (1,))
        with pytest.raises(ValueError):
            poly.apply(Gate.r((0.0, 0.123, 0.77)), (1,))


class TestStabilizerOracle:
    @pytest.mark.parametrize("d,seed", [(2, 0), (2, 1), (3, 2), (3, 3)])
    def test_generators_stabilize_the_dense_state(self, d, seed):
        ctx = ctx_of(d)
        circ = random_clifford_circuit(ctx, 3, 9, seed=seed)
        digits = (1, 0, (seed + 1) % d)
        table = StabilizerTable.computational_input(ctx, circ.qudits, dict(zip(circ.inputs, digits)))
        table.conjugate_through(circ)
        final = simulate_circuit(circ, basis_state(ctx, circ.inputs, digits))
        vec = final.amplitudes
        for gen in table.generators():
            m = pauli_to_matrix(gen)
            assert np.max(np.abs(m @ vec - vec)) < 1e-9

    @pytest.mark.parametrize("d", [2, 3])
    def test_membership_accepts_targets_and_rejects_corruption(self, d):
        ctx = ctx_of(d)
        circ = random_clifford_circuit(ctx, 3, 9, seed=11)
        digits = (0, 1, 1)
        table = StabilizerTable.computational_input(ctx, circ.qudits, dict(zip(circ.inputs, digits)))
        table.conjugate_through(circ)
        targets = target_stabilizers(circ, digits)
        for xs, zs, ph in targets:
            assert table.contains(xs, zs, ph)
            # a wrong phase is a different operator: must be rejected
            assert not table.contains(xs, zs, (ph + 1) % ctx.D)
        # stabilizers of a corrupted circuit must not all pass
        corrupted = circ.with_ops(list(circ.ops) + [Operation(Gate.p(), (circ.qudits[0],))])
        bad = target_stabilizers(corrupted, digits)
        assert not all(table.contains(xs, zs, ph) for xs, zs, ph in bad)

    @pytest.mark.parametrize("d", [2, 3])
    def test_word_expansion_matches_gate_matrices(self, d):
        # every gate kind used by the Clifford pipelines expands to a word
        # whose elementary steps multiply back to the gate, up to phase
        ctx = ctx_of(d)
        candidates = [
            (Gate.f(), 1),
            (Gate.finv(), 1),
            (Gate.p(), 1),
            (Gate.x(d - 1), 1),
            (Gate.z(1), 1),
            (Gate.cz(1), 2),
            (Gate.cx(d - 1), 2),
            (Gate.swap(), 2),
            (Gate.fanout((1, d - 1)), 3),
            (Gate.mod((1, 1)), 3),
            (Gate.v((0.0,) * d), 1),
        ]
        f = gate_matrix(Gate.f(), ctx)
        p = gate_matrix(Gate.p(), ctx)
        cz = gate_matrix(Gate.cz(), ctx)
        for gate, arity in candidates:
            sites = tuple(range(arity))
            total = np.eye(d**arity, dtype=complex)
            for step in clifford_word(ctx, gate, sites):
                if step[0] == "F":
                    m = _embed_on(f, step[1:], sites, d)
                elif step[0] == "P":
                    m = _embed_on(p, step[1:], sites, d)
                elif step[0] == "CZ":
                    m = _embed_on(cz, step[1:], sites, d)
                else:
                    _, s, a, b = step
                    xa = np.linalg.matrix_power(gate_matrix(Gate.x(1), ctx), a)
                    zb = np.linalg.matrix_power(gate_matrix(Gate.z(1), ctx), b)
                    m = _embed_on(xa @ zb, (s,), sites, d)
                total = m @ total
            want = gate_matrix(gate, ctx)
            assert max_diff_up_to_phase(want, total) < 1e-10, gate


def _embed_on(m, where, sites, d):
    n = len(sites)
    axes = [sites.index(s) for s in where]
    k = len(axes)
    tensor = np.eye(d**n, dtype=complex).reshape((d,) * (2 * n))
    src = np.moveaxis(tensor, axes, range(k)).reshape(d**k, -1)
    src = m @ src
    tensor = np.moveaxis(src.reshape((d,) * k + (d,) * (2 * n - k)), range(k), axes)
    return tensor.reshape(d**n, d**n)
