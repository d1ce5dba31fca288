import numpy as np
import pytest

from quditmbqc.algebra import DimensionContext
from quditmbqc.sim import (
    Gate,
    StateVector,
    apply_gate,
    basis_state,
    fidelity_up_to_phase,
    gate_inverse_ops,
    gate_matrix,
    measure,
    measure_branches,
    plus_state,
    purity,
    random_state,
    reduced_density_matrix,
)


def ctx_of(d):
    return DimensionContext.of(d)


def random_theta(rng, d):
    return tuple(rng.uniform(0.0, 2.0 * np.pi, size=d))


ALL_GATE_BUILDERS = [
    lambda d, rng: Gate.f(),
    lambda d, rng: Gate.finv(),
    lambda d, rng: Gate.x(int(rng.integers(1, d))),
    lambda d, rng: Gate.z(int(rng.integers(1, d))),
    lambda d, rng: Gate.p(),
    lambda d, rng: Gate.r(random_theta(rng, d)),
    lambda d, rng: Gate.v(random_theta(rng, d)),
    lambda d, rng: Gate.cz(int(rng.integers(1, d))),
    lambda d, rng: Gate.cx(int(rng.integers(1, d))),
    lambda d, rng: Gate.swap(),
    lambda d, rng: Gate.fanout(tuple(rng.integers(d, size=2))),
    lambda d, rng: Gate.mod(tuple(rng.integers(d, size=2))),
    lambda d, rng: Gate.diag(random_theta(rng, d)),
]


class TestGateMatrices:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_every_kind_is_unitary(self, d):
        ctx = ctx_of(d)
        rng = np.random.default_rng(d)
        for build in ALL_GATE_BUILDERS:
            g = build(d, rng)
            u = gate_matrix(g, ctx)
            assert np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) < 1e-10, g

    def test_v_is_fourier_after_phases(self):
        ctx = ctx_of(3)
        rng = np.random.default_rng(0)
        theta = random_theta(rng, 3)
        got = gate_matrix(Gate.v(theta), ctx)
        want = gate_matrix(Gate.f(), ctx) @ gate_matrix(Gate.r(theta), ctx)
        assert np.max(np.abs(got - want)) < 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_mod_is_fourier_conjugated_fanout(self, d):
        # MOD(v) = F^(x) FANOUT(-v) Finv^(x) for arity up to 3
        ctx = ctx_of(d)
        for coeffs in [(1,), (1, 1), (2 % d, 1)]:
            nq = len(coeffs) + 1
            f = gate_matrix(Gate.f(), ctx)
            layer = f
            for _ in range(nq - 1):
                layer = np.kron(layer, f)
            neg = tuple((-c) % d for c in coeffs)
            got = layer @ gate_matrix(Gate.fanout(neg), ctx) @ layer.conj().T
            assert np.max(np.abs(got - gate_matrix(Gate.mod(coeffs), ctx))) < 1e-10

    @pytest.mark.parametrize("d", [2, 3, 4])
    @pytest.mark.parametrize("coeffs", [(1,), (1, 1)])
    def test_fanout_has_order_d(self, d, coeffs):
        ctx = ctx_of(d)
        u = gate_matrix(Gate.fanout(coeffs), ctx)
        dim = d ** (len(coeffs) + 1)
        assert np.max(np.abs(np.linalg.matrix_power(u, d) - np.eye(dim))) < 1e-10

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_inverse_ops(self, d):
        ctx = ctx_of(d)
        rng = np.random.default_rng(d + 5)
        for build in ALL_GATE_BUILDERS:
            g = build(d, rng)
            u = gate_matrix(g, ctx)
            inv = np.eye(u.shape[0], dtype=complex)
            for ig, _ in gate_inverse_ops(g, (0,) * g.arity, d):
                inv = gate_matrix(ig, ctx) @ inv
            assert np.max(np.abs(inv @ u - np.eye(u.shape[0]))) < 1e-10, g


class TestApplyGate:
    def test_fourier_on_zero_is_uniform(self):
        ctx = ctx_of(3)
        out = apply_gate(basis_state(ctx, (0,), (0,)), Gate.f(), (0,))
        assert np.max(np.abs(out.amplitudes - np.full(3, 1 / np.sqrt(3)))) < 1e-12

    def test_fanout_adds_control_to_targets(self):
        ctx = ctx_of(3)
        state = basis_state(ctx, (0, 1, 2), (1, 0, 2))
        out = apply_gate(state, Gate.fanout((1, 1)), (0, 1, 2))
        want = basis_state(ctx, (0, 1, 2), (1, 1, 0))
        assert fidelity_up_to_phase(out, want) > 1 - 1e-12

    def test_cz_phases_one_one(self):
        ctx = ctx_of(2)
        out = apply_gate(basis_state(ctx, (0, 1), (1, 1)), Gate.cz(), (0, 1))
        assert abs(out.amplitudes[3] + 1) < 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_specialized_paths_match_dense(self, d):
        ctx = ctx_of(d)
        rng = np.random.default_rng(d + 1)
        sites = (5, 9, 11)
        for build in ALL_GATE_BUILDERS:
            g = build(d, rng)
            target = sites[: g.arity]
            state = random_state(ctx, sites, rng)
            got = apply_gate(state, g, target)
            from quditmbqc.sim import _apply_matrix

            want = _apply_matrix(state, gate_matrix(g, ctx), target)
            assert np.max(np.abs(got.amplitudes - want)) < 1e-10, g

    def test_norm_preserved_over_many_gates(self):
        ctx = ctx_of(2)
        rng = np.random.default_rng(3)
        state = random_state(ctx, (0, 1, 2, 3), rng)
        for _ in range(1000):
            g = ALL_GATE_BUILDERS[rng.integers(len(ALL_GATE_BUILDERS))](2, rng)
            targets = tuple(int(t) for t in rng.choice(4, size=g.arity, replace=False))
            state = apply_gate(state, g, targets)
        assert abs(state.norm() - 1) < 1e-9

    def test_arity_and_site_errors(self):
        ctx = ctx_of(2)
        state = basis_state(ctx, (0, 1), (0, 0))
        with pytest.raises(ValueError):
            apply_gate(state, Gate.cz(), (0,))
        with pytest.raises(KeyError):
            apply_gate(state, Gate.f(), (7,))
        with pytest.raises(ValueError):
            apply_gate(state, Gate.cz(), (0, 0))


class TestMeasure:
    def test_conjugate_basis_state_is_deterministic(self):
        ctx = ctx_of(2)
        res = measure(plus_state(ctx, 0), 0, (0.0, 0.0), forced=0)
        assert res.outcome == 0 and abs(res.probability - 1) < 1e-12

    def test_unbiased_on_computational_state(self):
        ctx = ctx_of(3)
        branches = measure_branches(basis_state(ctx, (0,), (0,)), 0, (0.0, 0.0, 0.0))
        assert len(branches) == 3
        for b in branches:
            assert abs(b.probability - 1 / 3) < 1e-9

    def test_branch_probabilities_sum_to_one(self):
        ctx = ctx_of(3)
        rng = np.random.default_rng(4)
        state = random_state(ctx, (0, 1), rng)
        branches = measure_branches(state, 0, random_theta(rng, 3), 1, 2)
        assert abs(sum(b.probability for b in branches) - 1) < 1e-9
        for b in branches:
            assert abs(b.state.norm() - 1) < 1e-9

    def test_distribution_independent_of_unentangled_partner(self):
        ctx = ctx_of(2)
        rng = np.random.default_rng(5)
        theta = random_theta(rng, 2)
        psi = random_state(ctx, (0,), rng)
        reference = None
        for _ in range(5):
            phi = random_state(ctx, (1,), rng)
            probs = sorted(
                (b.outcome, round(b.probability, 12)) for b in measure_branches(psi.extend(phi), 0, theta)
            )
            if reference is None:
                reference = probs
            assert probs == reference

    def test_forced_zero_probability_branch_raises(self):
        ctx = ctx_of(2)
        # measuring F|+_0> in the rotated frame leaves outcome 1 impossible
        with pytest.raises(ValueError):
            measure(plus_state(ctx, 0), 0, (0.0, 0.0), forced=1)

    def test_sampled_reproducible(self):
        ctx = ctx_of(3)
        rng_state = np.random.default_rng(6)
        state = random_state(ctx, (0, 1), rng_state)
        outs = []
        for _ in range(2):
            rng = np.random.default_rng(42)
            res = measure(state, 0, (0.1, 0.2, 0.3), rng=rng)
            outs.append((res.outcome, res.probability))
        assert outs[0] == outs[1]


class TestFidelityAndLayout:
    def test_global_phase_invariance(self):
        ctx = ctx_of(3)
        rng = np.random.default_rng(8)
        psi = random_state(ctx, (0, 1), rng)
        rotated = StateVector(ctx, psi.sites, np.exp(0.7j) * psi.amplitudes)
        assert abs(fidelity_up_to_phase(psi, rotated) - 1) < 1e-12

    def test_orthogonal_states(self):
        ctx = ctx_of(2)
        a = basis_state(ctx, (0,), (0,))
        b = basis_state(ctx, (0,), (1,))
        assert fidelity_up_to_phase(a, b) < 1e-12

    def test_mutually_unbiased_overlap_d4(self):
        ctx = ctx_of(4)
        assert abs(fidelity_up_to_phase(plus_state(ctx, 0), basis_state(ctx, (0,), (0,))) - 0.5) < 1e-12

    def test_site_order_alignment(self):
        ctx = ctx_of(2)
        rng = np.random.default_rng(9)
        psi = random_state(ctx, (0, 1, 2), rng)
        shuffled = psi.with_sites_order((2, 0, 1))
        assert abs(fidelity_up_to_phase(psi, shuffled) - 1) < 1e-12

    def test_site_set_mismatch(self):
        ctx = ctx_of(2)
        with pytest.raises(ValueError):
            fidelity_up_to_phase(basis_state(ctx, (0,), (0,)), basis_state(ctx, (1,), (0,)))

    def test_first_site_most_significant(self):
        ctx = ctx_of(3)
        state = basis_state(ctx, (4, 7), (2, 1))
        assert abs(state.amplitudes[2 * 3 + 1] - 1) < 1e-12

    def test_reduced_density_and_purity(self):
        ctx = ctx_of(2)
        rng = np.random.default_rng(11)
        psi = random_state(ctx, (0,), rng).extend(random_state(ctx, (1,), rng))
        rho = reduced_density_matrix(psi, (0,))
        assert abs(purity(rho) - 1) < 1e-12
        bell = StateVector(ctx, (0, 1), np.array([1, 0, 0, 1]) / np.sqrt(2))
        assert abs(purity(reduced_density_matrix(bell, (0,))) - 0.5) < 1e-12
