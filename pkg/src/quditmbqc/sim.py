"""Dense statevector simulation over qudits of dimension d.

This is the ground-truth oracle for every transformation in the
repository.  Amplitudes are stored as a flat complex vector indexed in
mixed radix over the state's site ordering, the first site being the
most significant digit.  Gate application and measurement return new
``StateVector`` values; states are never mutated in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .algebra import DimensionContext, xi_p

__all__ = [
    "GateName",
    "Gate",
    "StateVector",
    "apply_gate",
    "measure",
    "measure_branches",
    "fidelity_up_to_phase",
    "gate_matrix",
    "gate_inverse_ops",
    "basis_state",
    "plus_state",
    "random_state",
    "reduced_density_matrix",
    "purity",
]

# headroom for double precision at d**n up to ~1e7 amplitudes: states are
# compared at 1e-9, unitarity at 1e-10, symbolic-vs-matrix algebra at 1e-12
NORM_TOL = 1e-9
UNITARY_TOL = 1e-10
ZERO_BRANCH_TOL = 1e-12


class GateName(str, Enum):
    F = "F"
    FINV = "Finv"
    X = "X"
    Z = "Z"
    P = "P"
    R = "R"
    V = "v"
    CZ = "CZ"
    CX = "CX"
    SWAP = "SWAP"
    FANOUT = "FANOUT"
    MOD = "MOD"
    DIAG = "DIAG"


@dataclass(frozen=True)
class Gate:
    """A gate kind plus its parameters.

    ``k`` is the integer power for X/Z/CZ/CX, ``theta`` the length-d
    angle vector for R and v (v = F followed by the phase layer R),
    ``coeffs`` the Z(d) coefficient vector for FANOUT/MOD, and
    ``angles`` the explicit phase angles of a single-site diagonal.
    """

    name: GateName
    k: int = 1
    theta: tuple[float, ...] | None = None
    coeffs: tuple[int, ...] | None = None
    angles: tuple[float, ...] | None = None

    @staticmethod
    def f() -> "Gate":
        return Gate(GateName.F)

    @staticmethod
    def finv() -> "Gate":
        return Gate(GateName.FINV)

    @staticmethod
    def x(k: int = 1) -> "Gate":
        return Gate(GateName.X, k=k)

    @staticmethod
    def z(k: int = 1) -> "Gate":
        return Gate(GateName.Z, k=k)

    @staticmethod
    def p() -> "Gate":
        return Gate(GateName.P)

    @staticmethod
    def r(theta) -> "Gate":
        return Gate(GateName.R, theta=tuple(float(t) for t in theta))

    @staticmethod
    def v(theta) -> "Gate":
        return Gate(GateName.V, theta=tuple(float(t) for t in theta))

    @staticmethod
    def cz(k: int = 1) -> "Gate":
        return Gate(GateName.CZ, k=k)

    @staticmethod
    def cx(k: int = 1) -> "Gate":
        return Gate(GateName.CX, k=k)

    @staticmethod
    def swap() -> "Gate":
        return Gate(GateName.SWAP)

    @staticmethod
    def fanout(coeffs) -> "Gate":
        return Gate(GateName.FANOUT, coeffs=tuple(int(c) for c in coeffs))

    @staticmethod
    def mod(coeffs) -> "Gate":
        return Gate(GateName.MOD, coeffs=tuple(int(c) for c in coeffs))

    @staticmethod
    def diag(angles) -> "Gate":
        return Gate(GateName.DIAG, angles=tuple(float(a) for a in angles))

    @property
    def arity(self) -> int:
        if self.name in (GateName.FANOUT, GateName.MOD):
            return len(self.coeffs) + 1
        if self.name in (GateName.CZ, GateName.CX, GateName.SWAP):
            return 2
        return 1

    def validate(self, ctx: DimensionContext) -> None:
        d = ctx.d
        if self.name in (GateName.R, GateName.V):
            if self.theta is None or len(self.theta) != d:
                raise ValueError(f"{self.name.value} needs a length-{d} angle vector")
        if self.name == GateName.DIAG:
            if self.angles is None or len(self.angles) != d:
                raise ValueError(f"DIAG needs a length-{d} angle vector")
        if self.name in (GateName.FANOUT, GateName.MOD) and not self.coeffs:
            raise ValueError(f"{self.name.value} needs a nonempty coefficient vector")


def _fourier_matrix(ctx: DimensionContext) -> np.ndarray:
    d = ctx.d
    m, n = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.asarray(ctx.omega) ** (m * n) / math.sqrt(d)


def _phase_gate_diagonal(ctx: DimensionContext) -> np.ndarray:
    return np.array([ctx.phase(xi_p(ctx, n)) for n in range(ctx.d)])


def gate_matrix(gate: Gate, ctx: DimensionContext) -> np.ndarray:
    """Dense unitary of any gate kind, in the site ordering of its targets."""
    gate.validate(ctx)
    d = ctx.d
    name = gate.name
    if name == GateName.F:
        return _fourier_matrix(ctx)
    if name == GateName.FINV:
        return _fourier_matrix(ctx).conj().T
    if name == GateName.X:
        m = np.zeros((d, d), dtype=np.complex128)
        for n in range(d):
            m[(n + gate.k) % d, n] = 1
        return m
    if name == GateName.Z:
        return np.diag(np.asarray(ctx.omega) ** ((gate.k * np.arange(d)) % d)).astype(np.complex128)
    if name == GateName.P:
        return np.diag(_phase_gate_diagonal(ctx))
    if name == GateName.R:
        return np.diag(np.exp(1j * np.asarray(gate.theta)))
    if name == GateName.V:
        return _fourier_matrix(ctx) @ np.diag(np.exp(1j * np.asarray(gate.theta)))
    if name == GateName.DIAG:
        return np.diag(np.exp(1j * np.asarray(gate.angles)))
    if name == GateName.CZ:
        m, n = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        return np.diag((np.asarray(ctx.omega) ** ((gate.k * m * n) % d)).ravel())
    if name == GateName.CX:
        out = np.zeros((d * d, d * d), dtype=np.complex128)
        for m in range(d):
            for n in range(d):
                out[m * d + ((n + gate.k * m) % d), m * d + n] = 1
        return out
    if name == GateName.SWAP:
        out = np.zeros((d * d, d * d), dtype=np.complex128)
        for m in range(d):
            for n in range(d):
                out[n * d + m, m * d + n] = 1
        return out
    if name in (GateName.FANOUT, GateName.MOD):
        nt = len(gate.coeffs)
        dim = d ** (nt + 1)
        out = np.zeros((dim, dim), dtype=np.complex128)
        for idx in range(dim):
            digits = _digits_of(idx, d, nt + 1)
            if name == GateName.FANOUT:
                x = digits[0]
                new = [x] + [(y + c * x) % d for y, c in zip(digits[1:], gate.coeffs)]
            else:
                new = list(digits)
                new[0] = (digits[0] + sum(c * y for c, y in zip(gate.coeffs, digits[1:]))) % d
            out[_index_of(new, d), idx] = 1
        return out
    raise ValueError(f"unknown gate {name!r}")


def gate_inverse_ops(gate: Gate, sites: tuple[int, ...], d: int) -> list[tuple[Gate, tuple[int, ...]]]:
    """Replacement op list implementing the inverse of one gate.

    Every kind inverts to a single gate except v(theta), whose inverse
    is Finv followed by R(-theta).
    """
    name = gate.name
    if name == GateName.F:
        return [(Gate.finv(), sites)]
    if name == GateName.FINV:
        return [(Gate.f(), sites)]
    if name == GateName.X:
        return [(Gate.x((-gate.k) % d), sites)]
    if name == GateName.Z:
        return [(Gate.z((-gate.k) % d), sites)]
    if name == GateName.P:
        ctx = DimensionContext.of(d)
        angles = tuple(-2.0 * math.pi * xi_p(ctx, n) / ctx.D for n in range(d))
        return [(Gate.diag(angles), sites)]
    if name == GateName.R:
        return [(Gate.r(tuple(-t for t in gate.theta)), sites)]
    if name == GateName.V:
        return [(Gate.finv(), sites), (Gate.r(tuple(-t for t in gate.theta)), sites)]
    if name == GateName.CZ:
        return [(Gate.cz((-gate.k) % d), sites)]
    if name == GateName.CX:
        return [(Gate.cx((-gate.k) % d), sites)]
    if name == GateName.SWAP:
        return [(Gate.swap(), sites)]
    if name == GateName.FANOUT:
        return [(Gate.fanout(tuple((-c) % d for c in gate.coeffs)), sites)]
    if name == GateName.MOD:
        return [(Gate.mod(tuple((-c) % d for c in gate.coeffs)), sites)]
    if name == GateName.DIAG:
        return [(Gate.diag(tuple(-a for a in gate.angles)), sites)]
    raise ValueError(f"unknown gate {name!r}")


def _digits_of(index: int, d: int, n: int) -> list[int]:
    digits = []
    for _ in range(n):
        index, r = divmod(index, d)
        digits.append(r)
    return digits[::-1]


def _index_of(digits, d: int) -> int:
    idx = 0
    for g in digits:
        idx = idx * d + g
    return idx


@dataclass(frozen=True)
class StateVector:
    """A pure state over an ordered collection of named qudits.

    ``amplitudes`` has length d**len(sites); the flat index is the
    mixed-radix word whose first (most significant) digit belongs to
    ``sites[0]``.  Removing a site after a destructive measurement
    keeps the identifiers of the remaining sites and recomputes the
    layout.
    """

    ctx: DimensionContext
    sites: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("duplicate site identifiers")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.ctx.d ** len(self.sites),):
            raise ValueError("amplitude vector has wrong length")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def site_axis(self, site: int) -> int:
        try:
            return self.sites.index(site)
        except ValueError:
            raise KeyError(f"site {site} not in state") from None

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.ctx.d,) * self.num_sites)

    def with_sites_order(self, new_order) -> "StateVector":
        """Same state, amplitudes relaid out for a new site ordering."""
        new_order = tuple(new_order)
        if set(new_order) != set(self.sites) or len(new_order) != len(self.sites):
            raise ValueError("new ordering must be a permutation of the sites")
        if new_order == self.sites:
            return self
        perm = [self.sites.index(s) for s in new_order]
        amps = np.transpose(self.tensor(), perm).reshape(-1)
        return StateVector(self.ctx, new_order, np.ascontiguousarray(amps))

    def extend(self, other: "StateVector") -> "StateVector":
        """Tensor product, appending the other state's sites after ours."""
        if set(self.sites) & set(other.sites):
            raise ValueError("site sets overlap")
        amps = np.kron(self.amplitudes, other.amplitudes)
        return StateVector(self.ctx, self.sites + other.sites, amps)


def basis_state(ctx: DimensionContext, sites, digits) -> StateVector:
    sites = tuple(sites)
    digits = tuple(int(v) % ctx.d for v in digits)
    if len(digits) != len(sites):
        raise ValueError("one digit per site required")
    amps = np.zeros(ctx.d ** len(sites), dtype=np.complex128)
    amps[_index_of(digits, ctx.d)] = 1.0
    return StateVector(ctx, sites, amps)


def plus_state(ctx: DimensionContext, site: int, n: int = 0) -> StateVector:
    """The conjugate-basis state F|n> on a single site."""
    amps = _fourier_matrix(ctx)[:, n % ctx.d].copy()
    return StateVector(ctx, (site,), amps)


def random_state(ctx: DimensionContext, sites, rng: np.random.Generator) -> StateVector:
    sites = tuple(sites)
    dim = ctx.d ** len(sites)
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    amps /= np.linalg.norm(amps)
    return StateVector(ctx, sites, amps)


def _apply_matrix(state: StateVector, matrix: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    """Apply a d^k x d^k matrix on the target sites; returns a flat array."""
    d = state.ctx.d
    k = len(targets)
    axes = [state.site_axis(t) for t in targets]
    tensor = state.tensor()
    moved = np.moveaxis(tensor, axes, range(k))
    shaped = moved.reshape(d**k, -1)
    shaped = matrix @ shaped
    moved = shaped.reshape((d,) * k + moved.shape[k:])
    return np.ascontiguousarray(np.moveaxis(moved, range(k), axes)).reshape(-1)


def _digit_grid(state: StateVector, targets: tuple[int, ...]) -> list[np.ndarray]:
    """Per-target digit value of every flat amplitude index."""
    d = state.ctx.d
    n = state.num_sites
    idx = np.arange(state.amplitudes.size)
    grids = []
    for t in targets:
        pos = state.site_axis(t)
        weight = d ** (n - 1 - pos)
        grids.append((idx // weight) % d)
    return grids


def _apply_permutation(state: StateVector, gate: Gate, targets: tuple[int, ...]) -> np.ndarray:
    """Basis-permutation gates (X, CX, SWAP, FANOUT, MOD) via index shifts."""
    d = state.ctx.d
    n = state.num_sites
    idx = np.arange(state.amplitudes.size)
    grids = _digit_grid(state, targets)
    weights = [d ** (n - 1 - state.site_axis(t)) for t in targets]
    name = gate.name
    if name == GateName.X:
        new = [(grids[0] + gate.k) % d]
    elif name == GateName.CX:
        new = [grids[0], (grids[1] + gate.k * grids[0]) % d]
    elif name == GateName.SWAP:
        new = [grids[1], grids[0]]
    elif name == GateName.FANOUT:
        new = [grids[0]] + [(y + c * grids[0]) % d for y, c in zip(grids[1:], gate.coeffs)]
    elif name == GateName.MOD:
        total = grids[0].copy()
        for c, y in zip(gate.coeffs, grids[1:]):
            total = total + c * y
        new = [total % d] + grids[1:]
    else:
        raise ValueError(name)
    dest = idx.copy()
    for g_old, g_new, w in zip(grids, new, weights):
        dest = dest + (g_new - g_old) * w
    out = np.zeros_like(state.amplitudes)
    out[dest] = state.amplitudes
    return out


def _apply_diagonal(state: StateVector, gate: Gate, targets: tuple[int, ...]) -> np.ndarray:
    d = state.ctx.d
    grids = _digit_grid(state, targets)
    name = gate.name
    if name == GateName.Z:
        phases = np.asarray(state.ctx.omega) ** ((gate.k * grids[0]) % d)
    elif name == GateName.CZ:
        phases = np.asarray(state.ctx.omega) ** ((gate.k * grids[0] * grids[1]) % d)
    elif name == GateName.P:
        phases = _phase_gate_diagonal(state.ctx)[grids[0]]
    elif name == GateName.R:
        phases = np.exp(1j * np.asarray(gate.theta))[grids[0]]
    elif name == GateName.DIAG:
        phases = np.exp(1j * np.asarray(gate.angles))[grids[0]]
    else:
        raise ValueError(name)
    return state.amplitudes * phases


_PERMUTATION = {GateName.X, GateName.CX, GateName.SWAP, GateName.FANOUT, GateName.MOD}
_DIAGONAL = {GateName.Z, GateName.CZ, GateName.P, GateName.R, GateName.DIAG}


def apply_gate(state: StateVector, gate: Gate, targets) -> StateVector:
    """Apply a gate to the target sites, returning the new state."""
    targets = tuple(targets)
    gate.validate(state.ctx)
    if len(targets) != gate.arity:
        raise ValueError(f"{gate.name.value} expects {gate.arity} targets, got {len(targets)}")
    if len(set(targets)) != len(targets):
        raise ValueError("targets must be distinct")
    for t in targets:
        state.site_axis(t)
    if gate.name in _PERMUTATION:
        amps = _apply_permutation(state, gate, targets)
    elif gate.name in _DIAGONAL:
        amps = _apply_diagonal(state, gate, targets)
    else:
        amps = _apply_matrix(state, gate_matrix(gate, state.ctx), targets)
    return StateVector(state.ctx, state.sites, amps)


def _remove_site(state: StateVector, site: int, row: int, amps_tensor: np.ndarray) -> StateVector:
    axis = state.site_axis(site)
    taken = np.take(amps_tensor, row, axis=axis)
    new_sites = tuple(s for s in state.sites if s != site)
    flat = np.ascontiguousarray(taken).reshape(-1)
    return StateVector(state.ctx, new_sites, flat)


def _measurement_frame(state: StateVector, site: int, theta, s_val: int, t_val: int) -> StateVector:
    """Rotate the measured site: apply v(theta) X^s Z^t so outcome j is the
    computational-basis result."""
    d = state.ctx.d
    work = state
    if t_val % d:
        work = apply_gate(work, Gate.z(t_val % d), (site,))
    if s_val % d:
        work = apply_gate(work, Gate.x(s_val % d), (site,))
    return apply_gate(work, Gate.v(theta), (site,))


@dataclass(frozen=True)
class MeasureResult:
    outcome: int
    probability: float
    state: StateVector


def _outcome_probabilities(state: StateVector, site: int) -> np.ndarray:
    axis = state.site_axis(site)
    tensor = np.abs(state.tensor()) ** 2
    other = tuple(i for i in range(state.num_sites) if i != axis)
    return tensor.sum(axis=other)


def measure(
    state: StateVector,
    site: int,
    theta,
    s_val: int = 0,
    t_val: int = 0,
    rng: np.random.Generator | None = None,
    forced: int | None = None,
) -> MeasureResult:
    """Destructive single-site measurement.

    Applies v(theta) X^s Z^t to the site, samples an outcome j from the
    computational-basis distribution (or takes ``forced``), projects,
    renormalizes and removes the site from the state.
    """
    rotated = _measurement_frame(state, site, theta, s_val, t_val)
    probs = _outcome_probabilities(rotated, site)
    if forced is not None:
        j = int(forced) % state.ctx.d
        p = float(probs[j])
        if p < ZERO_BRANCH_TOL:
            raise ValueError(f"forced outcome {j} on site {site} has probability {p:.3e}")
    else:
        if rng is None:
            raise ValueError("measurement needs an rng unless the outcome is forced")
        total = probs.sum()
        j = int(rng.choice(state.ctx.d, p=probs / total))
        p = float(probs[j])
    tensor = rotated.tensor()
    post = _remove_site(rotated, site, j, tensor)
    post = StateVector(post.ctx, post.sites, post.amplitudes / math.sqrt(p))
    return MeasureResult(j, p, post)


def measure_branches(
    state: StateVector,
    site: int,
    theta,
    s_val: int = 0,
    t_val: int = 0,
    min_probability: float = ZERO_BRANCH_TOL,
) -> list[MeasureResult]:
    """All measurement branches (outcome, probability, normalized post-state)."""
    rotated = _measurement_frame(state, site, theta, s_val, t_val)
    probs = _outcome_probabilities(rotated, site)
    tensor = rotated.tensor()
    branches = []
    for j in range(state.ctx.d):
        p = float(probs[j])
        if p < min_probability:
            continue
        post = _remove_site(rotated, site, j, tensor)
        post = StateVector(post.ctx, post.sites, post.amplitudes / math.sqrt(p))
        branches.append(MeasureResult(j, p, post))
    return branches


def fidelity_up_to_phase(a: StateVector, b: StateVector) -> float:
    """|<a|b>| after aligning site orderings; 1 means equal up to global phase."""
    if a.ctx != b.ctx:
        raise ValueError("states live in different dimensions")
    if set(a.sites) != set(b.sites):
        raise ValueError(f"site sets differ: {sorted(a.sites)} vs {sorted(b.sites)}")
    b_aligned = b.with_sites_order(a.sites)
    return float(abs(np.vdot(a.amplitudes, b_aligned.amplitudes)))


def reduced_density_matrix(state: StateVector, keep) -> np.ndarray:
    """Partial trace onto the kept sites (in the order given)."""
    keep = tuple(keep)
    d = state.ctx.d
    axes = [state.site_axis(s) for s in keep]
    rest = [i for i in range(state.num_sites) if i not in axes]
    tensor = np.transpose(state.tensor(), axes + rest)
    mat = tensor.reshape(d ** len(keep), -1)
    return mat @ mat.conj().T


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))
