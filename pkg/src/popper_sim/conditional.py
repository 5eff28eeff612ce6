"""Finite-dimensional checks of uncertainty relations under conditioning.

Bipartite pure states are stored subsystem-1-major: amplitude index
``i * d2 + j`` belongs to ``|i>_1 |j>_2``. Operators on one subsystem are
given as local ``d x d`` matrices and embedded with ``kron`` when needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import Grid1D

__all__ = [
    "PureState",
    "DensityOperator",
    "Observable",
    "Projector",
    "Unitary",
    "TwoPhotonField",
    "RobertsonResult",
    "robertson_check",
    "project",
    "time_shift_projector",
    "ordering_independence_check",
    "conditional_robertson_check",
    "reduced_density",
    "phase_matching_uncertainty",
    "sum_momentum_distribution",
    "discretized_source_state",
    "random_state",
    "random_unitary",
    "random_hermitian",
    "random_projector",
    "position_momentum_pair",
    "clock_shift",
    "run_randomized_suite",
]

_TOL = 1e-10
_MIN_PROB = 1e-12


def _square(matrix, what):
    m = np.array(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class PureState:
    dims: tuple[int, int]
    amplitudes: np.ndarray

    def __post_init__(self):
        d1, d2 = (int(d) for d in self.dims)
        amp = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amp.size != d1 * d2:
            raise ValueError(f"{amp.size} amplitudes do not fit dims {self.dims}")
        if abs(np.linalg.norm(amp) - 1) > 1e-12:
            raise ValueError(f"state norm {np.linalg.norm(amp):.15g} differs from 1")
        object.__setattr__(self, "dims", (d1, d2))
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_vector(cls, vector, dims) -> "PureState":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        return cls(dims, v / np.linalg.norm(v))

    @classmethod
    def product(cls, a, b) -> "PureState":
        a = np.asarray(a, dtype=np.complex128)
        b = np.asarray(b, dtype=np.complex128)
        return cls.from_vector(np.kron(a, b), (a.size, b.size))

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    def matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``(d1, d2)``."""
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = _square(self.matrix, "density operator")
        if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m).real - 1) > 1e-12:
            raise ValueError(f"density operator trace {np.trace(m).real:.15g} differs from 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density operator is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray

    def __post_init__(self):
        m = _square(self.matrix, "observable")
        if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
            raise ValueError("observable is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray

    def __post_init__(self):
        m = _square(self.matrix, "projector")
        if not np.allclose(m, m.conj().T, atol=_TOL, rtol=0):
            raise ValueError("projector is not Hermitian")
        if not np.allclose(m @ m, m, atol=_TOL, rtol=0):
            raise ValueError("projector is not idempotent")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = _square(self.matrix, "unitary")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=_TOL, rtol=0):
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class TwoPhotonField:
    """Sampled two-photon amplitude ``psi[i, j] = psi(y1_i, y2_j)``."""

    grid_y1: Grid1D
    grid_y2: Grid1D
    amplitude: np.ndarray
    wavelength: float
    notes: tuple[str, ...] = dc_field(default=())

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=np.complex128)
        if amp.shape != (self.grid_y1.n_samples, self.grid_y2.n_samples):
            raise ValueError("amplitude shape does not match the grids")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    @property
    def total_probability(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid_y1.dx * self.grid_y2.dx)


@dataclass(frozen=True)
class RobertsonResult:
    lhs: float
    rhs: float
    satisfied: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.satisfied))


def _as_matrix(op) -> np.ndarray:
    return op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=np.complex128)


def _density(state) -> np.ndarray:
    if isinstance(state, PureState):
        v = state.amplitudes
        return np.outer(v, v.conj())
    if isinstance(state, DensityOperator):
        return state.matrix
    v = np.asarray(state, dtype=np.complex128)
    if v.ndim == 1:
        return np.outer(v, v.conj())
    return v


def robertson_check(state, A, B) -> RobertsonResult:
    """Evaluate ``dA * dB >= |<[A, B]>| / 2`` in ``state`` (pure or mixed)."""
    rho = _density(state)
    a, b = _as_matrix(A), _as_matrix(B)
    if not (a.shape == b.shape == rho.shape):
        raise ValueError(f"dimension mismatch: state {rho.shape}, A {a.shape}, B {b.shape}")

    def spread(op):
        mean = np.trace(rho @ op).real
        second = np.trace(rho @ op @ op).real
        return np.sqrt(max(second - mean * mean, 0.0))

    lhs = float(spread(a) * spread(b))
    rhs = float(0.5 * abs(np.trace(rho @ (a @ b - b @ a))))
    return RobertsonResult(lhs, rhs, lhs >= rhs - _TOL)


def project(state: PureState, P) -> PureState:
    """Projection postulate: ``P|psi> / <psi|P|psi>**0.5``.

    ``P`` may act on the full space or be a local projector on subsystem 1.
    """
    p = _embed_first(_as_matrix(P), state.dims)
    v = p @ state.amplitudes
    prob = float(np.vdot(state.amplitudes, v).real)
    if prob <= _MIN_PROB:
        raise ValueError(f"conditioning on impossible event (probability {prob:.3g})")
    return PureState(state.dims, v / np.linalg.norm(v))


def _embed_first(op: np.ndarray, dims) -> np.ndarray:
    d1, d2 = dims
    if op.shape == (d1 * d2, d1 * d2):
        return op
    if op.shape == (d1, d1):
        return np.kron(op, np.eye(d2))
    raise ValueError(f"operator of shape {op.shape} does not act on subsystem 1 of {dims}")


def _embed_second(op: np.ndarray, dims) -> np.ndarray:
    d1, d2 = dims
    if op.shape == (d1 * d2, d1 * d2):
        return op
    if op.shape == (d2, d2):
        return np.kron(np.eye(d1), op)
    raise ValueError(f"operator of shape {op.shape} does not act on subsystem 2 of {dims}")


def _local_factor(op: np.ndarray, dims, which: int) -> np.ndarray:
    """Return ``X`` if ``op == X (x) I`` (which=1) or ``I (x) X`` (which=2), else raise."""
    d1, d2 = dims
    local_dim = d1 if which == 1 else d2
    if op.shape == (local_dim, local_dim):
        return op
    t = op.reshape(d1, d2, d1, d2)
    if which == 1:
        local = np.einsum("ajbj->ab", t) / d2
        rebuilt = np.kron(local, np.eye(d2))
    else:
        local = np.einsum("iaib->ab", t) / d1
        rebuilt = np.kron(np.eye(d1), local)
    if not np.allclose(rebuilt, op, atol=_TOL, rtol=0):
        raise ValueError(f"operator does not act on subsystem {which} alone")
    return local


def time_shift_projector(P, U1):
    """``U1^dagger P U1``: the equivalent projector applied before ``U1``.

    Accepts a local projector on subsystem 1 (``d1 x d1``) with a local
    unitary, or their ``(d1*d2)``-dimensional embeddings ``P (x) I`` and
    ``U1 (x) I``; the result has the same form as ``P``.
    """
    p = _as_matrix(P)
    u = _as_matrix(U1)
    Projector(p)
    if p.shape != u.shape:
        raise ValueError(f"projector {p.shape} and unitary {u.shape} differ in dimension")
    Unitary(u)
    shifted = u.conj().T @ p @ u
    # Hermitian part removes rounding asymmetry
    return Projector(0.5 * (shifted + shifted.conj().T))


def _eigenspace_projectors(observable: np.ndarray, tol: float = 1e-9):
    """Eigenvalues (grouped within ``tol``) and projectors onto their eigenspaces."""
    vals, vecs = np.linalg.eigh(observable)
    groups = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[start] > tol:
            block = vecs[:, start:i]
            groups.append((float(vals[start:i].mean()), block @ block.conj().T))
            start = i
    return groups


def ordering_independence_check(psi: PureState, P1, U1, U2, M2, *, U12=None) -> float:
    """Largest difference between M2 outcome distributions under two orderings.

    (a) condition first: project with the time-shifted local projector
        ``U1^dagger P1 U1``, normalise, evolve, measure M2.
    (b) condition last: evolve, measure M2 in every eigenbranch, then apply
        ``P1`` and renormalise the joint probabilities over the branches
        where ``P1`` succeeds.

    Evolution is ``U1 (x) U2`` unless a joint unitary ``U12`` is supplied, in
    which case (a) still uses the local time-shift by ``U1``; for generic
    non-factorising ``U12`` the two orderings then disagree.
    """
    dims = psi.dims
    p1 = _local_factor(_as_matrix(P1), dims, 1)
    u1 = _local_factor(_as_matrix(U1), dims, 1)
    u2 = _local_factor(_as_matrix(U2), dims, 2)
    m2 = _local_factor(_as_matrix(M2), dims, 2)
    Projector(p1)
    Unitary(u1)
    Unitary(u2)
    Observable(m2)
    if U12 is None:
        evolution = np.kron(u1, u2)
    else:
        evolution = _as_matrix(U12)
        Unitary(evolution)

    branches = [np.kron(np.eye(dims[0]), proj) for _, proj in _eigenspace_projectors(m2)]

    shifted = time_shift_projector(p1, u1).matrix
    conditioned = project(psi, shifted)
    evolved_a = evolution @ conditioned.amplitudes
    dist_a = np.array([np.vdot(evolved_a, b @ evolved_a).real for b in branches])

    evolved_b = evolution @ psi.amplitudes
    p1_full = np.kron(p1, np.eye(dims[1]))
    joint = np.array([np.linalg.norm(p1_full @ (b @ evolved_b)) ** 2 for b in branches])
    if joint.sum() <= _MIN_PROB:
        raise ValueError(f"conditioning on impossible event (probability {joint.sum():.3g})")
    dist_b = joint / joint.sum()
    return float(np.max(np.abs(dist_a - dist_b)))


def conditional_robertson_check(psi: PureState, P1, U, A, B) -> RobertsonResult:
    """Robertson relation for subsystem-2 observables in ``U P1|psi>/norm``."""
    conditioned = project(psi, _embed_first(_as_matrix(P1), psi.dims))
    u = _as_matrix(U)
    if u.shape == (psi.dim, psi.dim):
        evolution = u
    else:
        raise ValueError(f"U must act on the full {psi.dim}-dimensional space")
    Unitary(evolution)
    final = evolution @ conditioned.amplitudes
    a = _embed_second(_as_matrix(A), psi.dims)
    b = _embed_second(_as_matrix(B), psi.dims)
    return robertson_check(final, a, b)


def reduced_density(psi: PureState, keep: int) -> DensityOperator:
    """Partial trace of ``|psi><psi|`` over the subsystem not kept."""
    m = psi.matrix()
    if keep == 1:
        rho = np.einsum("aj,bj->ab", m, m.conj())
    elif keep == 2:
        rho = np.einsum("ia,ib->ab", m, m.conj())
    else:
        raise ValueError("keep must be 1 or 2")
    return DensityOperator(0.5 * (rho + rho.conj().T))


def discretized_source_state(n_bins: int, band: tuple[int, int]) -> PureState:
    """Uniform superposition of ``|y>_1 |-y>_2`` over position bins ``band[0]..band[1]-1``.

    Bins are symmetric about zero, so ``-y`` of bin ``j`` is bin ``n_bins-1-j``.
    """
    lo, hi = band
    if not 0 <= lo < hi <= n_bins:
        raise ValueError(f"band {band} does not fit {n_bins} bins")
    amp = np.zeros((n_bins, n_bins), dtype=np.complex128)
    for j in range(lo, hi):
        amp[j, n_bins - 1 - j] = 1.0
    return PureState.from_vector(amp.ravel(), (n_bins, n_bins))


def _rms(coords, weights):
    w = weights / weights.sum()
    mean = np.sum(coords * w)
    return float(np.sqrt(np.sum((coords - mean) ** 2 * w)))


def sum_momentum_distribution(state: TwoPhotonField) -> tuple[np.ndarray, np.ndarray]:
    """Distribution of ``k1 + k2`` by transforming along the ``(1, 1)`` diagonals.

    Along each line ``y1 - y2 = const`` the phase ``k1 y1 + k2 y2`` advances
    as ``(k1 + k2) t``, so a 1-D transform per line yields the sum-momentum
    marginal without the corner aliasing a full 2-D FFT suffers when the
    difference-momentum spectrum reaches the band edge. Needs equal pitches.
    """
    g1, g2 = state.grid_y1, state.grid_y2
    if g1.dx != g2.dx:
        raise ValueError("sum-momentum transform needs equal pitches on both axes")
    n1, n2 = state.amplitude.shape
    n = max(n1, n2)
    psi = state.amplitude
    lines = np.zeros((n1 + n2 - 1, n), dtype=np.complex128)
    rows = np.arange(n1)
    for offset in range(-(n2 - 1), n1):
        i = rows[(rows - offset >= 0) & (rows - offset < n2)]
        lines[offset + n2 - 1, : i.size] = psi[i, i - offset]
    # a per-line start offset is a pure phase and drops out of |.|^2
    density = np.sum(np.abs(np.fft.fft(lines, axis=1)) ** 2, axis=0)
    K = 2 * np.pi * np.fft.fftfreq(n, g1.dx)
    order = np.argsort(K)
    return K[order], density[order]


def phase_matching_uncertainty(state: TwoPhotonField):
    """RMS spreads and products for the phase-matching relations.

    Returns ``(delta_sum_k, delta_y1, delta_y2, (delta_sum_k*delta_y1,
    delta_sum_k*delta_y2))``.
    """
    if abs(state.total_probability - 1) > 1e-9:
        raise ValueError(f"two-photon state not normalised (total {state.total_probability:.12g})")
    K, dens = sum_momentum_distribution(state)
    delta_k = _rms(K, dens)
    prob = np.abs(state.amplitude) ** 2
    dy1 = _rms(state.grid_y1.y, prob.sum(axis=1))
    dy2 = _rms(state.grid_y2.y, prob.sum(axis=0))
    return delta_k, dy1, dy2, (delta_k * dy1, delta_k * dy2)


# random ensembles ----------------------------------------------------------

def random_state(dims, rng) -> PureState:
    d = dims[0] * dims[1]
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.from_vector(v, dims)


def random_unitary(d: int, rng) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    # fix column phases so the ensemble is Haar
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, rng) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + z.conj().T)


def random_projector(d: int, rng, rank: int | None = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(1, d)) if d > 1 else 1
    q = random_unitary(d, rng)[:, :rank]
    return q @ q.conj().T


def clock_shift(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Weyl clock ``Z`` and shift ``X`` matrices, ``Z X = exp(2 pi i/d) X Z``."""
    omega = np.exp(2j * np.pi / d)
    clock = np.diag(omega ** np.arange(d))
    shift = np.roll(np.eye(d), 1, axis=0)
    return clock, shift


def position_momentum_pair(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian discrete position ``diag(j)`` and its DFT-conjugate momentum.

    These generate the clock and shift operators; they stand in for ``y``
    and ``p_y`` on a ``d``-point lattice.
    """
    j = np.arange(d) - (d - 1) / 2
    x = np.diag(j).astype(np.complex128)
    f = np.exp(-2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d) / np.sqrt(d)
    return x, f.conj().T @ x @ f


def run_randomized_suite(seed: int, trials: int = 1000, counterexample_draws: int = 100) -> dict:
    """Randomised verification of the three theorems plus the counterexample search.

    Each family draws from its own child stream of ``seed`` so the families
    are independent and individually reproducible.
    """
    streams = np.random.SeedSequence(seed).spawn(4)
    rng_rob, rng_cond, rng_order, rng_joint = (np.random.default_rng(s) for s in streams)

    rob_viol = 0
    for _ in range(trials):
        d = int(rng_rob.integers(2, 9))
        state = random_state((d, 1), rng_rob)
        res = robertson_check(state, random_hermitian(d, rng_rob), random_hermitian(d, rng_rob))
        rob_viol += not res.satisfied

    cond_viol = 0
    for _ in range(trials):
        d1, d2 = (int(x) for x in rng_cond.integers(2, 7, size=2))
        psi = random_state((d1, d2), rng_cond)
        res = conditional_robertson_check(
            psi,
            random_projector(d1, rng_cond),
            random_unitary(d1 * d2, rng_cond),
            random_hermitian(d2, rng_cond),
            random_hermitian(d2, rng_cond),
        )
        cond_viol += not res.satisfied

    bell = PureState.from_vector([1, 0, 0, 1], (2, 2))
    order_max = 0.0
    order_viol = 0
    for _ in range(trials):
        disc = ordering_independence_check(
            bell,
            random_projector(2, rng_order),
            random_unitary(2, rng_order),
            random_unitary(2, rng_order),
            random_hermitian(2, rng_order),
        )
        order_max = max(order_max, disc)
        order_viol += disc >= _TOL

    joint_max = 0.0
    for _ in range(counterexample_draws):
        disc = ordering_independence_check(
            bell,
            random_projector(2, rng_joint),
            random_unitary(2, rng_joint),
            random_unitary(2, rng_joint),
            random_hermitian(2, rng_joint),
            U12=random_unitary(4, rng_joint),
        )
        joint_max = max(joint_max, disc)

    return {
        "seed": seed,
        "trials": trials,
        "robertson_violations": rob_viol,
        "conditional_robertson_violations": cond_viol,
        "ordering_violations": order_viol,
        "ordering_max_discrepancy": order_max,
        "counterexample_draws": counterexample_draws,
        "counterexample_max_discrepancy": joint_max,
    }
