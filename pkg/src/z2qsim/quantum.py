"""Quantum simulation of the gauge-theory Gibbs state.

One qubit per free (gauge-unfixed) link, basis index bit q encoding link
``gf.free[q]`` with bit 0 meaning U = +1.  The parent Hamiltonian is a sum of
one term per free link,

    h_n = 1/2 (I - tanh(beta C_n) Z_n - sech(beta C_n) X_n),

with C_n the staple-sum operator, diagonal in the other qubits.  Because
tanh^2 + sech^2 = 1 each h_n is a projector, so its time evolution has the
closed form exp(-i dt h) = I + (e^{-i dt} - 1) h and every Trotter factor is
applied exactly.  The unique zero mode carries amplitudes e^{-S/2}, which is
what makes measuring the final state equivalent to Gibbs sampling.

States are plain complex128 arrays of length 2**n_free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import limits
from .classical import Coupling, as_coupling
from .ensemble import Ensemble, EnsembleMeta, Sampler
from .lattice import GaugeFixing, Lattice


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed to converge; carries partial results."""

    def __init__(self, message: str, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


# ----- diagonal observables on the computational basis -----


def _free_bit_mask(links, gf: GaugeFixing) -> int:
    """OR of 1 << qubit over the free links among ``links``.

    Fixed links sit at +1 and drop out, so the product of the given links on
    basis state b is (-1)**popcount(b & mask).
    """
    mask = 0
    for link in links:
        q = gf.qubit_of.get(int(link))
        if q is not None:
            mask |= 1 << q
    return mask


def _parity_signs(indices: np.ndarray, mask: int) -> np.ndarray:
    bits = np.bitwise_count(indices & np.uint64(mask)).astype(np.int8)
    return 1 - 2 * (bits & 1)


@lru_cache(maxsize=32)
def _plaquette_masks(lattice: Lattice, gf: GaugeFixing) -> tuple[int, ...]:
    return tuple(_free_bit_mask(quad, gf) for quad in lattice.plaq_links)


def plaquette_sum_diagonal(lattice: Lattice, gf: GaugeFixing) -> np.ndarray:
    """Sum of all plaquette products for every basis state, shape (2**n_free,)."""
    limits.check_free_links(gf.n_free, "plaquette diagonal")
    idx = np.arange(1 << gf.n_free, dtype=np.uint64)
    total = np.zeros(idx.size, dtype=np.int32)
    for mask in _plaquette_masks(lattice, gf):
        total += _parity_signs(idx, mask)
    return total


def encode_action_diagonal(lattice: Lattice, gf: GaugeFixing, beta: float) -> np.ndarray:
    """The classical action S = -beta * (plaquette sum) on every basis state."""
    return -beta * plaquette_sum_diagonal(lattice, gf).astype(np.float64)


def ground_state_reference(lattice: Lattice, gf: GaugeFixing, beta) -> np.ndarray:
    """Normalized amplitudes e^{-S/2} / sqrt(Z), the analytic zero mode.

    Accepts a float or a Coupling; the infinite limit returns the uniform
    superposition of maximum-plaquette-sum states.
    """
    coupling = as_coupling(beta)
    ps = plaquette_sum_diagonal(lattice, gf).astype(np.float64)
    if coupling.infinite:
        amps = (ps == ps.max()).astype(np.float64)
    else:
        amps = np.exp(0.5 * coupling.beta * (ps - ps.max()))
    return amps / np.linalg.norm(amps)


# ----- Hamiltonian terms -----


@dataclass(frozen=True)
class LinkTerm:
    """One parent-Hamiltonian term, prepared for fast application.

    ``c_table`` holds the staple sum for every reduced index (basis index with
    the term's own bit removed), stored as a table offset c + n_staples so it
    can gather coefficients directly.  A state reshaped to
    (2**(n-1-q), 2, 2**q) pairs amplitudes exactly along ``c_table`` reshaped
    to (2**(n-1-q), 2**q).
    """

    qubit: int
    n_staples: int
    n_qubits: int
    c_table: np.ndarray  # int8, shape (2**(n_qubits-1),), values in [0, 2*n_staples]

    def staple_values(self) -> np.ndarray:
        """Distinct staple sums in table order: -n_staples .. +n_staples."""
        return np.arange(-self.n_staples, self.n_staples + 1)

    def staple_sums_full(self) -> np.ndarray:
        """Staple sum on every full basis index (duplicated over the own bit)."""
        hi = 1 << (self.n_qubits - 1 - self.qubit)
        lo = 1 << self.qubit
        c = self.c_table.astype(np.int64) - self.n_staples
        return np.broadcast_to(c.reshape(hi, 1, lo), (hi, 2, lo)).reshape(-1)


def build_link_terms(lattice: Lattice, gf: GaugeFixing) -> tuple[LinkTerm, ...]:
    """One LinkTerm per free link, ordered by qubit index."""
    limits.check_free_links(gf.n_free, "Hamiltonian terms")
    n = gf.n_free
    terms = []
    for q, link in enumerate(gf.free):
        staples = lattice.staple_link_array(link)
        reduced_masks = []
        for staple in staples:
            mask = _free_bit_mask(staple, gf)
            low = mask & ((1 << q) - 1)
            high = mask >> (q + 1)
            reduced_masks.append(low | (high << q))
        ys = np.arange(1 << (n - 1), dtype=np.uint64) if n > 1 else np.zeros(1, dtype=np.uint64)
        c = np.zeros(ys.size, dtype=np.int16)
        for mask in reduced_masks:
            c += _parity_signs(ys, mask)
        table = (c + len(staples)).astype(np.int8)
        table.setflags(write=False)
        terms.append(LinkTerm(qubit=q, n_staples=len(staples), n_qubits=n, c_table=table))
    return tuple(terms)


def _term_coefficients(term: LinkTerm, coupling: Coupling):
    """(h00, h01, h11) entries of the 2x2 projector block for each distinct
    staple sum, in c_table order."""
    t, s = coupling.tanh_sech(term.staple_values())
    return 0.5 * (1.0 - t), -0.5 * s, 0.5 * (1.0 + t)


def _paired_view(state: np.ndarray, term: LinkTerm):
    hi = 1 << (term.n_qubits - 1 - term.qubit)
    lo = 1 << term.qubit
    view = state.reshape(hi, 2, lo)
    return view[:, 0, :], view[:, 1, :]


def apply_term_evolution(state: np.ndarray, term: LinkTerm, coupling: Coupling, dt: float):
    """In-place exact evolution exp(-i dt h) for one term; returns the state."""
    h00, h01, h11 = _term_coefficients(term, coupling)
    phi = np.exp(-1j * dt) - 1.0
    u00 = (1.0 + phi * h00)[term.c_table]
    u01 = (phi * h01)[term.c_table]
    u11 = (1.0 + phi * h11)[term.c_table]
    a, b = _paired_view(state, term)
    shape = a.shape
    u00 = u00.reshape(shape)
    u01 = u01.reshape(shape)
    u11 = u11.reshape(shape)
    new_a = u00 * a + u01 * b
    b *= u11
    b += u01 * a
    a[:] = new_a
    return state


def apply_term(state: np.ndarray, term: LinkTerm, coupling: Coupling, out: np.ndarray):
    """Accumulate h_term @ state into ``out`` (both full-length vectors)."""
    h00, h01, h11 = _term_coefficients(term, coupling)
    t00 = h00[term.c_table]
    t01 = h01[term.c_table]
    t11 = h11[term.c_table]
    a, b = _paired_view(state, term)
    oa, ob = _paired_view(out, term)
    shape = a.shape
    t00 = t00.reshape(shape)
    t01 = t01.reshape(shape)
    t11 = t11.reshape(shape)
    oa += t00 * a + t01 * b
    ob += t01 * a + t11 * b
    return out


def apply_hamiltonian(state: np.ndarray, terms, coupling: Coupling) -> np.ndarray:
    out = np.zeros_like(state)
    for term in terms:
        apply_term(state, term, coupling, out)
    return out


def build_dense_hamiltonian(lattice: Lattice, gf: GaugeFixing, beta) -> np.ndarray:
    """Dense real-symmetric matrix of the full Hamiltonian (small systems only).

    Built link by link from the Pauli form, independently of the fast
    term-application path, so the two can be checked against each other.
    """
    limits.check_free_links(gf.n_free, "dense Hamiltonian", cap=limits.DENSE_HAMILTONIAN_CAP)
    coupling = as_coupling(beta)
    n = gf.n_free
    dim = 1 << n
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    for q, link in enumerate(gf.free):
        c = np.zeros(dim, dtype=np.int64)
        for staple in lattice.staple_link_array(link):
            c += _parity_signs(idx.astype(np.uint64), _free_bit_mask(staple, gf))
        t, s = coupling.tanh_sech(c)
        z = 1 - 2 * ((idx >> q) & 1)
        h[idx, idx] += 0.5 * (1.0 - t * z)
        h[idx, idx ^ (1 << q)] += -0.5 * s
    return h


# ----- adiabatic schedules and evolution -----


class StartKind(Enum):
    HOT = "hot"  # beta = 0, uniform superposition over all configurations
    COLD = "cold"  # beta = infinity, single ordered configuration


@dataclass(frozen=True)
class Schedule:
    """Coupling ramp for the adiabatic sweep.

    HOT ramps beta linearly from 0 to the target; COLD ramps the squared
    coupling g^2 = 1/beta linearly from 0, i.e. beta(t) = beta * T / t.
    Couplings are evaluated at step midpoints, which keeps the cold ramp
    finite everywhere.
    """

    start: StartKind
    beta_target: float
    total_time: float
    dt: float = 0.2

    def __post_init__(self):
        if not math.isfinite(self.beta_target) or self.beta_target < 0:
            raise ValueError(f"beta_target must be finite and >= 0, got {self.beta_target}")
        if self.total_time <= 0 or self.dt <= 0:
            raise ValueError("total_time and dt must be positive")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.total_time / self.dt - 1e-9))

    @property
    def dt_eff(self) -> float:
        return self.total_time / self.n_steps

    def coupling_at(self, step: int) -> Coupling:
        t_mid = (step + 0.5) * self.dt_eff
        if self.start is StartKind.HOT:
            return Coupling(self.beta_target * t_mid / self.total_time)
        return Coupling(self.beta_target * self.total_time / t_mid)


def initial_state(n_qubits: int, start: StartKind) -> np.ndarray:
    dim = 1 << n_qubits
    if start is StartKind.HOT:
        return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
    state = np.zeros(dim, dtype=np.complex128)
    state[0] = 1.0
    return state


def adiabatic_evolve(lattice: Lattice, gf: GaugeFixing, schedule: Schedule) -> np.ndarray:
    """Run the Trotterized sweep; returns the final statevector."""
    limits.check_free_links(gf.n_free, "statevector evolution")
    terms = build_link_terms(lattice, gf)
    state = initial_state(gf.n_free, schedule.start)
    dt = schedule.dt_eff
    for step in range(schedule.n_steps):
        coupling = schedule.coupling_at(step)
        for term in terms:
            apply_term_evolution(state, term, coupling, dt)
    return state


# ----- measurement -----


def expectation_plaquette(state: np.ndarray, lattice: Lattice, gf: GaugeFixing) -> float:
    """Born-rule mean plaquette of a statevector."""
    probs = np.abs(state) ** 2
    ps = plaquette_sum_diagonal(lattice, gf)
    return float((probs @ ps) / (probs.sum() * lattice.n_plaquettes))


def sample_configs(
    state: np.ndarray,
    lattice: Lattice,
    gf: GaugeFixing,
    n_shots: int,
    beta: float,
    seed: int = 0,
    extra: dict | None = None,
) -> Ensemble:
    """Projectively measure every qubit ``n_shots`` times; returns the decoded
    gauge configurations as a quantum-sampler ensemble."""
    if n_shots < 1:
        raise ValueError("n_shots must be positive")
    probs = np.abs(np.asarray(state, dtype=np.complex128)) ** 2
    total = probs.sum()
    if not math.isfinite(total) or total <= 0:
        raise ValueError("state has no norm")
    cdf = np.cumsum(probs / total)
    rng = np.random.default_rng(seed)
    draws = rng.random(n_shots)
    indices = np.searchsorted(cdf, draws, side="right")
    indices = np.minimum(indices, probs.size - 1).astype(np.uint64)
    meta = EnsembleMeta(
        dims=lattice.dims,
        boundary=lattice.boundary,
        beta=beta,
        sampler=Sampler.QUANTUM,
        seed=seed,
        extra=dict(extra or {}),
    )
    return Ensemble(meta=meta, configs=gf.decode(indices))


# ----- spectrum diagnostics -----


def lowest_eigenvalues(lattice: Lattice, gf: GaugeFixing, beta, k: int = 4) -> np.ndarray:
    """The k smallest Hamiltonian eigenvalues, ascending.

    Small systems are diagonalized densely; larger ones go through an
    iterative matrix-free solver on the term-application kernel.
    """
    coupling = as_coupling(beta)
    n = gf.n_free
    dim = 1 << n
    k = min(k, dim)
    if n <= limits.DENSE_HAMILTONIAN_CAP:
        h = build_dense_hamiltonian(lattice, gf, coupling)
        return np.linalg.eigvalsh(h)[:k]
    limits.check_free_links(n, "iterative eigensolver", cap=limits.EIGENSOLVER_CAP)
    terms = build_link_terms(lattice, gf)

    def matvec(x):
        return apply_hamiltonian(np.asarray(x, dtype=np.float64).ravel(), terms, coupling)

    op = LinearOperator((dim, dim), matvec=matvec, dtype=np.float64)
    try:
        vals = eigsh(op, k=k, which="SA", return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"eigensolver converged only {len(exc.eigenvalues)} of {k} eigenvalues",
            eigenvalues=np.sort(exc.eigenvalues),
        ) from exc
    return np.sort(vals)
