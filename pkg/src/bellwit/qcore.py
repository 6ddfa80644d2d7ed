"""Dense multipartite linear algebra: states, observables, and correlators.

Party 1 is the most significant tensor factor (numpy.kron order).  All values
are pure functions of their inputs; state and operator objects are immutable
after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bellexpr import TRIVIAL, BellExpression

ATOL = 1e-10

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _frozen_array(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over the given local dimensions."""

    dims: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        amps = _frozen_array(self.amplitudes)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)
        if amps.ndim != 1 or amps.shape[0] != math.prod(dims):
            raise ValueError("amplitude length must equal the product of dims")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")

    @property
    def n(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        mat = _frozen_array(self.entries)
        object.__setattr__(self, "entries", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator must be a square matrix")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("operator is not Hermitian within 1e-12")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ObservableAssignment:
    """Per party, per nontrivial setting, a Hermitian operator with spectrum in
    [-1, 1].  Degenerate (trivial) operators such as the identity are allowed.
    """

    n: int
    settings_per_party: tuple
    ops: tuple  # ops[i][x-1] is the operator for party i, setting x

    def __post_init__(self):
        spp = tuple(int(s) for s in self.settings_per_party)
        object.__setattr__(self, "settings_per_party", spp)
        ops = tuple(tuple(o for o in row) for row in self.ops)
        object.__setattr__(self, "ops", ops)
        if len(spp) != self.n or len(ops) != self.n:
            raise ValueError("need one setting count and one op row per party")
        for i, row in enumerate(ops):
            if len(row) != spp[i]:
                raise ValueError(f"party {i + 1}: expected {spp[i]} operators")
            dim = row[0].dim
            for op in row:
                if op.dim != dim:
                    raise ValueError(f"party {i + 1}: mixed operator dimensions")
                w = np.linalg.eigvalsh(op.entries)
                if w[0] < -1.0 - 1e-10 or w[-1] > 1.0 + 1e-10:
                    raise ValueError(
                        f"party {i + 1}: eigenvalues outside [-1, 1]: [{w[0]}, {w[-1]}]"
                    )

    @property
    def dims(self) -> tuple:
        return tuple(row[0].dim for row in self.ops)

    def operator(self, party: int, setting: int) -> np.ndarray:
        """Matrix for the given 0-based party; setting 0 is the identity."""
        if setting == TRIVIAL:
            return np.eye(self.ops[party][0].dim, dtype=complex)
        return np.asarray(self.ops[party][setting - 1].entries)


def tensor_product(factors: Sequence[HermitianOperator]) -> HermitianOperator:
    """Kronecker product in party order."""
    if not factors:
        raise ValueError("need at least one factor")
    out = np.array([[1.0 + 0.0j]])
    for f in factors:
        out = np.kron(out, f.entries)
    return HermitianOperator(out)


def _apply_one(tensor: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    moved = np.tensordot(mat, tensor, axes=([1], [axis]))
    return np.moveaxis(moved, 0, axis)


def _expectation(state: StateVector, mats: Iterable[tuple]) -> complex:
    phi = state.tensor().astype(complex)
    for axis, mat in mats:
        phi = _apply_one(phi, mat, axis)
    return np.vdot(state.amplitudes, phi.reshape(-1))


def born_probability(state: StateVector, effects: Sequence) -> float:
    """Probability of the joint outcome described by one effect per party."""
    if len(effects) != state.n:
        raise ValueError(f"need {state.n} effects, got {len(effects)}")
    mats = []
    for i, eff in enumerate(effects):
        mat = eff.entries if isinstance(eff, HermitianOperator) else np.asarray(eff, dtype=complex)
        if mat.shape != (state.dims[i], state.dims[i]):
            raise ValueError(f"effect {i + 1} has wrong dimension {mat.shape}")
        mats.append((i, mat))
    p = _expectation(state, mats)
    if abs(p.imag) > 1e-8:
        raise ValueError(f"probability has imaginary part {p.imag:.3e}")
    return min(max(p.real, 0.0), 1.0)


def correlator(state: StateVector, assignment: ObservableAssignment, settings) -> float:
    """Expectation of the product of outcomes for the given setting vector.

    Trivial entries (0) contribute the identity, so the all-trivial correlator
    is 1 on any state.
    """
    if assignment.n != state.n or assignment.dims != state.dims:
        raise ValueError("assignment dimensions do not match the state")
    if len(settings) != state.n:
        raise ValueError("setting vector length must equal party count")
    mats = []
    for i, x in enumerate(settings):
        x = int(x)
        if x == TRIVIAL:
            continue
        if x < 0 or x > assignment.settings_per_party[i]:
            raise ValueError(f"setting {x} out of range for party {i + 1}")
        mats.append((i, assignment.operator(i, x)))
    value = _expectation(state, mats)
    if abs(value.imag) > 1e-8:
        raise ValueError(f"correlator has imaginary part {value.imag:.3e}")
    return value.real


def bell_value(state: StateVector, assignment: ObservableAssignment, expr: BellExpression) -> float:
    """Value of a Bell expression on a state with the given observables."""
    return math.fsum(c * correlator(state, assignment, s) for c, s in expr.terms)


def bell_operator(expr: BellExpression, assignment: ObservableAssignment) -> np.ndarray:
    """Dense Bell operator: sum of coefficient-weighted observable products."""
    dims = assignment.dims
    total = math.prod(dims)
    out = np.zeros((total, total), dtype=complex)
    for coeff, settings in expr.terms:
        term = np.array([[1.0 + 0.0j]])
        for i, x in enumerate(settings):
            term = np.kron(term, assignment.operator(i, x))
        out += coeff * term
    return out


# --- standard states ------------------------------------------------------


def make_ghz(n: int) -> StateVector:
    if n < 2:
        raise ValueError("need n >= 2")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
    return StateVector(dims=(2,) * n, amplitudes=amps)


def make_ghz_theta(n: int, theta: float) -> StateVector:
    """cos(theta)|0..0> + sin(theta)|1..1>, theta in (0, pi/4]."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 < theta <= math.pi / 4 + 1e-12:
        raise ValueError("theta must lie in (0, pi/4]")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = math.cos(theta)
    amps[-1] = math.sin(theta)
    return StateVector(dims=(2,) * n, amplitudes=amps)


def make_ghz_nd(n: int, d: int) -> StateVector:
    """Qudit analogue (1/sqrt(d)) sum_i |i..i>; capped at n*log2(d) <= 22."""
    if n < 2 or d < 2:
        raise ValueError("need n >= 2 and d >= 2")
    if n * math.log2(d) > 22:
        raise ValueError("state too large to store densely (n*log2(d) > 22)")
    amps = np.zeros(d**n, dtype=complex)
    stride = (d**n - 1) // (d - 1)  # index of |i,i,..,i> is i * stride
    for i in range(d):
        amps[i * stride] = 1.0 / math.sqrt(d)
    return StateVector(dims=(d,) * n, amplitudes=amps)


def make_w(n: int) -> StateVector:
    """Equal-weight superposition of the n single-excitation basis states."""
    if n < 2:
        raise ValueError("need n >= 2")
    amps = np.zeros(2**n, dtype=complex)
    for i in range(n):
        amps[1 << (n - 1 - i)] = 1.0 / math.sqrt(n)
    return StateVector(dims=(2,) * n, amplitudes=amps)


def _apply_graph_generator(tensor: np.ndarray, vertex: int, neighbors) -> np.ndarray:
    # X on the vertex, Z on each neighbor (disjoint axes, order irrelevant)
    out = np.flip(tensor, axis=vertex).copy()
    for j in neighbors:
        sl = [slice(None)] * out.ndim
        sl[j] = 1
        out[tuple(sl)] *= -1.0
    return out


def make_graph_state(graph) -> StateVector:
    """Simultaneous +1 eigenstate of all vertex stabilizers of the graph.

    Built by applying the stabilizer projector product to |0..0>, whose
    overlap with any graph state is 2**(-n/2) != 0, then renormalizing with
    the first nonzero amplitude made real positive.
    """
    n = graph.n
    if n > 20:
        raise ValueError("graph state too large to store densely")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for i in range(1, n + 1):
        nbrs = [j - 1 for j in graph.neighbors(i)]
        psi = 0.5 * (psi + _apply_graph_generator(psi, i - 1, nbrs))
    flat = psi.reshape(-1)
    norm = np.linalg.norm(flat)
    if norm < 1e-12:
        raise ValueError("projector annihilated the reference vector")
    flat = flat / norm
    for a in flat:
        if abs(a) > 1e-9:
            flat = flat * (abs(a) / a)
            break
    return StateVector(dims=(2,) * n, amplitudes=flat)


def observable_from_bloch(direction) -> HermitianOperator:
    """Qubit observable n_hat . sigma for a unit Bloch vector."""
    nx, ny, nz = (float(c) for c in direction)
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return HermitianOperator(nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z)


def observable_from_angles(polar: float, azimuth: float) -> HermitianOperator:
    """Qubit observable for the Bloch direction (polar, azimuth)."""
    return observable_from_bloch(
        (
            math.sin(polar) * math.cos(azimuth),
            math.sin(polar) * math.sin(azimuth),
            math.cos(polar),
        )
    )
