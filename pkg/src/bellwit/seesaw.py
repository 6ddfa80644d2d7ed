"""Alternating variational maximization of Bell values.

Observable steps replace each operator by the eigen-sign of its effective
(partially contracted) operator; state steps replace each tensor factor by
the top eigenvector of the group-reduced Bell operator.  Every step is a
partial maximization of the same objective, so the value never decreases.
Results are lower bounds on the corresponding quantum maxima.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bellexpr import BellExpression
from .qcore import (
    HermitianOperator,
    ObservableAssignment,
    StateVector,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
)

KERNEL_TOL = 1e-12  # effective-operator eigenvalues below this map to +1
_MONOTONE_SLACK = 1e-9


class SeesawNumericalError(RuntimeError):
    """Numerical fault inside the optimizer (non-Hermitian effective operator,
    decreasing objective, eigensolver failure)."""


@dataclass(frozen=True)
class SeesawConfig:
    restarts: int = 50
    max_sweeps: int = 500
    tol: float = 1e-9
    seed: int = 0
    allow_trivial: bool = True

    def __post_init__(self):
        if self.restarts < 1 or self.max_sweeps < 1:
            raise ValueError("restarts and max_sweeps must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class Partition:
    groups: tuple  # disjoint tuples of 0-based party indices covering 0..n-1

    def __post_init__(self):
        groups = tuple(tuple(int(p) for p in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        seen = [p for g in groups for p in g]
        if not groups or any(len(g) == 0 for g in groups):
            raise ValueError("groups must be nonempty")
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("groups must disjointly cover 0..n-1")

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def max_block(self) -> int:
        return max(len(g) for g in self.groups)


def enumerate_partitions(n: int, max_block: int) -> list:
    """All set partitions of 0..n-1 with block sizes <= max_block, in canonical
    order (blocks ordered by their smallest element)."""
    if max_block < 1:
        raise ValueError("max_block must be >= 1")
    out = []

    def rec(i, blocks):
        if i == n:
            out.append(Partition(tuple(tuple(b) for b in blocks)))
            return
        for b in blocks:
            if len(b) < max_block:
                b.append(i)
                rec(i + 1, blocks)
                b.pop()
        blocks.append([i])
        rec(i + 1, blocks)
        blocks.pop()

    rec(0, [])
    return out


def maximal_partitions(n: int, max_block: int) -> list:
    """Partitions not refined by another admissible partition: merging any two
    blocks would exceed max_block.  The k-producible optimum is attained on
    these."""
    keep = []
    for part in enumerate_partitions(n, max_block):
        sizes = sorted(len(g) for g in part.groups)
        if len(sizes) >= 2 and sizes[0] + sizes[1] <= max_block:
            continue
        keep.append(part)
    return keep


# --- compiled expression + batched term algebra ----------------------------


@dataclass(frozen=True)
class _Compiled:
    coeffs: np.ndarray  # (T,)
    settings: np.ndarray  # (T, n) ints, 0 = trivial
    dims: tuple


def _compile(expr: BellExpression, dims: Sequence[int]) -> _Compiled:
    dims = tuple(int(d) for d in dims)
    if len(dims) != expr.n:
        raise ValueError("dims length must equal the expression party count")
    coeffs = np.array([c for c, _ in expr.terms], dtype=np.float64)
    settings = np.array([s for _, s in expr.terms], dtype=np.int64)
    return _Compiled(coeffs=coeffs, settings=settings, dims=dims)


def _stacked_ops(ops_i: np.ndarray, d: int) -> np.ndarray:
    """Prepend the identity so that setting label x indexes row x directly."""
    return np.concatenate([np.eye(d, dtype=complex)[None], ops_i], axis=0)


def _apply_party(batch: np.ndarray, term_ops: np.ndarray, axis: int) -> np.ndarray:
    """Apply per-term one-party operators to a batch of state tensors."""
    t_axis = axis + 1
    moved = np.moveaxis(batch, t_axis, 1)
    shape = moved.shape
    flat = moved.reshape(shape[0], shape[1], -1)
    out = np.einsum("tab,tbr->tar", term_ops, flat)
    return np.moveaxis(out.reshape(shape), 1, t_axis)


def _batched_terms(psi: np.ndarray, stacked, comp: _Compiled) -> np.ndarray:
    """For each term, the state with every party's term operator applied."""
    T = comp.coeffs.shape[0]
    batch = np.broadcast_to(psi, (T,) + comp.dims).astype(complex)
    for i in range(len(comp.dims)):
        batch = _apply_party(batch, stacked[i][comp.settings[:, i]], i)
    return batch


def _value_from_batch(psi: np.ndarray, batch: np.ndarray, comp: _Compiled) -> float:
    T = comp.coeffs.shape[0]
    amps = batch.reshape(T, -1) @ psi.reshape(-1).conj()
    total = complex(comp.coeffs @ amps)
    if abs(total.imag) > 1e-7 * max(1.0, abs(total.real)):
        raise SeesawNumericalError(f"value has imaginary part {total.imag:.3e}")
    return total.real


def _partial_inner(psi: np.ndarray, stripped: np.ndarray, axis: int) -> np.ndarray:
    """M[t, a, b] = <psi| (|a><b| at party `axis`) x (rest of term t) |psi>."""
    d = psi.shape[axis]
    psi_m = np.moveaxis(psi, axis, 0).reshape(d, -1).conj()
    phi_m = np.moveaxis(stripped, axis + 1, 1).reshape(stripped.shape[0], d, -1)
    return np.einsum("ar,tbr->tab", psi_m, phi_m)


def _sign_operator(H: np.ndarray, allow_trivial: bool) -> np.ndarray:
    """Hermitian operator with ±1 eigenvalues maximizing tr(A H)."""
    herm = 0.5 * (H + H.conj().T)
    scale = max(1.0, float(np.linalg.norm(herm)))
    if np.linalg.norm(H - herm) > 1e-8 * scale:
        raise SeesawNumericalError("effective operator is not Hermitian")
    w, v = np.linalg.eigh(herm)
    if allow_trivial:
        signs = np.where(np.abs(w) < KERNEL_TOL, 1.0, np.sign(w))
    else:
        signs = np.sign(w)
        signs[signs == 0] = 1.0
        if np.all(signs > 0) or np.all(signs < 0):
            j = int(np.argmin(np.abs(w)))
            signs[j] = -signs[j]
    return (v * signs) @ v.conj().T


def _sweep_observables(psi, stacked, comp: _Compiled, allow_trivial: bool) -> float:
    """One cyclic pass of sign-operator updates over every (party, setting)."""
    n = len(comp.dims)
    batch = _batched_terms(psi, stacked, comp)
    for i in range(n):
        term_ops = stacked[i][comp.settings[:, i]]
        stripped = _apply_party(batch, term_ops, i)  # ±1 observables square to I
        M = _partial_inner(psi, stripped, i)
        for x in range(1, stacked[i].shape[0]):
            mask = comp.settings[:, i] == x
            if not mask.any():
                continue
            H = np.einsum("t,tab->ab", comp.coeffs * mask, M).conj()
            stacked[i][x] = _sign_operator(H, allow_trivial)
        batch = _apply_party(stripped, stacked[i][comp.settings[:, i]], i)
    return _value_from_batch(psi, batch, comp)


def _dense_bell_operator(stacked, comp: _Compiled) -> np.ndarray:
    total = math.prod(comp.dims)
    out = np.zeros((total, total), dtype=complex)
    for t in range(comp.coeffs.shape[0]):
        term = np.array([[1.0 + 0.0j]])
        for i in range(len(comp.dims)):
            term = np.kron(term, stacked[i][comp.settings[t, i]])
        out += comp.coeffs[t] * term
    return out


def _assemble_state(groups, group_states, dims) -> np.ndarray:
    """Tensor the group states together and restore natural party order."""
    order = [p for g in groups for p in g]
    vec = np.array([1.0 + 0.0j])
    for chi in group_states:
        vec = np.kron(vec, chi.reshape(-1))
    perm_dims = tuple(dims[p] for p in order)
    tensor = vec.reshape(perm_dims)
    return np.moveaxis(tensor, list(range(len(order))), order)


def _group_state_step(B_tensor, groups, group_states, dims, g_index: int):
    """Replace group g's factor by the top eigenvector of its reduced operator."""
    n = len(dims)
    letters = string.ascii_letters
    bra = letters[:n]
    ket = letters[n : 2 * n]
    subs = [bra + ket]
    operands = [B_tensor]
    for j, (grp, chi) in enumerate(zip(groups, group_states)):
        if j == g_index:
            continue
        subs.append("".join(bra[p] for p in grp))
        operands.append(chi.conj())
        subs.append("".join(ket[p] for p in grp))
        operands.append(chi)
    g = groups[g_index]
    out = "".join(bra[p] for p in g) + "".join(ket[p] for p in g)
    reduced = np.einsum(",".join(subs) + "->" + out, *operands)
    dg = math.prod(dims[p] for p in g)
    w, v = np.linalg.eigh(reduced.reshape(dg, dg))
    return v[:, -1].reshape(tuple(dims[p] for p in g)), float(w[-1])


# --- initialization ---------------------------------------------------------


def _random_observable(rng: np.random.Generator, d: int) -> np.ndarray:
    """Random unit-Bloch-vector observable; block-diagonal copies for d > 2."""
    out = np.zeros((d, d), dtype=complex)
    for j in range(d // 2):
        vec = rng.normal(size=3)
        vec /= np.linalg.norm(vec)
        out[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = (
            vec[0] * PAULI_X + vec[1] * PAULI_Y + vec[2] * PAULI_Z
        )
    if d % 2:
        out[d - 1, d - 1] = 1.0 if rng.integers(2) else -1.0
    return out


def _init_stacked(rng, comp: _Compiled, settings_per_party, identity: bool) -> list:
    stacked = []
    for i, d in enumerate(comp.dims):
        rows = [np.eye(d, dtype=complex)]
        for _ in range(settings_per_party[i]):
            rows.append(
                np.eye(d, dtype=complex) if identity else _random_observable(rng, d)
            )
        stacked.append(np.array(rows))
    return stacked


def _random_group_states(rng, groups, dims) -> list:
    states = []
    for g in groups:
        dg = math.prod(dims[p] for p in g)
        vec = rng.normal(size=dg) + 1j * rng.normal(size=dg)
        vec /= np.linalg.norm(vec)
        states.append(vec.reshape(tuple(dims[p] for p in g)))
    return states


# --- results ----------------------------------------------------------------


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    assignment: ObservableAssignment
    group_states: tuple  # one StateVector per group
    partition: Partition
    sweeps: int
    seed: int
    converged: bool
    restarts_used: int = 0
    value_history: tuple = ()

    def state(self) -> StateVector:
        dims = self.assignment.dims
        tensor = _assemble_state(
            self.partition.groups,
            [sv.tensor() for sv in self.group_states],
            dims,
        )
        return StateVector(dims=dims, amplitudes=tensor.reshape(-1))

    def reevaluate(self, expr: BellExpression) -> float:
        from .qcore import bell_value

        return bell_value(self.state(), self.assignment, expr)

    def to_json(self, indent: int | None = 2) -> str:
        obs = []
        for i in range(self.assignment.n):
            row = []
            for x in range(1, self.assignment.settings_per_party[i] + 1):
                mat = self.assignment.operator(i, x)
                if mat.shape == (2, 2):
                    row.append(
                        [
                            float(np.real(np.trace(mat)) / 2),
                            float(np.real(np.trace(mat @ PAULI_X)) / 2),
                            float(np.real(np.trace(mat @ PAULI_Y)) / 2),
                            float(np.real(np.trace(mat @ PAULI_Z)) / 2),
                        ]
                    )
                else:
                    row.append(
                        {"re": np.real(mat).tolist(), "im": np.imag(mat).tolist()}
                    )
            obs.append(row)
        payload = {
            "value": self.value,
            "partition": [list(g) for g in self.partition.groups],
            "seed": self.seed,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "observables": obs,
        }
        return json.dumps(payload, indent=indent)


def _wrap_result(comp, expr, stacked, groups, group_states, sweeps, seed, converged, restarts, history):
    ops = tuple(
        tuple(HermitianOperator(stacked[i][x]) for x in range(1, stacked[i].shape[0]))
        for i in range(expr.n)
    )
    assignment = ObservableAssignment(
        n=expr.n, settings_per_party=expr.settings_per_party, ops=ops
    )
    gs = tuple(
        StateVector(
            dims=tuple(comp.dims[p] for p in g),
            amplitudes=chi.reshape(-1),
        )
        for g, chi in zip(groups, group_states)
    )
    psi = _assemble_state(groups, group_states, comp.dims)
    value = _value_from_batch(psi, _batched_terms(psi, stacked, comp), comp)
    return OptimizationResult(
        value=value,
        assignment=assignment,
        group_states=gs,
        partition=Partition(groups),
        sweeps=sweeps,
        seed=seed,
        converged=converged,
        restarts_used=restarts,
        value_history=tuple(history),
    )


# --- drivers ----------------------------------------------------------------


def _run_once(comp, expr, stacked, groups, group_states, cfg: SeesawConfig):
    """Alternate state and observable phases until the value stalls."""
    history = []
    prev = -np.inf
    sweeps = 0
    converged = False
    for sweep in range(1, cfg.max_sweeps + 1):
        sweeps = sweep
        B = _dense_bell_operator(stacked, comp)
        B_tensor = B.reshape(comp.dims + comp.dims)
        for gi in range(len(groups)):
            group_states[gi], _ = _group_state_step(
                B_tensor, groups, group_states, comp.dims, gi
            )
        psi = _assemble_state(groups, group_states, comp.dims)
        value = _sweep_observables(psi, stacked, comp, cfg.allow_trivial)
        if value < prev - _MONOTONE_SLACK * max(1.0, abs(prev)):
            raise SeesawNumericalError(
                f"objective decreased from {prev!r} to {value!r}"
            )
        history.append(value)
        if value - prev < cfg.tol:
            converged = True
            break
        prev = value
    return sweeps, converged, history


def _restart_seed(master: int, partition_index: int, restart: int):
    return [int(master), int(partition_index), int(restart)]


def optimize_observables(
    state: StateVector,
    expr: BellExpression,
    config: SeesawConfig | None = None,
) -> OptimizationResult:
    """Maximize the Bell value over observables with the state held fixed.

    Restart 0 starts from all-identity observables when trivial observables
    are allowed; since sweeps never decrease the value, the result is then
    guaranteed to be at least the all-identity value (the coefficient sum).
    """
    cfg = config or SeesawConfig()
    comp = _compile(expr, state.dims)
    psi = state.tensor().astype(complex)
    groups = (tuple(range(expr.n)),)
    best = None
    for r in range(cfg.restarts):
        rng = np.random.default_rng(_restart_seed(cfg.seed, 0, r))
        identity_start = cfg.allow_trivial and r == 0
        stacked = _init_stacked(rng, comp, expr.settings_per_party, identity_start)
        history = []
        prev = -np.inf
        sweeps = 0
        converged = False
        for sweep in range(1, cfg.max_sweeps + 1):
            sweeps = sweep
            value = _sweep_observables(psi, stacked, comp, cfg.allow_trivial)
            if value < prev - _MONOTONE_SLACK * max(1.0, abs(prev)):
                raise SeesawNumericalError("objective decreased during sweep")
            history.append(value)
            if value - prev < cfg.tol:
                converged = True
                break
            prev = value
        result = _wrap_result(
            comp,
            expr,
            stacked,
            groups,
            [psi],
            sweeps,
            cfg.seed,
            converged,
            r + 1,
            history,
        )
        if best is None or result.value > best.value:
            best = result
    return best


def optimize_state(expr: BellExpression, assignment: ObservableAssignment):
    """Top eigenvector and eigenvalue of the Bell operator for fixed observables."""
    from .qcore import bell_operator

    B = bell_operator(expr, assignment)
    try:
        w, v = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SeesawNumericalError(f"eigensolver failed: {exc}") from exc
    state = StateVector(dims=assignment.dims, amplitudes=v[:, -1])
    return state, float(w[-1])


def _partition_seesaw(expr, dims, partitions, cfg, target=None, target_tol=0.0):
    comp = _compile(expr, dims)
    best = None
    done = False
    for pi, part in enumerate(partitions):
        if done:
            break
        groups = part.groups
        for r in range(cfg.restarts):
            rng = np.random.default_rng(_restart_seed(cfg.seed, pi, r))
            stacked = _init_stacked(rng, comp, expr.settings_per_party, False)
            group_states = _random_group_states(rng, groups, comp.dims)
            sweeps, converged, history = _run_once(
                comp, expr, stacked, groups, group_states, cfg
            )
            result = _wrap_result(
                comp,
                expr,
                stacked,
                groups,
                group_states,
                sweeps,
                cfg.seed,
                converged,
                r + 1,
                history,
            )
            if best is None or result.value > best.value:
                best = result
            if target is not None and best.value >= target - target_tol:
                done = True
                break
    return best


def full_seesaw(
    expr: BellExpression,
    dims: Sequence[int] | None = None,
    config: SeesawConfig | None = None,
    *,
    target: float | None = None,
    target_tol: float = 0.0,
) -> OptimizationResult:
    """Unrestricted see-saw: alternate full-state and observable updates over
    random restarts.  The result is a certified lower bound on the quantum
    maximum for the given local dimensions."""
    cfg = config or SeesawConfig()
    dims = tuple(dims) if dims is not None else (2,) * expr.n
    if math.prod(dims) > 1 << 22:
        raise ValueError("total dimension exceeds the dense cap 2**22")
    part = [Partition((tuple(range(expr.n)),))]
    return _partition_seesaw(expr, dims, part, cfg, target, target_tol)


def kproducible_lower_bound(
    expr: BellExpression,
    k: int,
    dims: Sequence[int] | None = None,
    config: SeesawConfig | None = None,
    *,
    target: float | None = None,
    target_tol: float = 0.0,
) -> OptimizationResult:
    """Lower bound on the k-producible value: see-saw restricted to tensor
    products over every maximal partition with blocks of at most k parties."""
    cfg = config or SeesawConfig()
    if not 1 <= k <= expr.n:
        raise ValueError(f"k={k} out of range 1..{expr.n}")
    dims = tuple(dims) if dims is not None else (2,) * expr.n
    parts = maximal_partitions(expr.n, k)
    return _partition_seesaw(expr, dims, parts, cfg, target, target_tol)
