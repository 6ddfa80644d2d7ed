"""One-parameter family of full-correlator witnesses.

The expression puts weight gamma/2**n on every setting vector in {1,2}**n and
subtracts the all-2 correlator; its local bound is 1 for gamma in (0, 2].
Quantum values on GHZ states follow from an equatorial-qubit ansatz whose
value is gamma*cos(phi/2)**(n+1) - cos((n+1)*phi/2), with closed-form optima
for n <= 5 and a 1-D numeric maximization beyond (reported values for n >= 7
are best-found lower bounds on the quantum maximum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .bellexpr import BellExpression
from .qcore import (
    HermitianOperator,
    ObservableAssignment,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    StateVector,
    bell_value,
    make_ghz,
    make_ghz_theta,
    observable_from_angles,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GammaWitness:
    n: int
    gamma: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if not 0.0 < self.gamma <= 2.0:
            raise ValueError("gamma must lie in (0, 2] (local bound 1 holds there)")


@dataclass(frozen=True)
class AnsatzParams:
    n: int
    phi: float

    def __post_init__(self):
        if not -math.pi <= self.phi <= math.pi:
            raise ValueError("phi must lie in [-pi, pi]")

    @property
    def alpha(self) -> float:
        return -(self.n - 1) * self.phi / (2.0 * self.n)


def build_expression(witness: GammaWitness) -> BellExpression:
    """2**n full-correlator terms; the all-2 vector carries gamma/2**n - 1."""
    n, gamma = witness.n, witness.gamma
    weight = gamma / 2**n
    terms = [(weight, combo) for combo in product((1, 2), repeat=n)]
    terms.append((-1.0, (2,) * n))
    return BellExpression.from_terms(
        n,
        (2,) * n,
        terms,
        name=f"gamma_witness(n={n},gamma={gamma:g})",
        known_bounds={"local": {"value": 1.0, "provenance": "exact-enumeration"}},
    )


def _equatorial(theta: float) -> HermitianOperator:
    return HermitianOperator(math.cos(theta) * PAULI_X + math.sin(theta) * PAULI_Y)


def ansatz_observables(params: AnsatzParams) -> ObservableAssignment:
    """Identical equatorial qubit pair per party: angles alpha and phi+alpha."""
    a = params.alpha
    pair = (_equatorial(a), _equatorial(params.phi + a))
    return ObservableAssignment(
        n=params.n,
        settings_per_party=(2,) * params.n,
        ops=tuple(pair for _ in range(params.n)),
    )


def quantum_value_formula(n: int, gamma: float, phi: float) -> float:
    """Witness value on the n-party GHZ state under the equatorial ansatz."""
    return gamma * math.cos(phi / 2.0) ** (n + 1) - math.cos((n + 1) * phi / 2.0)


def _closed_form(n: int, gamma: float):
    g = float(gamma)
    if n == 2:
        phi = 2.0 * math.atan(-math.sqrt(3.0 - g))
        value = 2.0 / math.sqrt(4.0 - g)
    elif n == 3:
        phi = math.atan(4.0 * math.sqrt(4.0 - g) / g)
        value = (8.0 + g) / (8.0 - g)
    elif n == 4:
        r = math.sqrt(20.0 + g)
        half = math.atan(-math.sqrt(10.0 - g - r) / math.sqrt(6.0 + r))
        phi = 2.0 * half
        value = g * (1.0 / (6.0 - r)) ** 2.5 - math.cos(5.0 * half)
    elif n == 5:
        r = math.sqrt(64.0 + 6.0 * g)
        phi = 2.0 * math.atan(math.sqrt(16.0 - g - r) / (-math.sqrt(16.0 + r)))
        value = (128.0 * r + g * (224.0 + g + 12.0 * r)) / ((g - 32.0) ** 2)
    else:
        raise ValueError("closed forms cover n = 2..5 only")
    return phi, value


def numeric_quantum_bound(
    n: int, gamma: float, *, grid_points: int = 2001, tol: float = 1e-12
):
    """Maximize the ansatz value over phi in [0, pi] (the value is even in phi):
    dense grid bracketing followed by golden-section refinement."""
    phis = np.linspace(0.0, math.pi, grid_points)
    vals = gamma * np.cos(phis / 2.0) ** (n + 1) - np.cos((n + 1) * phis / 2.0)
    j = int(np.argmax(vals))
    a = phis[max(j - 1, 0)]
    b = phis[min(j + 1, grid_points - 1)]
    f = lambda p: quantum_value_formula(n, gamma, p)
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(400):
        if b - a < tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    else:  # pragma: no cover
        raise RuntimeError(f"phi search did not converge for n={n}, gamma={gamma}")
    phi = 0.5 * (a + b)
    return phi, f(phi)


def optimal_quantum_bound(n: int, gamma: float):
    """(phi*, maximal ansatz value): closed forms for n <= 5, numeric beyond."""
    if n < 2:
        raise ValueError("need n >= 2")
    if n <= 5:
        return _closed_form(n, gamma)
    return numeric_quantum_bound(n, gamma)


def kproducible_bounds(n: int, gamma: float) -> dict:
    """k -> k-producible bound of the n-party witness: the k-party maximum
    (1 for k = 1, the k-party optimum otherwise)."""
    bounds = {1: 1.0}
    for k in range(2, n):
        bounds[k] = optimal_quantum_bound(k, gamma)[1]
    return bounds


# --- qudit block observables -------------------------------------------------


def qudit_observables(n: int, d: int, phi: float) -> ObservableAssignment:
    """Block-diagonal qudit observables built from the qubit ansatz.

    Each 2x2 block along the diagonal is the qubit observable; for odd d the
    leftover diagonal entry is +1, except for the last party's second setting
    where it is -1.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    params = AnsatzParams(n=n, phi=phi)
    a = params.alpha
    qubit = (
        math.cos(a) * PAULI_X + math.sin(a) * PAULI_Y,
        math.cos(phi + a) * PAULI_X + math.sin(phi + a) * PAULI_Y,
    )
    rows = []
    for i in range(n):
        mats = []
        for x in range(2):
            mat = np.zeros((d, d), dtype=complex)
            for j in range(d // 2):
                mat[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = qubit[x]
            if d % 2:
                mat[d - 1, d - 1] = -1.0 if (x == 1 and i == n - 1) else 1.0
            mats.append(HermitianOperator(mat))
        rows.append(tuple(mats))
    return ObservableAssignment(n=n, settings_per_party=(2,) * n, ops=tuple(rows))


def expected_qudit_value(n: int, d: int, gamma: float) -> float:
    """Best witness value found on the d-level GHZ state: the qubit optimum for
    even d, and its (d-1)/d mixture with the product tail for odd d."""
    best = optimal_quantum_bound(n, gamma)[1]
    if d % 2 == 0:
        return best
    return (d - 1) / d * best + 1.0 / d


def gme_criterion_odd_d(n: int, d: int, gamma: float) -> bool:
    """Whether the witness certifies genuine n-party entanglement of the
    odd-d GHZ state: (d-1)*S*_n - d*S*_{n-1} > -1."""
    if d < 3 or d % 2 == 0:
        raise ValueError("criterion applies to odd d >= 3")
    if n < 3:
        raise ValueError("need n >= 3")
    s_n = optimal_quantum_bound(n, gamma)[1]
    s_prev = optimal_quantum_bound(n - 1, gamma)[1]
    return (d - 1) * s_n - d * s_prev > -1.0


def find_dmin(n: int, gamma: float, *, cap: int = 10_000):
    """Smallest odd local dimension certified GME by the criterion, or None.

    Once the criterion holds at d it holds for every larger d (it is linear
    in d with positive slope), so the first hit is the minimum.
    """
    d = 3
    while d <= cap:
        if gme_criterion_odd_d(n, d, gamma):
            return d
        d += 2
    return None


def find_dmin_optimized(n: int, *, gamma_step: float = 0.01, cap: int = 10_000):
    """Scan gamma over (0, 2] and return (gamma*, d) minimizing the certified
    odd dimension; the smallest gamma attaining the minimum is reported."""
    best_gamma = None
    best_d = None
    steps = int(round(2.0 / gamma_step))
    for j in range(1, steps + 1):
        gamma = j * gamma_step
        if gamma > 2.0:
            gamma = 2.0
        d = find_dmin(n, gamma, cap=cap)
        if d is not None and (best_d is None or d < best_d):
            best_gamma, best_d = gamma, d
    return best_gamma, best_d


# --- unbalanced GHZ scans -----------------------------------------------------


def near_separable_ghz3_observables() -> ObservableAssignment:
    """Explicit three-party strategy exhibiting nonlocality of the weakly
    entangled theta = 0.07 state: tilted first settings and degenerate or
    z-axis second settings."""
    first = (
        observable_from_angles(0.7734 * math.pi, 0.6767 * math.pi),
        observable_from_angles(0.7457 * math.pi, 0.1533 * math.pi),
        observable_from_angles(0.2295 * math.pi, 0.8300 * math.pi),
    )
    second = (
        HermitianOperator(PAULI_Z),
        HermitianOperator(np.eye(2, dtype=complex)),
        HermitianOperator(-PAULI_Z),
    )
    return ObservableAssignment(
        n=3,
        settings_per_party=(2, 2, 2),
        ops=tuple((first[i], second[i]) for i in range(3)),
    )


@dataclass(frozen=True)
class UnbalancedScanRow:
    theta: float
    value: float
    gme_margin: float  # value minus the (n-1)-party bound
    nonlocality_margin: float  # value minus the local bound 1


def unbalanced_ghz_scan(
    n: int,
    thetas: Sequence[float],
    gamma: float,
    config=None,
) -> list:
    """See-saw the witness on each unbalanced GHZ state of the grid.

    With trivial observables allowed, restart 0 starts from all-identity
    observables whose value is exactly gamma - 1, so at gamma = 2 the reported
    value can never fall below 1 up to solver tolerance.
    """
    from .seesaw import SeesawConfig, optimize_observables

    if n > 5:
        raise ValueError("scan supported for n <= 5")
    cfg = config or SeesawConfig(restarts=6, max_sweeps=300)
    bound_prev = optimal_quantum_bound(n - 1, gamma)[1] if n >= 3 else 1.0
    expr = build_expression(GammaWitness(n=n, gamma=gamma))
    rows = []
    for theta in thetas:
        state = make_ghz_theta(n, theta)
        result = optimize_observables(state, expr, cfg)
        rows.append(
            UnbalancedScanRow(
                theta=float(theta),
                value=result.value,
                gme_margin=result.value - bound_prev,
                nonlocality_margin=result.value - 1.0,
            )
        )
    return rows


# --- figure data -------------------------------------------------------------


def w_state_margin_rows(n_values, gammas, config=None) -> list:
    """Rows (n, gamma, value - 2-producible bound) for W states."""
    from .qcore import make_w
    from .seesaw import SeesawConfig, optimize_observables

    cfg = config or SeesawConfig(restarts=30, max_sweeps=300)
    rows = []
    for n in n_values:
        state = make_w(n)
        for gamma in gammas:
            expr = build_expression(GammaWitness(n=n, gamma=gamma))
            result = optimize_observables(state, expr, cfg)
            bound2 = optimal_quantum_bound(2, gamma)[1]
            rows.append((n, float(gamma), result.value - bound2))
    return rows


def dmin_rows(n_values) -> list:
    """Rows (n, d_min at gamma=2, d_min at tuned gamma, tuned gamma)."""
    rows = []
    for n in n_values:
        d2 = find_dmin(n, 2.0)
        gamma_star, d_star = find_dmin_optimized(n)
        rows.append((n, d2, d_star, gamma_star))
    return rows
