"""Correlator-form Bell expressions, exact local bounds, and depth certificates.

An expression is a linear combination of full or marginal correlators over n
parties.  Setting label 0 stands for the trivial measurement (identity), so a
term touching only a subset of parties is a marginal correlator.  The local
bound is computed exactly: the maximum over Bell-local correlations is always
attained at a deterministic strategy, i.e. one sign per party per setting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels

TRIVIAL = 0


class EnumerationCapError(RuntimeError):
    """Deterministic-strategy scan would exceed the configured cap."""


SettingVector = tuple  # length-n tuple over {0, 1, .., s_i}; 0 = trivial


def _check_settings(settings: Sequence[int], settings_per_party: Sequence[int]) -> tuple:
    if len(settings) != len(settings_per_party):
        raise ValueError(
            f"setting vector length {len(settings)} != party count {len(settings_per_party)}"
        )
    out = tuple(int(x) for x in settings)
    for i, x in enumerate(out):
        if x < 0 or x > settings_per_party[i]:
            raise ValueError(
                f"setting {x} out of range for party {i + 1} "
                f"(has {settings_per_party[i]} settings)"
            )
    return out


@dataclass(frozen=True, eq=True)
class BellExpression:
    n: int
    settings_per_party: tuple
    terms: tuple  # ((coeff, settings), ...) with unique setting vectors
    name: str = ""
    known_bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one party")
        if len(self.settings_per_party) != self.n:
            raise ValueError("settings_per_party length must equal n")
        if any(s < 1 for s in self.settings_per_party):
            raise ValueError("every party needs at least one setting")
        if not self.terms:
            raise ValueError("expression needs at least one term")
        seen = set()
        for coeff, settings in self.terms:
            _check_settings(settings, self.settings_per_party)
            if settings in seen:
                raise ValueError(f"duplicate setting vector {settings}")
            seen.add(settings)

    @classmethod
    def from_terms(
        cls,
        n: int,
        settings_per_party: Sequence[int],
        terms: Iterable[tuple],
        name: str = "",
        known_bounds: Mapping | None = None,
    ) -> "BellExpression":
        """Build an expression, merging duplicate setting vectors."""
        spp = tuple(int(s) for s in settings_per_party)
        merged: dict = {}
        order: list = []
        for coeff, settings in terms:
            key = _check_settings(settings, spp)
            if key not in merged:
                merged[key] = 0.0
                order.append(key)
            merged[key] += float(coeff)
        kept = tuple((merged[k], k) for k in order if merged[k] != 0.0)
        if not kept:
            raise ValueError("all terms cancelled; empty expression")
        return cls(
            n=n,
            settings_per_party=spp,
            terms=kept,
            name=name,
            known_bounds=dict(known_bounds or {}),
        )

    @property
    def algebraic_maximum(self) -> float:
        return math.fsum(abs(c) for c, _ in self.terms)

    def coefficient(self, settings: Sequence[int]) -> float:
        key = tuple(int(x) for x in settings)
        for coeff, s in self.terms:
            if s == key:
                return coeff
        return 0.0

    def to_json(self, indent: int | None = 2) -> str:
        payload = {
            "name": self.name,
            "n": self.n,
            "settings_per_party": list(self.settings_per_party),
            "terms": [{"coeff": c, "settings": list(s)} for c, s in self.terms],
            "known_bounds": self.known_bounds,
        }
        return json.dumps(payload, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "BellExpression":
        payload = json.loads(text)
        return cls(
            n=int(payload["n"]),
            settings_per_party=tuple(int(s) for s in payload["settings_per_party"]),
            terms=tuple(
                (float(t["coeff"]), tuple(int(x) for x in t["settings"]))
                for t in payload["terms"]
            ),
            name=payload.get("name", ""),
            known_bounds=payload.get("known_bounds", {}),
        )


@dataclass(frozen=True)
class LocalBoundResult:
    value: float
    assignment: tuple  # per party, per setting label 1..s_i, the sign ±1
    strategies_scanned: int

    def sign(self, party: int, setting: int) -> int:
        if setting == TRIVIAL:
            return 1
        return self.assignment[party][setting - 1]


def evaluate_deterministic(expr: BellExpression, assignment: Sequence[Sequence[int]]) -> float:
    """Value of the expression on a deterministic strategy (correctly rounded)."""
    parts = []
    for coeff, settings in expr.terms:
        sign = 1
        for i, x in enumerate(settings):
            if x != TRIVIAL:
                sign *= assignment[i][x - 1]
        parts.append(coeff * sign)
    return math.fsum(parts)


def local_bound(
    expr: BellExpression,
    *,
    cap_bits: int = 30,
    backend: str | None = None,
) -> LocalBoundResult:
    """Exact local bound by exhaustive scan over deterministic strategies.

    Only settings that actually occur in some term are enumerated; unused
    settings are fixed to +1, which is also the lexicographic tie rule (the
    reported maximizer is the lexicographically smallest, reading party 1
    setting 1 first with +1 before -1).
    """
    used = sorted(
        {(i, x) for _, settings in expr.terms for i, x in enumerate(settings) if x != TRIVIAL}
    )
    n_bits = len(used)
    if n_bits > cap_bits:
        raise EnumerationCapError(
            f"{n_bits} used settings exceed the scan cap of {cap_bits} bits"
        )
    slot = {ix: j for j, ix in enumerate(used)}
    masks = np.zeros(len(expr.terms), dtype=np.int64)
    for t, (_, settings) in enumerate(expr.terms):
        m = 0
        for i, x in enumerate(settings):
            if x != TRIVIAL:
                m |= 1 << (n_bits - 1 - slot[(i, x)])
        masks[t] = m
    coeffs = np.array([c for c, _ in expr.terms], dtype=np.float64)
    _, k_best = _kernels.scan_strategies(masks, coeffs, n_bits, backend)

    assignment = []
    for i, s_i in enumerate(expr.settings_per_party):
        row = []
        for x in range(1, s_i + 1):
            j = slot.get((i, x))
            if j is None:
                row.append(1)
            else:
                bit = (k_best >> (n_bits - 1 - j)) & 1
                row.append(1 - 2 * int(bit))
        assignment.append(tuple(row))
    assignment = tuple(assignment)
    # Re-evaluate the winner with fsum so integer-coefficient expressions come
    # out exact and rational-coefficient ones correctly rounded.
    value = evaluate_deterministic(expr, assignment)
    return LocalBoundResult(
        value=value, assignment=assignment, strategies_scanned=1 << n_bits
    )


def paradox_local_bound(m: int) -> int:
    """Local bound m-1 of an m-positive-term perfect-correlation expression.

    Serves as an analytic cross-check oracle for local_bound on expressions
    synthesized from stabilizer selections.
    """
    if m < 2:
        raise ValueError("need at least two perfect-correlation terms")
    return m - 1


def lift(expr: BellExpression, n_target: int, *, new_settings: int = 2) -> BellExpression:
    """Extend an expression to more parties by padding terms with the trivial
    setting; the local bound is unchanged."""
    if n_target < expr.n:
        raise ValueError(f"cannot lift from {expr.n} to {n_target} parties")
    if n_target == expr.n:
        return expr
    pad = (TRIVIAL,) * (n_target - expr.n)
    return BellExpression(
        n=n_target,
        settings_per_party=expr.settings_per_party + (new_settings,) * (n_target - expr.n),
        terms=tuple((c, s + pad) for c, s in expr.terms),
        name=f"{expr.name}^lifted{n_target}" if expr.name else "",
        known_bounds=dict(expr.known_bounds),
    )


def producible_to_separable(n: int, k: int) -> int:
    """Every k-producible n-partite state is ceil(n/k)-separable."""
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    return -(-n // k)


def separable_to_producible(n: int, m: int) -> int:
    """Every m-separable n-partite state is ceil(n/m)-producible."""
    if not 1 <= m <= n:
        raise ValueError(f"m={m} out of range 1..{n}")
    return -(-n // m)


@dataclass(frozen=True)
class DepthCertificate:
    expression: str
    value: float
    exceeded_k: int  # largest k whose k-producible bound is exceeded (0: none)
    depth: int  # certified lower bound on entanglement depth
    provenance: str = ""


def certify_depth(
    expr: BellExpression,
    value: float,
    bounds: Mapping[int, float],
    *,
    margin: float = 1e-7,
    provenance: str = "",
) -> DepthCertificate:
    """Certify a lower bound on entanglement depth from an observed value.

    bounds maps k to the k-producible bound; exceeding bound(k) by more than
    the numerical margin certifies depth at least k+1.  Exact equality does
    not exceed.
    """
    if not bounds:
        raise ValueError("empty bounds map")
    ks = sorted(int(k) for k in bounds)
    if any(k < 1 or k > expr.n for k in ks):
        raise ValueError("bound keys must lie in 1..n")
    vals = [float(bounds[k]) for k in ks]
    if any(b > a + 1e-12 for a, b in zip(vals[1:], vals)):
        raise ValueError("k-producible bounds must be nondecreasing in k")
    exceeded = [k for k in ks if value > float(bounds[k]) + margin]
    k_max = max(exceeded) if exceeded else 0
    return DepthCertificate(
        expression=expr.name,
        value=float(value),
        exceeded_k=k_max,
        depth=min(k_max + 1, expr.n),
        provenance=provenance,
    )
