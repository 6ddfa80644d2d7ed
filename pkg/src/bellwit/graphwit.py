"""Stabilizer algebra over graphs and perfect-correlation Bell synthesis.

A graph state's vertex stabilizers generate a group of 2**n signed Pauli
words.  Selecting words that force, classically, a correlation the state
instead anticorrelates yields a two-setting inequality with local bound m-1
and algebraic (quantum) maximum m+1.  Summing the whole group instead yields
a three-setting inequality with quantum value 2**n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .bellexpr import BellExpression, local_bound
from .qcore import (
    HermitianOperator,
    ObservableAssignment,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    StateVector,
    bell_value,
    correlator,
    make_graph_state,
)

I, X, Y, Z = 0, 1, 2, 3
LETTER_CHARS = "IXYZ"
LETTER_MATS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)

# +1 eigenvectors of X, Y, Z
_PLUS_EIGENVECTORS = {
    X: np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    Y: np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0),
    Z: np.array([1.0, 0.0], dtype=complex),
}


class LetterBudgetError(ValueError):
    """A party would need more than two distinct measurement directions."""


class ParadoxCheckError(RuntimeError):
    """A synthesized expression failed its graph-state verification."""


def _letter_product(a: int, b: int):
    """(letter, phase exponent k) with product = i**k * letter."""
    if a == I:
        return b, 0
    if b == I:
        return a, 0
    if a == b:
        return I, 0
    # cyclic X -> Y -> Z -> X picks up +i, anticyclic -i
    if (a, b) in ((X, Y), (Y, Z), (Z, X)):
        return 6 - a - b, 1
    return 6 - a - b, 3


@dataclass(frozen=True)
class PauliString:
    sign: int
    letters: tuple

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        letters = tuple(int(l) for l in self.letters)
        object.__setattr__(self, "letters", letters)
        if any(l not in (I, X, Y, Z) for l in letters):
            raise ValueError("letters must be in {I, X, Y, Z}")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(sign=1, letters=(I,) * n)

    @property
    def n(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("length mismatch")
        phase = 0
        letters = []
        for a, b in zip(self.letters, other.letters):
            letter, k = _letter_product(a, b)
            letters.append(letter)
            phase = (phase + k) % 4
        if phase % 2:
            raise ValueError(
                "imaginary phase survived a product of commuting stabilizer words"
            )
        sign = self.sign * other.sign * (1 if phase == 0 else -1)
        return PauliString(sign=sign, letters=tuple(letters))

    def matrix(self) -> np.ndarray:
        out = np.array([[1.0 + 0.0j]])
        for l in self.letters:
            out = np.kron(out, LETTER_MATS[l])
        return self.sign * out

    def __str__(self):
        return ("+" if self.sign == 1 else "-") + "".join(
            LETTER_CHARS[l] for l in self.letters
        )


@dataclass(frozen=True)
class Graph:
    adjacency: np.ndarray  # symmetric boolean matrix with zero diagonal

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if adj.diagonal().any():
            raise ValueError("adjacency must have zero diagonal")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> tuple:
        """1-based neighbor labels of 1-based vertex i."""
        if not 1 <= i <= self.n:
            raise ValueError(f"vertex {i} out of range 1..{self.n}")
        return tuple(int(j) + 1 for j in np.flatnonzero(self.adjacency[i - 1]))

    def edges(self) -> tuple:
        return tuple(
            (i + 1, j + 1)
            for i in range(self.n)
            for j in range(i + 1, self.n)
            if self.adjacency[i, j]
        )

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ValueError(f"bad edge ({i}, {j})")
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = True
        return cls(adjacency=adj)

    @classmethod
    def parse(cls, text: str) -> "Graph":
        """Edge-list form 'n; i j; i j; ..' or whitespace 0/1 adjacency rows."""
        text = text.strip()
        if not text:
            raise ValueError("empty graph description")
        if ";" in text:
            fields = [f.strip() for f in text.split(";")]
            n = int(fields[0])
            edges = []
            for f in fields[1:]:
                if not f:
                    continue
                i, j = f.split()
                edges.append((int(i), int(j)))
            return cls.from_edges(n, edges)
        rows = [[int(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
        return cls(adjacency=np.array(rows, dtype=bool))

    def to_edge_text(self) -> str:
        return "; ".join([str(self.n)] + [f"{i} {j}" for i, j in self.edges()])


def ring_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("ring needs n >= 3")
    return Graph.from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)])


def linear_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError("chain needs n >= 2")
    return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])


def complete_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return Graph.from_edges(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def g3_graph() -> Graph:
    """The 5-vertex graph used for the G3 inequality: a pentagon with one chord."""
    return Graph.from_edges(5, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (2, 5)])


def g4_graph() -> Graph:
    """The 6-vertex graph used for the G4 inequality."""
    return Graph.from_edges(6, [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6)])


def generator(graph: Graph, i: int) -> PauliString:
    """Vertex stabilizer: X on vertex i, Z on every neighbor."""
    letters = [I] * graph.n
    letters[i - 1] = X
    for j in graph.neighbors(i):
        letters[j - 1] = Z
    return PauliString(sign=1, letters=tuple(letters))


def stabilizer_element(graph: Graph, vertices: Iterable[int]) -> PauliString:
    """Signed product of the generators over a vertex subset (empty: identity)."""
    out = PauliString.identity(graph.n)
    for i in sorted(set(int(v) for v in vertices)):
        out = out * generator(graph, i)
    return out


def stabilizer_set(graph: Graph) -> dict:
    """frozenset(vertices) -> group element, for all 2**n subsets."""
    if graph.n > 16:
        raise ValueError("stabilizer set too large")
    elements = {}
    for r in range(graph.n + 1):
        for combo in combinations(range(1, graph.n + 1), r):
            elements[frozenset(combo)] = stabilizer_element(graph, combo)
    return elements


# --- mapping words to correlators -------------------------------------------


@dataclass(frozen=True)
class CorrelatorMapping:
    expression: BellExpression
    letter_to_setting: tuple  # per party, dict letter -> setting label
    single_letter_parties: tuple  # 1-based parties with one fixed direction
    silent_parties: tuple  # 1-based parties touched by no word


def map_to_correlator(strings: Sequence[PauliString], name: str = "") -> CorrelatorMapping:
    """Map signed Pauli words to correlator terms.

    Per party the distinct non-identity letters (at most two) are assigned
    settings 1 and 2 in X < Y < Z order; identities map to the trivial
    setting.  Each word becomes one term whose coefficient is the word's sign.
    """
    if not strings:
        raise ValueError("need at least one word")
    n = strings[0].n
    letters_used = [set() for _ in range(n)]
    for s in strings:
        if s.n != n:
            raise ValueError("words must share the same length")
        for p, l in enumerate(s.letters):
            if l != I:
                letters_used[p].add(l)
    maps = []
    for p, used in enumerate(letters_used):
        if len(used) > 2:
            raise LetterBudgetError(
                f"party {p + 1} needs {len(used)} measurement directions"
            )
        maps.append({l: j + 1 for j, l in enumerate(sorted(used))})
    terms = []
    for s in strings:
        settings = tuple(maps[p].get(l, 0) for p, l in enumerate(s.letters))
        terms.append((float(s.sign), settings))
    spp = tuple(max(1, len(u)) for u in letters_used)
    expr = BellExpression.from_terms(n, spp, terms, name=name)
    return CorrelatorMapping(
        expression=expr,
        letter_to_setting=tuple(maps),
        single_letter_parties=tuple(
            p + 1 for p, u in enumerate(letters_used) if len(u) == 1
        ),
        silent_parties=tuple(p + 1 for p, u in enumerate(letters_used) if not u),
    )


# --- paradox selections -------------------------------------------------------


def _xor(subsets) -> frozenset:
    out = frozenset()
    for s in subsets:
        out = out ^ frozenset(s)
    return out


@dataclass(frozen=True)
class ParadoxSelection:
    """m stabilizer-group elements whose designated product anticorrelates.

    subsets lists the vertex subsets of the positive words; product_subset
    (default: the symmetric difference of all subsets) designates the word
    whose negation completes the expression.  The product word must carry
    sign -1 and every party may use at most two distinct letters across all
    m+1 words.
    """

    graph: Graph
    subsets: tuple
    product_subset: frozenset | None = None

    def __post_init__(self):
        subsets = tuple(frozenset(int(v) for v in s) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        if len(subsets) < 2:
            raise ValueError("need at least two positive words")
        if len(set(subsets)) != len(subsets):
            raise ValueError("duplicate subsets in selection")
        prod = (
            frozenset(int(v) for v in self.product_subset)
            if self.product_subset is not None
            else _xor(subsets)
        )
        object.__setattr__(self, "product_subset", prod)
        if not prod:
            raise ValueError("product word is the identity; no anticorrelation")
        if prod in subsets:
            raise ValueError("product word coincides with a selected word")
        if stabilizer_element(self.graph, prod).sign != -1:
            raise ValueError("product word must carry sign -1")
        # the letter budget across all m+1 words is validated by the mapper
        map_to_correlator(self.strings())

    @property
    def m(self) -> int:
        return len(self.subsets)

    def strings(self) -> tuple:
        positives = tuple(stabilizer_element(self.graph, s) for s in self.subsets)
        return positives + (stabilizer_element(self.graph, self.product_subset),)


@dataclass(frozen=True)
class SynthesizedInequality:
    name: str
    graph: Graph
    expression: BellExpression
    letter_to_setting: tuple
    quantum_maximum: float
    selection: ParadoxSelection | None = None
    single_letter_parties: tuple = ()

    @property
    def m(self) -> int:
        return self.selection.m if self.selection is not None else 0

    def observables(self) -> ObservableAssignment:
        """Pauli observables realizing the setting dictionary (identity where a
        party is silent)."""
        rows = []
        for p, mapping in enumerate(self.letter_to_setting):
            count = self.expression.settings_per_party[p]
            mats = [PAULI_I] * count
            for letter, setting in mapping.items():
                mats[setting - 1] = LETTER_MATS[letter]
            rows.append(tuple(HermitianOperator(m) for m in mats))
        return ObservableAssignment(
            n=self.expression.n,
            settings_per_party=self.expression.settings_per_party,
            ops=tuple(rows),
        )


def build_paradox_expression(sel: ParadoxSelection, name: str = "") -> SynthesizedInequality:
    """Expression with the m positive words plus the negated product word:
    local bound m-1, quantum value m+1 on the graph state."""
    mapping = map_to_correlator(sel.strings(), name=name)
    expr = BellExpression.from_terms(
        mapping.expression.n,
        mapping.expression.settings_per_party,
        mapping.expression.terms,
        name=name,
        known_bounds={
            "local": {"value": float(sel.m - 1), "provenance": "stabilizer-count"},
            "tsirelson": {"value": float(sel.m + 1), "provenance": "algebraic-maximum"},
        },
    )
    return SynthesizedInequality(
        name=name,
        graph=sel.graph,
        expression=expr,
        letter_to_setting=mapping.letter_to_setting,
        quantum_maximum=float(sel.m + 1),
        selection=sel,
        single_letter_parties=mapping.single_letter_parties,
    )


def three_setting_expression(graph: Graph, name: str = "") -> SynthesizedInequality:
    """Sum of the whole stabilizer group with X, Y, Z as settings 1, 2, 3; the
    identity element stays as the constant term.  Quantum value 2**n."""
    if graph.n > 5:
        raise ValueError("full-group expression supported for n <= 5")
    elements = stabilizer_set(graph)
    order = sorted(elements, key=lambda s: (len(s), sorted(s)))
    terms = []
    for key in order:
        word = elements[key]
        settings = tuple(0 if l == I else l for l in word.letters)
        terms.append((float(word.sign), settings))
    expr = BellExpression.from_terms(
        graph.n,
        (3,) * graph.n,
        terms,
        name=name,
        known_bounds={
            "tsirelson": {"value": float(2**graph.n), "provenance": "algebraic-maximum"}
        },
    )
    maps = tuple({X: 1, Y: 2, Z: 3} for _ in range(graph.n))
    return SynthesizedInequality(
        name=name,
        graph=graph,
        expression=expr,
        letter_to_setting=maps,
        quantum_maximum=float(2**graph.n),
        selection=None,
        single_letter_parties=(),
    )


# --- the catalog --------------------------------------------------------------


def _ring_selection(n: int) -> ParadoxSelection:
    graph = ring_graph(n)
    if n % 2:
        subsets = [frozenset({i}) for i in range(1, n + 1)]
    else:
        subsets = [frozenset({n})] + [frozenset({i, n}) for i in range(1, n)]
    return ParadoxSelection(graph=graph, subsets=tuple(subsets))


def _complete_selection(n: int) -> ParadoxSelection:
    graph = complete_graph(n)
    subsets = tuple(frozenset({i}) for i in range(1, n + 1))
    return ParadoxSelection(
        graph=graph, subsets=subsets, product_subset=frozenset({1, 2, 3})
    )


_LG5_SUBSETS = ({3}, {5}, {1, 5}, {1, 3, 4}, {1, 2, 3, 4})
_LG5_ALT_SUBSETS = ({1}, {3}, {5}, {1, 3, 4}, {2, 3, 5})
_LG6_SUBSETS = ({4}, {5}, {6}, {2, 5}, {2, 3, 5}, {1, 2, 4, 6})
_G3_SUBSETS = ({4}, {1, 5}, {2, 3}, {2, 4}, {2, 5})
_G4_SUBSETS = ({2}, {4}, {6}, {1, 3}, {3, 5})

CATALOG_NAMES = (
    "RG3",
    "RG4",
    "RG5",
    "RG6",
    "FG3",
    "FG4",
    "FG5",
    "FG6",
    "LG5",
    "LG5_alt",
    "LG6",
    "G3",
    "G4",
    "RG3_full",
    "RG4_full",
    "RG5_full",
    "LG5_full",
)


def catalog(name: str) -> SynthesizedInequality:
    """Regenerate a named inequality from its stabilizer selection."""
    key = name.strip()
    if key.endswith("_full"):
        base = key[:-5]
        if base.startswith("RG") and base[2:] in ("3", "4", "5"):
            return three_setting_expression(ring_graph(int(base[2:])), name=key)
        if base == "LG5":
            return three_setting_expression(linear_graph(5), name=key)
        raise ValueError(f"unknown catalog name {name!r}")
    if key.startswith("RG") and key[2:].isdigit():
        n = int(key[2:])
        if not 3 <= n <= 6:
            raise ValueError(f"ring catalog covers n = 3..6, got {n}")
        return build_paradox_expression(_ring_selection(n), name=key)
    if key.startswith("FG") and key[2:].isdigit():
        n = int(key[2:])
        if not 3 <= n <= 6:
            raise ValueError(f"complete-graph catalog covers n = 3..6, got {n}")
        return build_paradox_expression(_complete_selection(n), name=key)
    fixed = {
        "LG5": (linear_graph(5), _LG5_SUBSETS, None),
        "LG5_alt": (linear_graph(5), _LG5_ALT_SUBSETS, None),
        "LG6": (linear_graph(6), _LG6_SUBSETS, None),
        "G3": (g3_graph(), _G3_SUBSETS, None),
        "G4": (g4_graph(), _G4_SUBSETS, None),
    }
    if key not in fixed:
        raise ValueError(f"unknown catalog name {name!r}")
    graph, subsets, prod = fixed[key]
    sel = ParadoxSelection(
        graph=graph,
        subsets=tuple(frozenset(s) for s in subsets),
        product_subset=prod,
    )
    return build_paradox_expression(sel, name=key)


# --- verification --------------------------------------------------------------


@dataclass(frozen=True)
class ParadoxReport:
    name: str
    term_values: tuple  # correlator of each term, in term order
    total: float
    algebraic_maximum: float


def verify_paradox(ineq: SynthesizedInequality, *, atol: float = 1e-10) -> ParadoxReport:
    """Evaluate every term on the graph state with the dictionary observables.

    Positive terms must give +1 and negative terms -1 (the anticorrelation),
    so the total hits the algebraic maximum."""
    state = make_graph_state(ineq.graph)
    assignment = ineq.observables()
    values = []
    for coeff, settings in ineq.expression.terms:
        value = correlator(state, assignment, settings)
        expected = 1.0 if coeff > 0 else -1.0
        if abs(value - expected) > atol:
            raise ParadoxCheckError(
                f"{ineq.name}: term {settings} gives {value:.12f}, expected {expected:+.0f}"
            )
        values.append(value)
    total = math.fsum(c * v for (c, _), v in zip(ineq.expression.terms, values))
    target = ineq.expression.algebraic_maximum
    if abs(total - target) > atol * max(1.0, target):
        raise ParadoxCheckError(
            f"{ineq.name}: total {total!r} != algebraic maximum {target!r}"
        )
    return ParadoxReport(
        name=ineq.name,
        term_values=tuple(values),
        total=total,
        algebraic_maximum=target,
    )


@dataclass(frozen=True)
class BiseparableReport:
    party: int  # 1-based fixed-direction party
    letter: int
    projection_probability: float
    value: float
    quantum_maximum: float
    term_values: tuple


def biseparable_saturation(
    ineq: SynthesizedInequality, *, party: int | None = None, atol: float = 1e-9
) -> BiseparableReport:
    """Check that a fixed-direction party makes the Tsirelson bound reachable
    by a biseparable state.

    The state is the graph state projected, at the fixed party, onto the +1
    eigenvector of its single letter, tensored back with that eigenvector.
    Every selected word then keeps expectation +1, so the expression value
    equals the quantum maximum and the inequality cannot witness depth n.
    Pass `party` explicitly when several parties have a fixed direction.
    """
    if party is None:
        if len(ineq.single_letter_parties) != 1:
            raise ValueError(
                "check requires exactly one party with a single measurement "
                "direction (pass party=.. to pick one)"
            )
        party = ineq.single_letter_parties[0]
    elif party not in ineq.single_letter_parties:
        raise ValueError(f"party {party} does not have a single fixed direction")
    letter = next(iter(ineq.letter_to_setting[party - 1]))
    plus = _PLUS_EIGENVECTORS[letter]
    graph_state = make_graph_state(ineq.graph)
    tensor = graph_state.tensor()
    axis = party - 1
    reduced = np.tensordot(plus.conj(), tensor, axes=([0], [axis]))
    prob = float(np.linalg.norm(reduced) ** 2)
    if prob < 1e-12:
        raise ValueError("projection probability vanishes")
    reduced = reduced / math.sqrt(prob)
    bisep = np.moveaxis(np.multiply.outer(reduced, plus), -1, axis)
    state = StateVector(dims=graph_state.dims, amplitudes=bisep.reshape(-1))
    assignment = ineq.observables()
    term_values = tuple(
        correlator(state, assignment, s) for _, s in ineq.expression.terms
    )
    value = math.fsum(
        c * v for (c, _), v in zip(ineq.expression.terms, term_values)
    )
    if abs(value - ineq.quantum_maximum) > atol:
        raise ParadoxCheckError(
            f"{ineq.name}: biseparable value {value!r} != quantum maximum"
        )
    return BiseparableReport(
        party=party,
        letter=letter,
        projection_probability=prob,
        value=value,
        quantum_maximum=ineq.quantum_maximum,
        term_values=term_values,
    )


# --- selection search -----------------------------------------------------------


def search_paradox_selections(
    graph: Graph,
    *,
    m_min: int = 3,
    m_max: int | None = None,
    max_solutions: int = 64,
    require_two_settings_per_party: bool = True,
) -> tuple:
    """Depth-first search for selections whose full product anticorrelates.

    Candidates are the positive-sign group elements; branches die as soon as
    some party would need a third letter.  By default only selections where
    every party ends up with exactly two measurement directions are kept;
    selections with fixed-direction parties (relaxed mode) saturate their
    quantum maximum biseparably and are useful only as counterexamples.
    Solutions are emitted in a fixed order by increasing word count m, so the
    result is deterministic.  The usable subset is generally not unique.
    """
    if graph.n > 6:
        raise ValueError("search supported for n <= 6")
    elements = stabilizer_set(graph)
    positives = sorted(
        (key for key, word in elements.items() if key and word.sign == 1),
        key=lambda s: (len(s), sorted(s)),
    )
    words = {key: elements[key] for key in elements}
    m_cap = m_max if m_max is not None else graph.n
    solutions = []

    def letters_fit(budgets, word):
        out = []
        for have, l in zip(budgets, word.letters):
            if l != I and l not in have:
                if len(have) >= 2:
                    return None
                have = have | {l}
            out.append(have)
        return out

    def dfs(start, chosen, budgets, acc, m):
        if len(solutions) >= max_solutions:
            return
        if len(chosen) == m:
            if not acc or acc in chosen:
                return
            word = words[acc]
            if word.sign != -1:
                return
            final = letters_fit(budgets, word)
            if final is None:
                return
            if require_two_settings_per_party and any(len(b) != 2 for b in final):
                return
            solutions.append(
                ParadoxSelection(graph=graph, subsets=tuple(chosen))
            )
            return
        for idx in range(start, len(positives)):
            key = positives[idx]
            new_budgets = letters_fit(budgets, words[key])
            if new_budgets is None:
                continue
            dfs(idx + 1, chosen + [key], new_budgets, acc ^ key, m)

    for m in range(m_min, m_cap + 1):
        dfs(0, [], [frozenset() for _ in range(graph.n)], frozenset(), m)
        if len(solutions) >= max_solutions:
            break
    return tuple(solutions)


def enumerated_local_bound(ineq: SynthesizedInequality, **kwargs) -> float:
    """Exact local bound of a synthesized inequality (cross-check against the
    m-1 stabilizer-count value)."""
    return local_bound(ineq.expression, **kwargs).value
