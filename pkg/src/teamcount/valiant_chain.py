"""Paired-problem reduction chain at desk scale: formula splitting, clause
restriction, cycle-cover to perfect-matching, pendant-vertex interpolation,
and matching to negative 2CNF.

A paired instance is a carrier combinatorial problem (cycle covers,
matchings, a CNF) filtered by a companion Sigma_1 3CNF- formula over the
characteristic function of the solution.  Carrier variables and companion
variables share one id space: solution variable i is DIMACS id i+1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional

from . import kernels
from .errors import (BudgetExceededError, EncodingError, OracleFaultError,
                     ParseError, VocabularyError)
from .formula_core import QBFormula, classify, is_cnf_neg, is_kcnf, simplify_clauses
from .counting import CountResult, DEFAULT_BUDGET


@dataclass(frozen=True)
class DirectedGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, tuple[str, str]], ...]   # (name, (tail, head))

    def __post_init__(self):
        names = [n for n, _ in self.edges]
        if len(set(names)) != len(names):
            raise VocabularyError("edge names must be unique")
        vs = set(self.vertices)
        for name, (u, v) in self.edges:
            if u not in vs or v not in vs:
                raise VocabularyError(f"edge {name} uses undeclared vertex")


@dataclass(frozen=True)
class BipartiteGraph:
    left: tuple[str, ...]
    right: tuple[str, ...]
    edges: tuple[tuple[str, tuple[str, str]], ...]   # (name, (left, right))

    def __post_init__(self):
        if set(self.left) & set(self.right):
            raise VocabularyError("left and right vertex sets must be disjoint")
        names = [n for n, _ in self.edges]
        if len(set(names)) != len(names):
            raise VocabularyError("edge names must be unique")
        for name, (u, v) in self.edges:
            if u not in self.left or v not in self.right:
                raise VocabularyError(f"edge {name} must join left to right")


@dataclass(frozen=True)
class PairedInstance:
    kind: str                                 # cycle-cover | matching | perfect-matching | cnf
    psi: QBFormula                            # Sigma_1 3CNF-, over the solution ids
    graph: object = None                      # DirectedGraph or BipartiteGraph
    carrier_cnf: Optional[QBFormula] = None   # for kind "cnf", quantifier-free clauses
    solution_ids: tuple[int, ...] = ()        # for kind "cnf": the counted variables

    def __post_init__(self):
        if self.kind not in ("cycle-cover", "matching", "perfect-matching", "cnf"):
            raise VocabularyError(f"unknown paired kind {self.kind!r}")
        flags = classify(self.psi)
        if "CNF-" not in flags or not is_kcnf(self.psi, 3):
            raise EncodingError("companion formula must be Sigma_1 3CNF-")
        n_solution = len(self.solution_ids) if self.kind == "cnf" else len(self.graph.edges)
        if self.kind == "cnf":
            if self.carrier_cnf is None or self.carrier_cnf.bound:
                raise EncodingError("cnf carrier must be a quantifier-free formula")
        limit = n_solution
        for v in self.psi.free:
            if any(abs(l) == v for cl in self.psi.clauses for l in cl):
                if self.kind == "cnf":
                    if v not in self.solution_ids:
                        raise EncodingError(f"companion free variable {v} is not a solution variable")
                elif v > limit:
                    raise EncodingError(f"companion free variable {v} exceeds the {limit} edges")

    def n_solution_vars(self) -> int:
        return len(self.solution_ids) if self.kind == "cnf" else len(self.graph.edges)


def _psi_accepts(psi: QBFormula, chosen: dict[int, bool]) -> bool:
    assignment = {v: chosen.get(v, False) for v in psi.free}
    residual = simplify_clauses(psi.clauses, assignment)
    if residual is None:
        return False
    return kernels.sat(psi.num_vars, residual)


def count_paired(p: PairedInstance, budget: Optional[int] = None) -> CountResult:
    """Exhaustive paired count: carrier solutions whose characteristic
    function projected-satisfies the companion formula."""
    limit = DEFAULT_BUDGET if budget is None else budget
    nodes = 0
    count = 0

    def psi_ok(selection: dict[int, bool]) -> bool:
        return _psi_accepts(p.psi, selection)

    if p.kind == "cnf":
        ids = tuple(sorted(p.solution_ids))
        if 1 << len(ids) > limit:
            raise BudgetExceededError(f"2^{len(ids)} assignments exceed budget {limit}")
        for mask in range(1 << len(ids)):
            nodes += 1
            chosen = {v: bool(mask >> i & 1) for i, v in enumerate(ids)}
            residual = simplify_clauses(p.carrier_cnf.clauses, chosen)
            if residual is None:
                continue
            if residual:
                raise EncodingError("carrier clauses mention non-solution variables")
            if psi_ok(chosen):
                count += 1
        return CountResult(count, nodes)

    edges = p.graph.edges
    n = len(edges)

    def leaf(selected: list[bool]) -> None:
        nonlocal count
        chosen = {i + 1: selected[i] for i in range(n)}
        if psi_ok(chosen):
            count += 1

    if p.kind in ("matching", "perfect-matching"):
        used: set[str] = set()
        selected = [False] * n
        need_all_left = p.kind == "perfect-matching"

        def bt(i):
            nonlocal nodes
            nodes += 1
            if nodes > limit:
                raise BudgetExceededError(f"enumeration exceeded budget {limit}")
            if i == n:
                if need_all_left and any(v not in used for v in p.graph.left):
                    return
                leaf(selected)
                return
            name, (u, v) = edges[i]
            bt(i + 1)
            if u not in used and v not in used:
                used.add(u)
                used.add(v)
                selected[i] = True
                bt(i + 1)
                selected[i] = False
                used.discard(u)
                used.discard(v)

        bt(0)
        return CountResult(count, nodes)

    if p.kind == "cycle-cover":
        g: DirectedGraph = p.graph
        verts = list(g.vertices)
        out_edges = {v: [] for v in verts}
        for i, (name, (u, v)) in enumerate(edges):
            out_edges[u].append(i)
        heads_used: set[str] = set()
        selected = [False] * n

        def bt(j):
            nonlocal nodes
            nodes += 1
            if nodes > limit:
                raise BudgetExceededError(f"enumeration exceeded budget {limit}")
            if j == len(verts):
                # every vertex has one out-edge; distinct heads of |V| edges cover all
                leaf(selected)
                return
            v = verts[j]
            for ei in out_edges[v]:
                head = edges[ei][1][1]
                if head in heads_used:
                    continue
                heads_used.add(head)
                selected[ei] = True
                bt(j + 1)
                selected[ei] = False
                heads_used.discard(head)

        bt(0)
        return CountResult(count, nodes)

    raise VocabularyError(f"unknown paired kind {p.kind!r}")


# ---------------------------------------------------------------------------
# Chain steps
# ---------------------------------------------------------------------------

def clause_restrict(clause: frozenset[int], variables: frozenset[int]) -> frozenset[int]:
    """Subclause of literals whose variable lies in the given set."""
    return frozenset(l for l in clause if abs(l) in variables)


def split_sigma1_3cnf(f: QBFormula) -> tuple[QBFormula, QBFormula, tuple[int, ...]]:
    """Split a Sigma_1 3CNF into (phi', psi, solution_ids).

    Free-only clauses go to phi', bound-only clauses to psi.  Each mixed
    clause E_i gets a fresh free variable e_i: phi' states e_i <-> not
    E_i|free, psi states e_i -> E_i|bound.  Projected counts are preserved
    over the solution ids (original frees plus the e_i).
    """
    if not is_kcnf(f, 3):
        raise EncodingError("matrix must be 3CNF")
    free = f.free
    bound = f.bound
    phi_clauses: list[frozenset[int]] = []
    psi_clauses: list[frozenset[int]] = []
    next_e = f.num_vars
    e_ids: list[int] = []
    for cl in f.clauses:
        fr = clause_restrict(cl, free)
        bo = clause_restrict(cl, bound)
        if not bo:
            phi_clauses.append(cl)
        elif not fr:
            psi_clauses.append(cl)
        else:
            next_e += 1
            e = next_e
            e_ids.append(e)
            phi_clauses.append(frozenset({e}) | fr)          # e_i ∨ E_i|free
            for lit in fr:
                phi_clauses.append(frozenset({-e, -lit}))    # e_i -> ¬lit
            psi_clauses.append(frozenset({-e}) | bo)         # ¬e_i ∨ E_i|bound
    num = next_e
    phi = QBFormula(num, tuple(phi_clauses), frozenset())
    psi = QBFormula(num, tuple(psi_clauses), bound)
    solution = tuple(sorted(free)) + tuple(e_ids)
    return phi, psi, solution


def junction_conjoin(psi: QBFormula, junctions: tuple[tuple[int, int], ...]) -> QBFormula:
    """psi'' = psi' ∧ /\\ (¬j1 ∨ ¬j2) over junction edge pairs."""
    extra = tuple(frozenset((-a, -b)) for a, b in junctions)
    return QBFormula(psi.num_vars, psi.clauses + extra, psi.bound)


def cc_to_pm(g: DirectedGraph, psi: QBFormula) -> PairedInstance:
    """Bipartite double cover; edge (v1,v2) becomes {v1, v2'}.

    Companion variables are positional, so psi carries over unchanged.
    """
    left = tuple(g.vertices)
    right = tuple(v + "'" for v in g.vertices)
    edges = tuple((name, (u, v + "'")) for name, (u, v) in g.edges)
    bg = BipartiteGraph(left, right, edges)
    return PairedInstance("perfect-matching", psi, graph=bg)


def build_Gk(g: BipartiteGraph, k: int) -> BipartiteGraph:
    """Append k pendant partners per left vertex, adjacent only to it.

    Original edge names and positions are preserved; the companion formula
    never mentions pendant edges.  Matchings of the result decompose as a
    matching of g plus at most one pendant edge per unmatched left vertex,
    giving the (k+1)^r counting identity.
    """
    if k < 1:
        raise VocabularyError("k must be positive")
    right = list(g.right)
    edges = list(g.edges)
    for i, v in enumerate(g.left):
        for j in range(1, k + 1):
            pend = f"__p{i}_{j}"
            right.append(pend)
            edges.append((f"__e{i}_{j}", (v, pend)))
    return BipartiteGraph(g.left, tuple(right), tuple(edges))


def _pad_psi(psi: QBFormula, n_solution: int) -> QBFormula:
    """Re-declare psi over a larger solution id space, keeping bound ids distinct."""
    if psi.num_vars >= n_solution and not (psi.bound & set(range(1, n_solution + 1))):
        return QBFormula(max(psi.num_vars, n_solution), psi.clauses, psi.bound)
    mapping = {}
    nxt = max(n_solution, psi.num_vars)
    for v in sorted(psi.bound):
        if v <= n_solution:
            nxt += 1
            mapping[v] = nxt

    def remap(cl):
        return frozenset((1 if l > 0 else -1) * mapping.get(abs(l), abs(l)) for l in cl)

    bound = frozenset(mapping.get(v, v) for v in psi.bound)
    return QBFormula(nxt, tuple(remap(cl) for cl in psi.clauses), bound)


def pm_to_im_interpolate(g: BipartiteGraph, psi: QBFormula,
                         im_oracle: Optional[Callable[[BipartiteGraph, QBFormula], int]] = None,
                         budget: Optional[int] = None) -> CountResult:
    """Recover the paired perfect-matching count from paired matching counts.

    Queries the imperfect-matching counter on G_k for k = 1..|V1|+1 and
    solves the linear system sum_r A_r (k+1)^r = N_k in exact rationals;
    A_0 is the answer.
    """
    if im_oracle is None:
        def im_oracle(graph, companion):
            inst = PairedInstance("matching", _pad_psi(companion, len(graph.edges)), graph=graph)
            return count_paired(inst, budget).count

    nleft = len(g.left)
    ks = list(range(1, nleft + 2))
    values = []
    for k in ks:
        values.append(im_oracle(build_Gk(g, k), psi))
    # Vandermonde system in the nodes (k+1), unknowns A_0..A_nleft.
    rows = [[Fraction(k + 1) ** r for r in range(nleft + 1)] for k in ks]
    rhs = [Fraction(v) for v in values]
    sol = _solve_exact(rows, rhs)
    for r, x in enumerate(sol):
        if x.denominator != 1 or x < 0:
            raise OracleFaultError(f"interpolated coefficient A_{r} = {x} is not a count")
    return CountResult(int(sol[0]), 0, len(ks))


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rows)
    m = [row[:] + [b] for row, b in zip(rows, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise OracleFaultError("singular interpolation system")
        m[col], m[pivot] = m[pivot], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def im_to_2cnf_neg(g: BipartiteGraph, psi: QBFormula) -> tuple[QBFormula, QBFormula]:
    """Matching constraint as a negative 2CNF: one clause per conflicting
    unordered edge pair; paired counts carry over to (2CNF-, Sigma_1 3CNF-)."""
    n = len(g.edges)
    clauses = []
    for i, (_, (u1, v1)) in enumerate(g.edges):
        for j in range(i + 1, n):
            _, (u2, v2) = g.edges[j]
            if u1 == u2 or v1 == v2:
                clauses.append(frozenset((-(i + 1), -(j + 1))))
    phi = QBFormula(n, tuple(clauses), frozenset())
    return phi, _pad_psi(psi, n)


# ---------------------------------------------------------------------------
# Graph files
# ---------------------------------------------------------------------------

def parse_graph(text: str):
    """`digraph` or `bigraph` header, optional vertex lines, then `NAME U V` edges."""
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if not lines:
        raise ParseError("empty graph file", 0)
    kind = lines[0]
    if kind not in ("digraph", "bigraph"):
        raise ParseError(f"unknown graph header {kind!r}", 1)
    declared_left: list[str] = []
    declared_right: list[str] = []
    declared_vertices: list[str] = []
    edges: list[tuple[str, tuple[str, str]]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if parts[0] == "vertices":
            declared_vertices.extend(parts[1:])
        elif parts[0] == "left":
            declared_left.extend(parts[1:])
        elif parts[0] == "right":
            declared_right.extend(parts[1:])
        elif len(parts) == 3:
            edges.append((parts[0], (parts[1], parts[2])))
        else:
            raise ParseError(f"bad graph line {lineno}", lineno)
    if kind == "digraph":
        verts = list(dict.fromkeys(declared_vertices
                                   + [u for _, (u, v) in edges]
                                   + [v for _, (u, v) in edges]))
        return DirectedGraph(tuple(verts), tuple(edges))
    left = list(dict.fromkeys(declared_left + [u for _, (u, _) in edges]))
    right = list(dict.fromkeys(declared_right + [v for _, (_, v) in edges]))
    return BipartiteGraph(tuple(left), tuple(right), tuple(edges))


def format_graph(g) -> str:
    if isinstance(g, DirectedGraph):
        lines = ["digraph", "vertices " + " ".join(g.vertices)]
    else:
        lines = ["bigraph", "left " + " ".join(g.left), "right " + " ".join(g.right)]
    for name, (u, v) in g.edges:
        lines.append(f"{name} {u} {v}")
    return "\n".join(lines) + "\n"
