"""Counting engines: teams, relations, Boolean assignments, maximal subteams,
the union-closed team enumerator, and the self-reducible DualHorn counter.

`count_teams` is the definitional brute-force engine the reductions are
checked against; the smarter counters (`count_inclusion_teams`,
`count_sigma1_dualhorn`) must agree with it exactly on shared instances.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from . import kernels
from .errors import BudgetExceededError, EncodingError, EvaluationError
from .formula_core import (
    And, DepAtom, EqAtom, Exists, ExistsRel, Forall, Formula, GenAtom,
    InclAtom, IndepAtom, Or, QBFormula, RelAtom, free_vars, is_dualhorn,
    simplify_clauses,
)
from .structures import Structure, Team, full_team
from .team_eval import AtomRegistry, DEFAULT_REGISTRY, _Evaluator, eval_tarski

DEFAULT_BUDGET = 2 ** 24


@dataclass
class CountResult:
    count: int
    nodes_visited: int = 0
    oracle_calls: int = 0


def _check_budget(space: int, budget: Optional[int]) -> None:
    limit = DEFAULT_BUDGET if budget is None else budget
    if space > limit:
        raise BudgetExceededError(f"candidate space {space} exceeds budget {limit}")


def _team_candidates(size: int, xbar: tuple[str, ...]) -> list[tuple[int, ...]]:
    return sorted(itertools.product(range(size), repeat=len(xbar)))


def _count_teams_range(a, phi, xbar, rows, lo, hi, registry) -> tuple[int, int]:
    ev = _Evaluator(a, registry)
    count = 0
    for mask in range(lo, hi):
        team = frozenset(t for i, t in enumerate(rows) if mask >> i & 1)
        if ev.ev(xbar, team, phi):
            count += 1
    return count, hi - lo


def _count_teams_worker(args):
    a, phi, xbar, rows, lo, hi = args
    return _count_teams_range(a, phi, xbar, rows, lo, hi, DEFAULT_REGISTRY)[0]


def count_teams(a: Structure, phi: Formula, xbar: tuple[str, ...],
                registry: Optional[AtomRegistry] = None,
                budget: Optional[int] = None, jobs: int = 1) -> CountResult:
    """|{X ∈ team(A, xbar) : X nonempty, A ⊨_X phi}| by full enumeration."""
    if not free_vars(phi) <= set(xbar):
        raise EvaluationError(f"free variables of the formula must lie in {xbar}")
    rows = _team_candidates(a.size, xbar)
    space = 1 << len(rows)
    _check_budget(space - 1, budget)
    registry = registry or DEFAULT_REGISTRY
    if jobs > 1 and space > 64:
        chunk = (space + jobs - 1) // jobs
        ranges = [(a, phi, xbar, rows, max(1, i * chunk), min(space, (i + 1) * chunk))
                  for i in range(jobs)]
        ranges = [r for r in ranges if r[4] < r[5]]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            count = sum(pool.map(_count_teams_worker, ranges))
        return CountResult(count, space - 1)
    count, visited = _count_teams_range(a, phi, xbar, rows, 1, space, registry)
    return CountResult(count, visited)


def count_relations(a: Structure, phi: Formula,
                    free_rels: tuple[tuple[str, int], ...],
                    free_individuals: tuple[str, ...] = (),
                    nonempty_only: bool = False,
                    budget: Optional[int] = None) -> CountResult:
    """|{(S_1..S_k, c_1..c_l) : A ⊨ phi}| over relation and element tuples.

    Second-order quantifiers inside phi are allowed only as explicit
    ExistsRel nodes (evaluated by enumeration).  With nonempty_only, tuples
    whose relations are all empty are skipped.
    """
    universes = []
    space = 1
    for name, arity in free_rels:
        u = sorted(itertools.product(range(a.size), repeat=arity))
        universes.append(u)
        space *= 1 << len(u)
    space *= a.size ** len(free_individuals)
    _check_budget(space, budget)

    count = 0
    visited = 0
    masks = [range(1 << len(u)) for u in universes]
    for combo in itertools.product(*masks):
        if nonempty_only and all(m == 0 for m in combo):
            continue
        rel_env = {
            name: (arity, frozenset(t for i, t in enumerate(universes[j]) if combo[j] >> i & 1))
            for j, (name, arity) in enumerate(free_rels)
        }
        for values in itertools.product(range(a.size), repeat=len(free_individuals)):
            visited += 1
            s = dict(zip(free_individuals, values))
            if eval_tarski(a, s, phi, rel_env):
                count += 1
    return CountResult(count, visited)


def count_assignments(f: QBFormula, mode: str = "all",
                      budget: Optional[int] = None) -> CountResult:
    """Exact Boolean counting.

    all: satisfying assignments of the matrix over every variable.
    projected: free assignments with some satisfying bound extension.
    star: projected, disregarding the all-0 assignment to the free variables.
    """
    limit = DEFAULT_BUDGET if budget is None else budget
    try:
        if mode == "all":
            count, nodes = kernels.count_models(f.num_vars, f.clauses, limit)
            return CountResult(count, nodes)
        if mode in ("projected", "star"):
            count, nodes = kernels.count_projected(f.num_vars, f.clauses, sorted(f.free), limit)
            if mode == "projected":
                return CountResult(count, nodes)
            residual = simplify_clauses(f.clauses, {v: False for v in f.free})
            if residual is not None and kernels.sat(f.num_vars, residual, limit):
                count -= 1
            return CountResult(count, nodes)
    except ValueError as exc:
        raise BudgetExceededError(str(exc)) from exc
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Inclusion-logic machinery
# ---------------------------------------------------------------------------

def _require_inclusion_fragment(phi: Formula) -> None:
    if isinstance(phi, (RelAtom, EqAtom, InclAtom)):
        return
    if isinstance(phi, (DepAtom, IndepAtom, GenAtom, ExistsRel)):
        raise EvaluationError(f"{type(phi).__name__} is not part of the inclusion fragment")
    if isinstance(phi, (And, Or)):
        _require_inclusion_fragment(phi.left)
        _require_inclusion_fragment(phi.right)
        return
    if isinstance(phi, (Exists, Forall)):
        _require_inclusion_fragment(phi.body)
        return
    raise TypeError(f"not a formula node: {phi!r}")


class _MaxSubteam:
    """The stated algorithm: union of satisfying subteams, memoized."""

    def __init__(self, a, phi, domain, registry):
        self.ev = _Evaluator(a, registry)
        self.phi = phi
        self.domain = domain
        self.memo: dict = {}

    def __call__(self, rows: frozenset) -> frozenset:
        got = self.memo.get(rows)
        if got is not None:
            return got
        if self.ev.ev(self.domain, rows, self.phi):
            res = rows
        elif not rows:
            res = rows
        else:
            res = frozenset()
            for s in rows:
                res = res | self(rows - {s})
        self.memo[rows] = res
        return res


def max_subteam(a: Structure, team: Team, phi: Formula,
                registry: Optional[AtomRegistry] = None) -> Team:
    """Union of all subteams of X satisfying an FO(⊆) formula.

    By union closure the result itself satisfies phi and contains every
    satisfying subteam.  Computed extensionally by the recursive-union
    algorithm; `team_eval.max_subteam_fixpoint` is the replaceable fast route.
    """
    _require_inclusion_fragment(phi)
    finder = _MaxSubteam(a, phi, team.domain, registry or DEFAULT_REGISTRY)
    return Team(team.domain, finder(team.rows))


def count_inclusion_teams(a: Structure, phi: Formula, xbar: tuple[str, ...],
                          registry: Optional[AtomRegistry] = None,
                          budget: Optional[int] = None) -> CountResult:
    """Count distinct nonempty satisfying teams by the branching enumeration:
    start from the maximal subteam of the full team, then repeatedly visit
    max_subteam(T \\ {s}), deduplicating visited teams."""
    _require_inclusion_fragment(phi)
    if not free_vars(phi) <= set(xbar):
        raise EvaluationError(f"free variables of the formula must lie in {xbar}")
    limit = DEFAULT_BUDGET if budget is None else budget
    finder = _MaxSubteam(a, phi, xbar, registry or DEFAULT_REGISTRY)
    x0 = finder(full_team(a.size, xbar).rows)
    visited: set[frozenset] = set()
    calls = 1
    if x0:
        visited.add(x0)
        queue = [x0]
        while queue:
            t = queue.pop()
            for s in sorted(t):
                calls += 1
                if calls > limit:
                    raise BudgetExceededError(f"enumeration exceeded budget {limit}")
                m = finder(t - {s})
                if m and m not in visited:
                    visited.add(m)
                    queue.append(m)
    return CountResult(len(visited), calls)


# ---------------------------------------------------------------------------
# DualHorn
# ---------------------------------------------------------------------------

def dualhorn_sat(f: QBFormula) -> bool:
    """Satisfiability of a quantifier-free DualHorn CNF by propagation."""
    if f.bound:
        raise EncodingError("dualhorn_sat expects a quantifier-free formula")
    if not is_dualhorn(f):
        raise EncodingError("formula is not DualHorn")
    return kernels.dualhorn_sat(f.num_vars, f.clauses)


def count_sigma1_dualhorn(f: QBFormula, budget: Optional[int] = None) -> CountResult:
    """Projected counting for Sigma_1 DualHorn by the branching recursion:
    per free variable try 0 then 1, simplify, keep satisfiable branches."""
    if not is_dualhorn(f):
        raise EncodingError("matrix is not DualHorn")
    limit = DEFAULT_BUDGET if budget is None else budget
    free_order = sorted(f.free)
    nodes = 0

    def rec(clauses, i) -> int:
        nonlocal nodes
        nodes += 1
        if nodes > limit:
            raise BudgetExceededError(f"enumeration exceeded budget {limit}")
        if i == len(free_order):
            return 1
        total = 0
        for value in (False, True):
            residual = simplify_clauses(clauses, {free_order[i]: value})
            if residual is None:
                continue
            if kernels.dualhorn_sat(f.num_vars, residual):
                total += rec(residual, i + 1)
        return total

    if not kernels.dualhorn_sat(f.num_vars, f.clauses):
        return CountResult(0, 1)
    return CountResult(rec(f.clauses, 0), nodes)
