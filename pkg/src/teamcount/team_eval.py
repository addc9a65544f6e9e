"""Lax team-semantics evaluation, Tarskian evaluation, and the atom registry.

The evaluator follows the lax semantics exactly: disjunction splits may
overlap and existential quantifiers supply nonempty value sets.  Soundness-
preserving fast paths exploit the closure theorems — flat formulas evaluate
pointwise, downward-closed existentials need only singleton supplements,
union-closed subformulas have unique maximal satisfying subteams — and the
definitional search remains as the fallback for independence and registered
atoms.  Tests cross-check every path against a definitional reference
evaluator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from .errors import BudgetExceededError, EvaluationError, RegistryError
from .formula_core import (
    And, DepAtom, EqAtom, Exists, ExistsRel, Forall, Formula, GenAtom,
    InclAtom, IndepAtom, Or, RelAtom, BUILTIN_RELS, conjuncts, free_vars,
)
from .structures import Structure, Team, builtin_holds

# Hard cap on the definitional cover/supplement searches; beyond this the
# evaluation is refused rather than silently truncated.
NAIVE_SEARCH_LIMIT = 2 ** 22


@dataclass(frozen=True)
class GeneralizedAtomDef:
    """A generalized dependency atom: name, type, and a predicate on
    (domain size, restricted team relations).

    The evaluator must be deterministic and closed under isomorphisms; the
    latter is the registrant's obligation and is not checked.
    """
    name: str
    type: tuple[int, ...]
    evaluator: Callable[[int, tuple[frozenset[tuple[int, ...]], ...]], bool]


class AtomRegistry:
    def __init__(self):
        self._defs: dict[str, GeneralizedAtomDef] = {}

    def register(self, defn: GeneralizedAtomDef) -> str:
        if defn.name in self._defs:
            raise RegistryError(f"atom {defn.name!r} already registered")
        if not defn.type or any(i <= 0 for i in defn.type):
            raise RegistryError(f"atom type must be positive integers, got {defn.type}")
        self._defs[defn.name] = defn
        return defn.name

    def get(self, name: str) -> GeneralizedAtomDef:
        if name not in self._defs:
            raise RegistryError(f"atom {name!r} is not registered")
        return self._defs[name]

    def types(self) -> dict[str, tuple[int, ...]]:
        return {name: d.type for name, d in self._defs.items()}


DEFAULT_REGISTRY = AtomRegistry()


def register_atom(defn: GeneralizedAtomDef, registry: Optional[AtomRegistry] = None) -> str:
    return (registry or DEFAULT_REGISTRY).register(defn)


# ---------------------------------------------------------------------------
# Tarskian evaluation
# ---------------------------------------------------------------------------

def _extend(vars_, row, var, value):
    if var in vars_:
        i = vars_.index(var)
        return vars_, row[:i] + (value,) + row[i + 1:]
    return vars_ + (var,), row + (value,)


def _tarski(a: Structure, vars_, row, phi, rel_env) -> bool:
    if isinstance(phi, RelAtom):
        try:
            args = tuple(row[vars_.index(v)] for v in phi.args)
        except ValueError:
            raise EvaluationError(f"unbound variable in {phi.args}")
        if phi.name in BUILTIN_RELS:
            holds = builtin_holds(a.size, phi.name, args)
        elif rel_env and phi.name in rel_env:
            if len(args) != rel_env[phi.name][0]:
                raise EvaluationError(
                    f"relation variable {phi.name!r} has arity {rel_env[phi.name][0]}, got {len(args)}")
            holds = args in rel_env[phi.name][1]
        elif phi.name in a.relations:
            holds = args in a.relations[phi.name]
        else:
            raise EvaluationError(f"unknown relation {phi.name!r}")
        return holds == phi.positive
    if isinstance(phi, EqAtom):
        try:
            l = row[vars_.index(phi.left)]
            r = row[vars_.index(phi.right)]
        except ValueError:
            raise EvaluationError(f"unbound variable in {phi.left}={phi.right}")
        return (l == r) == phi.positive
    if isinstance(phi, And):
        return _tarski(a, vars_, row, phi.left, rel_env) and _tarski(a, vars_, row, phi.right, rel_env)
    if isinstance(phi, Or):
        return _tarski(a, vars_, row, phi.left, rel_env) or _tarski(a, vars_, row, phi.right, rel_env)
    if isinstance(phi, Exists):
        return any(_tarski(a, *_extend(vars_, row, phi.var, v), phi.body, rel_env)
                   for v in range(a.size))
    if isinstance(phi, Forall):
        return all(_tarski(a, *_extend(vars_, row, phi.var, v), phi.body, rel_env)
                   for v in range(a.size))
    if isinstance(phi, ExistsRel):
        universe = list(itertools.product(range(a.size), repeat=phi.arity))
        env = dict(rel_env) if rel_env else {}
        for mask in range(1 << len(universe)):
            rel = frozenset(t for i, t in enumerate(universe) if mask >> i & 1)
            env[phi.name] = (phi.arity, rel)
            if _tarski(a, vars_, row, phi.body, env):
                return True
        return False
    if isinstance(phi, (DepAtom, InclAtom, IndepAtom, GenAtom)):
        raise EvaluationError(f"dependency atom {type(phi).__name__} has no Tarskian semantics")
    raise TypeError(f"not a formula node: {phi!r}")


def eval_tarski(a: Structure, s: Mapping[str, int], phi: Formula,
                rel_env: Optional[Mapping[str, tuple[int, frozenset]]] = None) -> bool:
    """Standard single-assignment truth; built-ins resolved arithmetically."""
    vars_ = tuple(sorted(s))
    row = tuple(s[v] for v in vars_)
    return _tarski(a, vars_, row, phi, rel_env)


# ---------------------------------------------------------------------------
# Closure-flag analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Flags:
    flat: bool
    dc: bool   # downward closed
    uc: bool   # union closed


_FLAT = _Flags(True, True, True)
_GENERIC = _Flags(False, False, False)


def _analyze(phi: Formula, cache: dict) -> _Flags:
    got = cache.get(phi)
    if got is not None:
        return got
    if isinstance(phi, (RelAtom, EqAtom)):
        f = _FLAT
    elif isinstance(phi, DepAtom):
        f = _Flags(False, True, False)
    elif isinstance(phi, InclAtom):
        f = _Flags(False, False, True)
    elif isinstance(phi, (IndepAtom, GenAtom)):
        f = _GENERIC
    elif isinstance(phi, (And, Or)):
        l = _analyze(phi.left, cache)
        r = _analyze(phi.right, cache)
        f = _Flags(l.flat and r.flat, l.dc and r.dc, l.uc and r.uc)
    elif isinstance(phi, (Exists, Forall)):
        f = _analyze(phi.body, cache)
    elif isinstance(phi, ExistsRel):
        raise EvaluationError("second-order prefix is not a team formula")
    else:
        raise TypeError(f"not a formula node: {phi!r}")
    cache[phi] = f
    return f


# ---------------------------------------------------------------------------
# Team evaluation
# ---------------------------------------------------------------------------

class _Evaluator:
    def __init__(self, a: Structure, registry: AtomRegistry):
        self.a = a
        self.registry = registry
        self.flag_cache: dict = {}
        self.memo: dict = {}
        self.maxsub_memo: dict = {}
        self.tarski_cache: dict = {}

    def flags(self, phi) -> _Flags:
        return _analyze(phi, self.flag_cache)

    def row_sat(self, vars_, row, phi) -> bool:
        key = (phi, vars_, row)
        got = self.tarski_cache.get(key)
        if got is None:
            got = _tarski(self.a, vars_, row, phi, None)
            self.tarski_cache[key] = got
        return got

    # -- quantifier mechanics ------------------------------------------------

    def expand_all(self, vars_, rows, var):
        """X[A/x]: extend every assignment with every domain value."""
        if var in vars_:
            i = vars_.index(var)
            new_rows = frozenset(row[:i] + (v,) + row[i + 1:]
                                 for row in rows for v in range(self.a.size))
            return vars_, new_rows
        new_rows = frozenset(row + (v,) for row in rows for v in range(self.a.size))
        return vars_ + (var,), new_rows

    # -- main dispatch --------------------------------------------------------

    def ev(self, vars_, rows, phi) -> bool:
        key = (phi, vars_, rows)
        got = self.memo.get(key)
        if got is not None:
            return got
        res = self._ev(vars_, rows, phi)
        self.memo[key] = res
        return res

    def _ev(self, vars_, rows, phi) -> bool:
        fl = self.flags(phi)
        if fl.flat:
            return all(self.row_sat(vars_, row, phi) for row in rows)
        if isinstance(phi, And):
            return self.ev(vars_, rows, phi.left) and self.ev(vars_, rows, phi.right)
        if isinstance(phi, Or):
            return self._ev_or(vars_, rows, phi)
        if isinstance(phi, Exists):
            return self._ev_exists(vars_, rows, phi)
        if isinstance(phi, Forall):
            return self.ev(*self.expand_all(vars_, rows, phi.var), phi.body)
        if isinstance(phi, DepAtom):
            return self._ev_dep(vars_, rows, phi)
        if isinstance(phi, InclAtom):
            return self._ev_incl(vars_, rows, phi)
        if isinstance(phi, IndepAtom):
            return self._ev_indep(vars_, rows, phi)
        if isinstance(phi, GenAtom):
            return self._ev_gen(vars_, rows, phi)
        raise EvaluationError(f"cannot evaluate {type(phi).__name__} on a team")

    # -- atoms ----------------------------------------------------------------

    def _proj(self, vars_, row, tup):
        try:
            return tuple(row[vars_.index(v)] for v in tup)
        except ValueError:
            raise EvaluationError(f"unbound variable in {tup}")

    def _ev_dep(self, vars_, rows, phi) -> bool:
        seen: dict = {}
        for row in rows:
            key = self._proj(vars_, row, phi.determinants)
            val = self._proj(vars_, row, (phi.dependent,))
            if seen.setdefault(key, val) != val:
                return False
        return True

    def _ev_incl(self, vars_, rows, phi) -> bool:
        right_vals = {self._proj(vars_, row, phi.right) for row in rows}
        return all(self._proj(vars_, row, phi.left) in right_vals for row in rows)

    def _ev_indep(self, vars_, rows, phi) -> bool:
        groups: dict = {}
        for row in rows:
            cond = self._proj(vars_, row, phi.condition)
            l = self._proj(vars_, row, phi.left)
            r = self._proj(vars_, row, phi.right)
            groups.setdefault(cond, set()).add((l, r))
        for pairs in groups.values():
            lefts = {l for l, _ in pairs}
            rights = {r for _, r in pairs}
            if any((l, r) not in pairs for l in lefts for r in rights):
                return False
        return True

    def _ev_gen(self, vars_, rows, phi) -> bool:
        defn = self.registry.get(phi.name)
        if tuple(len(t) for t in phi.tuples) != tuple(defn.type):
            raise EvaluationError(
                f"atom {phi.name!r} expects tuple arities {defn.type}, got {tuple(len(t) for t in phi.tuples)}")
        rels = tuple(frozenset(self._proj(vars_, row, tup) for row in rows)
                     for tup in phi.tuples)
        return bool(defn.evaluator(self.a.size, rels))

    # -- disjunction ----------------------------------------------------------

    def _ev_or(self, vars_, rows, phi) -> bool:
        l, r = phi.left, phi.right
        fl, fr = self.flags(l), self.flags(r)
        if fl.flat:
            must = frozenset(row for row in rows if not self.row_sat(vars_, row, l))
            return self._superset_sat(vars_, must, rows, r)
        if fr.flat:
            must = frozenset(row for row in rows if not self.row_sat(vars_, row, r))
            return self._superset_sat(vars_, must, rows, l)
        if fl.uc and fr.uc:
            return self.maxsub(vars_, rows, l) | self.maxsub(vars_, rows, r) == rows
        if fl.uc and fr.dc:
            return self.ev(vars_, rows - self.maxsub(vars_, rows, l), r)
        if fr.uc and fl.dc:
            return self.ev(vars_, rows - self.maxsub(vars_, rows, r), l)
        if fl.dc and fr.dc:
            # Downward closure lets overlapping covers shrink to partitions.
            if self.ev(vars_, rows, l) or self.ev(vars_, rows, r):
                return True
            return self._partition_search(vars_, rows, l, r)
        # Definitional cover search: Y satisfying left, some Z covering the rest.
        order = sorted(rows)
        if 1 << len(order) > NAIVE_SEARCH_LIMIT:
            raise BudgetExceededError(
                f"cover search over {len(order)} assignments exceeds the evaluation budget")
        for mask in range(1 << len(order)):
            y = frozenset(t for i, t in enumerate(order) if mask >> i & 1)
            if self.ev(vars_, y, l) and self._superset_sat(vars_, rows - y, rows, r):
                return True
        return False

    def _superset_sat(self, vars_, must, rows, phi) -> bool:
        """Does some Z with must ⊆ Z ⊆ rows satisfy phi?"""
        f = self.flags(phi)
        if f.dc or f.flat:
            return self.ev(vars_, must, phi)
        if f.uc:
            return must <= self.maxsub(vars_, rows, phi)
        extra = sorted(rows - must)
        if 1 << len(extra) > NAIVE_SEARCH_LIMIT:
            raise BudgetExceededError(
                f"superset search over {len(extra)} assignments exceeds the evaluation budget")
        for mask in range(1 << len(extra)):
            z = must | frozenset(t for i, t in enumerate(extra) if mask >> i & 1)
            if self.ev(vars_, z, phi):
                return True
        return False

    def _partition_search(self, vars_, rows, l, r) -> bool:
        order = sorted(rows)
        if 1 << len(order) > NAIVE_SEARCH_LIMIT:
            raise BudgetExceededError(
                f"partition search over {len(order)} assignments exceeds the evaluation budget")
        for mask in range(1 << len(order)):
            y = frozenset(t for i, t in enumerate(order) if mask >> i & 1)
            if self.ev(vars_, y, l) and self.ev(vars_, rows - y, r):
                return True
        return False

    # -- existential quantifier ------------------------------------------------

    def _ev_exists(self, vars_, rows, phi) -> bool:
        fb = self.flags(phi.body)
        if fb.flat:
            return all(
                any(self.row_sat(*_extend(vars_, row, phi.var, v), phi.body)
                    for v in range(self.a.size))
                for row in rows)
        if fb.dc:
            return self._exists_dc_block(vars_, rows, phi)
        if fb.uc:
            evars, erows = self.expand_all(vars_, rows, phi.var)
            m = self.maxsub(evars, erows, phi.body)
            return all(
                any(_extend(vars_, row, phi.var, v)[1] in m for v in range(self.a.size))
                for row in rows)
        return self._exists_naive(vars_, rows, phi)

    def _exists_dc_block(self, vars_, rows, phi) -> bool:
        """Singleton supplements for a downward-closed quantifier block.

        Consecutive existentials are searched jointly by backtracking with
        per-assignment choices; flat conjuncts and dependence atoms prune
        eagerly, the remaining conjuncts are checked on the completed team.
        """
        block = []
        node = phi
        while isinstance(node, Exists):
            block.append(node.var)
            node = node.body
        body = node
        new_vars = vars_
        for v in block:
            if v not in new_vars:
                new_vars = new_vars + (v,)
        immediate = []
        dep_parts = []
        deferred = []
        for part in conjuncts(body):
            f = self.flags(part)
            if f.flat:
                immediate.append(part)
            elif isinstance(part, DepAtom):
                dep_parts.append(part)
            else:
                deferred.append(part)

        order = sorted(rows)
        size = self.a.size
        choices = list(itertools.product(range(size), repeat=len(block)))
        dep_maps: list[dict] = [{} for _ in dep_parts]
        chosen: list = []

        def build(row, choice):
            vr, rr = vars_, row
            for var, val in zip(block, choice):
                vr, rr = _extend(vr, rr, var, val)
            # align to new_vars ordering
            if vr != new_vars:
                idx = {v: i for i, v in enumerate(vr)}
                rr = tuple(rr[idx[v]] for v in new_vars)
            return rr

        def bt(i) -> bool:
            if i == len(order):
                team = frozenset(chosen)
                return all(self.ev(new_vars, team, d) for d in deferred)
            for choice in choices:
                new_row = build(order[i], choice)
                if not all(self.row_sat(new_vars, new_row, imm) for imm in immediate):
                    continue
                touched = []
                ok = True
                for d, dmap in zip(dep_parts, dep_maps):
                    key = self._proj(new_vars, new_row, d.determinants)
                    val = new_row[new_vars.index(d.dependent)]
                    if key in dmap:
                        if dmap[key] != val:
                            ok = False
                            break
                    else:
                        dmap[key] = val
                        touched.append((dmap, key))
                if ok:
                    chosen.append(new_row)
                    if bt(i + 1):
                        return True
                    chosen.pop()
                for dmap, key in touched:
                    del dmap[key]
            return False

        return bt(0)

    def _exists_naive(self, vars_, rows, phi) -> bool:
        """Definitional lax semantics: per-assignment nonempty value sets."""
        order = sorted(rows)
        size = self.a.size
        n_choices = (1 << size) - 1
        if n_choices ** max(len(order), 1) > NAIVE_SEARCH_LIMIT:
            raise BudgetExceededError(
                f"supplement search over {len(order)} assignments exceeds the evaluation budget")
        evars = vars_ if phi.var in vars_ else vars_ + (phi.var,)

        def ext(row, value):
            return _extend(vars_, row, phi.var, value)[1]

        def bt(i, acc):
            if i == len(order):
                return self.ev(evars, frozenset(acc), phi.body)
            for mask in range(1, 1 << size):
                added = [ext(order[i], v) for v in range(size) if mask >> v & 1]
                if bt(i + 1, acc + added):
                    return True
            return False

        return bt(0, [])

    # -- maximal subteams for union-closed formulas ----------------------------

    def maxsub(self, vars_, rows, phi) -> frozenset:
        """Greatest subteam satisfying a union-closed formula (fixpoint form)."""
        key = (phi, vars_, rows)
        got = self.maxsub_memo.get(key)
        if got is not None:
            return got
        res = self._maxsub(vars_, rows, phi)
        self.maxsub_memo[key] = res
        return res

    def _maxsub(self, vars_, rows, phi) -> frozenset:
        f = self.flags(phi)
        if not f.uc:
            raise EvaluationError("maxsub requires a union-closed formula")
        if f.flat:
            return frozenset(row for row in rows if self.row_sat(vars_, row, phi))
        if isinstance(phi, InclAtom):
            alive = rows
            while True:
                right_vals = {self._proj(vars_, row, phi.right) for row in alive}
                nxt = frozenset(row for row in alive
                                if self._proj(vars_, row, phi.left) in right_vals)
                if nxt == alive:
                    return alive
                alive = nxt
        if isinstance(phi, And):
            alive = rows
            while True:
                nxt = self.maxsub(vars_, self.maxsub(vars_, alive, phi.left), phi.right)
                if nxt == alive:
                    return alive
                alive = nxt
        if isinstance(phi, Or):
            return self.maxsub(vars_, rows, phi.left) | self.maxsub(vars_, rows, phi.right)
        if isinstance(phi, Exists):
            evars, erows = self.expand_all(vars_, rows, phi.var)
            m = self.maxsub(evars, erows, phi.body)
            return frozenset(row for row in rows
                             if any(_extend(vars_, row, phi.var, v)[1] in m
                                    for v in range(self.a.size)))
        if isinstance(phi, Forall):
            alive = rows
            while True:
                evars, erows = self.expand_all(vars_, alive, phi.var)
                m = self.maxsub(evars, erows, phi.body)
                nxt = frozenset(row for row in alive
                                if all(_extend(vars_, row, phi.var, v)[1] in m
                                       for v in range(self.a.size)))
                if nxt == alive:
                    return alive
                alive = nxt
        raise EvaluationError(f"maxsub cannot handle {type(phi).__name__}")


def eval_team(a: Structure, team: Team, phi: Formula,
              registry: Optional[AtomRegistry] = None) -> bool:
    """A ⊨_X phi under lax team semantics."""
    missing = free_vars(phi) - set(team.domain)
    if missing:
        raise EvaluationError(f"free variables {sorted(missing)} not in team domain {team.domain}")
    ev = _Evaluator(a, registry or DEFAULT_REGISTRY)
    return ev.ev(team.domain, team.rows, phi)


def max_subteam_fixpoint(a: Structure, team: Team, phi: Formula,
                         registry: Optional[AtomRegistry] = None) -> Team:
    """Fixpoint-style maximal satisfying subteam for union-closed formulas.

    Internal fast route; the public contract lives in `counting.max_subteam`.
    """
    ev = _Evaluator(a, registry or DEFAULT_REGISTRY)
    return Team(team.domain, ev.maxsub(team.domain, team.rows, phi))
