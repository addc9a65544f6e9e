"""Constructive counting reductions and the built-in library formulas.

The dependence-logic reduction emits, per normal-form instance and structure,
a Sigma_1 CNF- formula whose star count equals the team count; the inclusion
variant emits Sigma_1 DualHorn ∩ CNF-.  Propositional variables are indexed
partial assignments with a fixed layer-then-lexicographic numbering so the
emitted DIMACS is byte-reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from .errors import EncodingError, EvaluationError, NormalFormError, OracleFaultError, VocabularyError
from .formula_core import (
    And, DepAtom, EqAtom, Exists, ExistsRel, Forall, Formula, GenAtom,
    InclAtom, IndepAtom, NormalFormDescriptor, Or, QBFormula, RelAtom,
    conjoin, emit_dimacs, free_vars, is_cnf_neg, is_first_order, nnf_negate,
    parse_team_formula, simplify_clauses, substitute_vars,
)
from .structures import Structure, Team
from .team_eval import _tarski

from .counting import CountResult, count_assignments


# ---------------------------------------------------------------------------
# Indexed propositional variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Layering:
    """Bijection between partial assignments and DIMACS variable ids.

    Layer i holds the tuples over the first m+i variables; ids are offset by
    layer, then ranked lexicographically (tuple read as base-n digits).
    Layer 0 ids are exactly the free variables of the emitted formula.
    """
    m: int
    k: int
    l: int
    size: int

    def layer_size(self, i: int) -> int:
        return self.size ** (self.m + i)

    def offset(self, i: int) -> int:
        return 1 + sum(self.layer_size(j) for j in range(i))

    @property
    def num_vars(self) -> int:
        return self.offset(self.k + self.l + 1) - 1

    def var_id(self, tup: tuple[int, ...]) -> int:
        layer = len(tup) - self.m
        if not 0 <= layer <= self.k + self.l:
            raise ValueError(f"tuple {tup} has no layer")
        rank = 0
        for d in tup:
            rank = rank * self.size + d
        return self.offset(layer) + rank

    def tuple_of(self, vid: int) -> tuple[int, ...]:
        for layer in range(self.k + self.l + 1):
            off = self.offset(layer)
            if vid < off + self.layer_size(layer):
                rank = vid - off
                digits = []
                for _ in range(self.m + layer):
                    digits.append(rank % self.size)
                    rank //= self.size
                return tuple(reversed(digits))
        raise ValueError(f"variable id {vid} out of range")

    def comments(self) -> list[str]:
        out = [f"layering m={self.m} k={self.k} l={self.l} n={self.size}"]
        for i in range(self.k + self.l + 1):
            out.append(f"layer {i} offset {self.offset(i)} size {self.layer_size(i)}")
        return out


def _tuples(size: int, length: int):
    return itertools.product(range(size), repeat=length)


def _leaf_env(d: NormalFormDescriptor, tup: tuple[int, ...]):
    return d.all_vars, tup


def _skeleton_clauses(a: Structure, d: NormalFormDescriptor, lay: Layering):
    """The quantifier families shared by both reductions: (∀), (∃), (⊥)."""
    clauses: list[frozenset[int]] = []
    # (∀): each node forces every one-point extension.
    for i in range(1, d.k + 1):
        for parent in _tuples(a.size, d.m + i - 1):
            pid = lay.var_id(parent)
            for v in range(a.size):
                clauses.append(frozenset((-pid, lay.var_id(parent + (v,)))))
    # (∃): each node forces at least one extension.
    for i in range(d.k + 1, d.k + d.l + 1):
        for parent in _tuples(a.size, d.m + i - 1):
            pid = lay.var_id(parent)
            clauses.append(frozenset((-pid,) + tuple(lay.var_id(parent + (v,))
                                                     for v in range(a.size))))
    # (⊥): leaves falsifying the matrix are forbidden; (⊤) emits nothing.
    vars_ = d.all_vars
    for leaf in _tuples(a.size, d.m + d.k + d.l):
        if not _tarski(a, vars_, leaf, d.matrix, None):
            clauses.append(frozenset((-lay.var_id(leaf),)))
    return clauses


def _bound_ids(lay: Layering) -> frozenset[int]:
    return frozenset(range(lay.offset(1), lay.num_vars + 1))


def _dedup(clauses) -> tuple[frozenset[int], ...]:
    seen = set()
    out = []
    for cl in clauses:
        if cl not in seen:
            seen.add(cl)
            out.append(cl)
    return tuple(out)


def dep_to_sigma1cnf_neg(a: Structure, d: NormalFormDescriptor) -> QBFormula:
    """Dependence normal form -> Sigma_1 CNF- with star count = team count.

    Teams X over the free tuple correspond 1-1 to free assignments via
    S(X_s) = 1 iff s ∈ X; the (∀)/(∃) families unfold quantifiers layer by
    layer, dependence atoms become binary negative clauses over conflicting
    leaves, and leaves falsifying the matrix become negative units.
    """
    if d.kind != "dependence":
        raise NormalFormError("descriptor is not a dependence normal form")
    lay = Layering(d.m, d.k, d.l, a.size)
    clauses = _skeleton_clauses(a, d, lay)
    vars_ = d.all_vars
    leaves = list(_tuples(a.size, d.m + d.k + d.l))
    for atom in d.dep_atoms:
        det_idx = [vars_.index(v) for v in atom.determinants]
        dep_idx = vars_.index(atom.dependent)
        groups: dict = {}
        for leaf in leaves:
            groups.setdefault(tuple(leaf[i] for i in det_idx), []).append(leaf)
        for group in groups.values():
            for s, s2 in itertools.combinations(group, 2):
                if s[dep_idx] != s2[dep_idx]:
                    clauses.append(frozenset((-lay.var_id(s), -lay.var_id(s2))))
    return QBFormula(lay.num_vars, _dedup(clauses), _bound_ids(lay))


def incl_to_sigma1_dualhorn(a: Structure, d: NormalFormDescriptor) -> QBFormula:
    """Inclusion normal form -> Sigma_1 DualHorn ∩ CNF-.

    Per inclusion atom and leaf s, the clause X_s -> ∨ {X_s' : s'(right) =
    s(left)}; self-witnessing implications are tautologies and are dropped.
    The star count equals the team count whenever every inclusion atom
    carries the full free tuple as a matching prefix on both sides, which
    pins witnesses to the same free-layer branch (see README for the
    counterexample without this shape).
    """
    if d.kind != "inclusion":
        raise NormalFormError("descriptor is not an inclusion normal form")
    lay = Layering(d.m, d.k, d.l, a.size)
    clauses = _skeleton_clauses(a, d, lay)
    vars_ = d.all_vars
    leaves = list(_tuples(a.size, d.m + d.k + d.l))
    for atom in d.incl_atoms:
        left_idx = [vars_.index(v) for v in atom.left]
        right_idx = [vars_.index(v) for v in atom.right]
        witnesses: dict = {}
        for leaf in leaves:
            witnesses.setdefault(tuple(leaf[i] for i in right_idx), []).append(leaf)
        for leaf in leaves:
            key = tuple(leaf[i] for i in left_idx)
            group = witnesses.get(key, [])
            if leaf in group:
                continue  # self-witnessing leaf: the implication is a tautology
            clauses.append(frozenset((-lay.var_id(leaf),)
                                     + tuple(lay.var_id(w) for w in group)))
    return QBFormula(lay.num_vars, _dedup(clauses), _bound_ids(lay))


def emit_reduction_dimacs(f: QBFormula, d: NormalFormDescriptor, size: int) -> str:
    lay = Layering(d.m, d.k, d.l, size)
    return emit_dimacs(f, lay.comments())


# ---------------------------------------------------------------------------
# Star Turing reduction
# ---------------------------------------------------------------------------

def star_turing_reduction(f: QBFormula, oracle: Optional[Callable[[QBFormula], int]] = None) -> CountResult:
    """#Sigma_1 CNF- from a star-counting oracle.

    Substituting 0 for every free variable yields a sentence phi'; the probe
    phi' ∧ (¬x_{n+1} ∨ ¬x_{n+2}) with two fresh free variables has star count
    0 or 2.  On 0 the formula is unsatisfiable; on 2 the answer is the
    oracle's star count of f plus one (for the always-satisfying all-0
    assignment).
    """
    if not is_cnf_neg(f):
        raise EncodingError("star reduction requires a CNF- formula")
    if oracle is None:
        oracle = lambda g: count_assignments(g, "star").count
    calls = 0

    residual = simplify_clauses(f.clauses, {v: False for v in f.free})
    # CNF-: free literals are negative, so substituting 0 never empties a clause.
    assert residual is not None
    bound_sorted = sorted(f.bound)
    remap = {v: i + 1 for i, v in enumerate(bound_sorted)}
    n = len(bound_sorted)
    probe_clauses = [frozenset((1 if l > 0 else -1) * remap[abs(l)] for l in cl)
                     for cl in residual]
    probe_clauses.append(frozenset((-(n + 1), -(n + 2))))
    probe = QBFormula(n + 2, tuple(probe_clauses), frozenset(remap.values()))
    answer = oracle(probe)
    calls += 1
    if answer == 0:
        return CountResult(0, 0, calls)
    if answer != 2:
        raise OracleFaultError(f"probe answered {answer}, expected 0 or 2")
    star = oracle(f)
    calls += 1
    return CountResult(star + 1, 0, calls)


# ---------------------------------------------------------------------------
# First-order interpretations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelDef:
    name: str
    arity: int
    variables: tuple[str, ...]   # k * arity free variables, block-major
    formula: Formula


@dataclass(frozen=True)
class FOInterpretation:
    """Width-k tuple of FO formulas mapping source structures to target ones."""
    width: int
    domain_vars: tuple[str, ...]
    domain_formula: Formula
    rel_defs: tuple[RelDef, ...]

    def __post_init__(self):
        if len(self.domain_vars) != self.width:
            raise VocabularyError("domain formula must have k free variables")
        if not is_first_order(self.domain_formula):
            raise VocabularyError("domain formula must be first-order")
        if not free_vars(self.domain_formula) <= set(self.domain_vars):
            raise VocabularyError("domain formula uses undeclared variables")
        for rd in self.rel_defs:
            if len(rd.variables) != self.width * rd.arity:
                raise VocabularyError(f"relation {rd.name} needs k*arity variables")
            if not is_first_order(rd.formula):
                raise VocabularyError(f"relation formula for {rd.name} must be first-order")
            if not free_vars(rd.formula) <= set(rd.variables):
                raise VocabularyError(f"relation formula for {rd.name} uses undeclared variables")

    def target_vocab(self) -> tuple[tuple[str, int], ...]:
        return tuple((rd.name, rd.arity) for rd in self.rel_defs)


def _numeral(tup: tuple[int, ...], size: int) -> int:
    v = 0
    for d in tup:
        v = v * size + d
    return v


def apply_interpretation(i: FOInterpretation, a: Structure) -> tuple[Structure, dict[tuple[int, ...], int]]:
    """Build the target structure; returns it with the tuple-to-element map.

    Target elements are the phi_0-satisfying k-tuples ordered by their base-n
    numeral value, so the ambient order of the target matches the tuple order.
    """
    k = i.width
    dom = [t for t in itertools.product(range(a.size), repeat=k)
           if _tarski(a, i.domain_vars, t, i.domain_formula, None)]
    if not dom:
        raise EncodingError("interpretation produces an empty target domain")
    dom.sort(key=lambda t: _numeral(t, a.size))
    index = {t: j for j, t in enumerate(dom)}
    relations = {}
    for rd in i.rel_defs:
        rows = set()
        for combo in itertools.product(dom, repeat=rd.arity):
            flat = tuple(x for block in combo for x in block)
            if _tarski(a, rd.variables, flat, rd.formula, None):
                rows.add(tuple(index[b] for b in combo))
        relations[rd.name] = frozenset(rows)
    return Structure(len(dom), i.target_vocab(), relations), index


def _blocks(var: str, k: int) -> tuple[str, ...]:
    return tuple(f"{var}__{j}" for j in range(1, k + 1))


def _block_concat(tup: tuple[str, ...], k: int) -> tuple[str, ...]:
    return tuple(x for v in tup for x in _blocks(v, k))


def translate_formula(i: FOInterpretation, phi: Formula) -> Formula:
    """Source-side formula psi with A ⊨_X psi  iff  I(A) ⊨_{I(X)} phi.

    Each target variable v becomes the block v__1..v__k; relation atoms
    inline the defining formulas; quantifiers guard with the domain formula.
    """
    k = i.width
    rels = {rd.name: rd for rd in i.rel_defs}

    def tr(phi: Formula) -> Formula:
        if isinstance(phi, RelAtom):
            if phi.name in ("leq", "add", "mul"):
                return RelAtom(phi.name, _block_concat(phi.args, k), phi.positive)
            rd = rels.get(phi.name)
            if rd is None:
                raise VocabularyError(f"relation {phi.name!r} not in the target vocabulary")
            if len(phi.args) != rd.arity:
                raise VocabularyError(f"relation {phi.name!r} has arity {rd.arity}")
            mapping = dict(zip(rd.variables, _block_concat(phi.args, k)))
            body = _freshen(rd.formula, set(mapping.values()) | set(mapping))
            body = substitute_vars(body, mapping)
            return body if phi.positive else nnf_negate(body)
        if isinstance(phi, EqAtom):
            parts = [EqAtom(x, y, True) for x, y in zip(_blocks(phi.left, k), _blocks(phi.right, k))]
            out = conjoin(parts)
            return out if phi.positive else nnf_negate(out)
        if isinstance(phi, DepAtom):
            dets = _block_concat(phi.determinants, k)
            return conjoin([DepAtom(dets, w) for w in _blocks(phi.dependent, k)])
        if isinstance(phi, InclAtom):
            return InclAtom(_block_concat(phi.left, k), _block_concat(phi.right, k))
        if isinstance(phi, IndepAtom):
            return IndepAtom(_block_concat(phi.left, k),
                             _block_concat(phi.condition, k),
                             _block_concat(phi.right, k))
        if isinstance(phi, And):
            return And(tr(phi.left), tr(phi.right))
        if isinstance(phi, Or):
            return Or(tr(phi.left), tr(phi.right))
        if isinstance(phi, Exists):
            guard = _domain_guard(i, phi.var)
            body = And(guard, tr(phi.body))
            for x in reversed(_blocks(phi.var, k)):
                body = Exists(x, body)
            return body
        if isinstance(phi, Forall):
            guard = nnf_negate(_domain_guard(i, phi.var))
            body = Or(guard, tr(phi.body))
            for x in reversed(_blocks(phi.var, k)):
                body = Forall(x, body)
            return body
        raise EvaluationError(f"cannot translate {type(phi).__name__}")

    out = tr(phi)
    guards = [_domain_guard(i, v) for v in sorted(free_vars(phi))]
    for g in guards:
        out = And(out, g)
    return out


def _domain_guard(i: FOInterpretation, var: str) -> Formula:
    mapping = dict(zip(i.domain_vars, _blocks(var, i.width)))
    body = _freshen(i.domain_formula, set(mapping.values()) | set(mapping))
    return substitute_vars(body, mapping)


def _freshen(phi: Formula, avoid: set[str]) -> Formula:
    """Rename bound variables clashing with `avoid` (capture avoidance)."""
    counter = itertools.count(1)

    def walk(phi, taken):
        if isinstance(phi, (Exists, Forall)):
            var = phi.var
            if var in taken:
                new = var
                while new in taken:
                    new = f"{var}_r{next(counter)}"
                body = substitute_vars(phi.body, {var: new})
                return type(phi)(new, walk(body, taken | {new}))
            return type(phi)(var, walk(phi.body, taken | {var}))
        if isinstance(phi, And):
            return And(walk(phi.left, taken), walk(phi.right, taken))
        if isinstance(phi, Or):
            return Or(walk(phi.left, taken), walk(phi.right, taken))
        return phi

    return walk(phi, set(avoid))


def map_team(i: FOInterpretation, a: Structure, team: Team,
             target_vars: tuple[str, ...]) -> Team:
    """I(X): collapse each k-block of source values to a target element."""
    target, index = apply_interpretation(i, a)
    k = i.width
    expected = _block_concat(target_vars, k)
    if set(expected) - set(team.domain):
        raise EvaluationError(f"team domain must contain the blocks {expected}")
    pos = {v: team.domain.index(v) for v in expected}
    rows = set()
    for row in team.rows:
        out = []
        for v in target_vars:
            block = tuple(row[pos[b]] for b in _blocks(v, k))
            if block not in index:
                raise EvaluationError(f"block value {block} lies outside the target domain")
            out.append(index[block])
        rows.add(tuple(out))
    return Team(target_vars, frozenset(rows))


# ---------------------------------------------------------------------------
# Built-in library formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Builtin:
    name: str
    kind: str                    # "team" | "relation"
    formula: Formula
    team_vars: tuple[str, ...] = ()
    free_rels: tuple[tuple[str, int], ...] = ()
    note: str = ""


def _incl_2cnf() -> Builtin:
    phi = parse_team_formula("A x. A y. (!C(x,y) | inc(x;t) | inc(y;t))")
    return Builtin("incl-2cnf+", "team", phi, team_vars=("t",),
                   note="positive-2CNF counting in inclusion logic; teams are the variables set to 1")


def _dep_2cnf() -> Builtin:
    phi = parse_team_formula(
        "E m. (A z. m<=z"
        " & A x. A y. E u. E v. (dep(x;u) & dep(y;v) & (x!=y | u=v)"
        " & (x!=t | u=m) & (!C(x,y) | u!=m | v!=m)))")
    return Builtin("dep-2cnf+", "team", phi, team_vars=("t",),
                   note="positive-2CNF counting in dependence logic; teams are the variables set to 0")


def _sigma11_cnfneg() -> Builtin:
    # T ranges over sets of free variables; a clause is satisfied by a negative
    # free literal outside T, a negative bound literal outside S, or a positive
    # bound literal inside S.  The guard pins T to the free-variable elements.
    c, x, v = "c", "x", "v"
    clause_ok = Or(
        Or(RelAtom("F", (c,)), RelAtom("B", (c,))),
        Or(
            Exists(x, And(RelAtom("N", (c, x)),
                          Or(And(RelAtom("B", (x,)), RelAtom("S", (x,), False)),
                             And(RelAtom("F", (x,)), RelAtom("T", (x,), False))))),
            Exists(x, And(RelAtom("P", (c, x)),
                          And(RelAtom("B", (x,)), RelAtom("S", (x,))))),
        ),
    )
    phi = And(
        Forall(v, Or(RelAtom("T", (v,), False), RelAtom("F", (v,)))),
        ExistsRel("S", 1, Forall(c, clause_ok)),
    )
    return Builtin("sigma11-cnfneg", "relation", phi, free_rels=(("T", 1),),
                   note="relations T with a satisfying bound extension; ψ1 is the procedural structure validator")


def _myopic_dualhorn() -> Builtin:
    x, c, y, z = "x", "c", "y", "z"
    needs_pos = Exists(y, And(RelAtom("P", (c, y)), RelAtom("R", (y,))))
    per_clause = And(
        Or(Exists(z, RelAtom("N", (c, z))), needs_pos),
        Or(RelAtom("N", (c, x), False), needs_pos),
    )
    phi = Forall(x, Or(RelAtom("R", (x,), False),
                       And(RelAtom("C", (x,), False),
                           Forall(c, Or(RelAtom("C", (c,), False), per_clause)))))
    return Builtin("myopic-dualhorn", "relation", phi, free_rels=(("R", 1),),
                   note="myopic check: relations R encoding satisfying DualHorn assignments")


_BUILTINS: dict[str, Callable[[], Builtin]] = {
    "incl-2cnf+": _incl_2cnf,
    "dep-2cnf+": _dep_2cnf,
    "sigma11-cnfneg": _sigma11_cnfneg,
    "myopic-dualhorn": _myopic_dualhorn,
}


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


def builtin_formula(name: str) -> Builtin:
    if name not in _BUILTINS:
        raise VocabularyError(f"unknown builtin formula {name!r} (known: {', '.join(builtin_names())})")
    return _BUILTINS[name]()
