"""Finite relational structures, teams, and the fixed Boolean-formula encodings.

Structures have domain {0..n-1}.  The arithmetic relations leq/add/mul are
ambient: computed on demand, never stored or encoded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import EncodingError, ParseError, VocabularyError
from .formula_core import BUILTIN_RELS, QBFormula


def builtin_holds(size: int, name: str, args: tuple[int, ...]) -> bool:
    """Ambient leq/add/mul on k-tuples read as base-`size` numerals."""
    block = BUILTIN_RELS[name]
    k, rem = divmod(len(args), block)
    if rem or k == 0:
        raise VocabularyError(f"builtin {name} applied to {len(args)} arguments")

    def numeral(tup):
        v = 0
        for d in tup:
            v = v * size + d
        return v

    parts = [numeral(args[i * k:(i + 1) * k]) for i in range(block)]
    if name == "leq":
        return parts[0] <= parts[1]
    if name == "add":
        return parts[0] + parts[1] == parts[2]
    return parts[0] * parts[1] == parts[2]


@dataclass(frozen=True)
class Structure:
    size: int
    vocab: tuple[tuple[str, int], ...]
    relations: dict[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)

    def __post_init__(self):
        if self.size <= 0:
            raise VocabularyError("domain size must be positive")
        names = [name for name, _ in self.vocab]
        if len(set(names)) != len(names):
            raise VocabularyError("relation names must be unique")
        for name, arity in self.vocab:
            if name in BUILTIN_RELS:
                raise VocabularyError(f"{name!r} is a reserved built-in relation name")
            rows = self.relations.get(name, frozenset())
            for row in rows:
                if len(row) != arity:
                    raise VocabularyError(f"tuple {row} has wrong arity for {name}/{arity}")
                if any(not 0 <= x < self.size for x in row):
                    raise VocabularyError(f"tuple {row} out of domain range for {name}")
        extra = set(self.relations) - set(names)
        if extra:
            raise VocabularyError(f"relation contents without vocabulary entry: {sorted(extra)}")
        for name, _ in self.vocab:
            self.relations.setdefault(name, frozenset())

    def rel(self, name: str) -> frozenset[tuple[int, ...]]:
        return self.relations[name]


@dataclass(frozen=True)
class Team:
    domain: tuple[str, ...]
    rows: frozenset[tuple[int, ...]]

    def __post_init__(self):
        if len(set(self.domain)) != len(self.domain):
            raise VocabularyError(f"duplicate variable in team domain {self.domain}")
        for row in self.rows:
            if len(row) != len(self.domain):
                raise VocabularyError(f"assignment {row} does not match domain {self.domain}")

    def assignments(self) -> list[dict[str, int]]:
        return [dict(zip(self.domain, row)) for row in sorted(self.rows)]

    def relation(self) -> frozenset[tuple[int, ...]]:
        """rel(X): the value tuples, in team-domain order."""
        return self.rows


def full_team(size: int, domain: tuple[str, ...]) -> Team:
    return Team(domain, frozenset(itertools.product(range(size), repeat=len(domain))))


def empty_team(domain: tuple[str, ...]) -> Team:
    return Team(domain, frozenset())


# ---------------------------------------------------------------------------
# Binary encoding
# ---------------------------------------------------------------------------

def encode_structure(a: Structure) -> str:
    """Row-major 0/1 encoding, relations concatenated in vocabulary order."""
    bits = []
    for name, arity in a.vocab:
        rel = a.relations[name]
        for row in itertools.product(range(a.size), repeat=arity):
            bits.append("1" if row in rel else "0")
    return "".join(bits)


# ---------------------------------------------------------------------------
# Boolean-formula encodings
# ---------------------------------------------------------------------------

def _variable_order(f: QBFormula) -> list[int]:
    """First occurrence across the clause list, then unused vars ascending."""
    seen: list[int] = []
    seen_set: set[int] = set()
    for cl in f.clauses:
        for lit in sorted(cl, key=lambda l: (abs(l), l)):
            v = abs(lit)
            if v not in seen_set:
                seen.append(v)
                seen_set.add(v)
    for v in range(1, f.num_vars + 1):
        if v not in seen_set:
            seen.append(v)
    return seen


def encode_2cnf_plus(f: QBFormula) -> tuple[Structure, dict[int, int]]:
    """Example-10 encoding of a positive 2CNF: domain = variables, C = clauses.

    Unit clauses x become loops C(x,x).  Returns the structure and the
    variable-to-element map.
    """
    if f.bound:
        raise EncodingError("2CNF+ encoding expects a quantifier-free formula")
    for cl in f.clauses:
        if len(cl) > 2:
            raise EncodingError(f"clause {sorted(cl)} has more than two literals")
        for lit in cl:
            if lit < 0:
                raise EncodingError(f"negative literal {lit} in a 2CNF+ formula")
    order = _variable_order(f)
    elem = {v: i for i, v in enumerate(order)}
    pairs = set()
    for cl in f.clauses:
        lits = sorted(cl)
        if len(lits) == 1:
            pairs.add((elem[lits[0]], elem[lits[0]]))
        else:
            pairs.add((elem[lits[0]], elem[lits[1]]))
    a = Structure(max(f.num_vars, 1), (("C", 2),), {"C": frozenset(pairs)})
    return a, elem


def encode_sigma1cnf_neg(f: QBFormula) -> tuple[Structure, dict[int, int]]:
    """Encode a Sigma_1 CNF- formula over (F1, B1, P2, N2)."""
    from .formula_core import is_cnf_neg
    if not is_cnf_neg(f):
        raise EncodingError("free variables must occur only negatively")
    order = _variable_order(f)
    elem = {v: i for i, v in enumerate(order)}
    nvars = len(order)
    fset = frozenset((elem[v],) for v in sorted(f.free))
    bset = frozenset((elem[v],) for v in sorted(f.bound))
    p = set()
    n = set()
    for i, cl in enumerate(f.clauses):
        c = nvars + i
        for lit in cl:
            if lit > 0:
                p.add((c, elem[lit]))
            else:
                n.add((c, elem[-lit]))
    a = Structure(nvars + len(f.clauses),
                  (("F", 1), ("B", 1), ("P", 2), ("N", 2)),
                  {"F": fset, "B": bset, "P": frozenset(p), "N": frozenset(n)})
    return a, elem


def decode_sigma1cnf_neg(a: Structure) -> QBFormula:
    """Inverse of encode_sigma1cnf_neg up to variable/clause renumbering."""
    fset = {t[0] for t in a.rel("F")}
    bset = {t[0] for t in a.rel("B")}
    var_elems = sorted(fset | bset)
    var_id = {e: i + 1 for i, e in enumerate(var_elems)}
    clause_elems = sorted(set(range(a.size)) - set(var_elems))
    by_clause: dict[int, set[int]] = {c: set() for c in clause_elems}
    for c, x in a.rel("P"):
        by_clause[c].add(var_id[x])
    for c, x in a.rel("N"):
        by_clause[c].add(-var_id[x])
    clauses = tuple(frozenset(by_clause[c]) for c in clause_elems)
    bound = frozenset(var_id[e] for e in bset)
    return QBFormula(len(var_elems), clauses, bound)


def encode_dualhorn(f: QBFormula) -> tuple[Structure, dict[int, int]]:
    """Encode a quantifier-free DualHorn formula over (C1, P2, N2)."""
    if f.bound:
        raise EncodingError("DualHorn encoding expects a quantifier-free formula")
    for cl in f.clauses:
        if sum(1 for lit in cl if lit < 0) > 1:
            raise EncodingError(f"clause {sorted(cl)} has two negative literals")
    order = _variable_order(f)
    elem = {v: i for i, v in enumerate(order)}
    nvars = len(order)
    p = set()
    n = set()
    for i, cl in enumerate(f.clauses):
        c = nvars + i
        for lit in cl:
            if lit > 0:
                p.add((c, elem[lit]))
            else:
                n.add((c, elem[-lit]))
    cset = frozenset((nvars + i,) for i in range(len(f.clauses)))
    a = Structure(nvars + len(f.clauses),
                  (("C", 1), ("P", 2), ("N", 2)),
                  {"C": cset, "P": frozenset(p), "N": frozenset(n)})
    return a, elem


def validate_sigma1cnf_neg_structure(a: Structure) -> bool:
    """Procedural stand-in for the omitted well-formedness sentence.

    Checks: F and B disjoint; P/N go from clause elements (outside F∪B) to
    variable elements (inside F∪B); no free variable occurs positively.
    """
    if tuple(sorted(name for name, _ in a.vocab)) != ("B", "F", "N", "P"):
        raise VocabularyError("structure vocabulary does not match (F,B,P,N)")
    arities = dict(a.vocab)
    if arities["F"] != 1 or arities["B"] != 1 or arities["P"] != 2 or arities["N"] != 2:
        raise VocabularyError("structure vocabulary does not match (F1,B1,P2,N2)")
    fset = {t[0] for t in a.rel("F")}
    bset = {t[0] for t in a.rel("B")}
    if fset & bset:
        return False
    var_elems = fset | bset
    for c, x in a.rel("P") | a.rel("N"):
        if c in var_elems or x not in var_elems:
            return False
    for _, x in a.rel("P"):
        if x in fset:
            return False
    return True


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def parse_structure(text: str) -> Structure:
    """`domain N`, then `rel NAME/ARITY` blocks of one tuple per line."""
    size = None
    vocab: list[tuple[str, int]] = []
    relations: dict[str, set[tuple[int, ...]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "domain":
            if size is not None or len(parts) != 2:
                raise ParseError(f"bad or duplicate domain line {lineno}", lineno)
            size = int(parts[1])
        elif parts[0] == "rel":
            if size is None or len(parts) != 2 or "/" not in parts[1]:
                raise ParseError(f"bad rel line {lineno}", lineno)
            name, arity = parts[1].rsplit("/", 1)
            vocab.append((name, int(arity)))
            relations[name] = set()
            current = name
        else:
            if current is None:
                raise ParseError(f"tuple outside a rel block on line {lineno}", lineno)
            relations[current].add(tuple(int(x) for x in parts))
    if size is None:
        raise ParseError("missing domain line", 0)
    return Structure(size, tuple(vocab), {k: frozenset(v) for k, v in relations.items()})


def format_structure(a: Structure) -> str:
    lines = [f"domain {a.size}"]
    for name, arity in a.vocab:
        lines.append(f"rel {name}/{arity}")
        for row in sorted(a.relations[name]):
            lines.append(" ".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_team(text: str) -> Team:
    """Header line of variable names, then one assignment per line."""
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if not lines:
        raise ParseError("empty team file", 0)
    domain = tuple(lines[0].split())
    rows = set()
    for lineno, line in enumerate(lines[1:], start=2):
        vals = tuple(int(x) for x in line.split())
        if len(vals) != len(domain):
            raise ParseError(f"assignment on line {lineno} does not match header", lineno)
        rows.add(vals)
    return Team(domain, frozenset(rows))


def format_team(t: Team) -> str:
    lines = [" ".join(t.domain)]
    for row in sorted(t.rows):
        lines.append(" ".join(str(x) for x in row))
    return "\n".join(lines) + "\n"
