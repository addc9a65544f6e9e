"""Formula ASTs, the team-logic DSL, DIMACS-style CNF input, and normal forms.

Two formula worlds live here: `Formula` trees for team logic (negation normal
form, dependency atoms allowed) and `QBFormula` for existentially quantified
Boolean CNF with a free/bound variable split.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .errors import NormalFormError, ParseError, VocabularyError

# Built-in arithmetic relations.  `leq` takes 2k arguments, `add`/`mul` take
# 3k, each k-block read as a base-n numeral.
BUILTIN_RELS = {"leq": 2, "add": 3, "mul": 3}

KEYWORDS = {"A", "E", "dep", "inc", "ind", "atom"}


# ---------------------------------------------------------------------------
# Team-logic AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class RelAtom(Formula):
    name: str
    args: tuple[str, ...]
    positive: bool = True

    def __post_init__(self):
        if self.name in BUILTIN_RELS:
            block = BUILTIN_RELS[self.name]
            if len(self.args) == 0 or len(self.args) % block != 0:
                raise VocabularyError(
                    f"builtin {self.name} needs a multiple of {block} arguments, got {len(self.args)}")


@dataclass(frozen=True)
class EqAtom(Formula):
    left: str
    right: str
    positive: bool = True


@dataclass(frozen=True)
class DepAtom(Formula):
    determinants: tuple[str, ...]
    dependent: str


@dataclass(frozen=True)
class InclAtom(Formula):
    left: tuple[str, ...]
    right: tuple[str, ...]

    def __post_init__(self):
        if len(self.left) != len(self.right) or not self.left:
            raise VocabularyError(
                f"inclusion atom sides must be nonempty and of equal length: {self.left} vs {self.right}")


@dataclass(frozen=True)
class IndepAtom(Formula):
    left: tuple[str, ...]
    condition: tuple[str, ...]
    right: tuple[str, ...]


@dataclass(frozen=True)
class GenAtom(Formula):
    name: str
    tuples: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsRel(Formula):
    """Second-order existential prefix, used only by relation-counting formulas."""
    name: str
    arity: int
    body: Formula


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, RelAtom):
        return frozenset(phi.args)
    if isinstance(phi, EqAtom):
        return frozenset((phi.left, phi.right))
    if isinstance(phi, DepAtom):
        return frozenset(phi.determinants) | {phi.dependent}
    if isinstance(phi, InclAtom):
        return frozenset(phi.left) | frozenset(phi.right)
    if isinstance(phi, IndepAtom):
        return frozenset(phi.left) | frozenset(phi.condition) | frozenset(phi.right)
    if isinstance(phi, GenAtom):
        return frozenset(v for tup in phi.tuples for v in tup)
    if isinstance(phi, (And, Or)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - {phi.var}
    if isinstance(phi, ExistsRel):
        return free_vars(phi.body)
    raise TypeError(f"not a formula node: {phi!r}")


def rel_symbols(phi: Formula) -> frozenset[str]:
    """All relation names used by `phi`, built-ins excluded."""
    out = set()

    def walk(f):
        if isinstance(f, RelAtom):
            if f.name not in BUILTIN_RELS:
                out.add(f.name)
        elif isinstance(f, (And, Or)):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, (Exists, Forall, ExistsRel)):
            walk(f.body)

    walk(phi)
    return frozenset(out)


def is_first_order(phi: Formula) -> bool:
    """True when `phi` uses only grammar connectives and flat atoms."""
    if isinstance(phi, (RelAtom, EqAtom)):
        return True
    if isinstance(phi, (DepAtom, InclAtom, IndepAtom, GenAtom, ExistsRel)):
        return False
    if isinstance(phi, (And, Or)):
        return is_first_order(phi.left) and is_first_order(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return is_first_order(phi.body)
    raise TypeError(f"not a formula node: {phi!r}")


def nnf_negate(phi: Formula) -> Formula:
    """Negation in negation normal form; defined for first-order formulas only."""
    if isinstance(phi, RelAtom):
        return RelAtom(phi.name, phi.args, not phi.positive)
    if isinstance(phi, EqAtom):
        return EqAtom(phi.left, phi.right, not phi.positive)
    if isinstance(phi, And):
        return Or(nnf_negate(phi.left), nnf_negate(phi.right))
    if isinstance(phi, Or):
        return And(nnf_negate(phi.left), nnf_negate(phi.right))
    if isinstance(phi, Exists):
        return Forall(phi.var, nnf_negate(phi.body))
    if isinstance(phi, Forall):
        return Exists(phi.var, nnf_negate(phi.body))
    from .errors import EvaluationError
    raise EvaluationError(f"cannot negate non-first-order node {type(phi).__name__}")


def substitute_vars(phi: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables; quantified variables shadow as usual."""
    def sub(tup):
        return tuple(mapping.get(v, v) for v in tup)

    if isinstance(phi, RelAtom):
        return RelAtom(phi.name, sub(phi.args), phi.positive)
    if isinstance(phi, EqAtom):
        return EqAtom(mapping.get(phi.left, phi.left), mapping.get(phi.right, phi.right), phi.positive)
    if isinstance(phi, DepAtom):
        return DepAtom(sub(phi.determinants), mapping.get(phi.dependent, phi.dependent))
    if isinstance(phi, InclAtom):
        return InclAtom(sub(phi.left), sub(phi.right))
    if isinstance(phi, IndepAtom):
        return IndepAtom(sub(phi.left), sub(phi.condition), sub(phi.right))
    if isinstance(phi, GenAtom):
        return GenAtom(phi.name, tuple(sub(t) for t in phi.tuples))
    if isinstance(phi, And):
        return And(substitute_vars(phi.left, mapping), substitute_vars(phi.right, mapping))
    if isinstance(phi, Or):
        return Or(substitute_vars(phi.left, mapping), substitute_vars(phi.right, mapping))
    if isinstance(phi, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k != phi.var}
        body = substitute_vars(phi.body, inner) if inner else phi.body
        return type(phi)(phi.var, body)
    if isinstance(phi, ExistsRel):
        return ExistsRel(phi.name, phi.arity, substitute_vars(phi.body, mapping))
    raise TypeError(f"not a formula node: {phi!r}")


def conjuncts(phi: Formula) -> list[Formula]:
    """Flatten a conjunction tree."""
    if isinstance(phi, And):
        return conjuncts(phi.left) + conjuncts(phi.right)
    return [phi]


def conjoin(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        raise ValueError("empty conjunction")
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


# ---------------------------------------------------------------------------
# DSL printing
# ---------------------------------------------------------------------------

def to_dsl(phi: Formula) -> str:
    if isinstance(phi, RelAtom):
        if phi.name == "leq" and len(phi.args) == 2 and phi.positive:
            return f"{phi.args[0]}<={phi.args[1]}"
        bang = "" if phi.positive else "!"
        return f"{bang}{phi.name}({','.join(phi.args)})"
    if isinstance(phi, EqAtom):
        op = "=" if phi.positive else "!="
        return f"{phi.left}{op}{phi.right}"
    if isinstance(phi, DepAtom):
        return f"dep({','.join(phi.determinants)};{phi.dependent})"
    if isinstance(phi, InclAtom):
        return f"inc({','.join(phi.left)};{','.join(phi.right)})"
    if isinstance(phi, IndepAtom):
        return f"ind({','.join(phi.left)}|{','.join(phi.condition)}|{','.join(phi.right)})"
    if isinstance(phi, GenAtom):
        return f"atom {phi.name}({';'.join(','.join(t) for t in phi.tuples)})"
    if isinstance(phi, (And, Or)):
        op = "&" if isinstance(phi, And) else "|"
        # quantified children need their own parentheses: quantifier scope is maximal
        def part(child):
            s = to_dsl(child)
            return f"({s})" if isinstance(child, (Exists, Forall)) else s
        return f"({part(phi.left)} {op} {part(phi.right)})"
    if isinstance(phi, Exists):
        return f"E {phi.var}. {to_dsl(phi.body)}"
    if isinstance(phi, Forall):
        return f"A {phi.var}. {to_dsl(phi.body)}"
    raise TypeError(f"no DSL syntax for {type(phi).__name__}")


# ---------------------------------------------------------------------------
# DSL parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><=|!=|=|!|\(|\)|,|;|\||&|\.)
""", re.VERBOSE)


class _Parser:
    def __init__(self, text: str, vocab: Optional[Mapping[str, int]], atom_types: Optional[Mapping[str, tuple[int, ...]]]):
        self.text = text
        self.vocab = vocab
        self.atom_types = atom_types
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value:
            raise ParseError(f"expected {value!r}, got {text or 'end of input'!r}", pos)
        return self.next()

    def parse(self) -> Formula:
        phi = self.parse_or()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected trailing input {text!r}", pos)
        return phi

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek()[1] == "|":
            self.next()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_unit()
        while self.peek()[1] == "&":
            self.next()
            left = And(left, self.parse_unit())
        return left

    def parse_unit(self) -> Formula:
        kind, text, pos = self.peek()
        if text in ("A", "E"):
            self.next()
            var = self.ident()
            self.expect(".")
            body = self.parse_or()
            return Forall(var, body) if text == "A" else Exists(var, body)
        if text == "(":
            self.next()
            phi = self.parse_or()
            self.expect(")")
            return phi
        return self.parse_atom()

    def ident(self) -> str:
        kind, text, pos = self.peek()
        if kind != "name" or text in KEYWORDS:
            raise ParseError(f"expected an identifier, got {text or 'end of input'!r}", pos)
        self.next()
        return text

    def var_list(self, sep=",") -> tuple[str, ...]:
        out = [self.ident()]
        while self.peek()[1] == sep:
            self.next()
            out.append(self.ident())
        return tuple(out)

    def parse_atom(self) -> Formula:
        kind, text, pos = self.peek()
        if text == "!":
            self.next()
            name = self.ident()
            self.expect("(")
            args = self.var_list()
            self.expect(")")
            return self.rel_atom(name, args, False, pos)
        if text == "dep":
            self.next()
            self.expect("(")
            dets: tuple[str, ...] = ()
            if self.peek()[1] != ";":
                dets = self.var_list()
            self.expect(";")
            dep = self.ident()
            self.expect(")")
            return DepAtom(dets, dep)
        if text == "inc":
            self.next()
            self.expect("(")
            left = self.var_list()
            self.expect(";")
            right = self.var_list()
            tok = self.expect(")")
            if len(left) != len(right):
                raise ParseError("inclusion atom sides differ in length", tok[2])
            return InclAtom(left, right)
        if text == "ind":
            self.next()
            self.expect("(")
            left = self.var_list()
            self.expect("|")
            cond = self.var_list()
            self.expect("|")
            right = self.var_list()
            self.expect(")")
            return IndepAtom(left, cond, right)
        if text == "atom":
            self.next()
            name = self.ident()
            self.expect("(")
            tuples = [self.var_list()]
            while self.peek()[1] == ";":
                self.next()
                tuples.append(self.var_list())
            tok = self.expect(")")
            if self.atom_types is not None:
                sig = self.atom_types.get(name)
                if sig is None:
                    raise ParseError(f"unknown generalized atom {name!r}", pos)
                if tuple(len(t) for t in tuples) != tuple(sig):
                    raise ParseError(f"atom {name!r} expects arities {tuple(sig)}", tok[2])
            return GenAtom(name, tuple(tuples))
        if kind == "name":
            if text in KEYWORDS:
                raise ParseError(f"unexpected keyword {text!r}", pos)
            self.next()
            follow = self.peek()
            if follow[1] == "(":
                self.next()
                args = self.var_list()
                self.expect(")")
                return self.rel_atom(text, args, True, pos)
            if follow[1] in ("=", "!=", "<="):
                self.next()
                other = self.ident()
                if follow[1] == "=":
                    return EqAtom(text, other, True)
                if follow[1] == "!=":
                    return EqAtom(text, other, False)
                return RelAtom("leq", (text, other), True)
            raise ParseError(f"expected an atom after {text!r}", follow[2])
        raise ParseError(f"expected a formula, got {text or 'end of input'!r}", pos)

    def rel_atom(self, name, args, positive, pos) -> RelAtom:
        if name in BUILTIN_RELS:
            block = BUILTIN_RELS[name]
            if len(args) % block != 0:
                raise ParseError(f"builtin {name} needs a multiple of {block} arguments", pos)
        elif self.vocab is not None:
            if name not in self.vocab:
                raise ParseError(f"relation {name!r} not in vocabulary", pos)
            if self.vocab[name] != len(args):
                raise ParseError(
                    f"relation {name!r} has arity {self.vocab[name]}, got {len(args)} arguments", pos)
        return RelAtom(name, args, positive)


def parse_team_formula(text: str,
                       vocab: Optional[Mapping[str, int]] = None,
                       atom_types: Optional[Mapping[str, tuple[int, ...]]] = None) -> Formula:
    """Parse the team-logic DSL; see README for the concrete syntax."""
    return _Parser(text, vocab, atom_types).parse()


# ---------------------------------------------------------------------------
# Quantified Boolean CNF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QBFormula:
    """CNF clause set with an optional existential prefix.

    Variables are 1..num_vars; clause literals are signed ints.  Variables in
    `bound` are existentially quantified, the rest are free.
    """
    num_vars: int
    clauses: tuple[frozenset[int], ...]
    bound: frozenset[int] = frozenset()

    def __post_init__(self):
        for v in self.bound:
            if not 1 <= v <= self.num_vars:
                raise VocabularyError(f"bound variable {v} out of range")
        for cl in self.clauses:
            for lit in cl:
                if lit == 0 or not 1 <= abs(lit) <= self.num_vars:
                    raise VocabularyError(f"literal {lit} out of declared range 1..{self.num_vars}")

    @property
    def free(self) -> frozenset[int]:
        return frozenset(range(1, self.num_vars + 1)) - self.bound

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)


def classify(f: QBFormula) -> frozenset[str]:
    """Exactly the syntactic class flags that hold for `f`."""
    flags = set()
    if f.width <= 2:
        flags.add("2CNF")
    if f.width <= 3:
        flags.add("3CNF")
    free = f.free
    pos_free = {abs(l) for c in f.clauses for l in c if l > 0 and abs(l) in free}
    neg_free = {abs(l) for c in f.clauses for l in c if l < 0 and abs(l) in free}
    if not neg_free:
        flags.add("CNF+")
    if not pos_free:
        flags.add("CNF-")
    if all(sum(1 for l in c if l < 0) <= 1 for c in f.clauses):
        flags.add("DualHorn")
    if f.bound:
        flags.add("Sigma1")
    return frozenset(flags)


def is_cnf_neg(f: QBFormula) -> bool:
    return "CNF-" in classify(f)


def is_cnf_pos(f: QBFormula) -> bool:
    return "CNF+" in classify(f)


def is_dualhorn(f: QBFormula) -> bool:
    return "DualHorn" in classify(f)


def is_kcnf(f: QBFormula, k: int) -> bool:
    return f.width <= k


def parse_cnf(text: str) -> QBFormula:
    """DIMACS with an optional single `e ... 0` existential-prefix line."""
    num_vars = None
    num_clauses = None
    bound: set[int] = set()
    seen_prefix = False
    clauses: list[frozenset[int]] = []
    pending: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            m = re.fullmatch(r"p\s+cnf\s+(\d+)\s+(\d+)", line)
            if m is None or num_vars is not None:
                raise ParseError(f"bad or duplicate header on line {lineno}", lineno)
            num_vars, num_clauses = int(m.group(1)), int(m.group(2))
            continue
        if num_vars is None:
            raise ParseError(f"clause before header on line {lineno}", lineno)
        if line.startswith("e"):
            if seen_prefix:
                raise ParseError(f"duplicate existential prefix line on line {lineno}", lineno)
            seen_prefix = True
            parts = line.split()[1:]
            if not parts or parts[-1] != "0":
                raise ParseError(f"prefix line must end with 0 on line {lineno}", lineno)
            for tok in parts[:-1]:
                v = int(tok)
                if not 1 <= v <= num_vars:
                    raise ParseError(f"prefix variable {v} out of range on line {lineno}", lineno)
                bound.add(v)
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(frozenset(pending))
                pending = []
            else:
                if not 1 <= abs(lit) <= num_vars:
                    raise ParseError(f"literal {lit} out of declared range on line {lineno}", lineno)
                pending.append(lit)
    if pending:
        raise ParseError("unterminated clause at end of input", len(text))
    if num_vars is None:
        raise ParseError("missing DIMACS header", 0)
    if num_clauses is not None and len(clauses) != num_clauses:
        raise ParseError(f"header declares {num_clauses} clauses, found {len(clauses)}", len(text))
    return QBFormula(num_vars, tuple(clauses), frozenset(bound))


def emit_dimacs(f: QBFormula, comments: Iterable[str] = ()) -> str:
    """Serialize deterministically: comments, header, prefix, sorted clauses."""
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    if f.bound:
        lines.append("e " + " ".join(str(v) for v in sorted(f.bound)) + " 0")
    for cl in sorted(f.clauses, key=lambda c: sorted(c, key=lambda l: (abs(l), l))):
        lines.append(" ".join(str(l) for l in sorted(cl, key=lambda l: (abs(l), l))) + " 0")
    return "\n".join(lines) + "\n"


def simplify_clauses(clauses: Iterable[frozenset[int]],
                     assignment: Mapping[int, bool]) -> Optional[tuple[frozenset[int], ...]]:
    """Apply a partial assignment; None signals a falsified clause."""
    out = []
    for cl in clauses:
        keep: list[int] = []
        satisfied = False
        for lit in cl:
            v = assignment.get(abs(lit))
            if v is None:
                keep.append(lit)
            elif (lit > 0) == v:
                satisfied = True
                break
        if satisfied:
            continue
        if not keep:
            return None
        out.append(frozenset(keep))
    return tuple(out)


def prenex_conjoin(a: QBFormula, b: QBFormula, rename: bool = True) -> QBFormula:
    """Clause union of quantifier-free `a` with Sigma_1 `b` under b's prefix.

    Free variables are shared by id.  A bound variable of `b` keeps its id
    unless the same id occurs in `a` (capture); captured ids are renamed to
    fresh ones, or rejected when `rename` is off.
    """
    if a.bound:
        raise VocabularyError("left operand of prenex_conjoin must be quantifier-free")
    occurring_a = {abs(l) for cl in a.clauses for l in cl}
    collisions = b.bound & occurring_a
    num_vars = max(a.num_vars, b.num_vars)
    mapping: dict[int, int] = {}
    if collisions:
        if not rename:
            raise VocabularyError(f"bound variables {sorted(collisions)} collide and renaming is off")
        nxt = num_vars
        for v in sorted(collisions):
            nxt += 1
            mapping[v] = nxt
        num_vars = nxt

    def remap(cl: frozenset[int]) -> frozenset[int]:
        return frozenset((1 if l > 0 else -1) * mapping.get(abs(l), abs(l)) for l in cl)

    bound = frozenset(mapping.get(v, v) for v in b.bound)
    clauses = tuple(a.clauses) + tuple(remap(cl) for cl in b.clauses)
    return QBFormula(num_vars, clauses, bound)


# ---------------------------------------------------------------------------
# Prenex dependency normal form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalFormDescriptor:
    """Shape ∀ y1..yk ∃ z1..zl ( /\\ atoms  &  theta ) with FO matrix theta."""
    kind: str                       # "dependence" | "inclusion"
    free_vars: tuple[str, ...]      # the team tuple, length m
    universals: tuple[str, ...]
    existentials: tuple[str, ...]
    dep_atoms: tuple[DepAtom, ...] = ()
    incl_atoms: tuple[InclAtom, ...] = ()

    matrix: Formula = EqAtom("x", "x")

    @property
    def m(self):
        return len(self.free_vars)

    @property
    def k(self):
        return len(self.universals)

    @property
    def l(self):
        return len(self.existentials)

    @property
    def all_vars(self) -> tuple[str, ...]:
        return self.free_vars + self.universals + self.existentials


def check_normal_form(phi: Formula, atom_kind: str,
                      free_tuple: Optional[tuple[str, ...]] = None) -> NormalFormDescriptor:
    """Match the ∀*∃*(atoms ∧ θ) shape or raise NormalFormError.

    `atom_kind` is "dependence" or "inclusion".  Degenerate prefixes and an
    empty atom list are allowed.  Dependence atoms must have a nonempty
    determinant tuple drawn from the universal prefix and an existentially
    quantified dependent.
    """
    if atom_kind not in ("dependence", "inclusion"):
        raise ValueError(f"unknown atom kind {atom_kind!r}")
    fv = free_vars(phi)
    if free_tuple is None:
        free_tuple = tuple(sorted(fv))
    elif not fv <= set(free_tuple):
        raise NormalFormError(f"free variables {sorted(fv - set(free_tuple))} missing from the team tuple", phi)

    universals: list[str] = []
    node = phi
    while isinstance(node, Forall):
        universals.append(node.var)
        node = node.body
    existentials: list[str] = []
    while isinstance(node, Exists):
        existentials.append(node.var)
        node = node.body
    if isinstance(node, Forall):
        raise NormalFormError("universal quantifier below the existential block", node)

    dep_atoms: list[DepAtom] = []
    incl_atoms: list[InclAtom] = []
    theta_parts: list[Formula] = []
    for part in conjuncts(node):
        if isinstance(part, DepAtom):
            if atom_kind != "dependence":
                raise NormalFormError("dependence atom in an inclusion normal form", part)
            if not part.determinants:
                raise NormalFormError("constancy atom (empty determinant tuple) not allowed", part)
            if not set(part.determinants) <= set(universals):
                raise NormalFormError("dependence determinants must be universally quantified", part)
            if part.dependent not in existentials:
                raise NormalFormError("dependence dependent must be existentially quantified", part)
            dep_atoms.append(part)
        elif isinstance(part, InclAtom):
            if atom_kind != "inclusion":
                raise NormalFormError("inclusion atom in a dependence normal form", part)
            incl_atoms.append(part)
        else:
            offending = _find_dependency_node(part)
            if offending is not None:
                raise NormalFormError("dependency atom nested inside the matrix", offending)
            theta_parts.append(part)

    if theta_parts:
        theta = conjoin(theta_parts)
    else:
        # Trivially true matrix; anchor on some variable of the formula.
        anchor = (free_tuple + tuple(universals) + tuple(existentials) + ("x",))[0]
        theta = EqAtom(anchor, anchor)
    return NormalFormDescriptor(
        kind=atom_kind,
        free_vars=tuple(free_tuple),
        universals=tuple(universals),
        existentials=tuple(existentials),
        dep_atoms=tuple(dep_atoms),
        incl_atoms=tuple(incl_atoms),
        matrix=theta,
    )


def _find_dependency_node(phi: Formula) -> Optional[Formula]:
    if isinstance(phi, (DepAtom, InclAtom, IndepAtom, GenAtom, ExistsRel)):
        return phi
    if isinstance(phi, (And, Or)):
        return _find_dependency_node(phi.left) or _find_dependency_node(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return _find_dependency_node(phi.body)
    return None


def make_normal_form(d: NormalFormDescriptor) -> Formula:
    """Rebuild the formula a descriptor stands for (recognizer inverse)."""
    atoms: tuple[Formula, ...] = d.dep_atoms if d.kind == "dependence" else d.incl_atoms
    body = conjoin(list(atoms) + [d.matrix])
    for z in reversed(d.existentials):
        body = Exists(z, body)
    for y in reversed(d.universals):
        body = Forall(y, body)
    return body
