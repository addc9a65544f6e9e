import itertools
import random

import pytest

from teamcount.errors import EvaluationError, RegistryError
from teamcount.formula_core import (DepAtom, GenAtom, InclAtom, parse_team_formula)
from teamcount.structures import Structure, Team, empty_team, full_team
from teamcount.team_eval import (AtomRegistry, GeneralizedAtomDef, eval_tarski,
                                 eval_team, max_subteam_fixpoint, register_atom)

from gen import rand_formula, rand_structure, rand_team
from oracles import naive_eval, oracle_tarski


def S(size=2, R=frozenset(), Sr=frozenset()):
    return Structure(size, (("R", 2), ("S", 1)), {"R": frozenset(R), "S": frozenset(Sr)})


# ---------------------------------------------------------------------------
# Tarskian evaluation
# ---------------------------------------------------------------------------

def test_tarski_relation_atom():
    a = S(R={(0, 1)})
    assert eval_tarski(a, {"x": 0, "y": 1}, parse_team_formula("R(x,y)"))
    assert not eval_tarski(a, {"x": 1, "y": 0}, parse_team_formula("R(x,y)"))


def test_tarski_builtin_addition():
    a = S(3)
    phi = parse_team_formula("add(x,y,z)")
    assert eval_tarski(a, {"x": 1, "y": 1, "z": 2}, phi)
    assert not eval_tarski(a, {"x": 1, "y": 1, "z": 0}, phi)


def test_tarski_inequality_on_equal_values():
    assert not eval_tarski(S(), {"x": 1, "y": 1}, parse_team_formula("x!=y"))


def test_tarski_unbound_variable():
    with pytest.raises(EvaluationError):
        eval_tarski(S(), {"x": 0}, parse_team_formula("x=y"))


def test_tarski_rejects_dependency_atoms():
    with pytest.raises(EvaluationError):
        eval_tarski(S(), {"x": 0, "y": 0}, parse_team_formula("dep(x;y)"))


def test_tarski_quantifiers():
    a = S(2, R={(0, 1), (1, 0)})
    assert eval_tarski(a, {}, parse_team_formula("A x. E y. R(x,y)"))
    assert not eval_tarski(a, {}, parse_team_formula("E x. R(x,x)"))


# ---------------------------------------------------------------------------
# Team evaluation: spec cases
# ---------------------------------------------------------------------------

def test_empty_team_property():
    a = S()
    for text in ("dep(x;y)", "inc(x;y)", "ind(x|y|x)", "R(x,y)", "x!=x",
                 "E z. (dep(x;z) & z=y)", "A z. (inc(z;x) | S(z))"):
        assert eval_team(a, empty_team(("x", "y")), parse_team_formula(text))


def test_dependence_violation():
    t = Team(("x", "y"), frozenset({(0, 0), (0, 1)}))
    assert not eval_team(S(), t, parse_team_formula("dep(x;y)"))


def test_inclusion_worked_case():
    t = Team(("x", "y"), frozenset({(0, 1), (1, 0)}))
    assert eval_team(S(), t, parse_team_formula("inc(x;y)"))
    t2 = Team(("x", "y"), frozenset({(0, 1)}))
    assert not eval_team(S(), t2, parse_team_formula("inc(x;y)"))


def test_independence_missing_witness():
    t = Team(("x", "y", "z"), frozenset({(0, 0, 0), (0, 1, 1)}))
    assert not eval_team(S(), t, parse_team_formula("ind(y|x|z)"))
    t2 = Team(("x", "y", "z"), frozenset({(0, 0, 0), (0, 1, 1), (0, 1, 0), (0, 0, 1)}))
    assert eval_team(S(), t2, parse_team_formula("ind(y|x|z)"))


def test_flat_split():
    a = Structure(2, (("R", 1), ("Q", 1)),
                  {"R": frozenset({(0,)}), "Q": frozenset({(1,)})})
    t = Team(("x",), frozenset({(0,), (1,)}))
    assert eval_team(a, t, parse_team_formula("R(x) | Q(x)"))
    assert not eval_team(a, t, parse_team_formula("R(x) | R(x)"))


def test_lax_disjunction_requires_overlap():
    # The only satisfying cover is Y={s1,s2}, Z={s2,s3}: subteams overlap at
    # s2, so partition-based splitting would wrongly reject this team.
    a = Structure(5, ())
    s1, s2, s3 = (0, 1, 3, 4), (1, 0, 0, 1), (3, 4, 1, 0)
    t = Team(("x", "y", "z", "w"), frozenset({s1, s2, s3}))
    phi = parse_team_formula("inc(x;y) | inc(z;w)")
    assert eval_team(a, t, phi)
    assert naive_eval(a, t.domain, t.rows, phi)
    assert not eval_team(a, Team(t.domain, frozenset({s1, s3})), phi)


def test_shadowed_quantifier():
    a = S(2)
    t = Team(("x",), frozenset({(0,), (1,)}))
    # rebinding x: every assignment can pick a fresh x value
    assert eval_team(a, t, parse_team_formula("E x. x=x"))
    assert eval_team(a, t, parse_team_formula("A x. x<=x"))


def test_unbound_team_variable():
    with pytest.raises(EvaluationError):
        eval_team(S(), Team(("x",), frozenset({(0,)})), parse_team_formula("x=y"))


# ---------------------------------------------------------------------------
# Generalized atoms
# ---------------------------------------------------------------------------

def test_register_nonempty_atom():
    reg = AtomRegistry()
    register_atom(GeneralizedAtomDef("nonempty", (1,), lambda n, rels: len(rels[0]) > 0), reg)
    a = S()
    phi = GenAtom("nonempty", (("x",),))
    assert eval_team(a, Team(("x",), frozenset({(0,)})), phi, reg)
    assert not eval_team(a, empty_team(("x",)), phi, reg)


def test_register_duplicate_name():
    reg = AtomRegistry()
    d = GeneralizedAtomDef("nonempty", (1,), lambda n, rels: True)
    register_atom(d, reg)
    with pytest.raises(RegistryError):
        register_atom(d, reg)


def test_unregistered_atom():
    with pytest.raises(RegistryError):
        eval_team(S(), Team(("x",), frozenset({(0,)})), GenAtom("nope", (("x",),)),
                  AtomRegistry())


def test_atom_arity_mismatch():
    reg = AtomRegistry()
    register_atom(GeneralizedAtomDef("g", (2,), lambda n, rels: True), reg)
    with pytest.raises(EvaluationError):
        eval_team(S(), Team(("x",), frozenset({(0,)})), GenAtom("g", (("x",),)), reg)


def test_inclusion_as_generalized_atom_cross_check():
    # registered evaluator vs the built-in inclusion atom on 500 random teams
    reg = AtomRegistry()
    register_atom(GeneralizedAtomDef("subset", (1, 1),
                                     lambda n, rels: rels[0] <= rels[1]), reg)
    rng = random.Random(17)
    for _ in range(500):
        a = rand_structure(rng)
        t = rand_team(rng, a.size, ("x", "y"))
        gen = eval_team(a, t, GenAtom("subset", (("x",), ("y",))), reg)
        ref = eval_team(a, t, InclAtom(("x",), ("y",)))
        assert gen == ref


def test_restriction_consistency():
    # the relations handed to an atom equal projections of rel(X)
    captured = {}

    def capture(n, rels):
        captured["rels"] = rels
        return True

    reg = AtomRegistry()
    register_atom(GeneralizedAtomDef("cap", (2, 1), capture), reg)
    rows = frozenset({(0, 1, 1), (1, 0, 1), (1, 1, 0)})
    t = Team(("x", "y", "z"), rows)
    eval_team(S(2), t, GenAtom("cap", (("z", "x"), ("y",))), reg)
    assert captured["rels"][0] == frozenset({(r[2], r[0]) for r in rows})
    assert captured["rels"][1] == frozenset({(r[1],) for r in rows})


# ---------------------------------------------------------------------------
# Fast paths vs definitional reference
# ---------------------------------------------------------------------------

def test_eval_matches_definitional_reference():
    rng = random.Random(23)
    checked = 0
    for trial in range(250):
        a = rand_structure(rng, size=2)
        nvars = rng.choice((1, 2))
        vars_ = ("x", "y")[:nvars]
        t = rand_team(rng, a.size, vars_, max_rows=3)
        phi = rand_formula(rng, vars_, depth=2)
        got = eval_team(a, t, phi)
        want = naive_eval(a, t.domain, t.rows, phi)
        assert got == want, (trial, phi, sorted(t.rows))
        checked += 1
    assert checked == 250


def test_eval_matches_reference_larger_teams_restricted_atoms():
    # bigger teams, no independence atoms (keeps the oracle affordable)
    rng = random.Random(29)
    for trial in range(120):
        a = rand_structure(rng, size=rng.choice((2, 3)))
        vars_ = ("x", "y")
        t = rand_team(rng, a.size, vars_, max_rows=4)
        phi = rand_formula(rng, vars_, depth=2, atoms=("fo", "dep", "incl"))
        got = eval_team(a, t, phi)
        want = naive_eval(a, t.domain, t.rows, phi)
        assert got == want, (trial, phi, sorted(t.rows))


def test_tarski_matches_reference():
    rng = random.Random(31)
    for _ in range(200):
        a = rand_structure(rng)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo",))
        s = {"x": rng.randrange(a.size), "y": rng.randrange(a.size)}
        assert eval_tarski(a, s, phi) == oracle_tarski(a, s, phi)


# ---------------------------------------------------------------------------
# Closure properties (small versions; the full suites live in acceptance)
# ---------------------------------------------------------------------------

def test_flatness_small():
    rng = random.Random(37)
    for _ in range(150):
        a = rand_structure(rng)
        t = rand_team(rng, a.size, ("x", "y"))
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo",))
        flat = all(eval_tarski(a, dict(zip(t.domain, row)), phi) for row in t.rows)
        assert eval_team(a, t, phi) == flat


def test_downward_closure_small():
    rng = random.Random(41)
    for _ in range(100):
        a = rand_structure(rng)
        t = rand_team(rng, a.size, ("x", "y"))
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "dep"))
        if eval_team(a, t, phi) and t.rows:
            sub = frozenset(rng.sample(sorted(t.rows), rng.randrange(len(t.rows) + 1)))
            assert eval_team(a, Team(t.domain, sub), phi)


def test_union_closure_small():
    rng = random.Random(43)
    for _ in range(100):
        a = rand_structure(rng)
        t1 = rand_team(rng, a.size, ("x", "y"))
        t2 = rand_team(rng, a.size, ("x", "y"))
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "incl"))
        if eval_team(a, t1, phi) and eval_team(a, t2, phi):
            assert eval_team(a, Team(t1.domain, t1.rows | t2.rows), phi)


def test_maxsub_fixpoint_matches_union_oracle():
    from oracles import union_of_satisfying_subteams
    rng = random.Random(47)
    for _ in range(80):
        a = rand_structure(rng)
        t = rand_team(rng, a.size, ("x", "y"), max_rows=5)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "incl"))
        got = max_subteam_fixpoint(a, t, phi)
        want = union_of_satisfying_subteams(a, t.domain, t.rows, phi)
        assert got.rows == want
