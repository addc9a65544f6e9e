import itertools
import random

import pytest

from teamcount.errors import EncodingError, VocabularyError
from teamcount.formula_core import QBFormula
from teamcount.structures import (Structure, Team, builtin_holds,
                                  decode_sigma1cnf_neg, encode_2cnf_plus,
                                  encode_dualhorn, encode_sigma1cnf_neg,
                                  encode_structure, format_structure, format_team,
                                  full_team, parse_structure, parse_team,
                                  validate_sigma1cnf_neg_structure)

from gen import rand_cnf
from oracles import brute_count_projected


def test_encode_structure_unary():
    a = Structure(2, (("R", 1),), {"R": frozenset({(1,)})})
    assert encode_structure(a) == "01"


def test_encode_structure_binary_row_major():
    a = Structure(2, (("E", 2),), {"E": frozenset({(0, 1)})})
    assert encode_structure(a) == "0100"


def test_encode_structure_concatenation():
    a = Structure(2, (("R", 1), ("E", 2)),
                  {"R": frozenset({(1,)}), "E": frozenset({(0, 1)})})
    assert encode_structure(a) == "01" + "0100"


def test_builtin_arithmetic_agrees_with_integers():
    for n in range(1, 5):
        for a, b, c in itertools.product(range(n), repeat=3):
            assert builtin_holds(n, "add", (a, b, c)) == (a + b == c)
            assert builtin_holds(n, "mul", (a, b, c)) == (a * b == c)
        for a, b in itertools.product(range(n), repeat=2):
            assert builtin_holds(n, "leq", (a, b)) == (a <= b)


def test_builtin_tuple_numerals():
    # (0,1) <= (1,0) under base-3 reading: 1 <= 3
    assert builtin_holds(3, "leq", (0, 1, 1, 0))
    assert not builtin_holds(3, "leq", (1, 0, 0, 1))


def test_structures_reject_reserved_and_bad_tuples():
    with pytest.raises(VocabularyError):
        Structure(2, (("leq", 2),))
    with pytest.raises(VocabularyError):
        Structure(2, (("R", 1),), {"R": frozenset({(5,)})})
    with pytest.raises(VocabularyError):
        Structure(2, (("R", 1),), {"R": frozenset({(0, 1)})})


# ---------------------------------------------------------------------------
# 2CNF+ encoding (Example 10 conventions)
# ---------------------------------------------------------------------------

def test_encode_2cnf_plus_single_clause():
    f = QBFormula(2, (frozenset({1, 2}),))
    a, elem = encode_2cnf_plus(f)
    assert a.size == 2
    assert a.rel("C") == frozenset({(elem[1], elem[2])})


def test_encode_2cnf_plus_duplicate_clause_set_semantics():
    f1 = QBFormula(2, (frozenset({1, 2}), frozenset({2, 1})))
    f2 = QBFormula(2, (frozenset({1, 2}),))
    assert encode_2cnf_plus(f1)[0] == encode_2cnf_plus(f2)[0]


def test_encode_2cnf_plus_unit_clause_loop():
    f = QBFormula(1, (frozenset({1}),))
    a, elem = encode_2cnf_plus(f)
    assert a.rel("C") == frozenset({(elem[1], elem[1])})


def test_encode_2cnf_plus_rejects_negative():
    with pytest.raises(EncodingError):
        encode_2cnf_plus(QBFormula(2, (frozenset({-1, 2}),)))


# ---------------------------------------------------------------------------
# Sigma_1 CNF- encoding
# ---------------------------------------------------------------------------

def test_encode_sigma1cnf_neg_example():
    # ∃y(¬x ∨ y): domain {x, y, C1}; F={x}, B={y}, P={(C1,y)}, N={(C1,x)}
    f = QBFormula(2, (frozenset({-1, 2}),), frozenset({2}))
    a, elem = encode_sigma1cnf_neg(f)
    assert a.size == 3
    x, y = elem[1], elem[2]
    assert a.rel("F") == frozenset({(x,)})
    assert a.rel("B") == frozenset({(y,)})
    assert a.rel("P") == frozenset({(2, y)})
    assert a.rel("N") == frozenset({(2, x)})


def test_encode_sigma1cnf_neg_no_clauses():
    f = QBFormula(2, (), frozenset({2}))
    a, _ = encode_sigma1cnf_neg(f)
    assert a.rel("P") == frozenset() and a.rel("N") == frozenset()
    assert a.size == 2


def test_encode_sigma1cnf_neg_rejects_positive_free():
    f = QBFormula(2, (frozenset({1, 2}),), frozenset({2}))
    with pytest.raises(EncodingError):
        encode_sigma1cnf_neg(f)


def test_validator_accepts_encodings_and_rejects_mutations():
    rng = random.Random(3)
    for _ in range(30):
        f = rand_cnf(rng, max_vars=5, force_cnf_neg=True)
        a, _ = encode_sigma1cnf_neg(f)
        assert validate_sigma1cnf_neg_structure(a)
        fset = a.rel("F")
        bset = a.rel("B")
        # mutation: overlap F and B
        if bset:
            rels = dict(a.relations)
            rels["F"] = fset | {next(iter(bset))}
            assert not validate_sigma1cnf_neg_structure(Structure(a.size, a.vocab, rels))
        # mutation: positive occurrence of a free variable
        if fset and a.size > len(fset) + len(bset):
            clause_elem = max(e for e in range(a.size)
                              if (e,) not in fset and (e,) not in bset)
            rels = dict(a.relations)
            rels["P"] = a.rel("P") | {(clause_elem, next(iter(fset))[0])}
            assert not validate_sigma1cnf_neg_structure(Structure(a.size, a.vocab, rels))
        # mutation: P linking variable to variable
        if fset:
            v = next(iter(fset))[0]
            rels = dict(a.relations)
            rels["N"] = a.rel("N") | {(v, v)}
            assert not validate_sigma1cnf_neg_structure(Structure(a.size, a.vocab, rels))
        # mutation: P linking a clause element to a clause element
        clause_elems = [e for e in range(a.size)
                        if (e,) not in fset and (e,) not in bset]
        if clause_elems:
            c = clause_elems[0]
            rels = dict(a.relations)
            rels["P"] = a.rel("P") | {(c, c)}
            assert not validate_sigma1cnf_neg_structure(Structure(a.size, a.vocab, rels))


def test_encode_decode_recount_round_trip():
    rng = random.Random(9)
    for _ in range(40):
        f = rand_cnf(rng, max_vars=6, force_cnf_neg=True)
        a, _ = encode_sigma1cnf_neg(f)
        g = decode_sigma1cnf_neg(a)
        assert brute_count_projected(g) == brute_count_projected(f)


# ---------------------------------------------------------------------------
# DualHorn encoding
# ---------------------------------------------------------------------------

def test_encode_dualhorn_example():
    # (x1 ∨ x2) ∧ (¬x1 ∨ x2)
    f = QBFormula(2, (frozenset({1, 2}), frozenset({-1, 2})))
    a, elem = encode_dualhorn(f)
    x1, x2 = elem[1], elem[2]
    clauses = sorted(t[0] for t in a.rel("C"))
    assert len(clauses) == 2
    assert a.rel("N") == frozenset({(c, x1) for c in clauses
                                    if (c, x1) in a.rel("N")})
    assert (clauses[0], x1) in a.rel("P") or (clauses[1], x1) in a.rel("P")
    assert sum(1 for t in a.rel("N")) == 1


def test_encode_dualhorn_empty():
    f = QBFormula(2, ())
    a, _ = encode_dualhorn(f)
    assert a.rel("C") == frozenset()


def test_encode_dualhorn_rejects_two_negatives():
    with pytest.raises(EncodingError):
        encode_dualhorn(QBFormula(2, (frozenset({-1, -2}),)))


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def test_structure_file_round_trip():
    a = Structure(3, (("R", 2), ("S", 1)),
                  {"R": frozenset({(0, 1), (2, 2)}), "S": frozenset({(1,)})})
    assert parse_structure(format_structure(a)) == a


def test_team_file_round_trip():
    t = Team(("x", "y"), frozenset({(0, 1), (2, 0)}))
    assert parse_team(format_team(t)) == t


def test_full_team():
    t = full_team(2, ("x", "y"))
    assert len(t.rows) == 4
