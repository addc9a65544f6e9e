"""Acceptance suite: one pass/fail line per criterion (run with -s to stream).

Criterion 1 checks both routes of the positive-2CNF example.  The
dependence-logic route, implemented verbatim, counts exactly one below the
brute-force reference on every instance (its team encoding maps the
always-satisfying all-ones assignment to the empty team, which team counting
excludes by definition).  The check is asserted as stated and therefore
fails; see notes/decisions.md for the analysis.  The inclusion route and the
runtime bound hold.
"""

import itertools
import random
import time

import pytest

from teamcount.counting import (count_assignments, count_inclusion_teams,
                                count_relations, count_sigma1_dualhorn,
                                count_teams, max_subteam)
from teamcount.formula_core import (DepAtom, EqAtom, InclAtom,
                                    NormalFormDescriptor, QBFormula, RelAtom,
                                    classify, make_normal_form)
from teamcount.reductions import (FOInterpretation, RelDef, apply_interpretation,
                                  builtin_formula, dep_to_sigma1cnf_neg,
                                  incl_to_sigma1_dualhorn, map_team,
                                  star_turing_reduction, translate_formula)
from teamcount.structures import (Structure, Team, encode_2cnf_plus,
                                  encode_dualhorn, encode_sigma1cnf_neg,
                                  full_team, validate_sigma1cnf_neg_structure)
from teamcount.team_eval import eval_tarski, eval_team

from gen import rand_cnf, rand_formula, rand_structure, rand_team
from oracles import (brute_count_all, brute_count_projected, brute_count_star,
                     brute_extendable, union_of_satisfying_subteams)

from test_reductions import _rand_dep_descriptor, _rand_incl_descriptor, _random_matrix


def report(cid, ok, detail=""):
    print(f"ACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"criterion {cid} failed: {detail}"


# ---------------------------------------------------------------------------
# Criterion 1: Example 10 triple equality, exhaustive 2CNF+ on <= 3 variables
# ---------------------------------------------------------------------------

def _clause_universe(n):
    units = [frozenset({i}) for i in range(1, n + 1)]
    pairs = [frozenset({i, j}) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    return units + pairs


def _example10_sweep():
    incl = builtin_formula("incl-2cnf+")
    dep = builtin_formula("dep-2cnf+")
    rows = []
    start = time.perf_counter()
    for n in (1, 2, 3):
        universe = _clause_universe(n)
        for mask in range(1, 1 << len(universe)):
            clauses = tuple(c for i, c in enumerate(universe) if mask >> i & 1)
            f = QBFormula(n, clauses)
            a, _ = encode_2cnf_plus(f)
            bf = brute_count_all(f)
            f_incl = count_teams(a, incl.formula, incl.team_vars).count
            f_dep = count_teams(a, dep.formula, dep.team_vars).count
            rows.append((n, clauses, bf, f_incl, f_dep))
    return rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def example10():
    return _example10_sweep()


def test_criterion_1a_inclusion_route(example10):
    rows, _ = example10
    bad = [(r[0], sorted(map(sorted, r[1]))) for r in rows if r[3] != r[2]]
    report("1a (Example 10, inclusion route = #2CNF+)",
           not bad and len(rows) == 71, f"{len(rows)} instances, mismatches: {bad[:3]}")


def test_criterion_1b_dependence_route(example10):
    rows, _ = example10
    mismatches = [r for r in rows if r[4] != r[2]]
    offsets = {r[2] - r[4] for r in rows}
    report("1b (Example 10, dependence route = #2CNF+)",
           not mismatches,
           f"fails on {len(mismatches)}/{len(rows)} instances; observed offset(s) {sorted(offsets)} "
           "(verbatim paper formula undercounts by the all-ones assignment)")


def test_criterion_1c_runtime(example10):
    _, elapsed = example10
    report("1c (Example 10 sweep under 60 s)", elapsed < 60.0, f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 2: Theorem 16 reduction exactness and variable counts
# ---------------------------------------------------------------------------

def test_criterion_2_dependence_reduction():
    rng = random.Random(216)
    checked = 0
    bad = []
    while checked < 50:
        d = _rand_dep_descriptor(rng)
        n = rng.choice((2, 3))
        a = rand_structure(rng, size=n, vocab=(("R", 2),))
        out = dep_to_sigma1cnf_neg(a, d)
        expected_vars = sum(n ** (d.m + i) for i in range(d.k + d.l + 1))
        star = count_assignments(out, "star").count
        teams = count_teams(a, make_normal_form(d), d.free_vars).count
        if star != teams or out.num_vars != expected_vars:
            bad.append((d, n, star, teams))
        checked += 1
    report("2 (Thm 16: star count = team count, variable-count formula)",
           not bad, f"{checked} seeded instances, failures: {len(bad)}")


# ---------------------------------------------------------------------------
# Criterion 3: Theorem 21 reduction exactness and syntactic flags
# ---------------------------------------------------------------------------

def test_criterion_3_inclusion_reduction():
    rng = random.Random(321)
    checked = 0
    bad = []
    flag_failures = 0
    while checked < 50:
        d = _rand_incl_descriptor(rng)
        n = rng.choice((2, 3))
        a = rand_structure(rng, size=n, vocab=(("R", 2),))
        out = incl_to_sigma1_dualhorn(a, d)
        flags = classify(out)
        if "DualHorn" not in flags or "CNF-" not in flags:
            flag_failures += 1
        star = count_assignments(out, "star").count
        teams = count_teams(a, make_normal_form(d), d.free_vars).count
        if star != teams:
            bad.append((d, n, star, teams))
        checked += 1
    report("3 (Thm 21: exactness + 100% DualHorn/CNF- flags)",
           not bad and flag_failures == 0,
           f"{checked} seeded instances, count failures: {len(bad)}, flag failures: {flag_failures}")


# ---------------------------------------------------------------------------
# Criterion 4: Theorem 26 star Turing reduction
# ---------------------------------------------------------------------------

def test_criterion_4_star_turing_reduction():
    rng = random.Random(426)
    probe_answers = []

    def instrumented_oracle(g):
        value = count_assignments(g, "star").count
        probe_answers.append(value)
        return value

    checked = 0
    bad = 0
    bad_probe = 0
    while checked < 100:
        f = rand_cnf(rng, max_vars=8, max_clauses=6, bound_fraction=0.4,
                     force_cnf_neg=True)
        probe_answers.clear()
        res = star_turing_reduction(f, instrumented_oracle)
        if probe_answers[0] not in (0, 2):
            bad_probe += 1
        if res.count != brute_count_projected(f):
            bad += 1
        checked += 1
    report("4 (Thm 26: Turing reduction = brute-force projected; probe in {0,2})",
           bad == 0 and bad_probe == 0,
           f"{checked} instances, count failures: {bad}, probe violations: {bad_probe}")


# ---------------------------------------------------------------------------
# Criterion 5: closure suites, 1000 trials each
# ---------------------------------------------------------------------------

def test_criterion_5_flatness():
    rng = random.Random(505)
    violations = 0
    for _ in range(1000):
        a = rand_structure(rng)
        t = rand_team(rng, a.size, ("x", "y"), max_rows=5)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo",))
        pointwise = all(eval_tarski(a, dict(zip(t.domain, row)), phi) for row in t.rows)
        if eval_team(a, t, phi) != pointwise:
            violations += 1
    report("5 (flatness, 1000 trials)", violations == 0, f"violations: {violations}")


def test_criterion_5_downward_closure():
    rng = random.Random(515)
    violations = 0
    informative = 0
    for _ in range(1000):
        a = rand_structure(rng)
        t = rand_team(rng, a.size, ("x", "y"), max_rows=4)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "dep"))
        if not eval_team(a, t, phi):
            continue
        informative += 1
        sub = frozenset(rng.sample(sorted(t.rows), rng.randrange(len(t.rows) + 1))) if t.rows else frozenset()
        if not eval_team(a, Team(t.domain, sub), phi):
            violations += 1
    report("5 (downward closure, 1000 trials)",
           violations == 0 and informative >= 200,
           f"violations: {violations}, informative premises: {informative}")


def test_criterion_5_union_closure():
    rng = random.Random(525)
    violations = 0
    informative = 0
    for _ in range(1000):
        a = rand_structure(rng)
        t1 = rand_team(rng, a.size, ("x", "y"), max_rows=3)
        t2 = rand_team(rng, a.size, ("x", "y"), max_rows=3)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "incl"))
        if not (eval_team(a, t1, phi) and eval_team(a, t2, phi)):
            continue
        if t1.rows and t2.rows:
            informative += 1
        if not eval_team(a, Team(t1.domain, t1.rows | t2.rows), phi):
            violations += 1
    report("5 (union closure, 1000 trials)",
           violations == 0 and informative >= 100,
           f"violations: {violations}, informative premises: {informative}")


def test_criterion_5_empty_team_property():
    rng = random.Random(535)
    violations = 0
    for _ in range(1000):
        a = rand_structure(rng)
        phi = rand_formula(rng, ("x", "y"), depth=3, atoms=("fo", "dep", "incl", "indep"))
        if not eval_team(a, Team(("x", "y"), frozenset()), phi):
            violations += 1
    report("5 (empty team property, 1000 trials)", violations == 0,
           f"violations: {violations}")


# ---------------------------------------------------------------------------
# Criterion 6: maximal subteams
# ---------------------------------------------------------------------------

def test_criterion_6_max_subteam():
    rng = random.Random(606)
    mismatches = 0
    idempotence_failures = 0
    lemma18_failures = 0
    instances = 0
    teams_checked = 0
    while instances < 12:
        a = rand_structure(rng, size=2)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "incl"))
        instances += 1
        universe = sorted(itertools.product(range(a.size), repeat=2))
        for mask in range(1 << len(universe)):
            rows = frozenset(r for i, r in enumerate(universe) if mask >> i & 1)
            if len(rows) > 6:
                continue
            teams_checked += 1
            t = Team(("x", "y"), rows)
            got = max_subteam(a, t, phi)
            want = union_of_satisfying_subteams(a, t.domain, t.rows, phi)
            if got.rows != want:
                mismatches += 1
            if max_subteam(a, got, phi).rows != got.rows:
                idempotence_failures += 1
        positive = count_teams(a, phi, ("x", "y")).count > 0
        nonempty_max = bool(max_subteam(a, full_team(a.size, ("x", "y")), phi).rows)
        if positive != nonempty_max:
            lemma18_failures += 1
    report("6 (max_subteam = brute-force union; idempotent; Lemma 18)",
           mismatches == 0 and idempotence_failures == 0 and lemma18_failures == 0,
           f"{teams_checked} teams over {instances} instances; "
           f"mismatches {mismatches}, idempotence {idempotence_failures}, lemma18 {lemma18_failures}")


# ---------------------------------------------------------------------------
# Criterion 7: the two smart counters agree with brute force
# ---------------------------------------------------------------------------

def test_criterion_7_smart_counters():
    rng = random.Random(722)
    incl_failures = 0
    for _ in range(20):
        a = rand_structure(rng, size=2)
        phi = rand_formula(rng, ("x", "y"), depth=2, atoms=("fo", "incl"))
        if count_inclusion_teams(a, phi, ("x", "y")).count != count_teams(a, phi, ("x", "y")).count:
            incl_failures += 1

    worked = count_inclusion_teams(Structure(2, ()), InclAtom(("x",), ("y",)), ("x", "y")).count

    dualhorn_failures = 0
    for _ in range(40):
        f = rand_cnf(rng, max_vars=12, max_clauses=8, force_dualhorn=True,
                     bound_fraction=0.4)
        if count_sigma1_dualhorn(f).count != count_assignments(f, "projected").count:
            dualhorn_failures += 1
    report("7 (Thm 22/23 counters vs oracles; worked value 11)",
           incl_failures == 0 and dualhorn_failures == 0 and worked == 11,
           f"inclusion failures {incl_failures}, dualhorn failures {dualhorn_failures}, "
           f"inc(x;y) over n=2 = {worked}")


# ---------------------------------------------------------------------------
# Criterion 8: Theorems 14 and 20 built-ins
# ---------------------------------------------------------------------------

def test_criterion_8_thm14_thm20_builtins():
    rng = random.Random(814)
    b14 = builtin_formula("sigma11-cnfneg")
    b20 = builtin_formula("myopic-dualhorn")

    thm14_checked = 0
    thm14_failures = 0
    while thm14_checked < 50:
        f = rand_cnf(rng, max_vars=3, max_clauses=2, bound_fraction=0.5,
                     force_cnf_neg=True)
        a, _ = encode_sigma1cnf_neg(f)
        if not validate_sigma1cnf_neg_structure(a):
            thm14_failures += 1
        got = count_relations(a, b14.formula, b14.free_rels, nonempty_only=True).count
        if got != brute_count_star(f):
            thm14_failures += 1
        thm14_checked += 1

    thm20_checked = 0
    thm20_failures = 0
    while thm20_checked < 50:
        f = rand_cnf(rng, max_vars=4, max_clauses=3, bound_fraction=0.0,
                     force_dualhorn=True)
        if f.num_vars + len(f.clauses) > 7:
            continue
        a, _ = encode_dualhorn(f)
        got = count_relations(a, b20.formula, b20.free_rels, nonempty_only=True).count
        want = brute_count_all(f) - (1 if brute_extendable(f, {v: False for v in f.free}) else 0)
        if got != want:
            thm20_failures += 1
        thm20_checked += 1

    report("8 (Thm 14/20: nonempty-relation counts = star counts, 50 each)",
           thm14_failures == 0 and thm20_failures == 0,
           f"thm14 failures {thm14_failures}/{thm14_checked}, thm20 failures {thm20_failures}/{thm20_checked}")


# ---------------------------------------------------------------------------
# Criterion 9: pendant-vertex identity and interpolation
# ---------------------------------------------------------------------------

def test_criterion_9_gk_identity_and_interpolation():
    from teamcount.valiant_chain import (BipartiteGraph, PairedInstance,
                                         build_Gk, count_paired,
                                         pm_to_im_interpolate)
    rng = random.Random(909)
    identity_failures = 0
    interpolation_failures = 0
    graphs = 0
    while graphs < 12:
        nl = rng.randrange(1, 4)
        nr = rng.randrange(1, 4)
        left = tuple(f"a{i}" for i in range(nl))
        right = tuple(f"b{i}" for i in range(nr))
        n_edges = rng.randrange(1, 9)
        edges = {}
        for i in range(n_edges):
            edges[f"e{i}"] = (rng.choice(left), rng.choice(right))
        g = BipartiteGraph(left, right, tuple(edges.items()))
        psi = rand_cnf(rng, max_vars=max(len(g.edges), 1), max_clauses=2,
                       bound_fraction=0.3, force_cnf_neg=True)
        graphs += 1

        # brute-force A'_r on g itself
        a_r = [0] * (nl + 1)
        for mask in range(1 << len(g.edges)):
            used = set()
            ok = True
            size = 0
            chosen = {}
            for i, (_, (u, v)) in enumerate(g.edges):
                chosen[i + 1] = bool(mask >> i & 1)
                if mask >> i & 1:
                    if u in used or v in used:
                        ok = False
                        break
                    used.add(u)
                    used.add(v)
                    size += 1
            if not ok:
                continue
            if not brute_extendable(psi, {v: chosen.get(v, False) for v in psi.free}):
                continue
            a_r[nl - size] += 1

        from teamcount.valiant_chain import _pad_psi
        for k in range(1, nl + 2):
            gk = build_Gk(g, k)
            inst = PairedInstance("matching", _pad_psi(psi, len(gk.edges)), graph=gk)
            total = count_paired(inst).count
            if total != sum(a_r[r] * (k + 1) ** r for r in range(nl + 1)):
                identity_failures += 1

        got = pm_to_im_interpolate(g, psi).count
        if got != a_r[0]:
            interpolation_failures += 1

    report("9 (G_k identity and exact interpolation)",
           identity_failures == 0 and interpolation_failures == 0,
           f"{graphs} graphs; identity failures {identity_failures}, "
           f"interpolation failures {interpolation_failures}")


# ---------------------------------------------------------------------------
# Criterion 10: interpretation equivalence
# ---------------------------------------------------------------------------

def test_criterion_10_interpretation_equivalence():
    rng = random.Random(1015)
    counterexamples = 0
    trials = 0
    while trials < 200:
        a = rand_structure(rng, size=rng.choice((2, 3)), vocab=(("R", 2), ("S", 1)))
        k = rng.choice((1, 2))
        dvars = tuple(f"w{j}" for j in range(1, k + 1))
        dom = _random_matrix(rng, dvars) if rng.random() < 0.6 else EqAtom(dvars[0], dvars[0])
        pvars = tuple(f"u{j}" for j in range(1, k + 1))
        interp = FOInterpretation(k, dvars, dom,
                                  (RelDef("P", 1, pvars, _random_matrix(rng, pvars)),))
        try:
            target, index = apply_interpretation(interp, a)
        except Exception:
            continue
        phi = rand_formula(rng, ("x", "y"), vocab=(("P", 1),), depth=2)
        psi = translate_formula(interp, phi)
        inv = {v: t for t, v in index.items()}
        universe = sorted(itertools.product(range(target.size), repeat=2))
        rows = frozenset(rng.sample(universe, rng.randrange(0, min(len(universe), 4) + 1)))
        src_rows = frozenset(inv[r[0]] + inv[r[1]] for r in rows)
        domain = tuple(f"x__{j}" for j in range(1, k + 1)) + tuple(f"y__{j}" for j in range(1, k + 1))
        lhs = eval_team(a, Team(domain, src_rows), psi)
        rhs = eval_team(target, Team(("x", "y"), rows), phi)
        if lhs != rhs:
            counterexamples += 1
        trials += 1
    report("10 (Thm 15: translate/apply equivalence, 200 trials)",
           counterexamples == 0, f"counterexamples: {counterexamples}")
