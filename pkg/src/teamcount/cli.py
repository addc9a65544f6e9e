"""Batch command-line front end.

Reports are machine-readable `key: value` lines; identical inputs produce
byte-identical reports apart from `time-*` lines.  Exit status: 0 success,
1 verification mismatch or operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

from . import counting, kernels, reductions, valiant_chain
from .errors import TeamCountError


class UsageError(TeamCountError):
    pass
from .formula_core import (QBFormula, check_normal_form, classify, emit_dimacs,
                           free_vars, is_first_order, parse_cnf, parse_team_formula,
                           prenex_conjoin, to_dsl)
from .structures import Structure, Team, empty_team, full_team, parse_structure, parse_team
from .team_eval import DEFAULT_REGISTRY, eval_team


class Report:
    def __init__(self, argv):
        self.lines: list[tuple[str, str]] = []
        self.add("command", " ".join(argv))
        self._t0 = time.perf_counter()

    def add(self, key, value):
        self.lines.append((str(key), str(value)))

    def digest(self, name, data: str):
        self.add(f"input-digest-{name}", hashlib.sha256(data.encode()).hexdigest())

    def phase(self, name):
        self.add(f"time-{name}", f"{time.perf_counter() - self._t0:.3f}s")
        self._t0 = time.perf_counter()

    def emit(self):
        for k, v in self.lines:
            print(f"{k}: {v}")


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_structure(path: str, report: Report) -> Structure:
    text = _read(path)
    report.digest("structure", text)
    return parse_structure(text)


def _load_formula(spec: str, report: Report):
    """FILE | builtin:NAME | inline DSL.  Returns (formula-or-builtin, kind)."""
    if spec.startswith("builtin:"):
        b = reductions.builtin_formula(spec[len("builtin:"):])
        report.add("formula-builtin", b.name)
        return b, "builtin"
    if os.path.exists(spec):
        text = _read(spec)
        report.digest("formula", text)
        return parse_team_formula(text.strip(), atom_types=DEFAULT_REGISTRY.types() or None), "formula"
    report.digest("formula", spec)
    return parse_team_formula(spec, atom_types=DEFAULT_REGISTRY.types() or None), "formula"


def _load_team(spec: str, vars_: tuple[str, ...] | None, size: int, report: Report) -> Team:
    if spec == "empty":
        if not vars_:
            raise UsageError("--team empty requires --vars")
        return empty_team(vars_)
    if spec == "full":
        if not vars_:
            raise UsageError("--team full requires --vars")
        return full_team(size, vars_)
    text = _read(spec)
    report.digest("team", text)
    return parse_team(text)


def _vars_arg(value: str | None) -> tuple[str, ...] | None:
    if value is None:
        return None
    return tuple(v.strip() for v in value.replace(",", " ").split())


def _team_formula(args, report):
    loaded, kind = _load_formula(args.formula, report)
    if kind == "builtin":
        if loaded.kind != "team":
            raise TeamCountError(f"builtin {loaded.name} is not a team formula")
        return loaded.formula, _vars_arg(args.vars) or loaded.team_vars
    vars_ = _vars_arg(args.vars)
    if vars_ is None:
        vars_ = tuple(sorted(free_vars(loaded)))
    return loaded, vars_


def cmd_eval(args, report) -> int:
    a = _load_structure(args.structure, report)
    phi, vars_ = _team_formula(args, report)
    team = _load_team(args.team, vars_, a.size, report)
    report.phase("load")
    verdict = eval_team(a, team, phi)
    report.phase("eval")
    report.add("result", "true" if verdict else "false")
    return 0


def cmd_count_teams(args, report) -> int:
    a = _load_structure(args.structure, report)
    phi, vars_ = _team_formula(args, report)
    report.phase("load")
    res = counting.count_teams(a, phi, vars_, budget=args.budget, jobs=args.jobs)
    report.phase("count")
    report.add("result-count", res.count)
    report.add("candidates-visited", res.nodes_visited)
    if args.verify:
        try:
            other = counting.count_inclusion_teams(a, phi, vars_, budget=args.budget).count
            report.add("verify-oracle", "max-subteam-enumeration")
        except TeamCountError:
            if is_first_order(phi):
                sat = sum(1 for rows in counting._team_candidates(a.size, vars_)
                          if eval_team(a, Team(vars_, frozenset([rows])), phi))
                other = (1 << sat) - 1
                report.add("verify-oracle", "flat-closed-form")
            else:
                report.add("verify-oracle", "unavailable")
                return 2
        report.phase("verify")
        report.add("verify", "OK" if other == res.count else f"MISMATCH ({other})")
        if other != res.count:
            return 1
    return 0


def cmd_count_relations(args, report) -> int:
    a = _load_structure(args.structure, report)
    loaded, kind = _load_formula(args.formula, report)
    if kind == "builtin":
        if loaded.kind != "relation":
            raise TeamCountError(f"builtin {loaded.name} is not a relation-counting formula")
        phi, free_rels = loaded.formula, loaded.free_rels
    else:
        phi = loaded
        free_rels = tuple((spec.split("/")[0], int(spec.split("/")[1]))
                          for spec in (args.free_rel or []))
    report.phase("load")
    res = counting.count_relations(a, phi, free_rels,
                                   nonempty_only=args.nonempty_only, budget=args.budget)
    report.phase("count")
    report.add("result-count", res.count)
    return 0


def cmd_count_sat(args, report) -> int:
    text = _read(args.cnf)
    report.digest("cnf", text)
    f = parse_cnf(text)
    report.add("flags", " ".join(sorted(classify(f))))
    report.phase("load")
    res = counting.count_assignments(f, args.mode, budget=args.budget)
    report.phase("count")
    report.add("result-count", res.count)
    report.add("backend", kernels.BACKEND)
    if args.verify:
        other = _brute_count(f, args.mode)
        report.phase("verify")
        report.add("verify", "OK" if other == res.count else f"MISMATCH ({other})")
        if other != res.count:
            return 1
    return 0


def _brute_count(f: QBFormula, mode: str) -> int:
    """Direct enumeration oracle over the full assignment space."""
    import itertools
    n = f.num_vars
    if mode == "all":
        count = 0
        for bits in itertools.product((False, True), repeat=n):
            assignment = {i + 1: bits[i] for i in range(n)}
            if all(any((l > 0) == assignment[abs(l)] for l in cl) for cl in f.clauses):
                count += 1
        return count
    free = sorted(f.free)
    bound = sorted(f.bound)
    count = 0
    for fbits in itertools.product((False, True), repeat=len(free)):
        if mode == "star" and not any(fbits):
            continue
        assignment = dict(zip(free, fbits))
        ok = False
        for bbits in itertools.product((False, True), repeat=len(bound)):
            assignment.update(zip(bound, bbits))
            if all(any((l > 0) == assignment[abs(l)] for l in cl) for cl in f.clauses):
                ok = True
                break
        if ok:
            count += 1
    return count


def cmd_max_subteam(args, report) -> int:
    a = _load_structure(args.structure, report)
    phi, vars_ = _team_formula(args, report)
    team = _load_team(args.team, vars_, a.size, report)
    report.phase("load")
    res = counting.max_subteam(a, team, phi)
    report.phase("compute")
    report.add("result-size", len(res.rows))
    for row in sorted(res.rows):
        report.add("row", " ".join(str(x) for x in row))
    if args.verify:
        from .team_eval import max_subteam_fixpoint
        other = max_subteam_fixpoint(a, team, phi)
        report.add("verify", "OK" if other.rows == res.rows else "MISMATCH")
        if other.rows != res.rows:
            return 1
    return 0


def cmd_reduce(args, report) -> int:
    if args.what == "star":
        text = _read(args.cnf)
        report.digest("cnf", text)
        f = parse_cnf(text)
        report.phase("load")
        res = reductions.star_turing_reduction(f)
        report.add("result-count", res.count)
        report.add("oracle-calls", res.oracle_calls)
        if args.verify:
            other = counting.count_assignments(f, "projected").count
            report.add("verify", "OK" if other == res.count else f"MISMATCH ({other})")
            if other != res.count:
                return 1
        return 0

    a = _load_structure(args.structure, report)
    phi, vars_ = _team_formula(args, report)
    kind = "dependence" if args.what == "dep2cnf" else "inclusion"
    d = check_normal_form(phi, kind, vars_)
    report.phase("load")
    out = (reductions.dep_to_sigma1cnf_neg(a, d) if kind == "dependence"
           else reductions.incl_to_sigma1_dualhorn(a, d))
    report.phase("reduce")
    report.add("result-vars", out.num_vars)
    report.add("result-clauses", len(out.clauses))
    report.add("flags", " ".join(sorted(classify(out))))
    dimacs = reductions.emit_reduction_dimacs(out, d, a.size)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dimacs)
        report.add("wrote", args.out)
    else:
        sys.stdout.write(dimacs)
    if args.verify:
        star = counting.count_assignments(out, "star", budget=args.budget).count
        teams = counting.count_teams(a, phi, vars_, budget=args.budget).count
        report.phase("verify")
        report.add("verify", "OK" if star == teams else f"MISMATCH (star={star} teams={teams})")
        if star != teams:
            return 1
    return 0


def cmd_chain(args, report) -> int:
    status = 0
    if args.cnf:
        text = _read(args.cnf)
        report.digest("cnf", text)
        f = parse_cnf(text)
        report.phase("load")
        phi, psi, solution = valiant_chain.split_sigma1_3cnf(f)
        inst = valiant_chain.PairedInstance("cnf", psi, carrier_cnf=phi, solution_ids=solution)
        paired = valiant_chain.count_paired(inst, budget=args.budget).count
        direct = counting.count_assignments(f, "projected", budget=args.budget).count
        report.add("step-split-clauses", f"{len(phi.clauses)}+{len(psi.clauses)}")
        report.add("step-split-paired-count", paired)
        report.add("step-split-direct-count", direct)
        report.add("step-split-verdict", "OK" if paired == direct else "MISMATCH")
        if paired != direct:
            status = 1
        report.phase("split")
        return status

    gtext = _read(args.graph)
    report.digest("graph", gtext)
    g = valiant_chain.parse_graph(gtext)
    if args.psi:
        ptext = _read(args.psi)
        report.digest("psi", ptext)
        psi = parse_cnf(ptext)
    else:
        psi = QBFormula(max(len(g.edges), 1), ())
    report.phase("load")
    if not isinstance(g, valiant_chain.DirectedGraph):
        raise TeamCountError("chain expects a digraph input")

    cc = valiant_chain.PairedInstance("cycle-cover", valiant_chain._pad_psi(psi, len(g.edges)), graph=g)
    n_cc = valiant_chain.count_paired(cc, budget=args.budget).count
    report.add("step-cycle-cover-count", n_cc)

    pm = valiant_chain.cc_to_pm(g, cc.psi)
    n_pm = valiant_chain.count_paired(pm, budget=args.budget).count
    report.add("step-perfect-matching-count", n_pm)
    report.add("step-cc-to-pm-verdict", "OK" if n_pm == n_cc else "MISMATCH")
    status |= 0 if n_pm == n_cc else 1

    interp = valiant_chain.pm_to_im_interpolate(pm.graph, pm.psi, budget=args.budget)
    report.add("step-interpolation-count", interp.count)
    report.add("step-interpolation-oracle-calls", interp.oracle_calls)
    report.add("step-interpolation-verdict", "OK" if interp.count == n_pm else "MISMATCH")
    status |= 0 if interp.count == n_pm else 1

    im = valiant_chain.PairedInstance("matching", pm.psi, graph=pm.graph)
    n_im = valiant_chain.count_paired(im, budget=args.budget).count
    phi2, psi2 = valiant_chain.im_to_2cnf_neg(pm.graph, pm.psi)
    inst2 = valiant_chain.PairedInstance("cnf", psi2, carrier_cnf=phi2,
                                         solution_ids=tuple(range(1, len(pm.graph.edges) + 1)))
    n_cnf = valiant_chain.count_paired(inst2, budget=args.budget).count
    report.add("step-matching-count", n_im)
    report.add("step-2cnfneg-count", n_cnf)
    report.add("step-im-to-2cnf-verdict", "OK" if n_cnf == n_im else "MISMATCH")
    status |= 0 if n_cnf == n_im else 1

    combined = prenex_conjoin(phi2, psi2)
    n_comb = counting.count_assignments(combined, "projected", budget=args.budget).count
    report.add("step-prenex-count", n_comb)
    report.add("step-prenex-flags", " ".join(sorted(classify(combined))))
    report.add("step-prenex-verdict", "OK" if n_comb == n_im else "MISMATCH")
    status |= 0 if n_comb == n_im else 1
    report.phase("chain")
    return status


def cmd_builtin(args, report) -> int:
    if args.list:
        for name in reductions.builtin_names():
            report.add("builtin", name)
        return 0
    b = reductions.builtin_formula(args.name)
    report.add("name", b.name)
    report.add("kind", b.kind)
    if b.kind == "team":
        report.add("team-vars", " ".join(b.team_vars))
        report.add("formula", to_dsl(b.formula))
    else:
        report.add("free-relations", " ".join(f"{n}/{a}" for n, a in b.free_rels))
    report.add("note", b.note)
    return 0


def cmd_verify(args, report) -> int:
    """Small self-check suite over built-in instances."""
    from .structures import encode_2cnf_plus
    failures = 0

    # Example 10, inclusion route, on x1 ∨ x2.
    f = QBFormula(2, (frozenset({1, 2}),))
    a, _ = encode_2cnf_plus(f)
    b = reductions.builtin_formula("incl-2cnf+")
    got = counting.count_teams(a, b.formula, b.team_vars).count
    report.add("check-example10-incl", "OK" if got == 3 else f"FAIL ({got})")
    failures += got != 3

    # Dependence route computes one less (all-ones assignment <-> empty team).
    b2 = reductions.builtin_formula("dep-2cnf+")
    got2 = counting.count_teams(a, b2.formula, b2.team_vars).count
    report.add("check-example10-dep-offset", "OK" if got2 == 2 else f"FAIL ({got2})")
    failures += got2 != 2

    # Reduction round trip on a tiny dependence normal form.
    phi = parse_team_formula("A y1. E y2. (dep(y1;y2) & y2<=x)")
    d = check_normal_form(phi, "dependence", ("x",))
    out = reductions.dep_to_sigma1cnf_neg(a, d)
    star = counting.count_assignments(out, "star").count
    teams = counting.count_teams(a, phi, ("x",)).count
    report.add("check-thm16-small", "OK" if star == teams else f"FAIL ({star}!={teams})")
    failures += star != teams

    # Star Turing reduction against direct projected counting.
    g = QBFormula(3, (frozenset({-1, 3}), frozenset({-2, -3})), frozenset({3}))
    res = reductions.star_turing_reduction(g)
    direct = counting.count_assignments(g, "projected").count
    report.add("check-thm26-small", "OK" if res.count == direct else f"FAIL ({res.count}!={direct})")
    failures += res.count != direct

    report.add("verify", "OK" if failures == 0 else f"{failures} FAILED")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teamcount",
                                description="Exact team-logic evaluation, counting, and reductions")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, structure=True, formula=True, team=False, vars_=True):
        if structure:
            sp.add_argument("--structure", required=True, help="structure file")
        if formula:
            sp.add_argument("--formula", required=True, help="FILE | builtin:NAME | inline DSL")
        if team:
            sp.add_argument("--team", required=True, help="FILE | empty | full")
        if vars_:
            sp.add_argument("--vars", help="team variable tuple, comma or space separated")
        sp.add_argument("--budget", type=int, default=None, help="enumeration budget")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--verify", action="store_true", help="cross-check with the brute-force oracle")

    sp = sub.add_parser("eval", help="evaluate A |=_X phi")
    common(sp, team=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("count-teams", help="count nonempty satisfying teams")
    common(sp)
    sp.set_defaults(func=cmd_count_teams)

    sp = sub.add_parser("count-relations", help="count satisfying relation tuples")
    common(sp, vars_=False)
    sp.add_argument("--free-rel", action="append", help="NAME/ARITY of a free relation variable")
    sp.add_argument("--nonempty-only", action="store_true")
    sp.set_defaults(func=cmd_count_relations)

    sp = sub.add_parser("count-sat", help="count CNF assignments (all|star|projected)")
    sp.add_argument("--cnf", required=True)
    sp.add_argument("--mode", choices=("all", "star", "projected"), default="all")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--verify", action="store_true")
    sp.set_defaults(func=cmd_count_sat)

    sp = sub.add_parser("max-subteam", help="maximal satisfying subteam (inclusion logic)")
    common(sp, team=True)
    sp.set_defaults(func=cmd_max_subteam)

    sp = sub.add_parser("reduce", help="run a counting reduction")
    sp.add_argument("what", choices=("dep2cnf", "incl2dualhorn", "star"))
    sp.add_argument("--structure")
    sp.add_argument("--formula")
    sp.add_argument("--vars")
    sp.add_argument("--cnf", help="input CNF for the star reduction")
    sp.add_argument("--out", help="write DIMACS here instead of stdout")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--verify", action="store_true")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("chain", help="run the paired reduction chain")
    sp.add_argument("--cnf", help="Sigma_1 3CNF input (split step)")
    sp.add_argument("--graph", help="digraph input (graph chain)")
    sp.add_argument("--psi", help="companion Sigma_1 3CNF- DIMACS")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_chain)

    sp = sub.add_parser("builtin", help="show a built-in formula")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--list", action="store_true")
    sp.set_defaults(func=cmd_builtin)

    sp = sub.add_parser("verify", help="run the built-in smoke checks")
    sp.set_defaults(func=cmd_verify)

    return p


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    report = Report(argv)
    try:
        if args.cmd == "reduce" and args.what != "star" and (not args.structure or not args.formula):
            raise UsageError("reduce dep2cnf/incl2dualhorn needs --structure and --formula")
        if args.cmd == "reduce" and args.what == "star" and not args.cnf:
            raise UsageError("reduce star needs --cnf")
        if args.cmd == "chain" and not (args.cnf or args.graph):
            raise UsageError("chain needs --cnf or --graph")
        if args.cmd == "builtin" and not (args.name or args.list):
            raise UsageError("builtin needs a name or --list")
        status = args.func(args, report)
    except UsageError as exc:
        report.add("error", str(exc))
        report.emit()
        return 2
    except TeamCountError as exc:
        report.add("error", str(exc))
        report.emit()
        return 1
    except OSError as exc:
        report.add("error", str(exc))
        report.emit()
        return 2
    report.emit()
    return status


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
