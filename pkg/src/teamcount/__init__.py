"""Exact evaluation and counting for first-order team logics over finite
structures, together with executable counting reductions between team
counting, relation counting, and Boolean (projected) model counting."""

from .errors import (BudgetExceededError, EncodingError, EvaluationError,
                     NormalFormError, OracleFaultError, ParseError,
                     RegistryError, TeamCountError, VocabularyError)
from .formula_core import (And, DepAtom, EqAtom, Exists, ExistsRel, Forall,
                           Formula, GenAtom, InclAtom, IndepAtom,
                           NormalFormDescriptor, Or, QBFormula, RelAtom,
                           check_normal_form, classify, emit_dimacs, free_vars,
                           make_normal_form, parse_cnf, parse_team_formula,
                           prenex_conjoin, to_dsl)
from .structures import (Structure, Team, builtin_holds, empty_team,
                         encode_2cnf_plus, encode_dualhorn,
                         encode_sigma1cnf_neg, encode_structure, format_structure,
                         format_team, full_team, parse_structure, parse_team,
                         validate_sigma1cnf_neg_structure)
from .team_eval import (AtomRegistry, DEFAULT_REGISTRY, GeneralizedAtomDef,
                        eval_tarski, eval_team, register_atom)
from .counting import (CountResult, count_assignments, count_inclusion_teams,
                       count_relations, count_sigma1_dualhorn, count_teams,
                       dualhorn_sat, max_subteam)
from .reductions import (Builtin, FOInterpretation, Layering, RelDef,
                         apply_interpretation, builtin_formula, builtin_names,
                         dep_to_sigma1cnf_neg, incl_to_sigma1_dualhorn,
                         map_team, star_turing_reduction, translate_formula)
from .valiant_chain import (BipartiteGraph, DirectedGraph, PairedInstance,
                            build_Gk, cc_to_pm, clause_restrict, count_paired,
                            im_to_2cnf_neg, junction_conjoin, parse_graph,
                            pm_to_im_interpolate, split_sigma1_3cnf)
from .kernels import BACKEND as KERNEL_BACKEND

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
