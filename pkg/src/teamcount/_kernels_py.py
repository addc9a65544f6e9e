"""Pure-Python Boolean counting kernels.

Same interface as the compiled extension `_kernels`; selected as a fallback
when the extension is unavailable (see `kernels`).  Clauses are iterables of
nonzero signed ints with no duplicate literals inside a clause.

A "budget exceeded" condition raises ValueError; callers translate it.
"""

BACKEND = "python"


class _State:
    """Counter-based clause state with an undo trail and a unit worklist.

    Stale worklist entries are tolerated (revalidated on pop), so the
    worklist never needs rewinding.
    """

    def __init__(self, num_vars, clauses):
        self.num_vars = num_vars
        self.lits = [tuple(c) for c in clauses]
        self.val = [-1] * (num_vars + 1)        # -1 unassigned, 0 false, 1 true
        self.n_unassigned = [len(c) for c in self.lits]
        self.sat_by = [0] * len(self.lits)
        self.occ_pos = [[] for _ in range(num_vars + 1)]
        self.occ_neg = [[] for _ in range(num_vars + 1)]
        for ci, c in enumerate(self.lits):
            for lit in c:
                if lit > 0:
                    self.occ_pos[lit].append(ci)
                else:
                    self.occ_neg[-lit].append(ci)
        self.trail = []
        self.pending = [ci for ci, n in enumerate(self.n_unassigned) if n == 1]
        self.has_empty = any(n == 0 for n in self.n_unassigned)

    def assign(self, var, value):
        """Set var and update counters; returns False on an emptied clause."""
        self.val[var] = value
        self.trail.append(var)
        sat_occ = self.occ_pos[var] if value else self.occ_neg[var]
        unsat_occ = self.occ_neg[var] if value else self.occ_pos[var]
        for ci in sat_occ:
            self.sat_by[ci] += 1
        ok = True
        for ci in unsat_occ:
            self.n_unassigned[ci] -= 1
            if self.sat_by[ci] == 0:
                if self.n_unassigned[ci] == 0:
                    ok = False
                elif self.n_unassigned[ci] == 1:
                    self.pending.append(ci)
        return ok

    def unwind(self, mark):
        while len(self.trail) > mark:
            var = self.trail.pop()
            value = self.val[var]
            sat_occ = self.occ_pos[var] if value else self.occ_neg[var]
            unsat_occ = self.occ_neg[var] if value else self.occ_pos[var]
            for ci in sat_occ:
                self.sat_by[ci] -= 1
            for ci in unsat_occ:
                self.n_unassigned[ci] += 1
            self.val[var] = -1

    def propagate(self):
        """Unit propagation to fixpoint; returns False on conflict."""
        while self.pending:
            ci = self.pending.pop()
            if self.sat_by[ci] or self.n_unassigned[ci] != 1:
                continue
            unit = 0
            for lit in self.lits[ci]:
                if self.val[abs(lit)] == -1:
                    unit = lit
                    break
            if unit == 0:
                continue
            if not self.assign(abs(unit), 1 if unit > 0 else 0):
                return False
        return True

    def pick_unassigned(self, restrict=None):
        """Lowest unassigned variable in an active clause (optionally within a set)."""
        best = 0
        for ci, c in enumerate(self.lits):
            if self.sat_by[ci]:
                continue
            for lit in c:
                v = abs(lit)
                if self.val[v] == -1 and (restrict is None or v in restrict):
                    if best == 0 or v < best:
                        best = v
        return best


def _exists_sat(st, counter, budget):
    counter[0] += 1
    if budget is not None and counter[0] > budget:
        raise ValueError("budget exceeded")
    mark = len(st.trail)
    if not st.propagate():
        st.unwind(mark)
        return False
    v = st.pick_unassigned()
    if v == 0:
        st.unwind(mark)
        return True
    for value in (0, 1):
        m2 = len(st.trail)
        if st.assign(v, value) and _exists_sat(st, counter, budget):
            st.unwind(mark)
            return True
        st.unwind(m2)
    st.unwind(mark)
    return False


def sat(num_vars, clauses, budget=None):
    """Satisfiability over all variables by DPLL with unit propagation."""
    st = _State(num_vars, clauses)
    if st.has_empty:
        return False
    return _exists_sat(st, [0], budget)


def _count_rec(st, free, n_free_unassigned, counter, budget):
    counter[0] += 1
    if budget is not None and counter[0] > budget:
        raise ValueError("budget exceeded")
    mark = len(st.trail)
    if not st.propagate():
        st.unwind(mark)
        return 0
    # Propagation may have fixed free variables; those values are forced
    # (the flipped value satisfies no completion), so no factor is lost.
    fixed_free = sum(1 for i in range(mark, len(st.trail)) if st.trail[i] in free)
    remaining = n_free_unassigned - fixed_free
    v = st.pick_unassigned(restrict=free)
    if v == 0:
        # Active clauses touch only bound variables; unconstrained free
        # variables contribute a factor of 2 each.
        ok = _exists_sat(st, counter, budget)
        st.unwind(mark)
        return (1 << remaining) if ok else 0
    total = 0
    for value in (0, 1):
        m2 = len(st.trail)
        if st.assign(v, value):
            total += _count_rec(st, free, remaining - 1, counter, budget)
        st.unwind(m2)
    st.unwind(mark)
    return total


def count_projected(num_vars, clauses, free_vars, budget=None):
    """Number of free-variable assignments with a satisfying bound extension.

    Returns (count, nodes).  With free_vars = all variables this is plain
    model counting.
    """
    st = _State(num_vars, clauses)
    counter = [0]
    if st.has_empty:
        return 0, 0
    free = frozenset(free_vars)
    count = _count_rec(st, free, len(free), counter, budget)
    return count, counter[0]


def dualhorn_sat(num_vars, clauses):
    """Greatest-model propagation for clauses with at most one negative literal."""
    clause_list = [tuple(c) for c in clauses]
    val = [1] * (num_vars + 1)
    neg_of = []
    pos_avail = []
    satisfied = [False] * len(clause_list)
    occ_pos = [[] for _ in range(num_vars + 1)]
    occ_neg = [[] for _ in range(num_vars + 1)]
    for ci, c in enumerate(clause_list):
        neg = 0
        npos = 0
        for lit in c:
            if lit < 0:
                if neg:
                    raise ValueError("clause has two negative literals")
                neg = -lit
                occ_neg[-lit].append(ci)
            else:
                npos += 1
                occ_pos[lit].append(ci)
        neg_of.append(neg)
        pos_avail.append(npos)
    queue = [ci for ci in range(len(clause_list)) if pos_avail[ci] == 0]
    while queue:
        ci = queue.pop()
        if satisfied[ci] or pos_avail[ci] > 0:
            continue
        v = neg_of[ci]
        if v == 0:
            return False
        if val[v] == 0:
            continue
        val[v] = 0
        for cj in occ_neg[v]:
            satisfied[cj] = True
        for cj in occ_pos[v]:
            pos_avail[cj] -= 1
            if pos_avail[cj] == 0 and not satisfied[cj]:
                queue.append(cj)
    return True
