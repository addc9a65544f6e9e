# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Boolean counting kernels; mirrors `_kernels_py` exactly.

Clause state is flattened into C arrays (CSR layout for literals and
occurrence lists).  Counts are Python ints so shifts like 2**k never
overflow.
"""

from libc.stdlib cimport malloc, free

BACKEND = "cython"


cdef struct CState:
    int num_vars
    int num_clauses
    int *cl_off        # clause -> offset into lits
    int *lits          # flattened literals
    int *n_unassigned
    int *sat_by
    signed char *val   # -1 unassigned, 0, 1
    int *occ_pos_off
    int *occ_pos
    int *occ_neg_off
    int *occ_neg
    int *trail
    int trail_len
    int *pending
    int pending_len
    int pending_cap


cdef void _free_state(CState *st):
    if st.cl_off != NULL: free(st.cl_off)
    if st.lits != NULL: free(st.lits)
    if st.n_unassigned != NULL: free(st.n_unassigned)
    if st.sat_by != NULL: free(st.sat_by)
    if st.val != NULL: free(<void *> st.val)
    if st.occ_pos_off != NULL: free(st.occ_pos_off)
    if st.occ_pos != NULL: free(st.occ_pos)
    if st.occ_neg_off != NULL: free(st.occ_neg_off)
    if st.occ_neg != NULL: free(st.occ_neg)
    if st.trail != NULL: free(st.trail)
    if st.pending != NULL: free(st.pending)


cdef int _init_state(CState *st, int num_vars, object clauses) except -1:
    cdef int total = 0
    cdef int ci, i, lit, v
    cl_list = [tuple(c) for c in clauses]
    st.num_vars = num_vars
    st.num_clauses = len(cl_list)
    for c in cl_list:
        total += len(c)
    st.cl_off = <int *> malloc((st.num_clauses + 1) * sizeof(int))
    st.lits = <int *> malloc(max(total, 1) * sizeof(int))
    st.n_unassigned = <int *> malloc(max(st.num_clauses, 1) * sizeof(int))
    st.sat_by = <int *> malloc(max(st.num_clauses, 1) * sizeof(int))
    st.val = <signed char *> malloc(num_vars + 1)
    st.occ_pos_off = <int *> malloc((num_vars + 2) * sizeof(int))
    st.occ_neg_off = <int *> malloc((num_vars + 2) * sizeof(int))
    st.occ_pos = <int *> malloc(max(total, 1) * sizeof(int))
    st.occ_neg = <int *> malloc(max(total, 1) * sizeof(int))
    st.trail = <int *> malloc(max(num_vars, 1) * sizeof(int))
    st.pending_cap = max(st.num_clauses * 2 + num_vars * 2 + 16, 64)
    st.pending = <int *> malloc(st.pending_cap * sizeof(int))
    st.trail_len = 0
    st.pending_len = 0
    if (st.cl_off == NULL or st.lits == NULL or st.n_unassigned == NULL or
            st.sat_by == NULL or st.val == NULL or st.occ_pos_off == NULL or
            st.occ_neg_off == NULL or st.occ_pos == NULL or st.occ_neg == NULL or
            st.trail == NULL or st.pending == NULL):
        raise MemoryError()
    for v in range(num_vars + 1):
        st.val[v] = -1
    # CSR literals and per-variable occurrence counts
    cdef int pos_count_base = 0
    pos_counts = [0] * (num_vars + 1)
    neg_counts = [0] * (num_vars + 1)
    i = 0
    for ci in range(st.num_clauses):
        st.cl_off[ci] = i
        st.n_unassigned[ci] = len(cl_list[ci])
        st.sat_by[ci] = 0
        for lit in cl_list[ci]:
            st.lits[i] = lit
            if lit > 0:
                pos_counts[lit] += 1
            else:
                neg_counts[-lit] += 1
            i += 1
    st.cl_off[st.num_clauses] = i
    st.occ_pos_off[0] = 0
    st.occ_neg_off[0] = 0
    for v in range(num_vars + 1):
        st.occ_pos_off[v + 1] = st.occ_pos_off[v] + pos_counts[v]
        st.occ_neg_off[v + 1] = st.occ_neg_off[v] + neg_counts[v]
    fill_pos = [st.occ_pos_off[v] for v in range(num_vars + 1)]
    fill_neg = [st.occ_neg_off[v] for v in range(num_vars + 1)]
    for ci in range(st.num_clauses):
        for i in range(st.cl_off[ci], st.cl_off[ci + 1]):
            lit = st.lits[i]
            if lit > 0:
                st.occ_pos[fill_pos[lit]] = ci
                fill_pos[lit] += 1
            else:
                st.occ_neg[fill_neg[-lit]] = ci
                fill_neg[-lit] += 1
    for ci in range(st.num_clauses):
        if st.n_unassigned[ci] == 1:
            st.pending[st.pending_len] = ci
            st.pending_len += 1
    return 0


cdef inline void _push_pending(CState *st, int ci):
    # capacity is generous; worst case a clause enters once per assignment level
    if st.pending_len >= st.pending_cap:
        st.pending_cap *= 2
        new = <int *> malloc(st.pending_cap * sizeof(int))
        for i in range(st.pending_len):
            new[i] = st.pending[i]
        free(st.pending)
        st.pending = new
    st.pending[st.pending_len] = ci
    st.pending_len += 1


cdef bint _assign(CState *st, int var, int value):
    cdef int j, ci
    cdef bint ok = True
    st.val[var] = <signed char> value
    st.trail[st.trail_len] = var
    st.trail_len += 1
    if value:
        for j in range(st.occ_pos_off[var], st.occ_pos_off[var + 1]):
            st.sat_by[st.occ_pos[j]] += 1
        for j in range(st.occ_neg_off[var], st.occ_neg_off[var + 1]):
            ci = st.occ_neg[j]
            st.n_unassigned[ci] -= 1
            if st.sat_by[ci] == 0:
                if st.n_unassigned[ci] == 0:
                    ok = False
                elif st.n_unassigned[ci] == 1:
                    _push_pending(st, ci)
    else:
        for j in range(st.occ_neg_off[var], st.occ_neg_off[var + 1]):
            st.sat_by[st.occ_neg[j]] += 1
        for j in range(st.occ_pos_off[var], st.occ_pos_off[var + 1]):
            ci = st.occ_pos[j]
            st.n_unassigned[ci] -= 1
            if st.sat_by[ci] == 0:
                if st.n_unassigned[ci] == 0:
                    ok = False
                elif st.n_unassigned[ci] == 1:
                    _push_pending(st, ci)
    return ok


cdef void _unwind(CState *st, int mark):
    cdef int var, j, value
    while st.trail_len > mark:
        st.trail_len -= 1
        var = st.trail[st.trail_len]
        value = st.val[var]
        if value:
            for j in range(st.occ_pos_off[var], st.occ_pos_off[var + 1]):
                st.sat_by[st.occ_pos[j]] -= 1
            for j in range(st.occ_neg_off[var], st.occ_neg_off[var + 1]):
                st.n_unassigned[st.occ_neg[j]] += 1
        else:
            for j in range(st.occ_neg_off[var], st.occ_neg_off[var + 1]):
                st.sat_by[st.occ_neg[j]] -= 1
            for j in range(st.occ_pos_off[var], st.occ_pos_off[var + 1]):
                st.n_unassigned[st.occ_pos[j]] += 1
        st.val[var] = -1


cdef bint _propagate(CState *st):
    cdef int ci, i, lit, unit
    while st.pending_len > 0:
        st.pending_len -= 1
        ci = st.pending[st.pending_len]
        if st.sat_by[ci] or st.n_unassigned[ci] != 1:
            continue
        unit = 0
        for i in range(st.cl_off[ci], st.cl_off[ci + 1]):
            lit = st.lits[i]
            if st.val[lit if lit > 0 else -lit] == -1:
                unit = lit
                break
        if unit == 0:
            continue
        if not _assign(st, unit if unit > 0 else -unit, 1 if unit > 0 else 0):
            return False
    return True


cdef int _pick(CState *st, signed char *is_free):
    cdef int best = 0
    cdef int ci, i, lit, v
    for ci in range(st.num_clauses):
        if st.sat_by[ci]:
            continue
        for i in range(st.cl_off[ci], st.cl_off[ci + 1]):
            lit = st.lits[i]
            v = lit if lit > 0 else -lit
            if st.val[v] == -1 and (is_free == NULL or is_free[v]):
                if best == 0 or v < best:
                    best = v
    return best


cdef bint _exists_sat(CState *st, long long *nodes, long long budget) except? 0:
    nodes[0] += 1
    if budget >= 0 and nodes[0] > budget:
        raise ValueError("budget exceeded")
    cdef int mark = st.trail_len
    cdef int v, m2, value
    if not _propagate(st):
        _unwind(st, mark)
        return False
    v = _pick(st, NULL)
    if v == 0:
        _unwind(st, mark)
        return True
    for value in range(2):
        m2 = st.trail_len
        if _assign(st, v, value):
            if _exists_sat(st, nodes, budget):
                _unwind(st, mark)
                return True
        _unwind(st, m2)
    _unwind(st, mark)
    return False


def sat(num_vars, clauses, budget=None):
    """Satisfiability over all variables by DPLL with unit propagation."""
    cdef CState st
    st.cl_off = NULL; st.lits = NULL; st.n_unassigned = NULL; st.sat_by = NULL
    st.val = NULL; st.occ_pos_off = NULL; st.occ_pos = NULL
    st.occ_neg_off = NULL; st.occ_neg = NULL; st.trail = NULL; st.pending = NULL
    cdef long long nodes = 0
    cdef long long limit = -1 if budget is None else <long long> budget
    cdef bint res
    cdef int ci
    try:
        _init_state(&st, num_vars, clauses)
        for ci in range(st.num_clauses):
            if st.n_unassigned[ci] == 0:
                return False
        res = _exists_sat(&st, &nodes, limit)
        return bool(res)
    finally:
        _free_state(&st)


cdef object _count_rec(CState *st, signed char *is_free, int n_free_unassigned,
                       long long *nodes, long long budget):
    nodes[0] += 1
    if budget >= 0 and nodes[0] > budget:
        raise ValueError("budget exceeded")
    cdef int mark = st.trail_len
    cdef int i, v, m2, value, fixed_free, remaining
    if not _propagate(st):
        _unwind(st, mark)
        return 0
    fixed_free = 0
    for i in range(mark, st.trail_len):
        if is_free[st.trail[i]]:
            fixed_free += 1
    remaining = n_free_unassigned - fixed_free
    v = _pick(st, is_free)
    cdef object total
    cdef bint ok
    if v == 0:
        ok = _exists_sat(st, nodes, budget)
        _unwind(st, mark)
        if ok:
            return (<object> 1) << remaining   # Python-int shift: counts exceed 64 bits
        return 0
    total = 0
    for value in range(2):
        m2 = st.trail_len
        if _assign(st, v, value):
            total = total + _count_rec(st, is_free, remaining - 1, nodes, budget)
        _unwind(st, m2)
    _unwind(st, mark)
    return total


def count_projected(num_vars, clauses, free_vars, budget=None):
    """Number of free-variable assignments with a satisfying bound extension.

    Returns (count, nodes).  With free_vars = all variables this is plain
    model counting.
    """
    cdef CState st
    st.cl_off = NULL; st.lits = NULL; st.n_unassigned = NULL; st.sat_by = NULL
    st.val = NULL; st.occ_pos_off = NULL; st.occ_pos = NULL
    st.occ_neg_off = NULL; st.occ_neg = NULL; st.trail = NULL; st.pending = NULL
    cdef long long nodes = 0
    cdef long long limit = -1 if budget is None else <long long> budget
    cdef signed char *is_free = NULL
    cdef int ci, v, nf
    try:
        _init_state(&st, num_vars, clauses)
        is_free = <signed char *> malloc(num_vars + 1)
        if is_free == NULL:
            raise MemoryError()
        for v in range(num_vars + 1):
            is_free[v] = 0
        nf = 0
        for x in free_vars:
            v = <int> x
            if not is_free[v]:
                is_free[v] = 1
                nf += 1
        for ci in range(st.num_clauses):
            if st.n_unassigned[ci] == 0:
                return 0, 0
        count = _count_rec(&st, is_free, nf, &nodes, limit)
        return count, int(nodes)
    finally:
        if is_free != NULL:
            free(<void *> is_free)
        _free_state(&st)


def dualhorn_sat(num_vars, clauses):
    """Greatest-model propagation for clauses with at most one negative literal."""
    clause_list = [tuple(c) for c in clauses]
    cdef int n_clauses = len(clause_list)
    cdef list val = [1] * (num_vars + 1)
    cdef list neg_of = [0] * n_clauses
    cdef list pos_avail = [0] * n_clauses
    cdef list satisfied = [False] * n_clauses
    occ_pos = [[] for _ in range(num_vars + 1)]
    occ_neg = [[] for _ in range(num_vars + 1)]
    cdef int ci, lit, v, npos, neg
    for ci in range(n_clauses):
        neg = 0
        npos = 0
        for lit in clause_list[ci]:
            if lit < 0:
                if neg:
                    raise ValueError("clause has two negative literals")
                neg = -lit
                occ_neg[-lit].append(ci)
            else:
                npos += 1
                occ_pos[lit].append(ci)
        neg_of[ci] = neg
        pos_avail[ci] = npos
    queue = [ci for ci in range(n_clauses) if pos_avail[ci] == 0]
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
