"""Binary decision trees split by information gain ratio, and a bagged forest of them.

For each candidate attribute the cut point maximising information gain is found
first; attributes are then compared by gain ratio among those whose gain is at
least the average positive gain (the usual C4.5 guard against tiny splits).
Ties go to the lowest column index. Cut points are the largest training value
sent left, so a split depends only on the ordering of values and is unchanged
by increasing transforms.

Training works on slots, one per training instance (bootstrap duplicates
included). A node owns a contiguous range of slots in every presorted
per-attribute list and splitting partitions those ranges stably, so nodes
never sort. Attributes whose training values are all 0/1 are scored by
counting and keep no sorted list.
"""

from __future__ import annotations

import numpy as np
from numba import njit

UNLIMITED_DEPTH = 1 << 30
# below this node size, candidate attributes are insertion-sorted locally and
# the presorted lists are no longer partitioned
SMALL_NODE = 64


@njit(cache=True)
def _xlogx_table(n):
    t = np.zeros(n + 1)
    for i in range(2, n + 1):
        t[i] = i * np.log2(i)
    return t


@njit(cache=True)
def _n_entropy(t, pos, n):
    """n * H(pos / n) for integer counts, via the x log x table."""
    return t[n] - t[pos] - t[n - pos]


@njit(cache=True)
def _slot_lists(row_order, counts):
    # slots are numbered row by row; each numeric attribute's row order is
    # expanded into a slot order
    n_rows = counts.size
    start = np.zeros(n_rows + 1, dtype=np.int64)
    for r in range(n_rows):
        start[r + 1] = start[r] + counts[r]
    n = start[n_rows]
    slot_row = np.empty(n, dtype=np.int64)
    for r in range(n_rows):
        for j in range(start[r], start[r + 1]):
            slot_row[j] = r
    S = np.empty((row_order.shape[0], n), dtype=np.int64)
    for k in range(row_order.shape[0]):
        pos = 0
        for i in range(n_rows):
            r = row_order[k, i]
            for j in range(start[r], start[r + 1]):
                S[k, pos] = j
                pos += 1
    return slot_row, S


@njit(cache=True)
def _partition(arr, lo, hi, go_left, buf):
    # left entries are compacted in place, right entries staged in buf
    k = lo
    r = 0
    for i in range(lo, hi):
        s = arr[i]
        if go_left[s]:
            arr[k] = s
            k += 1
        else:
            buf[r] = s
            r += 1
    for i in range(r):
        arr[k + i] = buf[i]
    return k - lo


@njit(cache=True)
def _grow(XT, y, slot_row, S, sorted_pos, max_depth, min_leaf, n_try, seed):
    # XT: attribute-major data; sorted_pos[f] is f's row in S, or -1 for 0/1 attributes
    np.random.seed(seed)
    n = slot_row.size
    p = XT.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    pos_count = np.zeros(cap, dtype=np.int64)
    count = np.zeros(cap, dtype=np.int64)

    members = np.arange(n)
    go_left = np.zeros(n, dtype=np.bool_)
    buf = np.empty(n, dtype=np.int64)
    sv = np.empty(n)
    sl = np.empty(n, dtype=np.int64)
    xlx = _xlogx_table(n)

    st_node = np.zeros(cap, dtype=np.int64)
    st_lo = np.zeros(cap, dtype=np.int64)
    st_hi = np.zeros(cap, dtype=np.int64)
    st_depth = np.zeros(cap, dtype=np.int64)
    top = 1
    st_node[0], st_lo[0], st_hi[0], st_depth[0] = 0, 0, n, 0
    n_nodes = 1

    gains = np.zeros(p)
    ratios = np.zeros(p)
    cuts = np.zeros(p)
    all_features = np.arange(p)

    while top > 0:
        top -= 1
        node, lo, hi, depth = st_node[top], st_lo[top], st_hi[top], st_depth[top]
        m = hi - lo
        npos = 0
        for i in range(lo, hi):
            npos += y[slot_row[members[i]]]
        count[node] = m
        pos_count[node] = npos
        if npos == 0 or npos == m or depth >= max_depth or m < 2 * min_leaf:
            continue

        if n_try < p:
            cand = np.sort(np.random.permutation(p)[:n_try])
        else:
            cand = all_features
        parent_cost = _n_entropy(xlx, npos, m)
        n_ok = 0
        gain_sum = 0.0
        for ci in range(cand.size):
            f = cand[ci]
            col = XT[f]
            best_cost = np.inf
            best_cut = 0.0
            best_nl = 0
            k = sorted_pos[f]
            if k < 0:
                nl = 0
                cum = 0
                for i in range(lo, hi):
                    r = slot_row[members[i]]
                    if col[r] == 0.0:
                        nl += 1
                        cum += y[r]
                if nl >= min_leaf and m - nl >= min_leaf:
                    best_cost = _n_entropy(xlx, cum, nl) + _n_entropy(xlx, npos - cum, m - nl)
                    best_nl = nl
            else:
                if m <= SMALL_NODE:
                    for i in range(m):
                        r = slot_row[members[lo + i]]
                        v, lab = col[r], y[r]
                        j = i
                        while j > 0 and sv[j - 1] > v:
                            sv[j] = sv[j - 1]
                            sl[j] = sl[j - 1]
                            j -= 1
                        sv[j] = v
                        sl[j] = lab
                else:
                    order = S[k]
                    for i in range(m):
                        r = slot_row[order[lo + i]]
                        sv[i] = col[r]
                        sl[i] = y[r]
                cum = 0
                for i in range(m - 1):
                    cum += sl[i]
                    nl = i + 1
                    if sv[i] < sv[i + 1] and nl >= min_leaf and m - nl >= min_leaf:
                        cost = _n_entropy(xlx, cum, nl) + _n_entropy(xlx, npos - cum, m - nl)
                        if cost < best_cost:
                            best_cost, best_cut, best_nl = cost, sv[i], nl
            gain = (parent_cost - best_cost) / m if best_nl > 0 else -1.0
            gains[ci] = gain
            cuts[ci] = best_cut
            if gain > 1e-12:
                fl = best_nl / m
                split_info = -(fl * np.log2(fl) + (1 - fl) * np.log2(1 - fl))
                ratios[ci] = gain / split_info
                n_ok += 1
                gain_sum += gain
            else:
                ratios[ci] = -1.0
        if n_ok == 0:
            continue
        avg_gain = gain_sum / n_ok
        best_ci = -1
        best_ratio = -1.0
        for ci in range(cand.size):
            if gains[ci] > 1e-12 and gains[ci] >= avg_gain - 1e-12 and ratios[ci] > best_ratio:
                best_ratio, best_ci = ratios[ci], ci
        f = cand[best_ci]
        cut = cuts[best_ci]
        col = XT[f]
        for i in range(lo, hi):
            s = members[i]
            go_left[s] = col[slot_row[s]] <= cut
        mid = _partition(members, lo, hi, go_left, buf)
        if m > SMALL_NODE:
            for k in range(S.shape[0]):
                _partition(S[k], lo, hi, go_left, buf)

        feature[node], threshold[node] = f, cut
        left[node], right[node] = n_nodes, n_nodes + 1
        # right pushed first so the left subtree is expanded first
        st_node[top], st_lo[top], st_hi[top], st_depth[top] = n_nodes + 1, lo + mid, hi, depth + 1
        top += 1
        st_node[top], st_lo[top], st_hi[top], st_depth[top] = n_nodes, lo, lo + mid, depth + 1
        top += 1
        n_nodes += 2

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            pos_count[:n_nodes], count[:n_nodes])


@njit(cache=True)
def _leaf_rates(X, feature, threshold, left, right, rate):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = rate[node]
    return out


class Presorted:
    """Attribute-major training data plus one row order per non-binary attribute.

    Built once and shared by every tree of a forest.
    """

    def __init__(self, X):
        self.XT = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T)
        binary = np.all((self.XT == 0) | (self.XT == 1), axis=1)
        numeric = np.flatnonzero(~binary)
        self.sorted_pos = np.full(self.XT.shape[0], -1, dtype=np.int64)
        self.sorted_pos[numeric] = np.arange(numeric.size)
        self.row_order = np.argsort(self.XT[numeric], axis=1, kind="stable").astype(np.int64)

    @property
    def n_rows(self) -> int:
        return self.XT.shape[1]

    @property
    def n_features(self) -> int:
        return self.XT.shape[0]


class DecisionTree:
    def __init__(self, min_leaf=2, max_depth=25, max_features=None, seed=0):
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y, discrete=None, sample_counts=None):
        return self.fit_presorted(Presorted(X), y, sample_counts)

    def fit_presorted(self, data: Presorted, y, sample_counts=None):
        """Fit on presorted data; ``sample_counts`` gives each row's multiplicity."""
        y = np.asarray(y, dtype=np.int64)
        counts = np.ones(data.n_rows, dtype=np.int64) if sample_counts is None else sample_counts
        slot_row, S = _slot_lists(data.row_order, np.asarray(counts, dtype=np.int64))
        n_try = data.n_features if self.max_features is None else int(self.max_features)
        depth = UNLIMITED_DEPTH if self.max_depth is None else int(self.max_depth)
        (self.feature_, self.threshold_, self.left_, self.right_, pos, count) = _grow(
            data.XT, y, slot_row, S, data.sorted_pos, depth, int(self.min_leaf), n_try, int(self.seed))
        self.rate_ = np.divide(pos, count, out=np.full(pos.shape, 0.5), where=count > 0)
        return self

    @property
    def n_nodes(self):
        return self.feature_.size

    def positive_rate(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _leaf_rates(X, self.feature_, self.threshold_, self.left_, self.right_, self.rate_)

    def predict_proba(self, X):
        p = self.positive_rate(X)
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {"feature": self.feature_.tolist(), "threshold": self.threshold_.tolist(),
                "left": self.left_.tolist(), "right": self.right_.tolist(), "rate": self.rate_.tolist()}

    def set_params(self, params):
        self.feature_ = np.array(params["feature"], dtype=np.int64)
        self.threshold_ = np.array(params["threshold"], dtype=np.float64)
        self.left_ = np.array(params["left"], dtype=np.int64)
        self.right_ = np.array(params["right"], dtype=np.int64)
        self.rate_ = np.array(params["rate"], dtype=np.float64)


def member_rng(seed: int, member: int) -> np.random.Generator:
    """Independent stream for one ensemble member, identical in serial and parallel runs."""
    return np.random.default_rng([int(seed), int(member)])


class RandomForest:
    """Bootstrap-aggregated trees with sqrt(p) candidate attributes per split.

    The positive probability is the fraction of trees voting positive.
    """

    def __init__(self, n_trees=100, min_leaf=1, max_depth=None, max_features="sqrt", seed=0):
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def _n_try(self, p):
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(p)))
        return int(self.max_features)

    def fit(self, X, y, discrete=None):
        data = Presorted(X)
        self.trees_ = [self.fit_member(data, y, t) for t in range(self.n_trees)]
        return self

    def fit_member(self, data: Presorted, y, member: int) -> DecisionTree:
        n = data.n_rows
        rng = member_rng(self.seed, member)
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        tree_seed = int(rng.integers(0, 2**31 - 1))
        tree = DecisionTree(self.min_leaf, self.max_depth, self._n_try(data.n_features), tree_seed)
        return tree.fit_presorted(data, y, counts)

    def positive_rate(self, X):
        votes = np.zeros(np.asarray(X).shape[0])
        for tree in self.trees_:
            votes += tree.positive_rate(X) >= 0.5
        return votes / len(self.trees_)

    def predict_proba(self, X):
        p = self.positive_rate(X)
        return np.column_stack([1.0 - p, p])

    def get_params(self):
        return {"trees": [t.get_params() for t in self.trees_]}

    def set_params(self, params):
        self.trees_ = []
        for tp in params["trees"]:
            tree = DecisionTree()
            tree.set_params(tp)
            self.trees_.append(tree)
