"""Random forest of Gini CART trees over sparse feature rows.

Trees are grown on bootstrap multiplicities rather than duplicated rows: a row
drawn ``k`` times carries integer weight ``k`` in every count.  Sparse zeros
take part in split search as the explicit value ``0``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from ._seeding import derive_seed, make_rng
from .errors import DataError, ModelFormatError
from .linear import as_csr
from .tfidf import SparseVector

FORMAT_VERSION = 1
_TIE_EPS = 1e-12


def gini(class_counts) -> float:
    """``1 - sum(p_i^2)`` for a pair of (possibly weighted) class counts."""
    counts = [float(c) for c in class_counts]
    if any(c < 0 for c in counts):
        raise ValueError("class counts must be non-negative")
    total = sum(counts)
    if total <= 0:
        raise ValueError("gini of an empty node is undefined")
    return 1.0 - sum((c / total) ** 2 for c in counts)


class Split(NamedTuple):
    feature: int
    threshold: float
    impurity_decrease: float


@dataclass(frozen=True)
class ForestTrainConfig:
    n_estimators: int = 100
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: str | int = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if isinstance(self.max_features, str):
            if self.max_features not in ("sqrt", "log2", "all"):
                raise ValueError(f"unknown max_features rule {self.max_features!r}")
        elif self.max_features < 1:
            raise ValueError("integer max_features must be >= 1")

    def resolve_max_features(self, n_features: int) -> int:
        rule = self.max_features
        if rule == "sqrt":
            k = math.ceil(math.sqrt(n_features))
        elif rule == "log2":
            k = math.ceil(math.log2(n_features)) if n_features > 1 else 1
        elif rule == "all":
            k = n_features
        else:
            k = int(rule)
        return max(1, min(k, n_features))


# ----------------------------------------------------------------- tree type

@dataclass(frozen=True)
class Tree:
    """Flat array form of a binary tree; node 0 is the root, ``feature == -1`` marks leaves."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2): class-0 and class-1 weight per node

    def __post_init__(self):
        object.__setattr__(self, "_feature", self.feature.tolist())
        object.__setattr__(self, "_threshold", self.threshold.tolist())
        object.__setattr__(self, "_left", self.left.tolist())
        object.__setattr__(self, "_right", self.right.tolist())
        c = self.counts.astype(np.float64)
        object.__setattr__(self, "_proba", (c[:, 1] / c.sum(axis=1)).tolist())

    @property
    def n_nodes(self):
        return len(self._feature)

    def leaf_for(self, x: dict) -> int:
        feature, threshold, left, right = self._feature, self._threshold, self._left, self._right
        node = 0
        while feature[node] >= 0:
            node = left[node] if x.get(feature[node], 0.0) <= threshold[node] else right[node]
        return node

    def predict_proba(self, x: dict) -> float:
        return self._proba[self.leaf_for(x)]

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self._feature[node] >= 0:
                stack.append((self._left[node], d + 1))
                stack.append((self._right[node], d + 1))
        return best

    def to_nested(self, node=0) -> dict:
        # Iterative post-order build keeps deep trees clear of the recursion limit.
        built = {}
        stack = [(node, False)]
        while stack:
            n, children_done = stack.pop()
            if self._feature[n] < 0:
                built[n] = {"class_counts": [int(v) for v in self.counts[n]]}
            elif children_done:
                built[n] = {
                    "feature": self._feature[n],
                    "threshold": self._threshold[n],
                    "left": built.pop(self._left[n]),
                    "right": built.pop(self._right[n]),
                }
            else:
                stack.append((n, True))
                stack.append((self._right[n], False))
                stack.append((self._left[n], False))
        return built[node]

    @classmethod
    def from_nested(cls, root: dict) -> "Tree":
        feature, threshold, left, right, counts = [], [], [], [], []
        # Pre-order numbering, left subtree first.
        stack = [(root, -1, "")]
        while stack:
            obj, parent, side = stack.pop()
            idx = len(feature)
            if parent >= 0:
                (left if side == "l" else right)[parent] = idx
            if "class_counts" in obj:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                counts.append(list(obj["class_counts"]))
            else:
                feature.append(int(obj["feature"]))
                threshold.append(float(obj["threshold"]))
                left.append(-1)
                right.append(-1)
                counts.append(None)
                stack.append((obj["right"], idx, "r"))
                stack.append((obj["left"], idx, "l"))
        # Internal node counts are the sum of their children.
        for idx in range(len(feature) - 1, -1, -1):
            if counts[idx] is None:
                cl, cr = counts[left[idx]], counts[right[idx]]
                counts[idx] = [cl[0] + cr[0], cl[1] + cr[1]]
        return cls(
            np.array(feature, dtype=np.int64),
            np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64),
            np.array(counts, dtype=np.int64).reshape(-1, 2),
        )


@dataclass(frozen=True)
class RandomForest:
    trees: tuple[Tree, ...]
    n_features: int
    config: ForestTrainConfig

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "model_type": "random_forest",
            "n_features": self.n_features,
            "config": asdict(self.config),
            "trees": [t.to_nested() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RandomForest":
        if data.get("model_type") != "random_forest" or data.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError("not a random_forest model of a supported format_version")
        config = ForestTrainConfig(**data["config"])
        trees = tuple(Tree.from_nested(t) for t in data["trees"])
        return cls(trees, int(data["n_features"]), config)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RandomForest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# -------------------------------------------------------------- split search

class _Rows:
    """CSR matrix plus labels, with a fast gather of the entries of a row subset."""

    def __init__(self, X: sp.csr_matrix, y: np.ndarray):
        X = sp.csr_matrix(X, dtype=np.float64)
        X.sum_duplicates()
        X.eliminate_zeros()
        X.sort_indices()
        self.X = X
        self.indptr = X.indptr.astype(np.int64)
        self.indices = X.indices.astype(np.int64)
        self.data = X.data
        self.y = np.asarray(y, dtype=np.int64)
        self.n_features = X.shape[1]

    def entries(self, rows):
        """CSR positions of every stored entry of ``rows`` and the row slot each came from."""
        starts = self.indptr[rows]
        lengths = self.indptr[rows + 1] - starts
        total = int(lengths.sum())
        if total == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        pos = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
        pos += np.arange(total)
        return pos, np.repeat(np.arange(rows.size), lengths)


class _Workspace:
    """Per-tree scratch tables indexed by column; callers restore them after use."""

    def __init__(self, n_features):
        self.local = np.full(n_features, -1, dtype=np.int64)
        self.mark = np.zeros(n_features, dtype=bool)

    def present(self, feat):
        self.mark[feat] = True
        out = np.flatnonzero(self.mark)
        self.mark[out] = False
        return out


def _candidate_entries(data, ws, rows, weights, pos, feat, local_row, candidates):
    """Restrict node entries to candidate columns; returns per-entry split inputs."""
    ws.local[candidates] = np.arange(candidates.size)
    local = ws.local[feat]
    ws.local[candidates] = -1
    keep = local >= 0
    local = local[keep]
    pos = pos[keep]
    slot = local_row[keep]
    w = weights[slot]
    lab = data.y[rows[slot]]
    wpos = w * lab
    return local, data.data[pos], wpos, w - wpos, slot


def _best_split_entries(local, val, wpos, wneg, candidates, tot_pos, tot_neg, min_leaf):
    """Vectorised Gini split search over the nonzero entries of candidate columns.

    ``local`` holds positions into ``candidates`` (not raw column ids).
    """
    k = candidates.size
    if k == 0:
        return None

    zero_pos = tot_pos - np.bincount(local, weights=wpos, minlength=k)
    zero_neg = tot_neg - np.bincount(local, weights=wneg, minlength=k)
    has_zero = (zero_pos + zero_neg) > 0
    zf = np.nonzero(has_zero)[0]
    f_all = np.concatenate([local, zf])
    v_all = np.concatenate([val, np.zeros(zf.size)])
    p_all = np.concatenate([wpos.astype(np.float64), zero_pos[zf]])
    q_all = np.concatenate([wneg.astype(np.float64), zero_neg[zf]])

    order = np.lexsort((v_all, f_all))
    f_all, v_all, p_all, q_all = f_all[order], v_all[order], p_all[order], q_all[order]
    new_group = np.empty(f_all.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = (f_all[1:] != f_all[:-1]) | (v_all[1:] != v_all[:-1])
    starts = np.nonzero(new_group)[0]
    gf = f_all[starts]
    gv = v_all[starts]
    gp = np.add.reduceat(p_all, starts)
    gq = np.add.reduceat(q_all, starts)

    cp = np.cumsum(gp)
    cq = np.cumsum(gq)
    first_of_feature = np.ones(gf.size, dtype=bool)
    first_of_feature[1:] = gf[1:] != gf[:-1]
    base = np.nonzero(first_of_feature)[0]
    feature_group = np.cumsum(first_of_feature) - 1
    prev_p = np.concatenate([[0.0], cp])[base][feature_group]
    prev_q = np.concatenate([[0.0], cq])[base][feature_group]
    left_p = cp - prev_p
    left_q = cq - prev_q

    # A split sits between group g and g + 1 of the same feature.
    valid = np.zeros(gf.size, dtype=bool)
    valid[:-1] = gf[1:] == gf[:-1]
    n_total = tot_pos + tot_neg
    n_left = left_p + left_q
    n_right = n_total - n_left
    valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    idx = np.nonzero(valid)[0]
    lp, lq, nl = left_p[idx], left_q[idx], n_left[idx]
    rp, rq, nr = tot_pos - lp, tot_neg - lq, n_right[idx]
    score = (lp * lp + lq * lq) / nl + (rp * rp + rq * rq) / nr
    parent = (tot_pos * tot_pos + tot_neg * tot_neg) / n_total
    decrease = (score - parent) / n_total
    best = decrease.max()
    if best <= _TIE_EPS:
        return None
    # First index within tolerance of the best = lowest feature, then lowest threshold.
    j = int(np.nonzero(decrease >= best - _TIE_EPS)[0][0])
    g = idx[j]
    lo, hi = gv[g], gv[g + 1]
    threshold = (lo + hi) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return int(candidates[gf[g]]), float(threshold), float(decrease[j])


def best_split(rows, X, y, candidate_features, weights=None, min_samples_leaf=1) -> Split | None:
    """Best Gini split of ``rows`` over ``candidate_features``, or ``None``.

    ``rows`` may repeat indices; repeats count with multiplicity.  Thresholds
    are midpoints between consecutive distinct values; ties go to the lowest
    feature index, then the lowest threshold.
    """
    data = X if isinstance(X, _Rows) else _Rows(as_csr(X), y)
    rows = np.asarray(rows, dtype=np.int64)
    if weights is None:
        rows, weights = np.unique(rows, return_counts=True)
    weights = np.asarray(weights, dtype=np.int64)
    candidates = np.unique(np.asarray(candidate_features, dtype=np.int64))
    if rows.size == 0:
        return None
    labels = data.y[rows]
    tot_pos = float(np.dot(weights, labels))
    tot_neg = float(weights.sum()) - tot_pos
    if tot_pos == 0 or tot_neg == 0:
        return None
    ws = _Workspace(data.n_features)
    pos, local_row = data.entries(rows)
    feat = data.indices[pos]
    local, val, wpos, wneg, _ = _candidate_entries(data, ws, rows, weights, pos, feat, local_row, candidates)
    found = _best_split_entries(local, val, wpos, wneg, candidates, tot_pos, tot_neg, min_samples_leaf)
    return Split(*found) if found else None


# ------------------------------------------------------------------- growing

def grow_tree(rows, X, y, config: ForestTrainConfig, tree_seed: int, weights=None) -> Tree:
    """Grow one CART tree depth-first (left child first) from ``rows``.

    At each splittable node the candidate columns are ``max_features`` columns
    drawn without replacement from those with a nonzero entry in the node;
    columns that are zero on every row of the node cannot split it.
    """
    data = X if isinstance(X, _Rows) else _Rows(as_csr(X), y)
    rows = np.asarray(rows, dtype=np.int64)
    if weights is None:
        rows, weights = np.unique(rows, return_counts=True)
    weights = np.asarray(weights, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("cannot grow a tree on zero rows")

    rng = make_rng(tree_seed)
    ws = _Workspace(data.n_features)
    k = config.resolve_max_features(data.n_features)
    min_leaf = config.min_samples_leaf
    max_depth = config.max_depth

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(c_neg, c_pos):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((c_neg, c_pos))
        return len(feature) - 1

    labels = data.y[rows]
    c_pos = int(np.dot(weights, labels))
    root = new_node(int(weights.sum()) - c_pos, c_pos)
    stack = [(root, rows, weights, 0)]
    while stack:
        node, r, w, depth = stack.pop()
        c_neg, c_pos = counts[node]
        if c_neg == 0 or c_pos == 0:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if c_neg + c_pos < 2 * min_leaf:
            continue
        pos, local_row = data.entries(r)
        feat = data.indices[pos]
        present = ws.present(feat)
        if present.size > k:
            candidates = np.sort(rng.choice(present, size=k, replace=False))
        else:
            candidates = present
        local, val, wpos, wneg, slot = _candidate_entries(data, ws, r, w, pos, feat, local_row, candidates)
        found = _best_split_entries(local, val, wpos, wneg, candidates, float(c_pos), float(c_neg), min_leaf)
        if found is None:
            continue
        f, thr, _ = found
        column = np.zeros(r.size)
        hit = candidates[local] == f
        column[slot[hit]] = val[hit]
        go_left = column <= thr
        rl, wl = r[go_left], w[go_left]
        rr, wr = r[~go_left], w[~go_left]
        pos_l = int(np.dot(wl, data.y[rl]))
        pos_r = int(np.dot(wr, data.y[rr]))
        feature[node] = f
        threshold[node] = thr
        li = new_node(int(wl.sum()) - pos_l, pos_l)
        ri = new_node(int(wr.sum()) - pos_r, pos_r)
        left[node] = li
        right[node] = ri
        # Right pushed first so the left subtree is expanded (and numbered) first.
        stack.append((ri, rr, wr, depth + 1))
        stack.append((li, rl, wl, depth + 1))

    return _renumber_preorder(feature, threshold, left, right, counts)


def _renumber_preorder(feature, threshold, left, right, counts) -> Tree:
    order = []
    stack = [0]
    while stack:
        n = stack.pop()
        order.append(n)
        if feature[n] >= 0:
            stack.append(right[n])
            stack.append(left[n])
    new_id = {old: new for new, old in enumerate(order)}
    return Tree(
        np.array([feature[o] for o in order], dtype=np.int64),
        np.array([threshold[o] for o in order], dtype=np.float64),
        np.array([new_id[left[o]] if left[o] >= 0 else -1 for o in order], dtype=np.int64),
        np.array([new_id[right[o]] if right[o] >= 0 else -1 for o in order], dtype=np.int64),
        np.array([counts[o] for o in order], dtype=np.int64).reshape(-1, 2),
    )


def _train_one(data: _Rows, config: ForestTrainConfig, index: int) -> Tree:
    seed = derive_seed(config.seed, index)
    n = data.X.shape[0]
    if config.bootstrap:
        # The bootstrap draw uses its own sub-stream of the tree seed.
        rng = make_rng(seed, 0)
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        rows = np.nonzero(counts)[0]
        weights = counts[rows]
    else:
        rows = np.arange(n)
        weights = np.ones(n, dtype=np.int64)
    return grow_tree(rows, data, None, config, seed, weights=weights)


def train_forest(X, y: Sequence[int], config: ForestTrainConfig = ForestTrainConfig(), n_jobs: int = 1,
                 n_features=None) -> RandomForest:
    """Train ``config.n_estimators`` trees; results do not depend on ``n_jobs``."""
    X = as_csr(X, n_features)
    y = np.asarray(y)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 1:
        raise DataError("need at least one training row")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0/1")
    data = _Rows(X, y)
    indices = range(config.n_estimators)
    if n_jobs == 1:
        trees = [_train_one(data, config, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            trees = list(pool.map(lambda i: _train_one(data, config, i), indices))
    return RandomForest(tuple(trees), X.shape[1], config)


# ---------------------------------------------------------------- prediction

def _as_feature_dict(x, n_features) -> dict:
    if isinstance(x, SparseVector):
        if x.nnz and (x.indices.max() >= n_features or x.indices.min() < 0):
            raise DataError(f"feature index out of range for a forest with {n_features} features")
        return dict(zip(x.indices.tolist(), x.values.tolist()))
    if isinstance(x, dict):
        if any(not 0 <= k < n_features for k in x):
            raise DataError(f"feature index out of range for a forest with {n_features} features")
        return x
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size != n_features:
        raise DataError(f"dense input has {arr.size} features, expected {n_features}")
    nz = np.nonzero(arr)[0]
    return dict(zip(nz.tolist(), arr[nz].tolist()))


def predict_forest(forest: RandomForest, x, mode: str = "mean_proba") -> tuple[int, float]:
    """Return ``(label, probability)`` for one input.

    ``mean_proba`` averages leaf positive fractions; ``vote`` reports the share
    of trees whose leaf leans positive (ties count as positive) and labels by
    majority, ties again positive.
    """
    xd = _as_feature_dict(x, forest.n_features)
    probs = [t.predict_proba(xd) for t in forest.trees]
    if mode == "mean_proba":
        p = math.fsum(probs) / len(probs)
        return int(p >= 0.5), p
    if mode == "vote":
        share = sum(1 for p in probs if p >= 0.5) / len(probs)
        return int(share >= 0.5), share
    raise ValueError(f"unknown prediction mode {mode!r}")


def predict_proba_many(forest: RandomForest, X, mode: str = "mean_proba") -> np.ndarray:
    X = as_csr(X, forest.n_features)
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        s, e = X.indptr[i], X.indptr[i + 1]
        xd = dict(zip(X.indices[s:e].tolist(), X.data[s:e].tolist()))
        out[i] = predict_forest(forest, xd, mode)[1]
    return out
