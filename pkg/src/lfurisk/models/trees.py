"""Binary trees stored as flat node arrays, plus the split-finding kernel.

A node with ``feature == -1`` is a leaf. Internal nodes send a row left when
``x[feature] <= threshold``. Split search is exact: candidate cut points are
all distinct training values of a column, evaluated from per-value gradient
and hessian sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass
class Tree:
    feature: np.ndarray     # int32, -1 at leaves
    threshold: np.ndarray   # float64
    left: np.ndarray        # int32
    right: np.ndarray       # int32
    value: np.ndarray       # float64, contribution at leaves
    gain: np.ndarray        # float64, split gain (0 at leaves)
    cover: np.ndarray       # float64, hessian (or weight) sum

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_records(self, names=None) -> list[dict]:
        out = []
        for i in range(self.n_nodes):
            rec = {"id": i, "cover": float(self.cover[i])}
            if self.feature[i] < 0:
                rec["leaf"] = float(self.value[i])
            else:
                f = int(self.feature[i])
                rec.update({"feature": names[f] if names else f, "feature_index": f,
                            "threshold": float(self.threshold[i]), "gain": float(self.gain[i]),
                            "left": int(self.left[i]), "right": int(self.right[i])})
            out.append(rec)
        return out

    @classmethod
    def from_records(cls, records: list[dict]) -> "Tree":
        n = len(records)
        t = cls(np.full(n, -1, np.int32), np.zeros(n), np.full(n, -1, np.int32),
                np.full(n, -1, np.int32), np.zeros(n), np.zeros(n), np.zeros(n))
        for rec in records:
            i = rec["id"]
            t.cover[i] = rec["cover"]
            if "leaf" in rec:
                t.value[i] = rec["leaf"]
            else:
                t.feature[i] = rec["feature_index"]
                t.threshold[i] = rec["threshold"]
                t.gain[i] = rec["gain"]
                t.left[i] = rec["left"]
                t.right[i] = rec["right"]
        return t


@numba.njit(cache=True)
def _predict_tree(X, feature, threshold, left, right, value, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


def predict_trees(trees, X: np.ndarray, base: float = 0.0, n_trees: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.full(X.shape[0], base, dtype=np.float64)
    for t in trees[: n_trees if n_trees is not None else len(trees)]:
        _predict_tree(X, t.feature, t.threshold, t.left, t.right, t.value, out)
    return out


@dataclass
class BinnedMatrix:
    """Column-wise codes of distinct values; ``values[j][c]`` is the value of code c."""

    codes: np.ndarray       # (n, d) int32
    values: list[np.ndarray]
    offsets: np.ndarray     # (d+1,) int64 start of each column's bins
    nbins: np.ndarray       # (d,) int64

    @classmethod
    def from_array(cls, X: np.ndarray) -> "BinnedMatrix":
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        codes = np.empty((n, d), dtype=np.int32)
        values = []
        for j in range(d):
            uniq, inv = np.unique(X[:, j], return_inverse=True)
            codes[:, j] = inv
            values.append(uniq)
        nbins = np.array([len(v) for v in values], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(nbins)]).astype(np.int64)
        return cls(codes, values, offsets, nbins)


@numba.njit(cache=True)
def _histograms(codes, rows, slot, g, h, cols, offsets, n_slots, total_bins):
    hg = np.zeros((n_slots, total_bins))
    hh = np.zeros((n_slots, total_bins))
    for r in rows:
        s = slot[r]
        if s < 0:
            continue
        gr = g[r]
        hr = h[r]
        for j in cols:
            b = offsets[j] + codes[r, j]
            hg[s, b] += gr
            hh[s, b] += hr
    return hg, hh


@numba.njit(cache=True)
def _soft(G, alpha):
    if G > alpha:
        return G - alpha
    if G < -alpha:
        return G + alpha
    return 0.0


@numba.njit(cache=True)
def _score(G, H, lam, alpha):
    denom = H + lam
    if denom <= 0.0:
        return 0.0
    t = _soft(G, alpha)
    return t * t / denom


@numba.njit(cache=True)
def _leaf(G, H, lam, alpha):
    denom = H + lam
    if denom <= 0.0:
        return 0.0
    return -_soft(G, alpha) / denom


@numba.njit(cache=True)
def grow_newton_tree(codes, g, h, rows, cols, offsets, nbins, max_depth,
                     lam, alpha, gamma, min_child_weight, learning_rate):
    """Level-wise exact greedy regression tree on (gradient, hessian) pairs.

    Returns node arrays with split positions expressed as (column, bin); the
    caller converts bins to real thresholds.
    """
    max_nodes = 2 ** (max_depth + 1) - 1
    feature = np.full(max_nodes, -1, np.int32)
    split_bin = np.full(max_nodes, -1, np.int32)
    left = np.full(max_nodes, -1, np.int32)
    right = np.full(max_nodes, -1, np.int32)
    value = np.zeros(max_nodes)
    gain_out = np.zeros(max_nodes)
    G_node = np.zeros(max_nodes)
    H_node = np.zeros(max_nodes)
    n = codes.shape[0]
    node_of = np.full(n, -1, np.int32)
    for r in rows:
        node_of[r] = 0
        G_node[0] += g[r]
        H_node[0] += h[r]
    n_nodes = 1
    frontier = np.zeros(1, np.int32)
    total_bins = offsets[-1]
    for depth in range(max_depth):
        if frontier.size == 0:
            break
        slot = np.full(n, -1, np.int32)
        slot_of_node = np.full(max_nodes, -1, np.int32)
        for s in range(frontier.size):
            slot_of_node[frontier[s]] = s
        for r in rows:
            slot[r] = slot_of_node[node_of[r]]
        hg, hh = _histograms(codes, rows, slot, g, h, cols, offsets, frontier.size, total_bins)
        best_gain = np.full(frontier.size, -np.inf)
        best_col = np.full(frontier.size, -1, np.int64)
        best_bin = np.full(frontier.size, -1, np.int64)
        for s in range(frontier.size):
            node = frontier[s]
            G = G_node[node]
            H = H_node[node]
            parent = _score(G, H, lam, alpha)
            for j in cols:
                GL = 0.0
                HL = 0.0
                start = offsets[j]
                for b in range(nbins[j] - 1):
                    GL += hg[s, start + b]
                    HL += hh[s, start + b]
                    if HL < min_child_weight:
                        continue
                    HR = H - HL
                    if HR < min_child_weight:
                        break
                    GR = G - GL
                    gain = 0.5 * (_score(GL, HL, lam, alpha) + _score(GR, HR, lam, alpha) - parent)
                    if gain > best_gain[s]:
                        best_gain[s] = gain
                        best_col[s] = j
                        best_bin[s] = b
        next_frontier = np.empty(2 * frontier.size, np.int32)
        n_next = 0
        for s in range(frontier.size):
            node = frontier[s]
            if best_col[s] < 0 or not best_gain[s] > gamma:
                continue
            feature[node] = best_col[s]
            split_bin[node] = best_bin[s]
            gain_out[node] = best_gain[s]
            left[node] = n_nodes
            right[node] = n_nodes + 1
            next_frontier[n_next] = n_nodes
            next_frontier[n_next + 1] = n_nodes + 1
            n_next += 2
            n_nodes += 2
        for r in rows:
            node = node_of[r]
            if feature[node] >= 0 and slot_of_node[node] >= 0:
                if codes[r, feature[node]] <= split_bin[node]:
                    child = left[node]
                else:
                    child = right[node]
                node_of[r] = child
                G_node[child] += g[r]
                H_node[child] += h[r]
        frontier = next_frontier[:n_next]
    for node in range(n_nodes):
        if feature[node] < 0:
            value[node] = learning_rate * _leaf(G_node[node], H_node[node], lam, alpha)
    return (feature[:n_nodes], split_bin[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], gain_out[:n_nodes], H_node[:n_nodes], G_node[:n_nodes])


@numba.njit(cache=True)
def predict_codes(codes, feature, split_bin, left, right, value, out):
    for i in range(codes.shape[0]):
        node = 0
        while feature[node] >= 0:
            if codes[i, feature[node]] <= split_bin[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


def root_histograms(binned: BinnedMatrix, g: np.ndarray, h: np.ndarray):
    """Per-(column, distinct value) gradient and hessian sums over all rows."""
    n, d = binned.codes.shape
    rows = np.arange(n, dtype=np.int64)
    slot = np.zeros(n, dtype=np.int32)
    cols = np.arange(d, dtype=np.int64)
    hg, hh = _histograms(binned.codes, rows, slot, np.asarray(g, np.float64), np.asarray(h, np.float64),
                         cols, binned.offsets, 1, int(binned.offsets[-1]))
    return hg[0], hh[0]
