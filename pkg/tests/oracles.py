"""Independent reference implementations used as test oracles.

Written from the model equations, not from the package code: the GRU uses
split input/recurrent weight blocks and plain Python loops, centrality uses
exhaustive path enumeration, placement uses exhaustive search.
"""

import itertools
import math
from collections import deque
from fractions import Fraction

import numpy as np

from fleam import nn


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def _matvec(w, v):
    return [sum(wij * vj for wij, vj in zip(row, v)) for row in w]


def gru_step_ref(params, h, x):
    """One GRU step with the concatenated weights split into recurrent and input blocks."""
    H = len(h)

    def split(w):
        return [row[:H] for row in w], [row[H:] for row in w]

    uh, ux = split(params["w_update"].tolist())
    rh, rx = split(params["w_reset"].tolist())
    ch, cx = split(params["w_cand"].tolist())
    bu, br, bc = (params[k].tolist() for k in ("b_update", "b_reset", "b_cand"))
    h, x = list(map(float, h)), list(map(float, x))
    a_u = [p + q + b for p, q, b in zip(_matvec(uh, h), _matvec(ux, x), bu)]
    a_r = [p + q + b for p, q, b in zip(_matvec(rh, h), _matvec(rx, x), br)]
    z = [_sig(v) for v in a_u]
    r = [_sig(v) for v in a_r]
    rh_prod = [ri * hi for ri, hi in zip(r, h)]
    c = [math.tanh(p + q + b) for p, q, b in zip(_matvec(ch, rh_prod), _matvec(cx, x), bc)]
    return [(1 - zi) * hi + zi * ci for zi, hi, ci in zip(z, h, c)]


def gru_forward_ref(params, seq):
    """Per-step softmax outputs for one sequence from a zero state."""
    H = params["b_update"].shape[0]
    h = [0.0] * H
    out = []
    wo, bo = params["w_out"].tolist(), params["b_out"].tolist()
    for x in seq:
        h = gru_step_ref(params, h, x)
        logits = [s + b for s, b in zip(_matvec(wo, h), bo)]
        m = max(logits)
        e = [math.exp(v - m) for v in logits]
        tot = sum(e)
        out.append([v / tot for v in e])
    return out, h


def fd_relative_errors(seed, eps=1e-5):
    """Per-component relative error of the analytic gradient against central differences.

    The model dims, batch, label mask and L2 weight are drawn from ``seed``.
    The denominator is floored at 1e-8 so exactly-zero components compare absolutely.
    """
    rng = np.random.default_rng(seed)
    d, h, c = rng.integers(1, 4), rng.integers(1, 5), rng.integers(2, 4)
    n, T = rng.integers(1, 4), rng.integers(1, 4)
    m = nn.GruModel.initialize(d, h, c, seed=seed)
    xs = rng.normal(size=(n, T, d))
    ys = rng.integers(0, c, size=(n, T))
    ys[rng.random((n, T)) < 0.3] = nn.IGNORE
    ys[0, -1] = 0
    lam = float(rng.choice([0.0, 0.01]))
    grad, _ = nn.loss_and_grad(m, xs, ys, lam)
    w = m.flatten().values
    rel = np.empty(w.size)
    for k in range(w.size):
        wp, wm = w.copy(), w.copy()
        wp[k] += eps
        wm[k] -= eps
        lp = nn.mean_loss(m.unflatten(nn.ParamVector(wp, m.layout_id)), xs, ys, lam)
        lm = nn.mean_loss(m.unflatten(nn.ParamVector(wm, m.layout_id)), xs, ys, lam)
        num = (lp - lm) / (2 * eps)
        a = grad.values[k]
        rel[k] = abs(a - num) / max(abs(a), abs(num), 1e-8)
    return rel


# -- graphs ----------------------------------------------------------------------------


def _bfs_dist(adj, s):
    d = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in d:
                d[v] = d[u] + 1
                q.append(v)
    return d


def all_shortest_paths(adj, s, t):
    """Every simple s-t path, filtered to minimum length (exhaustive DFS)."""
    paths = []

    def dfs(u, path, seen):
        if u == t:
            paths.append(list(path))
            return
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                path.append(v)
                dfs(v, path, seen)
                path.pop()
                seen.remove(v)

    dfs(s, [s], {s})
    if not paths:
        return []
    best = min(len(p) for p in paths)
    return [p for p in paths if len(p) == best]


def betweenness_ref(adj):
    nodes = list(adj)
    cb = {n: Fraction(0) for n in nodes}
    for j, k in itertools.combinations(nodes, 2):
        sp = all_shortest_paths(adj, j, k)
        if not sp:
            continue
        for i in nodes:
            if i in (j, k):
                continue
            cb[i] += Fraction(sum(1 for p in sp if i in p), len(sp))
    return cb


def closeness_ref(adj):
    out = {}
    for n in adj:
        total = sum(_bfs_dist(adj, n).values())
        out[n] = Fraction(1, total) if total else None
    return out


def best_coverage(routes, candidates, k):
    """Maximum number of routes touched by any ``k`` candidates."""
    k = min(k, len(candidates))
    best = 0
    for combo in itertools.combinations(candidates, k):
        s = set(combo)
        best = max(best, sum(1 for r in routes if s.intersection(r)))
    return best
