"""Hot numeric kernels: the SMO dual solver and the k-d tree neighbour search.

Each kernel exists twice: a loop version compiled with numba and a
vectorised numpy version with the same arithmetic. ``smo_solve`` and
``kd_query`` point at whichever backend :mod:`touchauth._accel` selected; the
explicit ``*_numba`` / ``*_numpy`` names stay importable for the benchmark and
for cross-checking the two paths.
"""
from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, njit

TAU = 1e-12


# ---------------------------------------------------------------------------
# SMO (second-order working-set selection)
# ---------------------------------------------------------------------------


def _smo_loop(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while it < max_iter:
        # select i: maximal violating index in I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        gmax2 = -np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = y[t] * G[t]
                if v > gmax2:
                    gmax2 = v
                b = gmax + v
                if b > 0 and i >= 0:
                    a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if a <= 0:
                        a = TAU
                    obj = -(b * b) / a
                    if obj < best:
                        best = obj
                        j = t
        gap = gmax + gmax2
        if gap < tol or i < 0 or j < 0:
            break
        it += 1

        old_ai = alpha[i]
        old_aj = alpha[j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s

        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        yi = y[i]
        yj = y[j]
        for t in range(n):
            G[t] += y[t] * (yi * K[t, i] * dai + yj * K[t, j] * daj)
    return alpha, G, it, gap


def _clip_pair(ai, aj, yi_ne_yj, diff_or_sum, C):
    # mirrors the clipping branches of _smo_loop
    if yi_ne_yj:
        diff = diff_or_sum
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0:
                ai = 0.0
                aj = -diff
        if diff > 0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        s = diff_or_sum
        if s > C:
            if ai > C:
                ai = C
                aj = s - C
        else:
            if aj < 0:
                aj = 0.0
                ai = s
        if s > C:
            if aj > C:
                aj = C
                ai = s - C
        else:
            if ai < 0:
                ai = 0.0
                aj = s
    return ai, aj


def smo_numpy(K, y, C, tol, max_iter):
    """Vectorised twin of the numba SMO loop; same selection and update rules."""
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K).copy()
    pos = y > 0
    it = 0
    gap = np.inf
    while it < max_iter:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        if not up.any() or not low.any():
            break
        yG = y * G
        v_up = np.where(up, -yG, -np.inf)
        i = int(np.argmax(v_up))
        gmax = v_up[i]
        v_low = np.where(low, yG, -np.inf)
        gmax2 = v_low.max()
        gap = gmax + gmax2
        if gap < tol:
            break
        b = gmax + v_low
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a <= 0, TAU, a)
        cand = low & (b > 0)
        if not cand.any():
            break
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        it += 1

        old_ai, old_aj = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            ai, aj = _clip_pair(alpha[i] + delta, alpha[j] + delta, True, diff, C)
        else:
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            ai, aj = _clip_pair(alpha[i] - delta, alpha[j] + delta, False, s, C)
        alpha[i], alpha[j] = ai, aj
        G += y * (y[i] * K[:, i] * (ai - old_ai) + y[j] * K[:, j] * (aj - old_aj))
    return alpha, G, it, gap


if HAVE_NUMBA:
    smo_numba = njit(_smo_loop)
    smo_solve = smo_numba
else:
    smo_numba = None
    smo_solve = smo_numpy


def smo_bias(alpha, G, y, C):
    """Offset b of the decision function sum(alpha*y*K) + b."""
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        # no free vectors: midpoint of the feasible interval
        at_upper = alpha >= C
        at_lower = alpha <= 0
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = (ub + lb) / 2
        elif np.isfinite(ub):
            rho = ub
        else:
            rho = lb
    return -float(rho)


# ---------------------------------------------------------------------------
# k-d tree
# ---------------------------------------------------------------------------


def build_kdtree(X, leaf_size=8):
    """Median-split k-d tree stored as flat arrays.

    Returns ``(perm, start, end, split_dim, split_val, left, right)``; leaves
    have ``left == -1`` and own ``perm[start:end]``.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    perm = np.arange(n)
    start, end, sdim, sval, left, right = [], [], [], [], [], []

    def new_node(lo, hi):
        start.append(lo)
        end.append(hi)
        sdim.append(-1)
        sval.append(0.0)
        left.append(-1)
        right.append(-1)
        return len(start) - 1

    root = new_node(0, n)
    todo = [root]
    while todo:
        node = todo.pop()
        lo, hi = start[node], end[node]
        if hi - lo <= leaf_size:
            continue
        pts = X[perm[lo:hi]]
        spread = pts.max(axis=0) - pts.min(axis=0)
        dim = int(np.argmax(spread))
        if spread[dim] == 0:
            continue
        order = np.argsort(pts[:, dim], kind="stable")
        perm[lo:hi] = perm[lo:hi][order]
        mid = (lo + hi) // 2
        sdim[node] = dim
        sval[node] = float(X[perm[mid], dim])
        left[node] = new_node(lo, mid)
        right[node] = new_node(mid, hi)
        todo.append(left[node])
        todo.append(right[node])
    return (
        perm,
        np.array(start, dtype=np.int64),
        np.array(end, dtype=np.int64),
        np.array(sdim, dtype=np.int64),
        np.array(sval, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
    )


def _kd_query_loop(X, perm, start, end, sdim, sval, left, right, Q, k):
    m = Q.shape[0]
    d = X.shape[1]
    n_nodes = start.shape[0]
    out_i = np.empty((m, k), dtype=np.int64)
    out_d = np.empty((m, k), dtype=np.float64)
    stack_node = np.empty(n_nodes + 1, dtype=np.int64)
    stack_bnd = np.empty(n_nodes + 1, dtype=np.float64)
    big = X.shape[0]
    for qi in range(m):
        best_d = np.full(k, np.inf)
        best_i = np.full(k, big, dtype=np.int64)
        top = 0
        stack_node[0] = 0
        stack_bnd[0] = 0.0
        top = 1
        while top > 0:
            top -= 1
            node = stack_node[top]
            bnd = stack_bnd[top]
            if bnd > best_d[k - 1]:
                continue
            if left[node] < 0:
                for p in range(start[node], end[node]):
                    idx = perm[p]
                    dist = 0.0
                    for c in range(d):
                        diff = X[idx, c] - Q[qi, c]
                        dist += diff * diff
                    if dist < best_d[k - 1] or (dist == best_d[k - 1] and idx < best_i[k - 1]):
                        pos = k - 1
                        while pos > 0 and (
                            dist < best_d[pos - 1]
                            or (dist == best_d[pos - 1] and idx < best_i[pos - 1])
                        ):
                            best_d[pos] = best_d[pos - 1]
                            best_i[pos] = best_i[pos - 1]
                            pos -= 1
                        best_d[pos] = dist
                        best_i[pos] = idx
            else:
                diff = Q[qi, sdim[node]] - sval[node]
                if diff > 0:
                    near = right[node]
                    far = left[node]
                else:
                    near = left[node]
                    far = right[node]
                fb = diff * diff
                if fb < bnd:
                    fb = bnd
                stack_node[top] = far
                stack_bnd[top] = fb
                top += 1
                stack_node[top] = near
                stack_bnd[top] = bnd
                top += 1
        out_i[qi] = best_i
        out_d[qi] = best_d
    return out_i, out_d


def kd_query_numpy(X, perm, start, end, sdim, sval, left, right, Q, k):
    """Same traversal as the compiled loop, leaves scored with numpy."""
    X = np.asarray(X, dtype=np.float64)
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    m = Q.shape[0]
    out_i = np.empty((m, k), dtype=np.int64)
    out_d = np.empty((m, k), dtype=np.float64)
    big = X.shape[0]
    for qi in range(m):
        q = Q[qi]
        best_d = np.full(k, np.inf)
        best_i = np.full(k, big, dtype=np.int64)
        stack = [(0, 0.0)]
        while stack:
            node, bnd = stack.pop()
            if bnd > best_d[-1]:
                continue
            if left[node] < 0:
                idx = perm[start[node]:end[node]]
                diff = X[idx] - q
                dist = np.zeros(idx.shape[0])
                for c in range(X.shape[1]):
                    dist += diff[:, c] * diff[:, c]
                all_d = np.concatenate([best_d, dist])
                all_i = np.concatenate([best_i, idx])
                order = np.lexsort((all_i, all_d))[:k]
                best_d = all_d[order]
                best_i = all_i[order]
            else:
                diff = q[sdim[node]] - sval[node]
                near, far = (right[node], left[node]) if diff > 0 else (left[node], right[node])
                stack.append((far, max(diff * diff, bnd)))
                stack.append((near, bnd))
        out_i[qi] = best_i
        out_d[qi] = best_d
    return out_i, out_d


if HAVE_NUMBA:
    kd_query_numba = njit(_kd_query_loop)
    kd_query = kd_query_numba
else:
    kd_query_numba = None
    kd_query = kd_query_numpy
