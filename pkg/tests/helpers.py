"""Stroke builders and independent oracles shared by the tests.

The oracles deliberately avoid the library's own code paths: plain loops,
sorting and ``collections.Counter`` instead of the vectorised kernels.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np

from touchauth.ingest import Action, PhoneOrientation, Stroke, TouchEvent


def event(t, action, x=0.0, y=0.0, *, user="u", doc="d", phone="p", pressure=0.5, area=0.1, orient=0.0,
          portrait=True):
    return TouchEvent(
        phone, user, doc, float(t), Action(action),
        PhoneOrientation.PORTRAIT if portrait else PhoneOrientation.LANDSCAPE,
        float(x), float(y), pressure, area, orient,
    )


def make_stroke(xy, t=None, prev_end=None, pressures=None, orients=None, **kw) -> Stroke:
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    t = np.arange(n) * 10.0 if t is None else t
    samples = []
    for k in range(n):
        a = Action.DOWN if k == 0 else Action.UP if k == n - 1 else Action.MOVE
        samples.append(
            event(t[k], a.value, xy[k, 0], xy[k, 1],
                  pressure=0.5 if pressures is None else pressures[k],
                  orient=0.0 if orients is None else orients[k], **kw)
        )
    return Stroke(tuple(samples), prev_end)


def stroke_from_angles(angles, step=0.01, start=(0.5, 0.5)) -> Stroke:
    """Segments of length ``step`` at the given math-frame angles (y up)."""
    pts = [np.array(start, dtype=float)]
    for a in angles:
        # screen y grows downward
        pts.append(pts[-1] + step * np.array([math.cos(a), -math.sin(a)]))
    return make_stroke(np.array(pts))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def linear_scan_knn(X, q, k):
    """Exhaustive neighbours; ties to the lower index."""
    d = [(float(((X[i] - q) ** 2).sum()), i) for i in range(len(X))]
    d.sort()
    return [i for _, i in d[:k]], [dd for dd, _ in d[:k]]


def entropy_counter(labels) -> float:
    c = Counter(labels)
    n = sum(c.values())
    return -sum(v / n * math.log(v / n) for v in c.values())


def relative_mi_oracle(bins, users) -> float:
    """1 - H(U|F)/H(U) from explicit (bin, user) counting."""
    bins = list(bins)
    users = list(users)
    n = len(users)
    h_u = entropy_counter(users)
    by_bin: dict = {}
    for b, u in zip(bins, users):
        by_bin.setdefault(b, []).append(u)
    h_cond = sum(len(us) / n * entropy_counter(us) for us in by_bin.values())
    return 1.0 - h_cond / h_u


def brute_force_eer(scores, genuine) -> float:
    """Enumerate every threshold, find where FAR - FRR changes sign, interpolate."""
    scores = [float(s) for s in scores]
    genuine = [bool(g) for g in genuine]
    gen = [s for s, g in zip(scores, genuine) if g]
    imp = [s for s, g in zip(scores, genuine) if not g]
    ths = [-math.inf] + sorted(set(scores)) + [math.inf]
    pts = []
    for th in ths:
        far = sum(1 for s in imp if s >= th) / len(imp)
        frr = sum(1 for s in gen if s < th) / len(gen)
        pts.append((far, frr))
    for j, (far, frr) in enumerate(pts):
        if far - frr <= 0:
            if far == frr:
                return far
            pf, pr = pts[j - 1]
            d0, d1 = pf - pr, far - frr
            lam = d0 / (d0 - d1)
            return pf + lam * (far - pf)
    raise AssertionError("FAR - FRR never reached zero")


def project_box_hyperplane(v, y, C):
    """Euclidean projection of v onto {0 <= a <= C, y'a = 0}, y in {-1, +1}.

    h(mu) = y . clip(v - mu*y, 0, C) is piecewise linear and non-increasing in
    mu; evaluate it at every breakpoint and interpolate to its root.
    """
    bps = np.unique(np.concatenate([v * y, (v - C) * y]))
    h = (np.clip(v[None, :] - bps[:, None] * y[None, :], 0.0, C) * y[None, :]).sum(axis=1)
    j = int(np.searchsorted(-h, 0.0))  # first breakpoint with h <= 0
    if j == 0:
        mu = bps[0]
    elif j == len(bps):
        mu = bps[-1]
    else:
        h0, h1 = h[j - 1], h[j]
        mu = bps[j - 1] + (bps[j] - bps[j - 1]) * (h0 / (h0 - h1) if h0 != h1 else 0.0)
    return np.clip(v - mu * y, 0.0, C)


def qp_oracle(K, y, C, iters=5000):
    """min 0.5 a'Qa - 1'a  s.t.  0 <= a <= C, y'a = 0, by accelerated projected gradient."""
    Q = (y[:, None] * y[None, :]) * K
    L = np.linalg.eigvalsh(Q).max() + 1e-12

    def f(a):
        return 0.5 * a @ Q @ a - a.sum()

    a = np.zeros(len(y))
    z = a.copy()
    t = 1.0
    for _ in range(iters):
        a_next = project_box_hyperplane(z - (Q @ z - 1.0) / L, y, C)
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        z = a_next + (t - 1) / t_next * (a_next - a)
        if f(a_next) > f(a):  # adaptive restart
            z = a_next
            t_next = 1.0
        a, t = a_next, t_next
    return a, f(a)


def lockout_scanner(decisions: str, t: int) -> list[int]:
    """Indices (into the decision string) at which a lockout fires.

    After a lockout the machine is in the challenge phase and ignores the rest.
    """
    run = 0
    for i, d in enumerate(decisions):
        run = 0 if d == "A" else run + 1
        if run == t:
            return [i]
    return []
