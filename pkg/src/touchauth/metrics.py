"""FAR/FRR sweeps and the equal error rate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Roc:
    thresholds: np.ndarray  # ascending, starts at -inf and ends at +inf
    far: np.ndarray
    frr: np.ndarray
    eer: float
    eer_threshold: float

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.far.tolist(), self.frr.tolist()))


def roc_and_eer(scores, genuine) -> Roc:
    """Sweep 'accept if score >= threshold' over every distinct score.

    EER is read off by linear interpolation between the two sweep points
    where FAR - FRR changes sign.
    """
    s = np.asarray(scores, dtype=np.float64)
    g = np.asarray(genuine, dtype=bool)
    if s.shape != g.shape:
        raise ValueError("scores and labels differ in length")
    gen = np.sort(s[g])
    imp = np.sort(s[~g])
    if gen.size == 0 or imp.size == 0:
        raise ValueError("need at least one genuine and one impostor decision")
    th = np.concatenate([[-np.inf], np.unique(s), [np.inf]])
    far = (imp.size - np.searchsorted(imp, th, side="left")) / imp.size
    frr = np.searchsorted(gen, th, side="left") / gen.size
    d = far - frr
    j = int(np.argmax(d <= 0))
    if d[j] == 0:
        eer = float(far[j])
        eth = float(th[j])
    else:
        lam = d[j - 1] / (d[j - 1] - d[j])
        eer = float(far[j - 1] + lam * (far[j] - far[j - 1]))
        eth = float(th[j] if lam >= 0.5 else th[j - 1])
    return Roc(th, far, frr, eer, eth)


def eer(scores, genuine) -> float:
    return roc_and_eer(scores, genuine).eer


def oriented(e: float) -> float:
    """Fold an EER onto [0, 0.5]; a score whose sign is backwards is still informative."""
    return min(e, 1.0 - e)
