"""Representative-point selection for capping GP training-set size.

Large archives are summarized by a greedy max-min design in the (D+1)-space
of unit-cube coordinates plus a log-regret score, so the surrogate keeps both
spatial coverage and resolution near the incumbent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError
from .problems import Dataset


@dataclass(frozen=True)
class RegretScores:
    regret: np.ndarray        # r_i in [0, 1], 0 at the minimum, 1 at the maximum
    normalized: np.ndarray    # values rescaled to [0, 1]
    normalized_min: float     # smallest strictly positive normalized value


def log_regret(values) -> RegretScores:
    """Log-compressed regret of each value relative to the incumbent.

    r_i = (log(fbar_i + fbar_min) - log fbar_min) / (log(1 + fbar_min) - log fbar_min)
    with fbar the min-max normalized values and fbar_min their smallest
    positive entry.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise DegenerateDataError("need at least 2 values")
    f_min, f_max = float(np.min(values)), float(np.max(values))
    if f_max <= f_min:
        raise DegenerateDataError("all values equal; regret undefined")
    fbar = (values - f_min) / (f_max - f_min)
    positive = fbar[fbar > 0.0]
    fbar_min = float(np.min(positive))
    r = (np.log(fbar + fbar_min) - np.log(fbar_min)) / (np.log1p(fbar_min) - np.log(fbar_min))
    return RegretScores(regret=r, normalized=fbar, normalized_min=fbar_min)


def select_representatives(data: Dataset, n_gp: int) -> np.ndarray:
    """Greedy max-min representative indices, at most ``n_gp`` of them.

    Works in the (D+1)-space of coordinates and log regret (equal weight).
    The incumbent (r = 0) is always picked first; max-min ties resolve to the
    lowest index, so the result is deterministic.
    """
    if n_gp < 1:
        raise ValueError("n_gp must be positive")
    n = len(data)
    if n <= n_gp:
        return np.arange(n)
    scores = log_regret(data.values)
    feats = np.hstack([data.points, scores.regret[:, None]])

    first = int(np.flatnonzero(scores.regret == 0.0)[0])
    selected = [first]
    min_dist = np.linalg.norm(feats - feats[first], axis=1)
    min_dist[first] = -np.inf
    while len(selected) < n_gp:
        nxt = int(np.argmax(min_dist))
        selected.append(nxt)
        dist = np.linalg.norm(feats - feats[nxt], axis=1)
        min_dist = np.minimum(min_dist, dist)
        min_dist[nxt] = -np.inf
    # selection order is meaningful: element 0 is the incumbent
    return np.array(selected)
