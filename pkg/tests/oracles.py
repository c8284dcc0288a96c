"""Independent reference computations used by the test-suite."""
import itertools
from fractions import Fraction

import numpy as np

LATTICE_V = 9  # valuations i/9, i = 0..9 (10 points)
LATTICE_M = 8  # market prices j/8
SCALE = LATTICE_V * LATTICE_M


def _candidates():
    # every lattice point approached from below, hit exactly, approached from above
    out = []
    for i in range(LATTICE_V + 1):
        x = i * LATTICE_M
        for s in (-1, 0, 1):
            if (i == 0 and s < 0) or (i == LATTICE_V and s > 0):
                continue
            out.append((x, s))
    return np.array(out)


_CAND = _candidates()


def enumerate_best(v_idx, m_idx) -> Fraction:
    """Supremum of the hindsight objective on a lattice instance, exactly.

    Between lattice points the objective is affine in each price, so its
    supremum over the triangle is a limit at lattice points; every one-sided
    limit of (bid, ask) is enumerated and evaluated in integer units of 1/72.
    """
    v = np.asarray(v_idx) * LATTICE_M
    m = np.asarray(m_idx) * LATTICE_V
    xb, sb = _CAND[:, 0][:, None], _CAND[:, 1][:, None]
    buy = (xb > v) | ((xb == v) & (sb >= 0))
    sell = (xb < v) | ((xb == v) & (sb < 0))
    f = np.where(buy, m - xb, 0).sum(axis=1)
    g = np.where(sell, xb - m, 0).sum(axis=1)
    x, s = _CAND[:, 0], _CAND[:, 1]
    feasible = (x[:, None] < x[None, :]) | ((x[:, None] == x[None, :]) & (s[:, None] <= s[None, :]))
    total = np.where(feasible, f[:, None] + g[None, :], np.iinfo(np.int64).min)
    return Fraction(int(total.max()), SCALE)


def lattice_instances(max_T=5, seed=0):
    """Every multiset of at most ``max_T`` lattice valuations, with random lattice prices."""
    rng = np.random.default_rng(seed)
    for T in range(1, max_T + 1):
        for vs in itertools.combinations_with_replacement(range(LATTICE_V + 1), T):
            ms = rng.integers(0, LATTICE_M + 1, size=T)
            yield list(vs), ms.tolist()


def as_fraction_rounds(v_idx, m_idx):
    return ([Fraction(j, LATTICE_M) for j in m_idx], [Fraction(i, LATTICE_V) for i in v_idx])
