"""Numerical audit of the lower-bound construction.

Covers the partition of the action triangle into left/top/square/triangle/
exploit/white regions, the KL divergence of the three-outcome feedback
channel (buy, sell, no trade) between the base and the perturbed valuation
law, and the structural facts about the perturbed instance: where the best
pair is, the flat 1/8 plateau, the explore-region payoff cap, Lipschitz
constants and the CDF growth bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import BidAskPair
from .envs import (
    C_PLAT,
    C_SPIKE,
    HARD_MARKET_MEAN,
    P_EXPLOIT,
    P_LEFT,
    P_RIGHT,
    EnvironmentSpec,
    HardInstanceParams,
    base_cdf_array,
    expected_utility,
    expected_utility_array,
    perturbed_cdf,
    perturbed_cdf_array,
    tent_array,
)

KL_EXPLOIT_CONST = Fraction(2, 81)
KL_EXPLORE_CONST = Fraction(65, 9)
ROUNDOFF = 1e-12


@dataclass(frozen=True)
class Region:
    tag: str
    i: int | None = None
    j: int | None = None

    def __str__(self):
        name = self.tag.capitalize()
        if self.i is None:
            return name
        if self.j is None:
            return f"{name}({self.i})"
        return f"{name}({self.i},{self.j})"

    @property
    def is_exploit(self):
        return self.tag == "exploit"

    @property
    def is_explore(self):
        return self.tag in ("left", "top", "square", "triangle")


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def classify_region(b, a, K: int) -> Region:
    """Region of the pair ``(b, a)`` for the construction with ``K`` strips.

    Strips have width ``eps = 1/(16K)`` and tile [3/16, 1/4]. Comparisons are
    exact (floats are converted to fractions). Boundary points shared by two
    regions go to the first match in the order left, top, exploit,
    square/triangle.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if not 0 <= b <= a <= 1:
        raise ValueError(f"({b}, {a}) is not a valid bid/ask pair")
    B, A = Fraction(b), Fraction(a)
    per = 16 * K  # strips per unit length

    if B <= P_LEFT and P_LEFT <= A <= P_RIGHT:
        return Region("left", max(1, _ceil((P_RIGHT - A) * per)))
    if P_LEFT <= B <= P_RIGHT:
        i = max(1, _ceil((B - P_LEFT) * per))
        if P_RIGHT <= A <= P_EXPLOIT:
            return Region("top", i)
        if A > P_EXPLOIT:
            return Region("exploit", i)
        if B > P_LEFT:
            # here B <= A < P_RIGHT
            j = (P_RIGHT - A) * per
            j = j.numerator // j.denominator + 1
            if i + j <= K:
                return Region("square", i, j)
            return Region("triangle", i)
    return Region("white")


def region_predicates(K: int):
    """Each region's defining interval conditions, written out one by one.

    Returns ``[(Region, predicate)]`` where ``predicate(b, a)`` works on
    scalars or numpy arrays. Kept deliberately literal, as a second route to
    cross-check :func:`classify_region`.
    """
    eps = 1 / (16 * K)
    pl, pr, pe = 3 / 16, 1 / 4, 3 / 4
    preds = []
    for i in range(1, K + 1):
        if i == 1:
            preds.append((Region("left", 1),
                          lambda b, a: (b <= pl) & (pr - eps <= a) & (a <= pr)))
        else:
            preds.append((Region("left", i),
                          lambda b, a, i=i: (b <= pl) & (pr - i * eps <= a) & (a < pr - (i - 1) * eps)))
    for i in range(1, K + 1):
        if i == 1:
            bstrip = lambda b: (pl <= b) & (b <= pl + eps)  # noqa: E731
        else:
            bstrip = lambda b, i=i: (pl + (i - 1) * eps < b) & (b <= pl + i * eps)  # noqa: E731
        preds.append((Region("top", i),
                      lambda b, a, s=bstrip: s(b) & (pr <= a) & (a <= pe)))
        preds.append((Region("exploit", i),
                      lambda b, a, s=bstrip: s(b) & (pe < a)))
    for i in range(1, K + 1):
        for j in range(1, K + 1 - i):
            preds.append((Region("square", i, j),
                          lambda b, a, i=i, j=j: (pl + (i - 1) * eps < b) & (b <= pl + i * eps)
                          & (pr - j * eps < a) & (a <= pr - (j - 1) * eps)))
    for k in range(1, K + 1):
        preds.append((Region("triangle", k),
                      lambda b, a, k=k: (pl + (k - 1) * eps < b) & (b <= pl + k * eps)
                      & (pl + (k - 1) * eps < a) & (a <= pl + k * eps)))
    return preds


def partition_audit(K: int, n_points: int, rng) -> dict:
    """Sample points of the triangle and count how many regions claim each.

    White is whatever no listed region claims, so a point passes when at
    most one predicate holds and :func:`classify_region` agrees with it.
    """
    u = rng.random((n_points, 2))
    b, a = u.min(axis=1), u.max(axis=1)
    preds = region_predicates(K)
    hits = np.zeros(n_points, dtype=int)
    owner = np.full(n_points, -1)
    for idx, (_, pred) in enumerate(preds):
        mask = pred(b, a)
        hits += mask
        owner = np.where(mask, idx, owner)
    agree = 0
    for n in range(n_points):
        got = classify_region(float(b[n]), float(a[n]), K)
        want = preds[owner[n]][0] if owner[n] >= 0 else Region("white")
        agree += got == want
    return {
        "K": K,
        "samples": n_points,
        "double_matches": int(np.sum(hits > 1)),
        "passed_points": int(agree - np.sum(hits > 1)),
        "agree_with_classifier": int(agree),
        "white": int(np.sum(hits == 0)),
    }


# ---------------------------------------------------------------------------
# feedback-channel KL


def _excess(x):
    """``x - log1p(x)`` for ``x > -1``, accurate (and nonnegative) near 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = xs * xs * (0.5 - xs * (1 / 3 - xs * (0.25 - xs * (0.2 - xs / 6))))
    xl = x[~small]
    with np.errstate(divide="ignore"):
        out[~small] = xl - np.log1p(xl)
    return out


def categorical_kl(p, q):
    """KL(p || q) between categorical distributions; ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    total = 0.0
    for pi, qi in zip(p, q):
        if pi == 0:
            continue
        if qi == 0:
            return math.inf
        total += pi * math.log(pi / qi)
    return total


def feedback_probabilities(b, a, cdf):
    """(P[buy], P[sell], P[no trade]) for the pair under valuation CDF ``cdf``."""
    Fb, Fa = cdf(b), cdf(a)
    return Fb, 1 - Fa, Fa - Fb


def feedback_kl_array(b, a, params: HardInstanceParams):
    """KL from the base feedback law to the perturbed one, elementwise.

    Written as ``sum_i p_i * h(delta_i / p_i)`` with ``h(x) = x - log1p(x)``,
    where ``delta_i`` is the perturbation's shift of outcome ``i``; every
    term is nonnegative, so the sum is too.
    """
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    Fb, Fa = base_cdf_array(b), base_cdf_array(a)
    db = params.eps / 18 * tent_array(params.r, params.eps, b)
    da = params.eps / 18 * tent_array(params.r, params.eps, a)
    p = np.stack([Fb, 1.0 - Fa, Fa - Fb])
    delta = np.stack([db, -da, da - db])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p > 0, delta / np.where(p > 0, p, 1.0), 0.0)
    terms = np.where(p > 0, p * _excess(ratio), delta)
    return terms.sum(axis=0)


def feedback_kl(b, a, params: HardInstanceParams) -> float:
    if not 0 <= b <= a <= 1:
        raise ValueError(f"({b}, {a}) is not a valid bid/ask pair")
    return float(feedback_kl_array(np.array([b]), np.array([a]), params)[0])


# ---------------------------------------------------------------------------
# lemma audits


def _strip(K, i):
    eps = 1 / (16 * K)
    return 3 / 16 + (i - 1) * eps, 3 / 16 + i * eps


def sample_region(region: Region, K: int, n: int, rng):
    """Uniform points inside a (non-white) region."""
    eps = 1 / (16 * K)
    pl, pr, pe = 3 / 16, 1 / 4, 3 / 4
    if region.tag == "left":
        b = rng.uniform(0.0, pl, n)
        a = rng.uniform(pr - region.i * eps, pr - (region.i - 1) * eps, n)
    elif region.tag in ("top", "exploit"):
        b = rng.uniform(*_strip(K, region.i), n)
        a = rng.uniform(pr, pe, n) if region.tag == "top" else rng.uniform(pe, 1.0, n)
    elif region.tag == "square":
        b = rng.uniform(*_strip(K, region.i), n)
        a = rng.uniform(pr - region.j * eps, pr - (region.j - 1) * eps, n)
    elif region.tag == "triangle":
        u = rng.uniform(*_strip(K, region.i), (n, 2))
        b, a = u.min(axis=1), u.max(axis=1)
    else:
        raise ValueError(f"cannot sample {region}")
    return b, a


def regions_for_spike(K: int, k: int):
    """Regions whose feedback is informative about spike ``k``."""
    out = [Region("exploit", k), Region("left", k), Region("top", k), Region("triangle", k)]
    out += [Region("square", k, j) for j in range(1, K - k + 1)]
    out += [Region("square", i, k) for i in range(1, K - k + 1)]
    return out


def check_kl_bounds(K: int, samples_per_region: int, rng) -> dict:
    """Sample every region tied to each spike and compare KL with the lemma.

    Exploit points must stay below ``(2/81) eps^2`` and explore points below
    ``(65/9) eps``. Violations are counted, not raised.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    eps = 1 / (16 * K)
    exploit_bound = float(KL_EXPLOIT_CONST) * eps**2
    explore_bound = float(KL_EXPLORE_CONST) * eps
    rows = []
    for k in range(1, K + 1):
        params = HardInstanceParams.from_K(K, k)
        for region in regions_for_spike(K, k):
            b, a = sample_region(region, K, samples_per_region, rng)
            kl = feedback_kl_array(b, a, params)
            bound = exploit_bound if region.is_exploit else explore_bound
            rows.append({
                "spike": k,
                "region": str(region),
                "kind": "exploit" if region.is_exploit else "explore",
                "samples": int(kl.size),
                "max_kl": float(kl.max()),
                "min_kl": float(kl.min()),
                "bound": bound,
                "violations": int(np.sum(kl > bound + ROUNDOFF)),
                "max_ratio": float(kl.max() / bound),
            })
    exploit = [r for r in rows if r["kind"] == "exploit"]
    explore = [r for r in rows if r["kind"] == "explore"]
    return {
        "K": K,
        "eps": eps,
        "c1": "2/81",
        "c2": "65/9",
        "exploit_bound": exploit_bound,
        "explore_bound": explore_bound,
        "max_exploit_kl": max(r["max_kl"] for r in exploit),
        "max_ratio_exploit": max(r["max_ratio"] for r in exploit),
        "max_ratio_explore": max(r["max_ratio"] for r in explore),
        "negative_kl": int(sum(r["min_kl"] < 0 for r in rows)),
        "violations": int(sum(r["violations"] for r in rows)),
        "regions": rows,
    }


def _explore_mask(b, a):
    pl, pr, pe = 3 / 16, 1 / 4, 3 / 4
    left = (b <= pl) & (a >= pl) & (a <= pr)
    rest = (b >= pl) & (b <= pr) & (a >= b) & (a <= pe)
    return left | rest


def check_construction(K: int, k: int, grid: int = 1024) -> dict:
    """Structural facts about spike ``k`` of the ``K``-strip construction.

    Checks that the spike pair ``(r, 1)`` beats 1/8 by at least
    ``eps/72``; that bids on (3/16, 3/4] away from the tent earn exactly 1/8
    with ask 1 (exact rational arithmetic); that the explore region never
    beats ``1/8 - 1/32`` on a dense grid; and that the grid maximiser over
    the whole triangle has its bid in spike ``k``'s strip and ask 1.
    """
    params = HardInstanceParams.from_K(K, k)
    spec = EnvironmentSpec.hard_instance(K, k)
    r, eps = params.exact()
    checks = {}

    # spike value, exactly
    spike = _exact_expected(r, eps, r, Fraction(1))
    spike_floor = Fraction(1, 8) + C_SPIKE * eps
    checks["spike"] = {"value": float(spike), "bound": float(spike_floor),
                       "passed": spike >= spike_floor}

    # plateau: rational bids in (3/16, 3/4] outside the tent
    bids = [P_LEFT + (P_EXPLOIT - P_LEFT) * Fraction(i, 256) for i in range(1, 257)]
    bids = [x for x in bids if not (r - eps / 2 <= x <= r + eps / 2)]
    vals = [_exact_expected(r, eps, x, Fraction(1)) for x in bids]
    checks["plateau"] = {
        "points": len(bids),
        "min": float(min(vals)),
        "max": float(max(vals)),
        "passed": all(val == Fraction(1, 8) for val in vals),
    }

    # explore-region cap on a dense grid
    cap = Fraction(1, 8) - C_PLAT
    bb = np.linspace(0.0, 0.25, grid + 1)
    aa = np.linspace(3 / 16, 3 / 4, grid + 1)
    B, A = np.meshgrid(bb, aa, indexing="ij")
    mask = _explore_mask(B, A)
    ev = expected_utility_array(spec, B[mask], A[mask])
    at_corner = _exact_expected(r, eps, r, P_EXPLOIT)
    checks["explore_cap"] = {
        "grid_max": float(ev.max()),
        "value_at_spike_bid_exploit_ask": float(at_corner),
        "bound": float(cap),
        "passed": bool(ev.max() <= float(cap) + ROUNDOFF) and at_corner <= cap,
    }

    # argmax over the triangle
    xs = np.linspace(0.0, 1.0, 16 * 16 * K * 16 + 1)
    buy = expected_utility_array(spec, xs, np.ones_like(xs))
    sell = expected_utility_array(spec, np.zeros_like(xs), xs) - expected_utility_array(
        spec, np.zeros_like(xs), np.ones_like(xs))
    best_sell_from = np.maximum.accumulate(sell[::-1])[::-1]
    total = buy + best_sell_from
    ib = int(np.argmax(total))
    lo, hi = _strip(K, k)
    at_ask_one = float(expected_utility_array(spec, xs[ib], 1.0))
    checks["argmax"] = {
        "bid": float(xs[ib]),
        "strip": [lo, hi],
        "grid_max": float(total[ib]),
        "value_with_ask_one": at_ask_one,
        "passed": bool(lo < xs[ib] <= hi and abs(at_ask_one - total[ib]) <= ROUNDOFF),
    }
    return {"K": K, "k": k, "r": float(r), "eps": float(eps),
            "passed": all(c["passed"] for c in checks.values()), "checks": checks}


def _exact_expected(r, eps, b, a):
    """Expected utility of ``(b, a)`` under spike ``(r, eps)``, in fractions."""
    F = lambda x: perturbed_cdf(r, eps, x)  # noqa: E731
    mu = HARD_MARKET_MEAN
    return (mu - b) * F(b) + (a - mu) * (1 - F(a))


def lipschitz_audit(params: HardInstanceParams, n_pairs: int, rng) -> dict:
    """Largest finite-difference slopes of the perturbed CDF and of the tent."""
    x, y = rng.random(n_pairs), rng.random(n_pairs)
    # half the pairs inside the tent neighbourhood, where slopes are steepest
    half = n_pairs // 2
    x[:half] = params.r + (rng.random(half) - 0.5) * 2 * params.eps
    y[:half] = params.r + (rng.random(half) - 0.5) * 2 * params.eps
    keep = x != y
    x, y = x[keep], y[keep]
    dF = np.abs(perturbed_cdf_array(params.r, params.eps, x)
                - perturbed_cdf_array(params.r, params.eps, y))
    dT = np.abs(tent_array(params.r, params.eps, x) - tent_array(params.r, params.eps, y))
    gap = np.abs(x - y)
    return {
        "cdf_slope": float(np.max(dF / gap)),
        "cdf_bound": 4.0,
        "tent_slope": float(np.max(dT / gap)),
        "tent_bound": 2 / params.eps,
    }


def cdf_growth_audit(n_pairs: int, rng) -> dict:
    """Minimum of ``(F(a) - F(b)) / (a - b)`` over pairs outside [3/4, 1]^2."""
    u = rng.random((n_pairs, 2))
    b, a = u.min(axis=1), u.max(axis=1)
    keep = (b < 0.75) & (a > b)
    b, a = b[keep], a[keep]
    ratio = (base_cdf_array(a) - base_cdf_array(b)) / (a - b)
    return {"pairs": int(b.size), "min_ratio": float(ratio.min()), "bound": 1 / 6}


def spike_value(K: int, k: int) -> float:
    params = HardInstanceParams.from_K(K, k)
    return float(expected_utility(EnvironmentSpec.hard_instance(K, k), BidAskPair(params.r, 1.0)))
