"""Round-generating processes.

Three families are provided:

* ``smooth_iid`` -- independent market price and valuation drawn from one of
  the built-in CDFs;
* ``hard`` -- the perturbed lower-bound family: market price uniform on
  [7/8, 1], valuation with the base density plus a +-1/9 bump of width
  ``eps`` around ``r``;
* ``unlearnable`` -- (m, v) uniform on {(0, d), (1, c)};
* ``custom`` -- a recorded (m, v) trace replayed in order.

Scalar density/CDF helpers use plain arithmetic with ``Fraction`` constants,
so they return exact rationals when given ``Fraction`` inputs. The ``*_array``
variants are vectorised float versions used by the samplers and audits.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import BidAskPair, MarketRound, utility

P_LEFT = Fraction(3, 16)
P_RIGHT = Fraction(1, 4)
P_EXPLOIT = Fraction(3, 4)
C_PLAT = Fraction(1, 32)
C_SPIKE = Fraction(1, 72)

SUPPORT_END = Fraction(7, 8)
HARD_MARKET_LOW = Fraction(7, 8)
HARD_MARKET_MEAN = Fraction(15, 16)
PERTURB_HI = Fraction(11, 16)

BISECT_TOL = 1e-12
# slack on the admissible-set check: r -+ eps/2 is rounded in floats
_XI_SLACK = 1e-12


def _check_unit(x):
    if not 0 <= x <= 1:
        raise ValueError(f"argument must lie in [0, 1], got {x!r}")


# ---------------------------------------------------------------------------
# base density and CDF


def base_pdf(x):
    _check_unit(x)
    if x <= P_LEFT:
        return Fraction(8, 9) if isinstance(x, Fraction) else 8 / 9
    if x <= P_EXPLOIT:
        return Fraction(1, 8) / (Fraction(15, 16) - x) ** 2
    if x <= SUPPORT_END:
        return Fraction(8, 3) if isinstance(x, Fraction) else 8 / 3
    return 0 * x


def base_cdf(x):
    _check_unit(x)
    if x <= P_LEFT:
        return Fraction(8, 9) * x
    if x <= P_EXPLOIT:
        return Fraction(1, 8) / (Fraction(15, 16) - x)
    if x <= SUPPORT_END:
        return Fraction(8, 3) * (x - Fraction(1, 2))
    return Fraction(1) if isinstance(x, Fraction) else 1.0


def base_cdf_array(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    lo = x <= 3 / 16
    mid = (x > 3 / 16) & (x <= 3 / 4)
    hi = (x > 3 / 4) & (x <= 7 / 8)
    out[lo] = (8 / 9) * x[lo]
    out[mid] = 0.125 / (15 / 16 - x[mid])
    out[hi] = (8 / 3) * (x[hi] - 0.5)
    return out


def base_pdf_array(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    lo = x <= 3 / 16
    mid = (x > 3 / 16) & (x <= 3 / 4)
    hi = (x > 3 / 4) & (x <= 7 / 8)
    out[lo] = 8 / 9
    out[mid] = 0.125 / (15 / 16 - x[mid]) ** 2
    out[hi] = 8 / 3
    return out


# ---------------------------------------------------------------------------
# tent perturbation


def check_admissible(r, eps):
    """Raise unless the tent of width ``eps`` at ``r`` sits inside [3/16, 11/16]."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")
    lo, hi = r - eps / 2, r + eps / 2
    if lo < P_LEFT - _XI_SLACK or hi > PERTURB_HI + _XI_SLACK:
        raise ValueError(f"tent [{lo}, {hi}] leaves [3/16, 11/16]")


def tent(r, eps, x):
    check_admissible(r, eps)
    if r - eps / 2 <= x <= r:
        return 1 - 2 * (r - x) / eps
    if r < x <= r + eps / 2:
        return 1 - 2 * (x - r) / eps
    return 0 * x


def tent_array(r, eps, x):
    x = np.asarray(x, dtype=float)
    return np.clip(1.0 - 2.0 * np.abs(x - r) / eps, 0.0, None)


def perturbed_pdf(r, eps, x):
    _check_unit(x)
    check_admissible(r, eps)
    bump = Fraction(1, 9)
    if r - eps / 2 <= x <= r:
        return base_pdf(x) + bump
    if r < x <= r + eps / 2:
        return base_pdf(x) - bump
    return base_pdf(x)


def perturbed_pdf_array(r, eps, x):
    x = np.asarray(x, dtype=float)
    out = base_pdf_array(x)
    out[(x >= r - eps / 2) & (x <= r)] += 1 / 9
    out[(x > r) & (x <= r + eps / 2)] -= 1 / 9
    return out


def perturbed_cdf(r, eps, x):
    _check_unit(x)
    return base_cdf(x) + eps / 18 * tent(r, eps, x)


def perturbed_cdf_array(r, eps, x):
    return base_cdf_array(x) + eps / 18 * tent_array(r, eps, x)


# ---------------------------------------------------------------------------
# hard-instance constants


def ceil_cbrt(T: int) -> int:
    """Smallest integer K with K**3 >= T."""
    if T < 1:
        raise ValueError("T must be a positive integer")
    K = max(1, round(T ** (1 / 3)))
    while K**3 < T:
        K += 1
    while K > 1 and (K - 1) ** 3 >= T:
        K -= 1
    return K


@dataclass(frozen=True)
class HardInstanceParams:
    K: int
    k: int
    eps: float
    r: float
    p_left: float = 3 / 16
    p_right: float = 1 / 4
    p_exploit: float = 3 / 4
    c_plat: float = 1 / 32
    c_spike: float = 1 / 72

    @classmethod
    def from_K(cls, K: int, k: int) -> "HardInstanceParams":
        if K < 1:
            raise ValueError(f"K must be >= 1, got {K}")
        if not 1 <= k <= K:
            raise ValueError(f"spike index k={k} outside [1, {K}]")
        eps = 1 / (16 * K)
        return cls(K=K, k=k, eps=eps, r=3 / 16 + (k - 0.5) * eps)

    def exact(self):
        """(r, eps) as fractions, for exact arithmetic in audits."""
        eps = Fraction(1, 16 * self.K)
        return P_LEFT + (self.k - Fraction(1, 2)) * eps, eps


def hard_instance_params(T: int, k: int) -> HardInstanceParams:
    return HardInstanceParams.from_K(ceil_cbrt(T), k)


# ---------------------------------------------------------------------------
# inverse-CDF sampling


def _bisect(cdf, u, lo, hi, tol):
    u = np.asarray(u, dtype=float)
    lo = np.full_like(u, lo)
    hi = np.full_like(u, hi)
    n_iter = max(1, math.ceil(math.log2((hi.max(initial=1.0) - lo.min(initial=0.0)) / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_hard_valuation_array(params: HardInstanceParams, u):
    """Push uniforms through the inverse of the perturbed CDF by bisection."""
    return _bisect(
        lambda x: perturbed_cdf_array(params.r, params.eps, x),
        u, 0.0, 7 / 8, BISECT_TOL,
    )


def sample_hard_valuation(params: HardInstanceParams, u: float) -> float:
    if not 0 <= u < 1:
        raise ValueError(f"u must lie in [0, 1), got {u!r}")
    return float(sample_hard_valuation_array(params, np.array([u]))[0])


def sample_base_valuation_array(u):
    return _bisect(base_cdf_array, u, 0.0, 7 / 8, BISECT_TOL)


# ---------------------------------------------------------------------------
# environment specs

KINDS = ("smooth_iid", "hard", "unlearnable", "custom")
VALUATIONS = ("base", "uniform")
MARKETS = ("hard", "uniform")


@dataclass(frozen=True)
class EnvironmentSpec:
    """Parametric description of a round-generating process.

    ``hard`` instances may leave ``K`` unset; :meth:`for_horizon` then fills it
    with the ceiling cube root of the horizon.
    """

    kind: str
    valuation: str = "base"
    market: str = "hard"
    K: int | None = None
    k: int = 1
    c: float = 0.49
    d: float = 0.51
    trace_path: str | None = None
    trace: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.kind == "smooth_iid":
            if self.valuation not in VALUATIONS:
                raise ValueError(f"unknown valuation CDF {self.valuation!r}")
            if self.market not in MARKETS:
                raise ValueError(f"unknown market distribution {self.market!r}")
        elif self.kind == "hard":
            if self.K is not None:
                HardInstanceParams.from_K(self.K, self.k)
            elif self.k < 1:
                raise ValueError(f"spike index must be >= 1, got {self.k}")
        elif self.kind == "unlearnable":
            if not 0 < self.c < self.d < 1:
                raise ValueError(f"need 0 < c < d < 1, got c={self.c}, d={self.d}")
        elif self.trace is None and self.trace_path is None:
            raise ValueError("custom environment needs a trace or trace_path")

    # constructors ---------------------------------------------------------

    @classmethod
    def hard_instance(cls, K=None, k=1):
        return cls(kind="hard", K=K, k=k)

    @classmethod
    def unlearnable(cls, c=0.49, d=0.51):
        return cls(kind="unlearnable", c=c, d=d)

    @classmethod
    def smooth_iid(cls, valuation="base", market="hard"):
        return cls(kind="smooth_iid", valuation=valuation, market=market)

    @classmethod
    def custom(cls, rounds=None, path=None):
        if rounds is not None:
            rounds = tuple(
                r if isinstance(r, MarketRound) else MarketRound(*r) for r in rounds
            )
        return cls(kind="custom", trace=rounds, trace_path=None if path is None else str(path))

    def for_horizon(self, T: int) -> "EnvironmentSpec":
        if self.kind == "hard" and self.K is None:
            return EnvironmentSpec(kind="hard", K=ceil_cbrt(T), k=self.k)
        return self

    @property
    def params(self) -> HardInstanceParams:
        if self.kind != "hard":
            raise ValueError("only hard instances carry HardInstanceParams")
        if self.K is None:
            raise ValueError("hard instance without K; call for_horizon(T) first")
        return HardInstanceParams.from_K(self.K, self.k)

    def rounds(self) -> tuple:
        if self.kind != "custom":
            raise ValueError("only custom environments replay a trace")
        if self.trace is not None:
            return self.trace
        return load_trace(self.trace_path)

    # plain-text config ------------------------------------------------------

    def to_config(self) -> dict[str, str]:
        out = {"kind": self.kind}
        if self.kind == "smooth_iid":
            out.update(valuation=self.valuation, market=self.market)
        elif self.kind == "hard":
            if self.K is not None:
                out["spike_count"] = str(self.K)
            out["spike"] = str(self.k)
        elif self.kind == "unlearnable":
            out.update(c=repr(float(self.c)), d=repr(float(self.d)))
        else:
            if self.trace_path is None:
                raise ValueError("in-memory traces cannot be written to a config")
            out["trace"] = self.trace_path
        return out

    @classmethod
    def from_config(cls, entries) -> "EnvironmentSpec":
        e = {key.lower(): val for key, val in dict(entries).items()}
        kind = e.get("kind")
        if kind == "smooth_iid":
            return cls.smooth_iid(e.get("valuation", "base"), e.get("market", "hard"))
        if kind == "hard":
            K = e.get("spike_count")
            return cls.hard_instance(K=None if K in (None, "") else int(K), k=int(e.get("spike", 1)))
        if kind == "unlearnable":
            return cls.unlearnable(float(e.get("c", 0.49)), float(e.get("d", 0.51)))
        if kind == "custom":
            return cls.custom(path=e["trace"])
        raise ValueError(f"unknown environment kind {kind!r}")


def load_trace(path) -> tuple:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"m", "v"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: trace CSV needs columns m, v")
        return tuple(MarketRound(float(row["m"]), float(row["v"])) for row in reader)


def write_trace(path, rounds) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "v"])
        for rnd in rounds:
            w.writerow([repr(float(rnd.market_price)), repr(float(rnd.taker_valuation))])


# ---------------------------------------------------------------------------
# sampling


def _valuation_cdf(spec):
    if spec.kind == "hard":
        p = spec.params
        return lambda x: perturbed_cdf_array(p.r, p.eps, x)
    if spec.valuation == "base":
        return base_cdf_array
    return lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def _draw_iid(spec, u):
    """Map an (n, 2) block of uniforms to market prices and valuations."""
    if spec.kind == "hard" or spec.market == "hard":
        m = 7 / 8 + u[:, 0] / 8
    else:
        m = u[:, 0].copy()
    if spec.kind == "hard":
        v = sample_hard_valuation_array(spec.params, u[:, 1])
    elif spec.valuation == "base":
        v = sample_base_valuation_array(u[:, 1])
    else:
        v = u[:, 1].copy()
    return m, v


def sample_trace(spec: EnvironmentSpec, T: int, rng: np.random.Generator):
    """Draw ``T`` rounds as two arrays ``(m, v)``.

    Consumes the generator exactly as ``T`` successive :func:`next_round`
    calls would.
    """
    if spec.kind in ("smooth_iid", "hard"):
        return _draw_iid(spec, rng.random((T, 2)))
    if spec.kind == "unlearnable":
        heads = rng.random(T) < 0.5
        m = np.where(heads, 0.0, 1.0)
        v = np.where(heads, spec.d, spec.c)
        return m, v
    rounds = spec.rounds()
    if len(rounds) < T:
        raise ValueError(f"trace has {len(rounds)} rounds, {T} requested")
    m = np.array([r.market_price for r in rounds[:T]], dtype=float)
    v = np.array([r.taker_valuation for r in rounds[:T]], dtype=float)
    return m, v


def next_round(spec: EnvironmentSpec, t: int, rng: np.random.Generator) -> MarketRound:
    if spec.kind in ("smooth_iid", "hard"):
        m, v = _draw_iid(spec, rng.random((1, 2)))
        return MarketRound(float(m[0]), float(v[0]))
    if spec.kind == "unlearnable":
        if rng.random() < 0.5:
            return MarketRound(0.0, spec.d)
        return MarketRound(1.0, spec.c)
    return spec.rounds()[t]


# ---------------------------------------------------------------------------
# expected utility


def market_mean(spec: EnvironmentSpec):
    if spec.kind == "hard" or spec.market == "hard":
        return HARD_MARKET_MEAN
    return Fraction(1, 2)


def _scalar_cdf(spec):
    if spec.kind == "hard":
        r, eps = spec.params.exact()
        return lambda x: perturbed_cdf(r, eps, x)
    if spec.valuation == "base":
        return base_cdf
    return lambda x: x


def expected_utility(spec: EnvironmentSpec, pair: BidAskPair):
    """Closed-form expected one-round utility of a fixed pair.

    For independent (m, v) this is ``(E[m] - b) F(b) + (a - E[m]) (1 - F(a))``.
    """
    if spec.kind == "unlearnable":
        return 0.5 * utility(pair, 0.0, spec.d) + 0.5 * utility(pair, 1.0, spec.c)
    if spec.kind == "custom":
        raise ValueError("no closed form for a replayed trace")
    mu = market_mean(spec)
    F = _scalar_cdf(spec)
    return (mu - pair.bid) * F(pair.bid) + (pair.ask - mu) * (1 - F(pair.ask))


def expected_utility_array(spec: EnvironmentSpec, b, a):
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    if spec.kind == "unlearnable":
        c, d = spec.c, spec.d
        at_d = -b * (b >= d) + a * (a < d)
        at_c = (1.0 - b) * (b >= c) + (a - 1.0) * (a < c)
        return 0.5 * (at_d + at_c)
    if spec.kind == "custom":
        raise ValueError("no closed form for a replayed trace")
    mu = float(market_mean(spec))
    F = _valuation_cdf(spec)
    return (mu - b) * F(b) + (a - mu) * (1.0 - F(a))


def best_expected_value(spec: EnvironmentSpec, grid_size: int = 1 << 16) -> float:
    """Supremum of the expected one-round utility over all pairs.

    Closed form for hard and unlearnable instances; for smooth i.i.d. specs
    the separable objective is maximised on a dense grid and refined locally.
    """
    if spec.kind == "hard":
        p = spec.params
        return float(expected_utility(spec, BidAskPair(p.r, 1.0)))
    if spec.kind == "unlearnable":
        return 0.5
    if spec.kind == "custom":
        raise ValueError("no closed form for a replayed trace")
    from scipy.optimize import minimize_scalar

    mu = float(market_mean(spec))
    F = _valuation_cdf(spec)
    x = np.linspace(0.0, 1.0, grid_size + 1)
    buy = (mu - x) * F(x)
    sell = (x - mu) * (1.0 - F(x))
    step = 1.0 / grid_size

    def refine(fn, i):
        lo, hi = max(0.0, x[i] - step), min(1.0, x[i] + step)
        res = minimize_scalar(lambda t: -float(fn(np.array([t]))[0]),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        return res.x, max(-res.fun, float(fn(np.array([x[i]]))[0]))

    # both sides peak where the other side is unconstrained in every built-in;
    # fall back to the constrained grid optimum otherwise
    bi, si = int(np.argmax(buy)), int(np.argmax(sell))
    if x[bi] <= x[si]:
        b_star, b_val = refine(lambda t: (mu - t) * F(t), bi)
        a_star, a_val = refine(lambda t: (t - mu) * (1.0 - F(t)), si)
        if b_star <= a_star:
            return b_val + a_val
    best_sell_from = np.maximum.accumulate(sell[::-1])[::-1]
    return float(np.max(buy + best_sell_from))
