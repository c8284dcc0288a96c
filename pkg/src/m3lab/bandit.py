"""Adversarial K-armed bandit cores with rewards in [0, 1].

Both cores expose the same three calls: ``arm_probabilities()``,
``select_arm(rng)`` and ``update(arm, reward)``. Rewards outside [0, 1] are
rejected; callers holding utilities in [-1, 1] go through
:func:`rescale_utility` first.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from itertools import accumulate

import numpy as np

ROOT_TOL = 1e-12


def rescale_utility(u: float) -> float:
    """Map a utility in [-1, 1] to a bandit reward in [0, 1]."""
    return (u + 1.0) / 2.0


def _check_reward(reward):
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {reward!r}")


class Exp3:
    """Exp3 with uniform exploration, tuned for a known horizon.

    Probabilities are ``(1 - gamma) * softmax(eta * S) + gamma / K`` where
    ``S`` holds the cumulative importance-weighted reward estimates and
    ``gamma = min(1, sqrt(K ln K / ((e - 1) T)))``, ``eta = gamma / K``.

    Only the played arm's weight changes per update, so the total weight is
    maintained incrementally and sampling is a single linear scan.
    """

    name = "exp3"

    def __init__(self, n_arms: int, horizon: int, gamma: float | None = None):
        if n_arms < 2:
            raise ValueError("need at least two arms")
        if horizon < 1:
            raise ValueError("horizon must be positive")
        self.n_arms = n_arms
        self.horizon = horizon
        if gamma is None:
            gamma = min(1.0, math.sqrt(n_arms * math.log(n_arms) / ((math.e - 1) * horizon)))
        self.gamma = gamma
        self.eta = gamma / n_arms
        self.estimates = [0.0] * n_arms
        self._shift = 0.0
        self._weights = [1.0] * n_arms
        self._total = float(n_arms)
        self.rounds = 0

    def arm_probabilities(self) -> np.ndarray:
        w = np.asarray(self._weights)
        p = (1.0 - self.gamma) * w / w.sum() + self.gamma / self.n_arms
        return p / p.sum()

    def _prob(self, arm):
        return (1.0 - self.gamma) * self._weights[arm] / self._total + self.gamma / self.n_arms

    def select_arm(self, rng) -> int:
        u = rng.random()
        if u < self.gamma:
            return min(int(u / self.gamma * self.n_arms), self.n_arms - 1)
        target = (u - self.gamma) / (1.0 - self.gamma) * self._total
        i = bisect_right(list(accumulate(self._weights)), target)
        if i < self.n_arms:
            return i
        # roundoff in the running total can leave target just past the sum
        return max(range(self.n_arms), key=self._weights.__getitem__)

    def update(self, arm: int, reward: float) -> None:
        _check_reward(reward)
        p = self._prob(arm)
        self.estimates[arm] += reward / p
        exponent = self.eta * self.estimates[arm] - self._shift
        if exponent > 500.0:
            self._rebase()
            exponent = self.eta * self.estimates[arm] - self._shift
        new = math.exp(exponent)
        self._total += new - self._weights[arm]
        self._weights[arm] = new
        self.rounds += 1
        if self.rounds % 1024 == 0:
            self._total = math.fsum(self._weights)

    def _rebase(self):
        self._shift = self.eta * max(self.estimates)
        self._weights = [math.exp(self.eta * s - self._shift) for s in self.estimates]
        self._total = math.fsum(self._weights)


class TsallisINF:
    """Follow-the-regularised-leader with the 1/2-Tsallis entropy.

    Works on losses ``1 - reward`` with importance-weighted estimates ``L``.
    The played distribution is ``p_i = 4 / (eta * (L_i - x))**2`` where the
    normaliser ``x < min(L)`` solves ``sum(p) = 1``. The learning rate is
    fixed at ``eta = 2 / sqrt(T)`` unless ``anytime`` is set, in which case
    ``eta_t = 2 / sqrt(t)``.
    """

    name = "tsallis"

    def __init__(self, n_arms: int, horizon: int, anytime: bool = False):
        if n_arms < 2:
            raise ValueError("need at least two arms")
        if horizon < 1:
            raise ValueError("horizon must be positive")
        self.n_arms = n_arms
        self.horizon = horizon
        self.anytime = anytime
        self.losses = np.zeros(n_arms)
        self.rounds = 0
        self._p = np.full(n_arms, 1.0 / n_arms)

    @property
    def eta(self) -> float:
        t = self.rounds + 1 if self.anytime else self.horizon
        return 2.0 / math.sqrt(t)

    def arm_probabilities(self) -> np.ndarray:
        return self._p.copy()

    def select_arm(self, rng) -> int:
        u = rng.random()
        i = int(np.searchsorted(np.cumsum(self._p), u, side="right"))
        return min(i, self.n_arms - 1)

    def update(self, arm: int, reward: float) -> None:
        _check_reward(reward)
        self.losses[arm] += (1.0 - reward) / self._p[arm]
        self.rounds += 1
        self._p = tsallis_weights(self.losses, self.eta)


def tsallis_weights(losses, eta, tol=ROOT_TOL):
    """Solve ``sum 4 / (eta (L_i - x))^2 = 1`` for ``x`` and return the weights.

    The sum increases in ``x`` on ``(-inf, min L)``. At ``x = min L - 2/eta``
    the smallest-loss term alone equals 1, and at ``x = min L - 2 sqrt(K)/eta``
    every term is at most ``1/K``, which brackets the root. Newton steps are
    used while they stay inside the bracket, bisection otherwise.
    """
    L = np.asarray(losses, dtype=float)
    L = L - L.min()
    K = L.size
    lo, hi = -2.0 * math.sqrt(K) / eta, -2.0 / eta

    def g(x):
        w = 4.0 / (eta * (L - x)) ** 2
        return w.sum() - 1.0, w

    x = hi
    for _ in range(200):
        val, w = g(x)
        if abs(val) <= tol:
            break
        if val > 0:
            hi = x
        else:
            lo = x
        slope = (eta * w**1.5).sum()
        step = x - val / slope
        x = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(x)):
            break
    w = 4.0 / (eta * (L - x)) ** 2
    return w / w.sum()


BANDITS = {"exp3": Exp3, "tsallis": TsallisINF}


def make_bandit(name: str, n_arms: int, horizon: int):
    try:
        cls = BANDITS[name]
    except KeyError:
        raise ValueError(f"unknown bandit algorithm {name!r}; choose from {sorted(BANDITS)}") from None
    return cls(n_arms, horizon)
