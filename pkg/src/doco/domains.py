"""Feasible sets, Euclidean projection, and closed-form leader steps.

Every decision update in this package reduces to one identity: the minimizer
of ``<u, w> + (1/eta) ||w||^2`` over a convex set W is the Euclidean
projection of ``-(eta/2) u`` onto W, and the strongly convex variant with
quadratic anchor terms completes the square into the same shape.  Only
axis-aligned boxes and origin-centered balls are supported, which keeps both
projections closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

__all__ = [
    "ConfigError",
    "Box",
    "Ball",
    "FeasibleSet",
    "as_decision",
    "project",
    "ftrl_linear_step",
    "ftrl_strongly_convex_step",
    "BlackBoxLoss",
    "Hindsight",
    "best_in_hindsight",
    "minimize_convex",
]


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending parameter."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def as_decision(x, d: int | None = None, field: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 vector, optionally of dimension d."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ConfigError(field, f"expected a 1-D vector, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise ConfigError(field, f"dimension mismatch: expected {d}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(field, "coordinates must be finite")
    return v


@dataclass(frozen=True)
class Box:
    """Axis-aligned box {w : lo <= w <= hi}, required to contain the origin."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_decision(self.lo, field="lo")
        hi = as_decision(self.hi, d=lo.shape[0], field="hi")
        if np.any(lo > 0.0) or np.any(hi < 0.0):
            raise ConfigError("set", "box must contain the origin (lo <= 0 <= hi)")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return self.lo.shape[0]

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


@dataclass(frozen=True)
class Ball:
    """Origin-centered Euclidean ball {w : ||w|| <= radius} in dimension d."""

    radius: float
    d: int

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ConfigError("set", f"ball radius must be positive, got {self.radius}")
        if self.d < 1:
            raise ConfigError("set", f"dimension must be >= 1, got {self.d}")

    def diameter(self) -> float:
        return 2.0 * self.radius

    def project(self, x: np.ndarray) -> np.ndarray:
        nrm = float(np.linalg.norm(x))
        if nrm <= self.radius:
            return np.asarray(x, dtype=np.float64)
        return (self.radius / nrm) * np.asarray(x, dtype=np.float64)

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(x)) <= self.radius + tol


FeasibleSet = Union[Box, Ball]


def project(feasible: FeasibleSet, x) -> np.ndarray:
    """Euclidean projection of x onto the set (unique closest point)."""
    v = as_decision(x, d=feasible.d, field="x")
    return feasible.project(v)


def ftrl_linear_step(feasible: FeasibleSet, u_cum, eta: float) -> np.ndarray:
    """argmin_{w in W} <u_cum, w> + (1/eta) ||w||^2  =  project(-(eta/2) u_cum)."""
    if not (np.isfinite(eta) and eta > 0):
        raise ConfigError("eta", f"must be positive, got {eta}")
    u = as_decision(u_cum, d=feasible.d, field="u_cum")
    return feasible.project(-(eta / 2.0) * u)


def ftrl_strongly_convex_step(
    feasible: FeasibleSet,
    s_cum,
    weighted_anchor_sum,
    mu: float,
    weight_total: float,
) -> np.ndarray:
    """Minimize <s_cum, w> + (mu/2) sum_k a_k ||w - anchor_k||^2 over W.

    ``weighted_anchor_sum`` is sum_k a_k anchor_k and ``weight_total`` is
    sum_k a_k; completing the square gives the unconstrained minimizer
    (mu * weighted_anchor_sum - s_cum) / (mu * weight_total), and because the
    quadratic is isotropic its projection is the constrained minimizer.
    """
    if not (np.isfinite(mu) and mu > 0):
        raise ConfigError("mu", f"must be positive, got {mu}")
    if not (np.isfinite(weight_total) and weight_total > 0):
        raise ConfigError("weight_total", f"must be positive, got {weight_total}")
    s = as_decision(s_cum, d=feasible.d, field="s_cum")
    a = as_decision(weighted_anchor_sum, d=feasible.d, field="weighted_anchor_sum")
    return feasible.project((mu * a - s) / (mu * weight_total))


@dataclass(frozen=True)
class BlackBoxLoss:
    """Convex loss given by value/subgradient oracles; mu > 0 marks strong convexity."""

    value: Callable[[np.ndarray], float]
    subgrad: Callable[[np.ndarray], np.ndarray]
    mu: float = 0.0


class Hindsight(NamedTuple):
    point: np.ndarray
    value: float
    approx: bool


def best_in_hindsight(feasible: FeasibleSet, loss) -> Hindsight:
    """Best fixed decision for summed losses.

    ``loss`` is either the summed linear coefficient vector (closed form) or a
    :class:`BlackBoxLoss` (projected subgradient descent; the returned value
    is approximate, to the solver's documented tolerance).
    """
    if isinstance(loss, BlackBoxLoss):
        point, value = minimize_convex(feasible, loss)
        return Hindsight(point, value, True)
    u = as_decision(loss, d=feasible.d, field="loss")
    if isinstance(feasible, Box):
        # Minimize <u, w>: pick lo where u > 0, hi where u < 0; ties take lo.
        w = np.where(u < 0.0, feasible.hi, feasible.lo)
        return Hindsight(w, float(u @ w), False)
    nrm = float(np.linalg.norm(u))
    if nrm == 0.0:
        return Hindsight(np.zeros(feasible.d), 0.0, False)
    w = -(feasible.radius / nrm) * u
    return Hindsight(w, -feasible.radius * nrm, False)


def minimize_convex(
    feasible: FeasibleSet,
    loss: BlackBoxLoss,
    tol: float = 1e-6,
    max_iter: int = 50_000,
) -> tuple[np.ndarray, float]:
    """Projected subgradient descent on a black-box convex loss.

    Uses the 2/(mu (k+1)) schedule when the loss is strongly convex and a
    D/(||g|| sqrt(k)) schedule otherwise, tracking the best iterate.  Stops
    early once the best value stagnates below ``tol / 10`` per sweep.  The
    returned value is approximate: the target objective gap is ``tol``.
    """
    x = feasible.project(np.zeros(feasible.d))
    best_x, best_v = x, float(loss.value(x))
    diam = feasible.diameter()
    check, last_best = 200, best_v
    for k in range(1, max_iter + 1):
        g = np.asarray(loss.subgrad(x), dtype=np.float64)
        if loss.mu > 0:
            step = 2.0 / (loss.mu * (k + 1))
        else:
            gn = float(np.linalg.norm(g))
            if gn == 0.0:
                break
            step = diam / (gn * np.sqrt(k))
        x = feasible.project(x - step * g)
        v = float(loss.value(x))
        if v < best_v:
            best_x, best_v = x, v
        if k % check == 0:
            if last_best - best_v < tol / 10.0:
                break
            last_best = best_v
    return best_x, best_v
