"""Run configuration, full-run drivers, Monte Carlo replication, and rate fits.

A :class:`RunConfig` names the algorithm, environment, compressor, and scale
parameters of one experiment.  :func:`run` executes it deterministically for a
given seed and returns a :class:`RegretTrace`; :func:`monte_carlo` averages
replications over hash-derived seeds; :func:`fit_rate` extracts log-log slope
and fit quality for scaling studies.  The ``verify_*`` drivers measure the
compression-loop contraction and the error-memory energies against their
closed-form caps and report pass/fail with margins.

Step-size defaults are the worst-case-tuned values: delta*D/(G sqrt(T)) for
the bidirectionally compressed per-round algorithm (sqrt(delta)*D/(G sqrt(T))
in its unidirectional mode), D/(G sqrt(L*T)) for the blocked algorithm with
block size L = ceil(1/delta), and D/(G sqrt(K)) for the online-to-batch
driver with K = T/L updates.  All are overridable.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .algorithms import Dftcl, Dftfcl, O2b
from .compressors import (
    CompressorSpec,
    derive_seed,
    entity_stream,
    nominal_delta,
    parse_compressor,
    RandK,
)
from .domains import (
    Ball,
    BlackBoxLoss,
    Box,
    ConfigError,
    FeasibleSet,
    best_in_hindsight,
)
from . import environments as envs

__all__ = [
    "RunConfig",
    "RegretTrace",
    "MeanTrace",
    "run",
    "monte_carlo",
    "fit_rate",
    "parse_set",
    "set_label",
    "VerifyRow",
    "VerifyReport",
    "verify_lemma",
    "VERIFY_IDS",
]

_ENV, _REP, _ORACLE = 3, 4, 5

ALGOS = ("dftcl", "dftfcl", "o2b")
ENVS = ("linear", "sc_quadratic", "convex_lower", "sc_lower", "lad")


def parse_set(text: str, d: int) -> FeasibleSet:
    """Parse ``box:lo:hi`` (scalar bounds replicated to d) or ``ball:r``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "box" and len(parts) == 3:
            lo, hi = float(parts[1]), float(parts[2])
            return Box(lo * np.ones(d), hi * np.ones(d))
        if parts[0] == "ball" and len(parts) == 2:
            return Ball(float(parts[1]), d)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("set", f"bad number in {text!r}") from exc
    raise ConfigError("set", f"unknown set {text!r} (expected box:lo:hi or ball:r)")


def set_label(feasible: FeasibleSet) -> str:
    if isinstance(feasible, Ball):
        return f"ball:{feasible.radius!r}"
    lo, hi = float(feasible.lo[0]), float(feasible.hi[0])
    if np.all(feasible.lo == lo) and np.all(feasible.hi == hi):
        return f"box:{lo!r}:{hi!r}"
    raise ConfigError("set", "only uniform boxes have a flag representation")


@dataclass(frozen=True)
class RunConfig:
    """One experiment: algorithm, environment, compressor, and scales.

    Exactly one of the step parameters selects the update mode: ``eta`` for
    the learning-rate (convex) step, ``mu`` alone for the strongly convex
    step.  Environments with curvature (``sc_quadratic``, ``sc_lower``, and
    regularized ``lad``) take ``mu`` as their curvature; supplying ``eta`` as
    well runs the convex-mode update on that environment.
    """

    algo: str = "dftcl"
    env: str = "linear"
    T: int | None = None
    n: int = 2
    d: int = 4
    compressor: Union[str, CompressorSpec] = "identity"
    L: int | None = None
    eta: float | None = None
    mu: float | None = None
    G: float | None = None
    D: float | None = None
    feasible: Union[str, FeasibleSet, None] = None
    weights: str = "uniform"
    unidirectional: bool = False
    env_p: float = 0.5
    samples: int = 32
    seed: int = 0
    reps: int = 1
    workers: int = 1


@dataclass
class _Plan:
    cfg: RunConfig
    spec: CompressorSpec
    delta: float
    feasible: FeasibleSet
    G: float
    D: float
    eta: float | None
    mu_step: float | None
    L: int | None
    K: int | None
    env: object


def _require_positive_int(name: str, value, minimum: int = 1) -> int:
    if value is None:
        raise ConfigError(name, "required")
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ConfigError(name, f"must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {value}")
    return int(value)


def _resolve(cfg: RunConfig) -> _Plan:
    if cfg.algo not in ALGOS:
        raise ConfigError("algo", f"must be one of {ALGOS}, got {cfg.algo!r}")
    if cfg.env not in ENVS:
        raise ConfigError("env", f"must be one of {ENVS}, got {cfg.env!r}")
    if (cfg.algo == "o2b") != (cfg.env == "lad"):
        raise ConfigError("env", "the o2b driver pairs with the lad environment (and only it)")
    T = _require_positive_int("T", cfg.T)
    n = _require_positive_int("n", cfg.n)
    d = _require_positive_int("d", cfg.d)
    if cfg.seed < 0:
        raise ConfigError("seed", f"must be >= 0, got {cfg.seed}")
    _require_positive_int("reps", cfg.reps)
    _require_positive_int("workers", cfg.workers)
    spec = parse_compressor(cfg.compressor) if isinstance(cfg.compressor, str) else cfg.compressor
    delta = nominal_delta(spec, d)
    if cfg.unidirectional and cfg.algo != "dftcl":
        raise ConfigError("unidirectional", "only the per-round bidirectional algorithm has this mode")
    if cfg.weights != "uniform" and cfg.algo != "o2b":
        raise ConfigError("weights", "only the o2b driver takes a weighting scheme")
    for name, value in (("G", cfg.G), ("D", cfg.D), ("eta", cfg.eta), ("mu", cfg.mu)):
        if value is not None and not value > 0:
            raise ConfigError(name, f"must be positive, got {value}")

    user_set = cfg.feasible
    if isinstance(user_set, str):
        user_set = parse_set(user_set, d)
    if user_set is not None and user_set.d != d:
        raise ConfigError("set", f"dimension mismatch: set is {user_set.d}-d, d = {d}")

    # L and the update count.
    L = cfg.L
    if cfg.algo == "dftcl":
        if L is not None:
            raise ConfigError("L", "the per-round algorithm sends one message per round; L does not apply")
        K = None
    else:
        L = math.ceil(1.0 / delta) if L is None else _require_positive_int("L", L)
        K = T // L if cfg.algo == "o2b" else None
        if cfg.algo == "o2b" and K < 1:
            raise ConfigError("T", f"must cover at least one update: T >= L = {L}")

    env_seed = derive_seed(cfg.seed, _ENV)

    if cfg.env == "linear":
        if cfg.mu is not None:
            raise ConfigError("mu", "linear losses have no curvature; use eta")
        G = cfg.G if cfg.G is not None else 1.0
        feasible = user_set if user_set is not None else Ball((cfg.D or 2.0) / 2.0, d)
        D = feasible.diameter()
        if cfg.D is not None and user_set is not None and abs(D - cfg.D) > 1e-9:
            raise ConfigError("D", f"inconsistent with the set diameter {D}")
        env = envs.make_linear_adversary(n, d, T, G, env_seed)
        eta, mu_step = _step_params(cfg, delta, D, G, T, L, K, curvature=None)
    elif cfg.env == "sc_quadratic":
        if cfg.mu is None:
            raise ConfigError("mu", "required: curvature of the quadratic environment")
        if user_set is not None:
            raise ConfigError("set", "this environment builds its own box from D")
        G = cfg.G if cfg.G is not None else 1.0
        D = cfg.D if cfg.D is not None else 2.0
        env = envs.make_sc_quadratic_adversary(n, d, T, cfg.mu, G, D, env_seed)
        feasible = env.feasible
        eta, mu_step = _step_params(cfg, delta, D, G, T, L, K, curvature=cfg.mu)
    elif cfg.env == "convex_lower":
        if cfg.mu is not None:
            raise ConfigError("mu", "linear losses have no curvature; use eta")
        if user_set is not None:
            raise ConfigError("set", "this environment forces its own box from D")
        G = cfg.G if cfg.G is not None else 1.0
        D = cfg.D if cfg.D is not None else 2.0
        env = envs.make_convex_lower_bound_env(n, d, T, G, D, delta, env_seed)
        feasible = env.feasible
        eta, mu_step = _step_params(cfg, delta, D, G, T, L, K, curvature=None)
    elif cfg.env == "sc_lower":
        if cfg.mu is None:
            raise ConfigError("mu", "required: curvature of the environment")
        if user_set is not None:
            raise ConfigError("set", "this environment forces its own box from D")
        if cfg.G is not None:
            raise ConfigError("G", "derived as mu*D for this environment")
        D = cfg.D if cfg.D is not None else 2.0
        env = envs.make_sc_lower_bound_env(n, d, T, cfg.mu, D, delta, cfg.env_p, env_seed)
        feasible = env.feasible
        G = env.G
        eta, mu_step = _step_params(cfg, delta, D, G, T, L, K, curvature=cfg.mu)
    else:  # lad
        if cfg.G is not None:
            raise ConfigError("G", "derived from the data geometry for this environment")
        feasible = user_set if user_set is not None else Box(np.zeros(d), np.ones(d))
        if not isinstance(feasible, Box):
            raise ConfigError("set", "the lad environment needs a box")
        D = feasible.diameter()
        if cfg.D is not None and abs(D - cfg.D) > 1e-9:
            raise ConfigError("D", f"inconsistent with the set diameter {D}")
        samples = _require_positive_int("samples", cfg.samples)
        env = envs.make_lad_problem(n, d, samples, feasible, env_seed, mu=cfg.mu or 0.0)
        G = env.G
        if cfg.weights == "uniform":
            if cfg.eta is not None:
                eta, mu_step = cfg.eta, None
            else:
                eta, mu_step = D / (G * math.sqrt(K)), None
        else:
            if cfg.mu is None:
                raise ConfigError("mu", "linear weights need a strongly convex problem (mu > 0)")
            if cfg.eta is not None:
                raise ConfigError("eta", "linear weights take the strongly convex step; eta does not apply")
            eta, mu_step = None, cfg.mu
    return _Plan(cfg, spec, delta, feasible, G, D, eta, mu_step, L, K, env)


def _step_params(cfg, delta, D, G, T, L, K, curvature):
    """Pick (eta, mu_step): eta selects the convex-mode update, mu the strongly convex one."""
    if cfg.eta is not None:
        return cfg.eta, None
    if curvature is not None:
        return None, curvature
    if cfg.mu is not None:  # caught earlier for curvature-free envs; defensive
        raise ConfigError("mu", "this environment has no curvature")
    if cfg.algo == "dftcl":
        scale = math.sqrt(delta) if cfg.unidirectional else delta
        return scale * D / (G * math.sqrt(T)), None
    if cfg.algo == "dftfcl":
        return D / (G * math.sqrt(L * T)), None
    return D / (G * math.sqrt(K)), None


def _sample_rounds(T: int) -> np.ndarray:
    """Dense up to 2^16 rounds, geometric (about 4k points) above."""
    if T <= 65536:
        return np.arange(1, T + 1, dtype=np.int64)
    head = np.arange(1, 1025, dtype=np.int64)
    tail = np.round(np.geomspace(1024, T, 3072)).astype(np.int64)
    return np.unique(np.concatenate([head, tail, [T]]))


def _fmt(x) -> str:
    return repr(float(x))


def _fmt_count(x) -> str:
    v = float(x)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass
class RegretTrace:
    """Sampled per-round trace of one run.

    ``regret`` is cumulative average loss minus the cumulative loss of the
    final best-in-hindsight decision; for online-to-batch runs the rows are
    per update, ``t`` counts communication rounds, and ``subopt`` holds
    f(x^t) - f*.
    """

    t: np.ndarray
    cum_loss: np.ndarray
    comparator: np.ndarray
    regret: np.ndarray
    bits_up: np.ndarray
    bits_down: np.ndarray
    subopt: np.ndarray | None
    approx_comparator: bool
    comparator_point: np.ndarray
    comparator_value: float
    decisions: np.ndarray | None = None
    iterates: np.ndarray | None = None

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])

    def header(self) -> str:
        base = "t,cum_loss,comparator,regret,bits_up,bits_down"
        return base + (",subopt" if self.subopt is not None else "")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            for i in range(self.t.shape[0]):
                row = (
                    f"{int(self.t[i])},{_fmt(self.cum_loss[i])},{_fmt(self.comparator[i])},"
                    f"{_fmt(self.regret[i])},{int(self.bits_up[i])},{int(self.bits_down[i])}"
                )
                if self.subopt is not None:
                    row += f",{_fmt(self.subopt[i])}"
                fh.write(row + "\n")


@dataclass
class MeanTrace:
    """Pointwise mean of replicated traces plus standard errors for the key columns."""

    t: np.ndarray
    cum_loss: np.ndarray
    comparator: np.ndarray
    regret: np.ndarray
    regret_stderr: np.ndarray
    bits_up: np.ndarray
    bits_down: np.ndarray
    subopt: np.ndarray | None
    subopt_stderr: np.ndarray | None
    reps: int

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])

    @property
    def final_regret_stderr(self) -> float:
        return float(self.regret_stderr[-1])

    def header(self) -> str:
        base = "t,cum_loss,comparator,regret,bits_up,bits_down"
        return base + (",subopt" if self.subopt is not None else "")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            for i in range(self.t.shape[0]):
                row = (
                    f"{int(self.t[i])},{_fmt(self.cum_loss[i])},{_fmt(self.comparator[i])},"
                    f"{_fmt(self.regret[i])},{_fmt_count(self.bits_up[i])},{_fmt_count(self.bits_down[i])}"
                )
                if self.subopt is not None:
                    row += f",{_fmt(self.subopt[i])}"
                fh.write(row + "\n")


def run(config: RunConfig, keep_decisions: bool = False) -> RegretTrace:
    """Execute one deterministic run and assemble its regret trace."""
    plan = _resolve(config)
    if plan.cfg.algo == "o2b":
        return _run_o2b(plan, keep_decisions)
    return _run_online(plan, keep_decisions)


def _run_online(plan: _Plan, keep_decisions: bool) -> RegretTrace:
    cfg, env = plan.cfg, plan.env
    T, d = env.T, env.d
    if cfg.algo == "dftcl":
        eng = Dftcl(
            plan.feasible,
            cfg.n,
            plan.spec,
            eta=plan.eta,
            mu=plan.mu_step,
            unidirectional=cfg.unidirectional,
            seed=cfg.seed,
        )
        engine_rounds = T
    else:
        eng = Dftfcl(plan.feasible, cfg.n, plan.spec, plan.L, eta=plan.eta, mu=plan.mu_step, seed=cfg.seed)
        engine_rounds = (T // plan.L) * plan.L
    W = np.empty((T, d))
    bits_up = np.empty(T, dtype=np.int64)
    bits_down = np.empty(T, dtype=np.int64)
    for t in range(1, engine_rounds + 1):
        w = eng.decision
        W[t - 1] = w
        eng.round(env.grads(t, w))
        bits_up[t - 1] = eng.bits_up
        bits_down[t - 1] = eng.bits_down
    # Tail rounds past the last full block replay the last decision, silently.
    for t in range(engine_rounds + 1, T + 1):
        W[t - 1] = eng.decision
        bits_up[t - 1] = eng.bits_up
        bits_down[t - 1] = eng.bits_down

    cum = np.cumsum(env.mean_loss_path(W))
    hind = best_in_hindsight(plan.feasible, env.hindsight())
    comp_curve = np.cumsum(env.mean_loss_curve(hind.point))
    regret = cum - comp_curve
    idx = _sample_rounds(T) - 1
    return RegretTrace(
        t=idx + 1,
        cum_loss=cum[idx],
        comparator=comp_curve[idx],
        regret=regret[idx],
        bits_up=bits_up[idx],
        bits_down=bits_down[idx],
        subopt=None,
        approx_comparator=hind.approx,
        comparator_point=hind.point,
        comparator_value=hind.value,
        decisions=W[idx] if keep_decisions else None,
    )


def _run_o2b(plan: _Plan, keep_decisions: bool) -> RegretTrace:
    cfg, problem = plan.cfg, plan.env
    K, L, d = plan.K, plan.L, problem.d
    eng = O2b(
        plan.feasible,
        cfg.n,
        plan.spec,
        L,
        weights=cfg.weights,
        eta=plan.eta,
        mu=plan.mu_step,
        seed=cfg.seed,
    )
    oracle_rng = entity_stream(cfg.seed, _ORACLE)
    X = np.empty((K, d))
    Wp = np.empty((K, d))
    gbar = np.empty((K, d))
    bits_up = np.empty(K, dtype=np.int64)
    bits_down = np.empty(K, dtype=np.int64)
    for t in range(1, K + 1):
        info = eng.step(problem, oracle_rng)
        X[t - 1] = info.x
        Wp[t - 1] = info.w_played
        gbar[t - 1] = info.gbar
        bits_up[t - 1] = eng.bits_up
        bits_down[t - 1] = eng.bits_down

    alphas = np.arange(1, K + 1, dtype=np.float64) if cfg.weights == "linear" else np.ones(K)
    losses = alphas * np.einsum("td,td->t", gbar, Wp)
    if cfg.weights == "linear":
        losses += 0.5 * plan.mu_step * alphas * ((Wp - X) ** 2).sum(axis=1)
    cum = np.cumsum(losses)

    if cfg.weights == "uniform":
        hind = best_in_hindsight(plan.feasible, (alphas[:, None] * gbar).sum(axis=0))
        comp_rows = alphas * (gbar @ hind.point)
    else:
        mu = plan.mu_step
        U = (alphas[:, None] * gbar).sum(axis=0)
        A = float(alphas.sum())
        Sx = (alphas[:, None] * X).sum(axis=0)
        Sxx = float((alphas * (X**2).sum(axis=1)).sum())

        def value(w):
            return float(U @ w) + 0.5 * mu * (A * float(w @ w) - 2.0 * float(Sx @ w) + Sxx)

        def subgrad(w):
            return U + mu * (A * w - Sx)

        hind = best_in_hindsight(plan.feasible, BlackBoxLoss(value, subgrad, mu=mu * A))
        comp_rows = alphas * (gbar @ hind.point) + 0.5 * mu * alphas * ((hind.point - X) ** 2).sum(axis=1)
    comp_curve = np.cumsum(comp_rows)

    _, fstar = problem.optimum()
    subopt = problem.value_path(X) - fstar
    idx = _sample_rounds(K) - 1
    return RegretTrace(
        t=(idx + 1) * L,
        cum_loss=cum[idx],
        comparator=comp_curve[idx],
        regret=(cum - comp_curve)[idx],
        bits_up=bits_up[idx],
        bits_down=bits_down[idx],
        subopt=subopt[idx],
        approx_comparator=hind.approx,
        comparator_point=hind.point,
        comparator_value=hind.value,
        decisions=Wp[idx] if keep_decisions else None,
        iterates=X[idx] if keep_decisions else None,
    )


def _run_rep(args) -> RegretTrace:
    config, rep_seed = args
    return run(replace(config, seed=rep_seed, reps=1))


def monte_carlo(config: RunConfig, reps: int | None = None, workers: int | None = None) -> MeanTrace:
    """Average ``reps`` replications; replication r runs at seed hash(seed, r)."""
    reps = config.reps if reps is None else reps
    workers = config.workers if workers is None else workers
    reps = _require_positive_int("reps", reps)
    workers = _require_positive_int("workers", workers)
    seeds = [derive_seed(config.seed, _REP, r) for r in range(reps)]
    jobs = [(config, s) for s in seeds]
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_rep, jobs))
    else:
        traces = [_run_rep(j) for j in jobs]
    regret = np.stack([tr.regret for tr in traces])
    out = MeanTrace(
        t=traces[0].t,
        cum_loss=np.stack([tr.cum_loss for tr in traces]).mean(axis=0),
        comparator=np.stack([tr.comparator for tr in traces]).mean(axis=0),
        regret=regret.mean(axis=0),
        regret_stderr=_stderr(regret),
        bits_up=np.stack([tr.bits_up for tr in traces]).mean(axis=0),
        bits_down=np.stack([tr.bits_down for tr in traces]).mean(axis=0),
        subopt=None,
        subopt_stderr=None,
        reps=reps,
    )
    if traces[0].subopt is not None:
        sub = np.stack([tr.subopt for tr in traces])
        out.subopt = sub.mean(axis=0)
        out.subopt_stderr = _stderr(sub)
    return out


def _stderr(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] < 2:
        return np.zeros(rows.shape[1])
    return rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])


def fit_rate(xs, ys) -> tuple[float, float]:
    """Ordinary least squares slope of log y on log x, with R^2."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.shape != x.shape:
        raise ValueError("xs and ys must be 1-D and the same length")
    if x.shape[0] < 3:
        raise ValueError(f"need at least 3 points, got {x.shape[0]}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs strictly positive xs and ys")
    lx, ly = np.log(x), np.log(y)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    ss_res = float(resid @ resid)
    centered = ly - ly.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(coef[0]), float(r2)


# ---------------------------------------------------------------------------
# Bound verification drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyRow:
    label: str
    measured: float
    bound: float
    margin: float
    ok: bool


@dataclass(frozen=True)
class VerifyReport:
    lemma: str
    rows: tuple

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


VERIFY_IDS = ("fcc_contraction", "dftcl_errors", "dftfcl_errors", "o2b_errors")


def verify_fcc_contraction(
    seed: int = 0, trials: int = 5000, d: int = 64, spec: CompressorSpec | None = None
) -> VerifyReport:
    """Measured L-round residual error vs the (1 - delta)^L decay (default RandK d=64 k=8)."""
    from .compressors import contraction_stat

    spec = RandK(8) if spec is None else spec
    delta = nominal_delta(spec, d)
    rng = entity_stream(seed, _ENV)
    rows = []
    for L in (1, 2, 4, 8, 16):
        mean, stderr = contraction_stat(spec, L, d, trials, rng)
        bound = (1.0 - delta) ** L
        limit = bound + 3.0 * stderr
        rows.append(VerifyRow(f"L={L}", mean, bound, limit - mean, mean <= limit))
    return VerifyReport("fcc_contraction", tuple(rows))


def _error_energy_run(
    algo: str,
    seed: int,
    seeds: int,
    n: int,
    d: int,
    spec: CompressorSpec,
    T: int,
    L: int | None,
):
    """Seed-averaged per-round squared norms of both error memories."""
    G, D = 1.0, 2.0
    delta = nominal_delta(spec, d)
    feasible = Ball(D / 2.0, d)
    e_sq = np.zeros(T)
    ehat_sq = np.zeros(T)
    for r in range(seeds):
        s = derive_seed(seed, _REP, r)
        env = envs.make_linear_adversary(n, d, T, G, derive_seed(s, _ENV))
        if algo == "dftcl":
            eta = delta * D / (G * math.sqrt(T))
            eng = Dftcl(feasible, n, spec, eta=eta, seed=s)
        else:
            eta = D / (G * math.sqrt(L * T))
            eng = Dftfcl(feasible, n, spec, L, eta=eta, seed=s)
        for t in range(1, T + 1):
            eng.round(env.grads(t, eng.decision))
            ebar = eng.e.mean(axis=0)
            e_sq[t - 1] += float(ebar @ ebar)
            ehat_sq[t - 1] += float(eng.e_hat @ eng.e_hat)
    return e_sq / seeds, ehat_sq / seeds, delta, G


def verify_dftcl_errors(
    seed: int = 0, seeds: int = 50, spec: CompressorSpec | None = None
) -> VerifyReport:
    """Error-memory energies of the per-round algorithm vs their closed-form caps."""
    n, d, T = 8, 16, 2000
    spec = RandK(4) if spec is None else spec
    e_sq, ehat_sq, delta, G = _error_energy_run("dftcl", seed, seeds, n, d, spec, T, None)
    e_bound = 4.0 * (1.0 - delta) * G**2 / delta**2
    ehat_bound = 160.0 * (1.0 - delta) * G**2 / delta**4
    rows = (
        VerifyRow("max_t mean ||e||^2", float(e_sq.max()), e_bound, e_bound - e_sq.max(), e_sq.max() <= e_bound),
        VerifyRow(
            "max_t mean ||e_hat||^2",
            float(ehat_sq.max()),
            ehat_bound,
            ehat_bound - ehat_sq.max(),
            ehat_sq.max() <= ehat_bound,
        ),
    )
    return VerifyReport("dftcl_errors", rows)


def verify_dftfcl_errors(
    seed: int = 0, seeds: int = 50, spec: CompressorSpec | None = None, L: int | None = None
) -> VerifyReport:
    """Block-algorithm error energies vs the residual-compression caps (L = ceil(1/delta))."""
    n, d, T = 8, 16, 2000
    spec = RandK(4) if spec is None else spec
    if L is None:
        L = math.ceil(1.0 / nominal_delta(spec, d))
    e_sq, ehat_sq, _, G = _error_energy_run("dftfcl", seed, seeds, n, d, spec, T, L)
    e_bound = 4.0 * math.e**2 * L**2 * G**2
    ehat_bound = 120.0 * math.e**2 * L**2 * G**2
    rows = (
        VerifyRow("max_b mean ||e||^2", float(e_sq.max()), e_bound, e_bound - e_sq.max(), e_sq.max() <= e_bound),
        VerifyRow(
            "max_b mean ||e_hat||^2",
            float(ehat_sq.max()),
            ehat_bound,
            ehat_bound - ehat_sq.max(),
            ehat_sq.max() <= ehat_bound,
        ),
    )
    return VerifyReport("dftfcl_errors", rows)


def verify_o2b_errors(seed: int = 0, seeds: int = 20) -> VerifyReport:
    """Online-to-batch error energies (uniform weights) vs the residual-compression caps."""
    n, d, k, L, K, samples = 4, 8, 2, 4, 256, 32
    spec = RandK(k)
    feasible = Box(np.zeros(d), np.ones(d))
    e_sq = np.zeros(K)
    ehat_sq = np.zeros(K)
    G = math.sqrt(d)
    for r in range(seeds):
        s = derive_seed(seed, _REP, r)
        problem = envs.make_lad_problem(n, d, samples, feasible, derive_seed(s, _ENV))
        eta = feasible.diameter() / (problem.G * math.sqrt(K))
        eng = O2b(feasible, n, spec, L, weights="uniform", eta=eta, seed=s)
        rng = entity_stream(s, _ORACLE)
        for t in range(1, K + 1):
            eng.step(problem, rng)
            ebar = eng.e.mean(axis=0)
            e_sq[t - 1] += float(ebar @ ebar)
            ehat_sq[t - 1] += float(eng.e_hat @ eng.e_hat)
    e_sq /= seeds
    ehat_sq /= seeds
    e_bound = 4.0 * math.e**2 * G**2  # alpha_t = 1
    ehat_bound = 120.0 * math.e**2 * G**2
    rows = (
        VerifyRow("max_t mean ||e||^2", float(e_sq.max()), e_bound, e_bound - e_sq.max(), e_sq.max() <= e_bound),
        VerifyRow(
            "max_t mean ||e_hat||^2",
            float(ehat_sq.max()),
            ehat_bound,
            ehat_bound - ehat_sq.max(),
            ehat_sq.max() <= ehat_bound,
        ),
    )
    return VerifyReport("o2b_errors", rows)


def verify_lemma(lemma_id: str, seed: int = 0, spec: CompressorSpec | None = None) -> VerifyReport:
    if lemma_id == "fcc_contraction":
        return verify_fcc_contraction(seed, spec=spec) if spec is not None else verify_fcc_contraction(seed)
    if lemma_id == "dftcl_errors":
        return verify_dftcl_errors(seed, spec=spec)
    if lemma_id == "dftfcl_errors":
        return verify_dftfcl_errors(seed, spec=spec)
    if lemma_id == "o2b_errors":
        return verify_o2b_errors(seed)
    raise ConfigError("lemma", f"unknown id {lemma_id!r}; expected one of {VERIFY_IDS}")
