"""Monte Carlo harness for the semi-log subgroup design.

Data are generated as ln y = 1 + x + sum_g d_g tau_g + e with x ~ N(0, 1) and
e either standard normal or a unit-variance skew normal. Each observation is
control with probability 1 - p_S and otherwise falls in subgroup g with
probability p_S * w_g. The default p_S = 0.8 with four equal subgroups puts 20%
of the sample in each of the five cells.

Replication ``i`` draws from its own Philox stream keyed by
``SeedSequence(base_seed, spawn_key=(i, attempt))``, so results do not depend on
scheduling or on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DegenerateInference, NumericalError, PctAteError
from .estimators import EffectEstimates, point_estimates
from .inference import eta_hat, mu_hat, normal_quantile, se_tau_bar, sigma_mu2_hat
from .ols import DesignMatrix, classical_vcov, fit_ols, hc0_vcov
from .shares import estimate_shares

LARGE_RHO = (-0.16, -0.08, 0.08, 0.16)
SMALL_RHO = (-0.08, -0.04, 0.04, 0.08)
PAPER_N_GRID = (20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 100_000, 1_000_000)
ESTIMATORS = ("tau_bar", "rho_a", "rho_b", "rho_c", "rho_d")

SKEW_SHAPE = -5.0
MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SimConfig:
    N: int = 1000
    reps: int = 1000
    rho_true: tuple = SMALL_RHO
    p_S: float = 0.8
    w_true: tuple | None = None
    error_kind: str = "normal"
    base_seed: int = 20240101
    alpha: float = 0.05
    vcov: str = "HC0"

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho_true)
        w = tuple(float(v) for v in (self.w_true or [1.0 / len(rho)] * len(rho)))
        object.__setattr__(self, "rho_true", rho)
        object.__setattr__(self, "w_true", w)
        if self.N < 20:
            raise ValueError("N must be at least 20")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.p_S < 1.0:
            raise ValueError("p_S must lie in (0, 1)")
        if len(w) != len(rho) or any(v <= 0 for v in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("w_true must be positive, sum to 1 and match rho_true in length")
        if any(r <= -1.0 for r in rho):
            raise ValueError("every rho must exceed -1")
        if self.error_kind not in ("normal", "skew_normal"):
            raise ValueError(f"unknown error_kind {self.error_kind!r}")
        if self.vcov not in ("HC0", "classical"):
            raise ValueError(f"unknown vcov {self.vcov!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def n_groups(self):
        return len(self.rho_true)

    @property
    def tau_true(self):
        return np.log1p(np.asarray(self.rho_true))


def true_values(config: SimConfig) -> dict:
    """Population tau_bar, exp(tau_bar) - 1 and the percentage-point average."""
    w = np.asarray(config.w_true)
    tau = config.tau_true
    tb = float(w @ tau)
    return {
        "tau_bar": tb,
        "rho_a": math.expm1(tb),
        "rho_bar": math.fsum(wi * r for wi, r in zip(config.w_true, config.rho_true)),
    }


def rep_rng(base_seed: int, rep_index: int, attempt: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(rep_index), int(attempt)))
    return np.random.Generator(np.random.Philox(ss))


def skew_normal_sample(rng: np.random.Generator, size=None, shape: float = SKEW_SHAPE):
    """Location-0 skew normal scaled to unit variance.

    Z = delta |U0| + sqrt(1 - delta^2) U1 with delta = shape / sqrt(1 + shape^2),
    multiplied by 1 / sqrt(1 - 2 delta^2 / pi). The mean is left nonzero.
    """
    delta = shape / math.sqrt(1.0 + shape * shape)
    omega = 1.0 / math.sqrt(1.0 - 2.0 * delta * delta / math.pi)
    u0 = rng.standard_normal(size)
    u1 = rng.standard_normal(size)
    return omega * (delta * np.abs(u0) + math.sqrt(1.0 - delta * delta) * u1)


def dgp_sample(config: SimConfig, rep_index: int, attempt: int = 0):
    """Draw one data set. Returns ``(x, group, log_y)``; group 0 is control."""
    rng = rep_rng(config.base_seed, rep_index, attempt)
    n = config.N
    probs = np.concatenate([[1.0 - config.p_S], config.p_S * np.asarray(config.w_true)])
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    group = np.searchsorted(cum, rng.random(n), side="right")
    x = rng.standard_normal(n)
    if config.error_kind == "normal":
        eps = rng.standard_normal(n)
    else:
        eps = skew_normal_sample(rng, n)
    tau = np.concatenate([[0.0], config.tau_true])
    log_y = 1.0 + x + tau[group] + eps
    return x, group, log_y


def _design(x, group, G):
    n = x.shape[0]
    X = np.empty((n, 2 + G))
    X[:, 0] = 1.0
    X[:, 1] = x
    for g in range(G):
        X[:, 2 + g] = group == g + 1
    labels = ("const", "x") + tuple(f"d[{g + 1}]" for g in range(G))
    return DesignMatrix(X, labels, tuple(range(2, 2 + G)))


def replicate(config: SimConfig, rep_index: int):
    """One replication: estimates plus the two rejection indicators.

    Draws with an empty cell (control or any subgroup) or a degenerate fit are
    redrawn from the next sub-stream. Returns ``(values, attempts)`` with values
    ordered as ESTIMATORS followed by reject_tau, reject_mu.
    """
    G = config.n_groups
    crit = -normal_quantile(config.alpha / 2.0)
    for attempt in range(MAX_REDRAWS):
        x, group, log_y = dgp_sample(config, rep_index, attempt)
        counts = np.bincount(group, minlength=G + 1)
        if np.any(counts == 0):
            continue
        try:
            vals = _estimate(config, x, group, log_y, counts[1:], crit)
        except NumericalError:
            continue
        return vals, attempt + 1
    raise PctAteError(f"replication {rep_index}: no nondegenerate draw in {MAX_REDRAWS} attempts")


def _estimate(config, x, group, log_y, counts, crit):
    design = _design(x, group, config.n_groups)
    fit = fit_ols(design, log_y)
    cov = hc0_vcov(fit, design) if config.vcov == "HC0" else classical_vcov(fit)
    idx = list(design.treatment_columns)
    effects = EffectEstimates(fit.coefficients[idx], cov.submatrix(idx), fit.residual_df, cov.kind)
    shares = estimate_shares(counts)
    pe = point_estimates(shares, effects)

    se = se_tau_bar(shares, effects)
    eta = eta_hat(shares, effects)
    mu = mu_hat(eta)
    s2 = sigma_mu2_hat(shares, effects, eta)
    if not (se > 0 and s2 > 0):
        raise DegenerateInference("zero standard error")
    z_tau = pe.tau_bar / se
    z_mu = (mu + 0.5 * s2) / math.sqrt(s2)
    return (pe.tau_bar, pe.rho_a, pe.rho_b, pe.rho_c, pe.rho_d, float(abs(z_tau) > crit), float(abs(z_mu) > crit))


def _run_chunk(args):
    config, start, stop = args
    out = np.empty((stop - start, len(ESTIMATORS) + 2))
    attempts = np.empty(stop - start, dtype=np.int64)
    for j, i in enumerate(range(start, stop)):
        out[j], attempts[j] = replicate(config, i)
    return start, out, attempts


def default_workers():
    try:
        return max(1, int(os.environ.get("PCTATE_WORKERS", "1")))
    except ValueError:
        return 1


def simulate_draws(config: SimConfig, workers: int | None = None):
    """Per-replication results, shape (reps, 7), in replication order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    reps = config.reps
    out = np.empty((reps, len(ESTIMATORS) + 2))
    attempts = np.empty(reps, dtype=np.int64)
    if workers == 1 or reps < 2:
        _, out[:], attempts[:] = _run_chunk((config, 0, reps))
        return out, attempts
    n_chunks = min(reps, workers * 4)
    bounds = np.linspace(0, reps, n_chunks + 1).astype(int)
    jobs = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for start, block, att in ex.map(_run_chunk, jobs):
            out[start:start + block.shape[0]] = block
            attempts[start:start + block.shape[0]] = att
    return out, attempts


@dataclass(frozen=True)
class SimRow:
    N: int
    reps: int
    mean: dict
    sd: dict
    rej_tau: float
    rej_mu: float
    redraws: int


@dataclass(frozen=True)
class SimTable:
    """Per-N summaries; all stored as proportions, rejection rates in percent."""

    config: SimConfig
    truth: dict
    rows: list = field(default_factory=list)

    def row(self, N):
        for r in self.rows:
            if r.N == N:
                return r
        raise KeyError(N)

    def to_records(self, scale=100.0):
        recs = []
        for r in self.rows:
            rec = {"N": r.N, "reps": r.reps}
            for k in ESTIMATORS:
                rec[f"{k}_mean"] = scale * r.mean[k]
                rec[f"{k}_sd"] = scale * r.sd[k]
            rec["rej_z_tau"] = r.rej_tau
            rec["rej_z_mu"] = r.rej_mu
            rec["redraws"] = r.redraws
            recs.append(rec)
        return recs

    def to_json(self) -> str:
        cfg = asdict(self.config)
        cfg.pop("N")
        doc = {
            "scaled_by_100": True,
            "config": cfg,
            "true_values": {k: 100.0 * v for k, v in self.truth.items()},
            "rows": self.to_records(),
        }
        return json.dumps(doc, indent=2, sort_keys=False)

    def to_csv(self) -> str:
        recs = self.to_records()
        buf = io.StringIO()
        fields = ["N", "reps"] + [f"{k}_{s}" for k in ESTIMATORS for s in ("mean", "sd")] + [
            "rej_z_tau", "rej_z_mu", "redraws",
        ]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        truth = {"N": "true", "reps": ""}
        truth.update({f"{k}_mean": "" for k in ESTIMATORS})
        truth.update({f"{k}_sd": "" for k in ESTIMATORS})
        truth["tau_bar_mean"] = repr(100.0 * self.truth["tau_bar"])
        truth["rho_a_mean"] = repr(100.0 * self.truth["rho_a"])
        for k in ("rho_b", "rho_c", "rho_d"):
            truth[f"{k}_mean"] = repr(100.0 * self.truth["rho_bar"])
        truth.update({"rej_z_tau": repr(100.0 * self.config.alpha), "rej_z_mu": repr(100.0 * self.config.alpha), "redraws": ""})
        w.writerow(truth)
        for rec in recs:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})
        return buf.getvalue()


def summarize(config: SimConfig, draws: np.ndarray, attempts: np.ndarray) -> SimRow:
    ddof = 1 if draws.shape[0] > 1 else 0
    k = len(ESTIMATORS)
    mean = {name: float(np.mean(draws[:, j])) for j, name in enumerate(ESTIMATORS)}
    sd = {name: float(np.std(draws[:, j], ddof=ddof)) for j, name in enumerate(ESTIMATORS)}
    return SimRow(
        N=config.N,
        reps=config.reps,
        mean=mean,
        sd=sd,
        rej_tau=100.0 * float(np.mean(draws[:, k])),
        rej_mu=100.0 * float(np.mean(draws[:, k + 1])),
        redraws=int(np.sum(attempts - 1)),
    )


def run_experiment(config: SimConfig, n_grid=None, workers: int | None = None) -> SimTable:
    """Run the design for ``config.N`` or for every N in ``n_grid``."""
    grid = [config.N] if n_grid is None else [int(n) for n in n_grid]
    rows = []
    for n in grid:
        cfg = replace(config, N=n)
        draws, attempts = simulate_draws(cfg, workers)
        rows.append(summarize(cfg, draws, attempts))
    return SimTable(config, true_values(config), rows)
