"""Campaign driver: seeded ensembles of runs, summarized and binned.

A campaign evaluates one experiment configuration over n_runs independent
price paths.  Run i always consumes the generator seeded by
derive_run_seed(seed, i), so any single row of a campaign can be reproduced
bit for bit with the scalar engine, and results do not depend on chunking
or the number of worker threads.

Two execution styles:

  * in-memory (default): the per-run metric table is materialized and
    histograms are built from it,
  * streaming: two deterministic passes over the same chunks, the first for
    moments and ranges, the second for bin counts; the table is never held.

Chunks are sized by a byte budget on the chunk price matrix, never by the
thread count, so the chunk boundaries (and therefore all floating-point
reduction orders) are a pure function of the configuration.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from math import log, sqrt

import numpy as np

from .engine import BandRule, TradeTarget
from .errors import ConfigError, NumericalError, ResourceLimitError
from .stats import Histogram, fit_loglog
from .stochastic import ProcessKind, derive_run_seed, make_generator, prices_from_increments

__all__ = [
    "TABLE_COLUMNS",
    "RegimeLabel",
    "Observables",
    "ExperimentConfig",
    "CampaignResult",
    "classify_regime",
    "plan_chunks",
    "simulate_price_matrix",
    "run_campaign",
    "sweep_volume_vs_sigma",
    "sweep_volume_vs_steps",
    "sweep_fee",
]

TABLE_COLUMNS = ("il", "lvr", "volume", "fees", "n_arb_events", "final_price")

# one extra internal column: step index of the last trade, for pooled waits
_N_COLS = len(TABLE_COLUMNS) + 1
_LAST_EVENT = _N_COLS - 1

DEFAULT_CHUNK_BYTES = 64 << 20
DEFAULT_TABLE_BYTES = 1 << 30

SHORT_REGIME_MAX = 0.01
LONG_REGIME_MIN = 1.0


class RegimeLabel(str, Enum):
    SHORT = "short"
    INTERMEDIATE = "intermediate"
    LONG = "long"


def classify_regime(sigma2_t: float) -> RegimeLabel:
    """Bucket a horizon by sigma^2 * t: short <= 0.01, long >= 1."""
    if sigma2_t < 0.0:
        raise ValueError(f"sigma2_t must be nonnegative, got {sigma2_t}")
    if sigma2_t <= SHORT_REGIME_MAX:
        return RegimeLabel.SHORT
    if sigma2_t >= LONG_REGIME_MIN:
        return RegimeLabel.LONG
    return RegimeLabel.INTERMEDIATE


class Observables(str, Enum):
    """What a campaign measures.

    POOL runs the arbitrage accounting and bins every pool-side metric.
    PRICES records endpoint prices only, for comparing the simulated
    ensemble against the analytic densities; pool metrics are left out,
    which also permits additive paths that wander below zero (there the
    pool quantities have no meaning but the density itself is the point).
    """

    POOL = "pool"
    PRICES = "prices"


_POOL_HISTOGRAMS = (
    "il",
    "lvr",
    "volume",
    "fees",
    "il_minus_fees",
    "lvr_minus_fees",
    "final_price",
)
_PRICE_HISTOGRAMS = ("final_price",)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a campaign needs; hashable and JSON-friendly."""

    kind: ProcessKind
    p0: float
    sigma: float
    n_steps: int
    liquidity: float
    n_runs: int
    seed: int = 0
    fee: float = 0.0
    band_rule: BandRule = BandRule.EXACT
    target: TradeTarget = TradeTarget.ORACLE
    observables: Observables = Observables.POOL
    bins: int = 50

    def __post_init__(self) -> None:
        if self.p0 <= 0.0 or self.liquidity <= 0.0:
            raise ConfigError("p0 and liquidity must be positive")
        if self.sigma < 0.0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be positive, got {self.n_steps}")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be positive, got {self.n_runs}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if not 0.0 <= self.fee < 1.0:
            raise ConfigError(f"fee must lie in [0, 1), got {self.fee}")
        if self.bins < 1:
            raise ConfigError(f"bins must be positive, got {self.bins}")
        if self.observables is Observables.PRICES and self.fee != 0.0:
            raise ConfigError("price-density campaigns skip the pool, so fee must be 0")

    @property
    def sigma2_t(self) -> float:
        return self.sigma * self.sigma * self.n_steps

    @property
    def regime(self) -> RegimeLabel:
        return classify_regime(self.sigma2_t)

    def histogram_names(self) -> tuple[str, ...]:
        if self.observables is Observables.PRICES:
            return _PRICE_HISTOGRAMS
        return _POOL_HISTOGRAMS


@dataclass(frozen=True)
class CampaignResult:
    """Output of run_campaign.

    table is the (n_runs, 6) per-run metric matrix in TABLE_COLUMNS order,
    or None for a streaming campaign.  summary holds means with standard
    errors plus the pooled trade statistics and the regime label.
    """

    config: ExperimentConfig
    table: np.ndarray | None
    histograms: dict[str, Histogram]
    summary: dict

    def column(self, name: str) -> np.ndarray:
        if self.table is None:
            raise ValueError("streaming campaign kept no per-run table")
        return self.table[:, TABLE_COLUMNS.index(name)]


def plan_chunks(
    n_runs: int, n_steps: int, chunk_bytes: int = DEFAULT_CHUNK_BYTES
) -> list[tuple[int, int]]:
    """Fixed [start, stop) run ranges whose price matrices fit chunk_bytes."""
    row_bytes = (n_steps + 1) * 8
    if row_bytes > chunk_bytes:
        raise ResourceLimitError(
            f"a single path of {n_steps} steps needs {row_bytes} bytes, over the "
            f"{chunk_bytes}-byte chunk budget; lower n_steps or raise the budget"
        )
    rows = max(1, chunk_bytes // row_bytes)
    return [(a, min(a + rows, n_runs)) for a in range(0, n_runs, rows)]


def simulate_price_matrix(
    kind: ProcessKind, p0: float, sigma: float, n_steps: int, seeds
) -> np.ndarray:
    """Price paths for the given per-run seeds, one row per run.

    Row j is bit-identical to generate_path with seed seeds[j]: each row
    draws its increments from its own counter-based generator.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    dw = np.empty((seeds.size, n_steps), dtype=float)
    for j, s in enumerate(seeds):
        dw[j] = make_generator(int(s)).standard_normal(n_steps)
    return prices_from_increments(kind, p0, sigma, dw)


def _chunk_seeds(config: ExperimentConfig, lo: int, hi: int) -> np.ndarray:
    return np.asarray(
        [derive_run_seed(config.seed, i) for i in range(lo, hi)], dtype=np.uint64
    )


def _require_positive_prices(prices: np.ndarray, config: ExperimentConfig) -> None:
    if prices.min() <= 0.0:
        raise NumericalError(
            "a path reached a nonpositive price; the additive process with "
            f"sigma*sqrt(t) = {config.sigma * sqrt(config.n_steps):.3g} leaks through zero, "
            "use a shorter horizon or the multiplicative process"
        )


def _metrics_no_fee(prices: np.ndarray, liquidity: float) -> np.ndarray:
    roots = np.sqrt(prices)
    r_prev = roots[:, :-1]
    r_next = roots[:, 1:]
    droot = r_next - r_prev
    out = np.empty((prices.shape[0], _N_COLS), dtype=float)
    out[:, 0] = liquidity / roots[:, 0] * (1.0 - roots[:, 0] / roots[:, -1]) ** 2
    out[:, 1] = (liquidity * droot * droot / (r_prev * r_next * r_next)).sum(axis=1)
    out[:, 2] = (liquidity * np.abs(droot) / (r_prev * r_next)).sum(axis=1)
    out[:, 3] = 0.0
    moved = droot != 0.0
    out[:, 4] = moved.sum(axis=1)
    out[:, 5] = prices[:, -1]
    n_steps = prices.shape[1] - 1
    any_move = moved.any(axis=1)
    last = n_steps - np.argmax(moved[:, ::-1], axis=1)
    out[:, _LAST_EVENT] = np.where(any_move, last, 0)
    return out


def _metrics_fee_band(
    prices: np.ndarray,
    liquidity: float,
    fee: float,
    band_rule: BandRule,
    target: TradeTarget,
) -> np.ndarray:
    """Band arbitrage across a whole chunk, stepping all runs together.

    Mirrors engine.run_with_fees trade for trade: same band test, same
    post-trade price, loss charged over the executed jump, fees tallied on
    the x leg without compounding.
    """
    n_rows, m = prices.shape
    keep = 1.0 - fee
    p_amm = prices[:, 0].copy()
    lvr = np.zeros(n_rows)
    vol = np.zeros(n_rows)
    n_ev = np.zeros(n_rows, dtype=np.int64)
    last_ev = np.zeros(n_rows, dtype=np.int64)
    for step in range(1, m):
        p_ref = prices[:, step]
        lower = p_amm * keep
        upper = p_amm / keep if band_rule is BandRule.EXACT else p_amm * (1.0 + fee)
        up = p_ref > upper
        dn = p_ref < lower
        hit = up | dn
        if not hit.any():
            continue
        if target is TradeTarget.ORACLE:
            tgt = p_ref
        elif band_rule is BandRule.EXACT:
            tgt = np.where(up, p_ref * keep, p_ref / keep)
        else:
            tgt = np.where(up, p_ref / (1.0 + fee), p_ref / keep)
        p_new = np.where(hit, tgt, p_amm)
        ra = np.sqrt(p_amm)
        rh = np.sqrt(p_new)
        dr = rh - ra
        lvr += liquidity * dr * dr / (ra * rh * rh)
        vol += liquidity * np.abs(dr) / (ra * rh)
        n_ev += hit
        last_ev = np.where(hit, step, last_ev)
        p_amm = p_new
    out = np.empty((n_rows, _N_COLS), dtype=float)
    r0 = np.sqrt(prices[:, 0])
    out[:, 0] = liquidity / r0 * (1.0 - r0 / np.sqrt(p_amm)) ** 2
    out[:, 1] = lvr
    out[:, 2] = vol
    out[:, 3] = fee * vol
    out[:, 4] = n_ev
    out[:, 5] = p_amm
    out[:, _LAST_EVENT] = last_ev
    return out


def _metrics_prices_only(prices: np.ndarray) -> np.ndarray:
    out = np.full((prices.shape[0], _N_COLS), np.nan)
    out[:, 4] = 0.0
    out[:, 5] = prices[:, -1]
    out[:, _LAST_EVENT] = 0.0
    return out


def _compute_chunk(config: ExperimentConfig, lo: int, hi: int) -> np.ndarray:
    seeds = _chunk_seeds(config, lo, hi)
    prices = simulate_price_matrix(config.kind, config.p0, config.sigma, config.n_steps, seeds)
    if config.observables is Observables.PRICES:
        return _metrics_prices_only(prices)
    if config.kind is ProcessKind.BM:
        _require_positive_prices(prices, config)
    if config.fee == 0.0:
        return _metrics_no_fee(prices, config.liquidity)
    return _metrics_fee_band(
        prices, config.liquidity, config.fee, config.band_rule, config.target
    )


def _observable_values(rows: np.ndarray, name: str) -> np.ndarray:
    if name == "il_minus_fees":
        return rows[:, 0] - rows[:, 3]
    if name == "lvr_minus_fees":
        return rows[:, 1] - rows[:, 3]
    return rows[:, TABLE_COLUMNS.index(name)]


def _summarize(config: ExperimentConfig, table: np.ndarray) -> dict:
    n = table.shape[0]
    summary: dict = {"n_runs": n, "sigma2_t": config.sigma2_t, "regime": config.regime.value}
    if config.observables is Observables.PRICES:
        col = table[:, 5]
        summary["mean_final_price"] = float(col.mean())
        summary["stderr_final_price"] = float(col.std(ddof=1) / sqrt(n)) if n > 1 else 0.0
        return summary
    for name in ("il", "lvr", "volume", "fees"):
        col = table[:, TABLE_COLUMNS.index(name)]
        mean = float(col.mean())
        summary[f"mean_{name}"] = mean
        summary[f"stderr_{name}"] = float(col.std(ddof=1) / sqrt(n)) if n > 1 else 0.0
    total_events = float(table[:, 4].sum())
    summary["mean_events"] = total_events / n
    # pooled wait: elapsed trading time over number of trades, run start anchored
    summary["mean_wait"] = (
        float(table[:, _LAST_EVENT].sum()) / total_events if total_events > 0 else float("nan")
    )
    return summary


def _map_chunks(worker, chunks, threads: int | None):
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, min(threads, len(chunks)))
    if threads == 1:
        return [worker(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, chunks))


def run_campaign(
    config: ExperimentConfig,
    threads: int | None = None,
    streaming: bool = False,
    max_table_bytes: int = DEFAULT_TABLE_BYTES,
    chunk_bytes: int = DEFAULT_CHUNK_BYTES,
) -> CampaignResult:
    """Evaluate the configuration over its run ensemble.

    Raises ResourceLimitError when the in-memory table would exceed
    max_table_bytes (streaming mode lifts that) or when one path alone
    overflows the chunk budget.
    """
    table_bytes = config.n_runs * _N_COLS * 8
    if not streaming and table_bytes > max_table_bytes:
        raise ResourceLimitError(
            f"per-run table needs {table_bytes} bytes (> {max_table_bytes}); "
            "lower n_runs or run with streaming=True"
        )
    chunks = plan_chunks(config.n_runs, config.n_steps, chunk_bytes)
    names = config.histogram_names()

    if not streaming:
        full = np.empty((config.n_runs, _N_COLS), dtype=float)

        def worker(span: tuple[int, int]):
            lo, hi = span
            full[lo:hi] = _compute_chunk(config, lo, hi)

        _map_chunks(worker, chunks, threads)
        histograms = {
            name: Histogram.from_samples(_observable_values(full, name), bins=config.bins)
            for name in names
        }
        summary = _summarize(config, full)
        return CampaignResult(
            config=config,
            table=full[:, : len(TABLE_COLUMNS)].copy(),
            histograms=histograms,
            summary=summary,
        )

    # streaming: pass 1 for ranges, moments and the summary, pass 2 for counts
    pool_cols = () if config.observables is Observables.PRICES else (
        "il", "lvr", "volume", "fees"
    )

    def pass_one(span: tuple[int, int]):
        rows = _compute_chunk(config, *span)
        per_obs = {}
        for name in names + (("final_price",) if "final_price" not in names else ()):
            v = _observable_values(rows, name)
            per_obs[name] = (
                float(v.min()),
                float(v.max()),
                float(v.sum()),
                float((v * v).sum()),
                float((v * v * v).sum()),
            )
        core = {
            col: (float(c.sum()), float((c * c).sum()))
            for col, c in ((k, rows[:, TABLE_COLUMNS.index(k)]) for k in pool_cols)
        }
        return per_obs, core, float(rows[:, 4].sum()), float(rows[:, _LAST_EVENT].sum())

    partials = _map_chunks(pass_one, chunks, threads)

    n = config.n_runs
    summary = {"n_runs": n, "sigma2_t": config.sigma2_t, "regime": config.regime.value}
    for col in pool_cols:
        s1 = sum(p[1][col][0] for p in partials)
        s2 = sum(p[1][col][1] for p in partials)
        mean = s1 / n
        var = max(0.0, (s2 / n - mean * mean))
        summary[f"mean_{col}"] = mean
        summary[f"stderr_{col}"] = sqrt(var * n / (n - 1) / n) if n > 1 else 0.0
    if config.observables is Observables.PRICES:
        s1, s2 = (sum(p[0]["final_price"][k] for p in partials) for k in (2, 3))
        mean = s1 / n
        var = max(0.0, s2 / n - mean * mean)
        summary["mean_final_price"] = mean
        summary["stderr_final_price"] = sqrt(var * n / (n - 1) / n) if n > 1 else 0.0
    else:
        total_events = sum(p[2] for p in partials)
        summary["mean_events"] = total_events / n
        summary["mean_wait"] = (
            sum(p[3] for p in partials) / total_events if total_events > 0 else float("nan")
        )

    edges = {}
    moments = {}
    for name in names:
        lo = min(p[0][name][0] for p in partials)
        hi = max(p[0][name][1] for p in partials)
        if lo == hi:
            span = max(abs(lo) * 1e-9, 1e-12)
            lo, hi = lo - span, hi + span
        edges[name] = np.linspace(lo, hi, config.bins + 1)
        s1 = sum(p[0][name][2] for p in partials)
        s2 = sum(p[0][name][3] for p in partials)
        s3 = sum(p[0][name][4] for p in partials)
        mean = s1 / n
        m2 = max(0.0, s2 / n - mean * mean)
        m3 = s3 / n - 3.0 * mean * m2 - mean**3
        moments[name] = (mean, m2, m3 / m2**1.5 if m2 > 0 else 0.0)

    def pass_two(span: tuple[int, int]):
        rows = _compute_chunk(config, *span)
        return {
            name: np.histogram(_observable_values(rows, name), bins=edges[name])[0]
            for name in names
        }

    counted = _map_chunks(pass_two, chunks, threads)
    histograms = {}
    for name in names:
        counts = np.sum([c[name] for c in counted], axis=0)
        mean, m2, skew = moments[name]
        histograms[name] = Histogram(
            bin_edges=edges[name],
            counts=counts.astype(np.int64),
            n_total=int(counts.sum()),
            mean=mean,
            variance=m2,
            skewness=skew,
        )
    return CampaignResult(config=config, table=None, histograms=histograms, summary=summary)


def _rowset(result: CampaignResult, extra: dict) -> dict:
    row = dict(extra)
    for key in ("mean_il", "stderr_il", "mean_lvr", "stderr_lvr", "mean_volume",
                "stderr_volume", "mean_fees", "stderr_fees", "mean_events", "mean_wait"):
        row[key] = result.summary[key]
    return row


def sweep_volume_vs_sigma(
    base: ExperimentConfig, sigmas, threads: int | None = None
) -> dict:
    """Campaigns across volatilities on common random numbers.

    All campaigns reuse base.seed, so run i sees the same Gaussian
    increments at every volatility and the fitted slopes are nearly free of
    Monte Carlo jitter.  Returns per-sigma rows plus log-log slopes of the
    mean trading volume and mean loss against sigma.
    """
    sig = [float(s) for s in sigmas]
    if len(sig) < 2 or any(s <= 0.0 for s in sig):
        raise ConfigError("need at least two positive volatilities")
    rows = []
    for s in sig:
        res = run_campaign(replace(base, sigma=s), threads=threads)
        rows.append(_rowset(res, {"sigma": s}))
    vol_slope, vol_err = fit_loglog(sig, [r["mean_volume"] for r in rows])
    lvr_slope, lvr_err = fit_loglog(sig, [r["mean_lvr"] for r in rows])
    return {
        "rows": rows,
        "volume_slope": vol_slope,
        "volume_slope_stderr": vol_err,
        "lvr_slope": lvr_slope,
        "lvr_slope_stderr": lvr_err,
    }


def sweep_volume_vs_steps(
    base: ExperimentConfig,
    steps_list,
    total_variance: float | None = None,
    threads: int | None = None,
) -> dict:
    """Campaigns across step counts at fixed total price variance.

    Each campaign uses sigma_n = sqrt(total_variance / n_steps), so the
    endpoint distribution is held fixed while the sampling gets finer: the
    cumulative loss should stay put while volume grows like sqrt(n_steps).
    """
    steps = [int(v) for v in steps_list]
    if len(steps) < 2 or any(v < 1 for v in steps):
        raise ConfigError("need at least two positive step counts")
    if total_variance is None:
        total_variance = base.sigma2_t
    if total_variance <= 0.0:
        raise ConfigError("total_variance must be positive")
    rows = []
    for n in steps:
        sigma_n = sqrt(total_variance / n)
        res = run_campaign(replace(base, n_steps=n, sigma=sigma_n), threads=threads)
        rows.append(_rowset(res, {"n_steps": n, "sigma": sigma_n}))
    vol_slope, vol_err = fit_loglog(steps, [r["mean_volume"] for r in rows])
    lvr_means = np.asarray([r["mean_lvr"] for r in rows])
    spread = float((lvr_means.max() - lvr_means.min()) / lvr_means.mean())
    return {
        "rows": rows,
        "volume_slope": vol_slope,
        "volume_slope_stderr": vol_err,
        "lvr_relative_spread": spread,
    }


def _interp_crossover(fees, waits, level: float = 2.0) -> float | None:
    # first log-linear crossing of the pooled mean wait through `level`
    for i in range(len(fees) - 1):
        w0, w1 = waits[i], waits[i + 1]
        if w0 < level <= w1:
            frac = (level - w0) / (w1 - w0)
            return float(np.exp(log(fees[i]) + frac * (log(fees[i + 1]) - log(fees[i]))))
    return None


def sweep_fee(base: ExperimentConfig, fees, threads: int | None = None) -> dict:
    """Campaigns across fee levels plus a fee-free baseline on the same seeds.

    Rows carry f / sigma alongside the loss, volume and trade-frequency
    summaries, and the loss ratio against the baseline.  Fits: the log-log
    volume and loss slopes over the deep-fee rows (f / sigma >= 10) where
    trades are rare, and the fee at which the pooled mean wait crosses two
    steps, the practical edge of the trade-every-step region.
    """
    fee_list = [float(f) for f in fees]
    if not fee_list or any(f <= 0.0 for f in fee_list):
        raise ConfigError("fee sweep needs positive fees")
    if any(b <= a for a, b in zip(fee_list, fee_list[1:])):
        raise ConfigError("fees must be strictly increasing")
    baseline = run_campaign(replace(base, fee=0.0), threads=threads)
    rows = []
    for f in fee_list:
        res = run_campaign(replace(base, fee=f), threads=threads)
        row = _rowset(res, {"fee": f, "f_over_sigma": f / base.sigma})
        row["lvr_ratio"] = row["mean_lvr"] / baseline.summary["mean_lvr"]
        row["volume_ratio"] = row["mean_volume"] / baseline.summary["mean_volume"]
        rows.append(row)
    deep = [r for r in rows if r["f_over_sigma"] >= 10.0]
    fits: dict = {"crossover_fee": _interp_crossover(fee_list, [r["mean_wait"] for r in rows])}
    if len(deep) >= 2:
        xs = [r["fee"] for r in deep]
        fits["deep_volume_slope"], fits["deep_volume_slope_stderr"] = fit_loglog(
            xs, [r["mean_volume"] for r in deep]
        )
        fits["deep_lvr_slope"], fits["deep_lvr_slope_stderr"] = fit_loglog(
            xs, [r["mean_lvr"] for r in deep]
        )
    return {"baseline": baseline.summary, "rows": rows, "fits": fits}
