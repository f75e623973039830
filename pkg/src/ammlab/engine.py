"""Arbitrage execution against an external reference price.

Without fees an arbitrageur aligns the pool with the reference price at
every step, so the pool simply replays the path and the engine reproduces
the path metrics exactly.

With a proportional fee f the pool is only worth trading once the reference
price leaves a no-trade band around the pool spot price p:

    exact band:      [p * (1 - f), p / (1 - f)]
    linearized band: [p * (1 - f), p * (1 + f)]

Two post-trade conventions are supported.  The marginal rule (default)
swaps until the marginal profit net of fee vanishes, which parks the pool
at the price whose band edge sits exactly on the reference price: after an
upward breakout the reference price is the upper edge of the new band, so
one more move in the same direction triggers the next trade immediately,
while a reversal must traverse the whole band.  The oracle rule swaps all
the way to the reference price, which re-centers the band instead.  The
marginal rule is the one that yields the linear growth of waiting times
with f and the 1/f fee suppression of the rebalancing loss; the oracle
rule keeps the expected loss at its fee-free value because the traded
increments still telescope the full quadratic variation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .cfmm import Pool, swap_to_price
from .metrics import RunMetrics, il_between, lvr_step
from .stats import Histogram
from .stochastic import PricePath

__all__ = [
    "EngineMode",
    "BandRule",
    "TradeTarget",
    "ArbitrageConfig",
    "ArbEvent",
    "WaitStats",
    "no_trade_band",
    "trade_target",
    "run_no_fee",
    "run_with_fees",
    "arb_wait_statistics",
]


class EngineMode(Enum):
    NO_FEE = "no_fee"
    FEE_BAND = "fee_band"


class BandRule(str, Enum):
    EXACT = "exact"
    LINEARIZED = "linearized"


class TradeTarget(str, Enum):
    MARGINAL = "marginal"
    ORACLE = "oracle"


@dataclass(frozen=True)
class ArbitrageConfig:
    """Fee level plus band and post-trade conventions.

    mode is derived from the fee when left unset; a zero fee always forces
    NO_FEE because the band collapses to a point.

    The default post-trade convention snaps the pool to the reference price
    itself.  The MARGINAL alternative stops at the band-consistent marginal
    price (reference scaled by the fee), which leaves the reference sitting
    on the new band edge; that rule changes the fee-regime statistics and is
    exposed for sensitivity runs.
    """

    fee: float = 0.0
    mode: EngineMode | None = None
    band_rule: BandRule = BandRule.EXACT
    target: TradeTarget = TradeTarget.ORACLE

    def __post_init__(self) -> None:
        if not 0.0 <= self.fee < 1.0:
            raise ValueError(f"fee must lie in [0, 1), got {self.fee}")
        mode = self.mode
        if mode is None:
            mode = EngineMode.FEE_BAND if self.fee > 0.0 else EngineMode.NO_FEE
        if self.fee == 0.0:
            mode = EngineMode.NO_FEE
        object.__setattr__(self, "mode", mode)


@dataclass(frozen=True)
class ArbEvent:
    """One executed arbitrage trade."""

    step: int
    price_before: float
    price_after: float
    volume_x: float
    fee_x: float
    lvr_increment: float


@dataclass(frozen=True)
class WaitStats:
    mean_wait: float
    histogram: Histogram


def no_trade_band(price: float, fee: float, band_rule: BandRule = BandRule.EXACT):
    """Closed interval of reference prices that leaves the pool untouched."""
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    if not 0.0 <= fee < 1.0:
        raise ValueError(f"fee must lie in [0, 1), got {fee}")
    lower = price * (1.0 - fee)
    if band_rule is BandRule.EXACT:
        upper = price / (1.0 - fee)
    else:
        upper = price * (1.0 + fee)
    return lower, upper


def trade_target(
    reference_price: float, upward: bool, fee: float, band_rule: BandRule, target: TradeTarget
) -> float:
    """Post-trade pool price for a breakout in the given direction."""
    if target is TradeTarget.ORACLE:
        return reference_price
    if upward:
        if band_rule is BandRule.EXACT:
            return reference_price * (1.0 - fee)
        return reference_price / (1.0 + fee)
    return reference_price / (1.0 - fee)


def _check_path(path: PricePath) -> np.ndarray:
    prices = path.prices
    if np.any(prices <= 0.0):
        bad = int(np.argmax(prices <= 0.0))
        raise ValueError(
            f"path price at step {bad} is nonpositive; pool arbitrage requires positive prices"
        )
    return prices


def run_no_fee(path: PricePath, pool: Pool) -> tuple[RunMetrics, list[ArbEvent]]:
    """Align the pool with every path price in turn.

    The pool must be fee-free.  The resulting metrics match
    metrics.accumulate on the same path; the trade list holds one event per
    step with a nonzero price change.
    """
    if pool.fee != 0.0:
        raise ValueError("run_no_fee requires a fee-free pool")
    prices = _check_path(path)
    liquidity = pool.liquidity
    entry_price = float(prices[0])

    events: list[ArbEvent] = []
    lvr = 0.0
    volume = 0.0
    for step in range(1, prices.size):
        p_before = float(prices[step - 1])
        p_after = float(prices[step])
        pool, volume_x, _ = swap_to_price(pool, p_after)
        if volume_x == 0.0:
            continue
        inc = lvr_step(liquidity, p_before, p_after)
        lvr += inc
        volume += volume_x
        events.append(
            ArbEvent(
                step=step,
                price_before=p_before,
                price_after=p_after,
                volume_x=volume_x,
                fee_x=0.0,
                lvr_increment=inc,
            )
        )
    metrics = RunMetrics(
        il=il_between(liquidity, entry_price, float(prices[-1])),
        lvr=lvr,
        volume=volume,
        fees=0.0,
        n_arb_events=len(events),
        final_price=float(prices[-1]),
    )
    return metrics, events


def run_with_fees(
    path: PricePath, pool: Pool, config: ArbitrageConfig, record_events: bool = True
) -> tuple[RunMetrics, list[ArbEvent]]:
    """Trade only on band breakouts and tally fees on the x leg.

    config.fee governs both the band and the fee accounting; the pool's own
    fee field is overridden for the duration of the run.  The per-step loss
    is charged over the executed jump only (pre-trade pool price to
    post-trade pool price): steps the pool sits out are coarse grained into
    the next trade.  il is measured from the path start to the final pool
    price, fees never compound into the reserves.
    """
    if config.fee <= 0.0 or config.mode is not EngineMode.FEE_BAND:
        raise ValueError("run_with_fees requires a positive fee; use run_no_fee instead")
    prices = _check_path(path)
    fee = config.fee
    pool = replace(pool, fee=fee)
    liquidity = pool.liquidity
    entry_price = float(prices[0])

    events: list[ArbEvent] = []
    lvr = 0.0
    volume = 0.0
    fees = 0.0
    n_events = 0
    p_amm = float(pool.spot_price)
    for step in range(1, prices.size):
        p_ref = float(prices[step])
        lower, upper = no_trade_band(p_amm, fee, config.band_rule)
        if lower <= p_ref <= upper:
            continue
        upward = p_ref > upper
        p_new = trade_target(p_ref, upward, fee, config.band_rule, config.target)
        pool, volume_x, fee_x = swap_to_price(pool, p_new)
        inc = lvr_step(liquidity, p_amm, p_new)
        lvr += inc
        volume += volume_x
        fees += fee_x
        n_events += 1
        if record_events:
            events.append(
                ArbEvent(
                    step=step,
                    price_before=p_amm,
                    price_after=p_new,
                    volume_x=volume_x,
                    fee_x=fee_x,
                    lvr_increment=inc,
                )
            )
        p_amm = p_new
    metrics = RunMetrics(
        il=il_between(liquidity, entry_price, p_amm),
        lvr=lvr,
        volume=volume,
        fees=fees,
        n_arb_events=n_events,
        final_price=p_amm,
    )
    return metrics, events


def arb_wait_statistics(events: list[ArbEvent], n_steps: int, bins: int = 50) -> WaitStats:
    """Distribution of steps between consecutive trades.

    The run start counts as the anchor of the first wait (the pool begins
    aligned with the reference price, as if an arbitrage had just happened),
    so a run that trades at every step has mean_wait exactly 1.
    """
    if not events:
        raise ValueError("no arbitrage occurred; wait statistics are undefined")
    steps = np.asarray([e.step for e in events], dtype=float)
    if np.any(steps < 1) or np.any(steps > n_steps):
        raise ValueError("event steps must lie in 1..n_steps")
    waits = np.diff(np.concatenate(([0.0], steps)))
    mean = float(waits.mean())
    return WaitStats(mean_wait=mean, histogram=Histogram.from_samples(waits, bins=bins))
