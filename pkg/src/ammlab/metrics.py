"""Loss and volume metrics for a unit of pool liquidity along a price path.

All quantities are token-x denominated.  The central identity: the loss of
the pooled position against the hold-the-entry-reserves benchmark between
prices p0 and p is

    il(p0, p) = (L / sqrt(p0)) * (1 - sqrt(p0 / p))^2 >= 0,

which depends only on the endpoints.  Charging the same expression per step
and summing gives the loss against a continuously rebalanced shadow
portfolio; that sum is path dependent and never smaller than any single-step
view of the same move.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .stochastic import PricePath

__all__ = [
    "RunMetrics",
    "il_between",
    "lvr_step",
    "rebalance_quantities",
    "volume_step",
    "accumulate",
]


@dataclass(frozen=True)
class RunMetrics:
    """Aggregated token-x metrics of one simulated run."""

    il: float
    lvr: float
    volume: float
    fees: float
    n_arb_events: int
    final_price: float


def _check_positive(**named: float) -> None:
    for name, value in named.items():
        if value <= 0.0:
            raise ValueError(f"{name} must be positive, got {value}")


def il_between(liquidity: float, entry_price: float, final_price: float) -> float:
    """Endpoint loss versus holding the entry reserves; zero iff prices match."""
    _check_positive(liquidity=liquidity, entry_price=entry_price, final_price=final_price)
    diff = 1.0 - sqrt(entry_price / final_price)
    return (liquidity / sqrt(entry_price)) * diff * diff


def lvr_step(liquidity: float, price: float, next_price: float) -> float:
    """One-step loss versus the rebalancing portfolio.

    Over a single step this equals il_between(liquidity, price, next_price)
    exactly; the difference between the two metrics is entirely in how the
    per-step entry point resets.
    """
    return il_between(liquidity, price, next_price)


def rebalance_quantities(
    liquidity: float, price: float, next_price: float
) -> tuple[float, float, float]:
    """Token flows behind one rebalancing step.

    Returns (dy, dx_bar, dx):
      dy     - change of the y reserve, which the shadow portfolio must buy
               (sell when negative) to keep tracking the pool,
      dx_bar - x spent by the shadow portfolio to do so at the new price,
      dx     - x the pool position itself gave up over the step.
    The gap dx - dx_bar is the step's rebalancing loss and is positive for
    any move in either direction.
    """
    _check_positive(liquidity=liquidity, price=price, next_price=next_price)
    sp = sqrt(price)
    sn = sqrt(next_price)
    dy = liquidity * (sn - sp)
    dx_bar = (liquidity / sp) * (sp / sn - price / next_price)
    dx = (liquidity / sp) * (1.0 - sp / sn)
    return dy, dx_bar, dx


def volume_step(liquidity: float, price: float, next_price: float) -> float:
    """Unsigned x-reserve change |x(next) - x(now)| caused by one step."""
    _check_positive(liquidity=liquidity, price=price, next_price=next_price)
    return abs(liquidity / sqrt(next_price) - liquidity / sqrt(price))


def _path_prices(path) -> np.ndarray:
    prices = path.prices if isinstance(path, PricePath) else np.asarray(path, dtype=float)
    if prices.ndim != 1 or prices.size < 2:
        raise ValueError("path must hold at least two prices")
    if np.any(prices <= 0.0):
        raise ValueError("path prices must be positive for pool metrics")
    return prices


def accumulate(path, liquidity: float, checkpoints=None) -> list[RunMetrics]:
    """Metrics of one fee-free path at the requested step checkpoints.

    path may be a PricePath or a plain price array.  checkpoints defaults to
    the final step.  Per-step losses and volumes are summed up to each
    checkpoint; il is always measured from the path start to the checkpoint
    price.  Every step with a price change counts as one trade event.
    """
    _check_positive(liquidity=liquidity)
    prices = _path_prices(path)
    n_steps = prices.size - 1
    if checkpoints is None:
        checkpoints = [n_steps]
    roots = np.sqrt(prices)
    droot = roots[1:] - roots[:-1]
    lvr_steps = liquidity * droot * droot / (roots[:-1] * roots[1:] * roots[1:])
    vol_steps = liquidity * np.abs(droot) / (roots[:-1] * roots[1:])
    moved = prices[1:] != prices[:-1]
    lvr_cum = np.concatenate(([0.0], np.cumsum(lvr_steps)))
    vol_cum = np.concatenate(([0.0], np.cumsum(vol_steps)))
    moved_cum = np.concatenate(([0], np.cumsum(moved)))

    out: list[RunMetrics] = []
    for cp in checkpoints:
        cp = int(cp)
        if not 1 <= cp <= n_steps:
            raise ValueError(f"checkpoint {cp} outside 1..{n_steps}")
        out.append(
            RunMetrics(
                il=il_between(liquidity, float(prices[0]), float(prices[cp])),
                lvr=float(lvr_cum[cp]),
                volume=float(vol_cum[cp]),
                fees=0.0,
                n_arb_events=int(moved_cum[cp]),
                final_price=float(prices[cp]),
            )
        )
    return out
