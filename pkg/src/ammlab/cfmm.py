"""Constant-product pool arithmetic.

A pool holds reserves (x, y) of two tokens subject to x * y = L^2, where the
constant L measures pool depth.  The spot price of token x quoted in token y
is p = y / x, so the reserves at price p are x = L / sqrt(p), y = L * sqrt(p).
Every portfolio value in this package is denominated in token x: a position
holding the pool reserves at price p is worth x + y / p = 2 L / sqrt(p).

Swap fees are tallied on the side and never folded back into the reserves,
so L stays constant through any sequence of swaps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import sqrt

__all__ = [
    "Pool",
    "reserves_at_price",
    "position_value",
    "hodl_value",
    "swap_to_price",
]

# relative slack allowed on x * y = L^2 when validating a Pool
_PRODUCT_RTOL = 1e-12


def reserves_at_price(liquidity: float, price: float) -> tuple[float, float]:
    """Reserves (x, y) = (L / sqrt(p), L * sqrt(p)) held at spot price p."""
    if liquidity <= 0.0:
        raise ValueError(f"liquidity must be positive, got {liquidity}")
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    root = sqrt(price)
    return liquidity / root, liquidity * root


def position_value(liquidity: float, price: float) -> float:
    """Value of the pooled reserves in token-x units: 2 L / sqrt(p)."""
    if liquidity <= 0.0:
        raise ValueError(f"liquidity must be positive, got {liquidity}")
    if price <= 0.0:
        raise ValueError(f"price must be positive, got {price}")
    return 2.0 * liquidity / sqrt(price)


def hodl_value(liquidity: float, entry_price: float, current_price: float) -> float:
    """Value of the unpooled entry reserves marked at the current price.

    The benchmark portfolio takes the reserves that were deposited at
    entry_price and simply holds them, so its token-x value at price p is
    x0 + y0 / p = (L / sqrt(p0)) * (1 + p0 / p).
    """
    x0, y0 = reserves_at_price(liquidity, entry_price)
    if current_price <= 0.0:
        raise ValueError(f"price must be positive, got {current_price}")
    return x0 + y0 / current_price


@dataclass(frozen=True)
class Pool:
    """Immutable pool state.

    fee is the proportional swap fee in [0, 1).  Fees are reported by
    swap_to_price but never added to the reserves, so the product invariant
    x * y = L^2 holds exactly for the lifetime of the pool.
    """

    liquidity: float
    reserve_x: float
    reserve_y: float
    fee: float = 0.0

    def __post_init__(self) -> None:
        if not (self.liquidity > 0.0 and self.reserve_x > 0.0 and self.reserve_y > 0.0):
            raise ValueError("pool liquidity and reserves must be positive")
        if not 0.0 <= self.fee < 1.0:
            raise ValueError(f"fee must lie in [0, 1), got {self.fee}")
        target = self.liquidity * self.liquidity
        if abs(self.reserve_x * self.reserve_y - target) > _PRODUCT_RTOL * target:
            raise ValueError("reserves violate the product invariant x * y = L^2")

    @classmethod
    def from_price(cls, liquidity: float, price: float, fee: float = 0.0) -> "Pool":
        x, y = reserves_at_price(liquidity, price)
        return cls(liquidity=liquidity, reserve_x=x, reserve_y=y, fee=fee)

    @property
    def spot_price(self) -> float:
        return self.reserve_y / self.reserve_x

    @property
    def value(self) -> float:
        """Token-x value of the reserves at the current spot price."""
        return self.reserve_x + self.reserve_y / self.spot_price


def swap_to_price(pool: Pool, target_price: float) -> tuple[Pool, float, float]:
    """Swap against the pool until its spot price equals target_price.

    Returns (new_pool, volume_x, fee_paid_x).  volume_x is the unsigned
    change of the x reserve, which doubles as the trade size in token-x
    units.  The fee is charged on that x leg, fee_paid_x = fee * volume_x,
    and is accounted outside the pool: the post-trade reserves are exactly
    the no-fee reserves at target_price.
    """
    if target_price <= 0.0:
        raise ValueError(f"price must be positive, got {target_price}")
    new_x, new_y = reserves_at_price(pool.liquidity, target_price)
    volume_x = abs(new_x - pool.reserve_x)
    fee_paid_x = pool.fee * volume_x
    new_pool = replace(pool, reserve_x=new_x, reserve_y=new_y)
    return new_pool, volume_x, fee_paid_x
