"""Price-time priority limit order book with unit-size orders.

Prices live on an integer grid of log-price ticks (one tick = 0.01 in
log-price). Every order has size 1, so a crossing order consumes exactly
one resting order at the opposite best and never rests itself.
"""

from __future__ import annotations

import heapq
import io
from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

TICK = 0.01
BUY = 1
SELL = -1


def to_ticks(log_price: float) -> int:
    """Nearest tick, ties away from zero."""
    v = log_price / TICK
    return int(np.sign(v) * np.floor(abs(v) + 0.5))


def to_log_price(ticks: int) -> float:
    return ticks * TICK


@dataclass
class Order:
    id: int
    side: int
    price: int
    entry_time: int
    # ticks to the opposite best at entry; None when that side was empty
    initial_distance: int | None


@dataclass(frozen=True)
class Rested:
    order_id: int


@dataclass(frozen=True)
class Executed:
    trade_price: int
    resting_id: int


class OrderBook:
    def __init__(self):
        self._orders: dict[int, Order] = {}
        self._levels: dict[int, dict[int, deque]] = {BUY: {}, SELL: {}}
        self._heaps: dict[int, list[int]] = {BUY: [], SELL: []}
        self._count = {BUY: 0, SELL: 0}
        self._next_id = 0
        self.placed = 0
        self.executed = 0
        self.cancelled = 0

    @classmethod
    def seeded(cls, bid: int = -1, ask: int = 1) -> "OrderBook":
        """Book primed with one bid and one ask around log-price 0."""
        book = cls()
        book.place(BUY, bid, 0)
        book.place(SELL, ask, 0)
        return book

    # -- queries ---------------------------------------------------------

    def _best(self, side: int) -> int | None:
        heap = self._heaps[side]
        levels = self._levels[side]
        while heap:
            price = -heap[0] if side == BUY else heap[0]
            if price in levels:
                return price
            heapq.heappop(heap)
        return None

    @property
    def best_bid(self) -> int | None:
        return self._best(BUY)

    @property
    def best_ask(self) -> int | None:
        return self._best(SELL)

    def quotes(self) -> tuple[int | None, int | None]:
        return self.best_bid, self.best_ask

    @property
    def n_buy(self) -> int:
        return self._count[BUY]

    @property
    def n_sell(self) -> int:
        return self._count[SELL]

    @property
    def n_tot(self) -> int:
        return self._count[BUY] + self._count[SELL]

    def __len__(self) -> int:
        return self.n_tot

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._orders

    def get(self, order_id: int) -> Order | None:
        return self._orders.get(order_id)

    def resting(self) -> Iterator[Order]:
        """Resting orders in id (arrival) order."""
        return iter(list(self._orders.values()))

    def distance_to_execution(self, order: Order) -> int | None:
        if order.side == BUY:
            ask = self.best_ask
            return None if ask is None else ask - order.price
        bid = self.best_bid
        return None if bid is None else order.price - bid

    # -- mutations -------------------------------------------------------

    def place(self, side: int, price: int, now: int) -> Rested | Executed:
        if side not in (BUY, SELL):
            raise ValueError(f"side must be +1 or -1, got {side}")
        price = int(price)
        self.placed += 1
        opposite = -side
        best_opp = self._best(opposite)
        if best_opp is not None and (price - best_opp) * side >= 0:
            queue = self._levels[opposite][best_opp]
            resting_id = queue.popleft()
            if not queue:
                del self._levels[opposite][best_opp]
            del self._orders[resting_id]
            self._count[opposite] -= 1
            self.executed += 1
            return Executed(trade_price=best_opp, resting_id=resting_id)

        oid = self._next_id
        self._next_id += 1
        dist = None if best_opp is None else abs(price - best_opp)
        self._orders[oid] = Order(oid, side, price, now, dist)
        levels = self._levels[side]
        if price not in levels:
            levels[price] = deque()
            heapq.heappush(self._heaps[side], -price if side == BUY else price)
        levels[price].append(oid)
        self._count[side] += 1
        return Rested(order_id=oid)

    def cancel(self, order_id: int) -> bool:
        order = self._orders.pop(order_id, None)
        if order is None:
            return False
        levels = self._levels[order.side]
        queue = levels[order.price]
        queue.remove(order_id)
        if not queue:
            del levels[order.price]
        self._count[order.side] -= 1
        self.cancelled += 1
        return True

    # -- debugging -------------------------------------------------------

    def depth(self) -> list[tuple[str, int, int]]:
        """(side, price, count) per level, asks high to low then bids high to low."""
        asks = sorted(self._levels[SELL].items(), reverse=True)
        bids = sorted(self._levels[BUY].items(), reverse=True)
        return ([("ask", p, len(q)) for p, q in asks]
                + [("bid", p, len(q)) for p, q in bids])

    def dump(self, sep: str = "\t") -> str:
        out = io.StringIO()
        out.write(sep.join(["side", "ticks", "log_price", "count"]) + "\n")
        for side, price, count in self.depth():
            out.write(sep.join([side, str(price), repr(to_log_price(price)), str(count)]) + "\n")
        return out.getvalue()
