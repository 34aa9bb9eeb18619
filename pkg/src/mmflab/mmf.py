"""Simulation loop of the modified Mike-Farmer order-driven market.

Every event first sweeps the book for stochastic cancellations and then
places one unit-size order whose direction and relative price come from the
pre-generated input streams. The mid-quote log return of each event is
recorded when both best quotes exist before and after it. When the side an
order is priced from is empty, its quote is imputed from the opposite best at
the last two-sided spread.

The event loop runs in a numba kernel over flat arrays kept in order-id
(arrival) order. :func:`run_reference` replays the same dynamics on the
pure-Python :class:`~mmflab.lob.OrderBook` and is used to check the kernel.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from . import stochastic
from .lob import BUY, SELL, TICK, Order, OrderBook

IMBALANCE_MODES = {"share": 0, "signed": 1}
ROUNDING_MODES = {"nearest": 0, "away": 1}
SEED_BID, SEED_ASK = -1, 1


class InvalidParams(ValueError):
    pass


class DegenerateRun(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class CancellationModel:
    A: float = 1.12
    B: float = 0.2
    # "share": n_own / n_tot as in the original Mike-Farmer fit;
    # "signed": (n_own - n_other) / n_tot
    imbalance: str = "share"


@dataclass(frozen=True)
class ModelParams:
    alpha_x: float = 1.3
    hurst_x: float = 0.8
    hurst_s: float = 0.75
    n_events: int = 200_000
    seed: int = 0
    keep_returns: int | None = None
    transient_fraction: float | None = None
    # log-price units per unit of the Student-t draw; 1.0 reads x(t) directly
    # as a log-price offset (100 ticks per unit)
    price_scale: float = 1.0
    max_relative_ticks: int | None = None
    rounding: str = "nearest"
    iaaft_max_iter: int = 100
    # runs whose book is empty on both sides for a larger share of the
    # post-transient events are rejected as degenerate
    max_empty_fraction: float = 0.01
    cancellation: CancellationModel = field(default_factory=CancellationModel)

    def validate(self) -> "ModelParams":
        if not self.alpha_x > 0:
            raise InvalidParams(f"alpha_x must be > 0, got {self.alpha_x}")
        for name in ("hurst_x", "hurst_s"):
            h = getattr(self, name)
            if not 0.5 <= h < 1.0:
                raise InvalidParams(f"{name} must lie in [0.5, 1), got {h}")
        if self.n_events < 16:
            raise InvalidParams(f"n_events must be >= 16, got {self.n_events}")
        if self.keep_returns is not None and self.keep_returns < 1:
            raise InvalidParams("keep_returns must be positive")
        if self.transient_fraction is not None and not 0.0 <= self.transient_fraction < 1.0:
            raise InvalidParams("transient_fraction must lie in [0, 1)")
        if not self.price_scale > 0:
            raise InvalidParams("price_scale must be > 0")
        if self.max_relative_ticks is not None and self.max_relative_ticks < 1:
            raise InvalidParams("max_relative_ticks must be >= 1")
        if self.rounding not in ROUNDING_MODES:
            raise InvalidParams(f"rounding must be one of {sorted(ROUNDING_MODES)}")
        if self.cancellation.imbalance not in IMBALANCE_MODES:
            raise InvalidParams(f"imbalance must be one of {sorted(IMBALANCE_MODES)}")
        if not 0.0 <= self.max_empty_fraction <= 1.0:
            raise InvalidParams("max_empty_fraction must lie in [0, 1]")
        if self.iaaft_max_iter < 1:
            raise InvalidParams("iaaft_max_iter must be >= 1")
        return self

    @property
    def default_keep(self) -> int:
        return self.keep_returns if self.keep_returns is not None else self.n_events // 5

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    events_simulated: int
    recorded: int
    kept: int


@dataclass
class RunResult:
    params: ModelParams
    returns: ReturnSeries
    diagnostics: dict


# -- cancellation --------------------------------------------------------

def imbalance(side: int, n_buy: int, n_sell: int, mode: str = "share") -> float:
    n_tot = n_buy + n_sell
    own, other = (n_buy, n_sell) if side == BUY else (n_sell, n_buy)
    if mode == "share":
        return own / n_tot
    return (own - other) / n_tot


def distance_ratio(order: Order, book: OrderBook) -> float:
    """Current over initial distance to execution; 1 when either is undefined."""
    current = book.distance_to_execution(order)
    if current is None or current < 0 or not order.initial_distance:
        return 1.0
    return current / order.initial_distance


def probability(y: float, imb: float, n_tot: int, model: CancellationModel) -> float:
    p = model.A * (1.0 - math.exp(-y)) * (imb + model.B) / n_tot
    return min(max(p, 0.0), 1.0)


def cancellation_probability(order: Order, book: OrderBook,
                             model: CancellationModel = CancellationModel()) -> float:
    n_tot = book.n_tot
    if n_tot < 1:
        raise ValueError("empty book")
    imb = imbalance(order.side, book.n_buy, book.n_sell, model.imbalance)
    return probability(distance_ratio(order, book), imb, n_tot, model)


# -- input streams -------------------------------------------------------

def relative_ticks(x: np.ndarray, price_scale: float, rounding: str = "nearest",
                   max_ticks: int | None = None) -> np.ndarray:
    """Unit-scale Student-t relative prices to signed integer ticks."""
    v = np.asarray(x, dtype=float) * (price_scale / TICK)
    mag = np.abs(v)
    mag = np.ceil(mag) if rounding == "away" else np.floor(mag + 0.5)
    if max_ticks is not None:
        mag = np.minimum(mag, max_ticks)
    return (np.sign(v) * mag).astype(np.int64)


def make_inputs(params: ModelParams):
    sign_rng, price_rng, cancel_rng = stochastic.child_rngs(params.seed, 3)
    signs = stochastic.order_signs(params.n_events, params.hurst_s, sign_rng)
    prices = stochastic.relative_prices(params.n_events, params.alpha_x, params.hurst_x,
                                        price_rng, max_iter=params.iaaft_max_iter)
    ticks = relative_ticks(prices.values, params.price_scale, params.rounding,
                           params.max_relative_ticks)
    return signs, prices, ticks, cancel_rng


# -- kernel --------------------------------------------------------------

@njit(cache=True)
def _quotes(price, side, m):
    has_b = False
    has_a = False
    bid = 0
    ask = 0
    for i in range(m):
        if side[i] == 1:
            if not has_b or price[i] > bid:
                bid = price[i]
                has_b = True
        else:
            if not has_a or price[i] < ask:
                ask = price[i]
                has_a = True
    return has_b, bid, has_a, ask


@njit(cache=True)
def _grow(a, m):
    out = np.empty(2 * a.shape[0], a.dtype)
    out[:m] = a[:m]
    return out


@njit(cache=True)
def _simulate(signs, ticks, rng, A, B, imb_mode, seed_bid, seed_ask):
    n = signs.shape[0]
    cap = 1024
    price = np.empty(cap, np.int64)
    side = np.empty(cap, np.int8)
    init = np.empty(cap, np.int64)  # -1 marks an undefined initial distance
    prob = np.empty(cap, np.float64)
    price[0] = seed_bid
    side[0] = 1
    init[0] = -1  # placed into an empty book, as in OrderBook.seeded
    price[1] = seed_ask
    side[1] = -1
    init[1] = seed_ask - seed_bid
    m = 2
    has_b, bid, has_a, ask = _quotes(price, side, m)
    last_bid = bid
    last_ask = ask
    last_spread = ask - bid

    rets = np.full(n, np.nan)
    # placed, executed, cancelled, rested, one_sided, empty
    counts = np.zeros(6, np.int64)
    empty_flag = np.zeros(n, np.bool_)
    depth_sum = 0.0

    for t in range(n):
        hb0 = has_b
        ha0 = has_a
        bid0 = bid
        ask0 = ask

        if m > 0:
            if prob.shape[0] < m:
                prob = np.empty(price.shape[0], np.float64)
            n_buy = 0
            for i in range(m):
                if side[i] == 1:
                    n_buy += 1
            n_sell = m - n_buy
            for i in range(m):
                if side[i] == 1:
                    cur = ask - price[i] if has_a else -1
                    own = n_buy
                    other = n_sell
                else:
                    cur = price[i] - bid if has_b else -1
                    own = n_sell
                    other = n_buy
                if imb_mode == 0:
                    imb = own / m
                else:
                    imb = (own - other) / m
                if cur < 0 or init[i] <= 0:
                    y = 1.0
                else:
                    y = cur / init[i]
                p = A * (1.0 - math.exp(-y)) * (imb + B) / m
                prob[i] = min(max(p, 0.0), 1.0)
            j = 0
            for i in range(m):
                u = rng.random()
                if u < prob[i]:
                    counts[2] += 1
                    continue
                price[j] = price[i]
                side[j] = side[i]
                init[j] = init[i]
                j += 1
            m = j
            has_b, bid, has_a, ask = _quotes(price, side, m)
            if has_b:
                last_bid = bid
            if has_a:
                last_ask = ask

        s = signs[t]
        x = ticks[t]
        counts[0] += 1
        if s == 1:
            if has_b:
                ref = bid
            elif has_a:
                ref = ask - last_spread
            else:
                ref = last_bid
            p_new = ref + x
            crosses = has_a and p_new >= ask
            target = ask
        else:
            if has_a:
                ref = ask
            elif has_b:
                ref = bid + last_spread
            else:
                ref = last_ask
            p_new = ref - x
            crosses = has_b and p_new <= bid
            target = bid

        if crosses:
            k = 0
            for i in range(m):
                if side[i] == -s and price[i] == target:
                    k = i
                    break
            for i in range(k, m - 1):
                price[i] = price[i + 1]
                side[i] = side[i + 1]
                init[i] = init[i + 1]
            m -= 1
            counts[1] += 1
        else:
            if m == price.shape[0]:
                price = _grow(price, m)
                side = _grow(side, m)
                init = _grow(init, m)
            price[m] = p_new
            side[m] = s
            if s == 1:
                init[m] = ask - p_new if has_a else -1
            else:
                init[m] = p_new - bid if has_b else -1
            m += 1
            counts[3] += 1

        has_b, bid, has_a, ask = _quotes(price, side, m)
        if has_b:
            last_bid = bid
        if has_a:
            last_ask = ask
        if has_b and has_a:
            last_spread = ask - bid
        depth_sum += m
        if not has_b and not has_a:
            counts[5] += 1
            empty_flag[t] = True
        elif not (has_b and has_a):
            counts[4] += 1
        if hb0 and ha0 and has_b and has_a:
            rets[t] = 0.5 * ((bid + ask) - (bid0 + ask0)) * 0.01

    return rets, counts, depth_sum / n, m, empty_flag


# -- runs ----------------------------------------------------------------

def _finish(params: ModelParams, raw: np.ndarray, counts, mean_depth, final_depth,
            empty_flag, prices, started: float) -> RunResult:
    recorded_idx = np.flatnonzero(~np.isnan(raw))
    recorded = recorded_idx.size
    if params.transient_fraction is not None:
        start = int(math.floor(params.transient_fraction * recorded))
    else:
        start = max(recorded - params.default_keep, 0)
    kept_idx = recorded_idx[start:]
    values = raw[kept_idx]

    first_event = int(kept_idx[0]) if kept_idx.size else params.n_events
    window = params.n_events - first_event
    empty_events = int(empty_flag[first_event:].sum()) if window else 0

    diagnostics = {
        "placed": int(counts[0]),
        "executed": int(counts[1]),
        "cancelled": int(counts[2]),
        "rested": int(counts[3]),
        "one_sided_events": int(counts[4]),
        "empty_events": int(counts[5]),
        "mean_depth": float(mean_depth),
        "final_depth": int(final_depth),
        "recorded_returns": int(recorded),
        "kept_returns": int(values.size),
        "transient_rule": ("fraction" if params.transient_fraction is not None
                           else f"keep_last_{params.default_keep}"),
        "empty_fraction": empty_events / window if window else 0.0,
        "iaaft": prices.convergence_report(),
        "runtime_s": time.perf_counter() - started,
    }
    series = ReturnSeries(values=values, events_simulated=params.n_events,
                          recorded=int(recorded), kept=int(values.size))
    if values.size == 0 or (window and empty_events > params.max_empty_fraction * window):
        raise DegenerateRun(
            f"book empty on both sides for {empty_events} of {window} post-transient events",
            diagnostics,
        )
    return RunResult(params=params, returns=series, diagnostics=diagnostics)


def run(params: ModelParams) -> RunResult:
    """Simulate one run; a pure function of ``params`` (seed included)."""
    params.validate()
    started = time.perf_counter()
    signs, prices, ticks, cancel_rng = make_inputs(params)
    c = params.cancellation
    raw, counts, mean_depth, final_depth, empty_flag = _simulate(
        signs.values, ticks, cancel_rng, c.A, c.B, IMBALANCE_MODES[c.imbalance],
        SEED_BID, SEED_ASK)
    return _finish(params, raw, counts, mean_depth, final_depth, empty_flag, prices, started)


def run_reference(params: ModelParams) -> RunResult:
    """Slow replay of :func:`run` on :class:`OrderBook`; same random stream."""
    params.validate()
    started = time.perf_counter()
    signs, prices, ticks, rng = make_inputs(params)
    model = params.cancellation
    book = OrderBook.seeded(SEED_BID, SEED_ASK)
    n = params.n_events
    raw = np.full(n, np.nan)
    empty_flag = np.zeros(n, dtype=bool)
    counts = np.zeros(6, dtype=np.int64)
    depth_sum = 0.0
    last_bid, last_ask = book.quotes()
    last_spread = last_ask - last_bid

    for t in range(n):
        bid0, ask0 = book.quotes()
        if book.n_tot:
            snapshot = list(book.resting())
            probs = [cancellation_probability(o, book, model) for o in snapshot]
            for order, p in zip(snapshot, probs):
                if rng.random() < p:
                    book.cancel(order.id)
                    counts[2] += 1
        bid, ask = book.quotes()
        last_bid = bid if bid is not None else last_bid
        last_ask = ask if ask is not None else last_ask

        s = int(signs.values[t])
        x = int(ticks[t])
        if s == BUY:
            ref = bid if bid is not None else (ask - last_spread if ask is not None else last_bid)
            outcome = book.place(BUY, ref + x, t + 1)
        else:
            ref = ask if ask is not None else (bid + last_spread if bid is not None else last_ask)
            outcome = book.place(SELL, ref - x, t + 1)
        counts[0] += 1
        counts[1 if hasattr(outcome, "trade_price") else 3] += 1

        bid, ask = book.quotes()
        last_bid = bid if bid is not None else last_bid
        last_ask = ask if ask is not None else last_ask
        if bid is not None and ask is not None:
            last_spread = ask - bid
        depth_sum += book.n_tot
        if bid is None and ask is None:
            counts[5] += 1
            empty_flag[t] = True
        elif bid is None or ask is None:
            counts[4] += 1
        if None not in (bid0, ask0, bid, ask):
            raw[t] = 0.5 * ((bid + ask) - (bid0 + ask0)) * TICK

    return _finish(params, raw, counts, depth_sum / n, book.n_tot, empty_flag, prices, started)
