import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from mmflab.lob import BUY, SELL, Executed, OrderBook, Rested, to_log_price, to_ticks


class NaiveBook:
    """Brute-force oracle: a flat list scanned on every query."""

    def __init__(self):
        self.orders = []  # (id, side, price) in arrival order
        self.next_id = 0

    def best(self, side):
        prices = [p for _, s, p in self.orders if s == side]
        if not prices:
            return None
        return max(prices) if side == BUY else min(prices)

    def place(self, side, price):
        opp = self.best(-side)
        if opp is not None and (price - opp) * side >= 0:
            for k, (oid, s, p) in enumerate(self.orders):
                if s == -side and p == opp:
                    del self.orders[k]
                    return ("exec", opp, oid)
        oid = self.next_id
        self.next_id += 1
        self.orders.append((oid, side, price))
        return ("rest", oid)

    def cancel(self, oid):
        for k, o in enumerate(self.orders):
            if o[0] == oid:
                del self.orders[k]
                return True
        return False


ops = hst.lists(
    hst.one_of(
        hst.tuples(hst.just("place"), hst.sampled_from([BUY, SELL]), hst.integers(-12, 12)),
        hst.tuples(hst.just("cancel"), hst.integers(0, 400)),
    ),
    max_size=1000,
)


@settings(max_examples=150, deadline=None)
@given(ops)
def test_matches_brute_force_oracle(seq):
    book, naive = OrderBook(), NaiveBook()
    for op in seq:
        if op[0] == "place":
            _, side, price = op
            got = book.place(side, price, 0)
            want = naive.place(side, price)
            if want[0] == "exec":
                assert got == Executed(trade_price=want[1], resting_id=want[2])
            else:
                assert got == Rested(order_id=want[1])
        else:
            assert book.cancel(op[1]) == naive.cancel(op[1])
        assert book.quotes() == (naive.best(BUY), naive.best(SELL))
        assert [o.id for o in book.resting()] == [o[0] for o in naive.orders]


@settings(max_examples=150, deadline=None)
@given(ops)
def test_spread_positive_and_counts_conserved(seq):
    book = OrderBook()
    for op in seq:
        if op[0] == "place":
            book.place(op[1], op[2], 0)
        else:
            book.cancel(op[1])
        bid, ask = book.quotes()
        if bid is not None and ask is not None:
            assert ask > bid
        # each placement rests (+1) or removes one resting order (-1)
        assert book.placed == book.n_tot + 2 * book.executed + book.cancelled
        assert book.n_buy + book.n_sell == len(list(book.resting()))


@settings(max_examples=100, deadline=None)
@given(hst.lists(hst.integers(1, 5), min_size=1, max_size=50), hst.integers(1, 5))
def test_time_priority_at_a_level(extra_levels, n_first):
    # n_first asks at the best level, plus deeper asks; a market buy hits the oldest
    book = OrderBook()
    ids = [book.place(SELL, 10, t).order_id for t in range(n_first)]
    for k, d in enumerate(extra_levels):
        book.place(SELL, 10 + d, 100 + k)
    for expected in ids:
        out = book.place(BUY, 50, 999)
        assert out == Executed(trade_price=10, resting_id=expected)
    assert book.best_ask == 10 + min(extra_levels)


def test_seeded_book():
    book = OrderBook.seeded()
    assert book.quotes() == (-1, 1)
    ask = book.get(1)
    assert book.get(0).initial_distance is None
    assert ask.initial_distance == 2


def test_crossing_consumes_one_order():
    book = OrderBook.seeded()
    out = book.place(SELL, -30, 5)
    assert out == Executed(trade_price=-1, resting_id=0)
    assert book.quotes() == (None, 1)
    assert book.n_tot == 1


def test_order_at_opposite_best_executes():
    book = OrderBook.seeded()
    assert isinstance(book.place(BUY, 1, 1), Executed)
    assert book.best_ask is None


def test_initial_and_current_distance():
    book = OrderBook.seeded(bid=-1, ask=4)
    oid = book.place(BUY, 0, 1).order_id
    order = book.get(oid)
    assert order.initial_distance == 4
    book.place(SELL, 2, 2)
    assert book.distance_to_execution(order) == 2


def test_cancel_unknown_and_twice():
    book = OrderBook.seeded()
    assert not book.cancel(99)
    assert book.cancel(0)
    assert not book.cancel(0)
    assert book.best_bid is None


def test_invalid_side():
    with pytest.raises(ValueError):
        OrderBook().place(0, 1, 0)


def test_ticks_round_trip():
    assert to_ticks(0.015) == 2 and to_ticks(-0.015) == -2
    assert to_ticks(0.0149) == 1
    for k in (-7, 0, 3, 1234):
        assert to_ticks(to_log_price(k)) == k


def test_dump_lists_levels():
    book = OrderBook.seeded()
    book.place(BUY, -1, 1)
    text = book.dump(",")
    lines = text.strip().splitlines()
    assert lines[0] == "side,ticks,log_price,count"
    assert lines[1].startswith("ask,1,") and lines[2] == "bid,-1,-0.01,2"


def test_long_random_session_against_oracle():
    rng = np.random.default_rng(0)
    book, naive = OrderBook(), NaiveBook()
    for _ in range(5000):
        if rng.random() < 0.7:
            side = int(rng.choice([BUY, SELL]))
            price = int(rng.integers(-20, 21))
            book.place(side, price, 0)
            naive.place(side, price)
        elif naive.orders:
            oid = naive.orders[int(rng.integers(len(naive.orders)))][0]
            assert book.cancel(oid) == naive.cancel(oid)
        assert book.quotes() == (naive.best(BUY), naive.best(SELL))
