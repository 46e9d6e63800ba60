"""Duplicate-suppression logs are grow-only sets of (originator, sqn)."""
from hypothesis import given
from hypothesis import strategies as st

from olsrv2sim.message_logs import add_processed_tuple, add_received_tuple


def test_add_is_union():
    ps = add_processed_tuple(set(), "a", 0)
    ps = add_processed_tuple(ps, "a", 1)
    assert ps == {("a", 0), ("a", 1)}
    assert add_processed_tuple(ps, "a", 0) == ps  # idempotent
    rxs = add_received_tuple(frozenset(), "b", 5)
    assert ("b", 5) in rxs


@given(st.sets(st.tuples(st.sampled_from("abc"),
                         st.integers(0, 5))),
       st.sampled_from("abc"), st.integers(0, 5))
def test_add_never_removes(base, oip, sqn):
    out = add_received_tuple(base, oip, sqn)
    assert base <= out and (oip, sqn) in out
    assert out - base <= {(oip, sqn)}
