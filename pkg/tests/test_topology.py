"""Topology base, shortest paths, and routing-set optimality.

The optimality predicate is cross-checked against a brute-force
enumeration of simple paths (no Dijkstra, no shared code), both on
optimal routing sets and on randomly mutated ones.
"""
import random

import pytest

from olsrv2sim.messages import INF, NEG_INF, Status
from olsrv2sim.neighborhood import LinkTuple
from olsrv2sim.topology import (AdvertisingRouterTuple, Route, TopologyTuple,
                                _dijkstra, choose_optimal,
                                choose_optimal_over, increment_ansn,
                                is_optimal, is_optimal_over, link_universe,
                                purge_advertising_routers,
                                purge_router_topology, render_route,
                                render_topology_tuple, shortest_path_dists,
                                update_advertising_routers,
                                update_router_topology, update_routing_set)

import oracles

NOW = 100


def sym_link(oip, out_m, sym_time=NOW + 10):
    return LinkTuple(oip, sym_time, NOW + 10, NOW + 20, False, False,
                     False, False, 1, out_m)


def tt(frm, to, m, vt=NOW + 50):
    return TopologyTuple(frm, to, vt, m)


# --- information-base updates ----------------------------------------------

def test_update_advertising_routers_replaces_row():
    arrs = update_advertising_routers({}, "b", mansn=3, vtime=40, now=NOW)
    assert arrs == {"b": AdvertisingRouterTuple("b", 3, NOW + 40)}
    arrs = update_advertising_routers(arrs, "b", mansn=4, vtime=10, now=NOW)
    assert arrs["b"].ansn == 4 and arrs["b"].validity_time == NOW + 10


def test_update_router_topology_replaces_all_rows_of_originator():
    rts = {("b", "x"): tt("b", "x", 1), ("c", "x"): tt("c", "x", 2)}
    out = update_router_topology("me", rts, "b", vtime=30,
                                 dests={"y": 5, "me": 1}, now=NOW)
    # b's old rows are gone, rows about me are never stored
    assert set(out) == {("b", "y"), ("c", "x")}
    assert out[("b", "y")] == tt("b", "y", 5, NOW + 30)


def test_purges():
    arrs = {"a": AdvertisingRouterTuple("a", 1, NOW),
            "b": AdvertisingRouterTuple("b", 1, NOW + 1)}
    assert set(purge_advertising_routers(arrs, NOW)) == {"b"}
    rts = {("a", "x"): tt("a", "x", 1, vt=NOW),
           ("a", "y"): tt("a", "y", 1, vt=NOW + 1)}
    assert set(purge_router_topology(rts, NOW)) == {("a", "y")}


def test_increment_ansn_tracks_selector_set():
    def with_sel(oip, sel):
        return LinkTuple(oip, NOW + 10, NOW + 10, NOW + 20, False, False,
                         False, sel, 1, 1)
    prev = {"a": with_sel("a", True), "b": with_sel("b", False)}
    same = {"a": with_sel("a", True), "b": with_sel("b", False)}
    grew = {"a": with_sel("a", True), "b": with_sel("b", True)}
    assert increment_ansn(same, prev, 7) == 7
    assert increment_ansn(grew, prev, 7) == 8
    assert increment_ansn({}, prev, 7) == 8


# --- the link universe -------------------------------------------------------

def test_link_universe_rules():
    ls = {"b": sym_link("b", 9),
          "h": sym_link("h", 2, sym_time=NOW),   # only heard: excluded
          "i": sym_link("i", INF)}               # infinite: excluded
    rts = {("b", "x"): tt("b", "x", 4),
           ("me", "b"): tt("me", "b", 3),        # parallel to the own link
           ("z", "z"): tt("z", "z", 1),          # self loop: excluded
           ("q", "w"): tt("q", "w", INF)}        # infinite: excluded
    edges = link_universe("me", ls, rts, NOW)
    assert edges == {("b", "x"): 4, ("me", "b"): 3}
    # the cheaper parallel edge wins in either order
    rts[("me", "b")] = tt("me", "b", 30)
    assert link_universe("me", ls, rts, NOW)[("me", "b")] == 9


def random_digraph(rng, n=None):
    n = n or rng.randint(2, 6)
    names = [chr(ord("a") + i) for i in range(n)]
    edges = {}
    for u in names:
        for v in names:
            if u != v and rng.random() < 0.4:
                edges[(u, v)] = rng.randint(1, 9)
    return names, edges


def test_dijkstra_matches_path_enumeration():
    rng = random.Random(0xD1)
    for _ in range(300):
        names, edges = random_digraph(rng)
        src = rng.choice(names)
        got = _dijkstra(edges, src)
        want = oracles.simple_path_dists(edges, src)
        for node, d in want.items():
            if d == INF:
                assert node not in got
            else:
                assert got[node] == d
        assert got.get(src) == 0


def test_shortest_path_dists_excludes_self():
    ls = {"b": sym_link("b", 2)}
    rts = {("b", "me"): tt("b", "me", 1), ("b", "c"): tt("b", "c", 5)}
    dists = shortest_path_dists("me", ls, rts, NOW)
    assert dists == {"b": 2, "c": 7}


# --- optimality: library vs simple-path oracle ------------------------------

def _first_hop_dists(edges, source):
    """(best cost per node, best cost per (node, first hop)) by brute force."""
    adj = {}
    for (u, v), w in edges.items():
        adj.setdefault(u, []).append((v, w))
    best, best_via = {}, {}

    def walk(u, cost, seen, first):
        for v, w in adj.get(u, ()):
            if v in seen:
                continue
            c = cost + w
            f = v if first is None else first
            if c < best.get(v, INF):
                best[v] = c
            if c < best_via.get((v, f), INF):
                best_via[(v, f)] = c
            walk(v, c, seen | {v}, f)

    walk(source, 0, {source}, None)
    return best, best_via


def ref_is_optimal(ip, edges, rs):
    best, best_via = _first_hop_dists(edges, ip)
    if set(rs) != set(best):
        return False
    for dest, route in rs.items():
        if route.dest != dest or route.metric != best[dest]:
            return False
        if best_via.get((dest, route.next_hop), INF) != best[dest]:
            return False
    return True


def mutate_routing_set(rng, rs, names):
    out = dict(rs)
    kind = rng.randrange(4)
    if kind == 0 and out:
        out.pop(rng.choice(sorted(out)))
    elif kind == 1:
        out["ghost"] = Route("ghost", rng.choice(names), 1)
    elif kind == 2 and out:
        d = rng.choice(sorted(out))
        r = out[d]
        out[d] = Route(d, r.next_hop, r.metric + rng.choice([-1, 1]))
    elif out:
        d = rng.choice(sorted(out))
        r = out[d]
        out[d] = Route(d, rng.choice(names), r.metric)
    return out


def test_optimality_verdicts_match_oracle():
    rng = random.Random(0x0517)
    for _ in range(250):
        names, edges = random_digraph(rng)
        ip = rng.choice(names)
        rs = choose_optimal_over(ip, edges)
        assert is_optimal_over(ip, edges, rs)
        assert ref_is_optimal(ip, edges, rs)
        mutated = mutate_routing_set(rng, rs, names)
        assert is_optimal_over(ip, edges, mutated) == \
            ref_is_optimal(ip, edges, mutated)


def test_choose_optimal_canonical_tiebreak():
    # two equally cheap first hops toward c: the canonical choice walks
    # the lexicographically smallest predecessor chain, hence via a
    edges = {("s", "a"): 1, ("s", "b"): 1, ("a", "c"): 1, ("b", "c"): 1}
    rs = choose_optimal_over("s", edges)
    assert rs["c"] == Route("c", "a", 2)
    assert rs["a"] == Route("a", "a", 1)
    assert rs["b"] == Route("b", "b", 1)


def test_is_optimal_rejects_wrong_first_hop():
    edges = {("s", "a"): 1, ("s", "b"): 5, ("a", "b"): 1}
    good = {"a": Route("a", "a", 1), "b": Route("b", "a", 2)}
    bad = {"a": Route("a", "a", 1), "b": Route("b", "b", 2)}
    assert is_optimal_over("s", edges, good)
    # (s,b) is a real edge but costs 5, so it cannot witness metric 2
    assert not is_optimal_over("s", edges, bad)


def test_is_optimal_rejects_mislabeled_route():
    edges = {("s", "a"): 1}
    assert not is_optimal_over("s", edges, {"a": Route("x", "a", 1)})


def test_update_routing_set_keeps_any_optimal_current():
    edges = {("s", "a"): 1, ("s", "b"): 1, ("a", "c"): 1, ("b", "c"): 1}
    ls = {"a": sym_link("a", 1), "b": sym_link("b", 1)}
    rts = {("a", "c"): tt("a", "c", 1), ("b", "c"): tt("b", "c", 1)}
    cand = choose_optimal("s", ls, rts, NOW)
    # current uses the other (equally optimal) witness; it must be kept
    current = {"a": Route("a", "a", 1), "b": Route("b", "b", 1),
               "c": Route("c", "b", 2)}
    assert update_routing_set("s", ls, rts, NOW, current, cand) == current
    stale = {"a": Route("a", "a", 1)}
    assert update_routing_set("s", ls, rts, NOW, stale, cand) == cand
    with pytest.raises(ValueError):
        update_routing_set("s", ls, rts, NOW, current, stale)


def test_empty_universe():
    assert choose_optimal_over("s", {}) == {}
    assert is_optimal_over("s", {}, {})
    assert not is_optimal_over("s", {}, {"a": Route("a", "a", 1)})


# --- renders ----------------------------------------------------------------

def test_renders_frozen():
    assert render_topology_tuple(tt("a", "b", 4, vt=NOW + 7)) == \
        "RT a -> b m=4 vt=107"
    assert render_route(Route("d", "b", 12)) == "ROUTE d via b m=12"
    assert render_topology_tuple(tt("a", "b", INF, vt=NEG_INF)) == \
        "RT a -> b m=inf vt=-inf"
