"""Topology information base and routing-set computation.

Advertising-router sets are maps oip -> AdvertisingRouterTuple, router
topology sets are maps (from_oip, dest_oip) -> TopologyTuple, routing
sets are maps dest -> Route.

Optimality of a routing set is defined over the link universe known to
one router: its own symmetric links plus every advertised topology row.
The underlying model quantifies over all paths in that universe; here
membership testing and construction run Dijkstra, and the brute-force
path enumeration lives in the test suite as an oracle.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Optional

from .messages import (INF, Metric, NodeId, Sqn, Status, TimeValue,
                       render_metric, render_time)

ArSet = dict      # dict[NodeId, AdvertisingRouterTuple]
TrSet = dict      # dict[tuple[NodeId, NodeId], TopologyTuple]
RoutingSet = dict  # dict[NodeId, Route]


@dataclass(frozen=True)
class AdvertisingRouterTuple:
    oip: NodeId
    ansn: Sqn
    validity_time: TimeValue


@dataclass(frozen=True)
class TopologyTuple:
    from_oip: NodeId
    dest_oip: NodeId
    validity_time: TimeValue
    metric: Metric


@dataclass(frozen=True)
class Route:
    dest: NodeId
    next_hop: NodeId
    metric: Metric


def update_advertising_routers(arrs: ArSet, moip: NodeId, mansn: Sqn,
                               vtime: TimeValue, now: TimeValue) -> ArSet:
    out = {k: v for k, v in arrs.items() if k != moip}
    out[moip] = AdvertisingRouterTuple(moip, mansn, now + vtime)
    return out


def update_router_topology(ip: NodeId, rts: TrSet, moip: NodeId,
                           vtime: TimeValue, dests: dict,
                           now: TimeValue) -> TrSet:
    """Replace every advertised row of moip with the new dests map."""
    out = {k: v for k, v in rts.items() if k[0] != moip}
    for d, m in dests.items():
        if d != ip:
            out[(moip, d)] = TopologyTuple(moip, d, now + vtime, m)
    return out


def purge_advertising_routers(arrs: ArSet, now: TimeValue) -> ArSet:
    return {k: ar for k, ar in arrs.items() if ar.validity_time > now}


def purge_router_topology(rts: TrSet, now: TimeValue) -> TrSet:
    return {k: tr for k, tr in rts.items() if tr.validity_time > now}


def increment_ansn(ls: dict, prev_ls: dict, ansn: Sqn) -> Sqn:
    """Bump ansn when the advertised (rmpr-selector) neighbor set changed."""
    cur = {oip for oip, lt in ls.items() if lt.rmpr_selector}
    prev = {oip for oip, lt in prev_ls.items() if lt.rmpr_selector}
    return ansn + 1 if cur != prev else ansn


# --- shortest paths over the known link universe -----------------------

def link_universe(ip: NodeId, ls: dict, rts: TrSet,
                  now: TimeValue) -> dict:
    """Known directed edges (src, dst) -> metric, min over parallel rows.

    Edges with infinite metric are kept out: a destination whose every
    path crosses one counts as unreachable.
    """
    edges: dict = {}

    def add(src, dst, m):
        if m == INF or src == dst:
            return
        key = (src, dst)
        if key not in edges or m < edges[key]:
            edges[key] = m

    for tr in rts.values():
        add(tr.from_oip, tr.dest_oip, tr.metric)
    for lt in ls.values():
        if lt.status(now) == Status.SYMMETRIC:
            add(ip, lt.oip, lt.out_metric)
    return edges


def _dijkstra(edges: dict, source: NodeId) -> dict:
    adj: dict = {}
    for (src, dst), m in edges.items():
        adj.setdefault(src, []).append((dst, m))
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, INF):
            continue
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_path_dists(ip: NodeId, ls: dict, rts: TrSet,
                        now: TimeValue) -> dict:
    """Distances from ip to every reachable node over the known universe."""
    dist = _dijkstra(link_universe(ip, ls, rts, now), ip)
    dist.pop(ip, None)
    return dist


def is_optimal_over(ip: NodeId, edges: dict, rs: RoutingSet) -> bool:
    """is_optimal against a prebuilt edge universe (see link_universe)."""
    dist = _dijkstra(edges, ip)
    reachable = {d for d in dist if d != ip}
    if set(rs.keys()) != reachable:
        return False
    via_cache: dict = {}
    for dest, route in rs.items():
        if route.dest != dest or route.metric != dist[dest]:
            return False
        w = edges.get((ip, route.next_hop))
        if w is None:
            return False
        if route.next_hop not in via_cache:
            via_cache[route.next_hop] = _dijkstra(edges, route.next_hop)
        if w + via_cache[route.next_hop].get(dest, INF) != route.metric:
            return False
    return True


def is_optimal(ip: NodeId, ls: dict, rts: TrSet, now: TimeValue,
               rs: RoutingSet) -> bool:
    """Membership test for the set of optimal routing sets.

    rs must hold exactly one shortest route per reachable destination
    (destinations other than ip with finite distance), with a first hop
    that actually starts a witnessing shortest path.
    """
    return is_optimal_over(ip, link_universe(ip, ls, rts, now), rs)


def choose_optimal_over(ip: NodeId, edges: dict) -> RoutingSet:
    """choose_optimal against a prebuilt edge universe."""
    dist = _dijkstra(edges, ip)
    incoming: dict = {}
    for (src, dst), w in edges.items():
        incoming.setdefault(dst, []).append((src, w))
    pred: dict = {}
    for v in dist:
        if v == ip:
            continue
        pred[v] = min(u for u, w in incoming[v]
                      if dist.get(u, INF) + w == dist[v])
    rs: RoutingSet = {}
    for dest in dist:
        if dest == ip:
            continue
        hop = dest
        while pred[hop] != ip:
            hop = pred[hop]
        rs[dest] = Route(dest=dest, next_hop=hop, metric=dist[dest])
    return rs


def choose_optimal(ip: NodeId, ls: dict, rts: TrSet,
                   now: TimeValue) -> RoutingSet:
    """Canonical optimal routing set.

    Runs Dijkstra from ip and then picks, for every node, the
    lexicographically smallest predecessor consistent with the final
    distances; the route's next hop is read off the resulting
    predecessor chain. Deterministic, so repeated runs give identical
    traces.
    """
    return choose_optimal_over(ip, link_universe(ip, ls, rts, now))


def update_routing_set(ip: NodeId, ls: dict, rts: TrSet, now: TimeValue,
                       rs: RoutingSet, rs_candidate: RoutingSet) -> RoutingSet:
    """Keep rs when it is still optimal, otherwise adopt the candidate."""
    if not is_optimal(ip, ls, rts, now, rs_candidate):
        raise ValueError("candidate routing set is not optimal")
    if is_optimal(ip, ls, rts, now, rs):
        return rs
    return rs_candidate


# --- trace rendering ---------------------------------------------------

def render_topology_tuple(tr: TopologyTuple) -> str:
    return (f"RT {tr.from_oip} -> {tr.dest_oip}"
            f" m={render_metric(tr.metric)} vt={render_time(tr.validity_time)}")


def render_route(r: Route) -> str:
    return f"ROUTE {r.dest} via {r.next_hop} m={render_metric(r.metric)}"
