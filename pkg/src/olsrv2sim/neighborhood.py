"""Interface information base: link set, 2-hop set, MPR selection.

Link sets are maps oip -> LinkTuple; 2-hop sets are maps
(one_hop_oip, two_hop_oip) -> TwoHopTuple. The underlying model works
with sets of tuples, but both key spaces are unique by construction, so
the map form is equivalent and keeps uniqueness structural.

All functions here are pure: they take a set and return a new one.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import AbstractSet, FrozenSet, Iterable

from .messages import (INF, NEG_INF, Metric, MprRole, NodeId, Status,
                       TimeValue, render_metric, render_time)

LinkSet = dict  # dict[NodeId, LinkTuple]
TwoHopSet = dict  # dict[tuple[NodeId, NodeId], TwoHopTuple]


@dataclass(frozen=True)
class LinkTuple:
    """One row of the link set, fields in wire order lt1..lt10."""

    oip: NodeId
    symmetric_time: TimeValue
    heard_time: TimeValue
    validity_time: TimeValue
    fmpr: bool
    rmpr: bool
    fmpr_selector: bool
    rmpr_selector: bool
    in_metric: Metric
    out_metric: Metric

    def status(self, now: TimeValue) -> Status:
        if self.symmetric_time > now:
            return Status.SYMMETRIC
        if self.heard_time > now:
            return Status.HEARD
        return Status.LOST


@dataclass(frozen=True)
class TwoHopTuple:
    one_hop_oip: NodeId
    two_hop_oip: NodeId
    validity_time: TimeValue
    in_metric: Metric
    out_metric: Metric


def link_status(lt: LinkTuple, now: TimeValue) -> Status:
    return lt.status(now)


def add_link_tuple(ls: LinkSet, moip: NodeId, vtime: TimeValue,
                   in_metric: Metric, now: TimeValue) -> LinkSet:
    """Insert a fresh, flagless tuple for moip unless one already exists."""
    if moip in ls:
        return ls
    out = dict(ls)
    out[moip] = LinkTuple(moip, NEG_INF, NEG_INF, now + vtime,
                          False, False, False, False, in_metric, INF)
    return out


def update_link_out_metrics(ip: NodeId, ls: LinkSet, moip: NodeId,
                            in_metrics: dict) -> LinkSet:
    """Adopt the neighbor's measurement of our transmissions as out_metric."""
    lt = ls.get(moip)
    if lt is None or ip not in in_metrics:
        return ls
    out = dict(ls)
    out[moip] = dataclasses.replace(lt, out_metric=in_metrics[ip])
    return out


def update_symmetric_time(ip: NodeId, ls: LinkSet, moip: NodeId,
                          vtime: TimeValue, statuses: dict,
                          htime: TimeValue, now: TimeValue) -> LinkSet:
    """Refresh (or tear down) the symmetric timer from a received HELLO.

    htime is the l_hold_time parameter: a symmetric link reported LOST by
    the other side is downgraded but kept around for htime more ticks.
    """
    lt = ls.get(moip)
    if lt is None:
        return ls
    st = statuses.get(ip)
    if st is not None and st != Status.LOST:
        out = dict(ls)
        out[moip] = dataclasses.replace(lt, symmetric_time=now + vtime)
        return out
    if st == Status.LOST and lt.status(now) == Status.SYMMETRIC:
        out = dict(ls)
        out[moip] = dataclasses.replace(lt, symmetric_time=NEG_INF,
                                        validity_time=now + htime)
        return out
    return ls


def update_heard_time(ls: LinkSet, moip: NodeId, vtime: TimeValue,
                      now: TimeValue) -> LinkSet:
    lt = ls.get(moip)
    if lt is None:
        return ls
    out = dict(ls)
    out[moip] = dataclasses.replace(
        lt, heard_time=max(now + vtime, lt.symmetric_time))
    return out


def update_validity_time(ls: LinkSet, moip: NodeId, htime: TimeValue,
                         now: TimeValue) -> LinkSet:
    lt = ls.get(moip)
    if lt is None:
        return ls
    out = dict(ls)
    out[moip] = dataclasses.replace(
        lt, validity_time=max(lt.heard_time + htime, lt.validity_time))
    return out


def _update_selector(ls: LinkSet, moip: NodeId, selected: bool | None,
                     field: str) -> LinkSet:
    if selected is None or moip not in ls:
        return ls
    out = dict(ls)
    out[moip] = dataclasses.replace(out[moip], **{field: selected})
    return out


def update_fmpr_selectors(ip: NodeId, ls: LinkSet, moip: NodeId,
                          statuses: dict, mprs: dict,
                          now: TimeValue) -> LinkSet:
    """Record whether moip announced us as a flooding MPR.

    Absent an announcement, a SYMMETRIC claim withdraws the selection;
    anything else leaves the flag untouched.
    """
    role = mprs.get(ip)
    if role in (MprRole.FLOODING, MprRole.FLOOD_ROUTE):
        return _update_selector(ls, moip, True, "fmpr_selector")
    if statuses.get(ip) == Status.SYMMETRIC:
        return _update_selector(ls, moip, False, "fmpr_selector")
    return ls


def update_rmpr_selectors(ip: NodeId, ls: LinkSet, moip: NodeId,
                          statuses: dict, mprs: dict,
                          now: TimeValue) -> LinkSet:
    role = mprs.get(ip)
    if role in (MprRole.ROUTING, MprRole.FLOOD_ROUTE):
        return _update_selector(ls, moip, True, "rmpr_selector")
    if statuses.get(ip) == Status.SYMMETRIC:
        return _update_selector(ls, moip, False, "rmpr_selector")
    return ls


def _moip_symmetric(ls: LinkSet, moip: NodeId, now: TimeValue) -> bool:
    lt = ls.get(moip)
    return lt is not None and lt.status(now) == Status.SYMMETRIC


def add_2hop_tuples(ip: NodeId, ls: LinkSet, twohop_set: TwoHopSet,
                    moip: NodeId, statuses: dict,
                    now: TimeValue) -> TwoHopSet:
    """Create placeholder 2-hop tuples for moip's symmetric neighbors."""
    if not _moip_symmetric(ls, moip, now):
        return twohop_set
    out = dict(twohop_set)
    for x1, st in statuses.items():
        if st == Status.SYMMETRIC and x1 != ip and (moip, x1) not in out:
            out[(moip, x1)] = TwoHopTuple(moip, x1, NEG_INF, INF, INF)
    return out


def update_2hop_in_metrics(ls: LinkSet, twohop_set: TwoHopSet, moip: NodeId,
                           in_metrics: dict, now: TimeValue) -> TwoHopSet:
    if not _moip_symmetric(ls, moip, now):
        return twohop_set
    out = dict(twohop_set)
    for (one, two), n2 in twohop_set.items():
        if one == moip and two in in_metrics:
            out[(one, two)] = dataclasses.replace(n2, in_metric=in_metrics[two])
    return out


def update_2hop_out_metrics(ls: LinkSet, twohop_set: TwoHopSet, moip: NodeId,
                            out_metrics: dict, now: TimeValue) -> TwoHopSet:
    if not _moip_symmetric(ls, moip, now):
        return twohop_set
    out = dict(twohop_set)
    for (one, two), n2 in twohop_set.items():
        if one == moip and two in out_metrics:
            out[(one, two)] = dataclasses.replace(n2, out_metric=out_metrics[two])
    return out


def update_2hop_time(ip: NodeId, ls: LinkSet, twohop_set: TwoHopSet,
                     moip: NodeId, vtime: TimeValue, statuses: dict,
                     now: TimeValue) -> TwoHopSet:
    if not _moip_symmetric(ls, moip, now):
        return twohop_set
    out = dict(twohop_set)
    for (one, two), n2 in twohop_set.items():
        if (one == moip and two != ip
                and statuses.get(two) == Status.SYMMETRIC):
            out[(one, two)] = dataclasses.replace(n2, validity_time=now + vtime)
    return out


def purge_link_set(ls: LinkSet, now: TimeValue) -> LinkSet:
    """Drop expired tuples; strip MPR flags from non-symmetric survivors."""
    out = {}
    for oip, lt in ls.items():
        if lt.validity_time <= now:
            continue
        if lt.status(now) == Status.SYMMETRIC:
            out[oip] = lt
        else:
            out[oip] = dataclasses.replace(lt, fmpr=False, rmpr=False,
                                           fmpr_selector=False,
                                           rmpr_selector=False)
    return out


def purge_2hop_set(ls: LinkSet, twohop_set: TwoHopSet,
                   now: TimeValue) -> TwoHopSet:
    return {k: n2 for k, n2 in twohop_set.items()
            if n2.validity_time > now and _moip_symmetric(ls, n2.one_hop_oip, now)}


# --- MPR validity and selection -----------------------------------------
#
# Both MPR flavours share one skeleton. N1 is the set of symmetric
# 1-hop neighbors, N2 the 2-hop tuples anchored at N1 members, and a
# candidate subset M <= N1 is valid when it preserves the distance
# d(t, .) from this router to every 2-hop target t:
#
#   flooding: d counts hops, so preserved distances are 1 or 2;
#   routing:  d sums in_metrics (d1 into the anchor, d2 into the target).
#
# Since d(t, S) = min over x in S of d(t, {x}), validity reduces to a
# covering condition: every target with finite d(t, N1) needs some
# member achieving that minimum. choose_* exploits this for a greedy
# polynomial pick; valid_* enumerates all subsets and exists as the
# test oracle (practical for |N1| <= 6).

def _n1_oips(ls: LinkSet, now: TimeValue) -> FrozenSet[NodeId]:
    return frozenset(oip for oip, lt in ls.items()
                     if lt.status(now) == Status.SYMMETRIC)


def _n2_tuples(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
               n1: AbstractSet[NodeId]) -> list:
    return [n2 for n2 in twohop_set.values() if n2.one_hop_oip in n1]


def _distance_table(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                    flavour: str, bug_mode: bool = False):
    """Per-target single-neighbor distances plus the N1-wide minimum.

    Returns (n1, targets, dist, full) where dist[(x, t)] is d(t, {x})
    and full[t] is d(t, N1). One pass over the 2-hop set; this sits on
    the engine's consistency-check hot path.
    """
    n1 = _n1_oips(ls, now)
    n2s = _n2_tuples(ls, twohop_set, now, n1)
    targets = sorted({n2.two_hop_oip for n2 in n2s})
    dist = {}
    if flavour == "fmpr":
        for t in targets:
            for x in n1:
                dist[(x, t)] = 1 if x == t else INF
        for n2 in n2s:
            key = (n2.one_hop_oip, n2.two_hop_oip)
            dist[key] = min(dist[key], 2)
    else:
        for t in targets:
            for x in n1:
                dist[(x, t)] = ls[x].in_metric if x == t else INF
        for n2 in n2s:
            key = (n2.one_hop_oip, n2.two_hop_oip)
            d2 = n2.out_metric if bug_mode else n2.in_metric
            dist[key] = min(dist[key], ls[n2.one_hop_oip].in_metric + d2)
    full = {}
    for t in targets:
        full[t] = min([INF] + [dist[(x, t)] for x in n1])
    return n1, targets, dist, full


def _is_valid(member_oips: AbstractSet[NodeId], n1, targets, dist, full) -> bool:
    if not frozenset(member_oips) <= n1:
        return False
    for t in targets:
        d_m = min([INF] + [dist[(x, t)] for x in member_oips])
        if d_m != full[t]:
            return False
    return True


def is_valid_fmpr_set(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                      member_oips: AbstractSet[NodeId]) -> bool:
    n1, targets, dist, full = _distance_table(ls, twohop_set, now, "fmpr")
    return _is_valid(member_oips, n1, targets, dist, full)


def is_valid_rmpr_set(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                      member_oips: AbstractSet[NodeId],
                      bug_mode: bool = False) -> bool:
    n1, targets, dist, full = _distance_table(ls, twohop_set, now, "rmpr",
                                              bug_mode)
    return _is_valid(member_oips, n1, targets, dist, full)


def _enumerate_valid(ls, twohop_set, now, flavour, bug_mode=False):
    import itertools

    n1, targets, dist, full = _distance_table(ls, twohop_set, now, flavour,
                                              bug_mode)
    members = sorted(n1)
    out = set()
    for r in range(len(members) + 1):
        for combo in itertools.combinations(members, r):
            if _is_valid(frozenset(combo), n1, targets, dist, full):
                out.add(frozenset(combo))
    return out


def valid_fmprs(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue):
    """All valid flooding-MPR subsets, as frozensets of oips.

    Exponential enumeration; intended for tests and tiny neighborhoods.
    """
    return _enumerate_valid(ls, twohop_set, now, "fmpr")


def valid_rmprs(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                bug_mode: bool = False):
    return _enumerate_valid(ls, twohop_set, now, "rmpr", bug_mode)


def _greedy_choose(n1, targets, dist, full) -> FrozenSet[NodeId]:
    # x covers t when x alone achieves the N1-wide minimum. Targets at
    # infinite distance constrain nothing.
    coverers = {t: sorted(x for x in n1 if dist[(x, t)] == full[t])
                for t in targets if full[t] != INF}
    chosen = set()
    # Mandatory members: sole achievers of some target's minimum.
    for t, xs in coverers.items():
        if len(xs) == 1:
            chosen.add(xs[0])
    uncovered = {t for t, xs in coverers.items()
                 if not (set(xs) & chosen)}
    while uncovered:
        best_x = None
        best_gain = -1
        for x in sorted(n1):
            if x in chosen:
                continue
            gain = sum(1 for t in uncovered if x in coverers[t])
            if gain > best_gain:
                best_x, best_gain = x, gain
        chosen.add(best_x)
        uncovered = {t for t in uncovered if best_x not in coverers[t]}
    return frozenset(chosen)


def choose_fmprs(ls: LinkSet, twohop_set: TwoHopSet,
                 now: TimeValue) -> FrozenSet[NodeId]:
    """Deterministic small valid flooding-MPR set (greedy cover)."""
    n1, targets, dist, full = _distance_table(ls, twohop_set, now, "fmpr")
    picked = _greedy_choose(n1, targets, dist, full)
    assert _is_valid(picked, n1, targets, dist, full)
    return picked


def choose_rmprs(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                 bug_mode: bool = False) -> FrozenSet[NodeId]:
    n1, targets, dist, full = _distance_table(ls, twohop_set, now, "rmpr",
                                              bug_mode)
    picked = _greedy_choose(n1, targets, dist, full)
    assert _is_valid(picked, n1, targets, dist, full)
    return picked


def _rewrite_flags(ls: LinkSet, field: str,
                   member_oips: AbstractSet[NodeId]) -> LinkSet:
    return {oip: dataclasses.replace(lt, **{field: oip in member_oips})
            for oip, lt in ls.items()}


def update_fmprs(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                 fmprs: Iterable[NodeId]) -> LinkSet:
    """Install fmprs as the flooding-MPR flags if the current flags are stale.

    When the currently flagged set is still valid the link set is kept
    as-is, even if fmprs differs from it.
    """
    members = frozenset(fmprs)
    if not is_valid_fmpr_set(ls, twohop_set, now, members):
        raise ValueError("proposed flooding MPR set fails the distance equality")
    current = frozenset(oip for oip, lt in ls.items() if lt.fmpr)
    if is_valid_fmpr_set(ls, twohop_set, now, current):
        return ls
    return _rewrite_flags(ls, "fmpr", members)


def update_rmprs(ls: LinkSet, twohop_set: TwoHopSet, now: TimeValue,
                 rmprs: Iterable[NodeId], bug_mode: bool = False) -> LinkSet:
    members = frozenset(rmprs)
    if not is_valid_rmpr_set(ls, twohop_set, now, members, bug_mode):
        raise ValueError("proposed routing MPR set fails the distance equality")
    current = frozenset(oip for oip, lt in ls.items() if lt.rmpr)
    if is_valid_rmpr_set(ls, twohop_set, now, current, bug_mode):
        return ls
    return _rewrite_flags(ls, "rmpr", members)


# --- trace rendering ---------------------------------------------------

def _render_flag(b: bool) -> str:
    return "T" if b else "F"


def render_link_tuple(lt: LinkTuple) -> str:
    return (f"LINK {lt.oip} st={render_time(lt.symmetric_time)}"
            f" ht={render_time(lt.heard_time)} vt={render_time(lt.validity_time)}"
            f" fmpr={_render_flag(lt.fmpr)} rmpr={_render_flag(lt.rmpr)}"
            f" fsel={_render_flag(lt.fmpr_selector)} rsel={_render_flag(lt.rmpr_selector)}"
            f" in={render_metric(lt.in_metric)} out={render_metric(lt.out_metric)}")


def render_twohop_tuple(n2: TwoHopTuple) -> str:
    return (f"N2 {n2.one_hop_oip} {n2.two_hop_oip}"
            f" vt={render_time(n2.validity_time)}"
            f" in={render_metric(n2.in_metric)} out={render_metric(n2.out_metric)}")
