"""Protocol messages: the HELLO/TC union and its constructors.

Node identifiers are opaque ordered strings. Times and metrics are plain
ints extended with float("inf") / float("-inf"), which gives us correct
extended-integer comparison and addition without a custom numeric type.
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Union

if TYPE_CHECKING:
    from .neighborhood import LinkTuple

NodeId = str
TimeValue = Union[int, float]  # int plus +-inf
Metric = Union[int, float]     # int >= 1 plus +inf
Sqn = int

INF: TimeValue = float("inf")
NEG_INF: TimeValue = float("-inf")


class Status(enum.Enum):
    """Link status as seen by one endpoint."""

    SYMMETRIC = "SYMMETRIC"
    HEARD = "HEARD"
    LOST = "LOST"


class MprRole(enum.Enum):
    """Role a neighbor was selected for, as announced in HELLOs."""

    FLOODING = "FLOODING"
    ROUTING = "ROUTING"
    FLOOD_ROUTE = "FLOOD_ROUTE"


@dataclass(frozen=True)
class Hello:
    """1-hop broadcast carrying the sender's neighborhood view.

    The four maps are keyed by neighbor NodeId; the underlying sets of
    pairs never hold two entries for one key, so maps are a faithful
    representation and make the uniqueness invariant structural.
    """

    originator: NodeId
    validity: TimeValue
    statuses: dict[NodeId, Status]
    mprs: dict[NodeId, MprRole]
    in_metrics: dict[NodeId, Metric]
    out_metrics: dict[NodeId, Metric]


@dataclass(frozen=True)
class Tc:
    """Topology control message: advertised links, flooded network-wide."""

    originator: NodeId
    sender: NodeId
    validity: TimeValue
    seq: Sqn
    ansn: Sqn
    dests: dict[NodeId, Metric]


Message = Union[Hello, Tc]
Packet = list  # list[Message]; preserves append order


def make_hello(ip: NodeId, vtime: TimeValue, ls: Iterable[LinkTuple],
               now: TimeValue) -> Hello:
    """Build a HELLO advertising the current link set.

    statuses covers every tuple (including LOST ones, so the neighbor can
    tear down its own symmetric record); in_metrics covers non-LOST
    tuples; out_metrics only SYMMETRIC ones. mprs announces flooding
    and/or routing selection per flagged neighbor.
    """
    statuses: dict[NodeId, Status] = {}
    mprs: dict[NodeId, MprRole] = {}
    in_metrics: dict[NodeId, Metric] = {}
    out_metrics: dict[NodeId, Metric] = {}
    for lt in ls:
        st = lt.status(now)
        statuses[lt.oip] = st
        if lt.fmpr and lt.rmpr:
            mprs[lt.oip] = MprRole.FLOOD_ROUTE
        elif lt.fmpr:
            mprs[lt.oip] = MprRole.FLOODING
        elif lt.rmpr:
            mprs[lt.oip] = MprRole.ROUTING
        if st != Status.LOST:
            in_metrics[lt.oip] = lt.in_metric
        if st == Status.SYMMETRIC:
            out_metrics[lt.oip] = lt.out_metric
    return Hello(originator=ip, validity=vtime, statuses=statuses,
                 mprs=mprs, in_metrics=in_metrics, out_metrics=out_metrics)


def make_tc(ip: NodeId, vtime: TimeValue, sqn: Sqn, ansn: Sqn,
            ls: Iterable[LinkTuple], now: TimeValue) -> Tc:
    """Build a TC advertising out-metrics to symmetric routing-MPR selectors."""
    dests = {lt.oip: lt.out_metric for lt in ls
             if lt.rmpr_selector and lt.status(now) == Status.SYMMETRIC}
    return Tc(originator=ip, sender=ip, validity=vtime, seq=sqn,
              ansn=ansn, dests=dests)


def forward_tc_message(ip: NodeId, msg: Message) -> Tc:
    """Stamp a TC with a new sender address before rebroadcast.

    Partial: only TCs are ever forwarded.
    """
    if not isinstance(msg, Tc):
        raise TypeError(f"only TC messages can be forwarded, got {type(msg).__name__}")
    return dataclasses.replace(msg, sender=ip)


# --- trace rendering ---------------------------------------------------

def render_time(t: TimeValue) -> str:
    if t == INF:
        return "inf"
    if t == NEG_INF:
        return "-inf"
    return str(int(t))


def render_metric(m: Metric) -> str:
    return "inf" if m == INF else str(int(m))


def _render_map(d: dict) -> str:
    parts = []
    for k in sorted(d):
        v = d[k]
        if isinstance(v, (Status, MprRole)):
            parts.append(f"{k}:{v.value}")
        else:
            parts.append(f"{k}:{render_metric(v)}")
    return "{" + ",".join(parts) + "}"


def render_message(msg: Message) -> str:
    """One-line stable rendering; key sets appear in NodeId order."""
    if isinstance(msg, Hello):
        return (f"HELLO o={msg.originator} vt={render_time(msg.validity)}"
                f" st={_render_map(msg.statuses)} mpr={_render_map(msg.mprs)}"
                f" in={_render_map(msg.in_metrics)} out={_render_map(msg.out_metrics)}")
    return (f"TC o={msg.originator} s={msg.sender} vt={render_time(msg.validity)}"
            f" sqn={msg.seq} ansn={msg.ansn} d={_render_map(msg.dests)}")


def render_packet(pkt: Packet) -> str:
    return "[" + "; ".join(render_message(m) for m in pkt) + "]"
