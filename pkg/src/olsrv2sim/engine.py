"""One router's protocol state machine.

The router advances in discrete ticks under a lock-step scheduler (see
simnet). Within a tick all intranode work is zero-time: the step drains
delivered packets, restores information-base consistency, processes
messages, and possibly generates HELLO/TC messages. Starting a
broadcast is the only action that consumes time, so a step that reaches
the broadcast guard ends immediately and the node stays transmission-
busy until the packet is delivered.

Scheduling of periodic generation deserves a note. The protocol guard
admits any tick in [deadline - maxjitter, deadline]; we draw a jitter J
per period and aim at fire = deadline - J, firing at the first tick the
guards allow at or after that (catch-up). Additionally, when a step
ends with a broadcast scheduled for the next tick and the window is
already open, the message is generated now and rides that packet
(piggyback). The catch-up handles fire ticks swallowed by a busy
window; the piggyback handles the case where a forwarded packet would
otherwise occupy the transmitter through the rest of the window. With
the parameter constraint maxjitter > LB + dB, the two rules together
guarantee the deadline is never crossed; the engine still checks the
deadline at every generation and raises if the argument ever fails.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from . import message_logs, neighborhood, topology
from .messages import (INF, Hello, Message, NodeId, Packet, Status, Tc,
                       TimeValue, forward_tc_message, make_hello, make_tc,
                       render_message)
from .neighborhood import LinkSet, TwoHopSet
from .topology import RoutingSet, render_route

MICRO_STEP_CAP = 10 ** 6


class ConfigError(ValueError):
    """A parameter set violates the timing constraint chain."""


class EngineDiagnostic(RuntimeError):
    """Internal invariant broken; the simulation cannot proceed."""


@dataclass(frozen=True)
class RouterConfig:
    ip: NodeId
    hp_maxjitter: int
    tp_maxjitter: int
    h_hold_time: int
    t_hold_time: int
    l_hold_time: int
    hello_interval: int
    tc_interval: int


def validate_config(cfg: RouterConfig, lb: int, delta_b: int,
                    node_count: int) -> None:
    """Check the full constraint chain; raise naming the failed inequality.

    The chain keeps jitter windows wide enough to absorb transmission
    busy-spans and hold times long enough that information cannot
    expire between refreshes.
    """
    checks = [
        (0 < lb, "0 < LB"),
        (delta_b >= 0, "ΔB >= 0"),
        (lb + delta_b < cfg.hp_maxjitter, "LB + ΔB < hp_maxjitter"),
        (cfg.hp_maxjitter < cfg.hello_interval, "hp_maxjitter < hello_interval"),
        (lb + 2 * delta_b + cfg.hello_interval < cfg.h_hold_time,
         "LB + 2ΔB + hello_interval < h_hold_time"),
        (lb + delta_b < cfg.tp_maxjitter, "LB + ΔB < tp_maxjitter"),
        (cfg.tp_maxjitter < cfg.tc_interval, "tp_maxjitter < tc_interval"),
        ((2 * (lb + delta_b) + 1) * (node_count - 1) - (lb + 1)
         + cfg.tc_interval < cfg.t_hold_time,
         "(2(LB+ΔB)+1)(|IP|-1) - (LB+1) + tc_interval < t_hold_time"),
        (0 <= cfg.l_hold_time, "0 <= l_hold_time"),
    ]
    for ok, name in checks:
        if not ok:
            raise ConfigError(f"constraint violated: {name}")


class Router:
    """Mutable protocol state plus the step functions operating on it."""

    def __init__(self, cfg: RouterConfig, *, jitter_rng: random.Random,
                 hello_offset: int = 0, tc_offset: int = 0,
                 start_time: int = 0, bug_mode: bool = False,
                 flood_all: bool = False,
                 process_tc_from_unknown: bool = False):
        if not (0 <= hello_offset <= cfg.hello_interval):
            raise ConfigError("constraint violated: now <= hello_time <= now + hello_interval")
        if not (0 <= tc_offset <= cfg.tc_interval):
            raise ConfigError("constraint violated: now <= tc_time <= now + tc_interval")
        self.cfg = cfg
        self.ip = cfg.ip
        self.bug_mode = bug_mode
        self.flood_all = flood_all
        self.process_tc_from_unknown = process_tc_from_unknown

        # sigma: the mutable protocol variables
        self.ls: LinkSet = {}
        self.twohop_set: TwoHopSet = {}
        self.arrs: dict = {}
        self.rts: dict = {}
        self.rs: RoutingSet = {}
        self.ps: set = set()
        self.rxs: set = set()
        self.pkt: Packet = []
        self.mqueue: deque = deque()  # (message, measured in_metric)
        self.now: TimeValue = start_time
        self.hello_time: TimeValue = start_time + hello_offset
        self.tc_time: TimeValue = start_time + tc_offset
        self.send_time: TimeValue = INF
        self.sqn = 0
        self.ansn = 0
        self.prev_ls: LinkSet = {}

        self.inbox: list = []  # QUEUE process: delivered (packet, metric)
        self._rng = jitter_rng
        self._hello_fire = self.hello_time - self._rng.randrange(cfg.hp_maxjitter)
        self._tc_fire = self.tc_time - self._rng.randrange(cfg.tp_maxjitter)
        # last verified-optimal (edge universe, routing set) pair; purely
        # a memo for updates_pending, never consulted for results
        self._opt_edges: Optional[dict] = None
        self._opt_rs: Optional[dict] = None
        self.trace: Callable = lambda kind, detail, packet=None: None

    # -- consistency ----------------------------------------------------

    def updates_pending(self) -> bool:
        """True when any information-base maintenance act would change state.

        Equivalent to disjoining "purge would shrink a set" for the four
        timed sets, "a flagged MPR set fails its distance equality",
        "ansn is stale", and "the routing set is not optimal". The
        equality-based phrasing (set != purge(set)) is what the tests
        check this against.
        """
        now = self.now
        for lt in self.ls.values():
            if lt.validity_time <= now:
                return True
            if lt.status(now) != Status.SYMMETRIC and (
                    lt.fmpr or lt.rmpr or lt.fmpr_selector or lt.rmpr_selector):
                return True
        for n2 in self.twohop_set.values():
            if n2.validity_time <= now:
                return True
            anchor = self.ls.get(n2.one_hop_oip)
            if anchor is None or anchor.status(now) != Status.SYMMETRIC:
                return True
        for ar in self.arrs.values():
            if ar.validity_time <= now:
                return True
        for tr in self.rts.values():
            if tr.validity_time <= now:
                return True
        flagged_f = frozenset(o for o, lt in self.ls.items() if lt.fmpr)
        if not neighborhood.is_valid_fmpr_set(self.ls, self.twohop_set, now,
                                              flagged_f):
            return True
        flagged_r = frozenset(o for o, lt in self.ls.items() if lt.rmpr)
        if not neighborhood.is_valid_rmpr_set(self.ls, self.twohop_set, now,
                                              flagged_r, self.bug_mode):
            return True
        if self.ansn != topology.increment_ansn(self.ls, self.prev_ls,
                                                self.ansn):
            return True
        edges = topology.link_universe(self.ip, self.ls, self.rts, now)
        if edges == self._opt_edges and self.rs == self._opt_rs:
            return False
        ok = topology.is_optimal_over(self.ip, edges, self.rs)
        if ok:
            self._opt_edges, self._opt_rs = edges, dict(self.rs)
        return not ok

    def run_update_info(self) -> None:
        """Purge, reselect MPRs, refresh ansn, recompute routes (in order)."""
        now = self.now
        self.ls = neighborhood.purge_link_set(self.ls, now)
        self.twohop_set = neighborhood.purge_2hop_set(self.ls,
                                                      self.twohop_set, now)
        self.arrs = topology.purge_advertising_routers(self.arrs, now)
        self.rts = topology.purge_router_topology(self.rts, now)
        fmprs = neighborhood.choose_fmprs(self.ls, self.twohop_set, now)
        self.ls = neighborhood.update_fmprs(self.ls, self.twohop_set, now,
                                            fmprs)
        rmprs = neighborhood.choose_rmprs(self.ls, self.twohop_set, now,
                                          self.bug_mode)
        self.ls = neighborhood.update_rmprs(self.ls, self.twohop_set, now,
                                            rmprs, self.bug_mode)
        self.ansn = topology.increment_ansn(self.ls, self.prev_ls, self.ansn)
        self.prev_ls = self.ls
        candidate = topology.choose_optimal(self.ip, self.ls, self.rts, now)
        new_rs = topology.update_routing_set(self.ip, self.ls, self.rts, now,
                                             self.rs, candidate)
        if new_rs != self.rs:
            self.rs = new_rs
            detail = "; ".join(render_route(self.rs[d])
                               for d in sorted(self.rs))
            self.trace("ROUTE_CHANGE", f"rs=[{detail}]")

    # -- message processing ----------------------------------------------

    def process_hello(self, msg: Hello, in_metric) -> None:
        """Run the HELLO update pipeline against the sender's tuple."""
        if not isinstance(msg, Hello):
            raise TypeError("process_hello requires a HELLO message")
        if in_metric == INF:
            raise EngineDiagnostic("measured in_metric must be finite")
        now = self.now
        cfg = self.cfg
        moip = msg.originator
        ls = neighborhood.add_link_tuple(self.ls, moip, msg.validity,
                                         in_metric, now)
        ls = neighborhood.update_link_out_metrics(self.ip, ls, moip,
                                                  msg.in_metrics)
        ls = neighborhood.update_symmetric_time(self.ip, ls, moip,
                                                msg.validity, msg.statuses,
                                                cfg.l_hold_time, now)
        ls = neighborhood.update_heard_time(ls, moip, msg.validity, now)
        ls = neighborhood.update_validity_time(ls, moip, cfg.l_hold_time, now)
        ls = neighborhood.update_fmpr_selectors(self.ip, ls, moip,
                                                msg.statuses, msg.mprs, now)
        ls = neighborhood.update_rmpr_selectors(self.ip, ls, moip,
                                                msg.statuses, msg.mprs, now)
        self.ls = ls
        ths = neighborhood.add_2hop_tuples(self.ip, ls, self.twohop_set,
                                           moip, msg.statuses, now)
        ths = neighborhood.update_2hop_in_metrics(ls, ths, moip,
                                                  msg.in_metrics, now)
        ths = neighborhood.update_2hop_out_metrics(ls, ths, moip,
                                                   msg.out_metrics, now)
        ths = neighborhood.update_2hop_time(self.ip, ls, ths, moip,
                                            msg.validity, msg.statuses, now)
        self.twohop_set = ths

    def process_tc(self, msg: Tc) -> None:
        if not isinstance(msg, Tc):
            raise TypeError("process_tc requires a TC message")
        if msg.originator == self.ip:
            return  # own message echoed back; drop without forwarding
        sender_lt = self.ls.get(msg.sender)
        sender_sym = (sender_lt is not None
                      and sender_lt.status(self.now) == Status.SYMMETRIC)
        if not sender_sym and not self.process_tc_from_unknown:
            self._forward_tc(msg)
            return
        key = (msg.originator, msg.seq)
        if key in self.ps:
            self._forward_tc(msg)
            return
        self.ps = message_logs.add_processed_tuple(self.ps, msg.originator,
                                                   msg.seq)
        ar = self.arrs.get(msg.originator)
        if ar is not None and ar.ansn > msg.ansn:
            # known newer advertisement; message content is out of date
            self._forward_tc(msg)
            return
        self.arrs = topology.update_advertising_routers(
            self.arrs, msg.originator, msg.ansn, msg.validity, self.now)
        self.rts = topology.update_router_topology(
            self.ip, self.rts, msg.originator, msg.validity, msg.dests,
            self.now)
        self._forward_tc(msg)

    def _forward_tc(self, msg: Tc) -> None:
        sender_lt = self.ls.get(msg.sender)
        if sender_lt is None or sender_lt.status(self.now) != Status.SYMMETRIC:
            return
        key = (msg.originator, msg.seq)
        if key in self.rxs:
            return
        self.rxs = message_logs.add_received_tuple(self.rxs, msg.originator,
                                                   msg.seq)
        if self.flood_all or sender_lt.fmpr_selector:
            fwd = forward_tc_message(self.ip, msg)
            self.pkt.append(fwd)
            self.send_time = self.now + 1
            self.trace("TC_FWD", render_message(fwd))

    # -- per-tick step ----------------------------------------------------

    def enqueue_delivery(self, packet: Packet, in_metric) -> None:
        """QUEUE process: accept a delivered packet; never blocks."""
        self.inbox.append((packet, in_metric))

    def step_main(self) -> Optional[Packet]:
        """Run one tick of zero-time work; return a packet if one is emitted.

        Returning a packet means the broadcast guard fired: transmission
        starts now and the caller must keep this node busy for the
        drawn duration. Nothing else happens in such a step.
        """
        for packet, metric in self.inbox:
            for m in packet:
                self.mqueue.append((m, metric))
        self.inbox.clear()

        steps = 0
        while True:
            steps += 1
            if steps > MICRO_STEP_CAP:
                raise EngineDiagnostic(
                    f"router {self.ip}: micro-step cap exceeded at t={self.now}")
            if self.updates_pending():
                self.run_update_info()
                continue
            if self.send_time == self.now:
                emitted = self.pkt
                self.pkt = []
                self.send_time = INF
                return emitted
            if self.mqueue:
                msg, metric = self.mqueue.popleft()
                if isinstance(msg, Hello):
                    self.process_hello(msg, metric)
                else:
                    self.process_tc(msg)
                continue
            break

        self._maybe_generate()
        return None

    def _maybe_generate(self) -> None:
        cfg = self.cfg
        while True:
            pending_bcast = self.send_time == self.now + 1
            if (self.now >= self._hello_fire
                    or (pending_bcast
                        and self.now >= self.hello_time - cfg.hp_maxjitter)):
                if self.now > self.hello_time:
                    raise EngineDiagnostic(
                        f"router {self.ip}: HELLO deadline missed at t={self.now}")
                msg = make_hello(self.ip, cfg.h_hold_time, self.ls.values(),
                                 self.now)
                self.pkt.append(msg)
                self.trace("HELLO_GEN", render_message(msg), packet=None)
                self.hello_time = self.now + cfg.hello_interval
                self._hello_fire = (self.hello_time
                                    - self._rng.randrange(cfg.hp_maxjitter))
                self.send_time = self.now + 1
                continue
            if (self.now >= self._tc_fire
                    or (pending_bcast
                        and self.now >= self.tc_time - cfg.tp_maxjitter)):
                if self.now > self.tc_time:
                    raise EngineDiagnostic(
                        f"router {self.ip}: TC deadline missed at t={self.now}")
                msg = make_tc(self.ip, cfg.t_hold_time, self.sqn, self.ansn,
                              self.ls.values(), self.now)
                self.pkt.append(msg)
                self.trace("TC_GEN", render_message(msg), packet=None)
                self.sqn += 1
                self.tc_time = self.now + cfg.tc_interval
                self._tc_fire = (self.tc_time
                                 - self._rng.randrange(cfg.tp_maxjitter))
                self.send_time = self.now + 1
                continue
            break


def init_router(cfg: RouterConfig, lb: int, delta_b: int, node_count: int,
                seed, hello_offset: int, tc_offset: int,
                start_time: int = 0, **flags) -> Router:
    """Validated router construction with a seeded per-router jitter stream."""
    validate_config(cfg, lb, delta_b, node_count)
    rng = random.Random(f"{seed}/{cfg.ip}/jitter")
    return Router(cfg, jitter_rng=rng, hello_offset=hello_offset,
                  tc_offset=tc_offset, start_time=start_time, **flags)
