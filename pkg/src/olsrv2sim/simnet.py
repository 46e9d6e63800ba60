"""Network layer: ground truth, timed broadcast delivery, global clock.

One tick proceeds in four phases:
  1. every in-flight transmission due now is delivered into the
     recipients' queues (canonical order: by sender, then recipient);
  2. every non-busy router runs step_main, in ascending NodeId order;
     an emitted packet becomes a new in-flight transmission and the
     sender stays busy until its delivery tick;
  3. scheduled topology events for this tick are applied;
  4. the global clock and every router's local clock advance by one.

Deliveries all land before any router steps, and every random draw
comes from a per-node stream, so phase-2 iteration order is not
protocol-visible (a property the test suite checks by permuting it).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .engine import EngineDiagnostic, Router, RouterConfig, init_router
from .messages import INF, Metric, NodeId, Packet, TimeValue, render_packet

TRACE_KINDS = ("BROADCAST", "DELIVER", "HELLO_GEN", "TC_GEN", "TC_FWD",
               "LINK_EVENT", "ROUTE_CHANGE")


class ScenarioError(ValueError):
    """Scenario content is structurally or semantically invalid."""


@dataclass(frozen=True)
class NetworkParams:
    lb: int
    delta_b: int
    node_count: int
    seed: int

    def __post_init__(self):
        if not self.lb > 0:
            raise ScenarioError("constraint violated: 0 < LB")
        if not self.delta_b >= 0:
            raise ScenarioError("constraint violated: ΔB >= 0")


@dataclass
class GroundTruth:
    """Who can hear whom, and at what directed link metric."""

    nodes: set
    range_map: dict   # NodeId -> set[NodeId]
    metric: dict      # (NodeId, NodeId) -> Metric, exactly the in-range pairs

    def check(self) -> None:
        for a, peers in self.range_map.items():
            if a not in self.nodes or not peers <= self.nodes:
                raise ScenarioError(f"range of {a} mentions undeclared nodes")
        pairs = {(a, b) for a, peers in self.range_map.items() for b in peers}
        if pairs != set(self.metric):
            raise ScenarioError("metric map does not match in-range pairs")
        for (a, b), m in self.metric.items():
            if a == b:
                raise ScenarioError(f"self-loop link on {a}")
            if m == INF or m < 1:
                raise ScenarioError(f"metric {a}->{b} must be a finite positive integer")


@dataclass(frozen=True)
class TopologyEvent:
    time: int
    kind: str  # linkup | linkdown | metric
    src: NodeId
    dst: NodeId
    metric: Optional[Metric] = None


@dataclass
class InFlight:
    sender: NodeId
    packet: Packet
    deliver_at: TimeValue
    recipients: frozenset
    # directed metrics sampled when the broadcast started; used as the
    # fallback measurement if the link vanishes mid-flight
    metric_snapshot: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TraceEvent:
    tick: TimeValue
    node: NodeId
    kind: str
    detail: str
    # structured payload for BROADCAST/DELIVER so checkers need not
    # re-parse the rendered detail; not part of the rendered line
    packet: Optional[Packet] = None


def render_trace_event(ev: TraceEvent) -> str:
    return f"t={ev.tick} n={ev.node} ev={ev.kind} {ev.detail}"


class Network:
    def __init__(self, params: NetworkParams, gt: GroundTruth,
                 routers: dict, events: Iterable[TopologyEvent] = (),
                 metric_noise: int = 0):
        gt.check()
        if set(routers) != gt.nodes:
            raise ScenarioError("router set does not match declared nodes")
        self.params = params
        self.gt = gt
        self.routers = routers
        self.events = sorted(events, key=lambda e: (e.time, e.src, e.dst))
        self.metric_noise = metric_noise
        self.clock: TimeValue = 0
        self.inflights: list = []
        self.trace: list = []
        self._dur_rng = {n: random.Random(f"{params.seed}/{n}/dur")
                         for n in routers}
        self._noise_rng = {n: random.Random(f"{params.seed}/{n}/noise")
                           for n in routers}

    # -- helpers ----------------------------------------------------------

    def busy(self, node: NodeId) -> bool:
        return any(f.sender == node and self.clock < f.deliver_at
                   for f in self.inflights)

    def _measured_metric(self, sender: NodeId, recipient: NodeId,
                         snapshot: dict) -> Metric:
        m = self.gt.metric.get((sender, recipient),
                               snapshot.get(recipient))
        if self.metric_noise:
            lo = max(1, m - self.metric_noise)
            hi = m + self.metric_noise
            m = self._noise_rng[recipient].randint(lo, hi)
        return m

    # -- one global tick ---------------------------------------------------

    def tick(self, step_order: Optional[list] = None) -> None:
        """Advance the whole network by one time unit.

        step_order overrides the phase-2 iteration order; it exists for
        the permutation-invariance test and must be a permutation of
        the node ids.
        """
        events: list = []

        def emit(node, kind, detail, packet=None):
            events.append(TraceEvent(self.clock, node, kind, detail, packet))

        # phase 1: deliveries due now, canonical order by sender
        due = sorted((f for f in self.inflights if f.deliver_at == self.clock),
                     key=lambda f: f.sender)
        self.inflights = [f for f in self.inflights
                          if f.deliver_at != self.clock]
        for f in due:
            for r in sorted(f.recipients):
                m = self._measured_metric(f.sender, r, f.metric_snapshot)
                self.routers[r].enqueue_delivery(f.packet, m)
                emit(r, "DELIVER",
                     f"from={f.sender} m={m} pkt={render_packet(f.packet)}",
                     packet=f.packet)

        # phase 2: per-router steps
        order = step_order if step_order is not None else sorted(self.routers)
        for nid in order:
            if self.busy(nid):
                continue
            router = self.routers[nid]
            router.trace = (lambda kind, detail, packet=None, _n=nid:
                            emit(_n, kind, detail, packet))
            packet = router.step_main()
            if packet is not None:
                d = self.params.lb + self._dur_rng[nid].randrange(
                    self.params.delta_b + 1)
                recipients = frozenset(self.gt.range_map.get(nid, ()))
                snapshot = {r: self.gt.metric[(nid, r)] for r in recipients}
                self.inflights.append(InFlight(nid, packet, self.clock + d,
                                               recipients, snapshot))
                to = ",".join(sorted(recipients))
                emit(nid, "BROADCAST",
                     f"d={d} to={{{to}}} pkt={render_packet(packet)}",
                     packet=packet)

        # phase 3: topology events scheduled for this tick
        for ev in self.events:
            if ev.time == self.clock:
                self.apply_topology_event(ev, emit)

        # phase 4: clocks advance
        self.clock += 1
        for router in self.routers.values():
            router.now += 1

        events.sort(key=lambda e: e.node)  # stable: keeps emission order
        self.trace.extend(events)

    def apply_topology_event(self, ev: TopologyEvent, emit=None) -> None:
        if ev.src not in self.gt.nodes or ev.dst not in self.gt.nodes:
            raise ScenarioError(f"topology event references unknown node: "
                                f"{ev.src}->{ev.dst}")
        if ev.kind == "linkup":
            self.gt.range_map.setdefault(ev.src, set()).add(ev.dst)
            self.gt.metric[(ev.src, ev.dst)] = ev.metric
            detail = f"linkup dst={ev.dst} m={ev.metric}"
        elif ev.kind == "linkdown":
            self.gt.range_map.get(ev.src, set()).discard(ev.dst)
            self.gt.metric.pop((ev.src, ev.dst), None)
            detail = f"linkdown dst={ev.dst}"
        elif ev.kind == "metric":
            if (ev.src, ev.dst) not in self.gt.metric:
                raise ScenarioError(
                    f"metric event on absent link {ev.src}->{ev.dst}"
                    f" at t={ev.time}")
            self.gt.metric[(ev.src, ev.dst)] = ev.metric
            detail = f"metric dst={ev.dst} m={ev.metric}"
        else:
            raise ScenarioError(f"unknown topology event kind: {ev.kind}")
        if emit is not None:
            emit(ev.src, "LINK_EVENT", detail)

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.tick()

    def render_trace(self) -> str:
        return "".join(render_trace_event(ev) + "\n" for ev in self.trace)


def build_network(scenario) -> Network:
    """Instantiate routers and ground truth from a parsed scenario.

    The scenario is duck-typed (see cli.Scenario): nodes, links, events,
    offsets, flags, and a params mapping with optional per-node
    overrides spelled "<node>.<name>".
    """
    nodes = list(scenario.nodes)
    if len(set(nodes)) != len(nodes):
        dupes = sorted({n for n in nodes if nodes.count(n) > 1})
        raise ScenarioError(f"duplicate node id: {', '.join(dupes)}")
    node_set = set(nodes)

    def param(name, default, node=None):
        if node is not None and f"{node}.{name}" in scenario.params:
            return scenario.params[f"{node}.{name}"]
        return scenario.params.get(name, default)

    lb = param("lb", 1)
    delta_b = param("delta_b", 0)
    seed = param("seed", 1)
    params = NetworkParams(lb=lb, delta_b=delta_b,
                           node_count=len(nodes), seed=seed)

    range_map = {n: set() for n in nodes}
    metric = {}
    for (src, dst, m) in scenario.links:
        if src not in node_set or dst not in node_set:
            raise ScenarioError(f"dangling link endpoint: {src}->{dst}")
        range_map[src].add(dst)
        metric[(src, dst)] = m
    gt = GroundTruth(nodes=node_set, range_map=range_map, metric=metric)

    events = []
    for ev in scenario.events:
        if ev.src not in node_set or ev.dst not in node_set:
            raise ScenarioError(f"topology event references unknown node: "
                                f"{ev.src}->{ev.dst}")
        events.append(ev)

    flags = dict(scenario.flags)
    routers = {}
    for n in nodes:
        tc_default = ((2 * (lb + delta_b) + 1) * (len(nodes) - 1)
                      - (lb + 1) + param("tc_interval", 30, n) + 1)
        cfg = RouterConfig(
            ip=n,
            hp_maxjitter=param("hp_maxjitter", 2, n),
            tp_maxjitter=param("tp_maxjitter", 2, n),
            h_hold_time=param("h_hold_time",
                              lb + 2 * delta_b + param("hello_interval", 10, n) + 1,
                              n),
            t_hold_time=param("t_hold_time", tc_default, n),
            l_hold_time=param("l_hold_time", 10, n),
            hello_interval=param("hello_interval", 10, n),
            tc_interval=param("tc_interval", 30, n),
        )
        if n in scenario.offsets:
            hello_off, tc_off = scenario.offsets[n]
        else:
            rng = random.Random(f"{seed}/{n}/offset")
            hello_off = rng.randrange(cfg.hello_interval + 1)
            tc_off = rng.randrange(cfg.tc_interval + 1)
        routers[n] = init_router(
            cfg, lb, delta_b, len(nodes), seed, hello_off, tc_off,
            bug_mode=flags.get("bug_rfc7181", False),
            flood_all=flags.get("flood_all", False),
            process_tc_from_unknown=flags.get("process_tc_from_unknown",
                                              False))
    return Network(params, gt, routers, events,
                   metric_noise=param("metric_noise", 0))
