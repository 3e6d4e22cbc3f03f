"""Deterministic discrete-event simulation of one coordinator and N islands.

Time is integer simulated milliseconds.  Events are processed in
non-decreasing time, ties broken by insertion order, so identical seeds and
fault schedules replay byte-identically.  Frames cross the link after a
fixed latency and are dropped i.i.d. with the configured probability; a
worker's optimization run is charged a configurable cost per GA generation.

Faults are injected as Reset/Restart events: Reset clears a node's volatile
state (frames addressed to a down node are dropped), Restart boots a fresh
state machine which runs the protocol's reconnect path.
"""

from __future__ import annotations

import heapq
import time as _time
import enum
from dataclasses import dataclass, field, replace

from . import protocol
from .geometry import RegionOfInterest
from .optimizer import Chromosome, GaConfig, GenerationStat, Population, evaluate, run
from .protocol import (
    CancelTimer,
    Frame,
    FrameKind,
    GNode,
    Note,
    Send,
    StartCompute,
    StartTimer,
    VNode,
    VNodePhase,
    decode_frame,
    encode_frame,
)
from .rng import STREAM_ISLAND, STREAM_LINK, STREAM_SEEDING, make_rng
from .seeding import initial_population, partition


class EventInPast(ValueError):
    """Injected event timestamped before the current simulation time."""


class SessionTimeout(RuntimeError):
    """The session ended without any decision being disseminated."""


class EventKind(enum.Enum):
    DELIVER = "deliver"
    TIMER = "timer"
    RESET = "reset"
    RESTART = "restart"
    COMPUTE_DONE = "compute_done"


@dataclass(frozen=True)
class SimEvent:
    time_ms: int
    kind: EventKind
    node: int
    sender: int = 0
    frame_bytes: bytes = b""
    timer_name: str = ""
    timer_epoch: int = 0
    incarnation: int = 0
    result: tuple = ()


def reset_event(time_ms: int, node: int) -> SimEvent:
    return SimEvent(time_ms, EventKind.RESET, node)


def restart_event(time_ms: int, node: int) -> SimEvent:
    return SimEvent(time_ms, EventKind.RESTART, node)


@dataclass(frozen=True)
class LinkModel:
    latency_ms: int = 10
    loss_prob: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency must be >= 0")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")


@dataclass(frozen=True)
class IslandStats:
    node_id: int
    sub_population_size: int
    generations: int
    best_coverage: float
    generations_to_target: int | None
    history: tuple[GenerationStat, ...]
    finished_at_ms: int
    reported: bool


@dataclass(frozen=True)
class SessionResult:
    final_positions: Chromosome
    final_coverage: float          # re-evaluated exactly on the final chromosome
    wire_coverage: float           # the 0.01 %-quantized value carried by the FPF
    winner: int
    decided_at_ms: int
    completed_at_ms: int
    completed: bool                # FPF acknowledged by every worker
    generations_to_target: int | None
    results_received: dict[int, float]
    island_stats: dict[int, IslandStats]
    initial_population: Population
    sub_populations: dict[int, tuple[Chromosome, ...]]
    reassembled: dict[int, tuple[Chromosome, ...] | None]
    event_log: tuple[str, ...]
    frames_sent: int
    frames_delivered: int
    frames_lost: int
    frames_dropped_down: int
    bytes_sent: int
    busy_ms: dict[int, int]
    fpf_undelivered: tuple[int, ...]
    sim_time_ms: int
    wall_seconds: float

    def event_log_text(self) -> str:
        return "\n".join(self.event_log) + "\n"


def _node_name(node_id: int) -> str:
    return "V" if node_id == 0 else f"G{node_id}"


class Session:
    """One full protocol session over the simulated link."""

    def __init__(self, g_nodes: int, ga_cfg: GaConfig, roi: RegionOfInterest,
                 link: LinkModel = LinkModel(), faults: tuple[SimEvent, ...] = (),
                 result_threshold: float = 0.8, ga_ms_per_generation: int = 1,
                 collect_timeout_ms: int = 60_000):
        if not 1 <= g_nodes <= 250:
            raise ValueError("g_nodes must be in 1..250")
        if ga_ms_per_generation < 0:
            raise ValueError("ga_ms_per_generation must be >= 0")
        self.g_nodes = g_nodes
        self.cfg = ga_cfg
        self.roi = roi
        self.link = link
        self.ga_ms_per_generation = ga_ms_per_generation
        self.now = 0
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._order = 0
        self._log: list[str] = []
        self._link_rng = make_rng(link.rng_seed, STREAM_LINK)
        self._down: set[int] = set()
        self._incarnation: dict[int, int] = {}
        self._timer_epoch: dict[tuple[int, str], int] = {}
        self.frames_sent = 0
        self.frames_delivered = 0
        self.frames_lost = 0
        self.frames_dropped_down = 0
        self.bytes_sent = 0
        self.busy_ms: dict[int, int] = {n: 0 for n in range(g_nodes + 1)}
        self.island_stats: dict[int, IslandStats] = {}
        self._reported: set[int] = set()
        self.decided_at: int | None = None
        self.completed_at: int | None = None

        seeding_rng = make_rng(ga_cfg.rng_seed, STREAM_SEEDING)
        self.initial_population = initial_population(ga_cfg, roi, seeding_rng)
        subs = partition(self.initial_population, g_nodes)
        self.sub_populations = {gid: subs[gid - 1].individuals
                                for gid in range(1, g_nodes + 1)}
        self.vnode = VNode(self.sub_populations, ga_cfg.n_objects,
                           result_threshold=result_threshold,
                           collect_timeout_ms=collect_timeout_ms)
        self.gnodes = {gid: GNode(gid, ga_cfg.n_objects)
                       for gid in range(1, g_nodes + 1)}
        for event in faults:
            self.inject(event)
        self._dispatch_actions(0, self.vnode.start())
        for gid, gnode in self.gnodes.items():
            self._dispatch_actions(gid, gnode.start())

    # -- event plumbing -----------------------------------------------------

    def inject(self, event: SimEvent) -> None:
        if event.time_ms < self.now:
            raise EventInPast(f"event at {event.time_ms} ms is before now ({self.now} ms)")
        self._push(event)

    def _push(self, event: SimEvent) -> None:
        heapq.heappush(self._heap, (event.time_ms, self._order, event))
        self._order += 1

    def _machine(self, node: int):
        return self.vnode if node == 0 else self.gnodes[node]

    def _logline(self, event: str, src: int, dst, kind: str, seqtotal: str,
                 size: int, extra: str = "") -> None:
        dst_name = _node_name(dst) if isinstance(dst, int) else dst
        line = (f"{self.now}\t{event}\t{_node_name(src)}\t{dst_name}\t"
                f"{kind}\t{seqtotal}\t{size}")
        if extra:
            line += f"\t{extra}"
        self._log.append(line)

    # -- actions --------------------------------------------------------------

    def _dispatch_actions(self, node: int, actions) -> None:
        for action in actions:
            if isinstance(action, Send):
                self._do_send(node, action)
            elif isinstance(action, StartTimer):
                key = (node, action.name)
                self._timer_epoch[key] = self._timer_epoch.get(key, 0) + 1
                self._push(SimEvent(self.now + action.delay_ms, EventKind.TIMER, node,
                                    timer_name=action.name,
                                    timer_epoch=self._timer_epoch[key],
                                    incarnation=self._incarnation.get(node, 0)))
            elif isinstance(action, CancelTimer):
                key = (node, action.name)
                self._timer_epoch[key] = self._timer_epoch.get(key, 0) + 1
            elif isinstance(action, StartCompute):
                self._do_compute(node, action.chromosomes)
            elif isinstance(action, Note):
                self._logline("note", node, "-", "-", "-", 0, action.text)
            else:  # pragma: no cover - defensive
                raise TypeError(f"unknown action {action!r}")
        if self.vnode.decided is not None and self.decided_at is None:
            self.decided_at = self.now
        if (self.vnode.phase is VNodePhase.DONE and self.completed_at is None
                and self.vnode.decided is not None):
            self.completed_at = self.now

    def _do_send(self, node: int, action: Send) -> None:
        data = encode_frame(action.frame)
        assert len(data) <= protocol.MAX_FRAME_BYTES
        f = action.frame
        seqtotal = f"{f.seq}/{f.total}"
        kind = f.kind.name + ("-NACK" if f.nack else "")
        self.frames_sent += 1
        self.bytes_sent += len(data)
        self.busy_ms[node] += self.link.latency_ms
        self._logline("send", node, action.destination, kind, seqtotal, len(data))
        if self.link.loss_prob > 0.0 and self._link_rng.random() < self.link.loss_prob:
            self.frames_lost += 1
            self._logline("lost", node, action.destination, kind, seqtotal, len(data))
            return
        self._push(SimEvent(self.now + self.link.latency_ms, EventKind.DELIVER,
                            action.destination, sender=node, frame_bytes=data))

    def _do_compute(self, node: int, chromosomes: tuple[Chromosome, ...]) -> None:
        island_index = node - 1
        rng = make_rng(self.cfg.rng_seed, STREAM_ISLAND, island_index)
        ga = run(Population(chromosomes), self.cfg, self.roi, rng)
        duration = ga.generations * self.ga_ms_per_generation
        self.busy_ms[node] += duration
        self.island_stats[node] = IslandStats(
            node_id=node,
            sub_population_size=len(chromosomes),
            generations=ga.generations,
            best_coverage=ga.best_coverage,
            generations_to_target=ga.generations_to_target,
            history=ga.history,
            finished_at_ms=self.now + duration,
            reported=False,
        )
        self._push(SimEvent(self.now + duration, EventKind.COMPUTE_DONE, node,
                            incarnation=self._incarnation.get(node, 0),
                            result=(ga.best, ga.best_coverage)))

    # -- event dispatch -------------------------------------------------------

    def _handle(self, event: SimEvent) -> None:
        node = event.node
        if event.kind is EventKind.DELIVER:
            frame = decode_frame(event.frame_bytes)
            kind = frame.kind.name + ("-NACK" if frame.nack else "")
            seqtotal = f"{frame.seq}/{frame.total}"
            if node in self._down:
                self.frames_dropped_down += 1
                self._logline("drop", event.sender, node, kind, seqtotal,
                              len(event.frame_bytes), "receiver down")
                return
            self.frames_delivered += 1
            self._logline("recv", event.sender, node, kind, seqtotal,
                          len(event.frame_bytes))
            if frame.kind is FrameKind.RF and node == 0:
                self._reported.add(event.sender)
            self._dispatch_actions(node, self._machine(node).on_frame(event.sender, frame))
        elif event.kind is EventKind.TIMER:
            if node in self._down:
                return
            if event.incarnation != self._incarnation.get(node, 0):
                return
            if event.timer_epoch != self._timer_epoch.get((node, event.timer_name), 0):
                return
            self._dispatch_actions(node, self._machine(node).on_timer(event.timer_name))
        elif event.kind is EventKind.RESET:
            self._down.add(node)
            self._incarnation[node] = self._incarnation.get(node, 0) + 1
            self._logline("note", node, "-", "-", "-", 0, "reset (volatile state lost)")
        elif event.kind is EventKind.RESTART:
            if node not in self._down:
                return
            self._down.discard(node)
            self._incarnation[node] = self._incarnation.get(node, 0) + 1
            self._logline("note", node, "-", "-", "-", 0, "restart")
            if node == 0:
                self.vnode = VNode(self.sub_populations, self.cfg.n_objects,
                                   result_threshold=self.vnode.threshold,
                                   collect_timeout_ms=self.vnode.collect_timeout_ms)
                self._dispatch_actions(0, self.vnode.restart())
            else:
                self.gnodes[node] = GNode(node, self.cfg.n_objects)
                self._dispatch_actions(node, self.gnodes[node].restart())
        elif event.kind is EventKind.COMPUTE_DONE:
            if node in self._down:
                return
            if event.incarnation != self._incarnation.get(node, 0):
                return
            best, coverage = event.result
            stats = self.island_stats.get(node)
            if stats is not None:
                self.island_stats[node] = replace(stats, reported=True)
            self._dispatch_actions(node, self.gnodes[node].on_compute_done(best, coverage))
        else:  # pragma: no cover - defensive
            raise TypeError(f"unknown event {event!r}")

    def run(self) -> SessionResult:
        wall_start = _time.perf_counter()
        while self._heap:
            t, _, event = heapq.heappop(self._heap)
            assert t >= self.now, "event queue went backwards"
            self.now = t
            self._handle(event)
        wall = _time.perf_counter() - wall_start
        if self.vnode.decided is None:
            raise SessionTimeout(
                "session ended without a decision "
                f"(results received: {sorted(self.vnode.results)})")
        winner, chrom, wire_cov = self.vnode.decided
        stats = self.island_stats.get(winner)
        gens_to_target = stats.generations_to_target if stats is not None else None
        return SessionResult(
            final_positions=chrom,
            final_coverage=evaluate(chrom, self.cfg, self.roi).coverage,
            wire_coverage=wire_cov,
            winner=winner,
            decided_at_ms=self.decided_at if self.decided_at is not None else self.now,
            completed_at_ms=self.completed_at if self.completed_at is not None else self.now,
            completed=not self.vnode.fpf_undelivered and self.vnode.decided is not None,
            generations_to_target=gens_to_target,
            results_received={gid: cov for gid, (_, cov) in self.vnode.results.items()},
            island_stats=dict(self.island_stats),
            initial_population=self.initial_population,
            sub_populations=dict(self.sub_populations),
            reassembled={gid: g.sub_population for gid, g in self.gnodes.items()},
            event_log=tuple(self._log),
            frames_sent=self.frames_sent,
            frames_delivered=self.frames_delivered,
            frames_lost=self.frames_lost,
            frames_dropped_down=self.frames_dropped_down,
            bytes_sent=self.bytes_sent,
            busy_ms=dict(self.busy_ms),
            fpf_undelivered=tuple(sorted(self.vnode.fpf_undelivered)),
            sim_time_ms=self.now,
            wall_seconds=wall,
        )


def run_session(g_nodes: int, ga_cfg: GaConfig, roi: RegionOfInterest,
                link: LinkModel = LinkModel(), faults: tuple[SimEvent, ...] = (),
                result_threshold: float = 0.8, ga_ms_per_generation: int = 1,
                collect_timeout_ms: int = 60_000) -> SessionResult:
    """Seed, partition, exchange, optimize and decide; returns the outcome."""
    session = Session(g_nodes, ga_cfg, roi, link=link, faults=faults,
                      result_threshold=result_threshold,
                      ga_ms_per_generation=ga_ms_per_generation,
                      collect_timeout_ms=collect_timeout_ms)
    return session.run()
