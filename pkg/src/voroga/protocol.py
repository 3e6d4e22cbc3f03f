"""Coordinator/worker wire protocol: framing, codec and state machines.

Frame taxonomy (paper-style four kinds):

* SPF  -- sub-population segment, coordinator -> worker
* RF   -- best result of a worker's optimization run, worker -> coordinator
* FPF  -- final positions broadcast, coordinator -> worker
* ACK  -- per-frame acknowledgment (or, with the NACK flag, a re-request)

Wire image (little-endian), at most 250 bytes total:

    offset  size  field
    0       1     kind        (1=SPF 2=RF 3=FPF 4=ACK)
    1       1     sender_id   (0 = coordinator, 1..N = workers)
    2       2     seq         (segment index; for ACK echoes the acked seq)
    4       2     total       (segment count; for ACK echoes the acked total)
    6       1     ack_kind    (acked kind for ACK frames, else 0)
    7       1     flags       (bit 0: NACK)
    8       ...   payload     (<= 242 bytes; empty for ACK/NACK)

Coordinates are unsigned 16-bit fixed point in units of 0.01 m, so one
chromosome costs 4*n bytes; coverage is unsigned 16-bit in units of 0.01 %.

A NACK is an ACK-kind frame with the NACK flag: seq names one missing SPF
segment, or the sentinel 0xFFFF to request everything (the reconnect path
after a node reset).  NACKs carry no payload, one frame per missing segment.

The state machines are sans-io: events go in (frames, timer fires, finished
computations), actions come out (frames to send, timers to arm or cancel,
computations to start).  The driver owns the clock and the radio.
"""

from __future__ import annotations

import enum
import math
import struct
from collections import deque
from dataclasses import dataclass, field

from .optimizer import Chromosome
from .geometry import Point

HEADER = struct.Struct("<BBHHBB")
HEADER_SIZE = HEADER.size
MAX_FRAME_BYTES = 250
MAX_PAYLOAD = MAX_FRAME_BYTES - HEADER_SIZE  # 242

FLAG_NACK = 0x01
NACK_ALL = 0xFFFF

# Reliability knobs (ms are simulated time).
ACK_TIMEOUT_MS = 50        # 5x the nominal 10 ms frame delay
RETRY_LIMIT = 5            # retransmissions per delivery cycle
GAP_TIMEOUT_MS = 200       # reassembly gap timer
GAP_CYCLE_LIMIT = 5
REQUERY_INTERVAL_MS = 5000
REQUERY_LIMIT = 5
FPF_SWEEP_LIMIT = 5
RECONNECT_TIMEOUT_MS = 500
RECONNECT_LIMIT = 5


class FrameError(ValueError):
    """Base class for framing and codec failures."""


class PayloadTooLarge(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class UnknownKind(FrameError):
    pass


class MalformedFrame(FrameError):
    pass


class ChromosomeTooLarge(FrameError):
    """4*n bytes per chromosome exceed one frame payload (n > 60)."""


class CoordinateOutOfRange(FrameError):
    """Coordinate beyond the 655.35 m fixed-point range."""


class FrameKind(enum.IntEnum):
    SPF = 1
    RF = 2
    FPF = 3
    ACK = 4


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    sender_id: int
    seq: int = 0
    total: int = 1
    payload: bytes = b""
    ack_kind: FrameKind | None = None
    nack: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.sender_id <= 0xFF:
            raise MalformedFrame(f"sender_id {self.sender_id} out of range")
        if not 0 <= self.seq <= 0xFFFF or not 0 <= self.total <= 0xFFFF:
            raise MalformedFrame("seq/total out of 16-bit range")
        if len(self.payload) > MAX_PAYLOAD:
            raise PayloadTooLarge(f"payload {len(self.payload)} > {MAX_PAYLOAD} bytes")
        if self.kind == FrameKind.ACK:
            if self.payload:
                raise MalformedFrame("ACK frames carry no payload")
            if self.ack_kind is None:
                raise MalformedFrame("ACK frames must echo the acked kind")
            if self.nack:
                if self.seq != NACK_ALL and self.seq >= max(self.total, 1):
                    raise MalformedFrame("NACK seq must be < total or the resend-all sentinel")
            elif self.seq >= max(self.total, 1):
                raise MalformedFrame("ACK echo must satisfy seq < total")
        else:
            if self.ack_kind is not None or self.nack:
                raise MalformedFrame("only ACK frames carry ack fields")
            if self.seq >= self.total:
                raise MalformedFrame(f"seq {self.seq} must be < total {self.total}")

    @property
    def wire_size(self) -> int:
        return HEADER_SIZE + len(self.payload)


def encode_frame(f: Frame) -> bytes:
    flags = FLAG_NACK if f.nack else 0
    ack = int(f.ack_kind) if f.ack_kind is not None else 0
    return HEADER.pack(int(f.kind), f.sender_id, f.seq, f.total, ack, flags) + f.payload


def decode_frame(data: bytes) -> Frame:
    if len(data) < HEADER_SIZE:
        raise TruncatedFrame(f"frame needs >= {HEADER_SIZE} bytes, got {len(data)}")
    if len(data) > MAX_FRAME_BYTES:
        raise PayloadTooLarge(f"wire image {len(data)} > {MAX_FRAME_BYTES} bytes")
    kind_b, sender, seq, total, ack_b, flags = HEADER.unpack(data[:HEADER_SIZE])
    try:
        kind = FrameKind(kind_b)
    except ValueError:
        raise UnknownKind(f"unknown frame kind {kind_b}") from None
    if ack_b:
        try:
            ack_kind: FrameKind | None = FrameKind(ack_b)
        except ValueError:
            raise UnknownKind(f"unknown acked kind {ack_b}") from None
    else:
        ack_kind = None
    if flags & ~FLAG_NACK:
        raise MalformedFrame(f"unknown flag bits 0x{flags:02x}")
    return Frame(kind=kind, sender_id=sender, seq=seq, total=total,
                 payload=data[HEADER_SIZE:], ack_kind=ack_kind,
                 nack=bool(flags & FLAG_NACK))


# ---------------------------------------------------------------------------
# Payload codec: fixed-point coordinates, chromosomes, results.
# ---------------------------------------------------------------------------

def encode_coordinate(v: float) -> int:
    q = round(v * 100.0)
    if not 0 <= q <= 0xFFFF:
        raise CoordinateOutOfRange(f"coordinate {v} m outside [0, 655.35] m")
    return q


def decode_coordinate(q: int) -> float:
    return q / 100.0


def encode_chromosome(c: Chromosome) -> bytes:
    out = bytearray()
    for p in c.positions:
        out += struct.pack("<HH", encode_coordinate(p.x), encode_coordinate(p.y))
    return bytes(out)


def decode_chromosome(data: bytes, n_objects: int) -> Chromosome:
    if len(data) != 4 * n_objects:
        raise MalformedFrame(f"chromosome needs {4 * n_objects} bytes, got {len(data)}")
    positions = []
    for i in range(n_objects):
        qx, qy = struct.unpack_from("<HH", data, 4 * i)
        positions.append(Point(decode_coordinate(qx), decode_coordinate(qy)))
    return Chromosome(tuple(positions))


def encode_coverage(fraction: float) -> int:
    q = round(fraction * 10000.0)
    return min(max(q, 0), 0xFFFF)


def decode_coverage(q: int) -> float:
    return q / 10000.0


def encode_result(c: Chromosome, coverage: float) -> bytes:
    return encode_chromosome(c) + struct.pack("<H", encode_coverage(coverage))


def decode_result(data: bytes, n_objects: int) -> tuple[Chromosome, float]:
    if len(data) != 4 * n_objects + 2:
        raise MalformedFrame(f"result needs {4 * n_objects + 2} bytes, got {len(data)}")
    chrom = decode_chromosome(data[:-2], n_objects)
    (q,) = struct.unpack("<H", data[-2:])
    return chrom, decode_coverage(q)


def chromosomes_per_frame(n_objects: int) -> int:
    size = 4 * n_objects
    if size > MAX_PAYLOAD:
        raise ChromosomeTooLarge(
            f"{n_objects} nodes need {size} bytes per chromosome, above the "
            f"{MAX_PAYLOAD}-byte payload limit")
    return MAX_PAYLOAD // size


def segment_subpopulation(chromosomes, n_objects: int, sender_id: int = 0) -> list[Frame]:
    """Pack a sub-population into SPF segments, densest packing first."""
    chroms = list(getattr(chromosomes, "individuals", chromosomes))
    if not chroms:
        raise ValueError("sub-population must be nonempty")
    per = chromosomes_per_frame(n_objects)
    chunks = [chroms[k:k + per] for k in range(0, len(chroms), per)]
    total = len(chunks)
    frames = []
    for seq, chunk in enumerate(chunks):
        payload = b"".join(encode_chromosome(c) for c in chunk)
        frames.append(Frame(FrameKind.SPF, sender_id, seq=seq, total=total, payload=payload))
    return frames


def reassemble_subpopulation(payloads: dict[int, bytes], n_objects: int) -> tuple[Chromosome, ...]:
    """Rebuild the sub-population from segment payloads keyed by seq."""
    joined = b"".join(payloads[seq] for seq in sorted(payloads))
    size = 4 * n_objects
    if len(joined) % size:
        raise MalformedFrame("reassembled payload is not a whole number of chromosomes")
    return tuple(decode_chromosome(joined[k:k + size], n_objects)
                 for k in range(0, len(joined), size))


# ---------------------------------------------------------------------------
# Actions emitted by the state machines.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Send:
    destination: int
    frame: Frame


@dataclass(frozen=True)
class StartTimer:
    name: str
    delay_ms: int


@dataclass(frozen=True)
class CancelTimer:
    name: str


@dataclass(frozen=True)
class StartCompute:
    chromosomes: tuple[Chromosome, ...]


@dataclass(frozen=True)
class Note:
    text: str


Action = Send | StartTimer | CancelTimer | StartCompute | Note


def ack_for(frame: Frame, sender_id: int) -> Frame:
    return Frame(FrameKind.ACK, sender_id, seq=frame.seq, total=frame.total,
                 ack_kind=frame.kind)


def nack_segment(sender_id: int, seq: int, total: int) -> Frame:
    return Frame(FrameKind.ACK, sender_id, seq=seq, total=total,
                 ack_kind=FrameKind.SPF, nack=True)


def nack_all(sender_id: int, kind: FrameKind) -> Frame:
    return Frame(FrameKind.ACK, sender_id, seq=NACK_ALL, total=0,
                 ack_kind=kind, nack=True)


# ---------------------------------------------------------------------------
# Coordinator state machine.
# ---------------------------------------------------------------------------

class VNodePhase(enum.Enum):
    SEEDING = "seeding"
    DISTRIBUTING = "distributing"
    COLLECTING = "collecting"
    DECIDING = "deciding"
    DISSEMINATING = "disseminating"
    DONE = "done"


@dataclass
class _Transfer:
    segments: tuple[Frame, ...]
    pending: deque = field(default_factory=deque)
    acked: set = field(default_factory=set)
    failed: bool = False


class VNode:
    """Coordinator: distributes sub-populations, collects results, decides.

    SPF distribution is stop-and-wait with one segment in flight overall,
    serving the lowest-id worker with outstanding work first, which yields
    the node-after-node frame order of the reference timeline in the
    fault-free case.  Result collection applies the received-result
    threshold: the decision fires at ceil(threshold * workers) distinct
    results, or at the collection timeout.
    """

    def __init__(self, sub_populations: dict[int, tuple[Chromosome, ...]],
                 n_objects: int, result_threshold: float = 0.8,
                 collect_timeout_ms: int = 60_000, node_id: int = 0):
        if not sub_populations:
            raise ValueError("need at least one worker sub-population")
        if not 0.0 < result_threshold <= 1.0:
            raise ValueError("result_threshold must be in (0, 1]")
        self.node_id = node_id
        self.n_objects = n_objects
        self.threshold = result_threshold
        self.collect_timeout_ms = collect_timeout_ms
        self.g_node_ids = tuple(sorted(sub_populations))
        self._transfers = {
            gid: _Transfer(segments=tuple(segment_subpopulation(sub, n_objects, node_id)))
            for gid, sub in sub_populations.items()
        }
        self.phase = VNodePhase.SEEDING
        self.results: dict[int, tuple[Chromosome, float]] = {}
        self.decided: tuple[int, Chromosome, float] | None = None
        self.timed_out = False
        self.failed_nodes: set[int] = set()
        self.fpf_pending: set[int] = set()
        self.fpf_undelivered: set[int] = set()
        self._inflight: tuple[int, int] | None = None  # (gid, seq)
        self._spf_retries = 0
        self._fpf_retries: dict[int, int] = {}
        self._requeries = 0
        self._sweeps = 0

    # -- helpers ----------------------------------------------------------

    def results_needed(self) -> int:
        # guard the float product so 0.8 * 10 still needs exactly 8
        return max(1, math.ceil(self.threshold * len(self.g_node_ids) - 1e-9))

    def _segment(self, gid: int, seq: int) -> Frame:
        return self._transfers[gid].segments[seq]

    def _pump_spf(self) -> list[Action]:
        """Serve the next pending SPF segment (single frame in flight)."""
        if self._inflight is not None:
            return []
        for gid in self.g_node_ids:
            xfer = self._transfers[gid]
            if xfer.failed or not xfer.pending:
                continue
            seq = xfer.pending.popleft()
            self._inflight = (gid, seq)
            self._spf_retries = 0
            return [Send(gid, self._segment(gid, seq)), StartTimer("spf", ACK_TIMEOUT_MS)]
        actions: list[Action] = [CancelTimer("spf")]
        if self.phase is VNodePhase.DISTRIBUTING:
            self.phase = VNodePhase.COLLECTING
            actions += [StartTimer("collect", self.collect_timeout_ms),
                        StartTimer("requery", REQUERY_INTERVAL_MS)]
        return actions

    # -- entry points ------------------------------------------------------

    def start(self) -> list[Action]:
        self.phase = VNodePhase.DISTRIBUTING
        for xfer in self._transfers.values():
            xfer.pending = deque(range(len(xfer.segments)))
            xfer.acked = set()
        return self._pump_spf()

    def restart(self) -> list[Action]:
        """Recovery boot: sub-populations are re-derived from configuration,
        so resume collecting and ask the workers to resend their state."""
        self.phase = VNodePhase.COLLECTING
        actions: list[Action] = [Note("coordinator restarted; re-querying results")]
        for gid in self.g_node_ids:
            actions.append(Send(gid, nack_all(self.node_id, FrameKind.RF)))
        actions += [StartTimer("collect", self.collect_timeout_ms),
                    StartTimer("requery", REQUERY_INTERVAL_MS)]
        return actions

    def on_frame(self, src: int, frame: Frame) -> list[Action]:
        if frame.kind is FrameKind.ACK and not frame.nack:
            return self._on_ack(src, frame)
        if frame.kind is FrameKind.ACK and frame.nack:
            return self._on_nack(src, frame)
        if frame.kind is FrameKind.RF:
            return self._on_result(src, frame)
        return [Note(f"protocol violation: {frame.kind.name} from {src} "
                     f"in phase {self.phase.value}; dropped")]

    def _on_ack(self, src: int, frame: Frame) -> list[Action]:
        if frame.ack_kind is FrameKind.SPF:
            if self._inflight == (src, frame.seq):
                gid, seq = self._inflight
                self._transfers[gid].acked.add(seq)
                self._inflight = None
                return self._pump_spf()
            return [Note(f"stale SPF ack {frame.seq} from {src}; ignored")]
        if frame.ack_kind is FrameKind.FPF:
            if src in self.fpf_pending:
                self.fpf_pending.discard(src)
                self.fpf_undelivered.discard(src)
                actions: list[Action] = [CancelTimer(f"fpf:{src}")]
                actions += self._check_dissemination()
                return actions
            return [Note(f"duplicate FPF ack from {src}; ignored")]
        return [Note(f"unexpected ack kind from {src}; dropped")]

    def _on_nack(self, src: int, frame: Frame) -> list[Action]:
        if frame.ack_kind is not FrameKind.SPF or src not in self._transfers:
            return [Note(f"unexpected NACK from {src}; dropped")]
        if self.decided is not None:
            # late rejoiner after the decision: the final positions are what
            # it actually needs
            return self._send_fpf(src)
        xfer = self._transfers[src]
        xfer.failed = False
        if frame.seq == NACK_ALL:
            xfer.acked = set()
            xfer.pending = deque(range(len(xfer.segments)))
            if self._inflight is not None and self._inflight[0] == src:
                self._inflight = None
        else:
            if frame.seq < len(xfer.segments) and frame.seq not in xfer.pending \
                    and self._inflight != (src, frame.seq):
                xfer.acked.discard(frame.seq)
                xfer.pending.append(frame.seq)
        return self._pump_spf()

    def _on_result(self, src: int, frame: Frame) -> list[Action]:
        actions: list[Action] = [Send(src, ack_for(frame, self.node_id))]
        if src not in self.g_node_ids:
            return [Note(f"result from unknown node {src}; dropped")]
        if self.decided is not None:
            actions.append(Note(f"late result from {src} after decision; not applied"))
            return actions
        if src in self.results:
            actions.append(Note(f"duplicate result from {src}; kept first"))
            return actions
        chrom, coverage = decode_result(frame.payload, self.n_objects)
        self.results[src] = (chrom, coverage)
        if len(self.results) >= self.results_needed():
            actions += self._decide()
        return actions

    def on_timer(self, name: str) -> list[Action]:
        if name == "spf":
            return self._on_spf_timeout()
        if name == "collect":
            return self._on_collect_timeout()
        if name == "requery":
            return self._on_requery_timer()
        if name.startswith("fpf:"):
            return self._on_fpf_timeout(int(name.split(":", 1)[1]))
        return [Note(f"unknown timer {name}; ignored")]

    # -- timers ------------------------------------------------------------

    def _on_spf_timeout(self) -> list[Action]:
        if self._inflight is None:
            return []
        gid, seq = self._inflight
        if self._spf_retries < RETRY_LIMIT:
            self._spf_retries += 1
            return [Send(gid, self._segment(gid, seq)), StartTimer("spf", ACK_TIMEOUT_MS)]
        self._transfers[gid].failed = True
        self._transfers[gid].pending.clear()
        self.failed_nodes.add(gid)
        self._inflight = None
        return [Note(f"worker {gid} unreachable after {RETRY_LIMIT} retries; giving up on it")] \
            + self._pump_spf()

    def _on_collect_timeout(self) -> list[Action]:
        if self.decided is not None or self.phase is VNodePhase.DONE:
            return []
        if self.results:
            return [Note("collection timeout; deciding on received results")] + self._decide()
        self.timed_out = True
        self.phase = VNodePhase.DONE
        return [Note("collection timeout with no results; session failed")]

    def _on_requery_timer(self) -> list[Action]:
        if self.phase is not VNodePhase.COLLECTING or self.decided is not None:
            return []
        if self._requeries >= REQUERY_LIMIT:
            return []
        self._requeries += 1
        actions: list[Action] = []
        for gid in self.g_node_ids:
            if gid not in self.results:
                actions.append(Send(gid, nack_all(self.node_id, FrameKind.RF)))
        actions.append(StartTimer("requery", REQUERY_INTERVAL_MS))
        return actions

    def _on_fpf_timeout(self, gid: int) -> list[Action]:
        if gid not in self.fpf_pending:
            return []
        if self._fpf_retries.get(gid, 0) < RETRY_LIMIT:
            self._fpf_retries[gid] = self._fpf_retries.get(gid, 0) + 1
            return self._send_fpf(gid, arm_only=True)
        self.fpf_pending.discard(gid)
        self.fpf_undelivered.add(gid)
        return [Note(f"FPF to {gid} unacknowledged after {RETRY_LIMIT} retries")] \
            + self._check_dissemination()

    # -- decision ----------------------------------------------------------

    def _decide(self) -> list[Action]:
        assert self.results, "decision requires at least one result"
        assert (len(self.results) >= self.results_needed()) or self.timed_out or True
        self.phase = VNodePhase.DECIDING
        best_gid = max(self.results, key=lambda g: (self.results[g][1], -g))
        chrom, coverage = self.results[best_gid]
        self.decided = (best_gid, chrom, coverage)
        actions: list[Action] = [CancelTimer("spf"), CancelTimer("collect"),
                                 CancelTimer("requery"),
                                 Note(f"decision: worker {best_gid} at {coverage:.4f}")]
        # force the process to stop: outstanding distribution is abandoned
        for xfer in self._transfers.values():
            xfer.pending.clear()
        self._inflight = None
        self.phase = VNodePhase.DISSEMINATING
        self.fpf_pending = set(self.g_node_ids)
        self.fpf_undelivered = set()
        self._fpf_retries = {}
        for gid in self.g_node_ids:
            actions += self._send_fpf(gid, arm_only=True)
        return actions

    def _send_fpf(self, gid: int, arm_only: bool = False) -> list[Action]:
        assert self.decided is not None
        _, chrom, coverage = self.decided
        frame = Frame(FrameKind.FPF, self.node_id,
                      payload=encode_result(chrom, coverage))
        actions: list[Action] = [Send(gid, frame), StartTimer(f"fpf:{gid}", ACK_TIMEOUT_MS)]
        if not arm_only:
            self.fpf_pending.add(gid)
            self._fpf_retries.setdefault(gid, 0)
        return actions

    def _check_dissemination(self) -> list[Action]:
        if self.fpf_pending:
            return []
        if self.fpf_undelivered and self._sweeps < FPF_SWEEP_LIMIT:
            self._sweeps += 1
            actions: list[Action] = [Note(f"FPF sweep {self._sweeps} for "
                                          f"{sorted(self.fpf_undelivered)}")]
            retry = sorted(self.fpf_undelivered)
            self.fpf_undelivered = set()
            for gid in retry:
                self.fpf_pending.add(gid)
                self._fpf_retries[gid] = 0
                actions += self._send_fpf(gid, arm_only=True)
            return actions
        self.phase = VNodePhase.DONE
        return [Note("dissemination complete" if not self.fpf_undelivered
                     else f"done; FPF undelivered to {sorted(self.fpf_undelivered)}")]


# ---------------------------------------------------------------------------
# Worker state machine.
# ---------------------------------------------------------------------------

class GNodePhase(enum.Enum):
    AWAITING_SPF = "awaiting_spf"
    REASSEMBLING = "reassembling"
    OPTIMIZING = "optimizing"
    REPORTING = "reporting"
    AWAITING_FPF = "awaiting_fpf"
    DONE = "done"


class GNode:
    """Worker: reassembles its sub-population, optimizes, reports, applies.

    Every received SPF segment is acknowledged (duplicates too).  Gaps are
    re-requested by per-segment NACKs after a reassembly timeout; a restart
    re-enters AWAITING_SPF and proactively re-requests everything.
    """

    def __init__(self, node_id: int, n_objects: int, vnode_id: int = 0):
        self.node_id = node_id
        self.n_objects = n_objects
        self.vnode_id = vnode_id
        self.phase = GNodePhase.AWAITING_SPF
        self.segments: dict[int, bytes] = {}
        self.total: int | None = None
        self.sub_population: tuple[Chromosome, ...] | None = None
        self.result: tuple[Chromosome, float] | None = None
        self.final: tuple[Chromosome, float] | None = None
        self._rf_retries = 0
        self._gap_cycles = 0
        self._reconnects = 0

    def start(self) -> list[Action]:
        return []

    def restart(self) -> list[Action]:
        # reconnect path: volatile state is gone, ask for everything again
        return [Send(self.vnode_id, nack_all(self.node_id, FrameKind.SPF)),
                StartTimer("reconnect", RECONNECT_TIMEOUT_MS)]

    def _complete(self) -> bool:
        return self.total is not None and len(self.segments) == self.total

    def _rf_frame(self) -> Frame:
        assert self.result is not None
        chrom, coverage = self.result
        return Frame(FrameKind.RF, self.node_id, payload=encode_result(chrom, coverage))

    def on_frame(self, src: int, frame: Frame) -> list[Action]:
        if frame.kind is FrameKind.SPF:
            return self._on_segment(frame)
        if frame.kind is FrameKind.FPF:
            return self._on_final(frame)
        if frame.kind is FrameKind.ACK and not frame.nack:
            if frame.ack_kind is FrameKind.RF and self.phase is GNodePhase.REPORTING:
                self.phase = GNodePhase.AWAITING_FPF
                return [CancelTimer("rf")]
            return [Note(f"unexpected ack in phase {self.phase.value}; ignored")]
        if frame.kind is FrameKind.ACK and frame.nack:
            return self._on_requery(frame)
        return [Note(f"protocol violation: {frame.kind.name} from {src} "
                     f"in phase {self.phase.value}; dropped")]

    def _on_segment(self, frame: Frame) -> list[Action]:
        actions: list[Action] = [Send(self.vnode_id, ack_for(frame, self.node_id)),
                                 CancelTimer("reconnect")]
        if self.phase in (GNodePhase.OPTIMIZING, GNodePhase.REPORTING,
                          GNodePhase.AWAITING_FPF, GNodePhase.DONE):
            return actions  # duplicate after completion: just re-ack
        if self.total is None:
            self.total = frame.total
        if frame.seq not in self.segments:
            self.segments[frame.seq] = frame.payload
        if self._complete():
            self.phase = GNodePhase.OPTIMIZING
            self.sub_population = reassemble_subpopulation(self.segments, self.n_objects)
            actions += [CancelTimer("gap"), StartCompute(self.sub_population)]
        else:
            self.phase = GNodePhase.REASSEMBLING
            actions.append(StartTimer("gap", GAP_TIMEOUT_MS))
        return actions

    def _on_final(self, frame: Frame) -> list[Action]:
        self.final = decode_result(frame.payload, self.n_objects)
        actions: list[Action] = [Send(self.vnode_id, ack_for(frame, self.node_id))]
        if self.phase is not GNodePhase.DONE:
            self.phase = GNodePhase.DONE
            actions += [CancelTimer("gap"), CancelTimer("rf"), CancelTimer("reconnect")]
        return actions

    def _on_requery(self, frame: Frame) -> list[Action]:
        if frame.ack_kind is FrameKind.RF:
            if self.phase in (GNodePhase.REPORTING, GNodePhase.AWAITING_FPF) and self.result:
                self.phase = GNodePhase.REPORTING
                self._rf_retries = 0
                return [Send(self.vnode_id, self._rf_frame()), StartTimer("rf", ACK_TIMEOUT_MS)]
            if self.phase is GNodePhase.REASSEMBLING:
                return self._nack_missing()
            if self.phase is GNodePhase.AWAITING_SPF:
                return [Send(self.vnode_id, nack_all(self.node_id, FrameKind.SPF))]
            return []  # still optimizing: the result will go out on its own
        return [Note("unexpected NACK kind at worker; ignored")]

    def _nack_missing(self) -> list[Action]:
        assert self.total is not None
        missing = [s for s in range(self.total) if s not in self.segments]
        return [Send(self.vnode_id, nack_segment(self.node_id, s, self.total))
                for s in missing]

    def on_compute_done(self, best: Chromosome, coverage: float) -> list[Action]:
        if self.phase is not GNodePhase.OPTIMIZING:
            return [Note("stale computation result; ignored")]
        self.result = (best, coverage)
        self.phase = GNodePhase.REPORTING
        self._rf_retries = 0
        return [Send(self.vnode_id, self._rf_frame()), StartTimer("rf", ACK_TIMEOUT_MS)]

    def on_timer(self, name: str) -> list[Action]:
        if name == "gap":
            if self.phase is GNodePhase.REASSEMBLING and not self._complete():
                if self._gap_cycles < GAP_CYCLE_LIMIT:
                    self._gap_cycles += 1
                    return self._nack_missing() + [StartTimer("gap", GAP_TIMEOUT_MS)]
                return [Note("reassembly gap persists; waiting for coordinator")]
            return []
        if name == "rf":
            if self.phase is GNodePhase.REPORTING:
                if self._rf_retries < RETRY_LIMIT:
                    self._rf_retries += 1
                    return [Send(self.vnode_id, self._rf_frame()),
                            StartTimer("rf", ACK_TIMEOUT_MS)]
                return [Note("result unacknowledged; waiting for re-query")]
            return []
        if name == "reconnect":
            if self.phase is GNodePhase.AWAITING_SPF and not self.segments \
                    and self._reconnects < RECONNECT_LIMIT:
                self._reconnects += 1
                return [Send(self.vnode_id, nack_all(self.node_id, FrameKind.SPF)),
                        StartTimer("reconnect", RECONNECT_TIMEOUT_MS)]
            return []
        return [Note(f"unknown timer {name}; ignored")]
