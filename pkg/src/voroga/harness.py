"""Experiment runner and metrics: mode and operator comparisons, neighbor
counts, a clearly-labeled synthetic RSSI model, CSV reports and SVG maps.

Energy and node lifetime are not measurable at desk scale; the reports
carry frame counts and per-node simulated busy time as explicit proxies
instead, and the RSSI column is a log-distance path-loss model, never a
measurement.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field, replace
from xml.sax.saxutils import escape

from .geometry import Disk, Point, RegionOfInterest, coverage_fraction
from .optimizer import Chromosome, GaConfig, GaRun, evaluate_population, history_csv, run
from .rng import STREAM_ISLAND, STREAM_SEEDING, derive_seed, make_rng
from .seeding import initial_population, random_population
from .simnet import LinkModel, SessionResult, run_session

NOT_REACHED = "not reached"


class CoincidentNodes(ValueError):
    """Synthetic RSSI is undefined at zero distance."""


@dataclass(frozen=True)
class RadioConfig:
    """Log-distance path-loss model: rssi(d) = p0 - 10*eta*log10(d/d0)."""

    p0_dbm: float = -40.0
    d0_m: float = 1.0
    path_loss_exponent: float = 2.2
    comm_range_m: float = 15.0


@dataclass(frozen=True)
class ExperimentSpec:
    ga_cfg: GaConfig
    roi: RegionOfInterest
    link: LinkModel = LinkModel()
    mode: str = "distributed"           # "centralized" | "distributed"
    baselines: tuple[str, ...] = ("VDGA",)
    repetitions: int = 30
    g_nodes: int = 6
    result_threshold: float = 0.8
    ga_ms_per_generation: int = 1
    collect_timeout_ms: int = 60_000
    rng_seed: int = 0
    radio: RadioConfig = RadioConfig()

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.mode not in ("centralized", "distributed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        known = {"RandomOnly", "VDOnly", "GAOnly", "VDGA"}
        unknown = set(self.baselines) - known
        if unknown:
            raise ValueError(f"unknown baselines {sorted(unknown)}")


@dataclass(frozen=True)
class MetricsRecord:
    mode: str
    repetition: int
    rng_seed: int
    coverage: float
    generations_to_target: int | None
    simulated_time_ms: int
    frames_sent: int
    neighbor_counts: tuple[int, ...]
    rssi_synthetic_dbm: tuple[float, ...]


# ---------------------------------------------------------------------------
# Per-deployment metrics.
# ---------------------------------------------------------------------------

def neighbor_counts(c: Chromosome, comm_range: float) -> list[int]:
    """Per-node count of other nodes within comm_range (Euclidean)."""
    if comm_range <= 0:
        raise ValueError("comm_range must be positive")
    pts = c.positions
    counts = [0] * len(pts)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if pts[i].distance_to(pts[j]) <= comm_range:
                counts[i] += 1
                counts[j] += 1
    return counts


def synthetic_rssi(c: Chromosome, tx_index: int, rx_index: int,
                   radio: RadioConfig = RadioConfig()) -> float:
    """Synthetic log-distance RSSI between two deployed nodes, in dBm."""
    if tx_index == rx_index:
        raise CoincidentNodes("tx and rx must be different nodes")
    d = c.positions[tx_index].distance_to(c.positions[rx_index])
    if d <= 1e-9:
        raise CoincidentNodes(f"nodes {tx_index} and {rx_index} coincide")
    return radio.p0_dbm - 10.0 * radio.path_loss_exponent * math.log10(d / radio.d0_m)


def nearest_neighbor_rssi(c: Chromosome, radio: RadioConfig = RadioConfig()) -> list[float]:
    """Synthetic RSSI from each node to its nearest neighbor."""
    pts = c.positions
    out = []
    for i in range(len(pts)):
        nearest = min((j for j in range(len(pts)) if j != i),
                      key=lambda j: pts[i].distance_to(pts[j]), default=None)
        if nearest is None:
            return []
        out.append(synthetic_rssi(c, i, nearest, radio))
    return out


def render_deployment(c: Chromosome, roi: RegionOfInterest, radius: float) -> str:
    """SVG map: region rectangle, sensing disks, coverage annotation."""
    disks = [Disk(p, radius) for p in c.positions]
    cov = coverage_fraction(disks, roi) if disks else 0.0
    label = f"{cov * 100:.1f}%"
    w, h = roi.width, roi.height
    margin = max(w, h) * 0.05
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{-margin} {-margin} {w + 2 * margin} {h + 2 * margin + 6}">',
        f'<g transform="translate(0,{h}) scale(1,-1)">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" '
        f'stroke="black" stroke-width="0.3"/>',
    ]
    for p in c.positions:
        parts.append(f'<circle cx="{p.x}" cy="{p.y}" r="{radius}" '
                     f'fill="steelblue" fill-opacity="0.25" stroke="steelblue" '
                     f'stroke-width="0.2"/>')
        parts.append(f'<circle cx="{p.x}" cy="{p.y}" r="0.6" fill="black"/>')
    parts.append("</g>")
    parts.append(f'<text x="0" y="{h + margin + 3}" font-size="{max(w, h) * 0.045}">'
                 f"coverage {escape(label)}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# CSV plumbing.
# ---------------------------------------------------------------------------

METRICS_HEADER = ["mode", "repetition", "rng_seed", "coverage",
                  "generations_to_target", "simulated_time_ms", "frames_sent",
                  "neighbor_counts", "rssi_synthetic_dbm"]


def metrics_row(rec: MetricsRecord) -> list[str]:
    return [
        rec.mode,
        str(rec.repetition),
        str(rec.rng_seed),
        f"{rec.coverage:.6f}",
        NOT_REACHED if rec.generations_to_target is None else str(rec.generations_to_target),
        str(rec.simulated_time_ms),
        str(rec.frames_sent),
        ";".join(str(n) for n in rec.neighbor_counts),
        ";".join(f"{v:.2f}" for v in rec.rssi_synthetic_dbm),
    ]


def parse_metrics_row(row: list[str]) -> MetricsRecord:
    return MetricsRecord(
        mode=row[0],
        repetition=int(row[1]),
        rng_seed=int(row[2]),
        coverage=float(row[3]),
        generations_to_target=None if row[4] == NOT_REACHED else int(row[4]),
        simulated_time_ms=int(row[5]),
        frames_sent=int(row[6]),
        neighbor_counts=tuple(int(v) for v in row[7].split(";") if v),
        rssi_synthetic_dbm=tuple(float(v) for v in row[8].split(";") if v),
    )


def _write_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _median_or_not_reached(values: list[int | None]) -> str:
    reached = [v for v in values if v is not None]
    if len(reached) * 2 < len(values) or not reached:
        return NOT_REACHED
    return str(int(statistics.median(reached)))


# ---------------------------------------------------------------------------
# Experiments.
# ---------------------------------------------------------------------------

def _session_record(mode: str, rep: int, spec: ExperimentSpec, cfg: GaConfig,
                    res: SessionResult) -> MetricsRecord:
    return MetricsRecord(
        mode=mode,
        repetition=rep,
        rng_seed=cfg.rng_seed,
        coverage=res.final_coverage,
        generations_to_target=res.generations_to_target,
        simulated_time_ms=res.completed_at_ms,
        frames_sent=res.frames_sent,
        neighbor_counts=tuple(neighbor_counts(res.final_positions,
                                              spec.radio.comm_range_m)),
        rssi_synthetic_dbm=tuple(nearest_neighbor_rssi(res.final_positions, spec.radio)),
    )


def run_mode_session(spec: ExperimentSpec, mode: str, rep: int) -> tuple[GaConfig, SessionResult]:
    """One repetition of one mode; paired repetitions share seed derivation."""
    cfg = replace(spec.ga_cfg, rng_seed=derive_seed(spec.rng_seed, rep))
    link = replace(spec.link, rng_seed=derive_seed(spec.rng_seed, rep, 1))
    g = 1 if mode == "centralized" else spec.g_nodes
    res = run_session(g, cfg, spec.roi, link=link,
                      result_threshold=spec.result_threshold,
                      ga_ms_per_generation=spec.ga_ms_per_generation,
                      collect_timeout_ms=spec.collect_timeout_ms)
    return cfg, res


@dataclass(frozen=True)
class ComparisonReport:
    records: tuple[MetricsRecord, ...]
    csv_text: str

    def records_for(self, mode: str) -> list[MetricsRecord]:
        return [r for r in self.records if r.mode == mode]


def compare_centralized_distributed(spec: ExperimentSpec) -> ComparisonReport:
    """Paired centralized (1 island) vs distributed (g islands) sessions.

    Both modes share the seeding and link RNG streams per repetition; only
    the island count differs.  The CSV carries one row per (mode, rep) and
    a median summary row per mode.
    """
    records: list[MetricsRecord] = []
    for rep in range(spec.repetitions):
        for mode in ("centralized", "distributed"):
            cfg, res = run_mode_session(spec, mode, rep)
            records.append(_session_record(mode, rep, spec, cfg, res))
    rows = [metrics_row(r) for r in records]
    for mode in ("centralized", "distributed"):
        sub = [r for r in records if r.mode == mode]
        rows.append([
            f"{mode}_median", "-", "-",
            f"{statistics.median(r.coverage for r in sub):.6f}",
            _median_or_not_reached([r.generations_to_target for r in sub]),
            str(int(statistics.median(r.simulated_time_ms for r in sub))),
            str(int(statistics.median(r.frames_sent for r in sub))),
            "", "",
        ])
    return ComparisonReport(records=tuple(records),
                            csv_text=_write_csv(METRICS_HEADER, rows))


@dataclass(frozen=True)
class MutationVariantRun:
    mutation_points: int
    repetition: int
    rng_seed: int
    final_coverage: float
    generations_to_090: int | None
    history_best: tuple[float, ...]


@dataclass(frozen=True)
class MutationReport:
    runs: tuple[MutationVariantRun, ...]
    summary_csv: str
    traces_csv: str


def compare_mutation_variants(spec: ExperimentSpec) -> MutationReport:
    """Paired one-point vs two-point mutation runs (library-side GA).

    Identical seeds per repetition; the summary reports generations to 90 %
    coverage per variant, the trace CSV the mean best-coverage trajectory
    (runs that stop early are padded with their final value).
    """
    runs: list[MutationVariantRun] = []
    for rep in range(spec.repetitions):
        seed = derive_seed(spec.rng_seed, rep)
        for points in (1, 2):
            cfg = replace(spec.ga_cfg, mutation_points=points, rng_seed=seed)
            pop = initial_population(cfg, spec.roi, make_rng(seed, STREAM_SEEDING))
            ga = run(pop, cfg, spec.roi, make_rng(seed, STREAM_ISLAND, 0))
            best_trace = tuple(st.best_coverage for st in ga.history)
            to_090 = next((st.generation for st in ga.history
                           if st.best_coverage >= 0.90), None)
            runs.append(MutationVariantRun(points, rep, seed, ga.best_coverage,
                                           to_090, best_trace))
    summary_rows = [[str(r.mutation_points), str(r.repetition), str(r.rng_seed),
                     f"{r.final_coverage:.6f}",
                     NOT_REACHED if r.generations_to_090 is None else str(r.generations_to_090)]
                    for r in runs]
    for points in (1, 2):
        sub = [r for r in runs if r.mutation_points == points]
        summary_rows.append([
            f"{points}_median", "-", "-",
            f"{statistics.median(r.final_coverage for r in sub):.6f}",
            _median_or_not_reached([r.generations_to_090 for r in sub]),
        ])
    summary = _write_csv(
        ["mutation_points", "repetition", "rng_seed", "final_coverage",
         "generations_to_090"], summary_rows)

    trace_rows = []
    horizon = max(len(r.history_best) for r in runs)
    for points in (1, 2):
        sub = [r for r in runs if r.mutation_points == points]
        for g in range(horizon):
            vals = [r.history_best[min(g, len(r.history_best) - 1)] for r in sub]
            trace_rows.append([str(points), str(g), f"{sum(vals) / len(vals):.6f}"])
    traces = _write_csv(["mutation_points", "generation", "mean_best_coverage"],
                        trace_rows)
    return MutationReport(runs=tuple(runs), summary_csv=summary, traces_csv=traces)


@dataclass(frozen=True)
class BaselineRun:
    strategy: str
    repetition: int
    rng_seed: int
    final_coverage: float


@dataclass(frozen=True)
class BaselineReport:
    runs: tuple[BaselineRun, ...]
    csv_text: str

    def coverage(self, strategy: str, rep: int) -> float:
        for r in self.runs:
            if r.strategy == strategy and r.repetition == rep:
                return r.final_coverage
        raise KeyError((strategy, rep))


def compare_baselines(spec: ExperimentSpec, budget_generations: int = 200) -> BaselineReport:
    """VD-GA against its ablations at a fixed generation budget.

    Per repetition, all strategies sharing a stage consume identical RNG
    streams: VDGA and VDOnly share the Voronoi seeding draw, GAOnly and
    RandomOnly share the uniform initializer draw, and both GA runs share
    the evolution stream.
    """
    runs: list[BaselineRun] = []
    for rep in range(spec.repetitions):
        seed = derive_seed(spec.rng_seed, rep)
        cfg = replace(spec.ga_cfg, rng_seed=seed, coverage_target=1.0,
                      max_generations=budget_generations)
        vd_pop = evaluate_population(
            initial_population(cfg, spec.roi, make_rng(seed, STREAM_SEEDING)),
            cfg, spec.roi)
        rand_pop = evaluate_population(
            random_population(cfg, spec.roi, make_rng(seed, STREAM_SEEDING, 1)),
            cfg, spec.roi)
        results = {}
        if "VDOnly" in spec.baselines:
            results["VDOnly"] = max(vd_pop.coverages)
        if "RandomOnly" in spec.baselines:
            results["RandomOnly"] = max(rand_pop.coverages)
        if "VDGA" in spec.baselines:
            results["VDGA"] = run(vd_pop, cfg, spec.roi,
                                  make_rng(seed, STREAM_ISLAND, 0)).best_coverage
        if "GAOnly" in spec.baselines:
            results["GAOnly"] = run(rand_pop, cfg, spec.roi,
                                    make_rng(seed, STREAM_ISLAND, 0)).best_coverage
        for strategy, cov in results.items():
            runs.append(BaselineRun(strategy, rep, seed, cov))
    rows = [[r.strategy, str(r.repetition), str(r.rng_seed), f"{r.final_coverage:.6f}"]
            for r in runs]
    return BaselineReport(runs=tuple(runs),
                          csv_text=_write_csv(
                              ["strategy", "repetition", "rng_seed", "final_coverage"],
                              rows))


def positions_csv(c: Chromosome) -> str:
    rows = [[str(i), f"{p.x:.2f}", f"{p.y:.2f}"] for i, p in enumerate(c.positions)]
    return _write_csv(["node", "x", "y"], rows)


def parse_positions_csv(text: str) -> Chromosome:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    positions = []
    for row in reader:
        if not row:
            continue
        positions.append(Point(float(row[1]), float(row[2])))
    return Chromosome(tuple(positions))
