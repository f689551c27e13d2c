"""Deterministic file exports: event log, metrics, zone stats, density.

CSV dialect is fixed (comma separator, header row, "." decimal point,
"\\n" terminator) and floats are rendered with repr so identical runs
diff byte-for-byte.  Every data export carries a scenario-hash/seed
header line; wall-clock timestamps appear only in the manifest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .engine import RunResult, Scenario
from .grid import ZoneId, iter_zones
from .metrics import utilization_series
from .zone_ops import compute_zone_stats, density_map, edge_aggregate


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header_line(result: RunResult) -> str:
    s = result.scenario
    return (
        f"# scenario={s.name} hash={s.content_hash()} seed={result.seed} "
        f"provenance={s.provenance}"
    )


@dataclass
class RunManifest:
    scenario_path: str
    scenario_hash: str
    seed: int
    out_dir: str
    formats: list[str]
    files: list[str]
    created_utc: str
    provenance: str

    def write(self, path: Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_events_csv(path: Path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(result) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tick", "seq", "entity", "kind", "payload"])
        for ev in result.log:
            writer.writerow([
                ev.tick, ev.seq, ev.entity, ev.kind,
                json.dumps(ev.payload, sort_keys=True, separators=(",", ":")),
            ])


def write_events_ndjson(path: Path, result: RunResult) -> None:
    s = result.scenario
    with open(path, "w") as fh:
        meta = {"scenario": s.name, "hash": s.content_hash(), "seed": result.seed,
                "provenance": s.provenance}
        fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for ev in result.log:
            fh.write(json.dumps(
                {"tick": ev.tick, "seq": ev.seq, "entity": ev.entity,
                 "kind": ev.kind, "payload": ev.payload},
                sort_keys=True, separators=(",", ":"),
            ) + "\n")


def write_metrics_csv(path: Path, result: RunResult, window_s: int = 600) -> None:
    """Tidy per-window fleet metrics plus scalar run summary rows."""
    series = utilization_series(result.log.events, window_s)
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(result) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series", "x", "value"])
        for stats in series:
            writer.writerow(["cumulative_dispatches", stats.window[1],
                             stats.cumulative_dispatches])
            writer.writerow(["mean_utilization", stats.window[1],
                             _fmt(stats.mean_utilization)])
            writer.writerow(["max_utilization", stats.window[1],
                             _fmt(stats.max_utilization)])
        for key in sorted(result.summary):
            value = result.summary[key]
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                writer.writerow(["summary_" + key, result.scenario.duration_ticks,
                                 _fmt(value)])


def write_zone_stats_csv(path: Path, result: RunResult) -> None:
    s = result.scenario
    window = (0, s.duration_ticks + 1)
    stats = [
        compute_zone_stats(result.log.events, zone, window, network=s.network_id)
        for zone in iter_zones(s.grid, layer=s.grid.operational_layer)
    ]
    summary = edge_aggregate(stats)
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(result) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "network", "zone_row", "zone_col", "zone_layer", "window_start",
            "window_end", "mean_signal_time", "throughput_bps",
            "coverage_fraction", "persons_scanned", "fever_alarms",
            "sanitizations", "medications",
        ])
        for st in stats:
            writer.writerow([
                st.network, st.zone.row, st.zone.col, st.zone.layer,
                st.window[0], st.window[1],
                _fmt(st.qos.mean_signal_time), _fmt(st.qos.throughput_bps),
                _fmt(st.qos.coverage_fraction),
                st.experience.persons_scanned, st.experience.fever_alarms,
                st.experience.sanitizations, st.experience.medications,
            ])
        writer.writerow([
            summary.network, "edge", "edge", "edge",
            summary.window[0], summary.window[1],
            _fmt(summary.qos.mean_signal_time), _fmt(summary.qos.throughput_bps),
            _fmt(summary.qos.coverage_fraction),
            summary.experience.persons_scanned, summary.experience.fever_alarms,
            summary.experience.sanitizations, summary.experience.medications,
        ])


def write_density_csv(path: Path, result: RunResult) -> None:
    s = result.scenario
    dm = density_map(result.log.events, (0, s.duration_ticks + 1), s.grid)
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(result) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row"] + [f"col{c}" for c in range(s.grid.n)])
        for r in range(s.grid.n):
            writer.writerow([r] + [int(dm.counts[r, c]) for c in range(s.grid.n)])


def export_run(
    result: RunResult,
    out_dir: str | Path,
    scenario_path: str = "<inline>",
    fmt: str = "csv",
) -> RunManifest:
    """Write the manifest first, then every export it lists."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events_name = "events.csv" if fmt == "csv" else "events.ndjson"
    files = [events_name, "metrics.csv", "zonestats.csv", "density.csv"]
    manifest = RunManifest(
        scenario_path=str(scenario_path),
        scenario_hash=result.scenario.content_hash(),
        seed=result.seed,
        out_dir=str(out),
        formats=[fmt],
        files=files,
        created_utc=datetime.now(timezone.utc).isoformat(),
        provenance=result.scenario.provenance,
    )
    manifest.write(out / "manifest.json")
    if fmt == "csv":
        write_events_csv(out / events_name, result)
    else:
        write_events_ndjson(out / events_name, result)
    write_metrics_csv(out / "metrics.csv", result)
    write_zone_stats_csv(out / "zonestats.csv", result)
    write_density_csv(out / "density.csv", result)
    return manifest
