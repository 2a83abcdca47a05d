"""Frame and lexical-unit frequency rankings over confirmed-violence records.

Counts are evocation counts (one per annotation set).  Rankings sort by
count descending, then name ascending.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UnknownFrame
from .lexicon import MODELED_DOMAINS, Domain


def _rank(counter, n):
    if n <= 0:
        return []
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def top_frames_by_domain(records, lex, n=15, domains=MODELED_DOMAINS):
    counts = {Domain(d): Counter() for d in domains}
    for rec in records:
        for a in rec.annotation_sets:
            d = lex.frame_domain(a.frame)
            if d in counts:
                counts[d][a.frame] += 1
    return {d.value: _rank(c, n) for d, c in counts.items()}


def top_lus_by_domain(records, lex, n=20, domains=MODELED_DOMAINS):
    counts = {Domain(d): Counter() for d in domains}
    for rec in records:
        for a in rec.annotation_sets:
            if a.lu is None:
                continue
            d = lex.frame_domain(lex.lu(a.lu).frame)
            if d in counts:
                counts[d][a.lu] += 1
    return {d.value: _rank(c, n) for d, c in counts.items()}


def top_lus_for_frame(records, frame, n=30, lex=None):
    if lex is not None and not lex.has_frame(frame):
        raise UnknownFrame(f"unknown frame {frame!r}")
    counts = Counter(a.lu for rec in records for a in rec.annotation_sets
                     if a.frame == frame and a.lu is not None)
    return _rank(counts, n)


@dataclass
class PatternReport:
    frames: dict = field(default_factory=dict)
    lus: dict = field(default_factory=dict)
    drilldown_frame: str = ""
    drilldown: list = field(default_factory=list)

    def to_dict(self):
        return {
            "top_frames": {d: [list(x) for x in rows] for d, rows in self.frames.items()},
            "top_lus": {d: [list(x) for x in rows] for d, rows in self.lus.items()},
            "drilldown": {"frame": self.drilldown_frame,
                          "lus": [list(x) for x in self.drilldown]},
        }


def pattern_report(records, lex, n_frames=15, n_lus=20,
                   drilldown_frame="Health_conditions", n_drilldown=30):
    return PatternReport(
        frames=top_frames_by_domain(records, lex, n_frames),
        lus=top_lus_by_domain(records, lex, n_lus),
        drilldown_frame=drilldown_frame,
        drilldown=top_lus_for_frame(records, drilldown_frame, n_drilldown, lex),
    )


def write_pattern_tables(report, outdir):
    """One TSV per analysis: top frames, top LUs, frame drill-down."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, table in (("top_frames", report.frames), ("top_lus", report.lus)):
        path = outdir / f"{name}.tsv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["domain", "rank", "item", "count"])
            for domain, rows in table.items():
                for rank, (item, count) in enumerate(rows, 1):
                    w.writerow([domain, rank, item, count])
        paths.append(path)
    path = outdir / "drilldown.tsv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["frame", "rank", "lu", "count"])
        for rank, (lu, count) in enumerate(report.drilldown, 1):
            w.writerow([report.drilldown_frame, rank, lu, count])
    paths.append(path)
    return paths
