"""CSV emission/parsing and a minimal SVG line chart.

Floats are written with ``repr`` so a parsed file recovers the in-memory
values exactly. Files are written to a temporary sibling and renamed into
place, so a reader never sees a half-written report.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from xml.sax.saxutils import escape

from .experiments import RegretRow, SweepResult, SweepRow
from .sim import MonteCarloStats

STATS_COLUMNS = (
    "frequency", "k", "trials", "successes", "detections", "timeouts",
    "success_rate", "ci_low", "ci_high", "seed",
)
REGRET_COLUMNS = (
    "initial_state", "distance", "schedule_index", "optimal_value",
    "online_value", "regret", "optimal_success", "online_success",
)


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _stats_record(row: SweepRow) -> list[str]:
    s = row.stats
    return [
        repr(float(row.frequency)), str(row.k), str(s.trials), str(s.successes),
        str(s.detections), str(s.timeouts), repr(s.success_rate), repr(s.ci_low),
        repr(s.ci_high), str(row.seed),
    ]


def stats_csv(rows) -> str:
    return _table(STATS_COLUMNS, [_stats_record(r) for r in rows])


def parse_stats_csv(text: str) -> list[SweepRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != STATS_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    return [
        SweepRow(
            float(r["frequency"]),
            int(r["k"]),
            MonteCarloStats(int(r["trials"]), int(r["successes"]), int(r["detections"]), int(r["timeouts"])),
            int(r["seed"]),
        )
        for r in reader
    ]


def regret_csv(rows) -> str:
    return _table(
        REGRET_COLUMNS,
        [
            [
                str(r.initial_state), str(r.distance), str(r.schedule_index), repr(r.optimal_value),
                repr(r.online_value), repr(r.regret), repr(r.optimal_success), repr(r.online_success),
            ]
            for r in rows
        ],
    )


def parse_regret_csv(text: str) -> list[RegretRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REGRET_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    return [
        RegretRow(
            int(r["initial_state"]), int(r["distance"]), int(r["schedule_index"]),
            float(r["optimal_value"]), float(r["online_value"]), float(r["regret"]),
            float(r["optimal_success"]), float(r["online_success"]),
        )
        for r in reader
    ]


def sweep_svg(result: SweepResult, width: int = 480, height: int = 320) -> str:
    """Success rate against the swept value, with Wilson whiskers."""
    xs = [float(v) for v in result.values()]
    lo_x, hi_x = min(xs), max(xs)
    span = (hi_x - lo_x) or 1.0
    pad = 40

    def px(x):
        return pad + (x - lo_x) / span * (width - 2 * pad)

    def py(y):
        return height - pad - y * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{py(0):.2f}" x2="{width - pad}" y2="{py(0):.2f}" stroke="black"/>',
        f'<line x1="{pad}" y1="{py(0):.2f}" x2="{pad}" y2="{py(1):.2f}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12">'
        f"{escape(result.parameter)}</text>",
        f'<text x="12" y="{pad - 12}" font-size="12">success rate</text>',
    ]
    points = []
    for x, row in zip(xs, result.rows):
        s = row.stats
        cx, cy = px(x), py(s.success_rate)
        points.append(f"{cx:.2f},{cy:.2f}")
        parts.append(
            f'<line x1="{cx:.2f}" y1="{py(s.ci_low):.2f}" x2="{cx:.2f}" y2="{py(s.ci_high):.2f}" stroke="gray"/>'
        )
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="steelblue"/>')
    parts.append(f'<polyline points="{" ".join(points)}" fill="none" stroke="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
