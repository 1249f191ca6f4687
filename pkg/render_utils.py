import json
import logging
import os
from dataclasses import dataclass
from fractions import Fraction

import click
import pandas as pd

from config import COLORS, DEFAULT_TOL, NUMERIC_PRECISION
from utils.itinerary import Entry, ItinerarySeq, small_magnitude
from utils.spec_parser import seq_to_spec
from utils.tower_arith import Lit
from verifiers.dynamics import endpoint_record

logger = logging.getLogger(__name__)

ns_svg = "http://www.w3.org/2000/svg"

# canvas size and margin in pixels
WIDTH, HEIGHT, MARGIN = 800, 400, 40

VERDICT_COLORS = {
    "Pass": "green",
    "Member": "green",
    "Holds": "green",
    "Verified": "green",
    "CertifiedYes": "green",
    "Fail": "red",
    "Fails": "red",
    "NonMember": "red",
    "CertifiedNo": "red",
    "Unknown": "yellow",
}


# ---------------------------------------------------------------------------
# Text output
# ---------------------------------------------------------------------------

def style_verdict(verdict):
    return click.style(str(verdict), fg=VERDICT_COLORS.get(str(verdict)), bold=True)


def format_record(title, data):
    """
    Format a flat result dictionary as aligned ``key: value`` lines.

    Args:
        title (str): Heading line
        data (dict): Result fields; nested values are shown inline

    Returns:
        str: The formatted text
    """
    lines = [click.style(title, bold=True)]
    width = max((len(str(k)) for k in data), default=0)
    for key, value in data.items():
        if key in ("verdict", "result"):
            value = style_verdict(value)
        lines.append(f"  {str(key).ljust(width)}  {value}")
    return "\n".join(lines)


def format_run_report(report):
    """Human-readable summary of a RunReport: one table row per check kind."""
    table = report.summary_table()
    counts = report.counts()
    status = "Pass" if report.passed else ("Fail" if counts["Fail"] else "Unknown")
    lines = [
        click.style(f"suite {report.suite}", bold=True) + "  " + style_verdict(status),
        table.to_string(index=False) if not table.empty else "  (no checks)",
        f"max precision: {report.precision.get('max_precision', 0)} bits, "
        f"escalations: {report.precision.get('escalations', 0)}",
    ]
    for anomaly in report.anomalies:
        lines.append(click.style(f"anomaly: {anomaly}", fg="yellow"))
    for check in report.checks:
        if check["verdict"] != "Pass":
            detail = check.get("error") or check.get("failures") or check.get("violations") or check.get("disagreements")
            lines.append(f"  {style_verdict(check['verdict'])} {check['check']}: {detail}")
    return "\n".join(lines)


REPORT_COLUMNS = ["saved_at", "command", "suite", "exit_status"]


def report_rows(reports):
    """One summary row per saved report; files that are not report objects are skipped."""
    rows = []
    for report in reports:
        if not isinstance(report, dict):
            continue
        command = report.get("command", "")
        if isinstance(command, list):
            command = " ".join(str(part) for part in command)
        timing = report.get("timing")
        rows.append({
            "saved_at": timing.get("saved_at", "") if isinstance(timing, dict) else "",
            "command": command,
            "suite": report.get("suite", ""),
            "exit_status": report.get("exit_status", 0),
        })
    return rows


def format_reports(rows):
    if not rows:
        return "(no saved reports)"
    return pd.DataFrame(rows, columns=REPORT_COLUMNS).to_string(index=False)


# ---------------------------------------------------------------------------
# Spine abscissa
# ---------------------------------------------------------------------------

def zigzag(v):
    """0, 1, -1, 2, -2, ... -> 0, 1, 2, 3, 4, ..."""
    return 2 * v - 1 if v > 0 else -2 * v


def _digits(z):
    # bijective base 3 on digits 1..3 followed by a 0 terminator; prefix-free
    digits = []
    while z > 0:
        d = z % 3 or 3
        digits.append(d)
        z = (z - d) // 3
    return digits[::-1] + [0]


def spine_abscissa(s, depth):
    """Exact abscissa in [0, 1) of a sequence from its first ``depth`` signed entries."""
    digits = []
    for k in range(depth):
        entry = s.entry_at(k)
        digits.extend(_digits(zigzag(entry.sign * small_magnitude(entry.mag))))
    x = Fraction(0)
    for i, d in enumerate(digits, start=1):
        x += Fraction(d, 4**i)
    return x


def default_family(spines, depth):
    """Sequences whose first ``depth`` entries are the base-4 digits of 0, 1, 2, ..."""
    if spines > 4**depth:
        raise ValueError(f"{spines} spines need depth >= {len(_base4(spines - 1))}")
    family = []
    for i in range(spines):
        digits = _base4(i)
        digits = [0] * (depth - len(digits)) + digits
        family.append(ItinerarySeq({pos: Entry(Lit(d)) for pos, d in enumerate(digits) if d}))
    return family


def _base4(i):
    digits = []
    while True:
        digits.append(i % 4)
        i //= 4
        if i == 0:
            return digits[::-1]


# ---------------------------------------------------------------------------
# SVG output
# ---------------------------------------------------------------------------

def props_repr(d):
    return " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in d.items())


def element(tag, **attr):
    return f"<{tag} {props_repr(attr)} />"


@dataclass(frozen=True)
class FanFigure:
    svg_path: str
    csv_path: str
    table: object

    @property
    def injective(self):
        return not self.table["exact_angle"].duplicated().any()


def _svg(rows, t_max):
    inner_w, inner_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(angle, t):
        return round(MARGIN + angle * inner_w, 3), round(HEIGHT - MARGIN - t / t_max * inner_h, 3)

    parts = [
        f'<svg width="{WIDTH}" height="{HEIGHT}" xmlns="{ns_svg}">',
        element("rect", x=0, y=0, width=WIDTH, height=HEIGHT, fill=COLORS["background"]),
        element(
            "line",
            x1=MARGIN, y1=HEIGHT - MARGIN, x2=WIDTH - MARGIN, y2=HEIGHT - MARGIN,
            stroke=COLORS["tertiary"], stroke_width=1,
        ),
    ]
    for row in rows:
        x, y0 = px(row["angle"], row["t_lo"])
        _, y1 = px(row["angle"], t_max)
        parts.append(element("line", x1=x, y1=y0, x2=x, y2=y1, stroke=COLORS["primary"], stroke_width=1))
        parts.append(element("circle", cx=x, cy=y0, r=2, fill=COLORS["secondary"]))
    parts.append(
        f'<text x="{MARGIN}" y="{MARGIN - 10}" fill="{COLORS["text_dark"]}" font-size="12">'
        f"{len(rows)} spines, t up to {t_max:g}</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_fan(spines, depth, out, family=None, t_max=None, tol=DEFAULT_TOL, precision=NUMERIC_PRECISION):
    """
    Draw the spines [t_s, t_max] x {s} of a finite family of numeric-mode sequences.

    The horizontal coordinate comes from zig-zag coding the first ``depth``
    entries into base-4 digits. A CSV with (angle, t_s) rows is written next
    to the SVG.

    Args:
        spines (int): Number of spines when ``family`` is not given
        depth (int): Entries used for the abscissa
        out (str): SVG path
        family (list): Optional explicit ItinerarySeq list
        t_max (float): Top of every spine; defaults to the largest t_s plus 1

    Returns:
        FanFigure: Paths and the per-spine table

    Raises:
        ValueError: If two sequences share an abscissa
    """
    if family is None:
        family = default_family(spines, depth)
    rows = []
    for s in family:
        record = endpoint_record(s, tol=tol, precision=precision)
        if record.enclosure is None:
            raise ValueError("render_fan needs numeric-mode sequences")
        angle = spine_abscissa(s, depth)
        rows.append({
            "angle": float(angle),
            "exact_angle": str(angle),
            "t_lo": record.lo,
            "t_hi": record.hi,
            "depth": record.depth,
            "spec": json.dumps(seq_to_spec(s), sort_keys=True),
        })
    rows.sort(key=lambda r: Fraction(r["exact_angle"]))
    exact = [r["exact_angle"] for r in rows]
    if len(set(exact)) != len(exact):
        raise ValueError("spine abscissas collide; raise the depth")

    if t_max is None:
        t_max = max((r["t_hi"] for r in rows), default=0.0) + 1.0
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        f.write(_svg(rows, t_max))

    table = pd.DataFrame(rows, columns=["angle", "exact_angle", "t_lo", "t_hi", "depth", "spec"])
    csv_path = os.path.splitext(out)[0] + ".csv"
    table.to_csv(csv_path, index=False)
    logger.debug("fan with %d spines written to %s", len(rows), out)
    return FanFigure(out, csv_path, table)
