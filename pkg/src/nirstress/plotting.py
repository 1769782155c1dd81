"""Deterministic SVG rendering of a recording with its block schedule.

Channel-averaged oxy (red), deoxy (blue), and total (black) curves over
green (control) / orange (stress) task shading. Hand-rolled SVG so output
is byte-stable for identical input.
"""

from __future__ import annotations

import numpy as np

from .errors import RangeError
from .signal_model import BlockSchedule, HemoglobinKind, Level, Recording

_WIDTH, _HEIGHT = 960, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 16, 44
_CURVES = (
    (HemoglobinKind.TOTAL, "#000000", "total"),
    (HemoglobinKind.OXY, "#d62728", "oxy"),
    (HemoglobinKind.DEOXY, "#1f77b4", "deoxy"),
)
_SHADE = {Level.CONTROL: "#2ca02c", Level.STRESS: "#ff7f0e"}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_recording_svg(
    recording: Recording,
    schedule: BlockSchedule,
    config_digest: str = "",
    seed: int | None = None,
) -> str:
    if schedule.duration_s > recording.duration_s + 1e-9:
        raise RangeError(
            f"schedule lasts {schedule.duration_s} s but the recording only "
            f"{recording.duration_s} s"
        )
    duration = recording.duration_s
    t = np.arange(recording.n_samples) / recording.sampling_rate_hz
    series = {
        kind: recording.channel_mean(kind) for kind, _, _ in _CURVES
    }
    lo = min(float(s.min()) for s in series.values())
    hi = max(float(s.max()) for s in series.values())
    pad = 0.05 * (hi - lo or 1.0)
    lo, hi = lo - pad, hi + pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(time_s: float) -> float:
        return _MARGIN_L + plot_w * time_s / duration

    def sy(value: float) -> float:
        return _MARGIN_T + plot_h * (hi - value) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f"<!-- config_digest={config_digest} seed={'' if seed is None else seed} -->",
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
    ]

    cursor = 0.0
    for block in schedule.blocks:
        cursor += block.rest_s
        x0, x1 = sx(cursor), sx(cursor + block.task_s)
        parts.append(
            f'<rect class="block-{block.level.value}" x="{_fmt(x0)}" '
            f'y="{_MARGIN_T}" width="{_fmt(x1 - x0)}" height="{plot_h}" '
            f'fill="{_SHADE[block.level]}" fill-opacity="0.25"/>'
        )
        cursor += block.task_s

    for kind, color, name in _CURVES:
        points = " ".join(
            f"{_fmt(sx(ti))},{_fmt(sy(vi))}" for ti, vi in zip(t, series[kind])
        )
        parts.append(
            f'<polyline class="curve-{name}" fill="none" stroke="{color}" '
            f'stroke-width="1" points="{points}"/>'
        )

    axis_y = _MARGIN_T + plot_h
    parts.append(
        f'<line x1="{_MARGIN_L}" y1="{axis_y}" x2="{_MARGIN_L + plot_w}" '
        f'y2="{axis_y}" stroke="#000000" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{axis_y}" stroke="#000000" stroke-width="1"/>'
    )
    tick_step = max(duration / 10.0, 1e-9)
    n_ticks = int(round(duration / tick_step))
    for k in range(n_ticks + 1):
        ts = k * tick_step
        x = sx(ts)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{axis_y}" x2="{_fmt(x)}" '
            f'y2="{axis_y + 5}" stroke="#000000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{axis_y + 18}" font-size="11" '
            f'text-anchor="middle">{ts:g}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        value = lo + frac * (hi - lo)
        yy = sy(value)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{_fmt(yy)}" x2="{_MARGIN_L}" '
            f'y2="{_fmt(yy)}" stroke="#000000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{_fmt(yy + 4)}" font-size="11" '
            f'text-anchor="end">{value:.3g}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.2f}" y="{_HEIGHT - 8}" '
        f'font-size="12" text-anchor="middle">time (s)</text>'
    )
    for idx, (kind, color, name) in enumerate(_CURVES):
        lx = _MARGIN_L + 10 + 90 * idx
        parts.append(
            f'<line x1="{lx}" y1="{_MARGIN_T + 12}" x2="{lx + 18}" '
            f'y2="{_MARGIN_T + 12}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 22}" y="{_MARGIN_T + 16}" font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
