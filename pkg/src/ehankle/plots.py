"""Figure rendering to files (SVG or PNG by suffix) with reproducible bytes."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "ehankle", "svg.fonttype": "path", "font.size": 9}
_METADATA = {"svg": {"Date": None, "Creator": None}, "png": {"Software": None}}


def _save(fig, path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    fig.savefig(path, format=fmt, metadata=_METADATA.get(fmt))
    plt.close(fig)
    return path


def line_plot(path, x, series: dict, xlabel: str, ylabel: str, title: str | None = None) -> Path:
    """One axis, one line per entry of ``series`` (label -> y values)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 3.6))
        for label, y in series.items():
            ax.plot(x, y, label=label, linewidth=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, linewidth=0.4, alpha=0.5)
        if len(series) > 1:
            ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def displacement_plot(series, path) -> Path:
    """Simulated piston position against the commanded position, in mm."""
    curves = {"simulated": series.y * 1e3}
    if series.y_cmd is not None:
        curves["commanded"] = series.y_cmd * 1e3
    return line_plot(path, series.t, curves, "time [s]", "piston position [mm]",
                     "Cylinder displacement over one gait cycle")


def compliance_plot(field, path) -> Path:
    return line_plot(path, range(len(field.compliance)), {"compliance": field.compliance},
                     "iteration", "compliance [J]")
