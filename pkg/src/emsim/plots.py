"""Matplotlib figure rendering for the simulation and comparison paths."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SCENARIO_STYLE = {
    "open_loop": dict(color="0.45", ls="--", label="open loop"),
    "lqg": dict(color="tab:blue", ls="-", label="LQG"),
    "lqi": dict(color="tab:red", ls="-", label="LQI"),
}


def render_comparison(traces: dict, path) -> Path:
    """Overlay body travel for every finished scenario, road on a twin axis."""
    path = Path(path)
    fig, (ax_y, ax_u) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    first = next(iter(traces.values()))
    ax_road = ax_y.twinx()
    ax_road.fill_between(first.t, first.road, color="0.85", zorder=0)
    ax_road.set_ylabel("road [m]", color="0.6")
    ax_road.tick_params(axis="y", colors="0.6")
    for name, trace in traces.items():
        style = SCENARIO_STYLE.get(name, {})
        ax_y.plot(trace.t, trace.y_true, lw=1.2, **style)
        ax_u.plot(trace.t, trace.u, lw=1.0, **style)
    ax_y.set_ylabel("body travel [m]")
    ax_y.legend(loc="upper right", fontsize=9)
    ax_y.grid(alpha=0.3)
    ax_u.set_ylabel("control input")
    ax_u.set_xlabel("time [s]")
    ax_u.grid(alpha=0.3)
    fig.suptitle("Bump-response comparison")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_single(trace, path, title: str = "Simulation") -> Path:
    path = Path(path)
    fig, (ax_y, ax_u) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax_y.plot(trace.t, trace.road, color="0.6", ls=":", label="road")
    ax_y.plot(trace.t, trace.y_true, color="tab:blue", label="body travel")
    if not (trace.y == trace.y_true).all():
        ax_y.plot(trace.t, trace.y, color="tab:blue", alpha=0.3, lw=0.6,
                  label="measured")
    ax_y.set_ylabel("displacement [m]")
    ax_y.legend(fontsize=9)
    ax_y.grid(alpha=0.3)
    ax_u.plot(trace.t, trace.u, color="tab:red")
    ax_u.set_ylabel("control input")
    ax_u.set_xlabel("time [s]")
    ax_u.grid(alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
