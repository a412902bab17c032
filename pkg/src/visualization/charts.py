"""
Reusable Plotly figure builders for dispersion experiments.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
import plotly.graph_objects as go

logger = logging.getLogger(__name__)


# Consistent color palette
COLORS = {
    "primary": "#1f77b4",
    "secondary": "#ff7f0e",
    "positive": "#2ecc71",
    "negative": "#e74c3c",
    "neutral": "#95a5a6",
    "target": "#34495e",
    "light_blue": "#aec7e8",
}

LAYOUT_DEFAULTS = dict(
    template="plotly_white",
    font=dict(family="Inter, sans-serif", size=13),
    margin=dict(l=60, r=30, t=50, b=50),
    height=450,
)


def impulse_train_chart(train: pd.DataFrame, probe: float | None = None) -> go.Figure:
    """Stem plot of arrival amplitudes against time."""
    fig = go.Figure()

    t = train["t"].to_numpy()
    amp = train["amplitude"].to_numpy()
    # stems as one trace with gaps
    xs = np.column_stack([t, t, np.full_like(t, np.nan)]).ravel()
    ys = np.column_stack([np.zeros_like(amp), amp, np.full_like(amp, np.nan)]).ravel()
    fig.add_trace(go.Scatter(
        x=xs, y=ys, mode="lines", line=dict(color=COLORS["light_blue"], width=1),
        showlegend=False, hoverinfo="skip",
    ))
    fig.add_trace(go.Scatter(
        x=t,
        y=amp,
        mode="markers",
        name="Arrivals",
        marker=dict(color=np.where(amp >= 0, COLORS["positive"], COLORS["negative"]), size=6),
    ))

    fig.add_hline(y=0, line_dash="dot", line_color="gray")

    title = "Impulse Train" if probe is None else f"Impulse Train at x = {probe:g}"
    fig.update_layout(
        title=title,
        xaxis_title="Arrival time t",
        yaxis_title="Amplitude",
        **LAYOUT_DEFAULTS,
    )

    return fig


def decay_ratio_chart(decay: pd.DataFrame, limit: float | None = None) -> go.Figure:
    """sqrt(t) ||u||_inf / ||u0||_1 over time, with the free-propagator limit."""
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=decay["t"],
        y=decay["ratio"],
        name="Measured",
        line=dict(color=COLORS["primary"], width=3),
    ))

    if limit is not None:
        fig.add_hline(
            y=limit, line_dash="dash", line_color=COLORS["target"],
            annotation_text=f"(4 pi a)^-1/2 = {limit:.5f}",
        )

    fig.update_layout(
        title="Schrodinger Decay Ratio",
        xaxis_title="t",
        yaxis_title="sqrt(t) ||u(t)||_inf / ||u0||_1",
        **LAYOUT_DEFAULTS,
    )

    return fig


def f_table_chart(table: pd.DataFrame) -> go.Figure:
    """Certified lower bounds, and finite upper bounds, against tan^r x."""
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=table["n"],
        y=table["f_lower"],
        name="Lower bound",
        mode="lines+markers",
        line=dict(color=COLORS["primary"], width=3),
    ))

    bounded = table[np.isfinite(table["upper"])]
    if not bounded.empty:
        fig.add_trace(go.Scatter(
            x=bounded["n"],
            y=bounded["upper"],
            name="Upper bound",
            mode="markers",
            marker=dict(color=COLORS["secondary"], symbol="triangle-down", size=8),
        ))

    fig.add_hline(
        y=float(table["target_tan_r_x"].iloc[0]), line_dash="dash", line_color=COLORS["target"],
        annotation_text="tan^r x",
    )

    fig.update_layout(
        title=f"f_r Lower Bounds (x = {table['x'].iloc[0]:.6g}, r = {table['r'].iloc[0]})",
        xaxis_title="Parts n",
        yaxis_title="||R(t)^r||_AP",
        **LAYOUT_DEFAULTS,
    )

    return fig


def medium_profile_chart(a_values, interfaces, margin: float = 1.0) -> go.Figure:
    """Step plot of a(x)."""
    x = list(interfaces)
    left = (x[0] if x else 0.0) - margin
    right = (x[-1] if x else 0.0) + margin
    xs = [left, *x, right]

    fig = go.Figure(go.Scatter(
        x=xs,
        y=[*a_values, a_values[-1]],
        line=dict(color=COLORS["primary"], width=3, shape="hv"),
        showlegend=False,
    ))

    fig.update_layout(
        title="Laminar Medium",
        xaxis_title="x",
        yaxis_title="a(x)",
        **{**LAYOUT_DEFAULTS, "height": 350},
    )

    return fig


def save_figure(fig: go.Figure, path: str | Path) -> Path:
    """
    Write an SVG; falls back to standalone HTML when the static export
    engine is not installed.
    """
    path = Path(path).with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.write_image(str(path))
        return path
    except (ValueError, ImportError, RuntimeError, OSError) as exc:
        fallback = path.with_suffix(".html")
        logger.warning("SVG export unavailable (%s); writing %s", exc, fallback.name)
        fig.write_html(str(fallback), include_plotlyjs="cdn")
        return fallback
