"""Rendering a panel specification to a static image file."""

from __future__ import annotations

from dataclasses import dataclass

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .data import DataError, load_run
from .panels import PANELS


@dataclass(frozen=True)
class FigureSpec:
    """One panel, the manifests feeding it, and the output image path."""

    panel: str
    manifests: tuple[str, ...]
    out: str
    logx: bool | None = None
    logy: bool | None = None
    dpi: int = 150

    def __post_init__(self):
        if self.panel not in PANELS:
            raise DataError(
                f"unknown panel {self.panel!r}; available: {', '.join(sorted(PANELS))}"
            )
        if not self.manifests:
            raise DataError("at least one manifest path is required")


def render(spec: FigureSpec) -> str:
    """Render the panel; raises before any file is written if inputs are bad."""
    panel = PANELS[spec.panel]
    runs = [load_run(path) for path in spec.manifests]
    data = panel.prepare(runs)

    fig = Figure(figsize=(4.8, 3.4), constrained_layout=True)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    panel.draw(data, ax)
    if spec.logx is not None:
        ax.set_xscale("log" if spec.logx else "linear")
    if spec.logy is not None:
        ax.set_yscale("log" if spec.logy else "linear")
    fig.savefig(spec.out, dpi=spec.dpi)
    return spec.out
