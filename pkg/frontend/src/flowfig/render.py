"""Render run artifacts to raster images.

Three figure kinds:

- ``curves``: f, R, and Rc against the round index, one line per input
  metrics CSV, stacked in three panels with a shared legend.
- ``heatmap``: a similarity matrix on a diverging colormap pinned to
  [-1, 1], so orthogonal (zero) reads as neutral.
- ``spectra``: per-class singular values in descending order.

Figure size, dpi, colormap, and fonts are fixed so rendering is a pure
function of the inputs: the same files give a byte-identical PNG.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .formats import ArtifactError, read_matrix, read_rounds, read_spectra

KINDS = ("curves", "heatmap", "spectra")
DPI = 120
HEATMAP_CMAP = "RdBu_r"


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    title: str = ""
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArtifactError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ArtifactError("at least one input file is required")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ArtifactError("one label per input file required")

    def label(self, i):
        if self.labels:
            return self.labels[i]
        return Path(self.inputs[i]).stem


def _render_curves(spec):
    fig, axes = plt.subplots(3, 1, figsize=(7.0, 8.0), sharex=True)
    panels = (("f", "objective f = Rc - R"), ("R", "batch rate R"), ("Rc", "class rate Rc"))
    for i, path in enumerate(spec.inputs):
        columns = read_rounds(path)
        for ax, (name, _) in zip(axes, panels):
            ax.plot(columns["round"], columns[name], linewidth=1.2, label=spec.label(i))
    for ax, (_, title) in zip(axes, panels):
        ax.set_ylabel("nats")
        ax.set_title(title, fontsize=10)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=9)
    axes[-1].set_xlabel("round")
    return fig


def _render_heatmap(spec):
    if len(spec.inputs) != 1:
        raise ArtifactError("heatmap takes exactly one matrix file")
    values = read_matrix(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    image = ax.imshow(values, cmap=HEATMAP_CMAP, vmin=-1.0, vmax=1.0,
                      interpolation="nearest")
    fig.colorbar(image, ax=ax, label="cosine similarity")
    ax.set_xlabel("sample (class sorted)")
    ax.set_ylabel("sample (class sorted)")
    return fig


def _render_spectra(spec):
    if len(spec.inputs) != 1:
        raise ArtifactError("spectra takes exactly one spectra CSV")
    spectra = read_spectra(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, values in sorted(spectra.items()):
        ax.plot(range(1, values.size + 1), values, marker="o", markersize=3,
                linewidth=1.2, label=f"class {label}")
    ax.set_xlabel("component")
    ax.set_ylabel("singular value")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=9)
    return fig


_RENDERERS = {
    "curves": _render_curves,
    "heatmap": _render_heatmap,
    "spectra": _render_spectra,
}


def render(spec):
    """Write the figure described by ``spec``; returns the output path."""
    fig = _RENDERERS[spec.kind](spec)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    # Strip the software tag so two renders of the same inputs are
    # byte-identical regardless of the matplotlib build string.
    fig.savefig(spec.output, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return spec.output
