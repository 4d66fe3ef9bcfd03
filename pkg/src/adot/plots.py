"""Plot-data emission and figure rendering for solved transports.

Every visual artifact is backed by a CSV so external tooling can re-plot
it; matplotlib renderings of the same data are written alongside.
"""

from __future__ import annotations

import os

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .features import eval_discriminator
from .io import composed_from_doc, discriminator_from_doc
from .metrics import evaluation_grid
from .transport import apply_map

__all__ = ["emit_plot_data"]

INTERPOLANT_TIMES = [k / 5 for k in range(1, 6)]


def _write_table(path, header: list, columns: list) -> None:
    rows = np.column_stack(columns)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _histogram_data(source, transported, target, bins):
    pooled = np.concatenate([source.ravel(), transported.ravel(), target.ravel()])
    edges = np.linspace(pooled.min(), pooled.max(), bins + 1)
    hs, _ = np.histogram(source.ravel(), bins=edges)
    ht, _ = np.histogram(transported.ravel(), bins=edges)
    hy, _ = np.histogram(target.ravel(), bins=edges)
    return edges, hs, ht, hy


def emit_plot_data(result: dict, source: np.ndarray, target: np.ndarray,
                   outdir: str, bins: int = 40, grid_points: int = 400,
                   render: bool = True) -> list:
    """Write plot-ready CSVs (and figures) for a solve result.

    1D: histogram bins for source/transported/target, the final test
    function on the evaluation grid (raw and rescaled to [-1, 1]), and
    the displacement T(x) - x.  2D: scatter exports plus displacement
    interpolants at times k/5.  Returns the list of files written.
    """
    os.makedirs(outdir, exist_ok=True)
    composed = composed_from_doc(result["composed"])
    disc = discriminator_from_doc(result["final_discriminator"])
    transported = apply_map(composed, source)
    d = source.shape[1]
    written = []

    def out(name):
        path = os.path.join(outdir, name)
        written.append(path)
        return path

    if d == 1:
        edges, hs, ht, hy = _histogram_data(source, transported, target, bins)
        _write_table(out("histograms.csv"),
                     ["bin_left", "bin_right", "source", "transported", "target"],
                     [edges[:-1], edges[1:], hs, ht, hy])

        grid = evaluation_grid(np.vstack([source, target]), points=grid_points)
        g_raw = eval_discriminator(disc, grid)
        gmax = float(np.max(np.abs(g_raw)))
        g_rescaled = g_raw / gmax if gmax >= 1e-12 else np.zeros_like(g_raw)
        _write_table(out("discriminator_curve.csv"),
                     ["x", "g", "g_rescaled"], [grid[:, 0], g_raw, g_rescaled])

        disp = apply_map(composed, grid)[:, 0] - grid[:, 0]
        _write_table(out("displacement_curve.csv"),
                     ["x", "displacement"], [grid[:, 0], disp])

        if render:
            fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
            centers = 0.5 * (edges[:-1] + edges[1:])
            width = edges[1] - edges[0]
            ax1.bar(centers, hs, width=width, alpha=0.4, color="tab:red", label="source")
            ax1.bar(centers, ht, width=width, alpha=0.4, color="tab:orange",
                    label="transported")
            ax1.bar(centers, hy, width=width, alpha=0.4, color="tab:blue", label="target")
            ax1.plot(grid[:, 0], g_rescaled * max(hs.max(), hy.max(), 1), "k-",
                     label="test fn (rescaled)")
            ax1.legend(loc="best", fontsize=8)
            ax1.set_ylabel("count")
            ax2.plot(grid[:, 0], disp, "g-")
            ax2.set_xlabel("x")
            ax2.set_ylabel("displacement")
            fig.tight_layout()
            fig.savefig(out("overview.png"), dpi=100)
            plt.close(fig)

    elif d == 2:
        for name, pts in [("scatter_source.csv", source),
                          ("scatter_transported.csv", transported),
                          ("scatter_target.csv", target)]:
            _write_table(out(name), ["x1", "x2"], [pts[:, 0], pts[:, 1]])
        for k, t in enumerate(INTERPOLANT_TIMES, start=1):
            interp = (1.0 - t) * source + t * transported
            _write_table(out(f"interpolant_{k}of5.csv"),
                         ["x1", "x2"], [interp[:, 0], interp[:, 1]])
        if render:
            fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 5), sharex=True,
                                           sharey=True)
            ax1.scatter(source[:, 0], source[:, 1], s=6, c="tab:red", label="source")
            ax1.scatter(target[:, 0], target[:, 1], s=6, c="tab:blue", label="target")
            ax1.set_title("start")
            ax1.legend(fontsize=8)
            ax2.scatter(transported[:, 0], transported[:, 1], s=6, c="tab:red",
                        label="transported")
            ax2.scatter(target[:, 0], target[:, 1], s=6, c="tab:blue", label="target")
            ax2.set_title("final")
            fig.tight_layout()
            fig.savefig(out("overview.png"), dpi=100)
            plt.close(fig)

            fig, axes = plt.subplots(2, 3, figsize=(12, 8), sharex=True, sharey=True)
            axes = axes.ravel()
            axes[0].scatter(source[:, 0], source[:, 1], s=5, c="tab:red")
            axes[0].set_title("t = 0")
            for k, t in enumerate(INTERPOLANT_TIMES, start=1):
                interp = (1.0 - t) * source + t * transported
                axes[k].scatter(interp[:, 0], interp[:, 1], s=5, c="tab:purple")
                axes[k].set_title(f"t = {k}/5")
            fig.tight_layout()
            fig.savefig(out("interpolants.png"), dpi=100)
            plt.close(fig)
    else:
        raise ValueError("plot emission supports 1D and 2D data")
    return written
