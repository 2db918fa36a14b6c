"""Figures for the report commands.

Everything renders off-screen and writes straight to files; nothing here is
needed by the numerical code.
"""

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "figure.dpi": 110,
}


@contextmanager
def figure(path, nrows=1, ncols=1, width=6.4, height=None, **kw):
    """Yield ``(fig, axes)`` and save to ``path`` on exit."""
    height = height or width * 0.62 * nrows / max(ncols, 1) ** 0.5
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(width, height), squeeze=False, **kw)
        try:
            yield fig, axes
            fig.tight_layout()
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path)
        finally:
            plt.close(fig)


def radii_histograms(profiles, path, bins=20):
    """One histogram panel per alpha, stacked vertically."""
    with figure(path, nrows=len(profiles), height=1.8 * len(profiles) + 0.4) as (fig, axes):
        for ax, prof in zip(axes[:, 0], profiles):
            ax.hist(prof.radii, bins=bins, color="0.45", edgecolor="white")
            ax.set_ylabel("count")
            ax.set_title(f"alpha = {prof.alpha:g}", loc="left")
        axes[-1, 0].set_xlabel("radius")
    return path


def _abscissa(ch):
    if ch.grid is not None:
        return ch.grid.knots, "t"
    return np.arange(ch.size), "coordinate"


def trim_summary(sample, fit, complement, path, n_pcs=2, spread=4.0):
    """Means per channel (top row) and the effect of each component on the mean.

    Component rows show ``mean +/- spread * sqrt(lambda_k) * phi_k``.
    """
    chans = sample.channels
    k = min(n_pcs, fit.n_components)
    with figure(path, nrows=1 + k, ncols=len(chans), width=3.4 * len(chans) + 0.6,
                height=2.1 * (1 + k) + 0.3) as (fig, axes):
        full = sample.values.mean(axis=0)
        for c, ch in enumerate(chans):
            t, xlabel = _abscissa(ch)
            sl = slice(ch.start, ch.stop)
            ax = axes[0, c]
            ax.plot(t, full[sl], color="0.6", lw=1, label="sample mean")
            ax.plot(t, fit.mean[sl], color="k", lw=1.6, label="trimmed mean")
            if complement is not None:
                ax.plot(t, complement[sl], color="C3", lw=1.2, ls="--", label="trimmed-away mean")
            ax.set_title(ch.name, loc="left")
            for j in range(k):
                ax = axes[1 + j, c]
                bump = spread * np.sqrt(fit.eigenvalues[j]) * fit.pc_values[j, sl]
                ax.plot(t, fit.mean[sl], color="k", lw=1.4)
                ax.plot(t, fit.mean[sl] + bump, color="k", ls="--", lw=1)
                ax.plot(t, fit.mean[sl] - bump, color="k", ls=":", lw=1)
                ax.set_title(f"component {j + 1}", loc="left")
            axes[-1, c].set_xlabel(xlabel)
        axes[0, 0].legend(fontsize=7)
    return path


def report_curves(report, path):
    """RMSE against contamination proportion, one panel per model."""
    models = sorted({r.model for r in report.rows})
    with figure(path, ncols=len(models), width=4.2 * len(models), height=3.4, sharey=True) as (fig, axes):
        for ax, m in zip(axes[0], models):
            names = []
            for r in report.rows:
                if r.model == m and r.estimator not in names:
                    names.append(r.estimator)
            for name in names:
                rows = sorted((r for r in report.rows if r.model == m and r.estimator == name),
                              key=lambda r: r.epsilon)
                ax.plot([r.epsilon for r in rows], [r.rmse for r in rows], marker="o", ms=3, label=name)
            ax.set_title(f"Model {m}", loc="left")
            ax.set_xlabel("contamination proportion")
        axes[0, 0].set_ylabel("root mean squared error")
        axes[0, -1].legend(fontsize=6, loc="upper left")
    return path
