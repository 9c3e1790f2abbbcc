"""Report emission: delimited outputs plus static diagnostic figures.

Every report path writes deterministic CSV/JSON (shortest round-trip float
formatting, sorted JSON keys) and renders the matching matplotlib figure to a
PNG file alongside.  PNG metadata is stripped so repeated runs are
byte-identical.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import write_json, write_matrix_csv  # noqa: E402
from .risk import FittedTailModel  # noqa: E402

_PNG_META = {"Software": None}  # drop the version string for reproducible bytes


class ReportWriter:
    """Writes files into one directory and can undo a partially written run."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        """Remove everything written so far (used when a stage fails)."""
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass
        self.written.clear()

    def relative_names(self) -> list[str]:
        return sorted(p.name for p in self.written)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def write_table(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Fit reports
# ---------------------------------------------------------------------------

def chi_cloud(fitted: FittedTailModel, chi_emp: np.ndarray) -> np.ndarray:
    """(pairs, 2) array of model-implied vs empirical tail correlations."""
    from .risk import model_chi
    chi_mod = model_chi(fitted.loading, fitted.aggregated, fitted.k_prime, fitted.n_factors)
    iu = np.triu_indices(chi_emp.shape[0], k=1)
    return np.column_stack([chi_mod[iu], chi_emp[iu]])


def plot_chi_cloud(cloud: np.ndarray, r2: float):
    fig, ax = plt.subplots(figsize=(6, 6))
    x, y = cloud[:, 0], cloud[:, 1]
    if cloud.shape[0] > 2000:
        hb = ax.hexbin(x, y, gridsize=40, mincnt=1, cmap="viridis")
        fig.colorbar(hb, ax=ax, label="pairs")
    else:
        ax.scatter(x, y, s=12, alpha=0.6)
    lims = [0.0, max(1e-6, float(max(x.max(), y.max())))]
    ax.plot(lims, lims, "--", color="crimson", linewidth=1.5)
    ax.set_xlabel("model-implied tail correlation")
    ax.set_ylabel("empirical tail correlation")
    ax.set_title(f"$R^2$ = {r2:.4f}")
    ax.grid(alpha=0.3)
    return fig


def write_fit_report(writer: ReportWriter, fitted: FittedTailModel,
                     chi_emp: np.ndarray, tpdm_matrix: np.ndarray | None = None,
                     figures: bool = True) -> None:
    """Persist everything a later risk run needs, plus diagnostics."""
    write_table(writer.path("search_table.csv"),
                ["kappa", "lambda", "projection", "K_hat", "r2"],
                [(c.kappa, c.lam, c.projection, c.n_factors, c.r2)
                 for c in fitted.search_table])
    write_matrix_csv(writer.path("loading.csv"), fitted.loading.matrix)
    write_json(writer.path("loading.json"), {
        "K_hat": fitted.n_factors,
        "k": fitted.k,
        "k_prime": fitted.k_prime,
        "norm": fitted.norm.label(),
        "config": {"kappa": fitted.config.kappa, "lambda": fitted.config.lam,
                   "projection": fitted.config.projection},
        "r2": fitted.r2,
        "adequate": fitted.adequate,
        "support_sizes": [int(v) for v in fitted.loading.support_sizes],
        "row_flags": {str(j): list(f) for j, f in sorted(fitted.loading.row_flags.items())},
    })
    writer.path("purevar.json").write_text(fitted.purevar.to_json() + "\n")
    psi_rows = np.column_stack([fitted.psi.atoms, fitted.psi.raw_weights])
    write_matrix_csv(writer.path("psi.csv"), psi_rows)
    write_table(writer.path("margins.csv"),
                ["index", "u", "xi", "sigma", "k", "converged"],
                [(j, f.threshold, f.xi, f.sigma, f.k, f.converged)
                 for j, f in enumerate(fitted.margins)])
    if tpdm_matrix is not None:
        write_matrix_csv(writer.path("tpdm.csv"), tpdm_matrix)
    cloud = chi_cloud(fitted, chi_emp)
    write_table(writer.path("chi_cloud.csv"), ["chi_model", "chi_empirical"], cloud)
    if figures:
        save_figure(plot_chi_cloud(cloud, fitted.r2), writer.path("chi_fit.png"))


# ---------------------------------------------------------------------------
# Risk-curve reports
# ---------------------------------------------------------------------------

def plot_risk_curve(rows: list[dict], sweep: str):
    fig, ax = plt.subplots(figsize=(7, 5))
    grid = [r["value"] for r in rows]

    def series(key):
        return [r.get(key) for r in rows]

    for key, lo_key, hi_key, color, label in [
        ("p_model", "model_lower", "model_upper", "tab:blue", "model-based"),
        ("p_empirical", "emp_lower", "emp_upper", "tab:orange", "empirical"),
    ]:
        vals = series(key)
        if all(v is None for v in vals):
            continue
        ax.plot(grid, vals, "-o", color=color, markersize=4, label=label)
        los, his = series(lo_key), series(hi_key)
        if any(v is not None for v in los):
            ax.fill_between(grid,
                            [lo if lo is not None else v for lo, v in zip(los, vals)],
                            [hi if hi is not None else v for hi, v in zip(his, vals)],
                            color=color, alpha=0.2)
    positive = [v for r in rows for v in (r.get("p_model"), r.get("p_empirical"))
                if v is not None and v > 0]
    if positive:
        ax.set_yscale("log")
    ax.set_xlabel(sweep)
    ax.set_ylabel("estimated probability")
    ax.grid(alpha=0.3)
    ax.legend()
    return fig


def write_risk_report(writer: ReportWriter, rows: list[dict], sweep: str,
                      figures: bool = True) -> None:
    header = ["sweep", "value", "p_model", "model_lower", "model_upper",
              "p_empirical", "emp_lower", "emp_upper"]
    write_table(writer.path("risk_curve.csv"), header,
                [(sweep, r["value"], r.get("p_model"), r.get("model_lower"),
                  r.get("model_upper"), r.get("p_empirical"), r.get("emp_lower"),
                  r.get("emp_upper")) for r in rows])
    if figures:
        save_figure(plot_risk_curve(rows, sweep), writer.path("risk_curve.png"))
