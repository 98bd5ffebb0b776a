"""Figures for experiment tables (optional; CSV stays the primary output)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 150,
}

LABELS = {
    "bell_union": "Bell pairs",
    "merging": "merging",
    "clustering": "clustering",
    "combined": "clustering + merging",
    "cluster_state": "cluster state",
}
MARKERS = {"bell_union": "o", "merging": "s", "clustering": "^", "combined": "D", "cluster_state": "x"}


def _series(rows: Sequence[dict], key: str) -> dict[str, tuple[list, list, list]]:
    out: dict[str, tuple[list, list, list]] = {}
    err = "std_per_node" if key == "mean_per_node" else "std"
    for r in sorted(rows, key=lambda r: (r["strategy"], r["n"])):
        xs, ys, es = out.setdefault(r["strategy"], ([], [], []))
        xs.append(r["n"])
        ys.append(r[key])
        es.append(r.get(err, 0.0))
    return out


def plot_rows(rows: Sequence[dict], path: str | Path, title: str = "") -> list[Path]:
    """Total and per-node storage against n, one PNG each.

    ``rows`` are records as returned by ``experiments.read_csv``.
    Returns the written paths (``<stem>_total.png`` and ``<stem>_per_node.png``).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    written = []
    with plt.rc_context(STYLE):
        for key, ylabel, suffix in (
            ("mean_total", "qubits stored", "total"),
            ("mean_per_node", "qubits per node", "per_node"),
        ):
            fig, ax = plt.subplots(figsize=(4.2, 3.0))
            for s, (xs, ys, es) in _series(rows, key).items():
                ax.errorbar(xs, ys, yerr=es, marker=MARKERS.get(s, "."), ms=3.5, lw=1.0, capsize=2, label=LABELS.get(s, s))
            ax.set_xlabel("network nodes n")
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            ax.legend(frameon=False)
            fig.tight_layout()
            out = path.with_name(f"{path.stem}_{suffix}.png")
            fig.savefig(out)
            plt.close(fig)
            written.append(out)
    return written


def gnuplot_script(csv_path: str | Path, strategies: Sequence[str], per_node: bool = True) -> str:
    """A gnuplot script drawing the CSV's per-strategy curves."""
    col = 4 if per_node else 3
    err = 6 if per_node else 5
    lines = [
        "set datafile separator ','",
        "set key top left",
        "set xlabel 'network nodes n'",
        f"set ylabel '{'qubits per node' if per_node else 'qubits stored'}'",
    ]
    plots = [
        f"'{csv_path}' using 1:(strcol(2) eq '{s}' ? ${col} : 1/0):{err} with yerrorlines title '{LABELS.get(s, s)}'"
        for s in strategies
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


__all__ = ["plot_rows", "gnuplot_script", "STYLE"]
