"""Writes experiment results as CSV/JSONL plus a gnuplot script and optional PNG figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .firesim import BEHAVIOR_TITLES, BEHAVIORS
from .harness import ExperimentConfig, ExperimentResult, per_iteration_series, windowed_series


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def accuracy_columns(result: ExperimentResult) -> dict[str, list[float | None]]:
    cfg = result.config
    cols: dict[str, list[float | None]] = {}
    for node_id in result.node_ids:
        cols[node_id] = per_iteration_series(result.trials, node_id)
        cols[f"{node_id}_smoothed"] = windowed_series(result.trials, node_id, cfg.window, True)
        if result.baseline_trials:
            cols[f"{node_id}_baseline"] = per_iteration_series(result.baseline_trials, node_id)
            cols[f"{node_id}_baseline_smoothed"] = windowed_series(
                result.baseline_trials, node_id, cfg.window, True)
    return cols


def write_accuracy_csv(result: ExperimentResult, path: Path) -> None:
    cols = accuracy_columns(result)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", *cols])
        for i in range(result.config.iterations):
            w.writerow([i + 1, *(_fmt(c[i]) for c in cols.values())])


def write_behaviors_csv(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["behavior", "accuracy"])
        for behavior, acc in zip(BEHAVIORS, result.behavior_accuracy):
            w.writerow([BEHAVIOR_TITLES[behavior], _fmt(acc)])


def write_trace(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for trial in result.trials:
            for rec in trial.records:
                row = {"trial": trial.trial_index, **rec.to_json()}
                fh.write(json.dumps(row, sort_keys=True) + "\n")


PLOT_TEMPLATE = """\
# gnuplot script; run from this directory: gnuplot plot.gp
set datafile separator ","
set datafile missing ""
set key autotitle columnhead bottom right
set terminal pngcairo size 900,540
set xlabel "iteration"
set ylabel "accuracy"
set yrange [0:1.05]
set grid
{plots}
"""


def plot_script(result: ExperimentResult) -> str:
    names = ["iteration", *accuracy_columns(result)]
    blocks = []
    for node_id in result.node_ids:
        series = [f"'accuracy.csv' using 1:{names.index(node_id + '_smoothed') + 1} "
                  f"with lines lw 2 title '{node_id}'"]
        if result.baseline_trials:
            col = names.index(node_id + "_baseline_smoothed") + 1
            series.append(f"'accuracy.csv' using 1:{col} with lines dt 2 title 'random baseline'")
        blocks.append(f"set output 'accuracy_{node_id}.png'\n"
                      f"set title 'Accuracy of {node_id} (window {result.config.window})'\n"
                      f"plot {', '.join(series)}")
    return PLOT_TEMPLATE.format(plots="\n".join(blocks))


def render_figures(result: ExperimentResult, out: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = accuracy_columns(result)
    x = list(range(1, result.config.iterations + 1))
    paths = []
    for node_id in result.node_ids:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(x, [float("nan") if v is None else v for v in cols[node_id + "_smoothed"]],
                lw=2, label=node_id)
        if result.baseline_trials:
            base = cols[node_id + "_baseline_smoothed"]
            ax.plot(x, [float("nan") if v is None else v for v in base], "--",
                    label="random baseline")
        ax.set_xlabel("iteration")
        ax.set_ylabel(f"accuracy (window {result.config.window})")
        ax.set_ylim(0, 1.05)
        ax.grid(alpha=0.3)
        ax.legend(loc="lower right")
        fig.tight_layout()
        path = out / f"accuracy_{node_id}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def emit_outputs(result: ExperimentResult, config: ExperimentConfig | None = None) -> list[Path]:
    config = config or result.config
    if not config.out_dir:
        raise ValueError("no output directory configured")
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = [out / "accuracy.csv", out / "behaviors.csv", out / "trace.jsonl", out / "plot.gp",
             out / "summary.json"]
    write_accuracy_csv(result, paths[0])
    write_behaviors_csv(result, paths[1])
    write_trace(result, paths[2])
    paths[3].write_text(plot_script(result), encoding="utf-8")
    paths[4].write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    if config.figures:
        paths += render_figures(result, out)
    return paths
