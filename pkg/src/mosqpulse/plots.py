"""Gnuplot script emission for trajectory CSV files.

Writes self-contained two-panel scripts: the control channel (sterile count
staircase or Wolbachia proportion) on the left, infected humans against the
uncontrolled outbreak on the right. Scripts are plain text referencing the
CSVs by path; rendering is left to the user's gnuplot. Output is
deterministic: identical inputs give byte-identical scripts.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["emit_plot_script", "emit_plots"]

_CONTROL_LABELS = {"M_S": "sterile males", "p": "Wolbachia proportion"}


def _read_header(csv_path: Path) -> list[str]:
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if not header:
        raise ValueError(f"{csv_path}: empty file")
    return header.split(",")


def emit_plot_script(csv_path, out_path=None, baseline_csv=None) -> Path:
    """Write a gnuplot script for one trajectory CSV.

    Args:
        csv_path: trajectory CSV produced by ``Trajectory.to_csv``.
        out_path: script destination; defaults to the CSV path with ``.gp``.
        baseline_csv: optional uncontrolled trajectory for the right panel.

    Returns:
        The path of the written script.
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FileNotFoundError(csv_path)
    cols = _read_header(csv_path)
    if "I_H" not in cols:
        raise ValueError(f"{csv_path}: no I_H column in header {cols}")
    i_h_col = cols.index("I_H") + 1
    control = next((c for c in ("M_S", "p") if c in cols), None)
    out_path = Path(out_path) if out_path is not None else csv_path.with_suffix(".gp")

    lines = [
        "# generated by mosqpulse; render with: gnuplot <this file>",
        "set datafile separator ','",
        "set terminal pngcairo size 1200,450",
        f"set output '{csv_path.stem}.png'",
        "set multiplot layout 1,2",
        "set xlabel 'time (days)'",
    ]
    if control is not None:
        ctrl_col = cols.index(control) + 1
        lines += [
            f"set ylabel '{_CONTROL_LABELS[control]}'",
            f"plot '{csv_path}' using 1:{ctrl_col} with lines lc rgb 'blue' dt 2 title '{control}'",
        ]
    else:
        lines += [
            "set ylabel 'mosquitoes'",
            f"plot '{csv_path}' using 1:{cols.index('I_M') + 1} with lines title 'I_M'",
        ]
    lines += ["set ylabel 'infected humans'"]
    plot = f"plot '{csv_path}' using 1:{i_h_col} with lines lc rgb 'red' title 'I_H'"
    if baseline_csv is not None:
        baseline_csv = Path(baseline_csv)
        if not baseline_csv.exists():
            raise FileNotFoundError(baseline_csv)
        bcols = _read_header(baseline_csv)
        if "I_H" not in bcols:
            raise ValueError(f"{baseline_csv}: no I_H column")
        plot += (
            f", '{baseline_csv}' using 1:{bcols.index('I_H') + 1} "
            "with lines lc rgb 'black' dt 3 title 'I_H uncontrolled'"
        )
    lines += [plot, "unset multiplot"]
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_path


def emit_plots(csv_paths, out_dir=None, baseline_csv=None) -> list[Path]:
    """Emit one plot script per trajectory CSV; returns the script paths."""
    out = []
    for csv_path in csv_paths:
        csv_path = Path(csv_path)
        target = Path(out_dir) / (csv_path.stem + ".gp") if out_dir is not None else None
        out.append(emit_plot_script(csv_path, out_path=target, baseline_csv=baseline_csv))
    return out
