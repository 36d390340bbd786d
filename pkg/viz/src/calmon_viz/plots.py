"""Render calmon CSV outputs as figures.

Four plot kinds, one per CSV schema the monitoring toolkit emits:

* ``heatmap``          power grids (epsilon, delta, test, ..., reject_rate)
* ``trajectory``       per-step e-process records (t, ..., e_merged, ...)
* ``pit-hist``         a single column of unit-interval values
* ``density-compare``  two density tables (z, density), pre/in period

Every loader validates its header against the documented schema and
fails with a diagnostic naming the expected and found columns; nothing
is silently defaulted.  Rendering is pure file-in/file-out and carries
no timestamps, so identical inputs give identical images.
"""

from __future__ import annotations

import csv
import warnings

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

HEATMAP_COLUMNS = ("epsilon", "delta", "test", "n", "alpha", "reps", "reject_rate")
TRAJECTORY_COLUMNS = ("t", "e_merged")
DENSITY_COLUMNS = ("z", "density")


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""


def _read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(f.strip() for f in row)]
    if not rows:
        raise SchemaError(f"{path}: empty CSV, nothing to plot")
    return rows


def _require_columns(path, header, required):
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing column(s) {missing}; expected {list(required)}, "
            f"found {header}"
        )


def _load_table(path, required):
    rows = _read_rows(path)
    header = [c.strip() for c in rows[0]]
    _require_columns(path, header, required)
    if len(rows) == 1:
        raise SchemaError(f"{path}: header only, no data rows")
    columns = {name: [] for name in header}
    for row in rows[1:]:
        if len(row) != len(header):
            raise SchemaError(f"{path}: row with {len(row)} fields, header has {len(header)}")
        for name, field in zip(header, row):
            columns[name].append(field.strip())
    return columns


def _floats(path, values, column):
    try:
        return np.array([float(v) for v in values])
    except ValueError as err:
        raise SchemaError(f"{path}: column {column!r} is not numeric ({err})")


# ----------------------------------------------------------------------
# heat matrices


def load_power_grid(path):
    columns = _load_table(path, HEATMAP_COLUMNS)
    eps = _floats(path, columns["epsilon"], "epsilon")
    delta = _floats(path, columns["delta"], "delta")
    rate = _floats(path, columns["reject_rate"], "reject_rate")
    if np.any(rate < 0) or np.any(rate > 1):
        bad = rate[(rate < 0) | (rate > 1)][0]
        raise SchemaError(f"{path}: reject_rate {bad} outside [0, 1]")
    tests = list(dict.fromkeys(columns["test"]))  # first-seen order
    return eps, delta, columns["test"], rate, tests


def plot_heatmap(path, output=None):
    """One panel per test; cell colour is the rejection rate on a shared
    light-to-dark scale, with the null cell (0, 0) outlined."""
    eps, delta, test_col, rate, tests = load_power_grid(path)
    eps_values = sorted(set(eps))
    delta_values = sorted(set(delta))
    fig, axes = plt.subplots(
        1, len(tests), figsize=(1.2 + 3.1 * len(tests), 3.4),
        squeeze=False, constrained_layout=True,
    )
    for k, test in enumerate(tests):
        ax = axes[0, k]
        matrix = np.full((len(delta_values), len(eps_values)), np.nan)
        for e, d, t, r in zip(eps, delta, test_col, rate):
            if t == test:
                matrix[delta_values.index(d), eps_values.index(e)] = r
        ax.imshow(
            matrix, origin="lower", cmap="Greys", vmin=0.0, vmax=1.0,
            aspect="auto", interpolation="nearest",
        )
        ax.set_xticks(range(len(eps_values)), [f"{v:g}" for v in eps_values], fontsize=7)
        ax.set_yticks(range(len(delta_values)), [f"{v:g}" for v in delta_values], fontsize=7)
        ax.set_xlabel("bias")
        if k == 0:
            ax.set_ylabel("dispersion error")
        ax.set_title(test)
        if 0.0 in eps_values and 0.0 in delta_values:
            i, j = eps_values.index(0.0), delta_values.index(0.0)
            ax.add_patch(
                plt.Rectangle(
                    (i - 0.5, j - 0.5), 1.0, 1.0,
                    fill=False, edgecolor="tab:red", linewidth=1.4,
                )
            )
    if output:
        fig.savefig(output, dpi=150)
        plt.close(fig)
    return fig


# ----------------------------------------------------------------------
# e-process trajectories


def plot_trajectory(path, output=None):
    """Merged e-process on a log scale with reference levels 1 and 100."""
    columns = _load_table(path, TRAJECTORY_COLUMNS)
    t = _floats(path, columns["t"], "t")
    e = _floats(path, columns["e_merged"], "e_merged")
    positive = e > 0
    if not np.all(positive):
        floor = e[positive].min() / 2 if positive.any() else 1e-12
        warnings.warn(
            f"{path}: {int((~positive).sum())} non-positive e-value(s) drawn at the axis floor",
            stacklevel=2,
        )
        e = np.where(positive, e, floor)
    fig, ax = plt.subplots(figsize=(6.0, 3.4), constrained_layout=True)
    ax.plot(t, e, color="black", linewidth=1.1)
    ax.set_yscale("log")
    for level in (1.0, 100.0):
        ax.axhline(level, linestyle=":", color="grey", linewidth=1.0)
    lo, hi = ax.get_ylim()
    ax.set_ylim(min(lo, 0.5), max(hi, 200.0))
    ax.set_xlabel("t")
    ax.set_ylabel("e-process")
    if output:
        fig.savefig(output, dpi=150)
        plt.close(fig)
    return fig


# ----------------------------------------------------------------------
# PIT histograms


def load_values(path):
    rows = _read_rows(path)
    start = 0
    if len(rows[0]) != 1:
        raise SchemaError(f"{path}: expected a single column, found {len(rows[0])}")
    try:
        float(rows[0][0])
    except ValueError:
        start = 1
    if len(rows) == start:
        raise SchemaError(f"{path}: no data rows")
    values = []
    for row in rows[start:]:
        if len(row) != 1:
            raise SchemaError(f"{path}: expected a single column, found {len(row)}")
        values.append(float(row[0]))
    return np.array(values)


def plot_pit_hist(path, bins: int = 20, output=None):
    """Density-scaled histogram of PIT values with the uniform reference."""
    values = load_values(path)
    if np.any(values < 0) or np.any(values > 1):
        bad = values[(values < 0) | (values > 1)][0]
        raise SchemaError(f"{path}: value {bad} outside [0, 1]")
    fig, ax = plt.subplots(figsize=(4.2, 3.2), constrained_layout=True)
    ax.hist(
        values, bins=bins, range=(0.0, 1.0), density=True,
        color="lightsteelblue", edgecolor="black", linewidth=0.5,
    )
    ax.axhline(1.0, color="black", linewidth=1.0)
    ax.set_xlabel("PIT")
    ax.set_ylabel("density")
    if output:
        fig.savefig(output, dpi=150)
        plt.close(fig)
    return fig


# ----------------------------------------------------------------------
# density comparison panels


def plot_density_compare(pre_path, in_path, output=None):
    """Overlay two fitted densities: dashed before the period, solid within."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2), constrained_layout=True)
    for path, style, label in ((pre_path, "--", "before"), (in_path, "-", "within")):
        columns = _load_table(path, DENSITY_COLUMNS)
        z = _floats(path, columns["z"], "z")
        density = _floats(path, columns["density"], "density")
        ax.plot(z, density, style, color="black", linewidth=1.1, label=label)
    ax.axhline(1.0, color="grey", linewidth=0.8)
    ax.set_xlabel("PIT")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    if output:
        fig.savefig(output, dpi=150)
        plt.close(fig)
    return fig
