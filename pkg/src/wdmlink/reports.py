"""CSV export and SVG figure rendering for sweep records and XPM grids.

CSV schemas (UTF-8, '.' decimal, header row first):

records.csv
    scheme,receiver,power_dbm,air_bits,std_error,h0,sigma_n,phase_model,
    sigma_z,a_mix,l0,n_train,n_eval,seed,config_digest,degenerate,error
    (wall time lives only in the JSON records so reruns stay bit-identical)

grid CSV
    delta_f_hz,tau_s,re,im  -- one row per grid point, row-major in delta_f

cross-section CSV
    delta_f_hz,corr (tau = 0) or tau_s,corr (delta_f = 0), normalized

symbols CSV
    x_re,x_im,y_re,y_im
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .air import AirResult, AuxChannelParams
from .harness import RunRecord
from .xpm import CorrelationGrid

RECORD_FIELDS = [
    "scheme", "receiver", "power_dbm", "air_bits", "std_error", "h0", "sigma_n",
    "phase_model", "sigma_z", "a_mix", "l0", "n_train", "n_eval", "seed",
    "config_digest", "degenerate", "error",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)  # full precision, lossless round trip
    return "" if value is None else str(value)


def export_records_csv(records: Sequence[RunRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for rec in records:
            r = rec.result
            row = [
                rec.scheme, rec.receiver, _fmt(rec.power_dbm),
                _fmt(r.air if r else None), _fmt(r.std_error if r else None),
                _fmt(r.params.h0 if r else None), _fmt(r.params.sigma_n if r else None),
                r.params.phase_model if r else "",
                _fmt(r.params.sigma_z if r else None), _fmt(r.params.a_mix if r else None),
                _fmt(r.params.l0 if r else None),
                _fmt(r.n_train if r else None), _fmt(r.n_eval if r else None),
                _fmt(r.seed if r else None), rec.config_digest,
                str(rec.sigma_n_degenerate), _fmt(rec.error),
            ]
            writer.writerow(row)
    return path


def read_records_csv(path: str | Path) -> list[RunRecord]:
    records = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            result = None
            if row["air_bits"]:
                result = AirResult(
                    air=float(row["air_bits"]),
                    std_error=float(row["std_error"]),
                    params=AuxChannelParams(
                        h0=float(row["h0"]),
                        sigma_n=float(row["sigma_n"]),
                        phase_model=row["phase_model"],
                        sigma_z=float(row["sigma_z"]),
                        a_mix=float(row["a_mix"]),
                        l0=int(row["l0"]),
                    ),
                    n_train=int(row["n_train"]),
                    n_eval=int(row["n_eval"]),
                    seed=int(row["seed"]),
                    config_digest=row["config_digest"],
                )
            records.append(
                RunRecord(
                    scheme=row["scheme"],
                    receiver=row["receiver"],
                    power_dbm=float(row["power_dbm"]),
                    result=result,
                    wall_time_s=0.0,
                    config_digest=row["config_digest"],
                    error=row["error"] or None,
                    sigma_n_degenerate=row["degenerate"] == "True",
                )
            )
    return records


def export_grid_csv(grid: CorrelationGrid, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_f_hz", "tau_s", "re", "im"])
        for i, df in enumerate(grid.delta_f):
            for j, tau in enumerate(grid.tau):
                v = grid.values[i, j]
                writer.writerow([_fmt(float(df)), _fmt(float(tau)), _fmt(v.real), _fmt(v.imag)])
    return path


def read_grid_csv(path: str | Path) -> CorrelationGrid:
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                (float(row["delta_f_hz"]), float(row["tau_s"]),
                 float(row["re"]) + 1j * float(row["im"]))
            )
    delta_f = sorted({r[0] for r in rows})
    tau = sorted({r[1] for r in rows})
    values = np.zeros((len(delta_f), len(tau)), dtype=np.complex128)
    df_index = {v: i for i, v in enumerate(delta_f)}
    tau_index = {v: j for j, v in enumerate(tau)}
    for df, t, v in rows:
        values[df_index[df], tau_index[t]] = v
    peak = float(np.max(np.abs(values))) or 1.0
    return CorrelationGrid(
        np.array(delta_f), np.array(tau), values,
        quadrature_points=0, normalization=peak,
    )


def export_cross_section_csv(axis_name: str, axis: np.ndarray, values: np.ndarray,
                             path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([axis_name, "corr"])
        for a, v in zip(axis, values):
            writer.writerow([_fmt(float(a)), _fmt(float(v))])
    return path


def export_symbols_csv(x: np.ndarray, y: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_re", "x_im", "y_re", "y_im"])
        for xv, yv in zip(x, y):
            writer.writerow([_fmt(xv.real), _fmt(xv.imag), _fmt(yv.real), _fmt(yv.imag)])
    return path


def read_symbols_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x_re"]) + 1j * float(row["x_im"]))
            ys.append(float(row["y_re"]) + 1j * float(row["y_im"]))
    return np.array(xs), np.array(ys)


_SCHEME_COLORS = {"NDM": "tab:blue", "DM": "tab:red", "CDM": "tab:green"}
_RECEIVER_STYLES = {"AWGN": "--", "AR1": "-", "HOAR": "-."}


def render_air_plot(
    records: Sequence[RunRecord],
    path: str | Path,
    noise_power_w: Optional[float] = None,
) -> Path:
    """AIR vs launch power, one line per (scheme, receiver), with the
    matching AWGN-channel capacity as a dotted reference."""
    if not records:
        raise ValueError("no records to plot")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 5))
    series: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        if rec.result is not None:
            series.setdefault((rec.scheme, rec.receiver), []).append(rec)
    for (scheme, receiver), recs in sorted(series.items()):
        recs = sorted(recs, key=lambda r: r.power_dbm)
        powers = [r.power_dbm for r in recs]
        airs = [r.result.air for r in recs]
        errs = [r.result.std_error for r in recs]
        ax.errorbar(
            powers, airs, yerr=errs,
            color=_SCHEME_COLORS.get(scheme, "black"),
            linestyle=_RECEIVER_STYLES.get(receiver, "-"),
            marker="o", markersize=4, capsize=2,
            label=f"{scheme} / {receiver}",
        )
    if noise_power_w is not None and noise_power_w > 0:
        all_powers = sorted({r.power_dbm for r in records})
        p = np.linspace(min(all_powers), max(all_powers), 100)
        cap = np.log2(1.0 + 10 ** (p / 10.0) * 1e-3 / noise_power_w)
        ax.plot(p, cap, "k:", linewidth=1.2, label="AWGN capacity")
    ax.set_xlabel("Launch power per channel (dBm)")
    ax.set_ylabel("AIR (bits/symbol)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def render_grid_plots(
    grids: Mapping[str, CorrelationGrid],
    out_dir: str | Path,
    stem: str = "xpm",
    symbol_rate: Optional[float] = None,
) -> list[Path]:
    """One |R| contour per grid plus two cross-section overlays.

    Cross-section curves share a joint normalization (overall maximum one),
    matching the convention used for cross-scheme comparisons; contours are
    normalized per grid.
    """
    if not grids:
        raise ValueError("no grids to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    tau_scale = symbol_rate if symbol_rate else 1.0
    tau_label = "Time separation (symbols)" if symbol_rate else "Time separation (s)"

    for name, grid in grids.items():
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        mag = np.abs(grid.values).T / grid.normalization
        cs = ax.contourf(
            grid.delta_f / 1e9, grid.tau * tau_scale, mag, levels=20, cmap="viridis"
        )
        fig.colorbar(cs, ax=ax, label="|R| (normalized)")
        ax.set_xlabel(r"$\Delta f$ (GHz)")
        ax.set_ylabel(tau_label)
        ax.set_title(name)
        fig.tight_layout()
        p = out_dir / f"{stem}_contour_{name}.svg"
        fig.savefig(p, format="svg")
        plt.close(fig)
        paths.append(p)

    joint_peak = max(g.normalization for g in grids.values())
    specs = [
        ("cross_tau0", "cross_section_tau0", r"$\Delta f$ (GHz)", 1e-9),
        ("cross_df0", "cross_section_df0", tau_label, tau_scale),
    ]
    for suffix, method, xlabel, scale in specs:
        fig, ax = plt.subplots(figsize=(5.5, 4))
        for name, grid in grids.items():
            axis, values = getattr(grid, method)()
            rescale = grid.normalization / joint_peak
            ax.plot(
                axis * scale, values * rescale,
                color=_SCHEME_COLORS.get(name, None), label=name,
            )
        ax.set_xlabel(xlabel)
        ax.set_ylabel("Correlation (normalized)")
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        p = out_dir / f"{stem}_{suffix}.svg"
        fig.savefig(p, format="svg")
        plt.close(fig)
        paths.append(p)
    return paths


def export_air_result_csv(results: Sequence[tuple[str, AirResult]], path: str | Path) -> Path:
    """Standalone AIR results (label, result) as CSV rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "label", "air_bits", "std_error", "h0", "sigma_n", "phase_model",
            "sigma_z", "a_mix", "l0", "n_train", "n_eval", "seed", "config_digest",
        ])
        for label, r in results:
            writer.writerow([
                label, _fmt(r.air), _fmt(r.std_error), _fmt(r.params.h0),
                _fmt(r.params.sigma_n), r.params.phase_model, _fmt(r.params.sigma_z),
                _fmt(r.params.a_mix), _fmt(r.params.l0), _fmt(r.n_train),
                _fmt(r.n_eval), _fmt(r.seed), r.config_digest,
            ])
    return path
