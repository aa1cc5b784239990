"""Command-line interface.

Subcommands:
    correlate  -- XPM correlation grids and cross-sections (CSV + SVG)
    sweep      -- full AIR experiment over (scheme, power, receiver)
    air        -- AIR estimation on a stored symbol file
    plot       -- re-render figures from stored CSV output
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import reports
from .air import ParticleConfig, estimate_gain_noise, air_awgn, air_particle, fit_phase_model, AuxChannelParams
from .config import ExperimentConfig, load_config, load_preset
from .harness import ase_noise_power, derive_seed, run_experiment, _ga_with_seed
from .xpm import correlation_grid, interferer_from_wdm


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="experiment config YAML")
    parser.add_argument("--preset", choices=("desk", "paper"), help="shipped preset")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="concurrent sweep cells")


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None and args.preset is not None:
        raise SystemExit("pass either --config or --preset, not both")
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = load_preset(args.preset or "desk")
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    return config


def _out_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    return args.out if args.out is not None else Path(config.output_dir)


def _cmd_correlate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    wdm = config.wdm
    interferer = interferer_from_wdm(
        wdm.n_channels, wdm.grid_spacing, wdm.symbol_rate, wdm.power
    )
    symbol_time = 1.0 / wdm.symbol_rate
    delta_f = np.linspace(-wdm.symbol_rate / 2, wdm.symbol_rate / 2, args.df_points)
    tau = np.linspace(-args.tau_symbols, args.tau_symbols, args.tau_points) * symbol_time
    grids = {}
    for scheme in config.schemes:
        link = config.link_spec(scheme)
        grid = correlation_grid(link, interferer, delta_f, tau, m=args.m)
        grids[scheme] = grid
        reports.export_grid_csv(grid, out / f"xpm_grid_{scheme}.csv")
        df_axis, tau0 = grid.cross_section_tau0()
        tau_axis, df0 = grid.cross_section_df0()
        reports.export_cross_section_csv(
            "delta_f_hz", df_axis, tau0, out / f"xpm_cross_tau0_{scheme}.csv"
        )
        reports.export_cross_section_csv(
            "tau_s", tau_axis, df0, out / f"xpm_cross_df0_{scheme}.csv"
        )
        print(f"correlate: {scheme} grid done (M={grid.quadrature_points})")
    reports.render_grid_plots(grids, out, symbol_rate=wdm.symbol_rate)
    print(f"correlate: wrote CSV and SVG output to {out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    out = _out_dir(args, config)
    records = run_experiment(
        config, out_dir=out, threads=args.threads, save_symbols=args.save_symbols
    )
    reports.export_records_csv(records, out / "records.csv")
    try:
        reports.render_air_plot(records, out / "air_vs_power.svg", ase_noise_power(config))
    except ValueError:
        pass  # nothing plottable (all cells failed)
    failures = [r for r in records if r.error is not None]
    for rec in records:
        if rec.result is not None:
            print(
                f"{rec.scheme:>4} {rec.receiver:>4} {rec.power_dbm:+5.1f} dBm: "
                f"AIR = {rec.result.air:.4f} ± {rec.result.std_error:.4f} bits"
            )
        else:
            print(f"{rec.scheme:>4} {rec.receiver:>4} {rec.power_dbm:+5.1f} dBm: FAILED ({rec.error})")
    print(f"sweep: {len(records) - len(failures)}/{len(records)} cells ok; output in {out}")
    return 0 if not failures else 1


def _cmd_air(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    x, y = reports.read_symbols_csv(args.symbols)
    n_train = min(config.n_train, x.size // 2)
    fit = estimate_gain_noise(x[:n_train], y[:n_train])
    digest = config.digest()
    seed = derive_seed(config.seed, 97)
    if args.receiver == "AWGN":
        result = air_awgn(
            x[n_train:], y[n_train:],
            AuxChannelParams(fit.h0, fit.sigma_n),
            n_train=n_train, seed=seed, config_digest=digest,
        )
    else:
        params = fit_phase_model(
            x[:n_train], y[:n_train], args.receiver, fit.h0, fit.sigma_n,
            _ga_with_seed(config, derive_seed(config.seed, 98)),
            particle=ParticleConfig(
                config.particle.n_particles, config.particle.resample_threshold,
                seed=derive_seed(config.seed, 99),
            ),
        )
        result = air_particle(
            x[n_train:], y[n_train:], params,
            ParticleConfig(
                config.particle.n_particles, config.particle.resample_threshold, seed=seed
            ),
            n_train=n_train, config_digest=digest,
        )
    label = f"{Path(args.symbols).stem}_{args.receiver}"
    reports.export_air_result_csv([(label, result)], out / f"air_{label}.csv")
    print(
        f"air: {args.receiver} on {args.symbols}: "
        f"{result.air:.4f} ± {result.std_error:.4f} bits/symbol "
        f"(h0={result.params.h0:.4f}, sigma_n={result.params.sigma_n:.4g})"
    )
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    out = args.out if args.out is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    did_something = False
    if args.records is not None:
        records = reports.read_records_csv(args.records)
        reports.render_air_plot(records, out / "air_vs_power.svg")
        print(f"plot: wrote {out / 'air_vs_power.svg'}")
        did_something = True
    if args.grid:
        grids = {Path(p).stem.replace("xpm_grid_", ""): reports.read_grid_csv(p) for p in args.grid}
        paths = reports.render_grid_plots(grids, out, symbol_rate=args.symbol_rate)
        print("plot: wrote " + ", ".join(str(p) for p in paths))
        did_something = True
    if not did_something:
        raise SystemExit("plot: pass --records and/or --grid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdmlink",
        description="WDM link simulation, XPM coherence analysis, and AIR estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlate", help="compute XPM correlation grids")
    _add_common(p)
    p.add_argument("--m", type=int, default=256, help="starting quadrature points per axis")
    p.add_argument("--df-points", type=int, default=21)
    p.add_argument("--tau-symbols", type=float, default=80.0)
    p.add_argument("--tau-points", type=int, default=161)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("sweep", help="run the AIR experiment sweep")
    _add_common(p)
    p.add_argument("--save-symbols", action="store_true",
                   help="also store per-cell transmitted/received symbols as CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("air", help="estimate AIR on a stored symbol file")
    _add_common(p)
    p.add_argument("--symbols", type=Path, required=True, help="symbols CSV (x_re,x_im,y_re,y_im)")
    p.add_argument("--receiver", choices=("AWGN", "AR1", "HOAR"), default="AWGN")
    p.set_defaults(func=_cmd_air)

    p = sub.add_parser("plot", help="render figures from stored CSV output")
    p.add_argument("--records", type=Path, help="records.csv from a sweep")
    p.add_argument("--grid", type=Path, nargs="*", default=[], help="grid CSV file(s)")
    p.add_argument("--symbol-rate", type=float, default=None,
                   help="symbol rate for tau axes in symbols")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
