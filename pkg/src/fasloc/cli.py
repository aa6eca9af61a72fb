"""Command-line entry point.

Subcommands:
  reproduce  run a built-in benchmark preset (fig2 SNR sweep, fig3 aperture
             sweep) or a custom sweep from a JSON config file
  estimate   single-shot distance estimation on a measurement file
  inspect    print the correlation profile and derived constants of a layout

All machine-readable output (CSV tables, JSON objects) goes to stdout or the
requested file; human prose goes to stderr. Exit codes: 0 success, 2 input
error, 3 numerical non-convergence, 4 model-validity error.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (CorrelationModel, FasLayout, ModelValidityError,
                      average_mu_squared, build_covariance, mu_k)
from .estimators import (EstimatorConfig, estimate_ls, estimate_mle,
                         estimate_single_antenna, kappa_constant)
from .experiments import (ExperimentSpec, fig2_spec, fig3_spec, run_experiment)
from .forward_model import Scene, read_measurements

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOCONV = 3
EXIT_MODEL = 4

_CONFIG_KEYS = {
    "sweep_axis", "axis_values", "trials", "base_seed", "estimators",
    "correlation_model", "layout", "scene", "snr_db", "spacing_h",
    "mle_frozen_weights", "output",
}
_LAYOUT_KEYS = {"n_ports", "aperture", "wavelength", "spacing"}
_SCENE_KEYS = {"distance", "bearing", "tx_power_dbm", "gain_tx", "gain_rx",
               "path_loss_exp"}


def _info(msg):
    print(msg, file=sys.stderr)


def _build_parser():
    parser = argparse.ArgumentParser(prog="fasloc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fasloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("reproduce", help="run a benchmark preset or config-file sweep")
    rep.add_argument("preset", nargs="?", choices=("fig2", "fig3"),
                     help="built-in preset (omit when using --config)")
    rep.add_argument("--config", type=Path, help="JSON sweep description instead of a preset")
    rep.add_argument("--seed", type=int, default=42)
    rep.add_argument("--trials", type=int, default=10000)
    rep.add_argument("--out", type=Path, default=None, help="output CSV path")
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--spacing-h", type=float, default=None,
                     help="fig3 only: run a single per-port pitch instead of both presets")
    rep.add_argument("--json", action="store_true", help="also write a .json twin of each table")

    est = sub.add_parser("estimate", help="estimate distance from a measurement file")
    est.add_argument("--input", type=Path, required=True)
    est.add_argument("--theta", type=float, required=True, help="known bearing, radians")
    est.add_argument("--n-ports", type=int, required=True)
    est.add_argument("--aperture", type=float, required=True)
    est.add_argument("--wavelength", type=float, default=0.125)
    est.add_argument("--amp-const", type=float, required=True,
                     help="link amplitude constant A of the log-distance model")
    est.add_argument("--method", choices=("mle", "ls", "single"), default="mle")
    est.add_argument("--spacing", choices=("endpoint", "index"), default="endpoint")
    est.add_argument("--path-loss-exp", type=float, default=2.0)
    est.add_argument("--bracket", type=float, nargs=2, default=(0.01, 10000.0),
                     metavar=("DMIN", "DMAX"))
    est.add_argument("--tolerance", type=float, default=1e-6)

    ins = sub.add_parser("inspect", help="print layout correlation diagnostics as JSON")
    ins.add_argument("--n-ports", type=int, required=True)
    ins.add_argument("--aperture", type=float, required=True)
    ins.add_argument("--wavelength", type=float, default=0.125)
    ins.add_argument("--model", choices=[m.value for m in CorrelationModel],
                     default=CorrelationModel.AVERAGE_MU.value)
    ins.add_argument("--spacing", choices=("endpoint", "index"), default="endpoint")
    return parser


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _spec_from_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config root must be a JSON object")
    _check_keys(cfg, _CONFIG_KEYS, "config")
    layout_cfg = cfg.get("layout", {})
    scene_cfg = cfg.get("scene", {})
    _check_keys(layout_cfg, _LAYOUT_KEYS, "config.layout")
    _check_keys(scene_cfg, _SCENE_KEYS, "config.scene")
    scene_defaults = {"distance": 10.0, "bearing": math.pi / 3.0}
    scene = Scene(**{**scene_defaults, **scene_cfg})
    model = CorrelationModel(cfg.get("correlation_model", "average-mu"))
    spec = ExperimentSpec(
        sweep_axis=cfg["sweep_axis"],
        axis_values=cfg["axis_values"],
        trials=int(cfg["trials"]),
        base_seed=int(cfg.get("base_seed", 42)),
        estimators=cfg["estimators"],
        scene=scene,
        wavelength=float(layout_cfg.get("wavelength", 0.125)),
        spacing=layout_cfg.get("spacing", "index"),
        correlation_model=model,
        n_ports=layout_cfg.get("n_ports"),
        aperture=layout_cfg.get("aperture"),
        snr_db=cfg.get("snr_db"),
        spacing_h=cfg.get("spacing_h"),
        mle_frozen_weights=bool(cfg.get("mle_frozen_weights", False)),
        output_path=cfg.get("output"),
    )
    spec.validate()
    return spec


def _write_table(table, out_path, want_json):
    table.to_csv(out_path)
    _info(f"wrote {out_path}")
    if want_json:
        jpath = Path(out_path).with_suffix(".json")
        table.to_json(jpath)
        _info(f"wrote {jpath}")


def _cmd_reproduce(args):
    if args.config is not None:
        if args.preset is not None:
            _info("error: give either a preset or --config, not both")
            return EXIT_INPUT
        spec = _spec_from_config(args.config)
        out = args.out or Path(spec.output_path or "sweep.csv")
        table = run_experiment(spec, workers=args.workers)
        _write_table(table, out, args.json)
        return EXIT_OK

    if args.preset is None:
        _info("error: a preset name or --config is required")
        return EXIT_INPUT

    if args.preset == "fig2":
        spec = fig2_spec(base_seed=args.seed, trials=args.trials)
        out = args.out or Path("fig2.csv")
        table = run_experiment(spec, workers=args.workers)
        _write_table(table, out, args.json)
        gap = (table.row(10.0, "single_antenna").nmse_db
               - table.row(10.0, "fas_mle").nmse_db)
        _info(f"single_antenna vs fas_mle NMSE gap at SNR 10 dB: {gap:.2f} dB")
        return EXIT_OK

    # fig3: one table per per-port pitch
    pitches = (args.spacing_h,) if args.spacing_h is not None else (0.05, 0.01)
    out = args.out or Path("fig3.csv")
    for h in pitches:
        spec = fig3_spec(spacing_h=h, base_seed=args.seed, trials=args.trials)
        table = run_experiment(spec, workers=args.workers)
        if len(pitches) == 1:
            path = out
        else:
            tag = f"_h{h:g}".replace(".", "p")
            path = out.with_name(out.stem + tag + out.suffix)
        _write_table(table, path, args.json)
        lo = min(r.nmse_db for r in table.rows)
        hi = max(r.nmse_db for r in table.rows)
        _info(f"fig3 pitch {h:g}: fas_ls NMSE range [{lo:.2f}, {hi:.2f}] dB over W")
    return EXIT_OK


def _cmd_estimate(args):
    layout = FasLayout(args.n_ports, args.aperture, args.wavelength, args.spacing)
    measurements = read_measurements(args.input, layout)
    cfg = EstimatorConfig(method="fas_mle", search_bracket=tuple(args.bracket),
                          tolerance=args.tolerance)
    if args.method == "mle":
        a = average_mu_squared(layout)
        result = estimate_mle(measurements, args.theta, a, cfg,
                              amp_const=args.amp_const,
                              path_loss_exp=args.path_loss_exp)
    elif args.method == "ls":
        result = estimate_ls(measurements, args.theta, cfg,
                             amp_const=args.amp_const,
                             path_loss_exp=args.path_loss_exp)
    else:
        result = estimate_single_antenna(measurements, cfg,
                                         amp_const=args.amp_const,
                                         path_loss_exp=args.path_loss_exp)
    print(json.dumps({
        "d_hat": result.d_hat,
        "converged": result.converged,
        "iterations": result.iterations,
        "objective_value": result.objective_value,
    }, sort_keys=True))
    return EXIT_OK if result.converged else EXIT_NOCONV


def _cmd_inspect(args):
    layout = FasLayout(args.n_ports, args.aperture, args.wavelength, args.spacing)
    model = CorrelationModel(args.model)
    mu2 = average_mu_squared(layout)
    kappa = kappa_constant(mu2, layout.n_ports) if mu2 < 1.0 else None
    cov = build_covariance(layout, model, 1.0)
    eigs = np.linalg.eigvalsh(cov.entries)
    if model is CorrelationModel.INDEPENDENT:
        profile = [1.0] + [0.0] * (layout.n_ports - 1)
    else:
        profile = [1.0] + [mu_k(layout, k) for k in range(1, layout.n_ports)]
    print(json.dumps({
        "n_ports": layout.n_ports,
        "aperture": layout.aperture,
        "spacing": layout.spacing,
        "model": model.value,
        "mu_squared": mu2,
        "kappa": kappa,
        "eigenvalue_min": float(eigs[0]),
        "eigenvalue_max": float(eigs[-1]),
        "regularized": cov.regularized,
        "correlation_profile": profile,
    }, sort_keys=True))
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        return _cmd_inspect(args)
    except ModelValidityError as exc:
        _info(f"model-validity error: {exc}")
        return EXIT_MODEL
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        _info(f"input error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
