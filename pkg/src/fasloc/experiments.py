"""Declarative Monte Carlo experiment runner.

A sweep is described by an ExperimentSpec (axis, fixed parameters, trial
count, seed) and produces a ResultTable of NMSE-in-dB rows per estimator,
with a leave-one-out jackknife standard error. Every trial derives its own
counter-based RNG stream from (base_seed, axis_index, trial), so results are
byte-identical regardless of worker count or scheduling.

Paired-draw discipline: at a given (axis value, trial) all estimators consume
measurement vectors built from the same block of underlying standard normals.
The correlated-port and independent-port vectors share one seed (see
channel.sample_fading), and both fluid-antenna estimators receive literally
the same snapshot object. A digest of the trial's simulated vectors is
recorded so reproducibility is checkable from the output alone.

Baselines in a trial:

* ``fas_mle`` / ``fas_ls``   one N-port sweep with correlated fading,
* ``multipoint_ls``          the same draw pushed through an identity
                             covariance (conventional multipoint array),
* ``single_antenna``         one antenna at the origin given an N-reading
                             budget. The readings of one measurement group
                             share a single fading realization: the channel
                             is quasi-static over the group, which is the
                             same assumption that lets the port sweep be
                             treated as simultaneous. Repeating a reading at
                             one position therefore does not average fading
                             down, and that is precisely the handicap the
                             port sweep escapes.
"""

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .channel import (CorrelationModel, FasLayout, average_mu_squared,
                      build_covariance)
from .estimators import (EstimatorConfig, METHODS, estimate_ls, estimate_mle,
                         estimate_single_antenna)
from .forward_model import (SNR_CONVENTION, Scene, simulate_measurements,
                            snr_to_sigma2)

NMSE_CONVENTION = ("nmse_db = 10*log10(mean(((d_hat - d_true)/d_true)^2)); "
                   "stderr: leave-one-out jackknife in dB")
NMSE_FLOOR_DB = -200.0

SWEEP_AXES = ("snr_db", "aperture_w", "port_count_n")

SPACING_NOTE = {
    "endpoint": ("spacing=endpoint: N ports across W*lambda; correlation step "
                 "W/(N-1), port offsets i*W*lambda/N"),
    "index": ("spacing=index: adjacent ports W*lambda apart; correlation step W, "
              "port offsets i*W*lambda"),
}

_CSV_COLUMNS = ("axis_value", "estimator", "nmse_db", "stderr_db", "trials",
                "excluded", "realized_n", "flagged", "draw_digest")

# Sweep values of the two reproduction presets.
FIG2_SNR_VALUES = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
FIG3_W_VALUES = tuple(round(0.10 + 0.05 * i, 2) for i in range(19))
PRESET_WAVELENGTH = 0.125
PRESET_SPACING = "index"


def default_scene():
    """Declared default scene of the reproduction presets."""
    return Scene(distance=10.0, bearing=math.pi / 3.0, tx_power_dbm=0.0,
                 gain_tx=1.0, gain_rx=1.0, path_loss_exp=2.0)


@dataclass
class ExperimentSpec:
    """Declarative sweep description.

    ``sweep_axis`` picks what ``axis_values`` mean: SNR in dB, normalized
    aperture W (with ``spacing_h`` fixing the per-port pitch, so the realized
    port count is round(W / spacing_h)), or the port count N. Parameters not
    owned by the axis are fixed fields.
    """

    sweep_axis: str
    axis_values: Sequence[float]
    trials: int
    base_seed: int
    estimators: Sequence[str]
    scene: Scene
    wavelength: float = PRESET_WAVELENGTH
    spacing: str = PRESET_SPACING
    correlation_model: CorrelationModel = CorrelationModel.AVERAGE_MU
    n_ports: Optional[int] = None
    aperture: Optional[float] = None
    snr_db: Optional[float] = None
    spacing_h: Optional[float] = None
    mle_frozen_weights: bool = False
    output_path: Optional[str] = None

    def validate(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        vals = list(self.axis_values)
        if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("axis_values must be non-empty and strictly increasing")
        if self.trials < 100:
            raise ValueError(f"trials must be >= 100, got {self.trials}")
        if not self.estimators:
            raise ValueError("estimator list is empty")
        for est in self.estimators:
            if est not in METHODS:
                raise ValueError(f"unknown estimator {est!r}; expected one of {METHODS}")
        if len(set(self.estimators)) != len(list(self.estimators)):
            raise ValueError("estimator list contains duplicates")
        if self.sweep_axis == "snr_db":
            if self.n_ports is None or self.aperture is None:
                raise ValueError("an SNR sweep fixes n_ports and aperture")
            if self.snr_db is not None:
                raise ValueError("snr_db cannot be both fixed and swept")
        elif self.sweep_axis == "port_count_n":
            if self.aperture is None or self.snr_db is None:
                raise ValueError("a port-count sweep fixes aperture and snr_db")
            if self.n_ports is not None:
                raise ValueError("n_ports cannot be both fixed and swept")
            if any(v != int(v) or v < 1 for v in vals):
                raise ValueError("port counts must be positive integers")
        else:  # aperture_w
            if self.spacing_h is None or self.snr_db is None:
                raise ValueError("an aperture sweep fixes spacing_h and snr_db")
            if self.aperture is not None:
                raise ValueError("aperture cannot be both fixed and swept")
            if not (self.spacing_h > 0.0):
                raise ValueError("spacing_h must be positive")

    def to_dict(self):
        return {
            "sweep_axis": self.sweep_axis,
            "axis_values": [float(v) for v in self.axis_values],
            "trials": int(self.trials),
            "base_seed": int(self.base_seed),
            "estimators": list(self.estimators),
            "scene": {
                "distance": self.scene.distance,
                "bearing": self.scene.bearing,
                "tx_power_dbm": self.scene.tx_power_dbm,
                "gain_tx": self.scene.gain_tx,
                "gain_rx": self.scene.gain_rx,
                "path_loss_exp": self.scene.path_loss_exp,
            },
            "wavelength": self.wavelength,
            "spacing": self.spacing,
            "correlation_model": self.correlation_model.value,
            "n_ports": self.n_ports,
            "aperture": self.aperture,
            "snr_db": self.snr_db,
            "spacing_h": self.spacing_h,
            "mle_frozen_weights": self.mle_frozen_weights,
        }

    def sha256(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class ResultRow:
    axis_value: float
    estimator: str
    nmse_db: float
    stderr_db: float
    trials: int
    excluded: int
    realized_n: int
    flagged: bool
    draw_digest: str


@dataclass
class ResultTable:
    sweep_axis: str
    rows: List[ResultRow]
    meta: dict

    def row(self, axis_value, estimator):
        for r in self.rows:
            if r.estimator == estimator and math.isclose(r.axis_value, axis_value,
                                                         rel_tol=0.0, abs_tol=1e-12):
                return r
        raise KeyError(f"no row for ({axis_value}, {estimator})")

    def header_lines(self):
        lines = ["# fasloc result table"]
        for key in ("version", "spec_sha256", "base_seed", "sweep_axis",
                    "snr_convention", "nmse_convention", "spacing_convention",
                    "correlation_model", "mle_frozen_weights"):
            lines.append(f"# {key}: {self.meta[key]}")
        return lines

    def to_csv_string(self):
        out = self.header_lines()
        out.append(",".join(_CSV_COLUMNS))
        for r in self.rows:
            out.append(",".join([
                f"{r.axis_value:.9g}",
                r.estimator,
                f"{r.nmse_db:.9g}",
                f"{r.stderr_db:.9g}",
                str(r.trials),
                str(r.excluded),
                str(r.realized_n),
                "1" if r.flagged else "0",
                r.draw_digest,
            ]))
        return "\n".join(out) + "\n"

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_string())

    def to_json_string(self):
        payload = {
            "meta": self.meta,
            "rows": [
                {
                    "axis_value": r.axis_value,
                    "estimator": r.estimator,
                    "nmse_db": r.nmse_db,
                    "stderr_db": r.stderr_db,
                    "trials": r.trials,
                    "excluded": r.excluded,
                    "realized_n": r.realized_n,
                    "flagged": r.flagged,
                    "draw_digest": r.draw_digest,
                }
                for r in self.rows
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json_string())


def nmse_db(estimates, d_true):
    """Normalized MSE of distance estimates, in dB, with jackknife stderr.

    Accepts Estimate objects or raw d_hat floats. A zero error sum is floored
    at NMSE_FLOOR_DB instead of -inf.
    """
    if d_true <= 0.0:
        raise ValueError("d_true must be positive")
    d_hats = np.array([getattr(e, "d_hat", e) for e in estimates], dtype=float)
    if d_hats.size == 0:
        raise ValueError("empty estimate list")
    errs = ((d_hats - d_true) / d_true) ** 2
    mean_err = float(errs.mean())
    floor_lin = 10.0 ** (NMSE_FLOOR_DB / 10.0)
    value = 10.0 * math.log10(max(mean_err, floor_lin))
    n = errs.size
    if n < 2:
        return value, 0.0
    loo = (errs.sum() - errs) / (n - 1)
    theta = 10.0 * np.log10(np.maximum(loo, floor_lin))
    se = math.sqrt((n - 1) / n * float(np.sum((theta - theta.mean()) ** 2)))
    return value, se


@dataclass
class _PointContext:
    """Everything one axis point's trials need; picklable for workers."""

    axis_index: int
    base_seed: int
    estimators: Sequence[str]
    layout: FasLayout
    layout_one: FasLayout
    scene: Scene
    cov_fas: object
    cov_mp: object
    cov_one: object
    a_coeff: float
    cfg_mle: EstimatorConfig
    cfg_ls: EstimatorConfig
    cfg_single: EstimatorConfig


def _resolve_point(spec, axis_value):
    if spec.sweep_axis == "snr_db":
        layout = FasLayout(spec.n_ports, spec.aperture, spec.wavelength, spec.spacing)
        sigma2 = snr_to_sigma2(axis_value)
    elif spec.sweep_axis == "port_count_n":
        layout = FasLayout(int(axis_value), spec.aperture, spec.wavelength, spec.spacing)
        sigma2 = snr_to_sigma2(spec.snr_db)
    else:
        n = max(2, int(round(axis_value / spec.spacing_h)))
        layout = FasLayout(n, axis_value, spec.wavelength, spec.spacing)
        sigma2 = snr_to_sigma2(spec.snr_db)
    return layout, sigma2


def _make_point_context(spec, axis_index):
    axis_value = float(list(spec.axis_values)[axis_index])
    layout, sigma2 = _resolve_point(spec, axis_value)
    ests = list(spec.estimators)
    need_fas = any(e in ("fas_mle", "fas_ls") for e in ests)
    need_mp = "multipoint_ls" in ests
    need_single = "single_antenna" in ests

    cov_fas = build_covariance(layout, spec.correlation_model, sigma2) if need_fas else None
    cov_mp = build_covariance(layout, CorrelationModel.INDEPENDENT, sigma2) if need_mp else None
    layout_one = FasLayout(1, 0.0, spec.wavelength, "endpoint")
    cov_one = build_covariance(layout_one, CorrelationModel.INDEPENDENT, sigma2) if need_single else None

    if spec.correlation_model is CorrelationModel.INDEPENDENT:
        a_coeff = 0.0
    else:
        a_coeff = average_mu_squared(layout)

    d = spec.scene.distance
    bracket = (d / 20.0, d * 20.0)
    cfg_common = dict(search_bracket=bracket, tolerance=1e-6, max_iterations=200)
    cfg_mle = EstimatorConfig(method="fas_mle", frozen_weights=spec.mle_frozen_weights,
                              **cfg_common)
    cfg_ls = EstimatorConfig(method="fas_ls", **cfg_common)
    cfg_single = EstimatorConfig(method="single_antenna", **cfg_common)
    return _PointContext(axis_index=axis_index, base_seed=spec.base_seed,
                         estimators=ests, layout=layout, layout_one=layout_one,
                         scene=spec.scene, cov_fas=cov_fas, cov_mp=cov_mp,
                         cov_one=cov_one, a_coeff=a_coeff, cfg_mle=cfg_mle,
                         cfg_ls=cfg_ls, cfg_single=cfg_single)


def _run_trials(ctx, t_lo, t_hi):
    """Run trials [t_lo, t_hi) of one axis point; returns per-estimator
    (d_hats, convergeds) plus per-trial draw digests."""
    theta = ctx.scene.bearing
    out = {est: ([], []) for est in ctx.estimators}
    digests = []
    for t in range(t_lo, t_hi):
        seed = (ctx.base_seed, ctx.axis_index, t)
        ms_fas = ms_mp = ms_one = None
        hash_parts = []
        if ctx.cov_fas is not None:
            ms_fas = simulate_measurements(ctx.layout, ctx.scene, ctx.cov_fas, seed, 1)[0]
            hash_parts.append(ms_fas.rssi_dbm.tobytes())
        if ctx.cov_mp is not None:
            ms_mp = simulate_measurements(ctx.layout, ctx.scene, ctx.cov_mp, seed, 1)[0]
            hash_parts.append(ms_mp.rssi_dbm.tobytes())
        if ctx.cov_one is not None:
            ms_one = simulate_measurements(ctx.layout_one, ctx.scene, ctx.cov_one, seed, 1)[0]
            hash_parts.append(ms_one.rssi_dbm.tobytes())
        digests.append(hashlib.sha256(b"".join(hash_parts)).hexdigest()[:16])

        for est in ctx.estimators:
            if est == "fas_mle":
                e = estimate_mle(ms_fas, theta, ctx.a_coeff, ctx.cfg_mle)
            elif est == "fas_ls":
                e = estimate_ls(ms_fas, theta, ctx.cfg_ls)
            elif est == "multipoint_ls":
                e = estimate_ls(ms_mp, theta, ctx.cfg_ls)
            else:  # single_antenna: N-reading budget sharing one static draw
                stream = [ms_one] * ctx.layout.n_ports
                e = estimate_single_antenna(stream, ctx.cfg_single)
            out[est][0].append(e.d_hat)
            out[est][1].append(e.converged)
    return out, digests


def run_experiment(spec, workers=1):
    """Execute the sweep and return its ResultTable.

    Trials are independent work items; with ``workers > 1`` they run in a
    process pool, chunked by trial index, and are reduced in submission
    order, so the table bytes do not depend on the worker count.
    """
    spec.validate()
    rows = []
    for axis_index, axis_value in enumerate(spec.axis_values):
        ctx = _make_point_context(spec, axis_index)
        trials = int(spec.trials)
        if workers <= 1:
            merged, digests = _run_trials(ctx, 0, trials)
        else:
            n_chunks = min(workers, trials)
            bounds = np.linspace(0, trials, n_chunks + 1).astype(int)
            args = [(ctx, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
            merged = {est: ([], []) for est in ctx.estimators}
            digests = []
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for part, dpart in pool.map(_run_trials_star, args):
                    for est in ctx.estimators:
                        merged[est][0].extend(part[est][0])
                        merged[est][1].extend(part[est][1])
                    digests.extend(dpart)

        point_digest = hashlib.sha256("".join(digests).encode("ascii")).hexdigest()[:16]
        for est in spec.estimators:
            d_hats = np.array(merged[est][0])
            conv = np.array(merged[est][1], dtype=bool)
            excluded = int((~conv).sum())
            included = d_hats[conv]
            if included.size:
                value, se = nmse_db(included, spec.scene.distance)
            else:
                value, se = float("nan"), 0.0
            rows.append(ResultRow(
                axis_value=float(axis_value), estimator=est, nmse_db=value,
                stderr_db=se, trials=trials, excluded=excluded,
                realized_n=ctx.layout.n_ports,
                flagged=excluded > 0.05 * trials,
                draw_digest=point_digest,
            ))

    meta = {
        "version": __version__,
        "spec_sha256": spec.sha256(),
        "base_seed": int(spec.base_seed),
        "sweep_axis": spec.sweep_axis,
        "snr_convention": SNR_CONVENTION,
        "nmse_convention": NMSE_CONVENTION,
        "spacing_convention": SPACING_NOTE[spec.spacing],
        "correlation_model": spec.correlation_model.value,
        "mle_frozen_weights": spec.mle_frozen_weights,
    }
    return ResultTable(sweep_axis=spec.sweep_axis, rows=rows, meta=meta)


def _run_trials_star(args):
    return _run_trials(*args)


def doubling_gain(table, estimator):
    """NMSE improvement per port-count doubling, in dB.

    For every axis value N whose double 2N is also on the axis, returns
    nmse(N) - nmse(2N); positive means doubling the port count helped.
    """
    if table.sweep_axis != "port_count_n":
        raise ValueError("doubling_gain requires a port-count sweep")
    values = sorted({r.axis_value for r in table.rows})
    gains = []
    for v in values:
        if 2 * v in values:
            gains.append(table.row(v, estimator).nmse_db
                         - table.row(2 * v, estimator).nmse_db)
    if not gains:
        raise ValueError("axis contains no doubling pairs")
    return gains


def find_extrema(table, estimator, window):
    """Interior local extrema of the NMSE-vs-axis curve inside a window.

    A grid point is an extremum when the discrete slopes on its two sides
    change sign and each exceeds twice its propagated stderr. Returns a list
    of dicts with the location, kind, and the two slopes.
    """
    rows = sorted((r for r in table.rows if r.estimator == estimator),
                  key=lambda r: r.axis_value)
    if len(rows) < 3:
        raise ValueError("need at least three axis points to detect an extremum")
    lo, hi = window
    found = []
    for j in range(1, len(rows) - 1):
        w = rows[j].axis_value
        if not lo <= w <= hi:
            continue
        s_in = rows[j].nmse_db - rows[j - 1].nmse_db
        s_out = rows[j + 1].nmse_db - rows[j].nmse_db
        se_in = 2.0 * math.hypot(rows[j].stderr_db, rows[j - 1].stderr_db)
        se_out = 2.0 * math.hypot(rows[j + 1].stderr_db, rows[j].stderr_db)
        if s_in * s_out < 0.0 and abs(s_in) > se_in and abs(s_out) > se_out:
            found.append({
                "axis_value": w,
                "kind": "min" if s_in < 0.0 else "max",
                "slope_in_db": s_in,
                "slope_out_db": s_out,
            })
    return found


def fig2_spec(base_seed=42, trials=10000, output_path=None):
    """SNR sweep preset: N = 12, W = 0.5, all four estimators."""
    return ExperimentSpec(
        sweep_axis="snr_db", axis_values=FIG2_SNR_VALUES, trials=trials,
        base_seed=base_seed, estimators=list(METHODS), scene=default_scene(),
        wavelength=PRESET_WAVELENGTH, spacing=PRESET_SPACING,
        correlation_model=CorrelationModel.AVERAGE_MU,
        n_ports=12, aperture=0.5, output_path=output_path,
    )


def fig3_spec(spacing_h=0.01, base_seed=42, trials=10000, output_path=None):
    """Aperture sweep preset at SNR 10 dB and fixed per-port pitch.

    The realized port count round(W / spacing_h) varies along the axis and
    is recorded per row.
    """
    return ExperimentSpec(
        sweep_axis="aperture_w", axis_values=FIG3_W_VALUES, trials=trials,
        base_seed=base_seed, estimators=["fas_ls"], scene=default_scene(),
        wavelength=PRESET_WAVELENGTH, spacing=PRESET_SPACING,
        correlation_model=CorrelationModel.AVERAGE_MU,
        snr_db=10.0, spacing_h=spacing_h, output_path=output_path,
    )
