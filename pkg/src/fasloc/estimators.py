"""Distance estimators for port-swept RSSI vectors.

Three families:

* ``estimate_mle``: correlated-noise weighted estimator. For an
  equicorrelated port covariance with off-diagonal ``a`` the stationarity
  condition of the Gaussian log-likelihood collapses to a scalar root
  problem

      g(d) = sum_i b_i(d) * (x_i - M_i(d)) = 0,
      b_i = dM_i/dd - kappa * sum_j dM_j/dd,
      kappa = a^2 / ((1 - a^2) * (1 + a^2 (N - 1))),

  solved by a bracketed scan plus Brent root refinement. ``a = 0`` gives
  kappa = 0 and reduces exactly to the uncorrelated weighted-ML estimator.
  By default the weights are re-evaluated at the current d inside the
  solver (the exact self-consistent stationarity); ``frozen_weights``
  evaluates them once at the bracket midpoint instead, mirroring the
  closed-form reading in which the weight array is treated as constant.

* ``estimate_ls``: nonlinear least squares over d on the dBm residuals,
  minimized by golden-section/parabolic search on the bracket.

* ``estimate_single_antenna``: averages every reading of a one-port stream
  and inverts the log-distance model in closed form.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .forward_model import MeasurementSet, predicted_rssi

_LN10 = math.log(10.0)

METHODS = ("fas_mle", "fas_ls", "multipoint_ls", "single_antenna")

# Grid used to bracket the stationarity root before Brent refinement.
_SCAN_POINTS = 33


@dataclass
class EstimatorConfig:
    method: str = "fas_mle"
    search_bracket: tuple = (0.5, 200.0)
    tolerance: float = 1e-6
    max_iterations: int = 200
    frozen_weights: bool = False

    def __post_init__(self):
        lo, hi = self.search_bracket
        if not (0.0 < lo < hi):
            raise ValueError(f"search bracket must satisfy 0 < d_min < d_max, got {self.search_bracket}")
        if not (self.tolerance > 0.0):
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


@dataclass
class WeightVector:
    b: np.ndarray
    kappa: float


@dataclass
class Estimate:
    d_hat: float
    converged: bool
    iterations: int
    objective_value: float


def dM_dd(layout, d, theta, i):
    """Sensitivity of the mean RSSI at port i to the distance d.

    Closed form with the quadratic offset term dropped (the offsets are
    small against d):

        -(10/ln 10) * (2d - 2*off_i*cos(theta)) / (d^2 - 2*off_i*d*cos(theta))

    Raises on a vanishing denominator (d equal to twice the projected port
    offset), where the dropped-term form is singular.
    """
    n = layout.n_ports
    if not 0 <= i <= n - 1:
        raise ValueError(f"port index {i} out of range for {n} ports")
    off = float(layout.port_offsets_m()[i])
    num = 2.0 * d - 2.0 * off * math.cos(theta)
    den = d * d - 2.0 * off * d * math.cos(theta)
    if den == 0.0:
        raise ValueError(
            f"derivative singular at d={d}: equals twice the projected offset of port {i}"
        )
    return -(10.0 / _LN10) * num / den


def kappa_constant(a, n_ports):
    """Weight-coupling constant for equicorrelated noise with coefficient a."""
    if not (0.0 <= a < 1.0):
        raise ValueError(f"correlation coefficient a must be in [0, 1), got {a}")
    return a * a / ((1.0 - a * a) * (1.0 + a * a * (n_ports - 1)))


def build_weights(layout, a, d, theta):
    """Weight vector b_i = dM_i/dd - kappa * sum_j dM_j/dd at distance d.

    With a = 0 the coupling vanishes and b is the plain derivative vector.
    Note b depends on (d, theta) through the derivatives; the solver decides
    where to evaluate it (see estimate_mle).
    """
    k = kappa_constant(a, layout.n_ports)
    derivs = _deriv_vector(layout.port_offsets_m(), float(d), theta)
    b = derivs - k * derivs.sum()
    return WeightVector(b=b, kappa=k)


def _deriv_vector(offsets, d, theta):
    # vectorized dM_dd over ports; d may be scalar or (M,) -> (M, N)
    d = np.asarray(d, dtype=float)
    scalar = d.ndim == 0
    dv = d[np.newaxis] if scalar else d
    ct = math.cos(theta)
    num = 2.0 * dv[:, np.newaxis] - 2.0 * offsets[np.newaxis, :] * ct
    den = dv[:, np.newaxis] ** 2 - 2.0 * offsets[np.newaxis, :] * dv[:, np.newaxis] * ct
    out = -(10.0 / _LN10) * num / den
    return out[0] if scalar else out


def _as_snapshot_mean(ms):
    """Per-port mean vector and the carrier MeasurementSet.

    Accepts one MeasurementSet or a sequence; multiple snapshots are averaged
    port-wise before solving.
    """
    if isinstance(ms, MeasurementSet):
        return ms.rssi_dbm.astype(float), ms
    seq = list(ms)
    if not seq:
        raise ValueError("empty measurement stream")
    first = seq[0]
    for other in seq[1:]:
        if other.layout.n_ports != first.layout.n_ports:
            raise ValueError("all snapshots in a stream must share one layout")
    x = np.mean([m.rssi_dbm for m in seq], axis=0)
    return x.astype(float), first


def _resolve_link(ms, amp_const, path_loss_exp):
    if amp_const is None or path_loss_exp is None:
        if ms.scene_truth is None:
            raise ValueError(
                "measurement carries no scene truth; pass amp_const and path_loss_exp explicitly"
            )
        if amp_const is None:
            amp_const = ms.scene_truth.amp_const(ms.layout.wavelength)
        if path_loss_exp is None:
            path_loss_exp = ms.scene_truth.path_loss_exp
    return float(amp_const), float(path_loss_exp)


def estimate_ls(ms, theta, cfg, amp_const=None, path_loss_exp=None):
    """Least-squares distance estimate over the bracket.

    Minimizes sum_i (x_i - M_i(d))^2 by bounded golden-section/parabolic
    search. If a bracket endpoint beats the interior minimum the objective
    was not unimodal on the bracket: the interior point is still returned,
    flagged converged=False.
    """
    x, carrier = _as_snapshot_mean(ms)
    a_const, n_exp = _resolve_link(carrier, amp_const, path_loss_exp)
    layout = carrier.layout
    lo, hi = cfg.search_bracket

    def objective(d):
        model = predicted_rssi(layout, d, theta, a_const, n_exp)
        r = x - model
        return float(r @ r)

    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": cfg.tolerance, "maxiter": cfg.max_iterations})
    d_hat = float(res.x)
    f_hat = float(res.fun)
    interior_ok = f_hat <= min(objective(lo), objective(hi)) + 1e-12
    converged = bool(res.success) and interior_ok
    return Estimate(d_hat=d_hat, converged=converged,
                    iterations=int(res.nfev), objective_value=f_hat)


def estimate_mle(ms, theta, a, cfg, amp_const=None, path_loss_exp=None):
    """Correlated-noise weighted estimate: root of g(d) on the bracket.

    The bracket is scanned on a geometric grid; each sign-change interval is
    refined with Brent's method. With several roots the one closest to the
    least-squares estimate wins (deterministic tie-break). With none, the
    minimizer of |g| is returned with converged=False.
    """
    if not (0.0 <= a < 1.0):
        raise ValueError(f"correlation coefficient a must be in [0, 1), got {a}")
    x, carrier = _as_snapshot_mean(ms)
    a_const, n_exp = _resolve_link(carrier, amp_const, path_loss_exp)
    layout = carrier.layout
    offsets = layout.port_offsets_m()
    n = layout.n_ports
    kap = kappa_constant(a, n)
    lo, hi = cfg.search_bracket

    # The dropped-term derivative is singular at d = 2*off*cos(theta); keep
    # the working bracket above the largest singularity.
    pole = 2.0 * float(np.max(offsets)) * math.cos(theta)
    lo_eff = max(lo, pole * (1.0 + 1e-9) + 1e-12) if pole >= lo else lo
    if lo_eff >= hi:
        raise ValueError(
            f"bracket {cfg.search_bracket} lies inside the weight-singularity "
            f"radius {pole:.3g} m"
        )

    frozen_b = None
    if cfg.frozen_weights:
        mid = 0.5 * (lo + hi)
        derivs = _deriv_vector(offsets, mid, theta)
        frozen_b = derivs - kap * derivs.sum()

    def g_batch(d_values):
        model = predicted_rssi(layout, d_values, theta, a_const, n_exp)
        if frozen_b is not None:
            b = frozen_b[np.newaxis, :]
        else:
            derivs = _deriv_vector(offsets, d_values, theta)
            b = derivs - kap * derivs.sum(axis=1, keepdims=True)
        return np.sum(b * (x[np.newaxis, :] - model), axis=1)

    def g(d):
        return float(g_batch(np.array([d]))[0])

    grid = np.geomspace(lo_eff, hi, _SCAN_POINTS)
    gv = g_batch(grid)
    finite = np.isfinite(gv)
    # a grid point can land exactly on the root (noiseless data with a
    # symmetric bracket does this); the product test would miss it
    roots = [(float(grid[i]), True) for i in range(len(grid))
             if finite[i] and gv[i] == 0.0]
    sign_changes = [
        (grid[i], grid[i + 1])
        for i in range(len(grid) - 1)
        if finite[i] and finite[i + 1] and gv[i] * gv[i + 1] < 0.0
    ]

    def fallback(iterations):
        # no bracketable root: polish |g| near the best scan point only;
        # |g| can have shallow distant valleys the global search would
        # wander into
        j = int(np.argmin(np.where(finite, np.abs(gv), np.inf)))
        b_lo = float(grid[max(j - 1, 0)])
        b_hi = float(grid[min(j + 1, len(grid) - 1)])
        res = minimize_scalar(lambda d: abs(g(d)), bounds=(b_lo, b_hi),
                              method="bounded",
                              options={"xatol": cfg.tolerance,
                                       "maxiter": cfg.max_iterations})
        return Estimate(d_hat=float(res.x), converged=False,
                        iterations=iterations + int(res.nfev),
                        objective_value=g(float(res.x)))

    if not sign_changes and not roots:
        return fallback(0)

    g_scale = float(np.max(np.abs(gv[finite]))) + 1e-30
    iterations = 0
    for (rlo, rhi) in sign_changes:
        root, info = brentq(g, rlo, rhi, xtol=cfg.tolerance,
                            maxiter=cfg.max_iterations, full_output=True)
        iterations += info.iterations
        # a sign change across a pole is not a root: reject huge residuals
        if abs(g(root)) <= 1e-3 * g_scale:
            roots.append((float(root), bool(info.converged)))

    if not roots:
        return fallback(iterations)

    if len(roots) == 1:
        d_hat, conv = roots[0]
    else:
        anchor = estimate_ls(ms, theta, cfg, amp_const=a_const, path_loss_exp=n_exp).d_hat
        d_hat, conv = min(roots, key=lambda rc: abs(rc[0] - anchor))
    return Estimate(d_hat=d_hat, converged=conv, iterations=iterations,
                    objective_value=g(d_hat))


def estimate_single_antenna(streams, cfg, amp_const=None, path_loss_exp=None):
    """Closed-form inversion of the averaged readings of a one-port stream.

    d_hat = A^(2/n) * 10^((30 - mean_rssi) / (10 n)); at n = 2 this is the
    familiar A * 10^((30 - mean_rssi)/20).
    """
    if isinstance(streams, MeasurementSet):
        streams = [streams]
    streams = list(streams)
    if not streams:
        raise ValueError("empty measurement stream")
    for ms in streams:
        if ms.layout.n_ports != 1:
            raise ValueError("single-antenna estimation requires one-port snapshots")
    a_const, n_exp = _resolve_link(streams[0], amp_const, path_loss_exp)
    readings = np.concatenate([ms.rssi_dbm for ms in streams])
    x_bar = float(readings.mean())
    d_hat = a_const ** (2.0 / n_exp) * 10.0 ** ((30.0 - x_bar) / (10.0 * n_exp))
    residual = float(np.sum((readings - x_bar) ** 2))
    return Estimate(d_hat=float(d_hat), converged=True, iterations=0,
                    objective_value=residual)
