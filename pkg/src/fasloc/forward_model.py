"""Scene geometry and RSSI generation.

The transmitter sits at distance d and bearing theta from the reference port.
Received power follows the log-distance model

    rssi(d_i) = 10*log10(A^2 / d_i^n) + 30   [dBm]

where A = sqrt(P_T * lambda^2 * G_T * G_R) / (4*pi) collects the link
constants (transmit power in watts; the +30 converts dBW to dBm) and d_i is
the port-to-transmitter distance

    d_i^2 = off_i^2 + d^2 - 2*off_i*d*cos(theta)

with off_i the geometric port offset in metres. Measured vectors add one
correlated shadow-fading draw per snapshot on top of the noiseless profile.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import FasLayout, sample_fading

# Declared convention for the SNR axis of all experiment sweeps; sigma2 is
# the shadow-fading variance in dB^2, so sigma = 1 dB at SNR 0. Stamped into
# every result-file header so outputs are self-describing.
SNR_CONVENTION = "sigma2_dB2 = 10**(-snr_db/10) (shadow-fading sigma = 1 dB at SNR 0 dB)"

# Far-field ratio below which the equal-mean-power approximation behind the
# correlated-measurement model starts to degrade.
FAR_FIELD_RATIO = 10.0


@dataclass(frozen=True)
class Scene:
    """Transmitter ground truth and link constants.

    distance in metres, bearing in radians, tx power in dBm, linear antenna
    gains, and path-loss exponent n in [2, 6].
    """

    distance: float
    bearing: float
    tx_power_dbm: float = 0.0
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    path_loss_exp: float = 2.0

    def __post_init__(self):
        if not (self.distance > 0.0) or not np.isfinite(self.distance):
            raise ValueError(f"distance must be positive, got {self.distance}")
        if not np.isfinite(self.bearing):
            raise ValueError("bearing must be finite")
        if self.gain_tx <= 0.0 or self.gain_rx <= 0.0:
            raise ValueError("antenna gains must be positive (linear scale)")
        if not (2.0 <= self.path_loss_exp <= 6.0):
            raise ValueError(f"path_loss_exp must be in [2, 6], got {self.path_loss_exp}")

    def amp_const(self, wavelength):
        """Link amplitude constant A = sqrt(P_T lambda^2 G_T G_R) / (4 pi)."""
        p_t_watts = 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)
        return float(np.sqrt(p_t_watts * wavelength ** 2 * self.gain_tx * self.gain_rx)
                     / (4.0 * np.pi))


@dataclass
class MeasurementSet:
    """One snapshot of N RSSI readings plus the metadata to interpret it.

    ``scene_truth`` is present for simulated data and absent when ingesting
    externally captured vectors.
    """

    rssi_dbm: np.ndarray
    layout: FasLayout
    scene_truth: Optional[Scene] = None
    noise_sigma2: float = float("nan")

    def __post_init__(self):
        self.rssi_dbm = np.asarray(self.rssi_dbm, dtype=float)
        if self.rssi_dbm.ndim != 1 or self.rssi_dbm.shape[0] != self.layout.n_ports:
            raise ValueError(
                f"rssi vector length {self.rssi_dbm.shape} does not match "
                f"layout with {self.layout.n_ports} ports"
            )


def predicted_rssi(layout, d, theta, amp_const, path_loss_exp=2.0):
    """Noiseless RSSI profile over all ports for a candidate distance d.

    Vectorized over d: a scalar d gives shape (N,), an array of shape (M,)
    gives shape (M, N).
    """
    offs = layout.port_offsets_m()
    d = np.asarray(d, dtype=float)
    scalar = d.ndim == 0
    dv = d[np.newaxis] if scalar else d
    di_sq = offs[np.newaxis, :] ** 2 + dv[:, np.newaxis] ** 2 \
        - 2.0 * offs[np.newaxis, :] * dv[:, np.newaxis] * np.cos(theta)
    if np.any(di_sq <= 0.0):
        raise ValueError("degenerate geometry: transmitter coincides with a port")
    rssi = 30.0 + 20.0 * np.log10(amp_const) - 5.0 * path_loss_exp * np.log10(di_sq)
    return rssi[0] if scalar else rssi


def port_distance(layout, scene, i):
    """Distance from port i to the transmitter, in metres.

    Port 0 is the reference port at the origin, so port_distance(..., 0)
    equals the scene distance exactly.
    """
    n = layout.n_ports
    if not 0 <= i <= n - 1:
        raise ValueError(f"port index {i} out of range for {n} ports")
    off = float(layout.port_offsets_m()[i])
    di_sq = off ** 2 + scene.distance ** 2 \
        - 2.0 * off * scene.distance * np.cos(scene.bearing)
    if di_sq <= 0.0:
        raise ValueError("degenerate geometry: transmitter coincides with a port")
    return float(np.sqrt(di_sq))


def mean_rssi(layout, scene, i):
    """Noiseless mean RSSI at port i, in dBm.

    Returns 10*log10(A^2 / d_i^n) + 30; at n = 2 this coincides with the
    30 - 20*log10(d_i / A) form to machine precision.
    """
    d_i = port_distance(layout, scene, i)
    a = scene.amp_const(layout.wavelength)
    return float(30.0 + 20.0 * np.log10(a) - 10.0 * scene.path_loss_exp * np.log10(d_i))


def snr_to_sigma2(snr_db, layout=None, scene=None):
    """Shadow-fading variance (dB^2) for a nominal SNR in dB.

    This is a declared convention, not a derived quantity: sigma2 =
    10**(-snr_db/10), i.e. sigma = 1 dB at SNR 0. The convention string
    (SNR_CONVENTION) is stamped into every result file. The layout/scene
    arguments are accepted for interface stability and are unused.
    """
    return float(10.0 ** (-snr_db / 10.0))


def simulate_measurements(layout, scene, cov, rng_seed, n_snapshots):
    """Simulate ``n_snapshots`` RSSI vectors: noiseless profile + fading.

    Deterministic under the seed. Fading rows come from
    channel.sample_fading, so two calls with the same seed but different
    covariances are paired draws (identical underlying normals).
    """
    if cov.dim != layout.n_ports:
        raise ValueError(
            f"covariance dimension {cov.dim} does not match layout with "
            f"{layout.n_ports} ports"
        )
    if layout.n_ports > 1 and scene.distance < FAR_FIELD_RATIO * layout.span_m:
        warnings.warn(
            f"transmitter distance {scene.distance:.3g} m is less than "
            f"{FAR_FIELD_RATIO:.0f}x the port span {layout.span_m:.3g} m; "
            "the equal-mean-power approximation degrades",
            stacklevel=2,
        )
    means = predicted_rssi(layout, scene.distance, scene.bearing,
                           scene.amp_const(layout.wavelength), scene.path_loss_exp)
    fading = sample_fading(cov, rng_seed, n_snapshots)
    return [
        MeasurementSet(rssi_dbm=means + fading[t], layout=layout,
                       scene_truth=scene, noise_sigma2=cov.sigma2)
        for t in range(int(n_snapshots))
    ]


def write_measurements(path, measurements):
    """Write snapshots in the line-oriented record format.

    One snapshot per line: snapshot index, then the N port readings in dBm,
    comma separated, 9 significant digits.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for t, ms in enumerate(measurements):
            values = ",".join(f"{v:.9g}" for v in ms.rssi_dbm)
            fh.write(f"{t},{values}\n")


def read_measurements(path, layout, noise_sigma2=float("nan")):
    """Parse a measurement file written by write_measurements.

    Each line must carry exactly layout.n_ports readings; scene truth is
    absent on ingested data. Raises ValueError on any malformed line.
    """
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != layout.n_ports + 1:
                raise ValueError(
                    f"{path}:{lineno}: expected snapshot index plus "
                    f"{layout.n_ports} readings, got {len(parts)} fields"
                )
            try:
                values = np.array([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: unparseable reading: {exc}") from None
            out.append(MeasurementSet(rssi_dbm=values, layout=layout,
                                      scene_truth=None, noise_sigma2=noise_sigma2))
    if not out:
        raise ValueError(f"{path}: no snapshots found")
    return out
