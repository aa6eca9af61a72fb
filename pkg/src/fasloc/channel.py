"""Port-correlation models for a fluid antenna receiver and correlated
shadow-fading sampling.

A fluid antenna exposes N selectable port positions along a line. Because
adjacent ports are electrically close, the shadow-fading seen on different
ports is spatially correlated; under isotropic 2-D scattering the correlation
between two points separated by s wavelengths is J0(2*pi*s).

Two port-spacing conventions are supported and recorded on the layout:

``endpoint`` (default)
    N ports spread across a total length of W wavelengths. The correlation
    step between adjacent port indices is W/(N-1); the geometric offset of
    port i is i*W*lambda/N metres. (The two denominators differ on purpose:
    each matches the bookkeeping its formula is conventionally written with,
    and the discrepancy is O(1/N).)

``index``
    Adjacent ports sit exactly W wavelengths apart, so the correlation step
    is W and port i sits at i*W*lambda metres. The benchmark presets use
    this convention (its headline method gaps are the ones the acceptance
    suite pins); every result table records which convention produced it.

Three correlation models produce an N x N unit-diagonal matrix:

* ``JAKES_EXACT``  per-pair J0(2*pi*|k-l|*step),
* ``AVERAGE_MU``   equicorrelated with the single averaged coefficient mu^2,
* ``INDEPENDENT``  identity (conventional multipoint array).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .specfun import bessel_j0

# A covariance whose smallest eigenvalue needs more repair than this is being
# used outside the model's validity range and must fail loudly.
PSD_SHIFT_LIMIT = 1e-6
_PSD_PAD = 1e-12

SPACING_CONVENTIONS = ("endpoint", "index")


class ModelValidityError(ValueError):
    """Correlation model produced a matrix requiring too large a PSD repair."""


class CorrelationModel(Enum):
    JAKES_EXACT = "jakes"
    AVERAGE_MU = "average-mu"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class FasLayout:
    """Geometry of the selectable ports of a fluid antenna.

    Attributes:
        n_ports: number of selectable ports N (>= 2 for any correlation
            formula; 1 is permitted only for the single-antenna baseline).
        aperture: normalized length factor W (dimensionless, in units of the
            wavelength). Meaning depends on ``spacing``.
        wavelength: carrier wavelength in metres.
        spacing: port-spacing convention, ``endpoint`` or ``index``.
    """

    n_ports: int
    aperture: float
    wavelength: float = 0.125
    spacing: str = "endpoint"

    def __post_init__(self):
        if int(self.n_ports) != self.n_ports or self.n_ports < 1:
            raise ValueError(f"n_ports must be a positive integer, got {self.n_ports}")
        object.__setattr__(self, "n_ports", int(self.n_ports))
        if not (self.aperture >= 0.0) or not np.isfinite(self.aperture):
            raise ValueError(f"aperture must be a finite non-negative real, got {self.aperture}")
        if not (self.wavelength > 0.0) or not np.isfinite(self.wavelength):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if self.spacing not in SPACING_CONVENTIONS:
            raise ValueError(f"spacing must be one of {SPACING_CONVENTIONS}, got {self.spacing!r}")

    def correlation_step(self):
        """Normalized separation (in wavelengths) per index step, as used by
        the correlation formulas. Requires N >= 2 under ``endpoint``."""
        if self.spacing == "index":
            return self.aperture
        if self.n_ports < 2:
            raise ValueError("endpoint correlation step requires n_ports >= 2")
        return self.aperture / (self.n_ports - 1)

    def port_offsets_m(self):
        """Geometric port offsets from the reference port, in metres."""
        i = np.arange(self.n_ports, dtype=float)
        if self.spacing == "index":
            return i * self.aperture * self.wavelength
        return i * self.aperture * self.wavelength / self.n_ports

    @property
    def span_m(self):
        """Distance between the first and last port, in metres."""
        offs = self.port_offsets_m()
        return float(offs[-1] - offs[0])


@dataclass
class CovarianceMatrix:
    """sigma^2-scaled port covariance with its PSD-repair bookkeeping.

    ``entries`` is symmetric with diagonal sigma2 * (1 + shift); ``shift`` is
    the diagonal loading (in correlation units) applied when the raw model
    matrix had a slightly negative smallest eigenvalue.
    """

    entries: np.ndarray
    sigma2: float
    regularized: bool = False
    shift: float = 0.0
    _factor: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def dim(self):
        return self.entries.shape[0]

    def factor(self):
        """Lower-triangular-like factor L with L @ L.T == entries.

        Cholesky when positive definite, symmetric eigenfactor otherwise
        (covers PSD-singular cases such as a fully correlated matrix).
        """
        if self._factor is None:
            try:
                self._factor = np.linalg.cholesky(self.entries)
            except np.linalg.LinAlgError:
                w, v = np.linalg.eigh(self.entries)
                w = np.clip(w, 0.0, None)
                self._factor = v * np.sqrt(w)[np.newaxis, :]
        return self._factor


def mu_k(layout, k):
    """Correlation between port k and the reference port 0.

    Returns J0(2*pi*k*step) where step is the layout's normalized
    separation per index step.
    """
    n = layout.n_ports
    if n < 2:
        raise ValueError("reference-port correlation requires n_ports >= 2")
    if not 0 <= k <= n - 1:
        raise ValueError(f"port index {k} out of range for {n} ports")
    return bessel_j0(2.0 * np.pi * k * layout.correlation_step())


def rho_pair(layout, k, l):
    """Correlation between two distinct ports k and l.

    Depends only on |k - l| (J0 is even). A port's correlation with itself
    is 1 by convention and is not computed through this function.
    """
    n = layout.n_ports
    if not (0 <= k <= n - 1 and 0 <= l <= n - 1):
        raise ValueError(f"port indices ({k}, {l}) out of range for {n} ports")
    if k == l:
        raise ValueError("rho_pair is defined for distinct ports; self-correlation is 1")
    return bessel_j0(2.0 * np.pi * (k - l) * layout.correlation_step())


def average_mu_squared(layout):
    """Single averaged correlation coefficient mu^2 of the layout.

    mu^2 = | 2/(N(N-1)) * sum_{k=1}^{N-1} (N-k) J0(2*pi*k*step) |,
    the absolute value of the mean over all port pairs. Always in [0, 1].
    """
    n = layout.n_ports
    if n < 2:
        raise ValueError("average correlation requires n_ports >= 2")
    step = layout.correlation_step()
    total = 0.0
    for k in range(1, n):
        total += (n - k) * bessel_j0(2.0 * np.pi * k * step)
    return abs(2.0 * total / (n * (n - 1)))


def build_covariance(layout, model, sigma2):
    """N x N shadow-fading covariance sigma2 * R for the requested model.

    R has unit diagonal; off-diagonals are the per-pair J0 correlations
    (JAKES_EXACT), the constant mu^2 (AVERAGE_MU), or zero (INDEPENDENT).
    If the raw R has a (numerically) negative smallest eigenvalue it is
    diagonally loaded by |eig_min| + 1e-12 and the repair is recorded;
    a repair larger than ``PSD_SHIFT_LIMIT`` raises ModelValidityError.
    """
    if not (sigma2 > 0.0) or not np.isfinite(sigma2):
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    n = layout.n_ports
    if model is CorrelationModel.INDEPENDENT:
        r = np.eye(n)
    elif model is CorrelationModel.AVERAGE_MU:
        a = average_mu_squared(layout)
        r = np.full((n, n), a)
        np.fill_diagonal(r, 1.0)
    elif model is CorrelationModel.JAKES_EXACT:
        if n < 2:
            raise ValueError("JAKES_EXACT requires n_ports >= 2")
        step = layout.correlation_step()
        coeffs = np.array([1.0] + [bessel_j0(2.0 * np.pi * m * step) for m in range(1, n)])
        idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        r = coeffs[idx]
    else:
        raise ValueError(f"unknown correlation model: {model!r}")

    regularized = False
    shift = 0.0
    eig_min = float(np.linalg.eigvalsh(r)[0])
    if eig_min < 0.0:
        shift = -eig_min + _PSD_PAD
        if shift > PSD_SHIFT_LIMIT:
            raise ModelValidityError(
                f"correlation matrix needs a diagonal shift of {shift:.3e} "
                f"(> {PSD_SHIFT_LIMIT:.0e}) to be PSD; model used outside its validity range"
            )
        r = r + shift * np.eye(n)
        regularized = True

    return CovarianceMatrix(entries=sigma2 * r, sigma2=float(sigma2),
                            regularized=regularized, shift=shift)


def rng_from_seed(seed):
    """Deterministic counter-based generator from an int or tuple of ints.

    Tuple seeds give independent, scheduling-order-free streams per
    (experiment, axis point, trial) without any shared state. The tuple
    length is folded into the entropy because SeedSequence ignores trailing
    zero words, which would otherwise alias (s,) and (s, 0).
    """
    if isinstance(seed, (tuple, list)):
        entropy = (len(seed), *(int(v) for v in seed))
    else:
        entropy = (1, int(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def sample_fading(cov, rng_seed, n_draws):
    """Draw ``n_draws`` zero-mean Gaussian vectors with covariance ``cov``.

    Each row is Z @ L.T where Z is a block of i.i.d. standard normals from
    the seed's stream and L is the covariance factor. The Z block depends
    only on (seed, n_draws, dim), never on the covariance, so two calls with
    the same seed but different covariances consume identical underlying
    draws; this is what makes paired method comparisons possible.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    rng = rng_from_seed(rng_seed)
    z = rng.standard_normal((int(n_draws), cov.dim))
    return z @ cov.factor().T
