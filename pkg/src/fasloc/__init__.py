"""RSSI range estimation with a fluid antenna receiver.

Simulates spatially correlated shadow fading across the selectable ports of
a fluid antenna, recovers the transmitter distance with correlated-noise
weighted-ML and least-squares estimators, and benchmarks them against
conventional multipoint and single-antenna baselines via deterministic
Monte Carlo sweeps.
"""

__version__ = "0.1.0"

from .channel import (CorrelationModel, CovarianceMatrix, FasLayout,
                      ModelValidityError, average_mu_squared, build_covariance,
                      mu_k, rho_pair, rng_from_seed, sample_fading)
from .estimators import (Estimate, EstimatorConfig, WeightVector, build_weights,
                         dM_dd, estimate_ls, estimate_mle,
                         estimate_single_antenna, kappa_constant)
from .forward_model import (MeasurementSet, Scene, mean_rssi, port_distance,
                            predicted_rssi, read_measurements,
                            simulate_measurements, snr_to_sigma2,
                            write_measurements)
from .specfun import bessel_j0

__all__ = [
    "CorrelationModel", "CovarianceMatrix", "FasLayout", "ModelValidityError",
    "average_mu_squared", "build_covariance", "mu_k", "rho_pair",
    "rng_from_seed", "sample_fading",
    "Estimate", "EstimatorConfig", "WeightVector", "build_weights", "dM_dd",
    "estimate_ls", "estimate_mle", "estimate_single_antenna", "kappa_constant",
    "MeasurementSet", "Scene", "mean_rssi", "port_distance", "predicted_rssi",
    "read_measurements", "simulate_measurements", "snr_to_sigma2",
    "write_measurements",
    "bessel_j0",
    "__version__",
]
