"""End-to-end acceptance checks for the benchmark claims and property suite.

Each numbered check prints one [PASS]/[FAIL] line (run with ``pytest -s -v``
to see them live). The heavy Monte Carlo tables are computed once per
session and shared across checks.

Check 5 exercises the aperture-sweep extremum detector exactly as specified.
Under the port-spacing convention that satisfies every other gap check,
the aperture curve's genuine interior features sit near W = 0.30 (the
absolute-value kink of the averaged correlation) and W = 0.95 (the integer-
aperture resonance), not inside the demanded window around W = 0.5; the
check is implemented faithfully and reports what the detector finds.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy.optimize import brentq

from fasloc.channel import (CorrelationModel, FasLayout, average_mu_squared,
                            build_covariance, sample_fading)
from fasloc.cli import main as cli_main
from fasloc.estimators import (EstimatorConfig, _SCAN_POINTS, estimate_ls,
                               estimate_mle, estimate_single_antenna)
from fasloc.experiments import (ExperimentSpec, default_scene, doubling_gain,
                                fig2_spec, fig3_spec, find_extrema,
                                run_experiment)
from fasloc.forward_model import MeasurementSet, Scene, predicted_rssi, \
    simulate_measurements
from fasloc.specfun import bessel_j0

mp.mp.dps = 40

LN10 = math.log(10.0)
SEED = 42


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def comb_se(row_a, row_b):
    return math.hypot(row_a.stderr_db, row_b.stderr_db)


# ------------------------------------------------------------------ fixtures

@pytest.fixture(scope="module")
def fig2_run():
    t0 = time.perf_counter()
    table = run_experiment(fig2_spec(base_seed=SEED, trials=2000))
    return table, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ls_gap_table():
    spec = ExperimentSpec(
        sweep_axis="snr_db", axis_values=(10.0,), trials=10_000, base_seed=SEED,
        estimators=["fas_ls", "multipoint_ls"], scene=default_scene(),
        spacing="index", n_ports=12, aperture=0.5,
    )
    return run_experiment(spec)


@pytest.fixture(scope="module")
def port_doubling_table():
    spec = ExperimentSpec(
        sweep_axis="port_count_n", axis_values=(3.0, 6.0, 12.0, 24.0),
        trials=10_000, base_seed=SEED, estimators=["fas_ls"],
        scene=default_scene(), spacing="index", aperture=0.5, snr_db=10.0,
    )
    return run_experiment(spec)


@pytest.fixture(scope="module")
def aperture_tables():
    out = {}
    for h in (0.05, 0.01):
        out[h] = run_experiment(fig3_spec(spacing_h=h, base_seed=SEED, trials=4000))
    return out


# ------------------------------------------------------------------ checks

def test_criterion_1_estimator_ordering_across_snr(fig2_run):
    table, elapsed = fig2_run
    ok = True
    for snr in (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0):
        mle = table.row(snr, "fas_mle")
        ls = table.row(snr, "fas_ls")
        mp_ls = table.row(snr, "multipoint_ls")
        ok &= mle.nmse_db <= ls.nmse_db + 2.0 * comb_se(mle, ls)
        ok &= mp_ls.nmse_db <= ls.nmse_db + 2.0 * comb_se(mp_ls, ls)
    ok &= elapsed < 120.0
    assert report(
        "criterion 1 (weighted-ML and multipoint never behind LS, 7 SNRs)",
        ok, f"2000 paired trials in {elapsed:.1f}s")


def test_criterion_2_single_antenna_gap(fig2_run):
    table, _ = fig2_run
    gap = (table.row(10.0, "single_antenna").nmse_db
           - table.row(10.0, "fas_mle").nmse_db)
    assert report("criterion 2 (single-antenna penalty at SNR 10)",
                  gap >= 7.0, f"gap = {gap:.2f} dB (need >= 7)")


def test_criterion_3_ls_gap_to_multipoint(ls_gap_table):
    gap = (ls_gap_table.row(10.0, "fas_ls").nmse_db
           - ls_gap_table.row(10.0, "multipoint_ls").nmse_db)
    assert report("criterion 3 (LS penalty vs independent multipoint)",
                  0.5 <= gap <= 3.5, f"gap = {gap:.2f} dB (need 0.5..3.5)")


def test_criterion_4_port_doubling_gain(port_doubling_table):
    gains = doubling_gain(port_doubling_table, "fas_ls")
    mean_gain = float(np.mean(gains))
    ok = all(1.0 <= g <= 4.0 for g in gains) and 1.5 <= mean_gain <= 3.5
    assert report("criterion 4 (NMSE gain per port doubling, N=3..24)", ok,
                  f"gains = {[f'{g:.2f}' for g in gains]} dB, mean {mean_gain:.2f}")


def test_criterion_5_aperture_extremum_window(aperture_tables):
    fine = find_extrema(aperture_tables[0.01], "fas_ls", window=(0.45, 0.55))
    coarse = find_extrema(aperture_tables[0.05], "fas_ls", window=(0.45, 0.55))
    fine_all = find_extrema(aperture_tables[0.01], "fas_ls", window=(0.0, 1.0))
    coarse_all = find_extrema(aperture_tables[0.05], "fas_ls", window=(0.0, 1.0))
    detail = (f"h=0.01: {len(fine)} extremum(a) in W=[0.45,0.55] "
              f"{[e['axis_value'] for e in fine]}; h=0.05: {len(coarse)}; "
              f"full-range detections: h=0.01 at "
              f"{[e['axis_value'] for e in fine_all]}, h=0.05 at "
              f"{[e['axis_value'] for e in coarse_all]}")
    ok = len(fine) >= 1 and len(coarse) == 0
    assert report("criterion 5 (aperture-curve extremum near W=0.5)", ok, detail)


def _j0_series_oracle(x):
    x = mp.mpf(float(x))
    q = x * x / 4
    term = mp.mpf(1)
    total = mp.mpf(1)
    m = 0
    while abs(term) > mp.mpf("1e-30"):
        m += 1
        term *= -q / (m * m)
        total += term
    return total


def test_criterion_6a_bessel_oracle_agreement():
    rng = np.random.default_rng(6)
    xs = rng.uniform(-30.0, 30.0, size=1000)
    worst = max(abs(bessel_j0(x) - float(_j0_series_oracle(x))) for x in xs)
    assert report("criterion 6a (J0 vs high-precision series, 1000 pts)",
                  worst <= 1e-10, f"max abs err = {worst:.2e}")


def test_criterion_6b_equicorrelated_eigenvalues():
    rng = np.random.default_rng(66)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 30))
        w = float(rng.uniform(0.0, 2.0))
        lay = FasLayout(n, w)
        a = average_mu_squared(lay)
        eigs = np.sort(np.linalg.eigvalsh(
            build_covariance(lay, CorrelationModel.AVERAGE_MU, 1.0).entries))
        expected = np.sort(np.r_[np.full(n - 1, 1.0 - a), 1.0 + (n - 1) * a])
        worst = max(worst, float(np.max(np.abs(eigs - expected))))
    assert report("criterion 6b (equicorrelated eigenvalue identity, 50 layouts)",
                  worst <= 1e-9, f"max deviation = {worst:.2e}")


def test_criterion_6c_sample_correlation():
    lay = FasLayout(12, 0.5)
    a = average_mu_squared(lay)
    cov = build_covariance(lay, CorrelationModel.AVERAGE_MU, 1.0)
    draws = sample_fading(cov, 60_000, 100_000)
    corr = np.corrcoef(draws.T)
    off = corr[~np.eye(12, dtype=bool)]
    worst = float(np.max(np.abs(off - a)))
    assert report("criterion 6c (sampled correlation vs mu^2 at 1e5 draws)",
                  worst <= 0.02, f"max deviation = {worst:.4f}")


def _random_far_field_setup(rng):
    n = int(rng.integers(2, 16))
    w = float(rng.uniform(0.05, 1.0))
    lam = float(rng.uniform(0.05, 0.3))
    spacing = "index" if rng.random() < 0.5 else "endpoint"
    lay = FasLayout(n, w, lam, spacing)
    d = float(rng.uniform(max(12.0 * lay.span_m, 2.0), 60.0))
    theta = float(rng.uniform(0.3, math.pi - 0.3))
    scene = Scene(distance=d, bearing=theta)
    cfg = EstimatorConfig(search_bracket=(d / 20.0, d * 20.0))
    return lay, scene, cfg


def test_criterion_6d_mle_degeneration():
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(100):
        lay, scene, cfg = _random_far_field_setup(rng)
        cov = build_covariance(lay, CorrelationModel.INDEPENDENT, 0.04)
        ms = simulate_measurements(lay, scene, cov,
                                   (int(rng.integers(0, 2 ** 31)),), 1)[0]
        mine = estimate_mle(ms, scene.bearing, 0.0, cfg)

        offsets = lay.port_offsets_m()
        amp = scene.amp_const(lay.wavelength)
        ct = math.cos(scene.bearing)

        def g(d):
            di_sq = offsets ** 2 + d * d - 2 * offsets * d * ct
            model = 30.0 + 20.0 * math.log10(amp) - 10.0 * np.log10(di_sq)
            derivs = -(10.0 / LN10) * (2 * d - 2 * offsets * ct) \
                / (d * d - 2 * offsets * d * ct)
            return float(np.sum(derivs * (ms.rssi_dbm - model)))

        pole = 2.0 * float(np.max(offsets)) * ct
        lo_eff = max(cfg.search_bracket[0], pole * (1.0 + 1e-9) + 1e-12)
        grid = np.geomspace(lo_eff, cfg.search_bracket[1], _SCAN_POINTS)
        gv = np.array([g(v) for v in grid])
        lo, hi = next((grid[i], grid[i + 1]) for i in range(len(grid) - 1)
                      if gv[i] * gv[i + 1] < 0)
        ref = brentq(g, lo, hi, xtol=cfg.tolerance, maxiter=cfg.max_iterations)
        worst = max(worst, abs(mine.d_hat - ref))
    assert report("criterion 6d (a=0 degeneration, 100 scenes)",
                  worst <= 1e-9, f"max |d_hat - reference| = {worst:.2e}")


def test_criterion_6e_noiseless_recovery():
    rng = np.random.default_rng(607)
    worst = 0.0
    for _ in range(100):
        lay, scene, cfg = _random_far_field_setup(rng)
        a = average_mu_squared(lay)
        rssi = predicted_rssi(lay, scene.distance, scene.bearing,
                              scene.amp_const(lay.wavelength),
                              scene.path_loss_exp)
        ms = MeasurementSet(rssi, lay, scene, 0.0)
        lay1 = FasLayout(1, 0.0, lay.wavelength, "index")
        ms1 = MeasurementSet(
            predicted_rssi(lay1, scene.distance, scene.bearing,
                           scene.amp_const(lay.wavelength),
                           scene.path_loss_exp),
            lay1, scene, 0.0)
        errs = [
            abs(estimate_mle(ms, scene.bearing, a, cfg).d_hat - scene.distance),
            abs(estimate_ls(ms, scene.bearing, cfg).d_hat - scene.distance),
            abs(estimate_single_antenna([ms1] * lay.n_ports, cfg).d_hat
                - scene.distance),
        ]
        worst = max(worst, max(errs))
    assert report("criterion 6e (noiseless recovery, all estimators, 100 scenes)",
                  worst <= 1e-4, f"max |d_hat - d| = {worst:.2e} m")


def test_criterion_6f_preset_determinism(tmp_path):
    paths = [tmp_path / f"run{i}.csv" for i in range(3)]
    cli_main(["reproduce", "fig2", "--seed", "11", "--trials", "100",
              "--out", str(paths[0])])
    cli_main(["reproduce", "fig2", "--seed", "11", "--trials", "100",
              "--out", str(paths[1])])
    cli_main(["reproduce", "fig2", "--seed", "11", "--trials", "100",
              "--workers", "2", "--out", str(paths[2])])
    blobs = [p.read_bytes() for p in paths]
    ok = blobs[0] == blobs[1] == blobs[2]
    assert report("criterion 6f (byte-identical preset runs incl. workers)",
                  ok, f"{len(blobs[0])} bytes")


def test_fig2_curves_monotone_in_snr(fig2_run):
    # every estimator's NMSE is non-increasing along the SNR axis, within
    # twice the combined jackknife stderr
    table, _ = fig2_run
    snrs = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    for est in ("fas_mle", "fas_ls", "multipoint_ls", "single_antenna"):
        for lo, hi in zip(snrs, snrs[1:]):
            a, b = table.row(lo, est), table.row(hi, est)
            assert b.nmse_db <= a.nmse_db + 2.0 * comb_se(a, b)


def test_weight_policy_comparison_documented():
    # side-by-side of the two weight policies of the correlated estimator
    specs = {}
    for frozen in (False, True):
        spec = ExperimentSpec(
            sweep_axis="snr_db", axis_values=(10.0,), trials=500, base_seed=SEED,
            estimators=["fas_mle"], scene=default_scene(), spacing="index",
            n_ports=12, aperture=0.5, mle_frozen_weights=frozen,
        )
        specs[frozen] = run_experiment(spec).row(10.0, "fas_mle").nmse_db
    diff = abs(specs[True] - specs[False])
    print(f"[INFO] weight policies at SNR 10: self-consistent "
          f"{specs[False]:.2f} dB, frozen {specs[True]:.2f} dB")
    assert diff < 1.0
