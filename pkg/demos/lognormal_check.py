"""
How good is the log-normal approximation?
==========================================

The run-level likelihood ratio is a product of independent per-trial
ratios, so its logarithm tends to a normal by the central limit
theorem.  This script samples fifty-trial runs at unit background,
compares the sample moments of the final log ratio against the
prediction, and tabulates the histogram next to the limiting density.
"""

import math

import numpy as np

from homdetect import (
    EnsembleConfig,
    HypothesisPair,
    Protocol,
    ProtocolParams,
    Truth,
    loglambda_histogram,
    loglik_moments,
    lognormal_pdf,
)

params = ProtocolParams(protocol=Protocol.DIRECT, xi=0.1, eta=0.8, n_e=0.0, n_i=1.0)
pair = HypothesisPair.from_params(params)
moments = loglik_moments(pair)
N = 50

print("per-trial log-ratio moments")
print(f"  present: mu = {moments.mu_present:+.6f}, sigma = {moments.sigma_present:.6f}")
print(f"  absent:  mu = {moments.mu_absent:+.6f}, sigma = {moments.sigma_absent:.6f}")

for truth in (Truth.PRESENT, Truth.ABSENT):
    hist = loglambda_histogram(
        EnsembleConfig(pair=pair, truth=truth, n_measurements=N,
                       n_trajectories=50_000, seed=3),
        bins=15,
    )
    sample_mean = float(np.mean(hist.samples))
    sample_std = float(np.std(hist.samples, ddof=1))
    print(f"\ntruth = {truth.value}, {N} trials per run")
    print(f"  predicted ln(ratio): mean {hist.mu_y:+.4f}, spread {hist.sigma_y:.4f}")
    print(f"  sampled:             mean {sample_mean:+.4f}, spread {sample_std:.4f}")

    # histogram against the limiting normal, written as a density in Lambda
    print("  bin center   sampled density   limiting density")
    centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
    for c, d in zip(centers[::3], hist.density[::3]):
        # change of variables: density in y equals lambda times density in lambda
        limit = math.exp(c) * lognormal_pdf(math.exp(c), hist.mu_y, hist.sigma_y)
        print(f"  {c:+10.3f}   {d:15.4f}   {limit:16.4f}")
