"""
Measurements needed versus background strength
===============================================

For each protocol, how many trials does it take to decide the emitter
question at two-sigma confidence as the background grows?  Interference
against a bright reference holds its advantage deep into the noise,
and saturating detectors give some of it back.
"""

import numpy as np

from homdetect import Protocol, ProtocolParams, n_two_sigma, speedup

BACKGROUNDS = np.geomspace(1e-2, 10.0, 7)

print("trials to two-sigma confidence (eta 0.9, emission 0.1, brightness 6)")
print("  background      direct    coherent  incoherent   speed-up")
for noise in BACKGROUNDS:
    row = {}
    for protocol in Protocol:
        params = ProtocolParams(
            protocol=protocol, xi=0.1, eta=0.9, epsilon=0.9,
            n_c=6.0, n_e=float(noise), n_i=float(noise),
        )
        row[protocol] = n_two_sigma(params)
    ratio = row[Protocol.DIRECT] / row[Protocol.COHERENT_HOM]
    print(
        f"  {noise:10.3f}  {row[Protocol.DIRECT]:8d}  {row[Protocol.COHERENT_HOM]:10d}"
        f"  {row[Protocol.INCOHERENT_HOM]:10d}   {ratio:8.1f}"
    )

print("\nthe same comparison with detectors that saturate")
params = ProtocolParams(
    protocol=Protocol.COHERENT_HOM, xi=0.1, eta=0.9, epsilon=0.9, n_c=6.0, n_e=1.0, n_i=1.0
)
print("  cutoff    trials    speed-up")
for t in (None, 4, 2, 1):
    label = "none" if t is None else str(t)
    print(f"  {label:>6s}  {n_two_sigma(params, t):8d}  {speedup(params, t):10.1f}")
