"""
Cross-checking the closed-form statistics
==========================================

The joint count probabilities used everywhere else in this package come
from a closed-form expression.  Here they are recomputed the slow way,
by building the full four-mode output state in the number basis, tracing
out the undetected modes, and convolving in the background, then the two
routes are compared outcome by outcome.
"""

from homdetect import (
    OracleConfig,
    Protocol,
    ProtocolParams,
    compare_with_closed_form,
    hom_pmf,
    oracle_pmf,
)

CASES = [
    ("balanced, noiseless", dict(xi=0.5, eta=0.8, epsilon=1.0, n_c=1.0)),
    ("weak emitter, noisy", dict(xi=0.1, eta=0.8, epsilon=0.9, n_c=1.0, n_e=0.8, n_i=0.8)),
    ("bright reference", dict(xi=0.1, eta=0.9, epsilon=0.9, n_c=4.0, n_e=0.5, n_i=0.5)),
    ("lossy detection", dict(xi=0.3, eta=0.5, epsilon=0.9, n_c=2.0)),
]

for protocol in (Protocol.COHERENT_HOM, Protocol.INCOHERENT_HOM):
    print(f"{protocol.value} protocol")
    for label, kw in CASES:
        cfg = OracleConfig(params=ProtocolParams(protocol=protocol, **kw))
        worst, where, ok = compare_with_closed_form(cfg, jk_sum_max=10, tol=1e-8)
        verdict = "ok" if ok else "MISMATCH"
        print(f"  {label:22s} worst |closed - oracle| = {worst:.2e} at {where}  {verdict}")
    print()

# a single outcome, both ways, to make the comparison concrete
params = ProtocolParams(
    protocol=Protocol.COHERENT_HOM, xi=0.1, eta=0.8, epsilon=0.9, n_c=1.0, n_e=0.8, n_i=0.8
)
cfg = OracleConfig(params=params)
print("outcome (1, 2) at the weak-emitter point")
print(f"  closed form:  {hom_pmf(params, 1, 2):.15f}")
print(f"  number basis: {oracle_pmf(cfg, 1, 2):.15f}")
