"""Photon-count statistics for single-emitter detection protocols.

A weakly excited emitter releases at most one photon per trial, with
probability ``xi``.  Three measurement protocols are modeled:

* ``direct``: the emitter field alone hits one detector.
* ``coherent``: the emitter field interferes with a phase-stable coherent
  reference on a balanced beamsplitter; two detectors record the outputs.
* ``incoherent``: same optics, but the reference phase is randomized from
  trial to trial, which erases the interference cross term.

All detector backgrounds (unmatched reference light, residual excitation
leakage, dark counts) are Poissonian, so every count distribution here is
a Poisson envelope times a small polynomial bracket and can be enumerated
exactly.  Nothing in this module samples; see ``montecarlo`` for that.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterator, NamedTuple

import numpy as np
from scipy.special import gammaln

__all__ = [
    "Protocol",
    "ProtocolParams",
    "DerivedMeans",
    "Outcome",
    "CountDistribution",
    "ParameterError",
    "DegenerateParameterError",
    "TruncationError",
    "derived_means",
    "direct_pmf",
    "hom_pmf",
    "build_distribution",
    "apply_saturation",
]

# Probabilities this far below zero are floating-point noise from the exact
# bracket; anything lower is a genuine bug and is left visible.
NEG_CLAMP = -1e-15

# Adaptive enumeration gives up past this many counts per detector.
K_MAX_HARD_CAP = 10_000

DEFAULT_TAIL_TOL = 1e-12


class ParameterError(ValueError):
    """A protocol parameter is outside its physical range."""


class DegenerateParameterError(ParameterError):
    """Parameters describe a distribution this model cannot represent."""


class TruncationError(RuntimeError):
    """Count enumeration could not reach the requested tail tolerance."""


class Protocol(str, Enum):
    DIRECT = "direct"
    COHERENT_HOM = "coherent"
    INCOHERENT_HOM = "incoherent"


@dataclass(frozen=True)
class ProtocolParams:
    """Physical parameters of one measurement configuration.

    xi         emission probability of the emitter, in [0, 1]
    eta        detection efficiency seen by the emitter field, in [0, 1]
    epsilon    mode overlap between emitter and reference fields, in [0, 1]
    n_c        mean photon number of the coherent reference
    n_e        mean residual-excitation background per trial
    n_i        mean dark counts per detector per trial
    cos_theta  cosine of the emitter-reference phase; forced to 0 for the
               incoherent protocol

    The direct protocol ignores ``epsilon``, ``n_c`` and ``cos_theta``.
    """

    protocol: Protocol
    xi: float = 0.1
    eta: float = 1.0
    epsilon: float = 1.0
    n_c: float = 1.0
    n_e: float = 0.0
    n_i: float = 0.0
    cos_theta: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        for name in ("xi", "eta", "epsilon"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        for name in ("n_c", "n_e", "n_i"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not (v >= 0.0) or math.isinf(v):
                raise ParameterError(f"{name} must be finite and >= 0, got {v}")
        ct = float(self.cos_theta)
        if not (-1.0 <= ct <= 1.0) or math.isnan(ct):
            raise ParameterError(f"cos_theta must lie in [-1, 1], got {ct}")
        if self.protocol is Protocol.INCOHERENT_HOM:
            ct = 0.0
        object.__setattr__(self, "cos_theta", ct)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["protocol"] = self.protocol.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolParams":
        return cls(**d)


class DerivedMeans(NamedTuple):
    """Total and background mean counts implied by a parameter set."""

    n_bar: float
    n_noise: float


class Outcome(NamedTuple):
    """One detector record: a single count for direct, a pair otherwise."""

    j: int
    k: int | None = None


def derived_means(params: ProtocolParams) -> DerivedMeans:
    """Mean total counts and mean background counts per trial.

    For the two-detector protocols the background collects the unmatched
    reference fraction, residual excitation on both outputs, and dark
    counts on both detectors; the total adds the matched reference light.
    Direct detection has no reference, so total and background coincide.
    """
    p = params
    if p.protocol is Protocol.DIRECT:
        n_noise = p.eta * p.n_e + p.n_i
        return DerivedMeans(n_bar=n_noise, n_noise=n_noise)
    n_noise = p.eta * (1.0 - p.epsilon) * p.n_c + p.eta * p.n_e + 2.0 * p.n_i
    return DerivedMeans(n_bar=p.eta * p.epsilon * p.n_c + n_noise, n_noise=n_noise)


# ---------------------------------------------------------------------------
# pmf evaluation
# ---------------------------------------------------------------------------


def _log_poisson(k: np.ndarray, mean: float) -> np.ndarray:
    """log of the Poisson pmf for mean > 0."""
    return -mean + k * math.log(mean) - gammaln(k + 1.0)


def _poisson_vec(k_max: int, mean: float) -> np.ndarray:
    """Poisson pmf on 0..k_max; exact delta at zero mean."""
    if mean == 0.0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    return np.exp(_log_poisson(np.arange(k_max + 1.0), mean))


def _clamp_negative(p: np.ndarray) -> np.ndarray:
    return np.where((p < 0.0) & (p >= NEG_CLAMP), 0.0, p)


def _direct_probs(params: ProtocolParams, k_max: int) -> np.ndarray:
    """Direct-detection pmf on 0..k_max.

    The record is the sum of a Poisson background and the at-most-one
    emitter photon, which lands with probability eta * xi:

        p(k) = (1 - eta xi) Pois(k; n) + eta xi Pois(k - 1; n)

    This convolution form stays exact at n = 0, where it reduces to a
    Bernoulli split between k = 0 and k = 1.
    """
    n_noise = derived_means(params).n_noise
    q = params.eta * params.xi
    base = _poisson_vec(k_max, n_noise)
    probs = (1.0 - q) * base
    probs[1:] += q * base[:-1]
    return _clamp_negative(probs)


def _hom_probs(params: ProtocolParams, k_max: int) -> np.ndarray:
    """Two-detector joint pmf on {0..k_max}^2, row index = detector 1.

    Both detectors see Poisson(n_bar / 2) envelopes; the emitter photon and
    its interference with the reference contribute a polynomial bracket in
    (j + k) and (j - k).  The bracket below is the expansion in which every
    xi-dependent term carries its own xi factor, so xi = 0 and xi = 1 are
    exact endpoints with no indeterminate ratios.
    """
    n_bar, n_noise = derived_means(params)
    p = params
    if n_bar == 0.0:
        if p.xi > 0.0:
            raise DegenerateParameterError(
                "two-detector pmf undefined for n_bar = 0 with xi > 0; "
                "model an unobserved emitter with the direct protocol at eta = 0"
            )
        out = np.zeros((k_max + 1, k_max + 1))
        out[0, 0] = 1.0
        return out
    counts = np.arange(k_max + 1.0)
    lp = _log_poisson(counts, n_bar / 2.0)
    prefactor = np.exp(lp[:, None] + lp[None, :])
    total = counts[:, None] + counts[None, :]
    diff = counts[:, None] - counts[None, :]
    cross = 2.0 * p.eta * p.cos_theta * math.sqrt(
        max(0.0, p.xi * (1.0 - p.xi)) * p.epsilon * p.n_c
    )
    bracket = (
        1.0
        - p.eta * p.xi
        + p.eta * p.xi * n_noise * total / n_bar**2
        + p.eta**2 * p.xi * p.epsilon * p.n_c * diff**2 / n_bar**2
        - cross * diff / n_bar
    )
    return _clamp_negative(prefactor * bracket)


def direct_pmf(params: ProtocolParams, k: int) -> float:
    """Probability of recording k counts in one direct-detection trial."""
    if params.protocol is not Protocol.DIRECT:
        raise ParameterError("direct_pmf requires the direct protocol")
    if k < 0:
        raise ParameterError(f"count must be >= 0, got {k}")
    return float(_direct_probs(params, k)[k])


def hom_pmf(params: ProtocolParams, j: int, k: int) -> float:
    """Probability of the joint record (j, k) in one two-detector trial."""
    if params.protocol is Protocol.DIRECT:
        raise ParameterError("hom_pmf requires a two-detector protocol")
    if j < 0 or k < 0:
        raise ParameterError(f"counts must be >= 0, got ({j}, {k})")
    m = max(j, k)
    return float(_hom_probs(params, m)[j, k])


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountDistribution:
    """Exhaustively enumerated count distribution for one parameter set.

    ``probs`` is 1-D (direct) or 2-D (two-detector, row index = detector 1)
    over 0..k_max per detector.  ``tail_mass`` is the probability left
    outside the table; ``saturation`` marks a table whose boundary bins
    already absorb all higher counts.
    """

    params: ProtocolParams
    probs: np.ndarray
    tail_mass: float
    saturation: int | None = None

    def __post_init__(self) -> None:
        self.probs.setflags(write=False)

    @property
    def k_max(self) -> int:
        return self.probs.shape[0] - 1

    @property
    def is_joint(self) -> bool:
        return self.probs.ndim == 2

    def prob(self, j: int, k: int | None = None) -> float:
        """Probability of one outcome; counts above a saturated boundary
        are clipped onto it."""
        if j < 0 or (k is not None and k < 0):
            raise ValueError(f"counts must be >= 0, got ({j}, {k})")
        if self.saturation is not None:
            j = min(j, self.saturation)
            if k is not None:
                k = min(k, self.saturation)
        elif j > self.k_max or (k is not None and k > self.k_max):
            # untabulated outcomes sit in the tail, below tail_tol
            return 0.0
        if self.is_joint:
            if k is None:
                raise ValueError("joint distribution requires two counts")
            return float(self.probs[j, k])
        if k is not None:
            raise ValueError("direct distribution takes a single count")
        return float(self.probs[j])

    def total(self) -> float:
        return float(self.probs.sum())

    def outcomes(self) -> Iterator[tuple[Outcome, float]]:
        """Iterate (outcome, probability) in row-major order."""
        if self.is_joint:
            for j in range(self.probs.shape[0]):
                for k in range(self.probs.shape[1]):
                    yield Outcome(j, k), float(self.probs[j, k])
        else:
            for j in range(self.probs.shape[0]):
                yield Outcome(j), float(self.probs[j])

    # -- serialization ------------------------------------------------------

    def to_csv(self, path: str | os.PathLike) -> None:
        lines = ["j,k,p" if self.is_joint else "j,p"]
        for outcome, p in self.outcomes():
            if self.is_joint:
                lines.append(f"{outcome.j},{outcome.k},{p:.17g}")
            else:
                lines.append(f"{outcome.j},{p:.17g}")
        atomic_write_text(path, "\n".join(lines) + "\n")

    def to_json_dict(self) -> dict:
        if self.is_joint:
            entries = [[o.j, o.k, p] for o, p in self.outcomes()]
        else:
            entries = [[o.j, p] for o, p in self.outcomes()]
        return {
            "params": self.params.to_dict(),
            "saturation": self.saturation,
            "k_max": self.k_max,
            "tail_mass": self.tail_mass,
            "entries": entries,
        }

    def to_json(self, path: str | os.PathLike) -> None:
        atomic_write_text(path, json.dumps(self.to_json_dict(), indent=1) + "\n")


def _initial_k_max(per_detector_mean: float) -> int:
    # mean + 12 sigma of the Poisson envelope; the extra photon and the
    # bracket polynomial are swallowed by the floor and the wide margin
    return max(20, math.ceil(per_detector_mean + 12.0 * math.sqrt(per_detector_mean + 1.0)))


def build_distribution(
    params: ProtocolParams,
    tail_tol: float = DEFAULT_TAIL_TOL,
    k_max: int | None = None,
) -> CountDistribution:
    """Enumerate the count distribution until the untabulated tail is small.

    The table starts at a 12-sigma Poisson bound per detector and grows by
    half until ``1 - sum(probs) <= tail_tol``.  Passing ``k_max`` pins the
    table size instead (no growth, no tail check).  Raises TruncationError
    if the cap of 10000 counts per detector cannot reach the tolerance.
    """
    if not (tail_tol > 0.0):
        raise ParameterError(f"tail_tol must be > 0, got {tail_tol}")
    n_bar = derived_means(params).n_bar
    direct = params.protocol is Protocol.DIRECT
    per_det = n_bar if direct else n_bar / 2.0

    fixed = k_max is not None
    k = k_max if fixed else _initial_k_max(per_det)
    while True:
        if k > K_MAX_HARD_CAP:
            raise TruncationError(
                f"k_max {k} exceeds the cap of {K_MAX_HARD_CAP}; "
                f"tail tolerance {tail_tol} unreachable at n_bar = {n_bar}"
            )
        probs = _direct_probs(params, k) if direct else _hom_probs(params, k)
        tail = max(0.0, 1.0 - float(probs.sum()))
        if fixed or tail <= tail_tol:
            return CountDistribution(params=params, probs=probs, tail_mass=tail)
        k = math.ceil(1.5 * k)


def apply_saturation(dist: CountDistribution, t: int) -> CountDistribution:
    """Fold counts above threshold t into the boundary bins.

    A detector that saturates at t reports min(count, t), so all mass with
    j >= t collapses onto j = t (per detector for joint tables).  The
    distribution tail joins the top corner bin, making the result exactly
    normalized.  Saturation is applied at most once.
    """
    if dist.saturation is not None:
        raise ParameterError("distribution is already saturated")
    if not isinstance(t, (int, np.integer)) or t < 1:
        raise ParameterError(f"saturation threshold must be an integer >= 1, got {t}")
    if dist.tail_mass > 1e-12:
        raise ParameterError(
            f"tail mass {dist.tail_mass} too large to fold; rebuild with a tighter tail_tol"
        )
    p = dist.probs
    if dist.is_joint:
        edge = min(t, dist.k_max + 1)
        out = np.zeros((t + 1, t + 1))
        out[:edge, :edge] = p[:edge, :edge]
        out[t, :edge] += p[edge:, :edge].sum(axis=0)
        out[:edge, t] += p[:edge, edge:].sum(axis=1)
        out[t, t] += p[edge:, edge:].sum() + dist.tail_mass
    else:
        edge = min(t, dist.k_max + 1)
        out = np.zeros(t + 1)
        out[:edge] = p[:edge]
        out[t] += p[edge:].sum() + dist.tail_mass
    return CountDistribution(params=dist.params, probs=out, tail_mass=0.0, saturation=t)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write text to path via a temp file and rename, so readers never see
    a half-written file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
