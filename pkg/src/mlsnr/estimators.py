"""SNR estimators for ML-decoded spatial multiplexing.

Per-stream estimators turn an error-probability approximation ``p_i`` into
``SNR_i = -beta ln p_i``:

``union``
    union bound averaged over the transmitted vector (Q-function terms);
``fullsum_bounded``
    the same after the exponential bound on Q, ``1/2 q^-M sum_s sum_e exp(.)``;
``fullsum``
    sum of ``exp(-||H e||^2 / 4 rho^2)`` over the unified set ``B_i``;
``maxlog``
    the largest term of that sum, found by an ML search with ``y = 0`` over
    the abbreviated set ``B^_i``;
``zf``
    zero-forcing post-processing SNR (reference linear receiver).

Joint-only estimators are ``capacity`` (``e^C - 1``) and ``ph``, the
minimum-distance error bound with its singular-value sandwich.

The capacity formula is evaluated on ``h_eff`` (with the ``1/sqrt(M_T)``
factor) so that it reduces to the antenna SNR for SISO and to the MRC
combiner SNR for one transmit antenna.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .decoders import MAX_CANDIDATES, SearchCounter, SearchSpaceTooLarge, ml_search, zf_ppsnr
from .errorsets import ErrorSetFamily, error_set_family
from .modulation import Constellation, snr_from_perr
from .numerics import log_det_capacity, q_function, singular_values

P_FLOOR = 1e-300
# p = 1 would map to SNR = 0, i.e. -inf dB; the cap keeps every estimate finite
P_CEIL = 1.0 - 1e-12


class Method(str, enum.Enum):
    CAPACITY = "capacity"
    PH = "ph"
    UNION = "union"
    FULLSUM = "fullsum"
    FULLSUM_BOUNDED = "fullsum_bounded"
    MAXLOG = "maxlog"
    ZF = "zf"

    @property
    def per_stream(self) -> bool:
        return self not in (Method.CAPACITY, Method.PH)


@dataclass(frozen=True)
class SnrEstimate:
    """Estimated SNRs in dB.

    ``saturated[i]`` marks streams whose error probability hit ``P_CEIL``:
    the approximation exceeded one, so the (finite) SNR there carries no
    information and statistics skip it.
    """

    method: Method
    per_stream_db: tuple[float, ...] | None
    vertical_db: float
    saturated: tuple[bool, ...] = ()

    @property
    def any_saturated(self) -> bool:
        return any(self.saturated)


@dataclass(frozen=True)
class PhBound:
    perr_upper: float
    lower_d2: float
    upper_d2: float
    dmin2: float


def to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def vertical_db(per_stream_db) -> float:
    """Joint SNR as the arithmetic mean of the per-stream dB values."""
    return float(np.mean(per_stream_db))


def clamp_probability(p: float) -> float:
    return min(max(float(p), P_FLOOR), P_CEIL)


def _family_for(c: Constellation, m_t: int, family: ErrorSetFamily | None) -> ErrorSetFamily:
    if family is None:
        family = error_set_family(c.kind, m_t)
    if family.m_t != m_t:
        raise ValueError(f"error sets built for {family.m_t} streams, channel has {m_t}")
    return family


def _costs(h: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    he = vectors @ h.T
    return np.sum(he.real**2 + he.imag**2, axis=1)


# -- joint-only ---------------------------------------------------------------


def capacity_snr(ch: ChannelRealization, m: int | None = None) -> float:
    """Linear ``e^C - 1`` with ``C`` the per-stream log-det capacity of ``h_eff``."""
    h = ch.h_eff
    if m is None:
        m = h.shape[1]
    if m < 1:
        raise ValueError("stream count must be at least 1")
    c = log_det_capacity(h, ch.rho) * h.shape[1] / m
    return math.expm1(c)


def capacity_snr_estimate(ch: ChannelRealization, m: int | None = None) -> SnrEstimate:
    snr = max(capacity_snr(ch, m), np.finfo(float).tiny)
    return SnrEstimate(Method.CAPACITY, None, to_db(snr))


def dmin_exact(ch: ChannelRealization, c: Constellation, family: ErrorSetFamily | None = None) -> float:
    """``min ||h_eff (s - s')||^2`` over distinct symbol vectors, by enumeration.

    Every nonzero difference vector has some nonzero stream, so the union of
    the unified per-stream sets covers them all.
    """
    family = _family_for(c, ch.m_t, family)
    n = sum(len(s) for s in family.full_sets)
    if n > 4 * MAX_CANDIDATES:
        raise SearchSpaceTooLarge(f"{n} difference vectors")
    return float(min(np.min(_costs(ch.h_eff, v)) for v in family.full_arrays))


def ph_error_bound(ch: ChannelRealization, c: Constellation, family: ErrorSetFamily | None = None) -> PhBound:
    """Minimum-distance error bound and its singular-value sandwich.

    ``perr_upper = Q(sqrt(d2_min / rho^2))`` uses the exact ``d2_min`` of
    ``h_eff``. The sandwich ``sigma^2 d_min_QAM^2 / M_T`` is taken on
    ``h_phy``, which brackets the same quantity.
    """
    d2 = dmin_exact(ch, c, family)
    s_min, s_max = singular_values(ch.h_phy)
    scale = c.d_min**2 / ch.m_t
    return PhBound(
        perr_upper=clamp_probability(q_function(math.sqrt(d2) / ch.rho)),
        lower_d2=s_min**2 * scale,
        upper_d2=s_max**2 * scale,
        dmin2=d2,
    )


# -- per-stream error probabilities --------------------------------------------


def union_bound_perr(
    ch: ChannelRealization, c: Constellation, i: int, family: ErrorSetFamily | None = None
) -> float:
    """Union bound on the stream-``i`` symbol error probability.

    ``q^-M sum_s sum_{s~: s~_i != s_i} Q(||H (s~ - s)|| / (sqrt2 rho))``. The
    double sum is regrouped by error vector: each ``e`` in ``B_i`` appears
    once for every ``s`` that admits it, which the family's multiplicities
    count exactly.
    """
    family = _family_for(c, ch.m_t, family)
    if c.q_size**ch.m_t > MAX_CANDIDATES:
        raise SearchSpaceTooLarge(f"{c.q_size}**{ch.m_t} transmit vectors")
    dist = np.sqrt(_costs(ch.h_eff, family.full_arrays[i]))
    total = np.dot(family.multiplicities[i], q_function(dist / (math.sqrt(2.0) * ch.rho)))
    return clamp_probability(total / c.q_size**ch.m_t)


def fullsum_bounded_perr(
    ch: ChannelRealization, c: Constellation, i: int, family: ErrorSetFamily | None = None
) -> float:
    """Union bound after ``Q(x) <= exp(-x^2/2)/2``, still averaged over ``s``."""
    family = _family_for(c, ch.m_t, family)
    terms = np.exp(-_costs(ch.h_eff, family.full_arrays[i]) / (4.0 * ch.rho**2))
    total = 0.5 * np.dot(family.multiplicities[i], terms)
    return clamp_probability(total / c.q_size**ch.m_t)


def fullsum_perr(family: ErrorSetFamily, ch: ChannelRealization, i: int) -> float:
    """``sum_{e in B_i} exp(-||H e||^2 / (4 rho^2))``, no prefactor."""
    family = _family_for(family.constellation, ch.m_t, family)
    costs = _costs(ch.h_eff, family.full_arrays[i])
    return clamp_probability(np.sum(np.exp(-costs / (4.0 * ch.rho**2))))


def maxlog_perr(
    family: ErrorSetFamily,
    ch: ChannelRealization,
    i: int,
    counter: SearchCounter | None = None,
) -> float:
    """``exp(-min_{e in B^_i} ||H e||^2 / (4 rho^2))`` via the ML search with ``y = 0``."""
    family = _family_for(family.constellation, ch.m_t, family)
    result = ml_search(np.zeros(ch.m_r, dtype=complex), ch.h_eff, family.abbreviated_arrays[i], counter)
    return clamp_probability(math.exp(-result.best_cost / (4.0 * ch.rho**2)))


def _perr(method: Method, family: ErrorSetFamily, ch, i, counter):
    c = family.constellation
    if method is Method.UNION:
        return union_bound_perr(ch, c, i, family)
    if method is Method.FULLSUM_BOUNDED:
        return fullsum_bounded_perr(ch, c, i, family)
    if method is Method.FULLSUM:
        return fullsum_perr(family, ch, i)
    if method is Method.MAXLOG:
        return maxlog_perr(family, ch, i, counter)
    raise ValueError(f"{method.value} is not an error-probability estimator")


def per_stream_snr(
    method,
    ch: ChannelRealization,
    c: Constellation,
    family: ErrorSetFamily | None = None,
    counter: SearchCounter | None = None,
) -> SnrEstimate:
    """Per-stream SNR estimates (dB) and their vertical average.

    ``family`` defaults to the sets of ``c`` itself. Passing a family built on
    another constellation (QPSK sets for 16QAM data, say) evaluates the
    error probability of that constellation, and the SNR is recovered with
    that constellation's exponent, since the SNR is the channel property
    both share.
    """
    method = Method(method)
    if method is Method.ZF:
        per = tuple(to_db(x) for x in zf_ppsnr(ch))
        return SnrEstimate(method, per, vertical_db(per), (False,) * ch.m_t)
    family = _family_for(c, ch.m_t, family)
    ref = family.constellation
    probs = [_perr(method, family, ch, i, counter) for i in range(ch.m_t)]
    per = tuple(to_db(snr_from_perr(p, ref)) for p in probs)
    return SnrEstimate(method, per, vertical_db(per), tuple(p >= P_CEIL for p in probs))
