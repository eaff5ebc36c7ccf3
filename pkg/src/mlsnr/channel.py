"""Rayleigh channel draws and the spatial-multiplexing signal model.

The receiver sees ``y = h_eff s + rho n`` with ``h_eff = h_phy / sqrt(M_T)``
so that a unit-power constellation keeps the total transmit power at one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import as_matrix


class DimensionMismatch(ValueError):
    pass


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples (real and imaginary variance 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def rayleigh_channel(m_r: int, m_t: int, rng: np.random.Generator) -> np.ndarray:
    """An ``m_r x m_t`` matrix of i.i.d. CN(0, 1) gains."""
    if not m_r >= m_t >= 1:
        raise ValueError(f"need m_r >= m_t >= 1, got m_r={m_r}, m_t={m_t}")
    return complex_normal(rng, (m_r, m_t))


def rho_from_snr_db(snr_db: float) -> float:
    """Noise level giving the requested average antenna SNR.

    With unit-variance gains and ``h_eff = h_phy/sqrt(M_T)`` every receive
    antenna collects unit average signal power, so the antenna SNR is
    ``1 / rho**2``.
    """
    return 10.0 ** (-snr_db / 20.0)


def snr_db_from_rho(rho: float) -> float:
    return -20.0 * math.log10(rho)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h_phy: np.ndarray = field(repr=False)
    rho: float
    h_eff: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = as_matrix(self.h_phy)
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        h.flags.writeable = False
        object.__setattr__(self, "h_phy", h)
        h_eff = h / math.sqrt(h.shape[1])
        h_eff.flags.writeable = False
        object.__setattr__(self, "h_eff", h_eff)

    @property
    def m_r(self) -> int:
        return self.h_phy.shape[0]

    @property
    def m_t(self) -> int:
        return self.h_phy.shape[1]


def transmit(ch: ChannelRealization, s, rng: np.random.Generator) -> np.ndarray:
    """Pass symbol vector(s) through the channel and add noise.

    ``s`` is either one vector of length ``M_T`` or a batch ``(N, M_T)``; the
    result has the matching shape with ``M_R`` in the last axis.
    """
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != ch.m_t:
        raise DimensionMismatch(f"symbol vector length {s.shape[-1]} != M_T={ch.m_t}")
    clean = s @ ch.h_eff.T
    return clean + ch.rho * complex_normal(rng, clean.shape)
