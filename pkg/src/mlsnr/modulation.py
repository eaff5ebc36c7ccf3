"""Square QAM alphabets with unit average power and the SNR/error-probability map.

Every constellation obeys ``p(symbol error) ~ exp(-SNR / beta)`` with
``beta = 4 / d_min**2``. The identity reproduces the exponent denominators 2,
10 and 42 used for QPSK, 16QAM and 64QAM; it is a reconstruction from the
normalized grids rather than a quoted derivation.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Probability or SNR outside the domain of the exponent map."""


class InvalidSymbol(ValueError):
    """A complex value that is not a point of the constellation."""


class Kind(str, enum.Enum):
    QPSK = "qpsk"
    QAM16 = "qam16"
    QAM64 = "qam64"


_SIDE = {Kind.QPSK: 2, Kind.QAM16: 4, Kind.QAM64: 8}


@dataclass(frozen=True, eq=False)
class Constellation:
    """A square QAM alphabet.

    ``points`` are in row-major grid order: the real level varies fastest,
    levels ascending. ``scale`` maps the odd-integer grid ``(2a-L+1)`` onto
    unit average power, so half the difference between two points is an
    integer multiple of ``d_min`` in each of the real and imaginary parts.
    """

    kind: Kind
    points: np.ndarray = field(repr=False)
    scale: float

    @property
    def q_size(self) -> int:
        return len(self.points)

    @property
    def side(self) -> int:
        return _SIDE[self.kind]

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.q_size))

    @property
    def d_min(self) -> float:
        return 2.0 * self.scale

    @property
    def beta(self) -> float:
        return 4.0 / self.d_min**2

    def grid_index(self, symbols) -> np.ndarray:
        """Map symbols to (real level, imag level) integer pairs.

        Levels are ``0 .. side-1``. Raises :class:`InvalidSymbol` for any value
        further than 1e-9 from a grid point.
        """
        z = np.asarray(symbols, dtype=complex) / self.scale
        levels = []
        for part in (z.real, z.imag):
            a = np.rint((part + self.side - 1) / 2.0)
            if np.any(np.abs(2 * a - self.side + 1 - part) > 1e-9) or np.any(
                (a < 0) | (a >= self.side)
            ):
                raise InvalidSymbol(f"values not on the {self.kind.value} grid: {symbols}")
            levels.append(a.astype(int))
        return np.stack(levels, axis=-1)

    def index_of(self, symbols) -> np.ndarray:
        """Position of each symbol in ``points``."""
        lv = self.grid_index(symbols)
        return lv[..., 1] * self.side + lv[..., 0]

    def slice(self, z) -> np.ndarray:
        """Nearest constellation point to each entry of ``z``."""
        z = np.asarray(z, dtype=complex) / self.scale
        top = self.side - 1

        def level(part):
            return np.clip(np.rint((part + top) / 2.0), 0, top)

        return ((2 * level(z.real) - top) + 1j * (2 * level(z.imag) - top)) * self.scale


def make_constellation(kind) -> Constellation:
    """Build the unit-power square grid for ``kind`` ("qpsk", "qam16", "qam64")."""
    return _make(Kind(kind))


@functools.lru_cache(maxsize=None)
def _make(kind: Kind) -> Constellation:
    side = _SIDE[kind]
    levels = 2 * np.arange(side) - (side - 1)
    grid = levels[None, :] + 1j * levels[:, None]
    # mean |odd grid|^2 = 2 (side^2 - 1) / 3  ->  2, 10, 42
    scale = 1.0 / math.sqrt(2 * (side**2 - 1) / 3)
    points = grid.ravel() * scale
    points.flags.writeable = False
    return Constellation(kind=kind, points=points, scale=scale)


def snr_from_perr(p: float, c: Constellation) -> float:
    """Linear SNR implied by an error probability: ``-beta ln p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"error probability must lie in (0, 1), got {p}")
    return -c.beta * math.log(p)


def perr_from_snr(snr: float, c: Constellation) -> float:
    """Error probability implied by a linear SNR: ``exp(-snr / beta)``."""
    if snr < 0:
        raise DomainError(f"SNR must be non-negative, got {snr}")
    return math.exp(-snr / c.beta)


def random_symbol_vector(c: Constellation, m_t: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw i.i.d. uniform symbols; shape ``(m_t,)`` or ``(size, m_t)``."""
    if m_t < 1:
        raise ValueError("m_t must be at least 1")
    shape = (m_t,) if size is None else (size, m_t)
    return c.points[rng.integers(0, c.q_size, size=shape)]
