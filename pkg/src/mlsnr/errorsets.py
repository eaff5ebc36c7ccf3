"""Per-stream error-vector sets and their abbreviation.

An error vector is ``e = s_tilde - s`` for two symbol vectors. On a square
grid every entry of ``e`` is ``d_min`` times a Gaussian integer, so vectors
are stored exactly as tuples of Python complex numbers with integer parts
(the *lattice* form) and scaled by ``d_min`` only when evaluated against a
channel. All set algebra below is exact.

Set names follow the usual notation:

* ``B_i(s)``: errors hitting stream ``i`` when ``s`` was sent;
* ``B_i``: the union of ``B_i(s)`` over all ``s``;
* ``B^_i``: ``B_i`` with unit-phase duplicates and scalar multiples removed,
  which leaves ``min ||H e||^2`` unchanged for every ``H``;
* ``b_i`` and ``C``: the single-entry error of stream ``i`` and the tail
  shared by all ``B^_i``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .decoders import MAX_CANDIDATES, SearchSpaceTooLarge
from .modulation import Constellation, Kind, make_constellation

ErrorVector = tuple  # tuple[complex, ...] with integer real/imag parts

_ROTATIONS = (1, 1j, -1, -1j)
_CHECK_DRAWS = 1000
_CHECK_SEED = 20240611


class DecompositionFailed(RuntimeError):
    """``{b_i} U C`` does not reproduce the minimum over ``B^_i``."""


def _vec(values: Iterable) -> ErrorVector:
    # normalise -0.0 so that equal vectors hash equally
    return tuple(complex(v.real + 0.0, v.imag + 0.0) for v in values)


def _coordinate_differences(c: Constellation) -> list[complex]:
    span = range(-(c.side - 1), c.side)
    return [complex(re, im) for re in span for im in span]


def _coordinate_count(c: Constellation, d: complex) -> int:
    """Number of grid points ``x`` with ``x + d_min*d`` still on the grid."""
    return (c.side - abs(int(d.real))) * (c.side - abs(int(d.imag)))


def build_b_i_of_s(c: Constellation, m_t: int, i: int, s) -> list[ErrorVector]:
    """Lattice form of ``{s_tilde - s : s_tilde_i != s_i}``.

    Order follows the symbol-vector enumeration (stream 0 fastest).
    """
    if not 0 <= i < m_t:
        raise IndexError(f"stream {i} out of range for m_t={m_t}")
    levels = c.grid_index(np.asarray(s, dtype=complex).reshape(m_t))
    if c.q_size**m_t > MAX_CANDIDATES:
        raise SearchSpaceTooLarge(f"{c.q_size}**{m_t} transmit vectors")
    grid = [(a, b) for b in range(c.side) for a in range(c.side)]
    out = []
    for combo in itertools.product(grid, repeat=m_t):
        combo = combo[::-1]
        if combo[i] == tuple(levels[i]):
            continue
        out.append(
            _vec(complex(ra - la, ia - li) for (ra, ia), (la, li) in zip(combo, levels))
        )
    return out


def build_unified(c: Constellation, m_t: int, i: int) -> list[ErrorVector]:
    """Lattice form of ``B_i``, the union of ``B_i(s)`` over every ``s``.

    Built coordinate-wise: each entry ranges over all grid differences, and
    entry ``i`` over the nonzero ones. This is the same set as the literal
    union because the grid is a product of per-stream alphabets.
    """
    if not 0 <= i < m_t:
        raise IndexError(f"stream {i} out of range for m_t={m_t}")
    diffs = _coordinate_differences(c)
    choices = [[d for d in diffs if d != 0] if k == i else diffs for k in range(m_t)]
    return [_vec(p[::-1]) for p in itertools.product(*choices[::-1])]


def multiplicity(c: Constellation, e: ErrorVector) -> int:
    """How many transmit vectors ``s`` admit ``e`` (i.e. ``s + d_min e`` is valid)."""
    n = 1
    for d in e:
        n *= _coordinate_count(c, d)
    return n


def canonical(e: ErrorVector) -> ErrorVector:
    """Rotate by a power of ``j`` so the first nonzero entry has re > 0, im >= 0."""
    for z in e:
        if z != 0:
            break
    else:
        raise ValueError("the zero vector has no canonical phase")
    for r in _ROTATIONS:
        w = z * r
        if w.real > 0 and w.imag >= 0:
            return _vec(v * r for v in e)
    raise AssertionError("unreachable")  # pragma: no cover


def _direction(e: ErrorVector) -> tuple:
    """Exact key shared by all complex multiples of ``e``: the ratios ``e_k / e_m``."""
    m = next(k for k, z in enumerate(e) if z != 0)
    a, b = int(e[m].real), int(e[m].imag)
    norm = a * a + b * b
    key = []
    for z in e:
        x, y = int(z.real), int(z.imag)
        # z * conj(e_m) / |e_m|^2
        key.append((Fraction(x * a + y * b, norm), Fraction(y * a - x * b, norm)))
    return m, tuple(key)


def _lead_norm(e: ErrorVector) -> int:
    z = next(z for z in e if z != 0)
    return int(z.real) ** 2 + int(z.imag) ** 2


def abbreviate(full: Sequence[ErrorVector]) -> list[ErrorVector]:
    """Drop unit-phase duplicates and scalar-dominated vectors.

    After canonicalisation, ``b`` is removed when some retained ``a`` gives
    ``b = alpha a`` with ``|alpha| > 1``; such ``b`` always costs
    ``|alpha|^2`` times more than ``a``. First-appearance order is kept.
    """
    if not full:
        raise ValueError("cannot abbreviate an empty set")
    seen: dict[ErrorVector, None] = {}
    for e in full:
        seen.setdefault(canonical(e), None)
    groups: dict[tuple, int] = {}
    for e in seen:
        key = _direction(e)
        n = _lead_norm(e)
        if key not in groups or n < groups[key]:
            groups[key] = n
    return [e for e in seen if _lead_norm(e) == groups[_direction(e)]]


def lattice_array(vectors: Sequence[ErrorVector]) -> np.ndarray:
    return np.array(vectors, dtype=complex).reshape(len(vectors), -1)


def _random_channels(m_t: int, draws: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    shape = (draws, m_t, m_t)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def min_cost(h: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """``min_e ||h e||^2`` for a stack of channels ``h`` of shape ``(n, r, m)``."""
    he = np.einsum("nrm,km->nkr", h, vectors)
    return np.min(np.sum(np.abs(he) ** 2, axis=2), axis=1)


def split_common(
    abbreviated: Sequence[Sequence[ErrorVector]],
    draws: int = _CHECK_DRAWS,
    seed: int = _CHECK_SEED,
) -> tuple[list[ErrorVector], list[ErrorVector]]:
    """Split ``B^_i`` into its single-entry vector ``b_i`` and the common tail ``C``.

    ``C`` is the intersection of all ``B^_i``. The split is accepted only if
    ``{b_i} U C`` reproduces ``min ||H e||^2`` over ``B^_i`` (relative 1e-12)
    for ``draws`` random Gaussian channels; otherwise
    :class:`DecompositionFailed` is raised.
    """
    m_t = len(abbreviated)
    singles = []
    for i, family in enumerate(abbreviated):
        hits = [e for e in family if sum(z != 0 for z in e) == 1 and e[i] != 0]
        if len(hits) != 1:
            raise DecompositionFailed(f"stream {i}: {len(hits)} single-entry vectors")
        singles.append(hits[0])
    common = set(abbreviated[0]).intersection(*map(set, abbreviated[1:]))
    tail = [e for e in abbreviated[0] if e in common]
    h = _random_channels(m_t, draws, seed)
    for i, family in enumerate(abbreviated):
        want = min_cost(h, lattice_array(family))
        got = min_cost(h, lattice_array([singles[i], *tail]))
        if np.any(np.abs(got - want) > 1e-12 * want):
            raise DecompositionFailed(f"stream {i}: {{b_i}} U C changes the minimum")
    return singles, tail


@dataclass(frozen=True, eq=False)
class ErrorSetFamily:
    """All error-vector sets for one (constellation, stream count) pair.

    Sets hold lattice vectors; :meth:`physical` scales them by ``d_min``.
    ``single_error``/``common_tail`` are ``None`` when the two-part split does
    not hold, in which case estimators search ``B^_i`` directly.
    """

    constellation: Constellation
    m_t: int
    full_sets: tuple[tuple[ErrorVector, ...], ...] = field(repr=False)
    multiplicities: tuple[np.ndarray, ...] = field(repr=False)
    abbreviated_sets: tuple[tuple[ErrorVector, ...], ...] = field(repr=False)
    single_error: tuple[ErrorVector, ...] | None = field(repr=False)
    common_tail: tuple[ErrorVector, ...] | None = field(repr=False)

    @property
    def kind(self) -> Kind:
        return self.constellation.kind

    def physical(self, vectors: Sequence[ErrorVector]) -> np.ndarray:
        return lattice_array(vectors) * self.constellation.d_min

    @functools.cached_property
    def full_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(self.physical(s) for s in self.full_sets)

    @functools.cached_property
    def abbreviated_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(self.physical(s) for s in self.abbreviated_sets)


def error_set_family(kind, m_t: int) -> ErrorSetFamily:
    """Build (once, then cache) the family for ``kind`` and ``m_t`` streams."""
    return _family(Kind(kind), int(m_t))


@functools.lru_cache(maxsize=None)
def _family(kind: Kind, m_t: int) -> ErrorSetFamily:
    c = make_constellation(kind)
    if (2 * c.side - 1) ** (2 * m_t) > 4 * MAX_CANDIDATES:
        raise SearchSpaceTooLarge(f"error sets for {kind.value} with {m_t} streams")
    full = tuple(tuple(build_unified(c, m_t, i)) for i in range(m_t))
    mult = tuple(np.array([multiplicity(c, e) for e in s], dtype=float) for s in full)
    abbr = tuple(tuple(abbreviate(s)) for s in full)
    try:
        singles, tail = split_common(abbr)
        singles, tail = tuple(singles), tuple(tail)
    except DecompositionFailed:
        singles = tail = None
    return ErrorSetFamily(
        constellation=c,
        m_t=m_t,
        full_sets=full,
        multiplicities=mult,
        abbreviated_sets=abbr,
        single_error=singles,
        common_tail=tail,
    )


def format_entry(z: complex) -> str:
    re, im = int(z.real), int(z.imag)
    return f"{re}{'+' if im >= 0 else '-'}{abs(im)}i"


def dump_family(family: ErrorSetFamily) -> str:
    """Plain-text listing: a header per set, then one vector per line.

    Entries are the exact Gaussian-integer lattice coordinates ``a+bi``; the
    physical vector is ``d_min`` times the listed one.
    """
    c = family.constellation
    lines = [
        f"# constellation {c.kind.value} m_t {family.m_t}",
        f"# physical vector = d_min * listed vector, d_min^2 = 4/{c.beta:.0f}",
    ]

    def section(title, vectors):
        lines.append(f"[{title}] {len(vectors)}")
        lines.extend(" ".join(format_entry(z) for z in e) for e in vectors)

    for i in range(family.m_t):
        section(f"unified {i}", family.full_sets[i])
    for i in range(family.m_t):
        section(f"abbreviated {i}", family.abbreviated_sets[i])
    if family.single_error is not None:
        for i, b in enumerate(family.single_error):
            section(f"single {i}", [b])
        section("common", family.common_tail)
    else:
        lines.append("[common] unsupported")
    return "\n".join(lines) + "\n"
