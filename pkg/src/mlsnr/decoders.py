"""Exhaustive ML search and zero-forcing detection.

:func:`ml_search` is the single primitive both data detection and the max-log
SNR estimate go through; the latter calls it with ``y = 0`` over an error-vector
set instead of the symbol alphabet.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .modulation import Constellation
from .numerics import pseudo_inverse

MAX_CANDIDATES = 2**16
_CHUNK = 8192


class EmptySearchSet(ValueError):
    pass


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SearchResult:
    best_index: int
    best_cost: float


@dataclass
class SearchCounter:
    """Tally of ML searches: number of invocations and candidates visited."""

    calls: int = 0
    points: int = 0

    def add(self, calls: int, set_size: int) -> None:
        self.calls += calls
        self.points += calls * set_size


def ml_search(y, h, candidates, counter: SearchCounter | None = None) -> SearchResult:
    """Minimize ``||y - h c||^2`` over the rows of ``candidates``.

    Ties go to the lowest index.
    """
    cands = np.asarray(candidates, dtype=complex)
    if cands.size == 0:
        raise EmptySearchSet("candidate set is empty")
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if cands.ndim != 2 or cands.shape[1] != h.shape[1] or y.shape != (h.shape[0],):
        raise ValueError(
            f"inconsistent shapes: y {y.shape}, h {h.shape}, candidates {cands.shape}"
        )
    # real arithmetic in a fixed order, one rounding per operation (no BLAS,
    # no fused complex multiply): a plain per-candidate loop reproduces the
    # costs bit for bit
    er, ei = cands.real, cands.imag
    costs = np.zeros(len(cands))
    for r in range(h.shape[0]):
        acc_re = np.zeros(len(cands))
        acc_im = np.zeros(len(cands))
        for k in range(h.shape[1]):
            hr, hi = h[r, k].real, h[r, k].imag
            acc_re = acc_re + (er[:, k] * hr - ei[:, k] * hi)
            acc_im = acc_im + (er[:, k] * hi + ei[:, k] * hr)
        d_re = y[r].real - acc_re
        d_im = y[r].imag - acc_im
        costs = costs + (d_re * d_re + d_im * d_im)
    k = int(np.argmin(costs))
    if counter is not None:
        counter.add(1, len(cands))
    return SearchResult(best_index=k, best_cost=float(costs[k]))


def enumerate_vectors(c: Constellation, m_t: int) -> np.ndarray:
    """All ``q**m_t`` symbol vectors, stream 0 varying fastest."""
    n = c.q_size**m_t
    if n > MAX_CANDIDATES:
        raise SearchSpaceTooLarge(f"{n} candidates exceeds the {MAX_CANDIDATES} limit")
    rows = itertools.product(range(c.q_size), repeat=m_t)
    # product varies the last position fastest; reverse to make stream 0 fastest
    idx = np.array([r[::-1] for r in rows], dtype=int)
    return c.points[idx]


def ml_decode(y, ch: ChannelRealization, c: Constellation, counter: SearchCounter | None = None) -> np.ndarray:
    """ML decision for one received vector."""
    cands = enumerate_vectors(c, ch.m_t)
    return cands[ml_search(y, ch.h_eff, cands, counter).best_index]


def ml_decode_batch(
    y, ch: ChannelRealization, c: Constellation, counter: SearchCounter | None = None
) -> np.ndarray:
    """ML decisions for a batch ``(N, M_R)``; returns candidate indices ``(N,)``.

    Same argmin as :func:`ml_search` per row, evaluated as
    ``||h c||^2 - 2 Re(y^H h c)`` (the ``||y||^2`` term is common to all
    candidates) to keep the batch a single matrix product.
    """
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    cands = enumerate_vectors(c, ch.m_t)
    hc = cands @ ch.h_eff.T  # (K, M_R)
    energy = np.sum(hc.real**2 + hc.imag**2, axis=1)
    # Re(y^H hc) as one real product: [Re y, Im y] @ [Re hc; Im hc]
    basis = -2.0 * np.concatenate([hc.real, hc.imag], axis=1).T
    out = np.empty(len(y), dtype=int)
    for start in range(0, len(y), _CHUNK):
        block = y[start : start + _CHUNK]
        metric = np.concatenate([block.real, block.imag], axis=1) @ basis
        metric += energy
        out[start : start + _CHUNK] = np.argmin(metric, axis=1)
    if counter is not None:
        counter.add(len(y), len(cands))
    return out


def zf_equalize(y, ch: ChannelRealization) -> np.ndarray:
    """``G y`` with ``G`` the left pseudo-inverse of ``h_eff``; batch-aware."""
    g = pseudo_inverse(ch.h_eff)
    return np.asarray(y, dtype=complex) @ g.T


def zf_decode(y, ch: ChannelRealization, c: Constellation) -> np.ndarray:
    """Per-stream slicing of the zero-forcing output."""
    return c.slice(zf_equalize(y, ch))


def zf_ppsnr(ch: ChannelRealization) -> np.ndarray:
    """Linear post-processing SNR of each stream under ZF detection."""
    g = pseudo_inverse(ch.h_eff)
    return 1.0 / (ch.rho**2 * np.sum(np.abs(g) ** 2, axis=1))
