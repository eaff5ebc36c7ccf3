"""Slow, independent reference implementations used only by the tests."""

import cmath
import itertools
import math

import numpy as np


def to_lattice(vec, d_min):
    """Round a physical difference vector to its Gaussian-integer lattice form."""
    out = []
    for z in vec:
        w = z / d_min
        a, b = round(w.real), round(w.imag)
        assert abs(w - complex(a, b)) < 1e-9
        out.append(complex(a, b))
    return tuple(out)


def literal_b_i_of_s(c, m_t, i, s):
    """``{s~ - s : s~_i != s_i}`` by enumerating physical symbol vectors."""
    out = set()
    for combo in itertools.product(c.points, repeat=m_t):
        if abs(combo[i] - s[i]) < 1e-12:
            continue
        out.add(to_lattice([a - b for a, b in zip(combo, s)], c.d_min))
    return out


def literal_unified(c, m_t, i):
    out = set()
    for s in itertools.product(c.points, repeat=m_t):
        out |= literal_b_i_of_s(c, m_t, i, s)
    return out


def literal_multiplicity(c, e):
    """Count transmit vectors ``s`` for which ``s + d_min e`` stays on the grid."""
    m_t = len(e)
    n = 0
    for s in itertools.product(c.points, repeat=m_t):
        ok = True
        for z, d in zip(s, e):
            target = z + c.d_min * d
            if np.min(np.abs(c.points - target)) > 1e-9:
                ok = False
                break
        n += ok
    return n


def phase_canonical(e):
    """Rotate by a power of j so the first nonzero entry's argument is in [0, pi/2)."""
    lead = next(z for z in e if z != 0)
    for r in (1, 1j, -1, -1j):
        ang = cmath.phase(lead * r)
        if -1e-12 <= ang < math.pi / 2 - 1e-12:
            return tuple(complex(round((z * r).real), round((z * r).imag)) for z in e)
    raise AssertionError


def _int(z):
    return int(z.real), int(z.imag)


def _inner(e, f):
    """``e^H f`` as an exact Gaussian integer."""
    re = im = 0
    for a, b in zip(e, f):
        (ar, ai), (br, bi) = _int(a), _int(b)
        re += ar * br + ai * bi
        im += ar * bi - ai * br
    return re, im


def _norm2(e):
    return sum(a * a + b * b for a, b in map(_int, e))


def brute_abbreviate(full):
    """Canonicalise, then drop ``f`` if a collinear ``e`` has strictly smaller norm.

    Collinearity over C is the Cauchy-Schwarz equality ``|e^H f|^2 = |e|^2 |f|^2``,
    checked in integers.
    """
    canon = sorted({phase_canonical(e) for e in full}, key=lambda v: tuple((z.real, z.imag) for z in v))
    norms = {e: _norm2(e) for e in canon}
    keep = set()
    for f in canon:
        dominated = False
        for e in canon:
            if norms[e] >= norms[f]:
                continue
            re, im = _inner(e, f)
            if re * re + im * im == norms[e] * norms[f]:
                dominated = True
                break
        if not dominated:
            keep.add(f)
    return keep


def loop_min_cost(h, vectors):
    """``min ||h e||^2`` with an explicit Python loop."""
    best = math.inf
    for e in vectors:
        r = h @ np.asarray(e, dtype=complex)
        best = min(best, float(np.sum(r.real**2 + r.imag**2)))
    return best


def loop_search_cost(y, h, e):
    """``||y - h e||^2`` with scalar Python arithmetic in row/column order."""
    cost = 0.0
    for r in range(h.shape[0]):
        acc_re = acc_im = 0.0
        for k in range(h.shape[1]):
            er, ei = float(e[k].real), float(e[k].imag)
            hr, hi = float(h[r, k].real), float(h[r, k].imag)
            acc_re = acc_re + (er * hr - ei * hi)
            acc_im = acc_im + (er * hi + ei * hr)
        d_re = float(y[r].real) - acc_re
        d_im = float(y[r].imag) - acc_im
        cost = cost + (d_re * d_re + d_im * d_im)
    return cost


def loop_search(y, h, vectors):
    """Direct argmin loop, ties to the lowest index."""
    best, best_k = math.inf, -1
    for k, e in enumerate(vectors):
        cost = loop_search_cost(y, h, e)
        if cost < best:
            best, best_k = cost, k
    return best_k, best


def naive_union_bound(h_eff, rho, c, i):
    """``q^-M sum_s sum_{s~: s~_i != s_i} Q(||H(s~ - s)|| / (sqrt2 rho))`` by two loops."""
    m_t = h_eff.shape[1]
    vectors = list(itertools.product(c.points, repeat=m_t))
    total = 0.0
    for s in vectors:
        s = np.array(s)
        for t in vectors:
            t = np.array(t)
            if abs(t[i] - s[i]) < 1e-12:
                continue
            d = np.linalg.norm(h_eff @ (t - s))
            total += 0.5 * math.erfc(d / (math.sqrt(2) * rho) / math.sqrt(2))
    return total / len(vectors)
