"""Compensated (double-double) arithmetic and exact reduction modulo 2*pi.

Arrays of doubles are treated as exact dyadic rationals.  ``frac_over_2pi``
returns ``t / (2 pi) mod 1`` for huge ``t`` without losing the fractional
bits: ``t`` is split into two exactly-multipliable halves and multiplied
against 24-bit chunks of ``1 / (2 pi)``, dropping the chunk products that are
integers (Payne-Hanek style).
"""
import mpmath
import numpy as np

from .exceptions import PrecisionLoss

_CHUNK_BITS = 24
_N_CHUNKS = 64
_SPLITTER = 134217729.0  # 2**27 + 1


def _inv_two_pi_chunks():
    with mpmath.workprec(_CHUNK_BITS * _N_CHUNKS + 64):
        c = 1 / (2 * mpmath.pi)
        scaled = int(mpmath.floor(c * mpmath.mpf(2) ** (_CHUNK_BITS * _N_CHUNKS)))
    mask = (1 << _CHUNK_BITS) - 1
    chunks = [(scaled >> (_CHUNK_BITS * (_N_CHUNKS - 1 - j))) & mask for j in range(_N_CHUNKS)]
    return np.array(chunks, dtype=float)


INV_TWO_PI_CHUNKS = _inv_two_pi_chunks()
MAX_EXPONENT = _CHUNK_BITS * _N_CHUNKS - 200


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def dd_add(ahi, alo, bhi, blo):
    s, e = two_sum(ahi, bhi)
    e = e + alo + blo
    return quick_two_sum(s, e)


def dd_mul(ahi, alo, bhi, blo):
    p, e = two_prod(ahi, bhi)
    e = e + (ahi * blo + alo * bhi)
    return quick_two_sum(p, e)


def dd_mul_d(ahi, alo, b):
    p, e = two_prod(ahi, b)
    e = e + alo * b
    return quick_two_sum(p, e)


with mpmath.workprec(200):
    _tp = 2 * mpmath.pi
    TWO_PI_HI = float(_tp)
    TWO_PI_LO = float(_tp - mpmath.mpf(TWO_PI_HI))
    _itp = 1 / _tp
    INV_TWO_PI_HI = float(_itp)
    INV_TWO_PI_LO = float(_itp - mpmath.mpf(INV_TWO_PI_HI))
del _tp, _itp


def _frac(x):
    return x - np.floor(x)


def frac_over_2pi(t):
    """Double-double ``(hi, lo)`` of ``t / (2 pi) mod 1`` in [0, 1), for exact doubles ``t``."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise PrecisionLoss("phase argument overflowed")
    negative = t < 0.0
    mant, expo = np.frexp(np.abs(t))
    m = mant * 2.0 ** 53  # integer-valued, |m| < 2**53
    e = expo.astype(np.int64) - 53
    if np.any((e > MAX_EXPONENT) & (t != 0.0)):
        raise PrecisionLoss("phase exponent beyond the reduction table")
    m_hi = np.floor(m / 2.0 ** 26)
    m_lo = m - m_hi * 2.0 ** 26
    acc_hi = np.zeros_like(t)
    acc_lo = np.zeros_like(t)
    for j, k in enumerate(INV_TWO_PI_CHUNKS):
        base = e - _CHUNK_BITS * (j + 1)
        if np.all(base + 26 + 51 < -110):
            break
        for part, shift in ((m_hi, 26), (m_lo, 0)):
            s = base + shift
            active = (s < 0) & (s + 51 > -110)
            if not np.any(active):
                continue
            x = np.ldexp(part * k, np.where(active, s, 0).astype(np.int32))
            f = np.where(active, _frac(x), 0.0)
            acc_hi, acc_lo = dd_add(acc_hi, acc_lo, f, np.zeros_like(f))
            fl = np.floor(acc_hi)
            acc_hi, acc_lo = quick_two_sum(acc_hi - fl, acc_lo)
    hi, lo = _wrap_unit(acc_hi, acc_lo)
    if np.any(negative):
        # frac(-y) = 1 - frac(y), skipping y with frac(y) == 0
        nh, nl = dd_add(np.ones_like(hi), np.zeros_like(hi), -hi, -lo)
        flip = negative & ((hi != 0.0) | (lo != 0.0))
        hi, lo = np.where(flip, nh, hi), np.where(flip, nl, lo)
        hi, lo = _wrap_unit(hi, lo)
    return hi, lo


def _wrap_unit(hi, lo):
    fl = np.floor(hi + lo)
    hi, lo = two_sum(hi - fl, lo)
    neg = hi < 0.0
    if np.any(neg):
        wh, wl = dd_add(hi, lo, np.ones_like(hi), np.zeros_like(hi))
        hi, lo = np.where(neg, wh, hi), np.where(neg, wl, lo)
    return hi, lo


def reduced_phase_from_frac(hi, lo):
    """Map a fraction of a turn to an angle in [-pi, pi)."""
    shift = np.where(hi + lo >= 0.5, 1.0, 0.0)
    hi2, lo2 = two_sum(hi - shift, lo)
    ph, pl = dd_mul(hi2, lo2, TWO_PI_HI, TWO_PI_LO)
    return ph + pl


def sum_turns(terms):
    """Sum a list of ``(hi, lo)`` turn fractions modulo 1."""
    acc_hi = np.zeros_like(terms[0][0])
    acc_lo = np.zeros_like(terms[0][0])
    for hi, lo in terms:
        acc_hi, acc_lo = dd_add(acc_hi, acc_lo, hi, lo)
        fl = np.floor(acc_hi)
        acc_hi, acc_lo = quick_two_sum(acc_hi - fl, acc_lo)
    return _wrap_unit(acc_hi, acc_lo)


def ceil_dd(hi, lo):
    """Ceiling of the double-double ``hi + lo``."""
    c = np.ceil(hi)
    # integers are representable, so only an integral hi can be pushed up by lo
    return np.where((c == hi) & (lo > 0.0), c + 1.0, c)
