"""Fractional order keys over the alphabet a-z.

Keys are plain strings ordered lexicographically. Between any two keys there
is always another key of finite length, so concurrent inserts at different
anchors never need to renumber siblings. Generated keys never end in 'a'
(the zero digit): a key like "ba" would leave no room between "b" and itself.
"""

from __future__ import annotations

from .errors import KeyOrderViolation, NoGap

ALPHABET = "abcdefghijklmnopqrstuvwxyz"
_BASE = len(ALPHABET)
_MIN = ALPHABET[0]


def _digit(ch: str) -> int:
    d = ord(ch) - ord(_MIN)
    if not 0 <= d < _BASE:
        raise KeyOrderViolation(f"character {ch!r} outside key alphabet")
    return d


def _midpoint(lo: str, hi: str | None) -> str:
    """String strictly between lo and hi; lo may be "", hi None means +inf."""
    if hi is not None:
        if lo >= hi:
            raise NoGap(f"no key exists between {lo!r} and {hi!r}")
        # Shared prefix passes through unchanged. lo is virtually padded
        # with the zero digit so e.g. lo="b", hi="bc" recurses on ("", "c").
        n = 0
        while n < len(hi) and (lo[n] if n < len(lo) else _MIN) == hi[n]:
            n += 1
        if n > 0:
            return hi[:n] + _midpoint(lo[n:], hi[n:])
    d_lo = _digit(lo[0]) if lo else 0
    d_hi = _digit(hi[0]) if hi else _BASE
    if d_hi - d_lo > 1:
        return ALPHABET[(d_lo + d_hi + 1) // 2]
    # Consecutive first digits.
    if hi is not None and len(hi) > 1:
        return hi[0]
    return ALPHABET[d_lo] + _midpoint(lo[1:], None)


def order_key_between(lo: str | None, hi: str | None) -> str:
    """Return a key k with lo < k < hi, treating None as -inf / +inf.

    Deterministic for given bounds. Raises KeyOrderViolation when lo >= hi.
    """
    for bound in (lo, hi):
        if bound is not None:
            for ch in bound:
                _digit(ch)
    if lo is not None and hi is not None and lo >= hi:
        raise KeyOrderViolation(f"bounds out of order: {lo!r} >= {hi!r}")
    return _midpoint(lo or "", hi)
