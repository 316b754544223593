"""Exact rational scalars.

All arithmetic in the package happens over Q with gmpy2.mpq (fast,
arbitrary precision).  Fraction is a drop-in fallback so the library
still works where gmpy2 is unavailable.
"""

try:
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover
    from fractions import Fraction as QQ

ZERO = QQ(0)
ONE = QQ(1)


def rational(num, den=1):
    """Exact rational from integers (or a 'p/q' string)."""
    if isinstance(num, str):
        if "/" in num:
            p, q = num.split("/")
            return QQ(int(p), int(q))
        return QQ(int(num))
    return QQ(num, den)


def rat_str(c) -> str:
    """Canonical 'p' or 'p/q' rendering."""
    c = QQ(c)
    num, den = c.numerator, c.denominator
    if den == 1:
        return str(num)
    return f"{num}/{den}"
