"""Golden-section maximization, continuous and over the integers."""
import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a, b, xtol=1e-10, max_iter=500):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    if not a < b:
        raise ValueError(f"empty bracket [{a}, {b}]")
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    else:
        raise ArithmeticError(f"golden section did not reach xtol={xtol} in {max_iter} steps")
    return (x1, f1) if f1 >= f2 else (x2, f2)


def integer_golden_max(f, lo, hi, exhaustive_width=16):
    """Narrow ``[lo, hi]`` by golden section on integers, then scan what is left.

    ``f`` is called through a cache; returns the cache ``{n: f(n)}`` so the
    caller can apply its own tie-breaking over every evaluated point.
    """
    cache = {}

    def F(n):
        if n not in cache:
            cache[n] = f(n)
        return cache[n]

    while hi - lo > exhaustive_width:
        x1 = hi - int(round(INV_PHI * (hi - lo)))
        x2 = lo + int(round(INV_PHI * (hi - lo)))
        if x1 >= x2:
            break
        if F(x1) >= F(x2):
            hi = x2
        else:
            lo = x1
    for n in range(lo, hi + 1):
        F(n)
    return cache
