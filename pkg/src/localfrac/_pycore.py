"""Pure-Python implementation of the numerical core.

Mirrors ``_ccore.pyx`` function for function; used when the compiled
extension is unavailable or ``LOCALFRAC_BACKEND=python`` is set.
"""

import math

from localfrac import _opcodes as op
from localfrac._errors import (
    ERR_DIV_ZERO,
    ERR_LOG_DOMAIN,
    ERR_NEG_FRAC_POW,
    ERR_NONFINITE,
    ERR_SQRT_DOMAIN,
    ERR_ZERO_NEG_POW,
    ProgramError,
)

NAME = "python"

# Rational Lanczos approximation (g ~ 6.0247, 13 terms); numerator and
# denominator polynomials in x, evaluated as a ratio for stability.
LANCZOS_G = 6.024680040776729583740234375
LANCZOS_G_MINUS_HALF = 5.524680040776729583740234375
LANCZOS_NUM = (
    23531376880.410759688572007674451636754734846804940,
    42919803642.649098768957899047001988850926355848959,
    35711959237.355668049440185451547166705960488635843,
    17921034426.037209699919755754458931112671403265390,
    6039542586.3520280050642916443072979210699388420708,
    1439720407.3117216736632230727949123939715485786772,
    248874557.86205415651146038641322942321632125127801,
    31426415.585400194380614231628318205362874684987640,
    2876370.6289353724412254090516208496135991145378768,
    186056.26539522349504029498971604569928220784236328,
    8071.6720023658162106380029022722506138218516325024,
    210.82427775157934587250973392071336271166969580291,
    2.5066282746310002701649081771338373386264310793408,
)
LANCZOS_DEN = (
    0.0, 39916800.0, 120543840.0, 150917976.0, 105258076.0, 45995730.0,
    13339535.0, 2637558.0, 357423.0, 32670.0, 1925.0, 66.0, 1.0,
)
N_LANCZOS = 13
# (k-1)! for k = 1..23 is exact in double precision.
FACTORIALS = (
    1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0, 362880.0,
    3628800.0, 39916800.0, 479001600.0, 6227020800.0, 87178291200.0,
    1307674368000.0, 20922789888000.0, 355687428096000.0,
    6402373705728000.0, 121645100408832000.0, 2432902008176640000.0,
    51090942171709440000.0, 1124000727777607680000.0,
)
GAMMA_OVERFLOW = 171.62437695630272
EPS = 2.220446049250313e-16
# tolerances below this cannot be certified against cancellation anyway
ROUNDING_FLOOR = 8 * EPS

# Status codes returned by ``ml_series`` and ``adaptive_simpson``.
OK = 0
MAX_TERMS = 1
CANCELLATION = 2
OVERFLOW = 3

# largest x with exp(x) finite
LOG_MAX = 709.782712893384
STALLED = 1


def _lanczos_sum(x):
    num = 0.0
    den = 0.0
    if x < 5.0:
        for i in range(N_LANCZOS - 1, -1, -1):
            num = num * x + LANCZOS_NUM[i]
            den = den * x + LANCZOS_DEN[i]
    else:
        for i in range(N_LANCZOS):
            num = num / x + LANCZOS_NUM[i]
            den = den / x + LANCZOS_DEN[i]
    return num / den


def _sinpi(x):
    # sin(pi x) with argument reduction so integers give exact zeros.
    y = math.fmod(math.fabs(x), 2.0)
    n = int(round(2.0 * y))
    if n == 0:
        r = math.sin(math.pi * y)
    elif n == 1:
        r = math.cos(math.pi * (y - 0.5))
    elif n == 2:
        r = math.sin(math.pi * (1.0 - y))
    elif n == 3:
        r = -math.cos(math.pi * (y - 1.5))
    else:
        r = math.sin(math.pi * (y - 2.0))
    return math.copysign(1.0, x) * r


def gamma(x):
    """Gamma function. Returns nan at poles and inf past the overflow threshold."""
    if x == math.floor(x):
        if x <= 0.0:
            return math.nan
        if x <= 23.0:
            return FACTORIALS[int(x) - 1]
    if x > GAMMA_OVERFLOW:
        return math.inf
    absx = math.fabs(x)
    if absx < 1e-20:
        return 1.0 / x
    y = absx + LANCZOS_G_MINUS_HALF
    if absx > LANCZOS_G_MINUS_HALF:
        q = y - absx
        z = q - LANCZOS_G_MINUS_HALF
    else:
        q = y - LANCZOS_G_MINUS_HALF
        z = q - absx
    z = z * LANCZOS_G / y
    if x < 0.0:
        r = -math.pi / _sinpi(absx) / absx * math.exp(y) / _lanczos_sum(absx)
        r -= z * r
        if absx < 140.0:
            r /= math.pow(y, absx - 0.5)
        else:
            half = math.pow(y, 0.5 * absx - 0.25)
            r /= half
            r /= half
    else:
        r = _lanczos_sum(absx) / math.exp(y)
        r += z * r
        if absx < 140.0:
            r *= math.pow(y, absx - 0.5)
        else:
            half = math.pow(y, 0.5 * absx - 0.25)
            r *= half
            r *= half
    return r


def lgamma(x):
    """log|Gamma(x)|; nan at poles."""
    if x == math.floor(x) and x <= 2.0:
        return math.nan if x <= 0.0 else 0.0
    absx = math.fabs(x)
    if absx < 1e-20:
        return -math.log(absx)
    r = math.log(_lanczos_sum(absx)) - LANCZOS_G
    r += (absx - 0.5) * (math.log(absx + LANCZOS_G - 0.5) - 1.0)
    if x < 0.0:
        r = math.log(math.pi) - math.log(math.fabs(_sinpi(absx))) - math.log(absx) - r
    return r


def _ml_term(a, b, z, k):
    arg = a * k + b
    if arg <= 0.0 and arg == math.floor(arg):
        return 0.0
    if z == 0.0:
        return 1.0 / gamma(arg) if k == 0 else 0.0
    logz = k * math.log(math.fabs(z))
    if arg <= 170.0 and logz < 700.0:
        return math.pow(z, k) / gamma(arg)
    sign = -1.0 if (z < 0.0 and k % 2 == 1) else 1.0
    if arg < 0.5:
        sign *= 1.0 if gamma(arg) > 0 else -1.0
    x = logz - lgamma(arg)
    return sign * (math.inf if x > LOG_MAX else math.exp(x))


def ml_series(a, b, z, tol, max_terms):
    """Sum z^k / Gamma(a k + b) until two consecutive terms are below tol*|sum|.

    Summation is compensated (Neumaier). Returns ``(value, terms_used,
    status)``; status is OK, MAX_TERMS, CANCELLATION (the rounding error of
    the largest term alone already exceeds tol, floored at 8 eps, relative
    to the sum) or OVERFLOW (a term left the double range).
    """
    total = 0.0
    comp = 0.0
    biggest = 0.0
    quiet = 0
    for k in range(max_terms):
        term = _ml_term(a, b, z, k)
        if math.isinf(term):
            return total + comp, k + 1, OVERFLOW
        s = total + term
        if math.fabs(total) >= math.fabs(term):
            comp += (total - s) + term
        else:
            comp += (term - s) + total
        total = s
        mag = math.fabs(term)
        if mag > biggest:
            biggest = mag
        value = total + comp
        if mag <= tol * math.fabs(value):
            quiet += 1
            if quiet == 2:
                if EPS * biggest > max(tol, ROUNDING_FLOOR) * math.fabs(value):
                    return value, k + 1, CANCELLATION
                return value, k + 1, OK
        else:
            quiet = 0
    return total + comp, max_terms, MAX_TERMS


def richardson(values, ratio, exponents):
    """Extrapolate ``values`` (sampled at h, h/ratio, ...) to h -> 0.

    ``exponents[m]`` is the power of h removed by tableau column m + 1.
    Returns ``(value, last_correction)``.
    """
    n = len(values)
    row = [float(v) for v in values]
    correction = math.inf if n == 1 else 0.0
    for m in range(1, n):
        factor = math.pow(ratio, exponents[m - 1]) - 1.0
        new = []
        for j in range(m, n):
            new.append(row[j] + (row[j] - row[j - 1]) / factor)
        correction = math.fabs(new[-1] - row[-1])
        row = row[:m] + new
    return row[-1], correction


def adaptive_simpson(f, a, b, abs_tol, rel_tol, max_sub):
    """Adaptive Simpson quadrature with Richardson-corrected panels.

    Returns ``(value, error_estimate, subdivisions, status)``.
    """
    if a == b:
        return 0.0, 0.0, 0, OK
    fa = f(a)
    fb = f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # Coarse second estimate to set the global tolerance scale.
    fl = f(0.5 * (a + m))
    fr = f(0.5 * (m + b))
    coarse = (b - a) / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb)
    tol = max(abs_tol, rel_tol * math.fabs(coarse))
    width = b - a
    min_width = math.fabs(width) * 2.0 ** -52
    total = 0.0
    err = 0.0
    subdivisions = 0
    stack = [(a, b, fa, fm, fb, whole, fl, fr)]
    while stack:
        lo, hi, flo, fmid, fhi, s, fl, fr = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * fl + fmid)
        right = h / 12.0 * (fmid + 4.0 * fr + fhi)
        delta = left + right - s
        local_tol = tol * math.fabs(h / width)
        if math.fabs(delta) <= 15.0 * local_tol or math.fabs(h) <= min_width:
            if math.fabs(h) <= min_width and math.fabs(delta) > 15.0 * local_tol:
                return total, err, subdivisions, STALLED
            total += left + right + delta / 15.0
            err += math.fabs(delta) / 15.0
            continue
        subdivisions += 1
        if subdivisions > max_sub:
            return total, err, subdivisions, STALLED
        fll = f(0.5 * (lo + lm))
        flr = f(0.5 * (lm + mid))
        frl = f(0.5 * (mid + rm))
        frr = f(0.5 * (rm + hi))
        stack.append((mid, hi, fmid, fr, fhi, right, frl, frr))
        stack.append((lo, mid, flo, fl, fmid, left, fll, flr))
    return total, err, subdivisions, OK


class Program:
    """A compiled postfix expression evaluated on a value stack."""

    def __init__(self, codes, args, consts):
        self.codes = list(codes)
        self.args = list(args)
        self.consts = [float(c) for c in consts]
        self._ins = list(zip(self.codes, self.args))

    def __reduce__(self):
        return (Program, (self.codes, self.args, self.consts))

    def run(self, v0=0.0, v1=0.0, v2=0.0):
        vars_ = (v0, v1, v2)
        consts = self.consts
        stack = []
        push = stack.append
        pop = stack.pop
        for i, (code, arg) in enumerate(self._ins):
            if code == op.CONST:
                push(consts[arg])
                continue
            if code == op.VAR:
                push(vars_[arg])
                continue
            if code >= op.SIN or code == op.NEG:
                u = pop()
                if code == op.NEG:
                    r = -u
                elif code == op.SIN:
                    r = math.sin(u)
                elif code == op.COS:
                    r = math.cos(u)
                elif code == op.TAN:
                    r = math.tan(u)
                elif code == op.EXP:
                    r = math.exp(u) if u < 709.782712893384 else math.inf
                elif code == op.LN:
                    if u <= 0.0:
                        raise ProgramError(i, ERR_LOG_DOMAIN)
                    r = math.log(u)
                elif code == op.SQRT:
                    if u < 0.0:
                        raise ProgramError(i, ERR_SQRT_DOMAIN)
                    r = math.sqrt(u)
                else:
                    r = math.fabs(u)
            else:
                rhs = pop()
                lhs = pop()
                if code == op.ADD:
                    r = lhs + rhs
                elif code == op.SUB:
                    r = lhs - rhs
                elif code == op.MUL:
                    r = lhs * rhs
                elif code == op.DIV:
                    if rhs == 0.0:
                        raise ProgramError(i, ERR_DIV_ZERO)
                    r = lhs / rhs
                else:
                    if lhs == 0.0 and rhs < 0.0:
                        raise ProgramError(i, ERR_ZERO_NEG_POW)
                    if lhs < 0.0 and rhs != math.floor(rhs):
                        raise ProgramError(i, ERR_NEG_FRAC_POW)
                    try:
                        r = math.pow(lhs, rhs)
                    except OverflowError:
                        r = math.inf
            if not math.isfinite(r):
                raise ProgramError(i, ERR_NONFINITE)
            push(r)
        return stack[-1]
