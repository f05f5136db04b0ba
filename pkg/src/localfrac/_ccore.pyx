# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical core; a line-for-line twin of ``_pycore``."""

from libc.math cimport (
    sin, cos, tan, exp, log, sqrt, fabs, fmax, pow, floor, fmod, copysign, isfinite, isinf, rint,
    INFINITY, NAN, M_PI,
)
from libc.stdlib cimport malloc, free

from localfrac._errors import ProgramError
from localfrac._pycore import (
    LANCZOS_NUM as _PY_NUM,
    LANCZOS_DEN as _PY_DEN,
    FACTORIALS as _PY_FACT,
)

NAME = "cython"

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_SIN = 8
    OP_COS = 9
    OP_TAN = 10
    OP_EXP = 11
    OP_LN = 12
    OP_SQRT = 13
    OP_ABS = 14

cdef enum:
    ERR_DIV_ZERO = 1
    ERR_ZERO_NEG_POW = 2
    ERR_NEG_FRAC_POW = 3
    ERR_LOG_DOMAIN = 4
    ERR_SQRT_DOMAIN = 5
    ERR_NONFINITE = 6

OK = 0
MAX_TERMS = 1
CANCELLATION = 2
OVERFLOW = 3
STALLED = 1

cdef double LANCZOS_G = 6.024680040776729583740234375
cdef double LANCZOS_G_MINUS_HALF = 5.524680040776729583740234375
cdef double GAMMA_OVERFLOW = 171.62437695630272
cdef double EPS = 2.220446049250313e-16
cdef double ROUNDING_FLOOR = 8 * EPS
cdef int N_LANCZOS = 13
cdef double NUM[13]
cdef double DEN[13]
cdef double FACT[23]

for _i in range(13):
    NUM[_i] = _PY_NUM[_i]
    DEN[_i] = _PY_DEN[_i]
for _i in range(23):
    FACT[_i] = _PY_FACT[_i]


cdef double _lanczos_sum(double x) nogil:
    cdef double num = 0.0, den = 0.0
    cdef int i
    if x < 5.0:
        for i in range(N_LANCZOS - 1, -1, -1):
            num = num * x + NUM[i]
            den = den * x + DEN[i]
    else:
        for i in range(N_LANCZOS):
            num = num / x + NUM[i]
            den = den / x + DEN[i]
    return num / den


cdef double _sinpi(double x) nogil:
    cdef double y = fmod(fabs(x), 2.0), r
    # ties to even, matching Python's round()
    cdef int n = <int>rint(2.0 * y)
    if n == 0:
        r = sin(M_PI * y)
    elif n == 1:
        r = cos(M_PI * (y - 0.5))
    elif n == 2:
        r = sin(M_PI * (1.0 - y))
    elif n == 3:
        r = -cos(M_PI * (y - 1.5))
    else:
        r = sin(M_PI * (y - 2.0))
    return copysign(1.0, x) * r


cdef double _gamma(double x) nogil:
    cdef double absx, y, q, z, r, half
    if x == floor(x):
        if x <= 0.0:
            return NAN
        if x <= 23.0:
            return FACT[<int>x - 1]
    if x > GAMMA_OVERFLOW:
        return INFINITY
    absx = fabs(x)
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
        r = -M_PI / _sinpi(absx) / absx * exp(y) / _lanczos_sum(absx)
        r -= z * r
        if absx < 140.0:
            r /= pow(y, absx - 0.5)
        else:
            half = pow(y, 0.5 * absx - 0.25)
            r /= half
            r /= half
    else:
        r = _lanczos_sum(absx) / exp(y)
        r += z * r
        if absx < 140.0:
            r *= pow(y, absx - 0.5)
        else:
            half = pow(y, 0.5 * absx - 0.25)
            r *= half
            r *= half
    return r


cdef double _lgamma(double x) nogil:
    cdef double absx, r
    if x == floor(x) and x <= 2.0:
        return NAN if x <= 0.0 else 0.0
    absx = fabs(x)
    if absx < 1e-20:
        return -log(absx)
    r = log(_lanczos_sum(absx)) - LANCZOS_G
    r += (absx - 0.5) * (log(absx + LANCZOS_G - 0.5) - 1.0)
    if x < 0.0:
        r = log(M_PI) - log(fabs(_sinpi(absx))) - log(absx) - r
    return r


def gamma(double x):
    """Gamma function. Returns nan at poles and inf past the overflow threshold."""
    return _gamma(x)


def lgamma(double x):
    """log|Gamma(x)|; nan at poles."""
    return _lgamma(x)


cdef double _ml_term(double a, double b, double z, int k) nogil:
    cdef double arg = a * k + b, logz, sign
    if arg <= 0.0 and arg == floor(arg):
        return 0.0
    if z == 0.0:
        return 1.0 / _gamma(arg) if k == 0 else 0.0
    logz = k * log(fabs(z))
    if arg <= 170.0 and logz < 700.0:
        return pow(z, k) / _gamma(arg)
    sign = -1.0 if (z < 0.0 and k % 2 == 1) else 1.0
    if arg < 0.5:
        sign *= 1.0 if _gamma(arg) > 0 else -1.0
    return sign * exp(logz - _lgamma(arg))


def ml_series(double a, double b, double z, double tol, int max_terms):
    """Compensated sum of z^k / Gamma(a k + b); see ``_pycore.ml_series``."""
    cdef double total = 0.0, comp = 0.0, biggest = 0.0, term, s, mag, value
    cdef int quiet = 0, k
    for k in range(max_terms):
        term = _ml_term(a, b, z, k)
        if isinf(term):
            return total + comp, k + 1, OVERFLOW
        s = total + term
        if fabs(total) >= fabs(term):
            comp += (total - s) + term
        else:
            comp += (term - s) + total
        total = s
        mag = fabs(term)
        if mag > biggest:
            biggest = mag
        value = total + comp
        if mag <= tol * fabs(value):
            quiet += 1
            if quiet == 2:
                if EPS * biggest > fmax(tol, ROUNDING_FLOOR) * fabs(value):
                    return value, k + 1, CANCELLATION
                return value, k + 1, OK
        else:
            quiet = 0
    return total + comp, max_terms, MAX_TERMS


def richardson(values, double ratio, exponents):
    """Extrapolate samples at h, h/ratio, ... to h -> 0; see ``_pycore.richardson``."""
    cdef int n = len(values), m, j
    cdef double factor, correction, prev, cur, nxt
    cdef double *row = <double *>malloc(n * sizeof(double))
    if row == NULL:
        raise MemoryError()
    try:
        for j in range(n):
            row[j] = values[j]
        correction = INFINITY if n == 1 else 0.0
        for m in range(1, n):
            factor = pow(ratio, <double>exponents[m - 1]) - 1.0
            # update in place from the bottom so row[j - 1] is still column m - 1
            prev = row[m - 1]
            for j in range(m, n):
                cur = row[j]
                nxt = cur + (cur - prev) / factor
                prev = cur
                row[j] = nxt
            correction = fabs(row[n - 1] - prev)
        return row[n - 1], correction
    finally:
        free(row)


def adaptive_simpson(f, double a, double b, double abs_tol, double rel_tol, long max_sub):
    """Adaptive Simpson quadrature; see ``_pycore.adaptive_simpson``."""
    cdef double fa, fb, m, fm, whole, fl, fr, coarse, tol, width, min_width
    cdef double total = 0.0, err = 0.0
    cdef double lo, hi, flo, fmid, fhi, s, mid, lm, rm, h, left, right, delta, local_tol
    cdef double fll, flr, frl, frr
    cdef long subdivisions = 0
    if a == b:
        return 0.0, 0.0, 0, OK
    fa = f(a)
    fb = f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    fl = f(0.5 * (a + m))
    fr = f(0.5 * (m + b))
    coarse = (b - a) / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb)
    tol = abs_tol if abs_tol > rel_tol * fabs(coarse) else rel_tol * fabs(coarse)
    width = b - a
    min_width = fabs(width) * pow(2.0, -52)
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
        local_tol = tol * fabs(h / width)
        if fabs(delta) <= 15.0 * local_tol or fabs(h) <= min_width:
            if fabs(h) <= min_width and fabs(delta) > 15.0 * local_tol:
                return total, err, subdivisions, STALLED
            total += left + right + delta / 15.0
            err += fabs(delta) / 15.0
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


cdef class Program:
    """A compiled postfix expression evaluated on a C value stack."""

    cdef int n
    cdef int *code
    cdef int *arg
    cdef double *cvals
    cdef double *stack
    cdef readonly list codes, args, consts

    def __cinit__(self, codes, args, consts):
        cdef int i
        self.codes = list(codes)
        self.args = list(args)
        self.consts = [float(c) for c in consts]
        self.n = len(self.codes)
        self.code = <int *>malloc(max(self.n, 1) * sizeof(int))
        self.arg = <int *>malloc(max(self.n, 1) * sizeof(int))
        self.cvals = <double *>malloc(max(len(self.consts), 1) * sizeof(double))
        self.stack = <double *>malloc(max(self.n, 1) * sizeof(double))
        if not (self.code and self.arg and self.cvals and self.stack):
            raise MemoryError()
        for i in range(self.n):
            self.code[i] = self.codes[i]
            self.arg[i] = self.args[i]
        for i in range(len(self.consts)):
            self.cvals[i] = self.consts[i]

    def __dealloc__(self):
        free(self.code)
        free(self.arg)
        free(self.cvals)
        free(self.stack)

    def __reduce__(self):
        return (Program, (self.codes, self.args, self.consts))

    cdef int _run(self, double v0, double v1, double v2, double *out, int *where) nogil:
        cdef double vars_[3]
        cdef int sp = 0, i, c
        cdef double u, l, r
        vars_[0] = v0
        vars_[1] = v1
        vars_[2] = v2
        for i in range(self.n):
            c = self.code[i]
            if c == OP_CONST:
                self.stack[sp] = self.cvals[self.arg[i]]
                sp += 1
                continue
            if c == OP_VAR:
                self.stack[sp] = vars_[self.arg[i]]
                sp += 1
                continue
            if c >= OP_SIN or c == OP_NEG:
                u = self.stack[sp - 1]
                if c == OP_NEG:
                    r = -u
                elif c == OP_SIN:
                    r = sin(u)
                elif c == OP_COS:
                    r = cos(u)
                elif c == OP_TAN:
                    r = tan(u)
                elif c == OP_EXP:
                    r = exp(u)
                elif c == OP_LN:
                    if u <= 0.0:
                        where[0] = i
                        return ERR_LOG_DOMAIN
                    r = log(u)
                elif c == OP_SQRT:
                    if u < 0.0:
                        where[0] = i
                        return ERR_SQRT_DOMAIN
                    r = sqrt(u)
                else:
                    r = fabs(u)
                sp -= 1
            else:
                r = self.stack[sp - 1]
                l = self.stack[sp - 2]
                sp -= 2
                if c == OP_ADD:
                    r = l + r
                elif c == OP_SUB:
                    r = l - r
                elif c == OP_MUL:
                    r = l * r
                elif c == OP_DIV:
                    if r == 0.0:
                        where[0] = i
                        return ERR_DIV_ZERO
                    r = l / r
                else:
                    if l == 0.0 and r < 0.0:
                        where[0] = i
                        return ERR_ZERO_NEG_POW
                    if l < 0.0 and r != floor(r):
                        where[0] = i
                        return ERR_NEG_FRAC_POW
                    r = pow(l, r)
            if not isfinite(r):
                where[0] = i
                return ERR_NONFINITE
            self.stack[sp] = r
            sp += 1
        out[0] = self.stack[sp - 1]
        return 0

    def run(self, double v0=0.0, double v1=0.0, double v2=0.0):
        cdef double out = 0.0
        cdef int where = 0
        cdef int status = self._run(v0, v1, v2, &out, &where)
        if status:
            raise ProgramError(where, status)
        return out
