"""Reed-Solomon coding over GF(2^5) with errors-and-erasures decoding.

Symbols are integers 0..31; codewords hold at most 31 symbols.  The field
is generated by the primitive polynomial x^5 + x^2 + 1 with generator
element 2, and the code generator polynomial takes roots at consecutive
powers alpha^1..alpha^nparity (systematic encoding, parity appended).

Decoding corrects any corruption satisfying 2*errors + erasures <= nparity:
syndromes -> erasure locator -> Forney syndromes -> Berlekamp-Massey ->
Chien search -> Forney magnitudes, followed by a syndrome re-check so a
pattern beyond capability is reported as a failure instead of silently
returning wrong data.
"""

from __future__ import annotations

import operator

from .errors import FecError, InvalidArgumentError

__all__ = [
    "FIELD_SIZE",
    "SYMBOL_BITS",
    "MAX_CODEWORD",
    "gf_mul",
    "gf_div",
    "gf_pow",
    "gf_inv",
    "generator_poly",
    "poly_eval",
    "rs_encode",
    "rs_decode",
]

FIELD_SIZE = 32
SYMBOL_BITS = 5
MAX_CODEWORD = FIELD_SIZE - 1  # 31 symbols
_PRIMITIVE_POLY = 0x25  # x^5 + x^2 + 1
_GENERATOR = 2
_FCR = 1  # first consecutive root exponent

# exp table doubled so products of two logs index without a modulo
_EXP = [0] * (2 * MAX_CODEWORD)
_LOG = [0] * FIELD_SIZE
_value = 1
for _i in range(MAX_CODEWORD):
    _EXP[_i] = _value
    _LOG[_value] = _i
    _value <<= 1
    if _value & FIELD_SIZE:
        _value ^= _PRIMITIVE_POLY
for _i in range(MAX_CODEWORD, 2 * MAX_CODEWORD):
    _EXP[_i] = _EXP[_i - MAX_CODEWORD]
del _value, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("GF(32) division by zero")
    if a == 0:
        return 0
    return _EXP[(_LOG[a] - _LOG[b]) % MAX_CODEWORD]


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        if n == 0:
            return 1
        return 0
    return _EXP[(_LOG[a] * n) % MAX_CODEWORD]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("GF(32) inverse of zero")
    return _EXP[MAX_CODEWORD - _LOG[a]]


def _poly_mul(a: list[int], b: list[int]) -> list[int]:
    # ascending coefficient order: p[i] is the coefficient of x^i
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            if cb:
                out[i + j] ^= gf_mul(ca, cb)
    return out


def _poly_add(a: list[int], b: list[int]) -> list[int]:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, cb in enumerate(b):
        out[i] ^= cb
    return out


def poly_eval(poly: list[int], x: int) -> int:
    """Evaluate an ascending-order polynomial at x (Horner)."""
    acc = 0
    for coef in reversed(poly):
        acc = gf_mul(acc, x) ^ coef
    return acc


def _poly_degree(poly: list[int]) -> int:
    for i in range(len(poly) - 1, -1, -1):
        if poly[i]:
            return i
    return 0


def generator_poly(nparity: int) -> list[int]:
    """Monic generator with roots at alpha^1..alpha^nparity, ascending order."""
    g = [1]
    for i in range(nparity):
        g = _poly_mul(g, [gf_pow(_GENERATOR, _FCR + i), 1])
    return g


def _check_symbols(symbols, what: str) -> list[int]:
    out = []
    for s in symbols:
        try:
            s = operator.index(s)
        except TypeError:
            raise InvalidArgumentError(f"{what} symbols must be integers, got {s!r}") from None
        if not 0 <= s < FIELD_SIZE:
            raise InvalidArgumentError(f"{what} symbols must lie in 0..31, got {s}")
        out.append(s)
    return out


def rs_encode(data, nparity: int) -> list[int]:
    """Systematically encode data symbols, returning data + parity.

    Raises InvalidArgumentError when len(data) + nparity exceeds the
    31-symbol codeword bound of GF(32).
    """
    data = _check_symbols(data, "data")
    if nparity < 1:
        raise InvalidArgumentError("nparity must be >= 1")
    if not data:
        raise InvalidArgumentError("data must be non-empty")
    if len(data) + nparity > MAX_CODEWORD:
        raise InvalidArgumentError(
            f"codeword length {len(data) + nparity} exceeds {MAX_CODEWORD}"
        )
    gen = generator_poly(nparity)
    # synthetic division of data(x) * x^nparity by the generator;
    # gen is monic so remainder coefficients accumulate in place
    gen_desc = gen[::-1]
    work = data + [0] * nparity
    for i in range(len(data)):
        coef = work[i]
        if coef:
            for j in range(1, nparity + 1):
                work[i + j] ^= gf_mul(gen_desc[j], coef)
    return data + work[len(data):]


def _syndromes(codeword: list[int], nparity: int) -> list[int]:
    # codeword is in transmission order: first symbol = highest power of x
    out = []
    for j in range(nparity):
        root = gf_pow(_GENERATOR, _FCR + j)
        acc = 0
        for coef in codeword:
            acc = gf_mul(acc, root) ^ coef
        out.append(acc)
    return out


def _berlekamp_massey(seq: list[int]) -> list[int]:
    # errors-only locator for a syndrome sequence, ascending order
    lam = [1]
    prev = [1]
    length = 0
    shift = 1
    prev_delta = 1
    for r, _ in enumerate(seq):
        delta = seq[r]
        for i in range(1, length + 1):
            if i < len(lam) and lam[i] and r - i >= 0:
                delta ^= gf_mul(lam[i], seq[r - i])
        if delta == 0:
            shift += 1
            continue
        scaled = [0] * shift + [gf_mul(gf_div(delta, prev_delta), c) for c in prev]
        if 2 * length <= r:
            prev, prev_delta = lam, delta
            lam = _poly_add(lam, scaled)
            length = r + 1 - length
            shift = 1
        else:
            lam = _poly_add(lam, scaled)
            shift += 1
    return lam[: _poly_degree(lam) + 1]


def rs_decode(codeword, nparity: int, erasures=()) -> tuple[list[int], int]:
    """Correct a received codeword in place of up to the 2e+f <= nparity bound.

    Parameters
    ----------
    codeword : sequence of int
        Received symbols, data followed by parity.
    nparity : int
        Parity symbol count the codeword was encoded with.
    erasures : iterable of int
        Indices of symbols known to be unreliable.

    Returns
    -------
    (data, corrected_errors)
        Decoded data symbols and the number of corrected positions that
        were NOT declared as erasures.

    Raises
    ------
    FecError
        When the corruption exceeds the guarantee or the corrected word is
        inconsistent.
    """
    received = _check_symbols(codeword, "codeword")
    n = len(received)
    if n > MAX_CODEWORD:
        raise InvalidArgumentError(f"codeword length {n} exceeds {MAX_CODEWORD}")
    if not 1 <= nparity < n:
        raise InvalidArgumentError("nparity must satisfy 1 <= nparity < len(codeword)")
    erasure_set = sorted(set(int(e) for e in erasures))
    for e in erasure_set:
        if not 0 <= e < n:
            raise InvalidArgumentError(f"erasure position {e} out of range for length {n}")

    synd = _syndromes(received, nparity)
    if not any(synd):
        return received[: n - nparity], 0

    n_erasures = len(erasure_set)
    if n_erasures > nparity:
        raise FecError(f"{n_erasures} erasures exceed parity budget {nparity}")

    # locators X = alpha^(n-1-i) for transmission index i
    erasure_locators = [gf_pow(_GENERATOR, n - 1 - e) for e in erasure_set]
    gamma = [1]
    for loc in erasure_locators:
        gamma = _poly_mul(gamma, [1, loc])

    # Forney syndromes confine erasure contributions to degrees < n_erasures,
    # so the tail follows the unknown-errors recurrence alone
    forney = _poly_mul(synd, gamma)[:nparity]
    err_lam = _berlekamp_massey(forney[n_erasures:])
    n_errors = _poly_degree(err_lam)
    if 2 * n_errors + n_erasures > nparity:
        raise FecError(
            f"corruption beyond capability: 2*{n_errors} errors + {n_erasures} erasures > {nparity}"
        )

    psi = _poly_mul(err_lam, gamma)
    psi_degree = _poly_degree(psi)
    root_positions = []
    root_inverses = []
    for i in range(n):
        x_inv = gf_pow(_GENERATOR, (i - (n - 1)) % MAX_CODEWORD)
        if poly_eval(psi, x_inv) == 0:
            root_positions.append(i)
            root_inverses.append(x_inv)
    if len(root_positions) != psi_degree:
        raise FecError("error locator roots do not match its degree")

    omega = _poly_mul(synd, psi)[:nparity]
    # formal derivative over GF(2): even-power terms vanish
    psi_prime = [psi[i] if i % 2 == 1 else 0 for i in range(1, len(psi))]

    corrected = list(received)
    for pos, x_inv in zip(root_positions, root_inverses):
        denom = poly_eval(psi_prime, x_inv)
        if denom == 0:
            raise FecError("degenerate locator derivative")
        magnitude = gf_div(poly_eval(omega, x_inv), denom)
        # with first root exponent 1 the X^(1-fcr) factor is X^0 = 1
        corrected[pos] ^= magnitude

    if any(_syndromes(corrected, nparity)):
        raise FecError("corrected codeword fails the syndrome re-check")

    changed_outside_erasures = sum(
        1 for i in range(n) if corrected[i] != received[i] and i not in erasure_set
    )
    return corrected[: n - nparity], changed_outside_erasures
