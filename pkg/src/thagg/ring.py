"""Exact arithmetic in R_q = Z[x]/(x^n + 1) over an RNS residue basis.

Elements live as per-prime residue rows (non-negative, branch-free modular
arithmetic); the centered representatives in (-q/2, q/2] are the canonical
external view, produced by `crt_lift`. A quadratic schoolbook multiplier is
kept alongside the NTT path as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import tau

import numpy as np

from . import ntt
from .errors import DomainMismatchError, ParamsMismatchError
from .rng import Xof

COEFF = "coeff"
NTT = "ntt"


@dataclass(frozen=True)
class RingParams:
    """Ring degree, RNS prime basis, and the cached modulus bit length."""

    n: int
    primes: tuple[int, ...]
    q: int
    log2_q: int

    @classmethod
    def create(cls, n: int, primes: tuple[int, ...] | list[int]) -> "RingParams":
        primes = tuple(int(p) for p in primes)
        if n < 4 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 4, got {n}")
        if len(set(primes)) != len(primes):
            raise ValueError("primes must be pairwise distinct")
        for p in primes:
            if p % (2 * n) != 1:
                raise ValueError(f"prime {p} is not 1 mod 2n (n={n})")
            if not ntt.is_prime(p):
                raise ValueError(f"{p} is not prime")
        q = 1
        for p in primes:
            q *= p
        return cls(n=n, primes=primes, q=q, log2_q=q.bit_length())

    @property
    def half_q(self) -> int:
        return self.q // 2


@dataclass
class RingElement:
    """Residue matrix of shape (limbs, n) plus the evaluation-domain flag."""

    params: RingParams
    residues: np.ndarray
    domain: str = COEFF

    def copy(self) -> "RingElement":
        return RingElement(self.params, self.residues.copy(), self.domain)


@dataclass(frozen=True)
class NoiseSpec:
    """Truncated rounded-Gaussian spec: std sigma, hard bound on |coeff|."""

    sigma: Fraction
    bound: Fraction

    @classmethod
    def create(cls, sigma, bound=None) -> "NoiseSpec":
        sigma = Fraction(sigma)
        bound = 6 * sigma if bound is None else Fraction(bound)
        if sigma < 0 or bound < sigma:
            raise ValueError("need bound >= sigma >= 0")
        return cls(sigma=sigma, bound=bound)


# ---------------------------------------------------------------------------
# construction and CRT


def _plan(params: RingParams) -> ntt.TransformPlan:
    return ntt.transform_plan(params.n, params.primes)


def zero(params: RingParams, domain: str = COEFF) -> RingElement:
    res = np.zeros((len(params.primes), params.n), dtype=np.int64)
    return RingElement(params, res, domain)


def one(params: RingParams) -> RingElement:
    el = zero(params)
    el.residues[:, 0] = 1
    return el


def from_coeffs(params: RingParams, coeffs) -> RingElement:
    """RNS-decompose integer coefficients (any size, any sign)."""
    n = params.n
    if len(coeffs) != n:
        raise ValueError(f"expected {n} coefficients, got {len(coeffs)}")
    rows = []
    try:
        arr = np.asarray(coeffs, dtype=np.int64)
        for p in params.primes:
            rows.append(arr % p)
    except OverflowError:
        for p in params.primes:
            rows.append(np.array([c % p for c in coeffs], dtype=np.int64))
    return RingElement(params, np.stack(rows), COEFF)


def scalar_residues(params: RingParams, value: int) -> np.ndarray:
    """Residues of a big scalar, shaped (limbs, 1) for broadcasting."""
    return np.array([value % p for p in params.primes], dtype=np.int64)[:, None]


def mul_scalar(a: RingElement, value: int) -> RingElement:
    """Multiply by a (possibly huge) integer scalar, reduced per limb."""
    p_col = _plan(a.params).p_col
    res = (a.residues * scalar_residues(a.params, value)) % p_col
    return RingElement(a.params, res, a.domain)


def crt_lift(a: RingElement) -> list[int]:
    """Centered integer representatives in (-q/2, q/2], one per coefficient."""
    if a.domain != COEFF:
        raise DomainMismatchError("crt_lift needs a coefficient-domain element")
    params = a.params
    q, half = params.q, params.half_q
    consts = _crt_consts(params)
    cols = [((a.residues[j] * inv) % p).tolist() for j, (p, inv, _) in enumerate(consts)]
    qstars = [qstar for _, _, qstar in consts]
    out = []
    for i in range(params.n):
        v = 0
        for col, qstar in zip(cols, qstars):
            v += col[i] * qstar
        v %= q
        if v > half:
            v -= q
        out.append(v)
    return out


_CRT_CACHE: dict[tuple[int, tuple[int, ...]], list[tuple[int, int, int]]] = {}


def _crt_consts(params: RingParams) -> list[tuple[int, int, int]]:
    key = (params.n, params.primes)
    got = _CRT_CACHE.get(key)
    if got is None:
        got = []
        for p in params.primes:
            qstar = params.q // p
            got.append((p, pow(qstar, -1, p), qstar))
        _CRT_CACHE[key] = got
    return got


def inf_norm(coeffs) -> int:
    """Max absolute value over centered coefficients."""
    m = 0
    for c in coeffs:
        a = -c if c < 0 else c
        if a > m:
            m = a
    return m


# ---------------------------------------------------------------------------
# arithmetic


def _check_pair(a: RingElement, b: RingElement, *, same_domain: bool) -> None:
    if a.params != b.params:
        raise ParamsMismatchError("ring parameters differ")
    if same_domain and a.domain != b.domain:
        raise DomainMismatchError(f"domains differ: {a.domain} vs {b.domain}")


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    _check_pair(a, b, same_domain=True)
    p_col = _plan(a.params).p_col
    return RingElement(a.params, (a.residues + b.residues) % p_col, a.domain)


def ring_sub(a: RingElement, b: RingElement) -> RingElement:
    _check_pair(a, b, same_domain=True)
    p_col = _plan(a.params).p_col
    return RingElement(a.params, (a.residues - b.residues) % p_col, a.domain)


def ring_neg(a: RingElement) -> RingElement:
    p_col = _plan(a.params).p_col
    return RingElement(a.params, (-a.residues) % p_col, a.domain)


def to_ntt(a: RingElement) -> RingElement:
    if a.domain == NTT:
        return a
    return RingElement(a.params, ntt.forward(a.residues, _plan(a.params)), NTT)


def from_ntt(a: RingElement) -> RingElement:
    if a.domain == COEFF:
        return a
    return RingElement(a.params, ntt.inverse(a.residues, _plan(a.params)), COEFF)


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    """Negacyclic product, per-prime NTT; result in coefficient domain."""
    _check_pair(a, b, same_domain=False)
    plan = _plan(a.params)
    fa = a.residues if a.domain == NTT else ntt.forward(a.residues, plan)
    fb = b.residues if b.domain == NTT else ntt.forward(b.residues, plan)
    return RingElement(a.params, ntt.inverse(ntt.pointwise(fa, fb, plan), plan), COEFF)


def ring_mul_schoolbook(a: RingElement, b: RingElement) -> RingElement:
    """O(n^2) negacyclic convolution, no transforms; the independent oracle."""
    _check_pair(a, b, same_domain=False)
    if a.domain != COEFF or b.domain != COEFF:
        raise DomainMismatchError("schoolbook path works on coefficient domain")
    n = a.params.n
    rows = []
    for limb, p in enumerate(a.params.primes):
        av = [int(x) for x in a.residues[limb]]
        bv = [int(x) for x in b.residues[limb]]
        acc = [0] * n
        for i in range(n):
            ai = av[i]
            if ai == 0:
                continue
            for j in range(n):
                k = i + j
                if k >= n:
                    acc[k - n] -= ai * bv[j]
                else:
                    acc[k] += ai * bv[j]
        rows.append(np.array([v % p for v in acc], dtype=np.int64))
    return RingElement(a.params, np.stack(rows), COEFF)


# ---------------------------------------------------------------------------
# samplers


def sample_uniform(params: RingParams, rng: Xof) -> RingElement:
    """Each coefficient uniform mod q: big-integer draw, then RNS decomposition."""
    q = params.q
    bits = (q - 1).bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    coeffs = []
    for _ in range(params.n):
        while True:
            v = int.from_bytes(rng.read(nbytes), "little") & mask
            if v < q:
                break
        coeffs.append(v)
    return from_coeffs(params, coeffs)


def sample_ternary(params: RingParams, rng: Xof) -> RingElement:
    """Coefficients uniform in {-1, 0, 1}, stored centered."""
    n = params.n
    vals = np.empty(n, dtype=np.int64)
    filled = 0
    while filled < n:
        raw = rng.bytes_array(n - filled)
        keep = raw[raw < 255]  # 255 = 85 * 3: rejection keeps the map exact
        take = keep[: n - filled].astype(np.int64) % 3 - 1
        vals[filled : filled + take.size] = take
        filled += take.size
    return from_coeffs(params, vals)


def sample_gaussian(params: RingParams, spec: NoiseSpec, rng: Xof) -> RingElement:
    """Rounded Gaussian of std sigma, rejection-resampled until |c| <= bound.

    Rejection (not clamping) keeps the tail shape; the bound check is exact
    against the rational bound.
    """
    n = params.n
    if spec.sigma == 0:
        return zero(params)
    sigma = float(spec.sigma)
    kmax = int(spec.bound)  # floor; integers above this are out of range
    vals = np.empty(n, dtype=np.int64)
    filled = 0
    while filled < n:
        need = n - filled
        u1 = rng.float_open01(need)
        u2 = rng.float_open01(need)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(tau * u2) * sigma
        k = np.rint(z).astype(np.int64)
        keep = k[np.abs(k) <= kmax]
        vals[filled : filled + keep.size] = keep
        filled += keep.size
    return from_coeffs(params, vals)


def sample_smudging(params: RingParams, b_smg, rng: Xof) -> list[int]:
    """Coefficients uniform on the integer interval [-b_smg, b_smg]."""
    b = int(b_smg)
    if b < 0:
        raise ValueError("smudging bound must be >= 0")
    n = params.n
    if b == 0:
        return [0] * n
    width = 2 * b + 1
    bits = (width - 1).bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    out: list[int] = []
    while len(out) < n:
        block = rng.read(nbytes * (n - len(out)))
        for i in range(0, len(block), nbytes):
            v = int.from_bytes(block[i : i + nbytes], "little") & mask
            if v < width:
                out.append(v - b)
    return out
