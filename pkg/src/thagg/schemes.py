"""Additive BFV and CKKS over the RNS ring, plus fixed-point encoders.

Only additions are supported homomorphically; both schemes share key
generation and encryption shape, sampling encryption randomness u from the
ternary distribution. No slot packing: plaintext coefficients carry values
directly. Decryption tails work on exact rationals after full CRT
reconstruction; nothing in the decrypt path touches floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import ring as rg
from .errors import (
    BoundViolationError,
    CapacityError,
    EncodingOverflowError,
    PlaintextRangeError,
    SecretAccessError,
)
from .exact import ceil_log2, frac, frac_log2, round_half_up, scaled_round
from .ntt import select_primes
from .rng import Xof

BFV = "bfv"
CKKS = "ckks"


@dataclass(frozen=True)
class SchemeParams:
    """Validated parameter set; the single source of truth after setup."""

    scheme: str
    ring: rg.RingParams
    noise: rg.NoiseSpec
    kappa: int                # homomorphic addition capacity
    delta: int                # BFV: floor(q/t); CKKS: power-of-two scale
    t: int | None = None      # BFV plaintext modulus
    eps_inv: int | None = None  # CKKS target inverse error margin


@dataclass(frozen=True)
class SecretKey:
    s: rg.RingElement


@dataclass(frozen=True)
class PublicKey:
    p0: rg.RingElement
    p1: rg.RingElement


@dataclass
class Plaintext:
    """BFV: centered integers mod t. CKKS: rationals plus the scale used."""

    scheme: str
    values: list
    scale: int | None = None
    error_bound: Fraction | None = None
    _encoded: list | None = field(default=None, repr=False)

    def encoded_ints(self) -> list[int]:
        """Ring-level integer coefficients round(scale * value) for CKKS."""
        if self.scheme != CKKS:
            raise PlaintextRangeError("encoded_ints is a CKKS facility")
        if self._encoded is None:
            d = self.scale
            self._encoded = [round_half_up(Fraction(v) * d) for v in self.values]
        return self._encoded


@dataclass
class Ciphertext:
    c0: rg.RingElement
    c1: rg.RingElement
    scheme: str
    adds_consumed: int
    kappa: int


# ---------------------------------------------------------------------------
# setup


def _fail(name: str, lhs: Fraction, rhs: Fraction) -> BoundViolationError:
    if rhs <= 0:
        gap = "right side is not positive"
    else:
        gap = f"short by {frac_log2(lhs / rhs):.2f} bits"
    return BoundViolationError(
        f"{name}: need {float(lhs):.6g} < {float(rhs):.6g}; {gap}")


def setup(scheme: str, n: int, *, sigma, bound=None, t: int | None = None,
          eps_inv: int | None = None, log2_q: int | None = None,
          primes=None, kappa: int = 1, mp_noise_bound=None) -> SchemeParams:
    """Validate a parameter set and pin the RNS basis.

    Correctness preconditions are enforced exactly: the fresh-ciphertext
    bound, the kappa-addition capacity bound, and (when a multiparty
    aggregate-noise bound is supplied by the planner) the threshold variant
    of the same inequality.
    """
    if scheme not in (BFV, CKKS):
        raise ValueError(f"unknown scheme {scheme!r}")
    noise = rg.NoiseSpec.create(frac(sigma), None if bound is None else frac(bound))
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if primes is not None:
        ring_params = rg.RingParams.create(n, tuple(primes))
    else:
        if log2_q is None:
            raise ValueError("need log2_q or an explicit prime list")
        ring_params = rg.RingParams.create(n, select_primes(n, min_bits=log2_q))
    q = ring_params.q
    b = noise.bound
    fresh = (2 * n + 1) * b
    capacity = (kappa + 1) * fresh
    mp = None if mp_noise_bound is None else frac(mp_noise_bound)

    if scheme == BFV:
        if t is None or t < 2:
            raise ValueError("BFV needs plaintext modulus t >= 2")
        if q <= t:
            raise _fail("modulus ordering (t < q)", Fraction(t), Fraction(q))
        rhs = Fraction(q, 2 * t) - Fraction(t, 2)
        if not fresh < rhs:
            raise _fail("fresh decryptability (kappa=1)", fresh, rhs)
        if not capacity < rhs:
            raise _fail(f"addition capacity (kappa={kappa})", capacity, rhs)
        if mp is not None and not mp < rhs:
            raise _fail("multiparty aggregate bound", mp, rhs)
        return SchemeParams(scheme=BFV, ring=ring_params, noise=noise,
                            kappa=kappa, delta=q // t, t=t)

    if eps_inv is None or eps_inv < 1:
        raise ValueError("CKKS needs eps_inv >= 1")
    ref = mp if mp is not None else capacity
    delta = 1 << ceil_log2(ref * eps_inv)
    if delta < 1:
        raise _fail("scale (delta >= 1)", Fraction(delta), Fraction(1))
    rhs = Fraction(q, 2)
    if not delta + capacity < rhs:
        raise _fail(f"message headroom (kappa={kappa})", delta + capacity, rhs)
    if mp is not None and not delta + mp < rhs:
        raise _fail("multiparty message headroom", delta + mp, rhs)
    return SchemeParams(scheme=CKKS, ring=ring_params, noise=noise,
                        kappa=kappa, delta=delta, eps_inv=eps_inv)


# ---------------------------------------------------------------------------
# keys


def seckeygen(params: SchemeParams, rng: Xof) -> SecretKey:
    return SecretKey(rg.sample_ternary(params.ring, rng))


def pubkeygen(params: SchemeParams, sk: SecretKey, rng: Xof, *,
              p1: rg.RingElement | None = None,
              e: rg.RingElement | None = None) -> PublicKey:
    """pk = (-s*p1 + e, p1) with p1 uniform and e from the noise distribution."""
    if p1 is None:
        p1 = rg.sample_uniform(params.ring, rng)
    if e is None:
        e = rg.sample_gaussian(params.ring, params.noise, rng)
    p0 = rg.ring_add(rg.ring_neg(rg.ring_mul(sk.s, p1)), e)
    return PublicKey(p0=p0, p1=p1)


# ---------------------------------------------------------------------------
# plaintext encoders


def bfv_plaintext(params: SchemeParams, values) -> Plaintext:
    t = params.t
    vals = []
    for v in values:
        v = int(v)
        if not (-t < 2 * v <= t):  # centered window (-t/2, t/2]
            raise PlaintextRangeError(f"value {v} outside (-t/2, t/2] for t={t}")
        vals.append(v)
    if len(vals) != params.ring.n:
        raise PlaintextRangeError(f"need exactly n={params.ring.n} values")
    return Plaintext(scheme=BFV, values=vals)


def encode_fixed(values, scale_bits: int, params: SchemeParams) -> Plaintext:
    """Quantize reals onto the grid 2^-scale_bits as BFV plaintext integers.

    Rejects inputs that could wrap mod t once kappa clients' contributions
    are aggregated.
    """
    if params.scheme != BFV:
        raise PlaintextRangeError("fixed-point encoding targets BFV")
    n, t, width = params.ring.n, params.t, params.kappa
    if len(values) != n:
        raise PlaintextRangeError(f"need exactly n={n} values")
    two_p = 1 << scale_bits
    # the wraparound precondition only involves the largest magnitude;
    # float comparisons are exact, so only that one value goes rational
    if all(isinstance(x, float) for x in values):
        biggest = Fraction(max(abs(x) for x in values))
    else:
        biggest = max((abs(frac(x)) for x in values), default=Fraction(0))
    if width * two_p * biggest >= Fraction(t, 2):
        raise EncodingOverflowError(
            f"{width} * 2^{scale_bits} * |{float(biggest):.4g}| >= t/2; "
            "lower scale_bits or raise t")
    out = []
    for x in values:
        if isinstance(x, float):
            out.append(scaled_round(x, scale_bits))
        else:
            out.append(round_half_up(frac(x) * two_p))
    return Plaintext(scheme=BFV, values=out)


def decode_fixed(pt: Plaintext, scale_bits: int, parties: int) -> list[Fraction]:
    """Undo the fixed-point grid and the aggregation width (sum -> average)."""
    den = (1 << scale_bits) * parties
    return [Fraction(v, den) for v in pt.values]


def encode_real(values, params: SchemeParams) -> Plaintext:
    """CKKS coefficient-wise encoding: integer coefficients round(delta * v)."""
    if params.scheme != CKKS:
        raise PlaintextRangeError("real encoding targets CKKS")
    n, d = params.ring.n, params.delta
    if len(values) != n:
        raise PlaintextRangeError(f"need exactly n={n} values")
    shift = d.bit_length() - 1  # delta is a power of two
    vals, enc = [], []
    for x in values:
        if isinstance(x, float):
            vals.append(Fraction(x))
            enc.append(scaled_round(x, shift))
        else:
            fx = frac(x)
            vals.append(fx)
            enc.append(round_half_up(fx * d))
    return Plaintext(scheme=CKKS, values=vals, scale=d, _encoded=enc)


def _message_element(params: SchemeParams, pt: Plaintext) -> rg.RingElement:
    """Delta*m as a ring element, without materializing big integers for BFV."""
    if params.scheme == BFV:
        return rg.mul_scalar(rg.from_coeffs(params.ring, pt.values), params.delta)
    return rg.from_coeffs(params.ring, pt.encoded_ints())


# ---------------------------------------------------------------------------
# encrypt / add / decrypt


def encrypt(params: SchemeParams, pk: PublicKey, pt: Plaintext, rng: Xof, *,
            u: rg.RingElement | None = None,
            e0: rg.RingElement | None = None,
            e1: rg.RingElement | None = None) -> Ciphertext:
    """ct = (delta*m + u*p0 + e0, u*p1 + e1); keyword hooks inject randomness."""
    if pt.scheme != params.scheme:
        raise PlaintextRangeError(
            f"plaintext is {pt.scheme}, params are {params.scheme}")
    msg = _message_element(params, pt)
    if u is None:
        u = rg.sample_ternary(params.ring, rng)
    if e0 is None:
        e0 = rg.sample_gaussian(params.ring, params.noise, rng)
    if e1 is None:
        e1 = rg.sample_gaussian(params.ring, params.noise, rng)
    u_ntt = rg.to_ntt(u)
    c0 = rg.ring_add(rg.ring_add(msg, e0), rg.ring_mul(u_ntt, pk.p0))
    c1 = rg.ring_add(e1, rg.ring_mul(u_ntt, pk.p1))
    return Ciphertext(c0=c0, c1=c1, scheme=params.scheme,
                      adds_consumed=0, kappa=params.kappa)


def add(ct: Ciphertext, other: Ciphertext) -> Ciphertext:
    if ct.scheme != other.scheme:
        raise PlaintextRangeError("cannot add ciphertexts of different schemes")
    spent = ct.adds_consumed + other.adds_consumed + 1
    if spent > ct.kappa:
        raise CapacityError(
            f"{spent} additions exceed capacity kappa={ct.kappa}")
    return Ciphertext(c0=rg.ring_add(ct.c0, other.c0),
                      c1=rg.ring_add(ct.c1, other.c1),
                      scheme=ct.scheme, adds_consumed=spent, kappa=ct.kappa)


def decryption_phase(params: SchemeParams, sk: SecretKey,
                     ct: Ciphertext) -> list[int]:
    """Centered lift of [c0 + c1*s]_q, the shared first decryption stage."""
    return rg.crt_lift(rg.ring_add(ct.c0, rg.ring_mul(ct.c1, sk.s)))


def bfv_round(params: SchemeParams, lifted: list[int]) -> Plaintext:
    """[round_half_up(t*x/q)]_t, exact rational scaling, centered output."""
    t, q = params.t, params.ring.q
    out = []
    for x in lifted:
        m = ((2 * t * x + q) // (2 * q)) % t
        if m > t // 2:
            m -= t
        out.append(m)
    return Plaintext(scheme=BFV, values=out)


def ckks_scale_down(params: SchemeParams, lifted: list[int],
                    noise_bound: Fraction | None = None) -> Plaintext:
    values = [Fraction(x, params.delta) for x in lifted]
    return Plaintext(scheme=CKKS, values=values, scale=params.delta,
                     error_bound=noise_bound, _encoded=list(lifted))


def dec_bfv(params: SchemeParams, sk: SecretKey, ct: Ciphertext) -> Plaintext:
    if ct.scheme != BFV or params.scheme != BFV:
        raise PlaintextRangeError("dec_bfv needs a BFV ciphertext")
    return bfv_round(params, decryption_phase(params, sk, ct))


def dec_ckks(params: SchemeParams, sk: SecretKey, ct: Ciphertext) -> Plaintext:
    if ct.scheme != CKKS or params.scheme != CKKS:
        raise PlaintextRangeError("dec_ckks needs a CKKS ciphertext")
    n = params.ring.n
    bound = Fraction(ct.adds_consumed + 1) * (2 * n + 1) * params.noise.bound
    return ckks_scale_down(params, decryption_phase(params, sk, ct),
                           noise_bound=bound / params.delta)


# ---------------------------------------------------------------------------
# secret-key-gated probe


def noise_of(params: SchemeParams, sk: SecretKey, ct: Ciphertext,
             reference_pt: Plaintext, *, debug: bool = False) -> int:
    """Infinity norm of [c0 + c1*s - delta*m]_q; test facility, opt-in only."""
    if not debug:
        raise SecretAccessError("noise_of reads the secret key; pass debug=True")
    lifted = decryption_phase(params, sk, ct)
    if params.scheme == BFV:
        target = [params.delta * v for v in reference_pt.values]
    else:
        target = reference_pt.encoded_ints()
    q, half = params.ring.q, params.ring.half_q
    worst = 0
    for x, m in zip(lifted, target):
        d = (x - m) % q
        if d > half:
            d -= q
        worst = max(worst, abs(d))
    return worst
