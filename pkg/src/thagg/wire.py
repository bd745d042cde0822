"""Binary wire formats.

Ciphertext: magic "THAG", version u16, scheme tag u8, n u32, prime count
u8, primes as u64 list, then c0 then c1 as little-endian u64 residues in
prime-major coefficient-minor order, and adds_consumed u32.

Protocol shares reuse the ring-element block of that format, prefixed by a
one-byte message-kind tag and a u16 party index.

All integers are little-endian; elements are serialized in coefficient
domain.
"""

from __future__ import annotations

import struct

import numpy as np

from . import ring as rg
from .errors import WireFormatError
from .schemes import BFV, CKKS, Ciphertext, SchemeParams
from .threshold import PartialDecryption, PkShare

MAGIC = b"THAG"
VERSION = 1

SCHEME_TAGS = {BFV: 1, CKKS: 2}
TAG_SCHEMES = {v: k for k, v in SCHEME_TAGS.items()}

KIND_PK_SHARE = 1
KIND_PARTIAL_DEC = 2


def _element_header(params: rg.RingParams) -> bytes:
    return struct.pack("<IB", params.n, len(params.primes)) + struct.pack(
        f"<{len(params.primes)}Q", *params.primes)


def _residue_block(el: rg.RingElement) -> bytes:
    if el.domain != rg.COEFF:
        el = rg.from_ntt(el)
    return el.residues.astype("<u8").tobytes()


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise WireFormatError("message truncated")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def done(self) -> None:
        if self.pos != len(self.blob):
            raise WireFormatError("trailing bytes in message")


def _read_element_header(rd: _Reader) -> rg.RingParams:
    n, count = rd.unpack("<IB")
    primes = rd.unpack(f"<{count}Q")
    try:
        return rg.RingParams.create(n, primes)
    except ValueError as exc:
        raise WireFormatError(f"bad ring header: {exc}") from exc


def _read_residues(rd: _Reader, params: rg.RingParams) -> rg.RingElement:
    count, n = len(params.primes), params.n
    raw = rd.take(8 * count * n)
    res = np.frombuffer(raw, dtype="<u8").astype(np.int64).reshape(count, n)
    for j, p in enumerate(params.primes):
        if (res[j] >= p).any():
            raise WireFormatError(f"residue out of range for prime {p}")
    return rg.RingElement(params, res, rg.COEFF)


def _check_ring(params: rg.RingParams, expected: SchemeParams | None) -> None:
    if expected is not None and params != expected.ring:
        raise WireFormatError("ring parameters do not match receiver's")


def serialize_ciphertext(ct: Ciphertext) -> bytes:
    params = ct.c0.params
    head = MAGIC + struct.pack("<HB", VERSION, SCHEME_TAGS[ct.scheme])
    return (head + _element_header(params) + _residue_block(ct.c0)
            + _residue_block(ct.c1) + struct.pack("<I", ct.adds_consumed))


def deserialize_ciphertext(blob: bytes, expected: SchemeParams) -> Ciphertext:
    rd = _Reader(blob)
    if rd.take(4) != MAGIC:
        raise WireFormatError("bad magic")
    version, tag = rd.unpack("<HB")
    if version != VERSION:
        raise WireFormatError(f"unsupported version {version}")
    if tag not in TAG_SCHEMES:
        raise WireFormatError(f"unknown scheme tag {tag}")
    scheme = TAG_SCHEMES[tag]
    if scheme != expected.scheme:
        raise WireFormatError(
            f"ciphertext is {scheme}, receiver expects {expected.scheme}")
    params = _read_element_header(rd)
    _check_ring(params, expected)
    c0 = _read_residues(rd, params)
    c1 = _read_residues(rd, params)
    (adds,) = rd.unpack("<I")
    rd.done()
    return Ciphertext(c0=c0, c1=c1, scheme=scheme, adds_consumed=adds,
                      kappa=expected.kappa)


def _serialize_share(kind: int, index: int, el: rg.RingElement) -> bytes:
    return (struct.pack("<BH", kind, index) + _element_header(el.params)
            + _residue_block(el))


def serialize_pk_share(share: PkShare) -> bytes:
    return _serialize_share(KIND_PK_SHARE, share.index, share.p0)


def serialize_partial_dec(part: PartialDecryption) -> bytes:
    return _serialize_share(KIND_PARTIAL_DEC, part.index, part.h)


def _deserialize_share(blob: bytes, want_kind: int,
                       expected: SchemeParams | None):
    rd = _Reader(blob)
    kind, index = rd.unpack("<BH")
    if kind != want_kind:
        raise WireFormatError(f"message kind {kind}, expected {want_kind}")
    params = _read_element_header(rd)
    _check_ring(params, expected)
    el = _read_residues(rd, params)
    rd.done()
    return index, el


def deserialize_pk_share(blob: bytes, expected: SchemeParams) -> PkShare:
    index, el = _deserialize_share(blob, KIND_PK_SHARE, expected)
    return PkShare(index=index, p0=el)


def deserialize_partial_dec(blob: bytes,
                            expected: SchemeParams) -> PartialDecryption:
    index, el = _deserialize_share(blob, KIND_PARTIAL_DEC, expected)
    return PartialDecryption(index=index, h=el)
