"""On-disk formats. All integers are big-endian.

Public key::

    b"HPPK" | version:u8 | len:u32 | n

Private key::

    b"HPSK" | version:u8 | len:u32 | n | len:u32 | ks | len:u32 | ks_inverse

Encrypted blob (42-byte header, then fixed-width ciphertexts)::

    b"HPEB" | version:u8 | fingerprint:16s | key_bits:u32 | bit_depth:u8
           | width:u32 | height:u32 | count:u64 | count * ceil(2*key_bits/8) bytes

Images are binary PGM (``P5``) with maxval 255. Delegator secrets and share
agreements are small JSON documents with integers in decimal.
"""
from __future__ import annotations

import json
import os
import re
import struct
from pathlib import Path
from typing import Optional, Union

from .errors import FormatError, KeyMismatchError
from .paillier import Ciphertext, PaillierPrivateKey, PaillierPublicKey, check_key_bits
from .protocol import DataVector, EncryptedData, RetainedSecrets, ShareAgreement

FORMAT_VERSION = 1
PUBLIC_MAGIC = b"HPPK"
PRIVATE_MAGIC = b"HPSK"
BLOB_MAGIC = b"HPEB"
BLOB_HEADER = struct.Struct(">4sB16sIBIIQ")

PathLike = Union[str, os.PathLike]


def _int_bytes(x: int) -> bytes:
    raw = x.to_bytes((x.bit_length() + 7) // 8 or 1, "big")
    return struct.pack(">I", len(raw)) + raw


def _read_ints(buf: bytes, offset: int, count: int) -> list[int]:
    out = []
    for _ in range(count):
        if offset + 4 > len(buf):
            raise FormatError("truncated key file")
        (length,) = struct.unpack_from(">I", buf, offset)
        offset += 4
        if offset + length > len(buf):
            raise FormatError("truncated key file")
        out.append(int.from_bytes(buf[offset : offset + length], "big"))
        offset += length
    if offset != len(buf):
        raise FormatError("trailing bytes in key file")
    return out


def _check_header(buf: bytes, magic: bytes, what: str) -> None:
    if len(buf) < 5 or buf[:4] != magic:
        raise FormatError(f"not a {what} file")
    if buf[4] != FORMAT_VERSION:
        raise FormatError(f"unsupported {what} version {buf[4]}")


# -- keys -----------------------------------------------------------------------


def dump_public_key(pk: PaillierPublicKey) -> bytes:
    return PUBLIC_MAGIC + bytes([FORMAT_VERSION]) + _int_bytes(pk.n)


def load_public_key(buf: bytes, *, test_mode: Optional[bool] = None) -> PaillierPublicKey:
    _check_header(buf, PUBLIC_MAGIC, "public key")
    (n,) = _read_ints(buf, 5, 1)
    check_key_bits(n.bit_length(), test_mode)
    return PaillierPublicKey(n)


def dump_private_key(sk: PaillierPrivateKey) -> bytes:
    return (
        PRIVATE_MAGIC
        + bytes([FORMAT_VERSION])
        + _int_bytes(sk.public_key.n)
        + _int_bytes(sk.ks)
        + _int_bytes(sk.ks_inverse)
    )


def load_private_key(buf: bytes, *, test_mode: Optional[bool] = None) -> PaillierPrivateKey:
    _check_header(buf, PRIVATE_MAGIC, "private key")
    n, ks, ks_inverse = _read_ints(buf, 5, 3)
    check_key_bits(n.bit_length(), test_mode)
    return PaillierPrivateKey(PaillierPublicKey(n), ks, ks_inverse)


def write_private(path: PathLike, data: bytes) -> None:
    """Write ``data`` readable by the owner only."""
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "wb") as f:
        f.write(data)
    os.chmod(path, 0o600)


# -- encrypted blobs -----------------------------------------------------------------


def dump_blob(data: EncryptedData) -> bytes:
    pk = data.public_key
    width = pk.ciphertext_bytes
    header = BLOB_HEADER.pack(
        BLOB_MAGIC, FORMAT_VERSION, pk.fingerprint, pk.bit_length, data.bit_depth, data.width, data.height, len(data)
    )
    return header + b"".join(c.value.to_bytes(width, "big") for c in data.ciphertexts)


def peek_blob_fingerprint(buf: bytes) -> bytes:
    if len(buf) < BLOB_HEADER.size:
        raise FormatError("truncated blob header")
    _check_header(buf, BLOB_MAGIC, "encrypted blob")
    return BLOB_HEADER.unpack_from(buf)[2]


def load_blob(buf: bytes, pk: PaillierPublicKey) -> EncryptedData:
    """Parse a blob and bind its ciphertexts to ``pk``, which must match its fingerprint."""
    fingerprint = peek_blob_fingerprint(buf)
    _, _, _, key_bits, bit_depth, w, h, count = BLOB_HEADER.unpack_from(buf)
    if fingerprint != pk.fingerprint:
        raise KeyMismatchError("blob was encrypted under a different key")
    if key_bits != pk.bit_length:
        raise FormatError("blob key size disagrees with its key")
    width = pk.ciphertext_bytes
    if len(buf) != BLOB_HEADER.size + count * width:
        raise FormatError(f"blob size {len(buf)} does not match header + {count} x {width} bytes")
    body = memoryview(buf)[BLOB_HEADER.size :]
    cts = tuple(
        Ciphertext(pk, int.from_bytes(body[i * width : (i + 1) * width], "big")).validate() for i in range(count)
    )
    return EncryptedData(cts, bit_depth, w, h)


def blob_size(count: int, key_bits: int) -> int:
    return BLOB_HEADER.size + count * ((2 * key_bits + 7) // 8)


# -- PGM ---------------------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([0-9]+|P5)")


def parse_pgm(buf: bytes) -> DataVector:
    """Binary ``P5`` greymap with maxval 255."""
    tokens, pos = [], 0
    for _ in range(4):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise FormatError("malformed PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError("only binary PGM (P5) is supported")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError(f"PGM maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive")
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise FormatError("malformed PGM header")
    raster = buf[pos + 1 :]
    if len(raster) != width * height:
        raise FormatError(f"PGM raster has {len(raster)} bytes, expected {width * height}")
    return DataVector.from_image(width, height, raster)


def dump_pgm(image: DataVector) -> bytes:
    if image.bit_depth != 8:
        raise FormatError("PGM output needs 8-bit values")
    return b"P5\n%d %d\n255\n" % (image.width, image.height) + bytes(image.values)


# -- JSON documents ----------------------------------------------------------------------


def dump_secrets(retained: RetainedSecrets, pk: PaillierPublicKey) -> bytes:
    doc = {
        "kind": "hpre-delegator-secrets",
        "fingerprint": pk.fingerprint.hex(),
        "r0": retained.r0,
        "r_c": retained.r_c,
        "multiplier": retained.multiplier,
    }
    return json.dumps(doc, indent=2).encode() + b"\n"


def load_secrets(buf: bytes, pk: PaillierPublicKey) -> RetainedSecrets:
    doc = _load_json(buf, "hpre-delegator-secrets")
    if doc.get("fingerprint") != pk.fingerprint.hex():
        raise KeyMismatchError("secrets file belongs to a different delegator key")
    try:
        return RetainedSecrets(int(doc["r0"]), int(doc["r_c"]), int(doc["multiplier"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad secrets file: {exc}") from exc


def dump_agreement(agreement: ShareAgreement) -> bytes:
    doc = {
        "kind": "hpre-agreement",
        "seed": agreement.seed,
        "increment": agreement.increment,
        "multiplier": agreement.multiplier,
    }
    return json.dumps(doc, indent=2).encode() + b"\n"


def load_agreement(buf: bytes, delegator_key: PaillierPublicKey, delegate_key: PaillierPublicKey) -> ShareAgreement:
    doc = _load_json(buf, "hpre-agreement")
    try:
        return ShareAgreement(int(doc["seed"]), int(doc["increment"]), int(doc["multiplier"]), delegator_key, delegate_key)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad agreement file: {exc}") from exc


def _load_json(buf: bytes, kind: str) -> dict:
    try:
        doc = json.loads(buf)
    except ValueError as exc:
        raise FormatError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != kind:
        raise FormatError(f"expected a {kind} document")
    return doc


def read_bytes(path: PathLike) -> bytes:
    return Path(path).read_bytes()
