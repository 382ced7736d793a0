"""Fast Paillier cryptosystem (generator fixed to ``g = 1 + n``).

Randomizers are explicit arguments everywhere: the re-encryption protocol
depends on knowing exactly which ``r`` sits inside each ciphertext, so
nothing here draws one implicitly.

Plaintexts and randomizers are plain ``int``; ciphertexts are
:class:`Ciphertext` values bound to the public key that produced them.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
import os
import secrets
from typing import Optional, Protocol

import gmpy2

from .counters import tally
from .errors import (
    InvalidCiphertextError,
    KeyMismatchError,
    PlaintextRangeError,
    PolicyError,
)

MIN_KEY_BITS = 64
TEST_MODE_MIN_KEY_BITS = 8
MILLER_RABIN_ROUNDS = 64
TEST_MODE_ENV = "HPRE_TEST_MODE"


class RandomSource(Protocol):
    """Anything with the ``random.Random`` integer API; ``secrets.SystemRandom`` by default."""

    def randrange(self, start: int, stop: int = ...) -> int: ...

    def getrandbits(self, k: int) -> int: ...


def default_rng() -> RandomSource:
    return secrets.SystemRandom()


def test_mode_enabled(flag: Optional[bool] = None) -> bool:
    if flag is not None:
        return flag
    return os.environ.get(TEST_MODE_ENV, "") == "1"


def check_key_bits(bits: int, test_mode: Optional[bool] = None) -> None:
    floor = TEST_MODE_MIN_KEY_BITS if test_mode_enabled(test_mode) else MIN_KEY_BITS
    if bits < floor:
        raise PolicyError(
            f"{bits}-bit modulus is below the {floor}-bit minimum"
            + ("" if floor == TEST_MODE_MIN_KEY_BITS else f" (set {TEST_MODE_ENV}=1 for tiny test keys)")
        )


def powmod(base: int, exponent: int, modulus: int) -> int:
    tally("modexps")
    return int(gmpy2.powmod(base, exponent, modulus))


# -- primes -------------------------------------------------------------------

_SMALL_PRIMES = [p for p in range(3, 2000, 2) if all(p % d for d in range(3, int(p**0.5) + 1, 2))]


def is_probable_prime(n: int, rounds: int = MILLER_RABIN_ROUNDS, rng: Optional[RandomSource] = None) -> bool:
    """Miller-Rabin with ``rounds`` random bases after trial division."""
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    rng = rng or default_rng()
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = int(gmpy2.powmod(a, d, n))
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits: int, rng: RandomSource) -> int:
    """Probable prime of exactly ``bits`` bits.

    The top two bits are forced so that the product of two such primes has
    exactly ``2 * bits`` bits. Below 5 bits there is no pair of distinct
    primes with that shape, so only the top bit is forced.
    """
    if bits < 3:
        raise PolicyError("prime size must be at least 3 bits")
    top = (3 << (bits - 2)) if bits >= 5 else (1 << (bits - 1))
    while True:
        candidate = rng.getrandbits(bits) | top | 1
        if is_probable_prime(candidate, rng=rng):
            return candidate


# -- keys ---------------------------------------------------------------------


def key_fingerprint(n: int) -> bytes:
    """16-byte identifier of a modulus; for mismatch detection only."""
    return hashlib.sha256(n.to_bytes((n.bit_length() + 7) // 8, "big")).digest()[:16]


@dataclasses.dataclass(frozen=True)
class PaillierPublicKey:
    n: int
    n_squared: int = dataclasses.field(init=False, repr=False, compare=False)
    g: int = dataclasses.field(init=False, repr=False, compare=False)
    fingerprint: bytes = dataclasses.field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 3 or self.n % 2 == 0:
            raise PolicyError("modulus must be an odd integer >= 3")
        object.__setattr__(self, "n_squared", self.n * self.n)
        object.__setattr__(self, "g", self.n + 1)
        object.__setattr__(self, "fingerprint", key_fingerprint(self.n))

    @property
    def bit_length(self) -> int:
        return self.n.bit_length()

    @property
    def ciphertext_bytes(self) -> int:
        """Fixed serialized width of one ciphertext, ``2 * bit_length`` bits rounded up."""
        return (2 * self.bit_length + 7) // 8

    @property
    def plaintext_bytes(self) -> int:
        return (self.bit_length + 7) // 8


@dataclasses.dataclass(frozen=True)
class PaillierPrivateKey:
    public_key: PaillierPublicKey
    ks: int = dataclasses.field(repr=False)
    ks_inverse: int = dataclasses.field(repr=False)

    def __post_init__(self) -> None:
        n = self.public_key.n
        if math.gcd(self.ks, n) != 1 or self.ks * self.ks_inverse % n != 1:
            raise PolicyError("private exponent is not invertible modulo the public modulus")

    @property
    def fingerprint(self) -> bytes:
        return self.public_key.fingerprint


def keypair_from_primes(p: int, q: int, *, test_mode: Optional[bool] = None) -> tuple[PaillierPublicKey, PaillierPrivateKey]:
    if p == q:
        raise PolicyError("p and q must be distinct")
    if not (is_probable_prime(p) and is_probable_prime(q)):
        raise PolicyError("p and q must both be prime")
    n = p * q
    if not test_mode_enabled(test_mode):
        check_key_bits(n.bit_length(), False)
    ks = (p - 1) * (q - 1)
    if math.gcd(n, ks) != 1:
        raise PolicyError("gcd(pq, (p-1)(q-1)) != 1")
    pk = PaillierPublicKey(n)
    return pk, PaillierPrivateKey(pk, ks, pow(ks, -1, n))


def keygen(
    bits: int, rng: Optional[RandomSource] = None, *, test_mode: Optional[bool] = None
) -> tuple[PaillierPublicKey, PaillierPrivateKey]:
    """Generate a key pair whose modulus has exactly ``bits`` bits."""
    if bits % 2:
        raise PolicyError("key size must be even")
    check_key_bits(bits, test_mode)
    rng = rng or default_rng()
    half = bits // 2
    while True:
        p = random_prime(half, rng)
        q = random_prime(half, rng)
        n = p * q
        if p == q or n.bit_length() != bits or math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        return keypair_from_primes(p, q, test_mode=True)


# -- ciphertexts ----------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Ciphertext:
    public_key: PaillierPublicKey
    value: int

    @property
    def fingerprint(self) -> bytes:
        return self.public_key.fingerprint

    def validate(self) -> "Ciphertext":
        n2 = self.public_key.n_squared
        if not 0 < self.value < n2 or math.gcd(self.value, self.public_key.n) != 1:
            raise InvalidCiphertextError("ciphertext is not an element of Z*_{n^2}")
        return self


def _same_key(c1: Ciphertext, c2: Ciphertext) -> PaillierPublicKey:
    if c1.fingerprint != c2.fingerprint:
        raise KeyMismatchError("ciphertexts were produced under different public keys")
    return c1.public_key


def check_randomizer(pk: PaillierPublicKey, r: int) -> int:
    if not 1 <= r < pk.n or math.gcd(r, pk.n) != 1:
        raise PlaintextRangeError("randomizer must lie in Z*_n")
    return r


def sample_randomizer(pk: PaillierPublicKey, rng: Optional[RandomSource] = None) -> int:
    """Uniform element of Z*_n by rejection sampling."""
    rng = rng or default_rng()
    while True:
        r = rng.randrange(1, pk.n)
        if math.gcd(r, pk.n) == 1:
            return r


def encrypt(pk: PaillierPublicKey, m: int, r: int) -> Ciphertext:
    """``(1 + m n) r^n mod n^2``: one exponentiation, two multiplications."""
    if not 0 <= m < pk.n:
        raise PlaintextRangeError("plaintext must lie in [0, n)")
    check_randomizer(pk, r)
    tally("encryptions")
    n2 = pk.n_squared
    return Ciphertext(pk, (1 + m * pk.n) % n2 * powmod(r, pk.n, n2) % n2)


def decrypt(sk: PaillierPrivateKey, c: Ciphertext) -> int:
    pk = sk.public_key
    if c.fingerprint != pk.fingerprint:
        raise KeyMismatchError("ciphertext was not produced under this private key's public key")
    c.validate()
    tally("decryptions")
    u = powmod(c.value, sk.ks, pk.n_squared)
    return (u - 1) // pk.n * sk.ks_inverse % pk.n


def add(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Ciphertext of ``m1 + m2 mod n`` with randomizer ``r1 r2 mod n``."""
    pk = _same_key(c1, c2)
    tally("hom_mults")
    return Ciphertext(pk, c1.value * c2.value % pk.n_squared)


def scalar_mul(c: Ciphertext, k: int) -> Ciphertext:
    """Ciphertext of ``k m mod n`` with randomizer ``r^k``."""
    if k < 0:
        raise PlaintextRangeError("scalar must be non-negative")
    return Ciphertext(c.public_key, powmod(c.value, k, c.public_key.n_squared))


def ct_invert(c: Ciphertext) -> Ciphertext:
    """Ciphertext of ``-m mod n``."""
    n2 = c.public_key.n_squared
    if math.gcd(c.value, n2) != 1:
        raise InvalidCiphertextError("ciphertext is not invertible modulo n^2")
    tally("inversions")
    return Ciphertext(c.public_key, int(gmpy2.invert(c.value, n2)))
