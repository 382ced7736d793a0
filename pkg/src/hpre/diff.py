"""Clear difference of two plaintexts from their ciphertexts, without any private key.

When ``c_a = E[a, r]`` and ``c_b = E[b, r]`` share a randomizer, the
randomizer factors cancel in ``c_a / c_b`` and what remains is
``(1 + n)^(a - b) = 1 + (a - b) n mod n^2``, from which ``a - b mod n``
is read off directly.
"""
from __future__ import annotations

import gmpy2

from .counters import tally
from .errors import BrokenRandomizerChainError, InvalidCiphertextError, KeyMismatchError
from .paillier import Ciphertext, PaillierPublicKey


def encrypted_difference(pk: PaillierPublicKey, c_a: Ciphertext, c_b: Ciphertext) -> int:
    """Return ``a - b mod n`` given ``E[a, r]`` and ``E[b, r]``.

    The shared-randomizer precondition cannot be verified by the caller. A
    quotient that is not ``1 mod n`` proves it was violated and raises
    :class:`BrokenRandomizerChainError`; the converse does not hold.
    """
    if c_a.fingerprint != pk.fingerprint or c_b.fingerprint != pk.fingerprint:
        raise KeyMismatchError("both ciphertexts must be under the given public key")
    n, n2 = pk.n, pk.n_squared
    if not gmpy2.gcd(c_b.value, n2) == 1:
        raise InvalidCiphertextError("subtrahend ciphertext is not invertible modulo n^2")
    tally("inversions")
    tally("hom_mults")
    tally("differences")
    quotient = c_a.value * int(gmpy2.invert(c_b.value, n2)) % n2
    d, rest = divmod(quotient - 1, n)
    if rest:
        raise BrokenRandomizerChainError("ciphertexts do not share a randomizer")
    return d % n
