"""Linear congruential generator, in the clear and over Paillier ciphertexts.

Clear:      X_{n+1} = a X_n + c  mod m
Encrypted:  E[X_{n+1}] = E[X_n]^a * E[c]      (m is the Paillier modulus)

The encrypted step also advances the hidden randomizer as
``r_{n+1} = r_n^a r_c mod n``; :func:`randomizer_next` reproduces that
recursion so a key owner can encrypt data whose randomizers line up with
the generator's output term by term.
"""
from __future__ import annotations

import dataclasses

from .counters import tally
from .errors import KeyMismatchError, PlaintextRangeError
from .paillier import Ciphertext, PaillierPublicKey, add, powmod, scalar_mul

DEFAULT_MULTIPLIER = 16807


@dataclasses.dataclass(frozen=True)
class LcgParams:
    multiplier: int
    increment: int
    modulus: int
    seed: int

    def __post_init__(self) -> None:
        if self.multiplier < 1:
            raise PlaintextRangeError("LCG multiplier must be >= 1")
        if self.modulus < 2:
            raise PlaintextRangeError("LCG modulus must be >= 2")
        if not 0 <= self.increment < self.modulus:
            raise PlaintextRangeError("LCG increment must lie in [0, m)")
        if not 0 <= self.seed < self.modulus:
            raise PlaintextRangeError("LCG seed must lie in [0, m)")


@dataclasses.dataclass(frozen=True)
class ClearLcgState:
    params: LcgParams
    current: int
    index: int = 0

    @classmethod
    def start(cls, params: LcgParams) -> "ClearLcgState":
        return cls(params, params.seed, 0)


def clear_next(state: ClearLcgState) -> tuple[int, ClearLcgState]:
    p = state.params
    x = (p.multiplier * state.current + p.increment) % p.modulus
    return x, ClearLcgState(p, x, state.index + 1)


def clear_sequence(params: LcgParams, count: int) -> list[int]:
    """Terms X_0 .. X_{count-1}; term 0 is the seed."""
    out = [params.seed]
    x = params.seed
    a, c, m = params.multiplier, params.increment, params.modulus
    for _ in range(count - 1):
        x = (a * x + c) % m
        out.append(x)
    return out[:count]


@dataclasses.dataclass(frozen=True)
class SecureLcgState:
    public_key: PaillierPublicKey
    multiplier: int
    encrypted_increment: Ciphertext
    current: Ciphertext
    index: int = 0

    def __post_init__(self) -> None:
        if self.multiplier < 1:
            raise PlaintextRangeError("LCG multiplier must be >= 1")
        fp = self.public_key.fingerprint
        if self.encrypted_increment.fingerprint != fp or self.current.fingerprint != fp:
            raise KeyMismatchError("SLCG ciphertexts must be under the generator's public key")


def secure_next(state: SecureLcgState) -> tuple[Ciphertext, SecureLcgState]:
    tally("secure_steps")
    nxt = add(scalar_mul(state.current, state.multiplier), state.encrypted_increment)
    return nxt, dataclasses.replace(state, current=nxt, index=state.index + 1)


def randomizer_next(r_n: int, r_c: int, a: int, n: int) -> int:
    return powmod(r_n, a, n) * r_c % n


def randomizer_chain(r0: int, r_c: int, a: int, n: int, count: int) -> list[int]:
    """r_0 .. r_{count-1} under the SLCG randomizer recursion."""
    out = [r0]
    for _ in range(count - 1):
        out.append(randomizer_next(out[-1], r_c, a, n))
    return out[:count]


def generate_encrypted_sequence(init: SecureLcgState, count: int) -> list[Ciphertext]:
    """E[X_0, r_0] .. E[X_{count-1}, r_{count-1}]; element 0 is ``init.current`` as given."""
    if count < 1:
        raise PlaintextRangeError("sequence length must be >= 1")
    out = [init.current]
    state = init
    for _ in range(count - 1):
        ct, state = secure_next(state)
        out.append(ct)
    return out
