import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpre import KeyMismatchError, PlaintextRangeError, decrypt, encrypt
from hpre.slcg import (
    ClearLcgState,
    LcgParams,
    SecureLcgState,
    clear_next,
    clear_sequence,
    generate_encrypted_sequence,
    randomizer_chain,
    randomizer_next,
    secure_next,
)


def direct_lcg(a, c, m, x0, count):
    xs = [x0]
    while len(xs) < count:
        xs.append((a * xs[-1] + c) % m)
    return xs


def test_identity_recursion_is_constant():
    state = ClearLcgState.start(LcgParams(1, 0, 97, 42))
    for _ in range(10):
        x, state = clear_next(state)
        assert x == 42
    assert state.index == 10


def test_clear_example():
    state = ClearLcgState.start(LcgParams(5, 3, 16, 7))
    x1, state = clear_next(state)
    x2, state = clear_next(state)
    assert (x1, x2) == (6, 1)
    assert clear_sequence(LcgParams(5, 3, 16, 7), 3) == [7, 6, 1]


@pytest.mark.parametrize(
    "args", [(0, 1, 16, 1), (1, 16, 16, 1), (1, 1, 16, 16), (1, -1, 16, 0), (1, 0, 1, 0)]
)
def test_params_validation(args):
    with pytest.raises(PlaintextRangeError):
        LcgParams(*args)


def secure_state(key, x0, incr, a, r0, r_c):
    pk, _ = key
    return SecureLcgState(pk, a, encrypt(pk, incr, r_c), encrypt(pk, x0, r0))


def test_secure_matches_clear_n35(key35):
    pk, sk = key35
    a, c, x0, r0, r_c = 4, 9, 11, 3, 2
    state = secure_state(key35, x0, c, a, r0, r_c)
    clear = ClearLcgState.start(LcgParams(a, c, 35, x0))
    for _ in range(100):
        ct, state = secure_next(state)
        x, clear = clear_next(clear)
        assert decrypt(sk, ct) == x


def test_identity_secure_step_is_noop(key35):
    pk, _ = key35
    state = SecureLcgState(pk, 1, encrypt(pk, 0, 1), encrypt(pk, 6, 2))
    ct, _ = secure_next(state)
    assert ct == state.current


def test_randomizer_next_example():
    assert randomizer_next(2, 3, 3, 35) == 24
    assert randomizer_next(17, 1, 1, 35) == 17


def test_secure_step_equals_encrypt_with_tracked_randomizer(key16):
    pk, _ = key16
    n = pk.n
    a, c, x0, r0, r_c = 16807, 1234, 999, 5, 7
    state = secure_state(key16, x0, c, a, r0, r_c)
    ct, _ = secure_next(state)
    assert ct == encrypt(pk, (a * x0 + c) % n, randomizer_next(r0, r_c, a, n))


def test_generate_sequence(key35):
    pk, sk = key35
    init = secure_state(key35, 12, 5, 6, 4, 9)
    assert generate_encrypted_sequence(init, 1) == [init.current]
    seq = generate_encrypted_sequence(init, 50)
    assert [decrypt(sk, c) for c in seq] == direct_lcg(6, 5, 35, 12, 50)
    assert all(c.fingerprint == pk.fingerprint for c in seq)
    with pytest.raises(PlaintextRangeError):
        generate_encrypted_sequence(init, 0)


def test_secure_state_rejects_foreign_ciphertexts(key35, key16):
    pk, _ = key35
    with pytest.raises(KeyMismatchError):
        SecureLcgState(pk, 3, encrypt(key16[0], 1, 2), encrypt(pk, 1, 2))


def test_secure_state_is_immutable(key35):
    state = secure_state(key35, 1, 1, 2, 2, 3)
    with pytest.raises(dataclasses.FrozenInstanceError):
        state.index = 4
    _, nxt = secure_next(state)
    assert state.index == 0 and nxt.index == 1


N16 = 42173
unit16 = st.integers(1, N16 - 1).filter(lambda r: r % 181 and r % 233)


@settings(max_examples=40, deadline=None)
@given(
    a=st.integers(1, 10**6),
    c=st.integers(0, N16 - 1),
    x0=st.integers(0, N16 - 1),
    r0=unit16,
    r_c=unit16,
)
def test_randomizer_recursion_soundness(key16, a, c, x0, r0, r_c):
    pk, sk = key16
    seq = generate_encrypted_sequence(secure_state(key16, x0, c, a, r0, r_c), 60)
    xs = direct_lcg(a, c, N16, x0, 60)
    rs = randomizer_chain(r0, r_c, a, N16, 60)
    assert seq == [encrypt(pk, x, r) for x, r in zip(xs, rs)]
    assert [decrypt(sk, ct) for ct in seq[:5]] == xs[:5]
