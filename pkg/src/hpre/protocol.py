"""Three-party homomorphic proxy re-encryption.

Roles:

* **delegator** owns data outsourced under their key ``pk1``, with pixel
  randomizers chained by the SLCG recursion from ``(r0, r_c, a)``;
* **proxy** stores ciphertexts and does all the heavy lifting, seeing only
  public keys, ciphertexts and blinded residues;
* **delegate** ends up with the data encrypted under their own key ``pk2``.

Share procedure, given an agreement ``(X0, c, a)`` between delegator and delegate:

1. delegator sends ``E1[X0, r0]``, ``E1[c, r_c]`` and ``a`` to the proxy;
2. proxy expands them into ``E1[X_i, r_i]``, which share randomizers with
   the stored ``E1[I_i, r_i]``, and reads off ``D_i = X_i - I_i mod n1``;
3. delegate regenerates ``X_i`` in the clear, draws ``2^b <= beta_i < min(n1, n2)``
   and sends ``E2[beta_i]`` with ``alpha_i = beta_i - X_i mod n1``;
4. proxy forms ``G_i = alpha_i + D_i = beta_i - I_i`` (same residue under
   both moduli thanks to the bound on beta), encrypts it under ``pk2`` and
   returns ``E2[beta_i] * E2[G_i]^-1 = E2[I_i]``.

Proxy-side callables accept no private key; see ``tests/test_acceptance.py``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from contextlib import contextmanager
from typing import Any, Iterator, Optional, Sequence

from .counters import OpCounters, counting, tally
from .diff import encrypted_difference
from .errors import KeyMismatchError, PlaintextRangeError, ProtocolError
from .paillier import (
    Ciphertext,
    PaillierPrivateKey,
    PaillierPublicKey,
    RandomSource,
    add,
    check_randomizer,
    ct_invert,
    decrypt,
    default_rng,
    encrypt,
    sample_randomizer,
)
from .slcg import (
    DEFAULT_MULTIPLIER,
    LcgParams,
    SecureLcgState,
    clear_sequence,
    generate_encrypted_sequence,
    randomizer_chain,
)

DELEGATOR, PROXY, DELEGATE = "delegator", "proxy", "delegate"
SHARE_PHASES = ("initiate", "noise", "differences", "refresh", "reencrypt", "notify")
MAX_BIT_DEPTH = 64


# -- data containers ------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class DataVector:
    values: tuple[int, ...]
    bit_depth: int = 8
    width: Optional[int] = None
    height: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if not 1 <= self.bit_depth <= MAX_BIT_DEPTH:
            raise PlaintextRangeError(f"bit depth must lie in [1, {MAX_BIT_DEPTH}]")
        if not self.values:
            raise PlaintextRangeError("data vector is empty")
        top = 1 << self.bit_depth
        if any(not 0 <= v < top for v in self.values):
            raise PlaintextRangeError(f"value does not fit in {self.bit_depth} bits")
        if self.width is None and self.height is None:
            object.__setattr__(self, "width", len(self.values))
            object.__setattr__(self, "height", 1)
        elif self.width is None or self.height is None:
            raise PlaintextRangeError("give both width and height, or neither")
        if self.width * self.height != len(self.values):
            raise PlaintextRangeError("width * height does not match the number of values")

    @classmethod
    def from_image(cls, width: int, height: int, pixels: bytes) -> "DataVector":
        return cls(tuple(pixels), 8, width, height)

    def __len__(self) -> int:
        return len(self.values)


@dataclasses.dataclass(frozen=True)
class EncryptedData:
    """Ciphertexts of a :class:`DataVector`, all under one public key."""

    ciphertexts: tuple[Ciphertext, ...]
    bit_depth: int
    width: int
    height: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "ciphertexts", tuple(self.ciphertexts))
        if not self.ciphertexts:
            raise PlaintextRangeError("no ciphertexts")
        if self.width * self.height != len(self.ciphertexts):
            raise PlaintextRangeError("width * height does not match the number of ciphertexts")
        fp = self.ciphertexts[0].fingerprint
        if any(c.fingerprint != fp for c in self.ciphertexts):
            raise KeyMismatchError("ciphertexts are under more than one public key")

    @property
    def public_key(self) -> PaillierPublicKey:
        return self.ciphertexts[0].public_key

    @property
    def fingerprint(self) -> bytes:
        return self.public_key.fingerprint

    @property
    def payload_bytes(self) -> int:
        return len(self.ciphertexts) * self.public_key.ciphertext_bytes

    def digest(self) -> bytes:
        width = self.public_key.ciphertext_bytes
        h = hashlib.sha256(self.fingerprint)
        for c in self.ciphertexts:
            h.update(c.value.to_bytes(width, "big"))
        return h.digest()

    def __len__(self) -> int:
        return len(self.ciphertexts)


# Data at rest under the delegator key, and the share result under the delegate key.
OutsourcedData = EncryptedData
ReEncryptedData = EncryptedData


@dataclasses.dataclass(frozen=True)
class RetainedSecrets:
    """What the delegator keeps per outsourced object instead of every randomizer."""

    r0: int = dataclasses.field(repr=False)
    r_c: int = dataclasses.field(repr=False)
    multiplier: int


@dataclasses.dataclass(frozen=True)
class ShareAgreement:
    """LCG parameters agreed out of band; seed and increment are secret."""

    seed: int = dataclasses.field(repr=False)
    increment: int = dataclasses.field(repr=False)
    multiplier: int
    delegator_key: PaillierPublicKey
    delegate_key: PaillierPublicKey

    def __post_init__(self) -> None:
        n1 = self.delegator_key.n
        if not (0 <= self.seed < n1 and 0 <= self.increment < n1):
            raise PlaintextRangeError("seed and increment must lie in [0, n1)")
        if self.multiplier < 1:
            raise PlaintextRangeError("multiplier must be >= 1")

    @classmethod
    def random(
        cls,
        delegator_key: PaillierPublicKey,
        delegate_key: PaillierPublicKey,
        multiplier: int = DEFAULT_MULTIPLIER,
        rng: Optional[RandomSource] = None,
    ) -> "ShareAgreement":
        rng = rng or default_rng()
        n1 = delegator_key.n
        return cls(rng.randrange(0, n1), rng.randrange(0, n1), multiplier, delegator_key, delegate_key)

    @property
    def lcg_params(self) -> LcgParams:
        return LcgParams(self.multiplier, self.increment, self.delegator_key.n, self.seed)


@dataclasses.dataclass(frozen=True)
class DelegatorShareMessage:
    encrypted_seed: Ciphertext
    encrypted_increment: Ciphertext
    multiplier: int

    @property
    def payload_bytes(self) -> int:
        ct = self.encrypted_seed.public_key.ciphertext_bytes
        return 2 * ct + (self.multiplier.bit_length() + 7) // 8


@dataclasses.dataclass(frozen=True)
class DelegateRefreshMessage:
    encrypted_betas: tuple[Ciphertext, ...]
    alphas: tuple[int, ...]
    delegator_key: PaillierPublicKey

    @property
    def payload_bytes(self) -> int:
        n = len(self.alphas)
        return n * self.encrypted_betas[0].public_key.ciphertext_bytes + n * self.delegator_key.plaintext_bytes


@dataclasses.dataclass(frozen=True)
class ResultNotification:
    """Proxy tells the delegate that the re-encrypted object is ready."""

    fingerprint: bytes
    count: int

    @property
    def payload_bytes(self) -> int:
        return len(self.fingerprint) + 8


# -- role operations --------------------------------------------------------------


def delegator_outsource(
    data: DataVector, pk1: PaillierPublicKey, r0: int, r_c: int, a: int = DEFAULT_MULTIPLIER
) -> tuple[EncryptedData, RetainedSecrets]:
    """Encrypt ``data`` with randomizers ``r_{i+1} = r_i^a r_c mod n1``."""
    check_randomizer(pk1, r0)
    check_randomizer(pk1, r_c)
    if a < 1:
        raise PlaintextRangeError("multiplier must be >= 1")
    rs = randomizer_chain(r0, r_c, a, pk1.n, len(data))
    cts = [encrypt(pk1, v, r) for v, r in zip(data.values, rs)]
    return EncryptedData(tuple(cts), data.bit_depth, data.width, data.height), RetainedSecrets(r0, r_c, a)


def delegator_initiate_share(agreement: ShareAgreement, retained: RetainedSecrets) -> DelegatorShareMessage:
    if retained is None:
        raise ProtocolError("the outsourcing randomizers (r0, r_c) are required to start a share")
    if retained.multiplier != agreement.multiplier:
        raise ProtocolError("agreement multiplier differs from the one used to chain the outsourced randomizers")
    pk1 = agreement.delegator_key
    return DelegatorShareMessage(
        encrypt(pk1, agreement.seed, retained.r0),
        encrypt(pk1, agreement.increment, retained.r_c),
        agreement.multiplier,
    )


def recover_randomizer(sk: PaillierPrivateKey, c: Ciphertext, m: int) -> int:
    """The ``r`` with ``encrypt(pk, m, r) == c``; needs the private key."""
    pk = sk.public_key
    if decrypt(sk, c) != m:
        raise ProtocolError("ciphertext does not decrypt to the claimed plaintext")
    n, n2 = pk.n, pk.n_squared
    # c / (1 + m n) = r^n mod n^2, and n is invertible modulo phi(n) = ks
    u = c.value * pow(1 + m * n, -1, n2) % n2
    return pow(u % n, pow(n, -1, sk.ks), n)


def delegator_recover_randomizers(
    sk1: PaillierPrivateKey,
    encrypted_seed: Ciphertext,
    encrypted_increment: Ciphertext,
    seed: int,
    increment: int,
) -> tuple[int, int]:
    """Rebuild ``(r0, r_c)`` from the seed and increment ciphertexts."""
    return recover_randomizer(sk1, encrypted_seed, seed), recover_randomizer(sk1, encrypted_increment, increment)


def proxy_generate_noise(msg: DelegatorShareMessage, count: int) -> list[Ciphertext]:
    pk1 = msg.encrypted_seed.public_key
    state = SecureLcgState(pk1, msg.multiplier, msg.encrypted_increment, msg.encrypted_seed)
    return generate_encrypted_sequence(state, count)


def proxy_compute_differences(noise: Sequence[Ciphertext], data: EncryptedData) -> list[int]:
    """``D_i = X_i - I_i mod n1`` from ``E1[X_i, r_i]`` and ``E1[I_i, r_i]``."""
    if len(noise) != len(data):
        raise ProtocolError(f"noise has {len(noise)} terms but the data has {len(data)}")
    pk1 = data.public_key
    return [encrypted_difference(pk1, x, i) for x, i in zip(noise, data.ciphertexts)]


def beta_bounds(pk1: PaillierPublicKey, pk2: PaillierPublicKey, bit_depth: int) -> tuple[int, int]:
    """Half-open range ``[2^b, min(n1, n2))`` for the refresh noise."""
    lo, hi = 1 << bit_depth, min(pk1.n, pk2.n)
    if hi <= lo:
        raise ProtocolError(f"min(n1, n2) = {hi} leaves no room for {bit_depth}-bit values")
    return lo, hi


def delegate_prepare_refresh(
    agreement: ShareAgreement, count: int, bit_depth: int, rng: Optional[RandomSource] = None
) -> DelegateRefreshMessage:
    rng = rng or default_rng()
    pk1, pk2 = agreement.delegator_key, agreement.delegate_key
    lo, hi = beta_bounds(pk1, pk2, bit_depth)
    xs = clear_sequence(agreement.lcg_params, count)
    betas = [rng.randrange(lo, hi) for _ in range(count)]
    alphas = tuple((b - x) % pk1.n for b, x in zip(betas, xs))
    tally("clear_additions", count)
    enc = tuple(encrypt(pk2, b, sample_randomizer(pk2, rng)) for b in betas)
    return DelegateRefreshMessage(enc, alphas, pk1)


def proxy_refresh_and_reencrypt(
    differences: Sequence[int],
    refresh: DelegateRefreshMessage,
    source: EncryptedData,
    pk2: PaillierPublicKey,
    rng: Optional[RandomSource] = None,
) -> EncryptedData:
    """Swap the LCG mask for the delegate's and strip it under ``pk2``."""
    rng = rng or default_rng()
    n = len(source)
    if not len(differences) == len(refresh.alphas) == len(refresh.encrypted_betas) == n:
        raise ProtocolError("refresh message length does not match the shared object")
    if refresh.delegator_key.fingerprint != source.fingerprint:
        raise KeyMismatchError("refresh message was prepared for another delegator key")
    n1 = source.public_key.n
    out = []
    for d, alpha, enc_beta in zip(differences, refresh.alphas, refresh.encrypted_betas):
        if enc_beta.fingerprint != pk2.fingerprint:
            raise KeyMismatchError("refresh ciphertext is not under the delegate key")
        g = (alpha + d) % n1
        tally("clear_additions")
        if g >= pk2.n:
            raise ProtocolError("refreshed residue exceeds the delegate modulus")
        enc_g = encrypt(pk2, g, sample_randomizer(pk2, rng))
        out.append(add(enc_beta, ct_invert(enc_g)))
    return EncryptedData(tuple(out), source.bit_depth, source.width, source.height)


def decrypt_data(sk: PaillierPrivateKey, data: EncryptedData) -> DataVector:
    top = 1 << data.bit_depth
    values = [decrypt(sk, c) for c in data.ciphertexts]
    if any(v >= top for v in values):
        raise ProtocolError(f"decrypted value does not fit in {data.bit_depth} bits")
    return DataVector(tuple(values), data.bit_depth, data.width, data.height)


# -- roles ----------------------------------------------------------------------------


class Delegator:
    """Data owner; remembers ``(r0, r_c, a)`` per outsourced object."""

    def __init__(self, public_key: PaillierPublicKey, rng: Optional[RandomSource] = None):
        self.public_key = public_key
        self.rng = rng or default_rng()
        self._retained: dict[bytes, RetainedSecrets] = {}
        self._agreements: dict[tuple[int, int], bytes] = {}

    def outsource(self, data: DataVector, multiplier: int = DEFAULT_MULTIPLIER) -> EncryptedData:
        r0 = sample_randomizer(self.public_key, self.rng)
        r_c = sample_randomizer(self.public_key, self.rng)
        outsourced, retained = delegator_outsource(data, self.public_key, r0, r_c, multiplier)
        self._retained[outsourced.digest()] = retained
        return outsourced

    def adopt(self, outsourced: EncryptedData, retained: RetainedSecrets) -> None:
        if outsourced.fingerprint != self.public_key.fingerprint:
            raise KeyMismatchError("object was not outsourced under this delegator's key")
        self._retained[outsourced.digest()] = retained

    def initiate_share(self, agreement: ShareAgreement, outsourced: EncryptedData) -> DelegatorShareMessage:
        if agreement.delegator_key.fingerprint != outsourced.fingerprint:
            raise KeyMismatchError("agreement names a different delegator key than the object's")
        digest = outsourced.digest()
        retained = self._retained.get(digest)
        if retained is None:
            raise ProtocolError("no retained randomizers for this object")
        # a seed/increment pair masks exactly one object; reuse would repeat the pad
        used = self._agreements.setdefault((agreement.seed, agreement.increment), digest)
        if used != digest:
            raise ProtocolError("this agreement was already used to share a different object")
        return delegator_initiate_share(agreement, retained)


class Proxy:
    """Semi-honest cloud: public keys, ciphertexts and blinded residues only."""

    def __init__(self, rng: Optional[RandomSource] = None):
        self.rng = rng or default_rng()
        self.storage: dict[bytes, EncryptedData] = {}

    def store(self, data: EncryptedData) -> bytes:
        digest = data.digest()
        self.storage[digest] = data
        return digest

    def generate_noise(self, msg: DelegatorShareMessage, data: EncryptedData) -> list[Ciphertext]:
        if msg.encrypted_seed.fingerprint != data.fingerprint:
            raise KeyMismatchError("share message and stored object use different keys")
        return proxy_generate_noise(msg, len(data))

    def compute_differences(self, noise: Sequence[Ciphertext], data: EncryptedData) -> list[int]:
        return proxy_compute_differences(noise, data)

    def refresh_and_reencrypt(
        self,
        differences: Sequence[int],
        refresh: DelegateRefreshMessage,
        source: EncryptedData,
        pk2: PaillierPublicKey,
    ) -> EncryptedData:
        result = proxy_refresh_and_reencrypt(differences, refresh, source, pk2, self.rng)
        self.store(result)
        return result


class Delegate:
    def __init__(self, public_key: PaillierPublicKey, rng: Optional[RandomSource] = None):
        self.public_key = public_key
        self.rng = rng or default_rng()

    def prepare_refresh(self, agreement: ShareAgreement, count: int, bit_depth: int) -> DelegateRefreshMessage:
        if agreement.delegate_key.fingerprint != self.public_key.fingerprint:
            raise KeyMismatchError("agreement names a different delegate key")
        return delegate_prepare_refresh(agreement, count, bit_depth, self.rng)


# -- transcript -------------------------------------------------------------------------


@dataclasses.dataclass
class TranscriptEntry:
    kind: str  # "message", "store" or "counters"
    phase: str
    sender: Optional[str] = None
    receiver: Optional[str] = None
    name: Optional[str] = None
    payload_bytes: int = 0
    counters: Optional[dict[str, int]] = None
    payload: Any = dataclasses.field(default=None, repr=False)

    def record(self) -> dict[str, Any]:
        rec = {"kind": self.kind, "phase": self.phase}
        if self.kind == "counters":
            rec.update(role=self.sender, counters=self.counters)
        else:
            rec.update(sender=self.sender, receiver=self.receiver, name=self.name, payload_bytes=self.payload_bytes)
        return rec


@dataclasses.dataclass
class ProtocolTranscript:
    entries: list[TranscriptEntry] = dataclasses.field(default_factory=list)
    counters: dict[tuple[str, str], OpCounters] = dataclasses.field(default_factory=dict)
    timings: dict[tuple[str, str], float] = dataclasses.field(default_factory=dict)

    @contextmanager
    def acting(self, role: str, phase: str) -> Iterator[OpCounters]:
        """Attribute the operations and wall time of the block to ``role`` in ``phase``."""
        ops = self.counters.setdefault((role, phase), OpCounters())
        start = time.perf_counter()
        with counting(ops):
            yield ops
        self.timings[(role, phase)] = self.timings.get((role, phase), 0.0) + time.perf_counter() - start
        self.entries.append(TranscriptEntry("counters", phase, sender=role, counters=ops.as_dict()))

    def send(self, phase: str, sender: str, receiver: str, message: Any) -> None:
        self.entries.append(
            TranscriptEntry(
                "message", phase, sender, receiver, type(message).__name__, message.payload_bytes, payload=message
            )
        )

    def store(self, phase: str, role: str, data: EncryptedData) -> None:
        self.entries.append(TranscriptEntry("store", phase, role, role, "EncryptedData", data.payload_bytes))

    @property
    def messages(self) -> list[TranscriptEntry]:
        return [e for e in self.entries if e.kind == "message"]

    def role_counters(self, role: str, phases: Sequence[str] = SHARE_PHASES) -> OpCounters:
        total = OpCounters()
        for (r, p), ops in self.counters.items():
            if r == role and p in phases:
                total += ops
        return total

    def role_time(self, role: str, phases: Sequence[str] = SHARE_PHASES) -> float:
        return sum(t for (r, p), t in self.timings.items() if r == role and p in phases)

    def stored_bytes(self, role: str = PROXY, phase: str = "outsource") -> int:
        return sum(e.payload_bytes for e in self.entries if e.kind == "store" and e.sender == role and e.phase == phase)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.record(), sort_keys=True) + "\n" for e in self.entries)


# -- simulation ------------------------------------------------------------------------


def run_share(
    delegator: Delegator,
    proxy: Proxy,
    delegate: Delegate,
    outsourced: EncryptedData,
    agreement: ShareAgreement,
    transcript: Optional[ProtocolTranscript] = None,
) -> tuple[EncryptedData, ProtocolTranscript]:
    """Share an already outsourced object from ``delegator`` to ``delegate`` through ``proxy``."""
    t = transcript if transcript is not None else ProtocolTranscript()
    n, bits = len(outsourced), outsourced.bit_depth
    beta_bounds(agreement.delegator_key, agreement.delegate_key, bits)
    if outsourced.digest() not in proxy.storage:
        raise ProtocolError("proxy does not hold the object to share")

    with t.acting(DELEGATOR, "initiate"):
        share_msg = delegator.initiate_share(agreement, outsourced)
    t.send("initiate", DELEGATOR, PROXY, share_msg)

    with t.acting(PROXY, "noise"):
        noise = proxy.generate_noise(share_msg, outsourced)
    with t.acting(PROXY, "differences"):
        diffs = proxy.compute_differences(noise, outsourced)

    with t.acting(DELEGATE, "refresh"):
        refresh = delegate.prepare_refresh(agreement, n, bits)
    t.send("refresh", DELEGATE, PROXY, refresh)

    with t.acting(PROXY, "reencrypt"):
        result = proxy.refresh_and_reencrypt(diffs, refresh, outsourced, agreement.delegate_key)
    t.store("reencrypt", PROXY, result)
    t.send("notify", PROXY, DELEGATE, ResultNotification(result.fingerprint, len(result)))
    return result, t


def run_share_simulation(
    data: DataVector,
    delegator_key: PaillierPublicKey,
    delegate_key: PaillierPublicKey,
    agreement: ShareAgreement,
    rng: Optional[RandomSource] = None,
) -> tuple[EncryptedData, ProtocolTranscript]:
    """Outsource ``data`` under the delegator key, then share it with the delegate."""
    rng = rng or default_rng()
    if agreement.delegator_key != delegator_key or agreement.delegate_key != delegate_key:
        raise KeyMismatchError("agreement keys do not match the participants")
    delegator, proxy, delegate = Delegator(delegator_key, rng), Proxy(rng), Delegate(delegate_key, rng)
    t = ProtocolTranscript()
    with t.acting(DELEGATOR, "outsource"):
        outsourced = delegator.outsource(data, agreement.multiplier)
    proxy.store(outsourced)
    t.store("outsource", PROXY, outsourced)
    return run_share(delegator, proxy, delegate, outsourced, agreement, t)
