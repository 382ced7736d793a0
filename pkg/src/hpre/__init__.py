"""Homomorphic proxy re-encryption over the fast Paillier cryptosystem."""
from .counters import OpCounters, counting
from .diff import encrypted_difference
from .errors import (
    BrokenRandomizerChainError,
    FormatError,
    HpreError,
    InvalidCiphertextError,
    KeyMismatchError,
    PlaintextRangeError,
    PolicyError,
    ProtocolError,
)
from .paillier import (
    Ciphertext,
    PaillierPrivateKey,
    PaillierPublicKey,
    add,
    ct_invert,
    decrypt,
    encrypt,
    keygen,
    keypair_from_primes,
    sample_randomizer,
    scalar_mul,
)
from .protocol import (
    DataVector,
    Delegate,
    DelegateRefreshMessage,
    Delegator,
    DelegatorShareMessage,
    EncryptedData,
    ProtocolTranscript,
    Proxy,
    RetainedSecrets,
    ShareAgreement,
    decrypt_data,
    run_share,
    run_share_simulation,
)

__version__ = "0.1.0"
