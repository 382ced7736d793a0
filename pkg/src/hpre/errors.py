"""Exception hierarchy shared by the library and the CLI."""


class HpreError(Exception):
    """Base class for every error raised by this package."""


class PolicyError(HpreError):
    """A parameter violates the configured security policy (e.g. key too small)."""


class KeyMismatchError(HpreError):
    """Two objects that must share a public key do not."""


class InvalidCiphertextError(HpreError):
    """A value is not an element of Z*_{n^2} for the key it claims."""


class PlaintextRangeError(HpreError, ValueError):
    """A plaintext or randomizer lies outside its domain."""


class ProtocolError(HpreError):
    """A protocol phase received inconsistent inputs."""


class BrokenRandomizerChainError(ProtocolError):
    """Two ciphertexts assumed to share a randomizer do not."""


class FormatError(HpreError):
    """A file could not be parsed."""
