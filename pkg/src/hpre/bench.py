"""Timing and size measurements for a full share of a synthetic image."""
from __future__ import annotations

import statistics
import time
from typing import Any, Optional

from .paillier import RandomSource, default_rng, keygen
from .protocol import (
    DELEGATE,
    DELEGATOR,
    PROXY,
    DataVector,
    ShareAgreement,
    decrypt_data,
    run_share_simulation,
)
from .slcg import DEFAULT_MULTIPLIER


def pick_multiplier(choice: str, key_bits: int, rng: RandomSource) -> int:
    """``"full"`` draws a multiplier as wide as the modulus, otherwise ``choice`` is an integer."""
    if choice == "full":
        return rng.getrandbits(key_bits - 1) | (1 << (key_bits - 2)) | 1
    a = int(choice)
    if a < 1:
        raise ValueError("multiplier must be >= 1")
    return a


def run_trial(
    width: int,
    height: int,
    bits: int,
    multiplier: str = str(DEFAULT_MULTIPLIER),
    rng: Optional[RandomSource] = None,
    *,
    test_mode: Optional[bool] = None,
    verify: bool = True,
) -> dict[str, Any]:
    rng = rng or default_rng()
    t0 = time.perf_counter()
    pk1, _ = keygen(bits, rng, test_mode=test_mode)
    pk2, sk2 = keygen(bits, rng, test_mode=test_mode)
    keygen_s = time.perf_counter() - t0

    n = width * height
    image = DataVector.from_image(width, height, bytes(rng.getrandbits(8) for _ in range(n)))
    agreement = ShareAgreement.random(pk1, pk2, pick_multiplier(multiplier, bits, rng), rng)
    result, transcript = run_share_simulation(image, pk1, pk2, agreement, rng)

    share_msg = next(m for m in transcript.messages if m.sender == DELEGATOR)
    refresh_msg = next(m for m in transcript.messages if m.sender == DELEGATE)
    report = {
        "width": width,
        "height": height,
        "pixels": n,
        "key_bits": bits,
        "multiplier_bits": agreement.multiplier.bit_length(),
        "seconds": {
            "keygen": keygen_s,
            "outsource": transcript.role_time(DELEGATOR, ["outsource"]),
            DELEGATOR: transcript.role_time(DELEGATOR),
            PROXY: transcript.role_time(PROXY),
            DELEGATE: transcript.role_time(DELEGATE),
        },
        "counters": {role: transcript.role_counters(role).as_dict() for role in (DELEGATOR, PROXY, DELEGATE)},
        "bits": {
            "delegator_share_message": share_msg.payload_bytes * 8,
            "delegate_refresh_message": refresh_msg.payload_bytes * 8,
            "proxy_stored_image": transcript.stored_bytes() * 8,
        },
        "messages": len(transcript.messages),
    }
    report["proxy_delegate_time_ratio"] = report["seconds"][PROXY] / report["seconds"][DELEGATE]
    if verify:
        report["verified"] = decrypt_data(sk2, result).values == image.values
    return report


def run_benchmark(
    width: int,
    height: int,
    bits: int,
    trials: int = 1,
    multiplier: str = "full",
    rng: Optional[RandomSource] = None,
    *,
    test_mode: Optional[bool] = None,
) -> dict[str, Any]:
    runs = [run_trial(width, height, bits, multiplier, rng, test_mode=test_mode) for _ in range(trials)]
    mean = {k: statistics.fmean(r["seconds"][k] for r in runs) for k in runs[0]["seconds"]}
    return {
        "trials": runs,
        "mean_seconds": mean,
        "mean_proxy_delegate_time_ratio": statistics.fmean(r["proxy_delegate_time_ratio"] for r in runs),
        "all_verified": all(r.get("verified", True) for r in runs),
    }
