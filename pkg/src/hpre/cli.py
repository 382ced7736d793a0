"""``hpre`` command line: keys, image encryption, sharing, decryption, benchmark."""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import formats
from .bench import pick_multiplier, run_benchmark
from .errors import (
    FormatError,
    HpreError,
    InvalidCiphertextError,
    KeyMismatchError,
    PlaintextRangeError,
    PolicyError,
)
from .paillier import RandomSource, default_rng, keygen, sample_randomizer, test_mode_enabled
from .protocol import (
    Delegate,
    Delegator,
    Proxy,
    ShareAgreement,
    decrypt_data,
    delegator_outsource,
    run_share,
)
from .slcg import DEFAULT_MULTIPLIER

log = logging.getLogger("hpre")

EXIT_OK = 0
EXIT_IO = 3
EXIT_KEY_MISMATCH = 4
EXIT_PROTOCOL = 5
EXIT_POLICY = 6
EXIT_FORMAT = 7


def _rng(args: argparse.Namespace) -> RandomSource:
    # seeded generators are for reproducible experiments only
    if getattr(args, "seed_material", None) is not None:
        return random.Random(args.seed_material)
    return default_rng()


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def cmd_keygen(args: argparse.Namespace) -> int:
    pk, sk = keygen(args.bits, _rng(args), test_mode=args.test_mode)
    Path(args.out_public).write_bytes(formats.dump_public_key(pk))
    formats.write_private(args.out_private, formats.dump_private_key(sk))
    print(pk.fingerprint.hex())
    return EXIT_OK


def cmd_agree(args: argparse.Namespace) -> int:
    rng = _rng(args)
    pk1 = formats.load_public_key(_read(args.delegator_public_key), test_mode=args.test_mode)
    pk2 = formats.load_public_key(_read(args.delegate_public_key), test_mode=args.test_mode)
    a = pick_multiplier(args.multiplier, pk1.bit_length, rng)
    agreement = ShareAgreement.random(pk1, pk2, a, rng)
    formats.write_private(args.out, formats.dump_agreement(agreement))
    return EXIT_OK


def cmd_encrypt(args: argparse.Namespace) -> int:
    rng = _rng(args)
    pk = formats.load_public_key(_read(args.public_key), test_mode=args.test_mode)
    image = formats.parse_pgm(_read(args.image))
    a = pick_multiplier(args.multiplier, pk.bit_length, rng)
    outsourced, retained = delegator_outsource(
        image, pk, sample_randomizer(pk, rng), sample_randomizer(pk, rng), a
    )
    Path(args.out).write_bytes(formats.dump_blob(outsourced))
    formats.write_private(args.secrets_out, formats.dump_secrets(retained, pk))
    log.info("encrypted %d pixels into %s", len(outsourced), args.out)
    return EXIT_OK


def cmd_share(args: argparse.Namespace) -> int:
    rng = _rng(args)
    pk1 = formats.load_public_key(_read(args.delegator_public_key), test_mode=args.test_mode)
    pk2 = formats.load_public_key(_read(args.delegate_public_key), test_mode=args.test_mode)
    outsourced = formats.load_blob(_read(args.blob), pk1)
    retained = formats.load_secrets(_read(args.delegator_secrets), pk1)
    agreement = formats.load_agreement(_read(args.agreement_file), pk1, pk2)

    delegator, proxy, delegate = Delegator(pk1, rng), Proxy(rng), Delegate(pk2, rng)
    delegator.adopt(outsourced, retained)
    proxy.store(outsourced)
    result, transcript = run_share(delegator, proxy, delegate, outsourced, agreement)

    Path(args.out).write_bytes(formats.dump_blob(result))
    if args.transcript:
        Path(args.transcript).write_text(transcript.to_jsonl())
    log.info("shared %d pixels; re-encrypted blob in %s", len(result), args.out)
    return EXIT_OK


def cmd_decrypt(args: argparse.Namespace) -> int:
    blob = _read(args.blob)
    sk = formats.load_private_key(_read(args.private_key), test_mode=args.test_mode)
    if formats.peek_blob_fingerprint(blob) != sk.fingerprint:
        raise KeyMismatchError("blob was not encrypted under this private key's public key")
    image = decrypt_data(sk, formats.load_blob(blob, sk.public_key))
    Path(args.out).write_bytes(formats.dump_pgm(image))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    report = run_benchmark(
        args.width, args.height, args.bits, args.trials, args.multiplier, _rng(args), test_mode=args.test_mode
    )
    text = json.dumps(report, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    return EXIT_OK if report["all_verified"] else EXIT_PROTOCOL


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, KeyMismatchError):
        return EXIT_KEY_MISMATCH
    if isinstance(exc, (PolicyError, PlaintextRangeError)):
        return EXIT_POLICY
    if isinstance(exc, (FormatError, InvalidCiphertextError)):
        return EXIT_FORMAT
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_POLICY
    return EXIT_PROTOCOL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpre", description=__doc__)
    parser.add_argument(
        "--test-mode",
        action="store_true",
        default=None,
        help="allow keys below 64 bits (same as HPRE_TEST_MODE=1)",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--seed-material",
            help="seed a deterministic generator instead of OS entropy (reproducible runs only, not secure)",
        )

    p = sub.add_parser("keygen", help="generate a Paillier key pair")
    p.add_argument("--bits", type=int, default=1024)
    p.add_argument("--out-public", required=True)
    p.add_argument("--out-private", required=True)
    seeded(p)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("agree", help="draw a share agreement (seed, increment, multiplier)")
    p.add_argument("--delegator-public-key", required=True)
    p.add_argument("--delegate-public-key", required=True)
    p.add_argument("--multiplier", default=str(DEFAULT_MULTIPLIER), help='integer, or "full" for a modulus-wide one')
    p.add_argument("--out", required=True)
    seeded(p)
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("encrypt", help="outsource a PGM image with chained randomizers")
    p.add_argument("--image", required=True)
    p.add_argument("--public-key", required=True)
    p.add_argument("--multiplier", default=str(DEFAULT_MULTIPLIER))
    p.add_argument("--out", required=True)
    p.add_argument("--secrets-out", required=True, help="where to keep r0, r_c and the multiplier")
    seeded(p)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("share", help="re-encrypt an outsourced blob for a delegate")
    p.add_argument("--blob", required=True)
    p.add_argument("--delegator-public-key", required=True)
    p.add_argument("--delegator-secrets", required=True)
    p.add_argument("--delegate-public-key", required=True)
    p.add_argument("--agreement-file", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--transcript", help="write the message/counter log as JSON lines")
    seeded(p)
    p.set_defaults(func=cmd_share)

    p = sub.add_parser("decrypt", help="decrypt a blob into a PGM image")
    p.add_argument("--blob", required=True)
    p.add_argument("--private-key", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("bench", help="time a full share of random images")
    p.add_argument("--width", type=int, default=92)
    p.add_argument("--height", type=int, default=122)
    p.add_argument("--bits", type=int, default=1024)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--multiplier", default="full", help='integer, or "full" (default) for a modulus-wide one')
    p.add_argument("--json", help="also write the report to this file")
    seeded(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    args.test_mode = test_mode_enabled(args.test_mode)
    try:
        return args.func(args)
    except (HpreError, OSError, ValueError) as exc:
        print(f"hpre: error: {exc}", file=sys.stderr)
        return exit_code(exc)

if __name__ == "__main__":
    sys.exit(main())
