import hashlib
import json
import random

import pytest

from hpre import DataVector
from hpre import formats
from hpre.cli import EXIT_FORMAT, EXIT_IO, EXIT_KEY_MISMATCH, EXIT_POLICY, EXIT_PROTOCOL, main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("HPRE_TEST_MODE", raising=False)
    return tmp_path


def keygen(name, bits=256, *extra):
    assert main([*extra, "keygen", "--bits", str(bits), "--out-public", f"{name}.pub", "--out-private", f"{name}.key"]) == 0


def write_image(path, w, h, seed=0):
    r = random.Random(seed)
    img = DataVector.from_image(w, h, bytes(r.randrange(256) for _ in range(w * h)))
    path.write_bytes(formats.dump_pgm(img))
    return img


def test_keygen_writes_keys(workdir, capsys):
    keygen("alice", 1024)
    pk = formats.load_public_key((workdir / "alice.pub").read_bytes())
    assert pk.bit_length == 1024
    assert capsys.readouterr().out.strip() == pk.fingerprint.hex()
    assert (workdir / "alice.key").stat().st_mode & 0o077 == 0
    keygen("bob", 1024)
    assert formats.load_public_key((workdir / "bob.pub").read_bytes()) != pk


def test_keygen_policy(workdir, monkeypatch):
    assert main(["keygen", "--bits", "16", "--out-public", "a.pub", "--out-private", "a.key"]) == EXIT_POLICY
    assert main(["--test-mode", "keygen", "--bits", "16", "--out-public", "a.pub", "--out-private", "a.key"]) == 0
    monkeypatch.setenv("HPRE_TEST_MODE", "1")
    assert main(["keygen", "--bits", "16", "--out-public", "b.pub", "--out-private", "b.key"]) == 0


def test_encrypt_decrypt_roundtrip(workdir):
    keygen("alice")
    src = write_image(workdir / "in.pgm", 7, 5)
    assert main(["encrypt", "--image", "in.pgm", "--public-key", "alice.pub", "--out", "img.blob", "--secrets-out", "alice.secrets"]) == 0
    assert (workdir / "img.blob").stat().st_size == formats.blob_size(35, 256)
    assert (workdir / "alice.secrets").stat().st_mode & 0o077 == 0
    assert main(["decrypt", "--blob", "img.blob", "--private-key", "alice.key", "--out", "out.pgm"]) == 0
    assert (workdir / "out.pgm").read_bytes() == (workdir / "in.pgm").read_bytes()
    assert formats.parse_pgm((workdir / "out.pgm").read_bytes()) == src


def test_black_pixel(workdir):
    keygen("alice")
    (workdir / "in.pgm").write_bytes(b"P5\n1 1\n255\n\0")
    assert main(["encrypt", "--image", "in.pgm", "--public-key", "alice.pub", "--out", "b", "--secrets-out", "s"]) == 0
    sk = formats.load_private_key((workdir / "alice.key").read_bytes())
    blob = formats.load_blob((workdir / "b").read_bytes(), sk.public_key)
    assert len(blob) == 1
    from hpre import decrypt

    assert decrypt(sk, blob.ciphertexts[0]) == 0


def test_full_share_flow(workdir):
    keygen("alice")
    keygen("bob")
    write_image(workdir / "in.pgm", 6, 4)
    assert main(["encrypt", "--image", "in.pgm", "--public-key", "alice.pub", "--out", "img.blob", "--secrets-out", "alice.secrets"]) == 0
    assert main(["agree", "--delegator-public-key", "alice.pub", "--delegate-public-key", "bob.pub", "--out", "deal.json"]) == 0
    assert main([
        "share", "--blob", "img.blob", "--delegator-public-key", "alice.pub", "--delegator-secrets", "alice.secrets",
        "--delegate-public-key", "bob.pub", "--agreement-file", "deal.json", "--out", "bob.blob",
        "--transcript", "share.jsonl",
    ]) == 0
    assert main(["decrypt", "--blob", "bob.blob", "--private-key", "bob.key", "--out", "bob.pgm"]) == 0
    digest = lambda p: hashlib.sha256((workdir / p).read_bytes()).hexdigest()
    assert digest("bob.pgm") == digest("in.pgm")

    records = [json.loads(line) for line in (workdir / "share.jsonl").read_text().splitlines()]
    counters = [r for r in records if r["kind"] == "counters" and r["role"] == "delegator"]
    assert sum(r["counters"]["encryptions"] for r in counters) == 2
    share_msg = next(r for r in records if r["kind"] == "message" and r["sender"] == "delegator")
    assert share_msg["payload_bytes"] == 2 * 64 + 2
    assert [r["name"] for r in records if r["kind"] == "message"] == [
        "DelegatorShareMessage",
        "DelegateRefreshMessage",
        "ResultNotification",
    ]

    # delegator key cannot open the delegate's blob
    assert main(["decrypt", "--blob", "bob.blob", "--private-key", "alice.key", "--out", "x.pgm"]) == EXIT_KEY_MISMATCH
    assert not (workdir / "x.pgm").exists()


def test_share_rejects_mismatched_multiplier(workdir):
    keygen("alice")
    keygen("bob")
    write_image(workdir / "in.pgm", 2, 2)
    main(["encrypt", "--image", "in.pgm", "--public-key", "alice.pub", "--out", "img.blob", "--secrets-out", "s", "--multiplier", "5"])
    main(["agree", "--delegator-public-key", "alice.pub", "--delegate-public-key", "bob.pub", "--out", "deal.json"])
    code = main([
        "share", "--blob", "img.blob", "--delegator-public-key", "alice.pub", "--delegator-secrets", "s",
        "--delegate-public-key", "bob.pub", "--agreement-file", "deal.json", "--out", "bob.blob",
    ])
    assert code == EXIT_PROTOCOL


def test_share_rejects_empty_beta_window(workdir):
    # an 8-bit modulus (always 11 * 13) holds the pixels but leaves no room for beta > 255
    keygen("alice", 8, "--test-mode")
    keygen("bob", 8, "--test-mode")
    (workdir / "in.pgm").write_bytes(formats.dump_pgm(DataVector.from_image(2, 2, bytes([0, 50, 100, 142]))))
    base = ["--test-mode"]
    assert main([*base, "encrypt", "--image", "in.pgm", "--public-key", "alice.pub", "--out", "img.blob", "--secrets-out", "s"]) == 0
    assert main([*base, "agree", "--delegator-public-key", "alice.pub", "--delegate-public-key", "bob.pub", "--out", "d"]) == 0
    code = main([
        *base, "share", "--blob", "img.blob", "--delegator-public-key", "alice.pub", "--delegator-secrets", "s",
        "--delegate-public-key", "bob.pub", "--agreement-file", "d", "--out", "bob.blob",
    ])
    assert code == EXIT_PROTOCOL


def test_error_exit_codes(workdir):
    keygen("alice")
    assert main(["decrypt", "--blob", "missing", "--private-key", "alice.key", "--out", "x"]) == EXIT_IO
    (workdir / "bad.pgm").write_bytes(b"P5\n1 1\n15\n\0")
    assert main(["encrypt", "--image", "bad.pgm", "--public-key", "alice.pub", "--out", "b", "--secrets-out", "s"]) == EXIT_FORMAT
    codes = {EXIT_IO, EXIT_KEY_MISMATCH, EXIT_PROTOCOL, EXIT_POLICY, EXIT_FORMAT}
    assert len(codes) == 5 and 0 not in codes


def test_bench_smoke(workdir, capsys):
    import time

    start = time.perf_counter()
    assert main(["--test-mode", "bench", "--width", "1", "--height", "1", "--bits", "16", "--json", "r.json"]) == 0
    assert time.perf_counter() - start < 1.0
    report = json.loads((workdir / "r.json").read_text())
    assert report["all_verified"]
    assert report["trials"][0]["counters"]["proxy"]["secure_steps"] == 0
