"""Paillier encryption and the fixed-point codec.

Small keys (256 bit) keep the arithmetic honest without slowing the suite;
one spot check runs at the full default size.
"""

import numpy as np
import pytest

from dpls._util import make_rng, mix_seed
from dpls.errors import HeadroomError, ShapeError
from dpls.paillier import (
    DEFAULT_CODEC_SCALE,
    DEFAULT_KEY_BITS,
    FixedPointCodec,
    decrypt,
    encrypt,
    hom_add,
    hom_scale,
    keygen,
)

SEED = 90_210
BITS = 256


@pytest.fixture(scope="module")
def keypair():
    return keygen(BITS, make_rng(SEED))


def test_keygen_is_deterministic_for_a_seed():
    pk1, sk1 = keygen(BITS, make_rng(SEED))
    pk2, sk2 = keygen(BITS, make_rng(SEED))
    assert pk1.n == pk2.n
    assert sk1.lam == sk2.lam
    assert sk1.lam_inv == sk2.lam_inv
    pk3, _ = keygen(BITS, make_rng(SEED + 1))
    assert pk3.n != pk1.n


def test_keygen_modulus_width_and_structure(keypair):
    pk, sk = keypair
    assert pk.n.bit_length() == BITS
    assert pk.n_sq == pk.n * pk.n
    # lam = phi(N) for N = pq implies N - lam = p + q - 1, positive and small
    gap = pk.n - sk.lam
    assert 0 < gap < 1 << (BITS // 2 + 2)
    assert sk.lam * sk.lam_inv % pk.n == 1


def test_keygen_requires_rng_and_minimum_size():
    with pytest.raises(ShapeError):
        keygen(BITS)
    with pytest.raises(ShapeError):
        keygen(128, make_rng(SEED))


def test_encrypt_decrypt_round_trip(keypair):
    pk, sk = keypair
    rng = make_rng(mix_seed(SEED, 1))
    for plaintext in [0, 1, 2, 1234567, pk.n - 1, pk.n // 2, pk.n // 3]:
        ct = encrypt(pk, plaintext, rng)
        assert decrypt(sk, ct) == plaintext


def test_encryption_is_randomized(keypair):
    pk, sk = keypair
    rng = make_rng(mix_seed(SEED, 2))
    a = encrypt(pk, 42, rng)
    b = encrypt(pk, 42, rng)
    assert a.value != b.value
    assert decrypt(sk, a) == decrypt(sk, b) == 42


def test_homomorphic_add(keypair):
    pk, sk = keypair
    rng = make_rng(mix_seed(SEED, 3))
    for x, y in [(0, 0), (1, 2), (999, 1), (pk.n - 1, 1), (pk.n - 1, pk.n - 1)]:
        total = decrypt(sk, hom_add(encrypt(pk, x, rng), encrypt(pk, y, rng)))
        assert total == (x + y) % pk.n


def test_homomorphic_scale(keypair):
    pk, sk = keypair
    rng = make_rng(mix_seed(SEED, 4))
    ct = encrypt(pk, 12345, rng)
    for k in [0, 1, 2, 97, -1, -58]:
        assert decrypt(sk, hom_scale(ct, k)) == (12345 * k) % pk.n


def test_homomorphic_combination_matches_plain_arithmetic(keypair):
    pk, sk = keypair
    rng = make_rng(mix_seed(SEED, 5))
    ints = rng.integers(0, 1 << 30, size=20)
    scalars = rng.integers(-100, 101, size=20)
    acc = encrypt(pk, 0, rng)
    expected = 0
    for v, k in zip(ints.tolist(), scalars.tolist()):
        acc = hom_add(acc, hom_scale(encrypt(pk, v, rng), k))
        expected = (expected + v * k) % pk.n
    assert decrypt(sk, acc) == expected


def test_key_mismatch_is_rejected(keypair):
    pk, sk = keypair
    other_pk, _ = keygen(BITS, make_rng(SEED + 7))
    rng = make_rng(mix_seed(SEED, 6))
    ours = encrypt(pk, 5, rng)
    theirs = encrypt(other_pk, 5, rng)
    with pytest.raises(ShapeError):
        hom_add(ours, theirs)
    with pytest.raises(ShapeError):
        decrypt(sk, theirs)


def test_encrypt_rejects_out_of_range_plaintext(keypair):
    pk, _ = keypair
    rng = make_rng(mix_seed(SEED, 7))
    with pytest.raises(HeadroomError):
        encrypt(pk, -1, rng)
    with pytest.raises(HeadroomError):
        encrypt(pk, pk.n, rng)


def test_full_size_key_round_trip():
    pk, sk = keygen(DEFAULT_KEY_BITS, make_rng(SEED + 11))
    assert pk.n.bit_length() == DEFAULT_KEY_BITS
    rng = make_rng(mix_seed(SEED, 8))
    ct = hom_scale(encrypt(pk, 1 << 200, rng), 3)
    assert decrypt(sk, ct) == 3 << 200


# --- fixed-point codec ------------------------------------------------------

def test_codec_exact_on_dyadic_values(keypair):
    pk, _ = keypair
    codec = FixedPointCodec(n=pk.n)
    # power-of-two scale makes these exact, not approximate
    for x in (-1.5, 0.25, 3.0, -1024.0, 0.0, 2.0 ** -20):
        assert codec.decode(codec.encode(x)) == x


def test_codec_rounds_to_resolution(keypair):
    pk, _ = keypair
    codec = FixedPointCodec(n=pk.n)
    x = 0.1  # not dyadic, so only the resolution bound holds
    back = codec.decode(codec.encode(x))
    assert abs(back - x) <= 0.5 / DEFAULT_CODEC_SCALE


def test_codec_wrap_unwrap_signs(keypair):
    pk, _ = keypair
    codec = FixedPointCodec(n=pk.n)
    assert codec.wrap(-5) == pk.n - 5
    assert codec.unwrap(pk.n - 5) == -5
    assert codec.unwrap(codec.wrap(12345)) == 12345
    assert codec.to_scaled(-1.5) == -(3 << 39)


def test_codec_headroom_enforced(keypair):
    pk, _ = keypair
    codec = FixedPointCodec(n=pk.n, scale=1 << 200)
    with pytest.raises(HeadroomError):
        codec.encode(2.0 ** 60)
    with pytest.raises(HeadroomError):
        codec.wrap(pk.n // 4 + 1)
    assert codec.wrap(pk.n // 4) == pk.n // 4


def test_codec_homomorphic_sum_of_reals(keypair):
    pk, sk = keypair
    codec = FixedPointCodec(n=pk.n)
    rng = make_rng(mix_seed(SEED, 9))
    xs = rng.uniform(-8.0, 8.0, size=16)
    acc = encrypt(pk, codec.encode(0.0), rng)
    for x in xs:
        acc = hom_add(acc, encrypt(pk, codec.encode(float(x)), rng))
    decoded = codec.decode(decrypt(sk, acc))
    exact = sum(codec.to_scaled(float(x)) for x in xs) / codec.scale
    assert decoded == exact
    assert decoded == pytest.approx(float(np.sum(xs)), abs=16 * 0.5 / codec.scale)
