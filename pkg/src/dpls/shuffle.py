"""Distributed shuffling: encrypted zero-sum masks over a communication graph.

Each agent adds Gaussian noise to its sensitive vector, then neighbours jointly
compute masked differences through additively homomorphic ciphertexts: agent i
learns a_(j->i) * (theta_bar_j - theta_bar_i) for each neighbour j, where the
integer multipliers a stay private to their drawers. Summing its received
values scaled by its own multipliers gives agent i's mask

    mask_i = sum_j a_(i->j) a_(j->i) (theta_bar_j - theta_bar_i),

and the masks cancel exactly across the network: every edge contributes one
value and its negation. All arithmetic after encoding happens on fixed-point
integers, so the cancellation is exact in the integer domain, not merely up to
float round-off.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import paillier
from .errors import HeadroomError, ShapeError
from .graph import Network

MIN_A_MAX = 10


@dataclass(frozen=True)
class TranscriptEntry:
    """One item an agent sees during the protocol.

    kind is one of 'recv-pubkey' (neighbour's modulus), 'recv-broadcast-ct' /
    'recv-masked-ct' (ciphertext digests, tagged with the key owner), and
    'decrypted-scaled-diff' (the only plaintext values an agent ever learns
    about a neighbour: already scaled by the sender's private multiplier).
    """

    kind: str
    peer: int
    key_owner: int | None = None
    payload: tuple = ()


@dataclass(frozen=True)
class ShuffleResult:
    theta_bar: np.ndarray                       # (n, dim) noisy vectors masked
    scalars: dict[tuple[int, int], int]         # multiplier of directed edge i->j
    mask_int: tuple[tuple[int, ...], ...]       # per-agent masks, scaled integers
    masks: np.ndarray                           # (n, dim) = mask_int / scale
    scale: int
    transcripts: dict[int, list[TranscriptEntry]] | None = None


def _ct_digest(ct: paillier.Ciphertext) -> str:
    h = hashlib.sha256(ct.value.to_bytes((ct.value.bit_length() + 7) // 8 or 1, "big"))
    return h.hexdigest()[:16]


def draw_scalar(a_max: int, rng: np.random.Generator) -> int:
    """Uniform integer in [ceil(a_max/sqrt(2)), a_max]."""
    lo = math.ceil(a_max / math.sqrt(2.0))
    return int(rng.integers(lo, a_max + 1))


def run_shuffle(
    net: Network,
    thetas: np.ndarray,
    sigma_eta: float,
    a_max: int,
    rng: np.random.Generator,
    key_bits: int = paillier.DEFAULT_KEY_BITS,
    scale: int = paillier.DEFAULT_CODEC_SCALE,
    record_transcripts: bool = False,
) -> ShuffleResult:
    """Execute the shuffle protocol through real ciphertexts.

    thetas has one row per agent. sigma_eta is the std of the Gaussian noise
    added before masking (0 disables it). Raises HeadroomError when the scaled
    values cannot fit the ciphertext headroom; lower a_max or the data scale,
    or use larger keys.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[0] != net.n:
        raise ShapeError(f"thetas must be (n, dim), got {thetas.shape}")
    if a_max < MIN_A_MAX:
        raise ShapeError(f"a_max must be at least {MIN_A_MAX}, got {a_max}")
    n, dim = thetas.shape

    # Step 1: perturb the payload.
    eta = rng.normal(0.0, sigma_eta, size=(n, dim)) if sigma_eta > 0 else np.zeros((n, dim))
    theta_bar = thetas + eta

    # Fixed-point images shared by every key (scale is key-independent).
    scaled = [[round(float(v) * scale) for v in row] for row in theta_bar]

    # Step 2 prep: one keypair per agent per run.
    keys = [paillier.keygen(key_bits, rng) for _ in range(n)]
    codecs = [paillier.FixedPointCodec(n=pk.n, scale=scale) for pk, _ in keys]

    max_abs = max((abs(v) for row in scaled for v in row), default=0)
    min_n = min(pk.n for pk, _ in keys)
    if 2 * a_max * max_abs >= min_n // 4:
        raise HeadroomError(
            "masked differences would exceed the N/4 ciphertext headroom; "
            "lower a_max or the data magnitude, or use larger keys"
        )

    transcripts: dict[int, list[TranscriptEntry]] | None = (
        {i: [] for i in range(n)} if record_transcripts else None
    )

    def log(agent: int, entry: TranscriptEntry) -> None:
        if transcripts is not None:
            transcripts[agent].append(entry)

    # Step 2: each agent broadcasts E_own(-theta_bar_own) plus its public key.
    broadcast: list[list[paillier.Ciphertext]] = []
    for j in range(n):
        pk, _ = keys[j]
        row = [paillier.encrypt(pk, codecs[j].wrap(-v), rng) for v in scaled[j]]
        broadcast.append(row)
    for j in range(net.n):
        for i in net.neighbors(j):
            log(i, TranscriptEntry("recv-pubkey", peer=j, payload=(keys[j][0].n,)))
            log(i, TranscriptEntry(
                "recv-broadcast-ct", peer=j, key_owner=j,
                payload=tuple(_ct_digest(ct) for ct in broadcast[j]),
            ))

    # Steps 3-5, per directed edge in deterministic order: agent i encrypts its
    # own values under j's key, adds j's broadcast, raises to its private
    # multiplier, and sends; j decrypts to the scaled difference.
    scalars: dict[tuple[int, int], int] = {}
    for i in range(n):
        for j in net.neighbors(i):
            scalars[(i, j)] = draw_scalar(a_max, rng)

    received: dict[tuple[int, int], list[int]] = {}  # (sender, receiver) -> ints
    for i in range(n):
        for j in net.neighbors(i):
            pk_j, _ = keys[j]
            a_ij = scalars[(i, j)]
            masked = []
            for k in range(dim):
                ct = paillier.encrypt(pk_j, codecs[j].wrap(scaled[i][k]), rng)
                ct = paillier.hom_add(ct, broadcast[j][k])     # theta_i - theta_j
                masked.append(paillier.hom_scale(ct, a_ij))
            log(j, TranscriptEntry(
                "recv-masked-ct", peer=i, key_owner=j,
                payload=tuple(_ct_digest(ct) for ct in masked),
            ))
            _, sk_j = keys[j]
            vals = [codecs[j].unwrap(paillier.decrypt(sk_j, ct)) for ct in masked]
            received[(i, j)] = vals
            log(j, TranscriptEntry("decrypted-scaled-diff", peer=i, payload=tuple(vals)))

    # Step 6: scale by own multipliers and sum; exact integer arithmetic.
    mask_int: list[tuple[int, ...]] = []
    for i in range(n):
        acc = [0] * dim
        for j in net.neighbors(i):
            a_ij = scalars[(i, j)]
            vals = received[(j, i)]  # a_(j->i) * (theta_j - theta_i), scaled
            for k in range(dim):
                acc[k] += a_ij * vals[k]
        mask_int.append(tuple(acc))

    masks = np.array([[v / scale for v in row] for row in mask_int])
    return ShuffleResult(
        theta_bar=theta_bar,
        scalars=scalars,
        mask_int=tuple(mask_int),
        masks=masks,
        scale=scale,
        transcripts=transcripts,
    )


def plaintext_shuffle_oracle(
    net: Network,
    theta_bar: np.ndarray,
    scalars: dict[tuple[int, int], int],
    scale: int | None = None,
):
    """Reference masks computed without any cryptography.

    With scale=None, works in plain float arithmetic and returns an (n, dim)
    array. With an integer scale, reproduces the fixed-point pipeline
    bit-for-bit: values are rounded exactly as the codec rounds them and the
    masks come back as exact integer tuples.
    """
    theta_bar = np.asarray(theta_bar, dtype=float)
    n, dim = theta_bar.shape
    if scale is None:
        masks = np.zeros((n, dim))
        for i, j in net.edges:
            pair = scalars[(i, j)] * scalars[(j, i)]
            diff = pair * (theta_bar[j] - theta_bar[i])
            masks[i] += diff
            masks[j] -= diff
        return masks
    scaled = [[round(float(v) * scale) for v in row] for row in theta_bar]
    acc = [[0] * dim for _ in range(n)]
    for i, j in net.edges:
        pair = scalars[(i, j)] * scalars[(j, i)]
        for k in range(dim):
            diff = pair * (scaled[j][k] - scaled[i][k])
            acc[i][k] += diff
            acc[j][k] -= diff
    return tuple(tuple(row) for row in acc)
