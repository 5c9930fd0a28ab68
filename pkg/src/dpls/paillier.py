"""Additively homomorphic Paillier encryption with a fixed-point codec.

Textbook scheme with the g = N + 1 choice, so (N+1)^m = 1 + mN (mod N^2) and
encryption needs a single modular exponentiation for the blinding factor:
E(m) = (1 + mN) r^N mod N^2. Ciphertext product adds plaintexts; ciphertext
exponentiation scales them. Key material and blinding randomness are drawn from
a caller-supplied numpy generator so runs are reproducible; primality testing
is gmpy2's (BPSW plus Miller-Rabin rounds, error probability far below 2^-80).

Real values enter through FixedPointCodec: x maps to round(x * scale) with
negatives represented as N - |.|, decodable while magnitudes stay below N/2;
the codec enforces the stricter N/4 headroom so sums keep room to grow.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2

from ._util import rand_int_bits
from .errors import HeadroomError, ShapeError

MIN_KEY_BITS = 256
DEFAULT_KEY_BITS = 1024
DEFAULT_CODEC_SCALE = 1 << 40  # power of two: float * scale is exact


@dataclass(frozen=True)
class PublicKey:
    n: int

    @property
    def n_sq(self) -> int:
        return self.n * self.n


@dataclass(frozen=True)
class PrivateKey:
    public: PublicKey
    lam: int   # phi(N)
    lam_inv: int  # phi(N)^-1 mod N


@dataclass(frozen=True)
class Ciphertext:
    value: int
    n: int  # modulus of the encrypting key, for mismatch detection


def _random_prime(bits: int, rng) -> int:
    """Uniform-candidate prime with the top two bits set (keeps N full width)."""
    while True:
        cand = rand_int_bits(rng, bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if gmpy2.is_prime(gmpy2.mpz(cand), 40):
            return int(cand)


def keygen(bits: int = DEFAULT_KEY_BITS, rng=None) -> tuple[PublicKey, PrivateKey]:
    """Generate a keypair whose modulus has exactly `bits` bits (bits >= 256)."""
    if rng is None:
        raise ShapeError("keygen requires an explicit rng for reproducibility")
    if bits < MIN_KEY_BITS:
        raise ShapeError(f"key size {bits} below the {MIN_KEY_BITS}-bit floor")
    half = bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(bits - half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() == bits:
            break
    lam = (p - 1) * (q - 1)
    lam_inv = int(gmpy2.invert(lam, n))
    pk = PublicKey(n=n)
    return pk, PrivateKey(public=pk, lam=lam, lam_inv=lam_inv)


def encrypt(pk: PublicKey, plaintext: int, rng) -> Ciphertext:
    """E(m) = (1 + mN) r^N mod N^2 with fresh blinding r."""
    m = int(plaintext)
    if not (0 <= m < pk.n):
        raise HeadroomError(f"plaintext outside [0, N): bit length {m.bit_length()}")
    n, n_sq = pk.n, pk.n_sq
    r = 0
    while not (0 < r < n) or gmpy2.gcd(r, n) != 1:
        r = rand_int_bits(rng, n.bit_length())
    blind = gmpy2.powmod(r, n, n_sq)
    value = (gmpy2.mpz(1 + m * n) * blind) % n_sq
    return Ciphertext(value=int(value), n=n)


def decrypt(sk: PrivateKey, ct: Ciphertext) -> int:
    """Recover the plaintext in [0, N)."""
    n = sk.public.n
    if ct.n != n:
        raise ShapeError("ciphertext was encrypted under a different key")
    u = gmpy2.powmod(ct.value, sk.lam, sk.public.n_sq)
    return int(((u - 1) // n) * sk.lam_inv % n)


def hom_add(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Ciphertext of the plaintext sum (mod N)."""
    if a.n != b.n:
        raise ShapeError("cannot add ciphertexts under different keys")
    n_sq = a.n * a.n
    return Ciphertext(value=int(gmpy2.mpz(a.value) * b.value % n_sq), n=a.n)


def hom_scale(ct: Ciphertext, k: int) -> Ciphertext:
    """Ciphertext of k times the plaintext (mod N); k may be negative."""
    k = int(k)
    n_sq = ct.n * ct.n
    base = gmpy2.mpz(ct.value)
    if k < 0:
        base = gmpy2.invert(base, n_sq)
        k = -k
    return Ciphertext(value=int(gmpy2.powmod(base, k, n_sq)), n=ct.n)


@dataclass(frozen=True)
class FixedPointCodec:
    """Signed fixed-point embedding of reals into [0, N)."""

    n: int
    scale: int = DEFAULT_CODEC_SCALE

    @property
    def headroom(self) -> int:
        """Largest representable scaled magnitude, N // 4."""
        return self.n // 4

    def to_scaled(self, x: float) -> int:
        """Signed scaled integer round(x * scale), range-checked."""
        v = round(float(x) * self.scale)
        if abs(v) > self.headroom:
            raise HeadroomError(
                f"|{x:.6g}| * scale exceeds the N/4 headroom; lower the data "
                f"magnitude or use a larger key"
            )
        return v

    def encode(self, x: float) -> int:
        """Residue in [0, N) representing x at resolution 1/scale."""
        return self.wrap(self.to_scaled(x))

    def wrap(self, scaled: int) -> int:
        """Map a signed scaled integer into [0, N)."""
        if abs(scaled) > self.headroom:
            raise HeadroomError("scaled value exceeds the N/4 headroom")
        return scaled % self.n

    def unwrap(self, residue: int) -> int:
        """Signed scaled integer from a residue (values above N/2 are negative)."""
        v = int(residue) % self.n
        return v - self.n if v > self.n // 2 else v

    def decode(self, residue: int) -> float:
        return self.unwrap(residue) / self.scale
