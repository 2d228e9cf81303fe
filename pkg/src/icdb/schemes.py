"""Code-producing primitives: RSA signatures, PBKDF2 MACs, AES ciphertexts.

All three schemes expose the same surface: generate a key, emit a code over
a byte message, check a code, and (for AES only) recover the plaintext.
Codes are checked owner-side by regenerating them with the secret key and
comparing, so every scheme uses deterministic construction given its inputs
(the PBKDF2 salt is carried inside the emitted code).

KeyMaterial is immutable and safe to share across workers; every operation
here is reentrant with no shared mutable state.
"""

from __future__ import annotations

import base64
import enum
import functools
import hashlib
import hmac
import math
import os
import random
from dataclasses import dataclass

from cryptography.hazmat.primitives import hashes, padding
from cryptography.hazmat.primitives.asymmetric import rsa
from cryptography.hazmat.primitives.asymmetric import padding as asym_padding
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import (
    CodeFormatError,
    KeyFileError,
    MessageTooLargeError,
    UnsupportedOperationError,
)

MAX_MESSAGE_BYTES = 1 << 20
PBKDF2_ITERATIONS = 10
MAC_SALT_BYTES = 24
MAC_OUTPUT_BYTES = 24
RSA_PUBLIC_EXPONENT = 65537
DEFAULT_RSA_BITS = 1024
DEFAULT_MAC_KEY_BYTES = 24
DEFAULT_AES_KEY_BYTES = 16
_AES_KEY_SIZES = (16, 24, 32)


class SchemeId(enum.Enum):
    RSA_SIGN = "RSA_SIGN"
    PBKDF2_MAC = "PBKDF2_MAC"
    AES_CIPHER = "AES_CIPHER"

    @classmethod
    def from_cli(cls, name: str) -> "SchemeId":
        try:
            return _CLI_NAMES[name.lower()]
        except KeyError:
            raise ValueError(f"unsupported scheme id: {name!r}") from None

    @property
    def cli_name(self) -> str:
        return {
            SchemeId.RSA_SIGN: "rsa",
            SchemeId.PBKDF2_MAC: "pbkdf2",
            SchemeId.AES_CIPHER: "aes",
        }[self]


_CLI_NAMES = {
    "rsa": SchemeId.RSA_SIGN,
    "pbkdf2": SchemeId.PBKDF2_MAC,
    "aes": SchemeId.AES_CIPHER,
}


def _pack_ints(*values: int) -> bytes:
    out = bytearray()
    for v in values:
        blob = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
        out += len(blob).to_bytes(4, "big") + blob
    return bytes(out)


def _unpack_ints(data: bytes, count: int) -> tuple[int, ...]:
    values = []
    pos = 0
    for _ in range(count):
        if pos + 4 > len(data):
            raise KeyFileError("truncated integer encoding")
        n = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        if pos + n > len(data):
            raise KeyFileError("truncated integer encoding")
        values.append(int.from_bytes(data[pos : pos + n], "big"))
        pos += n
    if pos != len(data):
        raise KeyFileError("trailing bytes in integer encoding")
    return tuple(values)


@dataclass(frozen=True)
class KeyMaterial:
    """Secret (and, for RSA, public) key bytes for one scheme.

    RSA secret bytes encode (private exponent, modulus); public bytes encode
    (modulus, public exponent). MAC and AES keys are raw secret bytes with
    no public half.
    """

    scheme: SchemeId
    secret: bytes
    public: bytes = b""

    def __post_init__(self):
        if not self.secret:
            raise KeyFileError("zero-length secret key rejected")
        if self.scheme is SchemeId.RSA_SIGN:
            if not self.public:
                raise KeyFileError("RSA key material requires public bytes")
            n, e = _unpack_ints(self.public, 2)
            d, n2 = _unpack_ints(self.secret, 2)
            if n != n2:
                raise KeyFileError("RSA secret/public modulus mismatch")
            if n.bit_length() < 1024:
                raise KeyFileError("RSA modulus below 1024 bits")
            if e < 3 or d < 1:
                raise KeyFileError("invalid RSA exponents")
        else:
            if self.public:
                raise KeyFileError(f"{self.scheme.value} keys carry no public bytes")
            if self.scheme is SchemeId.AES_CIPHER and len(self.secret) not in _AES_KEY_SIZES:
                raise KeyFileError("AES key must be 16, 24, or 32 bytes")

    @property
    def rsa_modulus_bytes(self) -> int:
        n, _ = _unpack_ints(self.public, 2)
        return (n.bit_length() + 7) // 8


def _seeded_rsa_numbers(rng: random.Random, bits: int) -> tuple[int, int]:
    """Draw two primes whose product has exactly `bits` bits."""
    import gmpy2

    half = bits // 2
    top_two = (1 << (half - 1)) | (1 << (half - 2))
    while True:
        p = int(gmpy2.next_prime(rng.getrandbits(half) | top_two | 1))
        q = int(gmpy2.next_prime(rng.getrandbits(half) | top_two | 1))
        if p == q:
            continue
        phi = (p - 1) * (q - 1)
        if math.gcd(RSA_PUBLIC_EXPONENT, phi) != 1:
            continue
        if (p * q).bit_length() != bits:
            continue
        return p, q


def generate_keys(
    scheme: SchemeId,
    rng_seed: int | None = None,
    *,
    rsa_bits: int = DEFAULT_RSA_BITS,
    mac_key_bytes: int = DEFAULT_MAC_KEY_BYTES,
    aes_key_bytes: int = DEFAULT_AES_KEY_BYTES,
) -> KeyMaterial:
    """Generate key material for a scheme.

    A fixed `rng_seed` makes the output reproducible; seeded generation is
    meant for tests only, never for production keys.
    """
    if not isinstance(scheme, SchemeId):
        raise ValueError(f"unsupported scheme id: {scheme!r}")
    rng = random.Random(rng_seed) if rng_seed is not None else None

    if scheme is SchemeId.RSA_SIGN:
        if rsa_bits < 1024:
            raise ValueError("RSA modulus must be at least 1024 bits")
        if rng is not None:
            p, q = _seeded_rsa_numbers(rng, rsa_bits)
            n = p * q
            d = pow(RSA_PUBLIC_EXPONENT, -1, (p - 1) * (q - 1))
        else:
            key = rsa.generate_private_key(RSA_PUBLIC_EXPONENT, rsa_bits)
            priv = key.private_numbers()
            n = priv.public_numbers.n
            d = priv.d
        return KeyMaterial(
            scheme=scheme,
            secret=_pack_ints(d, n),
            public=_pack_ints(n, RSA_PUBLIC_EXPONENT),
        )

    if scheme is SchemeId.PBKDF2_MAC:
        if mac_key_bytes < 1:
            raise ValueError("MAC key length must be positive")
        secret = rng.randbytes(mac_key_bytes) if rng else os.urandom(mac_key_bytes)
        return KeyMaterial(scheme=scheme, secret=secret)

    if scheme is SchemeId.AES_CIPHER:
        if aes_key_bytes not in _AES_KEY_SIZES:
            raise ValueError("AES key must be 16, 24, or 32 bytes")
        secret = rng.randbytes(aes_key_bytes) if rng else os.urandom(aes_key_bytes)
        return KeyMaterial(scheme=scheme, secret=secret)

    raise ValueError(f"unsupported scheme id: {scheme!r}")


@functools.lru_cache(maxsize=16)
def _rsa_private_key(key: KeyMaterial) -> rsa.RSAPrivateKey:
    d, n = _unpack_ints(key.secret, 2)
    _, e = _unpack_ints(key.public, 2)
    p, q = rsa.rsa_recover_prime_factors(n, e, d)
    return rsa.RSAPrivateNumbers(
        p=p,
        q=q,
        d=d,
        dmp1=rsa.rsa_crt_dmp1(d, p),
        dmq1=rsa.rsa_crt_dmq1(d, q),
        iqmp=rsa.rsa_crt_iqmp(p, q),
        public_numbers=rsa.RSAPublicNumbers(e, n),
    ).private_key()


def _aes_encrypt(key: KeyMaterial, message: bytes) -> bytes:
    padder = padding.PKCS7(128).padder()
    padded = padder.update(message) + padder.finalize()
    enc = Cipher(algorithms.AES(key.secret), modes.ECB()).encryptor()
    return enc.update(padded) + enc.finalize()


def _aes_decrypt_padded(key: KeyMaterial, code: bytes) -> bytes:
    dec = Cipher(algorithms.AES(key.secret), modes.ECB()).decryptor()
    return dec.update(code) + dec.finalize()


def emit_code(
    key: KeyMaterial,
    message: bytes,
    salt: bytes | None = None,
    *,
    iterations: int = PBKDF2_ITERATIONS,
    max_bytes: int = MAX_MESSAGE_BYTES,
) -> bytes:
    """Produce the integrity-code bytes for `message` under `key`.

    RSA emits a fixed-size signature over a SHA-256 digest; PBKDF2 emits
    salt-prefixed MAC output (salt drawn at random when not supplied); AES
    emits the ECB ciphertext of the padded message.
    """
    if not message:
        raise ValueError("message must be non-empty")
    if len(message) > max_bytes:
        raise MessageTooLargeError(
            f"message of {len(message)} bytes exceeds maximum {max_bytes}"
        )
    if salt is not None and key.scheme is not SchemeId.PBKDF2_MAC:
        raise ValueError("salt is only meaningful for PBKDF2_MAC")

    if key.scheme is SchemeId.RSA_SIGN:
        return _rsa_private_key(key).sign(
            message, asym_padding.PKCS1v15(), hashes.SHA256()
        )

    if key.scheme is SchemeId.PBKDF2_MAC:
        if salt is None:
            salt = os.urandom(MAC_SALT_BYTES)
        elif len(salt) != MAC_SALT_BYTES:
            raise ValueError(f"salt must be exactly {MAC_SALT_BYTES} bytes")
        mac = hashlib.pbkdf2_hmac(
            "sha1", key.secret + message, salt, iterations, MAC_OUTPUT_BYTES
        )
        return salt + mac

    return _aes_encrypt(key, message)


def _require_length(key: KeyMaterial, code: bytes) -> None:
    if key.scheme is SchemeId.RSA_SIGN:
        expected = key.rsa_modulus_bytes
        if len(code) != expected:
            raise CodeFormatError(
                f"RSA code must be {expected} bytes, got {len(code)}"
            )
    elif key.scheme is SchemeId.PBKDF2_MAC:
        if len(code) != MAC_SALT_BYTES + MAC_OUTPUT_BYTES:
            raise CodeFormatError(
                f"MAC code must be {MAC_SALT_BYTES + MAC_OUTPUT_BYTES} bytes, "
                f"got {len(code)}"
            )
    else:
        if len(code) == 0 or len(code) % 16 != 0:
            raise CodeFormatError(
                f"AES code length must be a positive multiple of 16, got {len(code)}"
            )


def check_code(
    key: KeyMaterial,
    message: bytes,
    code: bytes,
    *,
    iterations: int = PBKDF2_ITERATIONS,
) -> bool:
    """Return True iff `code` is the code for `message` under `key`.

    Checking regenerates the code with the secret key and compares. A code
    of implausible length raises CodeFormatError rather than returning
    False, so callers can tell corruption from tampering.
    """
    _require_length(key, code)

    if key.scheme is SchemeId.RSA_SIGN:
        expected = _rsa_private_key(key).sign(
            message, asym_padding.PKCS1v15(), hashes.SHA256()
        )
        return hmac.compare_digest(expected, code)

    if key.scheme is SchemeId.PBKDF2_MAC:
        salt = code[:MAC_SALT_BYTES]
        mac = hashlib.pbkdf2_hmac(
            "sha1", key.secret + message, salt, iterations, MAC_OUTPUT_BYTES
        )
        return hmac.compare_digest(salt + mac, code)

    try:
        recovered = recover_plaintext(key, code)
    except CodeFormatError:
        return False
    return hmac.compare_digest(recovered, message)


def recover_plaintext(key: KeyMaterial, code: bytes) -> bytes:
    """Decrypt an AES code back to the message it was emitted over.

    Signatures and MACs are one-way by design; calling this for them is an
    unsupported operation, not a failure to verify.
    """
    if key.scheme is not SchemeId.AES_CIPHER:
        raise UnsupportedOperationError(
            f"{key.scheme.value} codes cannot be decrypted"
        )
    _require_length(key, code)
    padded = _aes_decrypt_padded(key, code)
    unpadder = padding.PKCS7(128).unpadder()
    try:
        return unpadder.update(padded) + unpadder.finalize()
    except ValueError as exc:
        raise CodeFormatError(f"invalid block padding: {exc}") from None


def code_length(scheme: SchemeId, message_length: int, *, rsa_bits: int = DEFAULT_RSA_BITS) -> int:
    """Closed-form emitted-code length for a message of the given length."""
    if scheme is SchemeId.RSA_SIGN:
        return rsa_bits // 8
    if scheme is SchemeId.PBKDF2_MAC:
        return MAC_SALT_BYTES + MAC_OUTPUT_BYTES
    return ((message_length + 1 + 15) // 16) * 16


def save_key_file(key: KeyMaterial, path) -> None:
    """Write the line-oriented key file (scheme, secret, optional public)."""
    lines = [
        f"scheme={key.scheme.value}\n",
        f"secret={base64.b64encode(key.secret).decode('ascii')}\n",
    ]
    if key.public:
        lines.append(f"public={base64.b64encode(key.public).decode('ascii')}\n")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.writelines(lines)


def load_key_file(path) -> KeyMaterial:
    """Parse a key file; anything but the exact expected shape is rejected."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        text = fh.read()
    if not text.endswith("\n"):
        raise KeyFileError("key file must end with a newline")
    lines = text.split("\n")[:-1]
    if len(lines) not in (2, 3):
        raise KeyFileError(f"expected 2 or 3 lines, found {len(lines)}")

    def take(line: str, prefix: str) -> str:
        if not line.startswith(prefix):
            raise KeyFileError(f"expected {prefix!r} line, found {line!r}")
        return line[len(prefix):]

    scheme_name = take(lines[0], "scheme=")
    try:
        scheme = SchemeId(scheme_name)
    except ValueError:
        raise KeyFileError(f"unknown scheme {scheme_name!r}") from None
    try:
        secret = base64.b64decode(take(lines[1], "secret="), validate=True)
    except ValueError as exc:
        raise KeyFileError(f"bad secret base64: {exc}") from None
    public = b""
    if len(lines) == 3:
        try:
            public = base64.b64decode(take(lines[2], "public="), validate=True)
        except ValueError as exc:
            raise KeyFileError(f"bad public base64: {exc}") from None
    return KeyMaterial(scheme=scheme, secret=secret, public=public)

