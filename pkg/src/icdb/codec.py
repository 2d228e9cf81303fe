"""Integrity-code construction and checking for both granularity models.

A field code binds (serial, attribute name, value, entity key) together; a
tuple code binds the row's values in schema order plus its serial. The
bound parts are serialized into one canonical byte message using
unit-separator delimiters with an escape byte, so distinct inputs always
produce distinct messages:

    field:  <serial> FS <attr> FS <value> FS <key1> RS <key2> ...
    tuple:  <value1> FS <value2> ... FS <serial>

where FS = 0x1F, RS = 0x1E, the escape prefix is 0x10, and a NULL value is
the single byte 0x00 (distinct from the empty string). Serial digits are
plain ASCII and never escaped.

Given immutable key material and an ICRL snapshot every operation here is
pure, so code generation and verification over distinct coordinates may
run data-parallel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import schemes
from .errors import CodeFormatError, SchemeMismatchError
from .schemes import KeyMaterial, SchemeId

ESCAPE = 0x10
FIELD_SEP = 0x1F
KEY_SEP = 0x1E
NULL_TOKEN = b"\x00"
_ESCAPED = frozenset((ESCAPE, FIELD_SEP, KEY_SEP, 0x00))


class VerdictStatus(enum.Enum):
    VALID = "VALID"
    FORGED = "FORGED"
    STALE = "STALE"
    STRUCTURAL = "STRUCTURAL"


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status is VerdictStatus.VALID


@dataclass(frozen=True)
class IntegrityCode:
    """Code bytes plus the serial that binds freshness.

    Serial 0 is reserved to mean "absent" and is never attached to a code.
    """

    scheme: SchemeId
    code: bytes
    serial: int

    def __post_init__(self):
        if self.serial < 1:
            raise ValueError("serial must be a positive integer")


@dataclass(frozen=True)
class FieldCoordinates:
    """Where a field lives: table, attribute, and owning row's key values."""

    table_name: str
    attribute_name: str
    entity_key: tuple[str, ...]

    def __post_init__(self):
        if not self.table_name or not self.attribute_name:
            raise ValueError("identifiers must be non-empty")
        if not self.entity_key:
            raise ValueError("entity key must have at least one part")


@dataclass(frozen=True)
class TupleImage:
    """A row's values in declared column order, with their attribute names."""

    table_name: str
    values: tuple[tuple[str, str | None], ...]

    def __post_init__(self):
        if not self.table_name:
            raise ValueError("table name must be non-empty")
        names = [name for name, _ in self.values]
        if len(set(names)) != len(names):
            raise ValueError("duplicate attribute names in tuple")


def escape_bytes(raw: bytes) -> bytes:
    if not any(b in _ESCAPED for b in raw):
        return raw
    out = bytearray()
    for b in raw:
        if b in _ESCAPED:
            out.append(ESCAPE)
        out.append(b)
    return bytes(out)


def unescape_bytes(raw: bytes) -> bytes:
    out = bytearray()
    i = 0
    while i < len(raw):
        b = raw[i]
        if b == ESCAPE:
            i += 1
            if i >= len(raw):
                raise CodeFormatError("dangling escape byte")
            out.append(raw[i])
        elif b in _ESCAPED:
            raise CodeFormatError(f"unescaped reserved byte 0x{b:02x}")
        else:
            out.append(b)
        i += 1
    return bytes(out)


def _encode_value(value: str | None) -> bytes:
    if value is None:
        return NULL_TOKEN
    return escape_bytes(value.encode("utf-8"))


def _decode_value(segment: bytes) -> str | None:
    if segment == NULL_TOKEN:
        return None
    return unescape_bytes(segment).decode("utf-8")


def canonical_field_message(
    coords: FieldCoordinates,
    value: str | None,
    serial: int,
    *,
    bind_table: bool = False,
) -> bytes:
    """Serialize the parts a field code must bind into one byte message.

    `bind_table` additionally appends the table name, closing the
    cross-table substitution channel for identical (attr, key, value)
    triples; it defaults off and must match between generation and
    verification.
    """
    key_blob = KEY_SEP.to_bytes(1, "big").join(
        escape_bytes(part.encode("utf-8")) for part in coords.entity_key
    )
    parts = [
        str(serial).encode("ascii"),
        escape_bytes(coords.attribute_name.encode("utf-8")),
        _encode_value(value),
        key_blob,
    ]
    if bind_table:
        parts.append(escape_bytes(coords.table_name.encode("utf-8")))
    return FIELD_SEP.to_bytes(1, "big").join(parts)


def canonical_tuple_message(tuple_image: TupleImage, serial: int) -> bytes:
    """Serialize a row's values (schema order) plus its serial."""
    sep = FIELD_SEP.to_bytes(1, "big")
    parts = [_encode_value(v) for _, v in tuple_image.values]
    parts.append(str(serial).encode("ascii"))
    return sep.join(parts)


def parse_tuple_message(message: bytes, expected_fields: int) -> tuple[list[str | None], int]:
    """Inverse of canonical_tuple_message; raises CodeFormatError on garbage."""
    segments: list[bytes] = []
    current = bytearray()
    i = 0
    while i < len(message):
        b = message[i]
        if b == ESCAPE:
            if i + 1 >= len(message):
                raise CodeFormatError("dangling escape byte")
            current += message[i : i + 2]
            i += 2
            continue
        if b == FIELD_SEP:
            segments.append(bytes(current))
            current = bytearray()
        else:
            current.append(b)
        i += 1
    segments.append(bytes(current))
    if len(segments) != expected_fields + 1:
        raise CodeFormatError(
            f"expected {expected_fields} values plus serial, found "
            f"{len(segments)} segments"
        )
    serial_part = segments[-1]
    if not serial_part.isdigit():
        raise CodeFormatError("serial segment is not numeric")
    try:
        values = [_decode_value(seg) for seg in segments[:-1]]
    except UnicodeDecodeError as exc:
        raise CodeFormatError(f"recovered value is not UTF-8: {exc}") from None
    return values, int(serial_part)


def generate_field_code(
    key: KeyMaterial,
    coords: FieldCoordinates,
    value: str | None,
    serial: int,
    *,
    bind_table: bool = False,
    salt: bytes | None = None,
) -> IntegrityCode:
    """Emit the integrity code for one field. The serial must come from an
    ICRL allocation."""
    message = canonical_field_message(coords, value, serial, bind_table=bind_table)
    return IntegrityCode(key.scheme, schemes.emit_code(key, message, salt), serial)


def generate_tuple_code(
    key: KeyMaterial,
    tuple_image: TupleImage,
    serial: int,
    *,
    salt: bytes | None = None,
) -> IntegrityCode:
    """Emit the integrity code for one whole row."""
    message = canonical_tuple_message(tuple_image, serial)
    return IntegrityCode(key.scheme, schemes.emit_code(key, message, salt), serial)


def verify_field_code(
    key: KeyMaterial,
    coords: FieldCoordinates,
    value: str | None,
    ic: IntegrityCode,
    icrl,
    *,
    bind_table: bool = False,
) -> Verdict:
    """Check a field against its code and the revocation list.

    FORGED outranks STALE: staleness is only reported for a code that
    itself checks out but whose serial has been revoked or was never
    allocated.
    """
    if ic.scheme is not key.scheme:
        raise SchemeMismatchError(
            f"code was produced by {ic.scheme.value} but key is {key.scheme.value}"
        )
    message = canonical_field_message(coords, value, ic.serial, bind_table=bind_table)
    try:
        matches = schemes.check_code(key, message, ic.code)
    except CodeFormatError as exc:
        return Verdict(VerdictStatus.STRUCTURAL, str(exc))
    if not matches:
        return Verdict(
            VerdictStatus.FORGED,
            f"code mismatch for {coords.table_name}.{coords.attribute_name}",
        )
    if not icrl.is_valid(ic.serial):
        return Verdict(VerdictStatus.STALE, f"serial {ic.serial} is not valid")
    return Verdict(VerdictStatus.VALID)


def verify_tuple_code(
    key: KeyMaterial,
    tuple_image: TupleImage,
    ic: IntegrityCode,
    icrl,
) -> tuple[Verdict, list[str] | None]:
    """Check a whole row against its code and the revocation list.

    For a forged AES code the ciphertext is decrypted and re-parsed so the
    verdict can carry the attribute names whose recovered value differs
    from the presented one. Signature and MAC schemes cannot recover, so
    their diff list is None: the row is known bad, not which cell.
    """
    if ic.scheme is not key.scheme:
        raise SchemeMismatchError(
            f"code was produced by {ic.scheme.value} but key is {key.scheme.value}"
        )
    message = canonical_tuple_message(tuple_image, ic.serial)
    try:
        matches = schemes.check_code(key, message, ic.code)
    except CodeFormatError as exc:
        return Verdict(VerdictStatus.STRUCTURAL, str(exc)), None
    if matches:
        if not icrl.is_valid(ic.serial):
            return Verdict(VerdictStatus.STALE, f"serial {ic.serial} is not valid"), None
        return Verdict(VerdictStatus.VALID), None

    if key.scheme is not SchemeId.AES_CIPHER:
        return (
            Verdict(VerdictStatus.FORGED, f"tuple code mismatch in {tuple_image.table_name}"),
            None,
        )
    try:
        recovered = schemes.recover_plaintext(key, ic.code)
        values, recovered_serial = parse_tuple_message(recovered, len(tuple_image.values))
    except CodeFormatError as exc:
        return Verdict(VerdictStatus.STRUCTURAL, f"unparseable recovered tuple: {exc}"), None
    diffs = [
        name
        for (name, presented), recovered_value in zip(tuple_image.values, values)
        if presented != recovered_value
    ]
    detail = f"tuple code mismatch in {tuple_image.table_name}"
    if recovered_serial != ic.serial:
        detail += f" (code embeds serial {recovered_serial}, row claims {ic.serial})"
    return Verdict(VerdictStatus.FORGED, detail), diffs
