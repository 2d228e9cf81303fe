"""Schema DDL, data-file conversion, and load-statement emission.

Data files are pipe-delimited, LF-terminated text. Inside a field, pipe,
backslash, and LF are backslash-escaped (`\\|`, `\\\\`, `\\n`) and a field
that is exactly `\\N` is NULL, matching common dump conventions. Converted
files interleave a `base64(code):serial` cell after every field (field
model) or append serial and base64 code cells to each row (tuple model);
the original field bytes pass through untouched.

Code persistence encoding (base64 cells) lives here; codes cross module
boundaries as raw bytes everywhere else.
"""

from __future__ import annotations

import base64
import hashlib
import os
from dataclasses import dataclass

from . import codec, schemes
from .codec import FieldCoordinates, IntegrityCode, TupleImage
from .errors import CodeFormatError, ConversionError, SchemaError
from .icrl import Icrl
from .schema import Model, TableSchema
from .schemes import KeyMaterial, SchemeId

FIELD_DELIMITER = "|"


def escape_field(value: str | None) -> str:
    if value is None:
        return "\\N"
    return (
        value.replace("\\", "\\\\").replace("|", "\\|").replace("\n", "\\n")
    )


def unescape_field(raw: str) -> str | None:
    if raw == "\\N":
        return None
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\":
            i += 1
            if i >= len(raw):
                raise ConversionError("dangling backslash in field")
            esc = raw[i]
            if esc == "\\":
                out.append("\\")
            elif esc == "|":
                out.append("|")
            elif esc == "n":
                out.append("\n")
            elif esc == "N":
                out.append("N")
            else:
                raise ConversionError(f"unknown escape sequence \\{esc}")
        elif c in ("|", "\n"):
            raise ConversionError(f"unescaped {c!r} inside field")
        else:
            out.append(c)
        i += 1
    return "".join(out)


def split_record(line: str) -> list[str]:
    """Split one record into raw (still escaped) cells."""
    cells = []
    current = []
    i = 0
    while i < len(line):
        c = line[i]
        if c == "\\" and i + 1 < len(line):
            current.append(line[i : i + 2])
            i += 2
            continue
        if c == FIELD_DELIMITER:
            cells.append("".join(current))
            current = []
        else:
            current.append(c)
        i += 1
    cells.append("".join(current))
    return cells


def read_data_file(path) -> list[list[str | None]]:
    """Parse a data file into rows of decoded cell values."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    if not text:
        return rows
    if not text.endswith("\n"):
        raise ConversionError(f"{path}: missing trailing newline")
    for lineno, line in enumerate(text.split("\n")[:-1], start=1):
        try:
            rows.append([unescape_field(cell) for cell in split_record(line)])
        except ConversionError as exc:
            raise ConversionError(f"{path}: row {lineno}: {exc}") from None
    return rows


def write_data_file(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in rows:
            fh.write(FIELD_DELIMITER.join(escape_field(cell) for cell in row))
            fh.write("\n")


def encode_code(code: bytes) -> str:
    return base64.b64encode(code).decode("ascii")


def decode_code(cell: str) -> bytes:
    try:
        return base64.b64decode(cell.encode("ascii"), validate=True)
    except (ValueError, UnicodeEncodeError) as exc:
        raise CodeFormatError(f"bad base64 code cell: {exc}") from None


def encode_field_cell(ic: IntegrityCode) -> str:
    """Field-model code cell: base64 code and serial share one cell."""
    return f"{encode_code(ic.code)}:{ic.serial}"


def decode_field_cell(cell: str, scheme: SchemeId) -> IntegrityCode:
    code_part, sep, serial_part = cell.rpartition(":")
    if not sep or not serial_part.isdigit():
        raise CodeFormatError("field code cell must be <base64>:<serial>")
    try:
        ic = IntegrityCode(scheme, decode_code(code_part), int(serial_part))
    except ValueError as exc:
        raise CodeFormatError(str(exc)) from None
    return ic


def _conversion_salt(message: bytes) -> bytes:
    # Derived, not random, so repeated conversions are byte-identical.
    return hashlib.sha256(message).digest()[: schemes.MAC_SALT_BYTES]


def emit_schema_ddl(schema: TableSchema, model: Model, ic_suffix: str = "_IC") -> list[str]:
    """ALTER statements that bring a plain table into the coded layout."""
    if schema.model is not None:
        raise SchemaError(f"{schema.table_name}: schema is already converted")
    converted = schema.converted(model, ic_suffix)  # raises on name collisions
    table = _quote_ident(schema.table_name)
    statements = []
    if model is Model.OCF:
        for col in schema.columns:
            statements.append(
                f"ALTER TABLE {table} ADD COLUMN "
                f"{_quote_ident(col.name + ic_suffix)} TEXT NOT NULL "
                f"AFTER {_quote_ident(col.name)};"
            )
    else:
        statements.append(
            f"ALTER TABLE {table} ADD COLUMN "
            f"{_quote_ident(converted.serial_column.name)} BIGINT UNSIGNED NOT NULL;"
        )
        statements.append(
            f"ALTER TABLE {table} ADD COLUMN "
            f"{_quote_ident(converted.tuple_ic_column.name)} TEXT NOT NULL;"
        )
    return statements


def _quote_ident(name: str) -> str:
    return "`" + name.replace("`", "``") + "`"


def _quote_path(path: str) -> str:
    return "'" + path.replace("\\", "\\\\").replace("'", "\\'") + "'"


def emit_load_statements(schema: TableSchema, path: str) -> str:
    """LOAD DATA statement for one table's converted data file."""
    return (
        f"LOAD DATA INFILE {_quote_path(path)}\n"
        f"REPLACE INTO TABLE {_quote_ident(schema.table_name)}\n"
        f"FIELDS TERMINATED BY '|'\n"
        f"LINES TERMINATED BY '\\n';"
    )


@dataclass
class ConversionResult:
    table: str
    rows: int
    codes: int
    input_bytes: int
    output_bytes: int


def convert_data_file(
    in_path,
    out_path,
    schema: TableSchema,
    model: Model,
    key: KeyMaterial,
    icrl: Icrl,
    *,
    bind_table: bool = False,
) -> ConversionResult:
    """Convert one table's dump into its integrity-coded form.

    Serials are allocated row-major (per field under OCF, per row under
    OCT); the ICRL watermark advances by exactly the number of codes
    emitted. MAC salts are derived from the canonical message so converting
    the same input with a fresh ICRL reproduces the output byte for byte.
    """
    if schema.model is not None:
        raise SchemaError(f"{schema.table_name}: pass the plain schema")
    width = len(schema.columns)
    key_positions = [
        i for i, col in enumerate(schema.columns) if col.is_key
    ]
    use_salt = key.scheme is SchemeId.PBKDF2_MAC

    codes = 0
    rows = 0
    with open(in_path, "r", encoding="utf-8", newline="") as src, open(
        out_path, "w", encoding="utf-8", newline=""
    ) as dst:
        text = src.read()
        if text and not text.endswith("\n"):
            raise ConversionError(f"{in_path}: missing trailing newline")
        lines = text.split("\n")[:-1] if text else []
        for lineno, line in enumerate(lines, start=1):
            raw_cells = split_record(line)
            if len(raw_cells) != width:
                raise ConversionError(
                    f"{in_path}: row {lineno}: expected {width} fields, "
                    f"found {len(raw_cells)}"
                )
            try:
                values = [unescape_field(cell) for cell in raw_cells]
            except ConversionError as exc:
                raise ConversionError(f"{in_path}: row {lineno}: {exc}") from None

            if model is Model.OCF:
                entity_key = []
                for pos in key_positions:
                    if values[pos] is None:
                        raise ConversionError(
                            f"{in_path}: row {lineno}: NULL primary key value"
                        )
                    entity_key.append(values[pos])
                entity_key = tuple(entity_key)
                serials = icrl.allocate(width)
                out_cells = []
                for col, raw, value, serial in zip(
                    schema.columns, raw_cells, values, serials
                ):
                    message = codec.canonical_field_message(
                        FieldCoordinates(schema.table_name, col.name, entity_key),
                        value,
                        serial,
                        bind_table=bind_table,
                    )
                    salt = _conversion_salt(message) if use_salt else None
                    code = schemes.emit_code(key, message, salt)
                    out_cells.append(raw)
                    out_cells.append(encode_field_cell(IntegrityCode(key.scheme, code, serial)))
                codes += width
            else:
                (serial,) = icrl.allocate(1)
                image = TupleImage(
                    schema.table_name,
                    tuple((col.name, v) for col, v in zip(schema.columns, values)),
                )
                message = codec.canonical_tuple_message(image, serial)
                salt = _conversion_salt(message) if use_salt else None
                code = schemes.emit_code(key, message, salt)
                out_cells = list(raw_cells) + [str(serial), encode_code(code)]
                codes += 1

            dst.write(FIELD_DELIMITER.join(out_cells))
            dst.write("\n")
            rows += 1

    return ConversionResult(
        table=schema.table_name,
        rows=rows,
        codes=codes,
        input_bytes=os.path.getsize(in_path),
        output_bytes=os.path.getsize(out_path),
    )


def _b64_length(raw_length: int) -> int:
    return 4 * ((raw_length + 2) // 3)


def predict_converted_size(
    in_path,
    schema: TableSchema,
    model: Model,
    scheme: SchemeId,
    *,
    next_serial: int = 1,
    bind_table: bool = False,
    rsa_bits: int = schemes.DEFAULT_RSA_BITS,
) -> int:
    """Closed-form output size of convert_data_file, in bytes.

    Computed purely from the input text and the schemes' length laws; no
    code is ever emitted, so this is an independent check on conversion.
    """
    total = os.path.getsize(in_path)
    serial = next_serial
    rows = read_data_file(in_path)
    width = len(schema.columns)
    key_positions = [i for i, col in enumerate(schema.columns) if col.is_key]
    for lineno, values in enumerate(rows, start=1):
        if len(values) != width:
            raise ConversionError(
                f"{in_path}: row {lineno}: expected {width} fields, "
                f"found {len(values)}"
            )
        if model is Model.OCF:
            if any(values[pos] is None for pos in key_positions):
                raise ConversionError(
                    f"{in_path}: row {lineno}: NULL primary key value"
                )
            entity_key = tuple(values[pos] for pos in key_positions)
            for col, value in zip(schema.columns, values):
                message_len = len(
                    codec.canonical_field_message(
                        FieldCoordinates(schema.table_name, col.name, entity_key),
                        value,
                        serial,
                        bind_table=bind_table,
                    )
                )
                code_len = schemes.code_length(scheme, message_len, rsa_bits=rsa_bits)
                total += 1 + _b64_length(code_len) + 1 + len(str(serial))
                serial += 1
        else:
            image = TupleImage(
                schema.table_name,
                tuple((col.name, v) for col, v in zip(schema.columns, values)),
            )
            message_len = len(codec.canonical_tuple_message(image, serial))
            code_len = schemes.code_length(scheme, message_len, rsa_bits=rsa_bits)
            total += 1 + len(str(serial)) + 1 + _b64_length(code_len)
            serial += 1
    return total
