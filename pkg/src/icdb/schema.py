"""Table layouts for plain and integrity-coded tables."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace

from .errors import SchemaError

DEFAULT_IC_SUFFIX = "_IC"
SERIAL_COLUMN = "Serial"
TUPLE_IC_COLUMN = "IC"


class Model(enum.Enum):
    OCF = "ocf"  # one code per field
    OCT = "oct"  # one code per tuple

    @classmethod
    def from_cli(cls, name: str) -> "Model":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown model {name!r} (expected ocf or oct)") from None


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    is_key: bool = False
    is_ic: bool = False
    is_serial: bool = False


@dataclass(frozen=True)
class TableSchema:
    """Ordered column layout of one table.

    `model` is None for a plain (not yet converted) table. Converted
    layouts are validated structurally: under OCF every data column is
    immediately followed by its code companion; under OCT the table ends
    with exactly one serial column and one code column.
    """

    table_name: str
    columns: tuple[ColumnSpec, ...]
    model: Model | None = None
    ic_suffix: str = DEFAULT_IC_SUFFIX

    def __post_init__(self):
        if not self.table_name:
            raise SchemaError("table name must be non-empty")
        if not self.columns:
            raise SchemaError(f"{self.table_name}: table has no columns")
        names = [c.name.lower() for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"{self.table_name}: duplicate column names")
        if not any(c.is_key for c in self.columns):
            raise SchemaError(f"{self.table_name}: at least one key column required")
        if self.model is None:
            if any(c.is_ic or c.is_serial for c in self.columns):
                raise SchemaError(
                    f"{self.table_name}: plain schema cannot carry code columns"
                )
        elif self.model is Model.OCF:
            self._validate_ocf()
        else:
            self._validate_oct()

    def _validate_ocf(self):
        if any(c.is_serial for c in self.columns):
            raise SchemaError(f"{self.table_name}: OCF tables have no serial column")
        cols = self.columns
        i = 0
        while i < len(cols):
            col = cols[i]
            if col.is_ic:
                raise SchemaError(
                    f"{self.table_name}: code column {col.name} has no data column"
                )
            expected = col.name + self.ic_suffix
            if i + 1 >= len(cols) or not cols[i + 1].is_ic or cols[i + 1].name != expected:
                raise SchemaError(
                    f"{self.table_name}: column {col.name} lacks companion {expected}"
                )
            i += 2

    def _validate_oct(self):
        serials = [c for c in self.columns if c.is_serial]
        ics = [c for c in self.columns if c.is_ic]
        if len(serials) != 1 or len(ics) != 1:
            raise SchemaError(
                f"{self.table_name}: OCT requires exactly one serial and one code column"
            )
        if self.columns[-2:] != (serials[0], ics[0]):
            raise SchemaError(
                f"{self.table_name}: serial and code columns must close the table"
            )

    @property
    def data_columns(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if not c.is_ic and not c.is_serial)

    @property
    def key_columns(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.data_columns if c.is_key)

    @property
    def serial_column(self) -> ColumnSpec:
        return next(c for c in self.columns if c.is_serial)

    @property
    def tuple_ic_column(self) -> ColumnSpec:
        return next(c for c in self.columns if c.is_ic)

    def find_column(self, name: str) -> ColumnSpec | None:
        lowered = name.lower()
        for col in self.columns:
            if col.name.lower() == lowered:
                return col
        return None

    def has_column(self, name: str) -> bool:
        return self.find_column(name) is not None

    def ic_column_for(self, name: str) -> str:
        """Name of the code companion for a data column (OCF layouts)."""
        return name + self.ic_suffix

    def converted(self, model: Model, ic_suffix: str = DEFAULT_IC_SUFFIX) -> "TableSchema":
        """Derive the integrity-coded layout from a plain layout."""
        if self.model is not None:
            raise SchemaError(f"{self.table_name}: already converted")
        if model is Model.OCF:
            cols: list[ColumnSpec] = []
            for col in self.columns:
                companion = col.name + ic_suffix
                if self.has_column(companion):
                    raise SchemaError(
                        f"{self.table_name}: column {companion} already exists"
                    )
                cols.append(col)
                cols.append(ColumnSpec(companion, is_ic=True))
        else:
            for reserved in (SERIAL_COLUMN, TUPLE_IC_COLUMN):
                if self.has_column(reserved):
                    raise SchemaError(
                        f"{self.table_name}: column {reserved} already exists"
                    )
            cols = list(self.columns) + [
                ColumnSpec(SERIAL_COLUMN, is_serial=True),
                ColumnSpec(TUPLE_IC_COLUMN, is_ic=True),
            ]
        return replace(self, columns=tuple(cols), model=model, ic_suffix=ic_suffix)


def catalog(schemas) -> dict[str, TableSchema]:
    """Index schemas by lower-cased table name for case-insensitive lookup."""
    out: dict[str, TableSchema] = {}
    for schema in schemas:
        key = schema.table_name.lower()
        if key in out:
            raise SchemaError(f"duplicate table name {schema.table_name}")
        out[key] = schema
    return out


def lookup_table(schemas: dict[str, TableSchema], name: str) -> TableSchema | None:
    return schemas.get(name.lower())


def schemas_to_json(schemas) -> str:
    """Serialize plain schemas to the schema.json wire form."""
    tables = []
    for schema in schemas:
        tables.append(
            {
                "name": schema.table_name,
                "columns": [
                    {"name": c.name, **({"key": True} if c.is_key else {})}
                    for c in schema.columns
                ],
            }
        )
    return json.dumps({"tables": tables}, indent=2) + "\n"


def schemas_from_json(text: str) -> list[TableSchema]:
    doc = json.loads(text)
    schemas = []
    for table in doc["tables"]:
        columns = tuple(
            ColumnSpec(col["name"], is_key=bool(col.get("key", False)))
            for col in table["columns"]
        )
        schemas.append(TableSchema(table["name"], columns))
    return schemas
