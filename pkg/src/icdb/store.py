"""Execution backends and the adversary's toolbox.

Connector is the minimal contract the pipeline needs: execute one
statement, get text cells back (None for absent values). EmbeddedStore
implements the same SQL subset the rewriter parses, entirely in memory, so
the whole pipeline can be exercised hermetically; an external server is
reached through an adapter loaded from a DSN.

The attack_* operations mutate stored cells the way the threat model's
adversary would: each touches exactly the cells it names and nothing else.
EmbeddedStore is single-writer/multi-reader; attacks require the writer.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Protocol

from . import convert, sqlast
from .errors import BindError, ConstraintViolation, StoreError, UnsupportedSqlError
from .schema import TableSchema
from .sqlast import (
    And,
    ColumnRef,
    Comparison,
    DeleteQuery,
    InsertQuery,
    Join,
    Literal,
    Or,
    Paren,
    SelectQuery,
)

@dataclass
class ExecResult:
    columns: list[str]
    rows: list[list[str | None]]
    rowcount: int = 0


class Connector(Protocol):
    supports_load_data: bool
    supports_alter: bool

    def execute(self, sql: str) -> ExecResult: ...


def compare_cells(left: str | None, right: str | None, op: str) -> bool:
    """Loose text comparison: numeric when both sides parse as decimals,
    lexicographic otherwise; any NULL operand compares false."""
    if left is None or right is None:
        return False
    try:
        l, r = Decimal(left), Decimal(right)
    except InvalidOperation:
        l, r = left, right
    if op == "=":
        return l == r
    if op in ("!=", "<>"):
        return l != r
    if op == "<":
        return l < r
    if op == ">":
        return l > r
    if op == "<=":
        return l <= r
    if op == ">=":
        return l >= r
    raise StoreError(f"unknown operator {op!r}")


@dataclass
class _Table:
    schema: TableSchema
    rows: list[list[str | None]] = field(default_factory=list)

    @property
    def key_positions(self) -> list[int]:
        return [
            i for i, col in enumerate(self.schema.columns) if col.is_key
        ]

    def key_of(self, row) -> tuple:
        return tuple(row[i] for i in self.key_positions)


class EmbeddedStore:
    """In-memory tables evaluating the SQL subset with text-typed cells."""

    supports_load_data = False
    supports_alter = False

    def __init__(self):
        self._tables: dict[str, _Table] = {}

    # --- table management -------------------------------------------------

    def create_table(self, schema: TableSchema) -> None:
        key = schema.table_name.lower()
        if key in self._tables:
            raise StoreError(f"table {schema.table_name} already exists")
        self._tables[key] = _Table(schema)

    def table(self, name: str) -> _Table:
        tab = self._tables.get(name.lower())
        if tab is None:
            raise BindError(f"unknown table {name!r}")
        return tab

    def table_names(self) -> list[str]:
        return [t.schema.table_name for t in self._tables.values()]

    def load_data_file(self, table_name: str, path) -> int:
        """Native bulk load of a data file into an existing table."""
        tab = self.table(table_name)
        rows = convert.read_data_file(path)
        width = len(tab.schema.columns)
        for lineno, row in enumerate(rows, start=1):
            if len(row) != width:
                raise StoreError(
                    f"{path}: row {lineno}: expected {width} cells, found {len(row)}"
                )
            self._insert_row(tab, row)
        return len(rows)

    def rows_of(self, table_name: str) -> list[list[str | None]]:
        return [list(r) for r in self.table(table_name).rows]

    # --- SQL execution ------------------------------------------------------

    def execute(self, sql: str) -> ExecResult:
        query = sqlast.parse(sql)
        if isinstance(query, SelectQuery):
            return self._execute_select(query)
        if isinstance(query, DeleteQuery):
            return self._execute_delete(query)
        if isinstance(query, InsertQuery):
            return self._execute_insert(query)
        raise UnsupportedSqlError(f"cannot execute {query.kind}")

    def _scope(self, query: SelectQuery) -> list[_Table]:
        return [self.table(ref.name.name) for ref in query.tables]

    def _resolve(self, ref: ColumnRef, scope: list[_Table]) -> tuple[int, int]:
        """Map a column reference to (table position, column position)."""
        if ref.table is not None:
            for t_idx, tab in enumerate(scope):
                if tab.schema.table_name.lower() == ref.table.name.lower():
                    col = tab.schema.find_column(ref.column.name)
                    if col is None:
                        raise BindError(
                            f"unknown column {ref.column.name!r} in "
                            f"{tab.schema.table_name}"
                        )
                    return t_idx, _position(tab.schema, col.name)
            raise BindError(f"table {ref.table.name!r} is not in the query scope")
        hits = []
        for t_idx, tab in enumerate(scope):
            col = tab.schema.find_column(ref.column.name)
            if col is not None:
                hits.append((t_idx, _position(tab.schema, col.name)))
        if not hits:
            raise BindError(f"unknown column {ref.column.name!r}")
        if len(hits) > 1:
            raise BindError(f"ambiguous column {ref.column.name!r}")
        return hits[0]

    def _execute_select(self, query: SelectQuery) -> ExecResult:
        scope = self._scope(query)

        # Build the joined row stream: start with the first table, then fold
        # in comma tables (cross product) and INNER JOINs (equality).
        combos: list[tuple[list[str | None], ...]] = [
            (row,) for row in scope[0].rows
        ]
        seen = 1
        for item in query.from_items[1:]:
            tab = self.table(item.table.name.name if isinstance(item, Join) else item.name.name)
            partial_scope = scope[: seen + 1]
            if isinstance(item, Join):
                lt, lc = self._resolve(item.left, partial_scope)
                rt, rc = self._resolve(item.right, partial_scope)
                new_combos = []
                for combo in combos:
                    for row in tab.rows:
                        joined = combo + (row,)
                        if compare_cells(joined[lt][lc], joined[rt][rc], "="):
                            new_combos.append(joined)
                combos = new_combos
            else:
                combos = [combo + (row,) for combo in combos for row in tab.rows]
            seen += 1

        if query.where is not None:
            predicate = self._compile_expr(query.where, scope)
            combos = [c for c in combos if predicate(c)]

        if query.star:
            columns: list[str] = []
            pickers: list[tuple[int, int]] = []
            qualify = len(scope) > 1
            for t_idx, tab in enumerate(scope):
                for c_idx, col in enumerate(tab.schema.columns):
                    name = (
                        f"{tab.schema.table_name}.{col.name}" if qualify else col.name
                    )
                    columns.append(name)
                    pickers.append((t_idx, c_idx))
        else:
            columns = [ref.display for ref in query.items]
            pickers = [self._resolve(ref, scope) for ref in query.items]

        rows = [[combo[t][c] for t, c in pickers] for combo in combos]
        if query.distinct:
            unique: list[list[str | None]] = []
            seen_rows = set()
            for row in rows:
                key = tuple(row)
                if key not in seen_rows:
                    seen_rows.add(key)
                    unique.append(row)
            rows = unique
        return ExecResult(columns=columns, rows=rows, rowcount=len(rows))

    def _compile_expr(self, expr, scope):
        if isinstance(expr, Paren):
            return self._compile_expr(expr.inner, scope)
        if isinstance(expr, And):
            left = self._compile_expr(expr.left, scope)
            right = self._compile_expr(expr.right, scope)
            return lambda combo: left(combo) and right(combo)
        if isinstance(expr, Or):
            left = self._compile_expr(expr.left, scope)
            right = self._compile_expr(expr.right, scope)
            return lambda combo: left(combo) or right(combo)
        if isinstance(expr, Comparison):
            left = self._compile_operand(expr.left, scope)
            right = self._compile_operand(expr.right, scope)
            op = expr.op
            return lambda combo: compare_cells(left(combo), right(combo), op)
        raise StoreError(f"cannot evaluate {expr!r}")

    def _compile_operand(self, operand, scope):
        if isinstance(operand, Literal):
            text = operand.text
            return lambda combo: text
        t_idx, c_idx = self._resolve(operand, scope)
        return lambda combo: combo[t_idx][c_idx]

    def _execute_delete(self, query: DeleteQuery) -> ExecResult:
        tab = self.table(query.table.name.name)
        if query.where is None:
            count = len(tab.rows)
            tab.rows.clear()
            return ExecResult(columns=[], rows=[], rowcount=count)
        predicate = self._compile_expr(query.where, [tab])
        kept, removed = [], 0
        for row in tab.rows:
            if predicate((row,)):
                removed += 1
            else:
                kept.append(row)
        tab.rows = kept
        return ExecResult(columns=[], rows=[], rowcount=removed)

    def _execute_insert(self, query: InsertQuery) -> ExecResult:
        tab = self.table(query.table.name.name)
        schema = tab.schema
        row: list[str | None] = [None] * len(schema.columns)
        seen = set()
        for ident, literal in zip(query.columns, query.values):
            col = schema.find_column(ident.name)
            if col is None:
                raise BindError(
                    f"unknown column {ident.name!r} in {schema.table_name}"
                )
            if col.name.lower() in seen:
                raise StoreError(f"column {ident.name!r} supplied twice")
            seen.add(col.name.lower())
            row[_position(schema, col.name)] = literal.text
        self._insert_row(tab, row)
        return ExecResult(columns=[], rows=[], rowcount=1)

    def _insert_row(self, tab: _Table, row: list[str | None]) -> None:
        key = tab.key_of(row)
        if any(part is None for part in key):
            raise ConstraintViolation(
                f"{tab.schema.table_name}: NULL in primary key"
            )
        if any(tab.key_of(existing) == key for existing in tab.rows):
            raise ConstraintViolation(
                f"{tab.schema.table_name}: duplicate primary key {key!r}"
            )
        tab.rows.append(list(row))


def _position(schema: TableSchema, name: str) -> int:
    lowered = name.lower()
    for i, col in enumerate(schema.columns):
        if col.name.lower() == lowered:
            return i
    raise BindError(f"unknown column {name!r} in {schema.table_name}")


# --- adversary operations ----------------------------------------------------


def _locate_row(store: EmbeddedStore, table: str, row_key) -> tuple[_Table, int]:
    tab = store.table(table)
    wanted = tuple(row_key)
    for idx, row in enumerate(tab.rows):
        if tab.key_of(row) == wanted:
            return tab, idx
    raise StoreError(f"{table}: no row with key {wanted!r}")


def attack_forge(
    store: EmbeddedStore,
    table: str,
    row_key,
    column: str,
    *,
    new_value: str | None = None,
    new_code: str | None = None,
) -> None:
    """Overwrite one cell in place: the named data cell, or (via new_code)
    the code cell guarding it."""
    if (new_value is None) == (new_code is None):
        raise StoreError("pass exactly one of new_value or new_code")
    tab, idx = _locate_row(store, table, row_key)
    schema = tab.schema
    if new_value is not None:
        tab.rows[idx][_position(schema, column)] = new_value
        return
    if schema.model is not None and schema.model.value == "ocf":
        col = schema.find_column(column)
        if col is None:
            raise BindError(f"unknown column {column!r} in {schema.table_name}")
        target = schema.ic_column_for(col.name)
    else:
        target = schema.tuple_ic_column.name
    tab.rows[idx][_position(schema, target)] = new_code


def attack_substitute(
    store: EmbeddedStore,
    table: str,
    coord_a: tuple,
    coord_b: tuple,
    *,
    move_codes: bool = False,
) -> None:
    """Swap the values at two (row_key, column) coordinates; with
    move_codes the guarding code cells travel along."""
    (key_a, col_a), (key_b, col_b) = coord_a, coord_b
    tab_a, idx_a = _locate_row(store, table, key_a)
    tab_b, idx_b = _locate_row(store, table, key_b)
    schema = tab_a.schema
    pos_a, pos_b = _position(schema, col_a), _position(schema, col_b)
    rows = store.table(table).rows
    rows[idx_a][pos_a], rows[idx_b][pos_b] = rows[idx_b][pos_b], rows[idx_a][pos_a]
    if move_codes:
        if schema.model is not None and schema.model.value == "ocf":
            ic_a = _position(schema, schema.ic_column_for(schema.find_column(col_a).name))
            ic_b = _position(schema, schema.ic_column_for(schema.find_column(col_b).name))
            rows[idx_a][ic_a], rows[idx_b][ic_b] = rows[idx_b][ic_b], rows[idx_a][ic_a]
        else:
            serial = _position(schema, schema.serial_column.name)
            ic = _position(schema, schema.tuple_ic_column.name)
            for pos in (serial, ic):
                rows[idx_a][pos], rows[idx_b][pos] = rows[idx_b][pos], rows[idx_a][pos]


def attack_replay_old(store: EmbeddedStore, table: str, saved_row) -> None:
    """Reinsert a previously captured physical row, codes and all."""
    tab = store.table(table)
    if len(saved_row) != len(tab.schema.columns):
        raise StoreError(
            f"{table}: saved row has {len(saved_row)} cells, table needs "
            f"{len(tab.schema.columns)}"
        )
    store._insert_row(tab, list(saved_row))


def attack_insert(store: EmbeddedStore, table: str, forged_row) -> None:
    """Insert an attacker-built physical row (codes chosen by the attacker)."""
    attack_replay_old(store, table, forged_row)


def attack_delete(store: EmbeddedStore, table: str, row_key) -> list[str | None]:
    """Remove one row; returns the removed physical row."""
    tab, idx = _locate_row(store, table, row_key)
    return tab.rows.pop(idx)


# --- connector loading -------------------------------------------------------


def connector_from_dsn(dsn: str):
    """Resolve a connector from a DSN.

    `embedded:` yields a fresh in-memory store. Any other DSN must look
    like `adapter:<module>:<callable>[:rest]`; the callable receives the
    remainder and returns a Connector. This keeps server drivers out of
    the core package while leaving the integration point testable.
    """
    if dsn == "embedded:" or dsn == "embedded":
        return EmbeddedStore()
    if dsn.startswith("adapter:"):
        parts = dsn.split(":", 3)
        if len(parts) < 3:
            raise StoreError("adapter DSN must be adapter:<module>:<callable>[:rest]")
        module_name, attr = parts[1], parts[2]
        rest = parts[3] if len(parts) == 4 else ""
        module = importlib.import_module(module_name)
        factory = getattr(module, attr)
        return factory(rest)
    raise StoreError(
        f"unsupported DSN {dsn!r}; use 'embedded:' or 'adapter:<module>:<callable>'"
    )
