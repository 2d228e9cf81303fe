"""Query conversion: turn plain SQL into ICDB SQL plus verification metadata.

A converted SELECT fetches, alongside the requested attributes, every
table's key attributes (field-code model only), the attributes referenced
by WHERE conditions, and the integrity-code columns the verifier needs.
The FROM and WHERE clauses pass through untouched. DELETE becomes a
three-phase plan (fetch-and-verify, delete, revoke); INSERT allocates
serials and embeds freshly generated codes.

Canonical messages always bind the schema-cased attribute name and the
schema-ordered key values, regardless of how the query spelled them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import codec, convert, sqlast
from .errors import BindError, ContractError, SchemaMismatchError
from .icrl import Icrl
from .schema import Model, TableSchema, lookup_table
from .schemes import KeyMaterial, SchemeId
from .sqlast import (
    ColumnRef,
    DeleteQuery,
    Ident,
    InsertQuery,
    Literal,
    SelectQuery,
    where_columns,
)


@dataclass(frozen=True)
class FieldVerifySpec:
    """One (value column, code column) pair in a rewritten result set."""

    table: str
    attribute: str
    value_index: int
    ic_index: int
    key_indices: tuple[int, ...]
    value_column: str


@dataclass(frozen=True)
class TupleVerifySpec:
    """One table's tuple-code columns in a rewritten result set.

    `present` maps schema positions of the table's data columns to result
    indices; when it covers every data column the tuple can be re-derived
    directly, otherwise signature/MAC schemes need the second fetch.
    """

    table: str
    attributes: tuple[str, ...]
    present: tuple[tuple[int, int], ...]
    serial_index: int
    ic_index: int

    @property
    def full_coverage(self) -> bool:
        return len(self.present) == len(self.attributes)


REVOKE_FETCHED_SERIALS = "revoke-fetched-serials"


@dataclass(frozen=True)
class RewritePlan:
    kind: str
    icdb_sql: str
    model: Model
    select_columns: tuple[str, ...] = ()
    field_specs: tuple[FieldVerifySpec, ...] = ()
    tuple_specs: tuple[TupleVerifySpec, ...] = ()
    distinct_semantics_changed: bool = False
    needs_second_fetch: bool = False
    second_fetch: "RewritePlan | None" = None
    pre_select: "RewritePlan | None" = None
    delete_sql: str | None = None
    post_actions: tuple[str, ...] = ()
    inserted_serials: tuple[int, ...] = ()


@dataclass(frozen=True)
class _Resolved:
    schema: TableSchema
    column: str  # schema-cased data column name
    ref: ColumnRef  # how the select list spells it

    @property
    def identity(self) -> tuple[str, str]:
        return (self.schema.table_name.lower(), self.column.lower())


def _scope(query: SelectQuery | DeleteQuery, schemas) -> list[TableSchema]:
    tables = query.tables if isinstance(query, SelectQuery) else (query.table,)
    out = []
    for ref in tables:
        schema = lookup_table(schemas, ref.name.name)
        if schema is None:
            raise BindError(f"unknown table {ref.name.name!r}")
        out.append(schema)
    return out


def _resolve(ref: ColumnRef, scope: list[TableSchema]) -> _Resolved:
    if ref.table is not None:
        matches = [s for s in scope if s.table_name.lower() == ref.table.name.lower()]
        if not matches:
            raise BindError(f"table {ref.table.name!r} is not in the query scope")
        schema = matches[0]
        col = schema.find_column(ref.column.name)
        if col is None or col.is_ic or col.is_serial:
            raise BindError(
                f"unknown column {ref.column.name!r} in table {schema.table_name}"
            )
        return _Resolved(schema, col.name, ref)
    hits = []
    for schema in scope:
        col = schema.find_column(ref.column.name)
        if col is not None and not col.is_ic and not col.is_serial:
            hits.append(_Resolved(schema, col.name, ref))
    if not hits:
        raise BindError(f"unknown column {ref.column.name!r}")
    if len(hits) > 1:
        tables = ", ".join(h.schema.table_name for h in hits)
        raise BindError(f"ambiguous column {ref.column.name!r} (in {tables})")
    return hits[0]


def _constructed_ref(schema: TableSchema, column: str, qualify: bool) -> ColumnRef:
    table = Ident(schema.table_name) if qualify else None
    return ColumnRef(Ident(column), table=table)


def _companion_ref(resolved: _Resolved) -> ColumnRef:
    """Code-column reference styled like its data column's mention."""
    base = resolved.ref
    name = base.column.name + resolved.schema.ic_suffix
    return ColumnRef(Ident(name, quoted=base.column.quoted), table=base.table)


def _expand_attrs(query: SelectQuery, scope: list[TableSchema], qualify: bool) -> list[_Resolved]:
    if query.star:
        out = []
        for schema in scope:
            for col in schema.data_columns:
                out.append(
                    _Resolved(schema, col.name, _constructed_ref(schema, col.name, qualify))
                )
        return out
    return [_resolve(ref, scope) for ref in query.items]


def _check_model(scope: list[TableSchema], model: Model) -> None:
    for schema in scope:
        if schema.model is not model:
            raise SchemaMismatchError(
                f"table {schema.table_name} is not in the "
                f"{model.value.upper()} layout"
            )


class _SelectList:
    """Deduplicated select-list builder keeping first-mention order."""

    def __init__(self):
        self.refs: list[ColumnRef] = []
        self._seen: set[tuple[str, str]] = set()
        self._index: dict[tuple[str, str], int] = {}

    def add(self, identity: tuple[str, str], ref: ColumnRef) -> int:
        if identity in self._seen:
            return self._index[identity]
        self._seen.add(identity)
        self._index[identity] = len(self.refs)
        self.refs.append(ref)
        return self._index[identity]

    def index_of(self, identity: tuple[str, str]) -> int:
        return self._index[identity]


def rewrite_select_ocf(query: SelectQuery, schemas) -> RewritePlan:
    """Convert a SELECT for field-coded tables.

    The output selects the requested attributes, each table's keys, the
    WHERE-condition attributes, and then the code companions of requested
    plus condition attributes, deduplicated in that order.
    """
    if query.kind != "SELECT":
        raise ContractError("rewrite_select_ocf requires a SELECT query")
    scope = _scope(query, schemas)
    _check_model(scope, Model.OCF)
    qualify = len(scope) > 1

    a_attrs = _expand_attrs(query, scope, qualify)
    b_attrs = [_resolve(ref, scope) for ref in where_columns(query.where)]

    sel = _SelectList()
    for attr in a_attrs:
        sel.add(attr.identity, attr.ref)
    for schema in scope:
        for col in schema.key_columns:
            sel.add(
                (schema.table_name.lower(), col.name.lower()),
                _constructed_ref(schema, col.name, qualify),
            )
    for attr in b_attrs:
        sel.add(attr.identity, attr.ref)

    checked: list[_Resolved] = []
    checked_seen: set[tuple[str, str]] = set()
    for attr in a_attrs + b_attrs:
        if attr.identity not in checked_seen:
            checked_seen.add(attr.identity)
            checked.append(attr)
    for attr in checked:
        ic_name = attr.column + attr.schema.ic_suffix
        sel.add((attr.schema.table_name.lower(), ic_name.lower()), _companion_ref(attr))

    specs = []
    for attr in checked:
        ic_name = attr.column + attr.schema.ic_suffix
        key_indices = tuple(
            sel.index_of((attr.schema.table_name.lower(), k.name.lower()))
            for k in attr.schema.key_columns
        )
        specs.append(
            FieldVerifySpec(
                table=attr.schema.table_name,
                attribute=attr.column,
                value_index=sel.index_of(attr.identity),
                ic_index=sel.index_of((attr.schema.table_name.lower(), ic_name.lower())),
                key_indices=key_indices,
                value_column=attr.ref.display,
            )
        )

    rewritten = replace(query, star=False, items=tuple(sel.refs))
    return RewritePlan(
        kind="select",
        icdb_sql=sqlast.render(rewritten),
        model=Model.OCF,
        select_columns=tuple(r.display for r in sel.refs),
        field_specs=tuple(specs),
        distinct_semantics_changed=query.distinct and len(sel.refs) != len(a_attrs),
    )


def rewrite_select_oct(query: SelectQuery, schemas) -> RewritePlan:
    """Convert a SELECT for tuple-coded tables.

    Only each table's serial and code columns are injected beyond the
    condition attributes. When the selection does not cover a table's full
    tuple, the plan carries a second full-width fetch that recompute-style
    schemes (signature, MAC) need; the decrypt-and-compare scheme verifies
    the projected columns directly.
    """
    if query.kind != "SELECT":
        raise ContractError("rewrite_select_oct requires a SELECT query")
    scope = _scope(query, schemas)
    _check_model(scope, Model.OCT)
    qualify = len(scope) > 1

    a_attrs = _expand_attrs(query, scope, qualify)
    b_attrs = [_resolve(ref, scope) for ref in where_columns(query.where)]

    sel = _SelectList()
    for attr in a_attrs:
        sel.add(attr.identity, attr.ref)
    for attr in b_attrs:
        sel.add(attr.identity, attr.ref)
    for schema in scope:
        for col in (schema.serial_column, schema.tuple_ic_column):
            sel.add(
                (schema.table_name.lower(), col.name.lower()),
                _constructed_ref(schema, col.name, qualify),
            )

    specs = []
    any_partial = False
    for schema in scope:
        attributes = tuple(c.name for c in schema.data_columns)
        present = []
        for pos, col in enumerate(schema.data_columns):
            identity = (schema.table_name.lower(), col.name.lower())
            try:
                present.append((pos, sel.index_of(identity)))
            except KeyError:
                continue
        spec = TupleVerifySpec(
            table=schema.table_name,
            attributes=attributes,
            present=tuple(present),
            serial_index=sel.index_of(
                (schema.table_name.lower(), schema.serial_column.name.lower())
            ),
            ic_index=sel.index_of(
                (schema.table_name.lower(), schema.tuple_ic_column.name.lower())
            ),
        )
        specs.append(spec)
        if not spec.full_coverage:
            any_partial = True

    rewritten = replace(query, star=False, items=tuple(sel.refs))
    second = None
    if any_partial:
        full = replace(query, star=True, items=(), distinct=False)
        second = rewrite_select_oct(full, schemas)
    return RewritePlan(
        kind="select",
        icdb_sql=sqlast.render(rewritten),
        model=Model.OCT,
        select_columns=tuple(r.display for r in sel.refs),
        tuple_specs=tuple(specs),
        distinct_semantics_changed=query.distinct and len(sel.refs) != len(a_attrs),
        needs_second_fetch=any_partial,
        second_fetch=second,
    )


def rewrite_select(query: SelectQuery, schemas) -> RewritePlan:
    """Dispatch on the (homogeneous) layout of the referenced tables."""
    scope = _scope(query, schemas)
    models = {s.model for s in scope}
    if len(models) != 1 or None in models:
        raise SchemaMismatchError("query mixes table layouts or uses plain tables")
    model = models.pop()
    if model is Model.OCF:
        return rewrite_select_ocf(query, schemas)
    return rewrite_select_oct(query, schemas)


def plan_delete(query: DeleteQuery, schemas) -> RewritePlan:
    """Three phases: fetch-and-verify the doomed rows, delete, revoke."""
    if query.kind != "DELETE":
        raise ContractError("plan_delete requires a DELETE query")
    scope = _scope(query, schemas)
    schema = scope[0]
    if schema.model is None:
        raise SchemaMismatchError(f"table {schema.table_name} is not converted")
    doomed = SelectQuery(
        star=True,
        items=(),
        from_items=(sqlast.TableRef(query.table.name),),
        where=query.where,
        distinct=False,
        semicolon=query.semicolon,
    )
    pre = rewrite_select(doomed, schemas)
    return RewritePlan(
        kind="delete",
        icdb_sql=sqlast.render(query),
        model=schema.model,
        pre_select=pre,
        delete_sql=sqlast.render(query),
        post_actions=(REVOKE_FETCHED_SERIALS,),
    )


def plan_insert(
    query: InsertQuery,
    schemas,
    key: KeyMaterial,
    icrl: Icrl,
    *,
    bind_table: bool = False,
) -> RewritePlan:
    """Allocate serials, generate codes for the supplied values, and emit
    the widened INSERT. Mutates the ICRL (single-writer contract)."""
    if query.kind != "INSERT":
        raise ContractError("plan_insert requires an INSERT query")
    schema = lookup_table(schemas, query.table.name.name)
    if schema is None:
        raise BindError(f"unknown table {query.table.name.name!r}")
    if schema.model is None:
        raise SchemaMismatchError(f"table {schema.table_name} is not converted")

    supplied: dict[str, tuple[Ident, Literal]] = {}
    for ident, literal in zip(query.columns, query.values):
        col = schema.find_column(ident.name)
        if col is None or col.is_ic or col.is_serial:
            raise BindError(
                f"unknown column {ident.name!r} in table {schema.table_name}"
            )
        if col.name.lower() in supplied:
            raise BindError(f"column {ident.name!r} supplied twice")
        supplied[col.name.lower()] = (ident, literal)

    if schema.model is Model.OCF:
        missing_keys = [
            k.name for k in schema.key_columns if k.name.lower() not in supplied
        ]
        if missing_keys:
            raise SchemaMismatchError(
                f"field codes need key values; missing {', '.join(missing_keys)}"
            )
        entity_key = tuple(
            supplied[k.name.lower()][1].text for k in schema.key_columns
        )
        serials = icrl.allocate(len(query.columns))
        out_columns: list[Ident] = []
        out_values: list[Literal] = []
        serial_iter = iter(serials)
        for ident, literal in zip(query.columns, query.values):
            col = schema.find_column(ident.name)
            serial = next(serial_iter)
            ic = codec.generate_field_code(
                key,
                codec.FieldCoordinates(schema.table_name, col.name, entity_key),
                literal.text,
                serial,
                bind_table=bind_table,
            )
            out_columns.append(ident)
            out_values.append(literal)
            out_columns.append(Ident(ident.name + schema.ic_suffix, quoted=ident.quoted))
            out_values.append(Literal(convert.encode_field_cell(ic), quoted=True))
    else:
        (serial,) = icrl.allocate(1)
        values = tuple(
            (
                col.name,
                supplied[col.name.lower()][1].text
                if col.name.lower() in supplied
                else None,
            )
            for col in schema.data_columns
        )
        ic = codec.generate_tuple_code(
            key, codec.TupleImage(schema.table_name, values), serial
        )
        out_columns = list(query.columns)
        out_values = list(query.values)
        out_columns.append(Ident(schema.serial_column.name))
        out_values.append(Literal(str(serial), quoted=False))
        out_columns.append(Ident(schema.tuple_ic_column.name))
        out_values.append(Literal(convert.encode_code(ic.code), quoted=True))
        serials = [serial]

    rewritten = replace(query, columns=tuple(out_columns), values=tuple(out_values))
    return RewritePlan(
        kind="insert",
        icdb_sql=sqlast.render(rewritten),
        model=schema.model,
        inserted_serials=tuple(serials),
    )
