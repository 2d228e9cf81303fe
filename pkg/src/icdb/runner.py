"""Execute rewrite plans against a connector and verify what comes back."""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import verify as verify_engine
from .convert import decode_field_cell
from .errors import CodeFormatError, ContractError
from .icrl import Icrl
from .rewrite import REVOKE_FETCHED_SERIALS, RewritePlan
from .schema import Model
from .schemes import KeyMaterial, SchemeId
from .verify import VerificationReport


@dataclass
class SelectOutcome:
    columns: tuple[str, ...]
    rows: list
    report: VerificationReport


@dataclass
class DeleteOutcome:
    report: VerificationReport
    deleted_rows: int
    revoked_serials: tuple[int, ...]


def collect_serials(rows, plan: RewritePlan, scheme: SchemeId) -> list[int]:
    """Pull every serial out of a fetched result set, in row order."""
    serials: list[int] = []
    for row in rows:
        for spec in plan.field_specs:
            cell = row[spec.ic_index]
            if cell is None:
                continue
            try:
                serials.append(decode_field_cell(cell, scheme).serial)
            except CodeFormatError:
                continue
        for spec in plan.tuple_specs:
            cell = row[spec.serial_index]
            if cell is not None and cell.isdigit() and int(cell) >= 1:
                serials.append(int(cell))
    return serials


def run_select(
    connector,
    plan: RewritePlan,
    key: KeyMaterial,
    icrl,
    *,
    workers: int = 1,
    bind_table: bool = False,
) -> SelectOutcome:
    """Fetch the rewritten query and verify the result.

    When the plan needs a second fetch (projected tuples under a
    recompute-style scheme), verification runs over the full-width result
    of the companion query; the user-facing rows are still the projection.
    """
    if plan.kind != "select":
        raise ContractError("run_select requires a select plan")
    started = time.perf_counter()
    result = connector.execute(plan.icdb_sql)
    fetch_ms = (time.perf_counter() - started) * 1000.0

    verify_plan, verify_rows = plan, result.rows
    if plan.needs_second_fetch and key.scheme is not SchemeId.AES_CIPHER:
        started = time.perf_counter()
        second = connector.execute(plan.second_fetch.icdb_sql)
        fetch_ms += (time.perf_counter() - started) * 1000.0
        verify_plan, verify_rows = plan.second_fetch, second.rows

    report = verify_engine.verify_parallel(
        verify_rows, verify_plan, key, icrl,
        workers=workers, bind_table=bind_table, fetch_ms=fetch_ms,
    )
    return SelectOutcome(tuple(result.columns), result.rows, report)


def run_delete(
    connector,
    plan: RewritePlan,
    key: KeyMaterial,
    icrl: Icrl,
    *,
    workers: int = 1,
    bind_table: bool = False,
) -> DeleteOutcome:
    """Fetch-and-verify the doomed rows, delete them, revoke their serials."""
    if plan.kind != "delete":
        raise ContractError("run_delete requires a delete plan")
    outcome = run_select(
        connector, plan.pre_select, key, icrl, workers=workers, bind_table=bind_table
    )
    doomed_plan = plan.pre_select
    if doomed_plan.needs_second_fetch and key.scheme is not SchemeId.AES_CIPHER:
        doomed_plan = doomed_plan.second_fetch
        serial_rows = connector.execute(doomed_plan.icdb_sql).rows
    else:
        serial_rows = outcome.rows
    serials = collect_serials(serial_rows, doomed_plan, key.scheme)

    deleted = connector.execute(plan.delete_sql).rowcount
    if REVOKE_FETCHED_SERIALS in plan.post_actions and serials:
        icrl.revoke(serials)
    return DeleteOutcome(
        report=outcome.report,
        deleted_rows=deleted,
        revoked_serials=tuple(sorted(set(serials))),
    )


def run_insert(connector, plan: RewritePlan) -> int:
    """Execute the code-carrying INSERT; serials were allocated at plan time."""
    if plan.kind != "insert":
        raise ContractError("run_insert requires an insert plan")
    return connector.execute(plan.icdb_sql).rowcount
