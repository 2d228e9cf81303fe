"""Result-set verification: apply codec checks across whole query results.

The engine walks rows according to a RewritePlan, checks every covered
coordinate, and produces a VerificationReport whose content is fully
determined by the input (failures ordered by row, then plan position),
regardless of how many workers computed it. Malformed cells from an
untrusted server become STRUCTURAL failure entries instead of exceptions,
so a partial report survives garbage responses.

Workers are separate processes: the underlying crypto holds the GIL, so
thread pools cannot speed this up.
"""

from __future__ import annotations

import json
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import codec, convert
from .codec import FieldCoordinates, TupleImage, Verdict, VerdictStatus
from .errors import CodeFormatError, ContractError
from .icrl import IcrlSnapshot
from .rewrite import RewritePlan
from .schema import Model
from .schemes import KeyMaterial, SchemeId


@dataclass(frozen=True)
class Failure:
    row: int
    table: str
    column: str
    status: VerdictStatus
    detail: str = ""
    diff_attributes: tuple[str, ...] | None = None


@dataclass
class VerificationReport:
    total_checks: int = 0
    valid: int = 0
    forged: int = 0
    stale: int = 0
    structural: int = 0
    failures: list[Failure] = field(default_factory=list)
    fetch_ms: float = 0.0
    verify_ms: float = 0.0

    @property
    def all_valid(self) -> bool:
        return not self.failures

    @property
    def wall_ms(self) -> float:
        return self.fetch_ms + self.verify_ms

    def to_json(self, *, include_timings: bool = True) -> str:
        doc = {
            "total": self.total_checks,
            "valid": self.valid,
            "forged": self.forged,
            "stale": self.stale,
            "structural": self.structural,
            "failures": [
                {
                    "row": f.row,
                    "table": f.table,
                    "column": f.column,
                    "status": f.status.value,
                    "detail": f.detail,
                    **(
                        {"diff_attributes": list(f.diff_attributes)}
                        if f.diff_attributes is not None
                        else {}
                    ),
                }
                for f in self.failures
            ],
        }
        if include_timings:
            doc["timings"] = {
                "fetch_ms": round(self.fetch_ms, 3),
                "verify_ms": round(self.verify_ms, 3),
            }
        return json.dumps(doc, indent=2)

    def to_text(self) -> str:
        lines = [
            f"checks={self.total_checks} valid={self.valid} forged={self.forged} "
            f"stale={self.stale} structural={self.structural}"
        ]
        for f in self.failures:
            line = f"row={f.row} table={f.table} column={f.column} status={f.status.value}"
            if f.detail:
                line += f" detail={f.detail}"
            if f.diff_attributes:
                line += f" diffs={','.join(f.diff_attributes)}"
            lines.append(line)
        lines.append(
            f"timings fetch_ms={self.fetch_ms:.3f} verify_ms={self.verify_ms:.3f}"
        )
        return "\n".join(lines)


def _tally(report: VerificationReport, row_index: int, table: str, column: str,
           verdict: Verdict, diffs=None) -> None:
    report.total_checks += 1
    if verdict.status is VerdictStatus.VALID:
        report.valid += 1
        return
    if verdict.status is VerdictStatus.FORGED:
        report.forged += 1
    elif verdict.status is VerdictStatus.STALE:
        report.stale += 1
    else:
        report.structural += 1
    report.failures.append(
        Failure(
            row=row_index,
            table=table,
            column=column,
            status=verdict.status,
            detail=verdict.detail,
            diff_attributes=tuple(diffs) if diffs is not None else None,
        )
    )


def _structural(report, row_index, table, column, detail):
    _tally(report, row_index, table, column, Verdict(VerdictStatus.STRUCTURAL, detail))


def _verify_rows(
    rows,
    plan: RewritePlan,
    key: KeyMaterial,
    snapshot: IcrlSnapshot,
    start_index: int,
    bind_table: bool,
) -> VerificationReport:
    report = VerificationReport()
    width = len(plan.select_columns)
    for offset, row in enumerate(rows):
        row_index = start_index + offset
        if len(row) != width:
            _structural(
                report, row_index, "", "<row>",
                f"row has {len(row)} cells, plan expects {width}",
            )
            continue

        for spec in plan.field_specs:
            value = row[spec.value_index]
            cell = row[spec.ic_index]
            if cell is None:
                if value is None:
                    continue  # uncoded absent field from a partial insert
                _structural(
                    report, row_index, spec.table, spec.value_column,
                    "missing integrity code",
                )
                continue
            key_parts = [row[i] for i in spec.key_indices]
            if any(part is None for part in key_parts):
                _structural(
                    report, row_index, spec.table, spec.value_column,
                    "NULL key component",
                )
                continue
            try:
                ic = convert.decode_field_cell(cell, key.scheme)
            except CodeFormatError as exc:
                _structural(report, row_index, spec.table, spec.value_column, str(exc))
                continue
            coords = FieldCoordinates(spec.table, spec.attribute, tuple(key_parts))
            verdict = codec.verify_field_code(
                key, coords, value, ic, snapshot, bind_table=bind_table
            )
            _tally(report, row_index, spec.table, spec.value_column, verdict)

        for spec in plan.tuple_specs:
            serial_cell = row[spec.serial_index]
            ic_cell = row[spec.ic_index]
            if serial_cell is None or not serial_cell.isdigit() or int(serial_cell) < 1:
                _structural(
                    report, row_index, spec.table, "Serial",
                    f"bad serial cell {serial_cell!r}",
                )
                continue
            if ic_cell is None:
                _structural(report, row_index, spec.table, "IC", "missing integrity code")
                continue
            serial = int(serial_cell)
            try:
                code = convert.decode_code(ic_cell)
                ic = codec.IntegrityCode(key.scheme, code, serial)
            except (CodeFormatError, ValueError) as exc:
                _structural(report, row_index, spec.table, "IC", str(exc))
                continue

            if spec.full_coverage:
                values = tuple(
                    (spec.attributes[pos], row[idx]) for pos, idx in spec.present
                )
                image = TupleImage(spec.table, values)
                verdict, diffs = codec.verify_tuple_code(key, image, ic, snapshot)
                _tally(report, row_index, spec.table, "IC", verdict, diffs)
            else:
                if key.scheme is not SchemeId.AES_CIPHER:
                    raise ContractError(
                        "projected tuple rows need the plan's second fetch under "
                        f"{key.scheme.value}"
                    )
                _tally_partial_aes(report, row_index, spec, row, key, snapshot, ic)
    return report


def _tally_partial_aes(report, row_index, spec, row, key, snapshot, ic) -> None:
    """Decrypt-and-compare verification over a projected tuple."""
    from . import schemes

    try:
        plaintext = schemes.recover_plaintext(key, ic.code)
        values, embedded_serial = codec.parse_tuple_message(
            plaintext, len(spec.attributes)
        )
    except CodeFormatError as exc:
        _structural(report, row_index, spec.table, "IC", f"unparseable recovered tuple: {exc}")
        return
    diffs = [
        spec.attributes[pos] for pos, idx in spec.present if values[pos] != row[idx]
    ]
    if embedded_serial != ic.serial:
        verdict = Verdict(
            VerdictStatus.FORGED,
            f"code embeds serial {embedded_serial}, row claims {ic.serial}",
        )
        _tally(report, row_index, spec.table, "IC", verdict, diffs)
    elif diffs:
        verdict = Verdict(VerdictStatus.FORGED, f"tuple code mismatch in {spec.table}")
        _tally(report, row_index, spec.table, "IC", verdict, diffs)
    elif not snapshot.is_valid(ic.serial):
        _tally(report, row_index, spec.table, "IC",
               Verdict(VerdictStatus.STALE, f"serial {ic.serial} is not valid"))
    else:
        _tally(report, row_index, spec.table, "IC", Verdict(VerdictStatus.VALID))


def _merge(target: VerificationReport, part: VerificationReport) -> None:
    target.total_checks += part.total_checks
    target.valid += part.valid
    target.forged += part.forged
    target.stale += part.stale
    target.structural += part.structural
    target.failures.extend(part.failures)


def _snapshot_of(icrl) -> IcrlSnapshot:
    return icrl if isinstance(icrl, IcrlSnapshot) else icrl.snapshot()


def verify_result_set(
    rows,
    plan: RewritePlan,
    key: KeyMaterial,
    icrl,
    *,
    bind_table: bool = False,
    fetch_ms: float = 0.0,
) -> VerificationReport:
    """Verify every covered coordinate of `rows` against one ICRL snapshot."""
    snapshot = _snapshot_of(icrl)
    started = time.perf_counter()
    report = _verify_rows(list(rows), plan, key, snapshot, 0, bind_table)
    report.verify_ms = (time.perf_counter() - started) * 1000.0
    report.fetch_ms = fetch_ms
    return report


def _worker(args) -> VerificationReport:
    rows, plan, key, snapshot, start_index, bind_table = args
    return _verify_rows(rows, plan, key, snapshot, start_index, bind_table)


def verify_parallel(
    rows,
    plan: RewritePlan,
    key: KeyMaterial,
    icrl,
    workers: int,
    *,
    bind_table: bool = False,
    fetch_ms: float = 0.0,
) -> VerificationReport:
    """Data-parallel verify_result_set; the report is identical for every
    worker count."""
    if workers < 1:
        raise ContractError("workers must be at least 1")
    rows = list(rows)
    if workers == 1 or len(rows) < 2:
        return verify_result_set(
            rows, plan, key, icrl, bind_table=bind_table, fetch_ms=fetch_ms
        )
    snapshot = _snapshot_of(icrl)
    started = time.perf_counter()
    chunk = max(1, (len(rows) + workers - 1) // workers)
    jobs = [
        (rows[i : i + chunk], plan, key, snapshot, i, bind_table)
        for i in range(0, len(rows), chunk)
    ]
    context = multiprocessing.get_context(
        "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    )
    report = VerificationReport()
    with ProcessPoolExecutor(max_workers=workers, mp_context=context) as pool:
        for part in pool.map(_worker, jobs):
            _merge(report, part)
    report.verify_ms = (time.perf_counter() - started) * 1000.0
    report.fetch_ms = fetch_ms
    return report
