"""Benchmark harness: memory overhead, conversion time, query phases,
and the attack detection matrix.

Timing uses a monotonic clock; the first tenth of the iterations are
warm-up and are discarded. Ratio metrics always come from paired runs over
identical data. Results serialize to CSV (round-trippable) and JSON.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass

from . import codec, convert, rewrite, runner, sqlast, verify
from .codec import VerdictStatus
from .dataset import Dataset, generate_dataset
from .icrl import Icrl
from .schema import Model, TableSchema, catalog
from .schemes import KeyMaterial, SchemeId, generate_keys
from .store import (
    EmbeddedStore,
    attack_delete,
    attack_forge,
    attack_insert,
    attack_replay_old,
    attack_substitute,
)

PAPER_COMBOS = (
    (SchemeId.AES_CIPHER, Model.OCT),
    (SchemeId.PBKDF2_MAC, Model.OCF),
    (SchemeId.RSA_SIGN, Model.OCF),
)
ALL_COMBOS = tuple(
    (scheme, model)
    for scheme in (SchemeId.AES_CIPHER, SchemeId.PBKDF2_MAC, SchemeId.RSA_SIGN)
    for model in (Model.OCT, Model.OCF)
)

CSV_HEADER = ("dataset", "scheme", "model", "metric", "iterations", "mean", "std")


@dataclass(frozen=True)
class BenchResult:
    dataset: str
    scheme: str
    model: str
    metric: str
    iterations: int
    mean: float
    std: float

    @property
    def cov(self) -> float:
        """Coefficient of variation (dispersion relative to the mean)."""
        return self.std / self.mean if self.mean else 0.0


def results_to_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow(
            (r.dataset, r.scheme, r.model, r.metric, r.iterations, repr(r.mean), repr(r.std))
        )
    return buf.getvalue()


def results_from_csv(text: str) -> list[BenchResult]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    return [
        BenchResult(row[0], row[1], row[2], row[3], int(row[4]), float(row[5]), float(row[6]))
        for row in reader
    ]


def _timed(fn, iterations: int) -> tuple[list[float], object]:
    """Run fn `iterations` measured times after discarding ~10% as warm-up."""
    warmup = max(1, iterations // 10)
    last = None
    for _ in range(warmup):
        last = fn()
    samples = []
    for _ in range(iterations):
        started = time.perf_counter()
        last = fn()
        samples.append(time.perf_counter() - started)
    return samples, last


def _stats(samples) -> tuple[float, float]:
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return mean, std


def _fresh_keys(scheme: SchemeId, seed: int = 1309) -> KeyMaterial:
    return generate_keys(scheme, rng_seed=seed)


# --- size benchmark ----------------------------------------------------------


def bench_size(dataset: Dataset, combos, workdir) -> list[BenchResult]:
    """Measure original vs converted data-file bytes for each combination.

    Emits db_size_bytes, icdb_size_bytes, icdb_size_predicted_bytes, and
    size_ratio per (scheme, model); the converted sizes must equal the
    closed-form predictor exactly.
    """
    import os

    results = []
    db_bytes = sum(
        os.path.getsize(dataset.data_path(s.table_name)) for s in dataset.schemas
    )
    label = f"{dataset.profile}-{sum(dataset.row_counts.values())}"
    for scheme, model in combos:
        key = _fresh_keys(scheme)
        icrl = Icrl()
        total_out = 0
        total_pred = 0
        for schema in dataset.schemas:
            in_path = dataset.data_path(schema.table_name)
            out_path = os.path.join(
                workdir, f"{schema.table_name}.{scheme.cli_name}.{model.value}.dat"
            )
            total_pred += convert.predict_converted_size(
                in_path, schema, model, scheme, next_serial=icrl.next_serial
            )
            result = convert.convert_data_file(in_path, out_path, schema, model, key, icrl)
            total_out += result.output_bytes
        results.extend(
            [
                BenchResult(label, scheme.cli_name, model.value, "db_size_bytes", 1, db_bytes, 0.0),
                BenchResult(label, scheme.cli_name, model.value, "icdb_size_bytes", 1, total_out, 0.0),
                BenchResult(label, scheme.cli_name, model.value, "icdb_size_predicted_bytes", 1, total_pred, 0.0),
                BenchResult(label, scheme.cli_name, model.value, "size_ratio", 1, total_out / db_bytes, 0.0),
            ]
        )
    return results


def size_ratio_table(results) -> str:
    """Fig-style text table of size ratios."""
    lines = ["scheme/model      size_ratio"]
    for r in results:
        if r.metric == "size_ratio":
            lines.append(f"{r.scheme}-{r.model:<12} {r.mean:10.3f}")
    return "\n".join(lines)


# --- time benchmarks ---------------------------------------------------------


def bench_conversion_time(
    dataset: Dataset,
    table: str,
    combos,
    workdir,
    iterations: int = 30,
) -> list[BenchResult]:
    """Time repeated full conversions of one table per combination."""
    import os

    schema = next(s for s in dataset.schemas if s.table_name == table)
    in_path = dataset.data_path(table)
    label = f"{dataset.profile}/{table}-{dataset.row_counts[table]}"
    results = []
    for scheme, model in combos:
        key = _fresh_keys(scheme)
        out_path = os.path.join(
            workdir, f"bench.{table}.{scheme.cli_name}.{model.value}.dat"
        )

        def convert_once():
            return convert.convert_data_file(
                in_path, out_path, schema, model, key, Icrl()
            )

        samples, _ = _timed(convert_once, iterations)
        mean, std = _stats(samples)
        results.append(
            BenchResult(
                label, scheme.cli_name, model.value, "convert_seconds",
                iterations, mean, std,
            )
        )
    return results


def load_converted_store(dataset: Dataset, scheme: SchemeId, model: Model, workdir):
    """Convert every table and load the results into a fresh embedded store.

    Returns (store, icdb_catalog, key, icrl)."""
    import os

    key = _fresh_keys(scheme)
    icrl = Icrl()
    store = EmbeddedStore()
    icdb_schemas = []
    for schema in dataset.schemas:
        out_path = os.path.join(
            workdir, f"store.{schema.table_name}.{scheme.cli_name}.{model.value}.dat"
        )
        convert.convert_data_file(
            dataset.data_path(schema.table_name), out_path, schema, model, key, icrl
        )
        icdb_schema = schema.converted(model)
        store.create_table(icdb_schema)
        store.load_data_file(icdb_schema.table_name, out_path)
        icdb_schemas.append(icdb_schema)
    return store, catalog(icdb_schemas), key, icrl


def load_plain_store(dataset: Dataset):
    store = EmbeddedStore()
    for schema in dataset.schemas:
        store.create_table(schema)
        store.load_data_file(schema.table_name, dataset.data_path(schema.table_name))
    return store, catalog(dataset.schemas)


def bench_select_star(
    dataset: Dataset,
    table: str,
    combos,
    workdir,
    iterations: int = 30,
) -> list[BenchResult]:
    """Paired full-table fetch timing: plain store vs converted store."""
    plain_store, _ = load_plain_store(dataset)
    label = f"{dataset.profile}/{table}-{dataset.row_counts[table]}"
    sql = f"SELECT * FROM {table};"

    samples, _ = _timed(lambda: plain_store.execute(sql), iterations)
    base_mean, base_std = _stats(samples)
    results = [
        BenchResult(label, "none", "none", "exec_ms", iterations,
                    base_mean * 1000.0, base_std * 1000.0)
    ]
    for scheme, model in combos:
        store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)
        plan = rewrite.rewrite_select(sqlast.parse(sql), schemas)
        samples, _ = _timed(lambda: store.execute(plan.icdb_sql), iterations)
        mean, std = _stats(samples)
        results.append(
            BenchResult(label, scheme.cli_name, model.value, "exec_ms",
                        iterations, mean * 1000.0, std * 1000.0)
        )
        results.append(
            BenchResult(label, scheme.cli_name, model.value, "ratio_vs_baseline",
                        iterations, mean / base_mean, 0.0)
        )
    return results


def bench_query_phases(
    dataset: Dataset,
    queries,
    scheme: SchemeId,
    model: Model,
    workdir,
    iterations: int = 30,
) -> list[BenchResult]:
    """Per-phase timing (rewrite, execute+fetch, verify) over a query corpus,
    aggregated across the corpus per iteration."""
    store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)
    snapshot = icrl.snapshot()
    label = f"{dataset.profile}-{sum(dataset.row_counts.values())}"
    parsed = [sqlast.parse(q) for q in queries]

    def one_pass():
        rewrite_s = exec_s = verify_s = 0.0
        checks = 0
        for query in parsed:
            t0 = time.perf_counter()
            plan = rewrite.rewrite_select(query, schemas)
            t1 = time.perf_counter()
            result = store.execute(plan.icdb_sql)
            t2 = time.perf_counter()
            report = verify.verify_result_set(result.rows, plan, key, snapshot)
            t3 = time.perf_counter()
            rewrite_s += t1 - t0
            exec_s += t2 - t1
            verify_s += t3 - t2
            checks += report.total_checks
            if not report.all_valid:
                raise RuntimeError("benchmark fixture failed verification")
        return rewrite_s, exec_s, verify_s, checks

    warmup = max(1, iterations // 10)
    for _ in range(warmup):
        one_pass()
    rewrite_samples, exec_samples, verify_samples = [], [], []
    for _ in range(iterations):
        r, e, v, _ = one_pass()
        rewrite_samples.append(r)
        exec_samples.append(e)
        verify_samples.append(v)

    results = []
    for metric, samples in (
        ("rewrite_ms", rewrite_samples),
        ("exec_ms", exec_samples),
        ("verify_ms", verify_samples),
    ):
        mean, std = _stats(samples)
        results.append(
            BenchResult(label, scheme.cli_name, model.value, metric,
                        iterations, mean * 1000.0, std * 1000.0)
        )
    return results


# --- attack matrix -----------------------------------------------------------

ATTACK_CLASSES = ("forgery", "substitution", "old_data", "insertion", "deletion")
EXPECTED_DETECTED = {
    "forgery": True,
    "substitution": True,
    "old_data": True,
    "insertion": True,
    "deletion": False,
}


@dataclass
class AttackOutcome:
    attack: str
    scheme: str
    model: str
    detected: bool
    checks: int

    @property
    def as_expected(self) -> bool:
        return self.detected == EXPECTED_DETECTED[self.attack]


def _verify_table(store, schemas, table: str, key, icrl) -> verify.VerificationReport:
    plan = rewrite.rewrite_select(sqlast.parse(f"SELECT * FROM {table};"), schemas)
    result = store.execute(plan.icdb_sql)
    return verify.verify_result_set(result.rows, plan, key, icrl.snapshot())


def run_attack_matrix(dataset: Dataset, combos, workdir) -> list[AttackOutcome]:
    """Run one representative attack per class for each combination."""
    outcomes = []
    table = dataset.schemas[0].table_name
    value_column = dataset.schemas[0].data_columns[1].name if len(
        dataset.schemas[0].data_columns
    ) > 1 else dataset.schemas[0].data_columns[0].name
    for scheme, model in combos:
        store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)
        tab_rows = store.rows_of(table)
        key_positions = [
            i for i, col in enumerate(schemas[table.lower()].columns) if col.is_key
        ]
        first_key = tuple(tab_rows[0][i] for i in key_positions)

        # forgery: mutate one value cell
        attack_forge(store, table, first_key, value_column, new_value="\x00tampered")
        report = _verify_table(store, schemas, table, key, icrl)
        outcomes.append(AttackOutcome(
            "forgery", scheme.cli_name, model.value,
            not report.all_valid, report.total_checks,
        ))
        store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)

        # substitution: swap one value between two rows with differing cells
        pos = next(
            i for i, c in enumerate(schemas[table.lower()].columns)
            if c.name == value_column
        )
        other = next(
            tuple(r[i] for i in key_positions)
            for r in tab_rows[1:]
            if r[pos] != tab_rows[0][pos]
        )
        attack_substitute(
            store, table, (first_key, value_column), (other, value_column)
        )
        report = _verify_table(store, schemas, table, key, icrl)
        outcomes.append(AttackOutcome(
            "substitution", scheme.cli_name, model.value,
            not report.all_valid, report.total_checks,
        ))
        store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)

        # old data: owner deletes + revokes, attacker replays the old row
        saved = attack_delete(store, table, first_key)
        serials = _row_serials(saved, schemas[table.lower()], scheme)
        icrl.revoke(serials)
        attack_replay_old(store, table, saved)
        report = _verify_table(store, schemas, table, key, icrl)
        outcomes.append(AttackOutcome(
            "old_data", scheme.cli_name, model.value,
            any(f.status is VerdictStatus.STALE for f in report.failures),
            report.total_checks,
        ))
        store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)

        # insertion: attacker forges a whole row without key material
        forged = _forged_row(schemas[table.lower()], scheme)
        attack_insert(store, table, forged)
        report = _verify_table(store, schemas, table, key, icrl)
        outcomes.append(AttackOutcome(
            "insertion", scheme.cli_name, model.value,
            not report.all_valid, report.total_checks,
        ))
        store, schemas, key, icrl = load_converted_store(dataset, scheme, model, workdir)

        # deletion: attacker removes a row; remaining rows still verify
        attack_delete(store, table, first_key)
        report = _verify_table(store, schemas, table, key, icrl)
        outcomes.append(AttackOutcome(
            "deletion", scheme.cli_name, model.value,
            not report.all_valid, report.total_checks,
        ))
    return outcomes


def _row_serials(row, schema: TableSchema, scheme: SchemeId) -> list[int]:
    serials = []
    for pos, col in enumerate(schema.columns):
        if col.is_serial and row[pos] is not None:
            serials.append(int(row[pos]))
        elif col.is_ic and schema.model is Model.OCF and row[pos] is not None:
            serials.append(convert.decode_field_cell(row[pos], scheme).serial)
    return serials


def _forged_row(schema: TableSchema, scheme: SchemeId) -> list[str]:
    from .schemes import code_length

    row = []
    fake_code = convert.encode_code(b"\x42" * code_length(scheme, 32))
    serial_counter = 999_999
    for col in schema.columns:
        if col.is_serial:
            row.append(str(serial_counter))
        elif col.is_ic:
            row.append(fake_code if schema.model is Model.OCT else f"{fake_code}:{serial_counter}")
        else:
            row.append("forged")
    return row


def attack_matrix_text(outcomes) -> str:
    lines = ["attack        scheme   model  detected  expected"]
    for o in outcomes:
        lines.append(
            f"{o.attack:<13} {o.scheme:<8} {o.model:<6} "
            f"{'yes' if o.detected else 'no':<9} "
            f"{'ok' if o.as_expected else 'DEVIATES'}"
        )
    return "\n".join(lines)
