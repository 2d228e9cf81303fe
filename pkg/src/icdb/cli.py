"""Operator command line.

    icdb keygen --scheme rsa --out owner.key [--seed N]
    icdb gen-data --profile world --rows 1000 --seed 7 --out data/
    icdb convert-schema --schema data/schema.json --model ocf [--suffix _IC]
    icdb convert-data --schema data/schema.json --model ocf --keys owner.key \\
        --icrl owner.icrl --in data/ --out icdb-data/
    icdb rewrite --schema data/schema.json --model ocf "SELECT ..."
    icdb query --schema data/schema.json --model ocf --keys owner.key \\
        --icrl owner.icrl --data icdb-data/ "SELECT ..."
    icdb verify ...same flags, checks every table...
    icdb attack [--rows 20]
    icdb bench-size / bench-time --dataset data/ --out-dir work/

Exit codes: 0 = everything verified, 1 = integrity failure detected,
2 = usage or I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bench, convert, rewrite, runner, sqlast, verify
from .dataset import generate_dataset
from .errors import IcdbError
from .icrl import Icrl
from .schema import Model, catalog, schemas_from_json
from .schemes import SchemeId, generate_keys, load_key_file, save_key_file
from .store import EmbeddedStore, connector_from_dsn

EXIT_OK = 0
EXIT_INTEGRITY = 1
EXIT_USAGE = 2


def _load_schemas(path):
    with open(path, "r", encoding="utf-8") as fh:
        return schemas_from_json(fh.read())


def _add_common(parser):
    parser.add_argument("--scheme", choices=["rsa", "pbkdf2", "aes"], default="rsa")
    parser.add_argument("--model", choices=["ocf", "oct"], default="ocf")
    parser.add_argument("--suffix", default="_IC")
    parser.add_argument("--bind-table", action="store_true",
                        help="bind the table name into field codes")


def _icdb_catalog(args):
    schemas = _load_schemas(args.schema)
    model = Model.from_cli(args.model)
    return catalog(s.converted(model, args.suffix) for s in schemas), model


def _open_connector(args, schemas, model):
    """Embedded store loaded from --data, or an adapter from --dsn/ICDB_DSN."""
    dsn = getattr(args, "dsn", None) or os.environ.get("ICDB_DSN")
    if dsn and not getattr(args, "embedded", False):
        return connector_from_dsn(dsn)
    store = EmbeddedStore()
    for schema in schemas.values():
        store.create_table(schema)
        store.load_data_file(
            schema.table_name, os.path.join(args.data, f"{schema.table_name}.dat")
        )
    return store


def cmd_keygen(args) -> int:
    scheme = SchemeId.from_cli(args.scheme)
    key = generate_keys(scheme, rng_seed=args.seed, rsa_bits=args.rsa_bits)
    save_key_file(key, args.out)
    print(f"wrote {scheme.value} key material to {args.out}")
    if scheme is SchemeId.AES_CIPHER:
        print("warning: AES codes use ECB; identical messages yield identical blocks")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    dataset = generate_dataset(args.profile, args.rows, args.seed, args.out)
    for schema in dataset.schemas:
        print(f"{dataset.data_path(schema.table_name)}: "
              f"{dataset.row_counts[schema.table_name]} rows")
    print(f"{dataset.schema_path}: schema for {len(dataset.schemas)} tables")
    return EXIT_OK


def cmd_convert_schema(args) -> int:
    schemas = _load_schemas(args.schema)
    model = Model.from_cli(args.model)
    for schema in schemas:
        for statement in convert.emit_schema_ddl(schema, model, args.suffix):
            print(statement)
    return EXIT_OK


def cmd_convert_data(args) -> int:
    schemas = _load_schemas(args.schema)
    model = Model.from_cli(args.model)
    key = load_key_file(args.keys)
    icrl = Icrl.load(args.icrl) if os.path.exists(args.icrl) else Icrl()
    os.makedirs(args.out, exist_ok=True)
    for schema in schemas:
        in_path = os.path.join(getattr(args, "in"), f"{schema.table_name}.dat")
        out_path = os.path.join(args.out, f"{schema.table_name}.dat")
        result = convert.convert_data_file(
            in_path, out_path, schema, model, key, icrl, bind_table=args.bind_table
        )
        print(f"{schema.table_name}: {result.rows} rows, {result.codes} codes, "
              f"{result.input_bytes} -> {result.output_bytes} bytes")
        if args.load_sql:
            print(convert.emit_load_statements(schema, out_path))
    icrl.save(args.icrl)
    print(f"updated {args.icrl} (next serial {icrl.next_serial})")
    return EXIT_OK


def cmd_rewrite(args) -> int:
    schemas, model = _icdb_catalog(args)
    query = sqlast.parse(args.sql)
    if query.kind == "SELECT":
        plan = rewrite.rewrite_select(query, schemas)
        print(plan.icdb_sql)
        if plan.needs_second_fetch:
            print(f"-- second fetch: {plan.second_fetch.icdb_sql}")
    elif query.kind == "DELETE":
        plan = rewrite.plan_delete(query, schemas)
        print(plan.pre_select.icdb_sql)
        print(plan.delete_sql)
        print("-- then revoke the serials fetched in phase 1")
    else:
        print("INSERT conversion allocates serials; use 'icdb query' to execute it",
              file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def cmd_query(args) -> int:
    schemas, model = _icdb_catalog(args)
    key = load_key_file(args.keys)
    icrl = Icrl.load(args.icrl)
    conn = _open_connector(args, schemas, model)
    query = sqlast.parse(args.sql)

    if query.kind == "SELECT":
        plan = rewrite.rewrite_select(query, schemas)
        outcome = runner.run_select(
            conn, plan, key, icrl, workers=args.workers, bind_table=args.bind_table
        )
        _print_rows(outcome.columns, outcome.rows)
        _print_report(outcome.report, args.out)
        return EXIT_OK if outcome.report.all_valid else EXIT_INTEGRITY
    if query.kind == "DELETE":
        plan = rewrite.plan_delete(query, schemas)
        outcome = runner.run_delete(
            conn, plan, key, icrl, workers=args.workers, bind_table=args.bind_table
        )
        icrl.save(args.icrl)
        print(f"deleted {outcome.deleted_rows} rows, "
              f"revoked {len(outcome.revoked_serials)} serials")
        _print_report(outcome.report, args.out)
        return EXIT_OK if outcome.report.all_valid else EXIT_INTEGRITY
    plan = rewrite.plan_insert(query, schemas, key, icrl, bind_table=args.bind_table)
    count = runner.run_insert(conn, plan)
    icrl.save(args.icrl)
    print(f"inserted {count} row(s) with serials {list(plan.inserted_serials)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    schemas, model = _icdb_catalog(args)
    key = load_key_file(args.keys)
    icrl = Icrl.load(args.icrl)
    conn = _open_connector(args, schemas, model)
    worst = EXIT_OK
    for name in sorted(schemas):
        schema = schemas[name]
        plan = rewrite.rewrite_select(
            sqlast.parse(f"SELECT * FROM {schema.table_name};"), schemas
        )
        outcome = runner.run_select(
            conn, plan, key, icrl, workers=args.workers, bind_table=args.bind_table
        )
        status = "ok" if outcome.report.all_valid else "FAILED"
        print(f"{schema.table_name}: {outcome.report.total_checks} checks {status}")
        if not outcome.report.all_valid:
            _print_report(outcome.report, args.out)
            worst = EXIT_INTEGRITY
    return worst


def cmd_attack(args) -> int:
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        dataset = generate_dataset("world", args.rows, args.seed, os.path.join(tmp, "data"))
        outcomes = bench.run_attack_matrix(dataset, bench.ALL_COMBOS, tmp)
    print(bench.attack_matrix_text(outcomes))
    deviations = [o for o in outcomes if not o.as_expected]
    if deviations:
        print(f"{len(deviations)} outcome(s) deviate from the expected pattern")
        return EXIT_INTEGRITY
    return EXIT_OK


def cmd_bench_size(args) -> int:
    dataset = _dataset_from_dir(args.dataset)
    os.makedirs(args.out_dir, exist_ok=True)
    results = bench.bench_size(dataset, _combos(args), args.out_dir)
    _emit_results(results, args.out)
    print(bench.size_ratio_table(results), file=sys.stderr)
    return EXIT_OK


def cmd_bench_time(args) -> int:
    dataset = _dataset_from_dir(args.dataset)
    os.makedirs(args.out_dir, exist_ok=True)
    results = bench.bench_conversion_time(
        dataset, args.table or dataset.schemas[0].table_name,
        _combos(args), args.out_dir, iterations=args.iterations,
    )
    results += bench.bench_select_star(
        dataset, args.table or dataset.schemas[0].table_name,
        _combos(args), args.out_dir, iterations=args.iterations,
    )
    _emit_results(results, args.out)
    return EXIT_OK


def _combos(args):
    schemes_arg = args.schemes.split(",") if args.schemes else ["rsa", "pbkdf2", "aes"]
    models_arg = args.models.split(",") if args.models else ["ocf", "oct"]
    return [
        (SchemeId.from_cli(s), Model.from_cli(m))
        for s in schemes_arg
        for m in models_arg
    ]


def _dataset_from_dir(path):
    from .dataset import Dataset

    schemas = _load_schemas(os.path.join(path, "schema.json"))
    counts = {}
    for schema in schemas:
        data_path = os.path.join(path, f"{schema.table_name}.dat")
        counts[schema.table_name] = len(convert.read_data_file(data_path))
    return Dataset(
        profile=os.path.basename(os.path.normpath(path)) or "dataset",
        directory=str(path),
        schemas=schemas,
        row_counts=counts,
    )


def _emit_results(results, out_format: str) -> None:
    if out_format == "json":
        import json

        print(json.dumps([r.__dict__ for r in results], indent=2))
    else:
        print(bench.results_to_csv(results), end="")


def _print_rows(columns, rows) -> None:
    print("\t".join(columns))
    for row in rows:
        print("\t".join("NULL" if cell is None else cell for cell in row))


def _print_report(report: verify.VerificationReport, out_format: str) -> None:
    if out_format == "json":
        print(report.to_json())
    else:
        print(report.to_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icdb",
        description="Integrity-coded database toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate key material")
    p.add_argument("--scheme", choices=["rsa", "pbkdf2", "aes"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="deterministic keys for tests only")
    p.add_argument("--rsa-bits", type=int, default=1024)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--profile", choices=["world", "single"], default="world")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("convert-schema", help="print conversion DDL")
    p.add_argument("--schema", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_convert_schema)

    p = sub.add_parser("convert-data", help="convert data files")
    p.add_argument("--schema", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--icrl", required=True)
    p.add_argument("--in", dest="in", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--load-sql", action="store_true",
                   help="also print LOAD DATA statements")
    _add_common(p)
    p.set_defaults(func=cmd_convert_data)

    p = sub.add_parser("rewrite", help="convert a query")
    p.add_argument("--schema", required=True)
    _add_common(p)
    p.add_argument("sql")
    p.set_defaults(func=cmd_rewrite)

    for name, func in (("query", cmd_query), ("verify", cmd_verify)):
        p = sub.add_parser(name)
        p.add_argument("--schema", required=True)
        p.add_argument("--keys", required=True)
        p.add_argument("--icrl", required=True)
        p.add_argument("--data", help="directory of converted data files")
        p.add_argument("--dsn", help="external connector DSN (or ICDB_DSN)")
        p.add_argument("--embedded", action="store_true",
                       help="force the embedded store even when ICDB_DSN is set")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", choices=["text", "json"], default="text")
        _add_common(p)
        if name == "query":
            p.add_argument("sql")
        p.set_defaults(func=func)

    p = sub.add_parser("attack", help="run the attack detection matrix")
    p.add_argument("--rows", type=int, default=12)
    p.add_argument("--seed", type=int, default=23)
    p.set_defaults(func=cmd_attack)

    for name, func in (("bench-size", cmd_bench_size), ("bench-time", cmd_bench_time)):
        p = sub.add_parser(name)
        p.add_argument("--dataset", required=True, help="directory from gen-data")
        p.add_argument("--out-dir", required=True, help="scratch directory")
        p.add_argument("--schemes", help="comma list: rsa,pbkdf2,aes")
        p.add_argument("--models", help="comma list: ocf,oct")
        p.add_argument("--out", choices=["csv", "json"], default="csv")
        if name == "bench-time":
            p.add_argument("--table", help="table to benchmark (default: first)")
            p.add_argument("--iterations", type=int, default=30)
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IcdbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
