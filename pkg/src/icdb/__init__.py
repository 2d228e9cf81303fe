"""Integrity Coded Database toolkit.

Converts relational data into integrity-coded form, rewrites queries to
fetch codes alongside data, verifies correctness and freshness of results,
and benchmarks the overhead of three cryptographic schemes under
field-level and tuple-level code granularity.
"""

from .codec import (
    FieldCoordinates,
    IntegrityCode,
    TupleImage,
    Verdict,
    VerdictStatus,
    canonical_field_message,
    canonical_tuple_message,
    generate_field_code,
    generate_tuple_code,
    verify_field_code,
    verify_tuple_code,
)
from .convert import (
    convert_data_file,
    emit_load_statements,
    emit_schema_ddl,
    predict_converted_size,
)
from .dataset import generate_dataset
from .errors import IcdbError
from .icrl import Icrl, IcrlSnapshot
from .rewrite import (
    RewritePlan,
    plan_delete,
    plan_insert,
    rewrite_select,
    rewrite_select_ocf,
    rewrite_select_oct,
)
from .schema import ColumnSpec, Model, TableSchema, catalog
from .schemes import (
    KeyMaterial,
    SchemeId,
    check_code,
    emit_code,
    generate_keys,
    load_key_file,
    recover_plaintext,
    save_key_file,
)
from .sqlast import parse, render
from .store import EmbeddedStore, connector_from_dsn
from .verify import VerificationReport, verify_parallel, verify_result_set

__version__ = "0.1.0"

__all__ = [
    "ColumnSpec",
    "EmbeddedStore",
    "FieldCoordinates",
    "Icrl",
    "IcrlSnapshot",
    "IcdbError",
    "IntegrityCode",
    "KeyMaterial",
    "Model",
    "RewritePlan",
    "SchemeId",
    "TableSchema",
    "TupleImage",
    "VerificationReport",
    "Verdict",
    "VerdictStatus",
    "canonical_field_message",
    "canonical_tuple_message",
    "catalog",
    "check_code",
    "connector_from_dsn",
    "convert_data_file",
    "emit_code",
    "emit_load_statements",
    "emit_schema_ddl",
    "generate_dataset",
    "generate_field_code",
    "generate_keys",
    "generate_tuple_code",
    "load_key_file",
    "parse",
    "plan_delete",
    "plan_insert",
    "predict_converted_size",
    "recover_plaintext",
    "render",
    "rewrite_select",
    "rewrite_select_ocf",
    "rewrite_select_oct",
    "save_key_file",
    "verify_field_code",
    "verify_parallel",
    "verify_result_set",
    "verify_tuple_code",
]
