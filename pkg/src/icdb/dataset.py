"""Deterministic synthetic datasets shaped like small geographic databases.

The `world` profile produces three tables (city, country, language) with
mixed short strings and integers, mirroring the short-attribute regime the
overhead measurements care about; `single` produces a one-column table for
closed-form size checks. Output is seed-stable: the same (profile, rows,
seed) always yields identical files.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

from .convert import write_data_file
from .schema import ColumnSpec, TableSchema, schemas_to_json

PROFILES = ("world", "single")

_SYLLABLES = (
    "an", "ar", "bel", "bor", "ca", "dan", "del", "en", "fa", "gor", "ha",
    "il", "jo", "ka", "lun", "mar", "nor", "ol", "pe", "qu", "ra", "sa",
    "tor", "ul", "va", "wen", "xi", "yo", "zan",
)
_CONTINENTS = (
    "Asia", "Europe", "Africa", "Oceania", "Antarctica",
    "North America", "South America",
)
_FORMS = ("Republic", "Monarchy", "Federation", "Commonwealth", "Territory")
def _word(rng: random.Random, lo: int, hi: int) -> str:
    out = []
    while len("".join(out)) < lo:
        out.append(rng.choice(_SYLLABLES))
    word = "".join(out)[:hi]
    return word.capitalize()


def world_schemas() -> list[TableSchema]:
    """Plain layouts for the three world-profile tables."""
    city = TableSchema(
        "City",
        (
            ColumnSpec("ID", is_key=True),
            ColumnSpec("Name"),
            ColumnSpec("CountryCode"),
            ColumnSpec("District"),
            ColumnSpec("Population"),
        ),
    )
    country = TableSchema(
        "Country",
        (
            ColumnSpec("Code", is_key=True),
            ColumnSpec("Name"),
            ColumnSpec("Continent"),
            ColumnSpec("Region"),
            ColumnSpec("SurfaceArea"),
            ColumnSpec("IndepYear"),
            ColumnSpec("Population"),
            ColumnSpec("LifeExpectancy"),
            ColumnSpec("GNP"),
            ColumnSpec("GNPOld"),
            ColumnSpec("LocalName"),
            ColumnSpec("GovernmentForm"),
            ColumnSpec("HeadOfState"),
            ColumnSpec("Capital"),
            ColumnSpec("Code2"),
        ),
    )
    language = TableSchema(
        "CountryLanguage",
        (
            ColumnSpec("CountryCode", is_key=True),
            ColumnSpec("Language", is_key=True),
            ColumnSpec("IsOfficial"),
            ColumnSpec("Percentage"),
        ),
    )
    return [city, country, language]


def single_schemas() -> list[TableSchema]:
    return [TableSchema("Item", (ColumnSpec("ID", is_key=True),))]


def _country_codes(rng: random.Random, count: int) -> list[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    codes: list[str] = []
    seen = set()
    while len(codes) < count:
        code = "".join(rng.choice(letters) for _ in range(3))
        if code not in seen:
            seen.add(code)
            codes.append(code)
    return codes


def _world_rows(rng: random.Random, rows: int):
    codes = _country_codes(rng, rows)
    country = []
    for code in codes:
        name = _word(rng, 13, 20)
        country.append(
            [
                code,
                name,
                rng.choice(_CONTINENTS),
                _word(rng, 14, 21),
                f"{rng.randint(100_000, 9_999_999)}.{rng.randint(0, 99):02d}",
                str(rng.randint(1000, 2010)),
                str(rng.randint(10_000_000, 999_999_999)),
                f"{rng.randint(40, 99)}.{rng.randint(0, 9)}",
                str(rng.randint(10_000_000, 99_999_999_999)),
                str(rng.randint(10_000_000, 99_999_999_999)),
                _word(rng, 13, 20),
                rng.choice(_FORMS),
                _word(rng, 14, 21),
                str(rng.randint(100_000, 999_999)),
                code[:2],
            ]
        )
    city = []
    for i in range(1, rows + 1):
        city.append(
            [
                str(i),
                _word(rng, 13, 20),
                rng.choice(codes),
                _word(rng, 14, 21),
                str(rng.randint(100_000_000, 999_999_999)),
            ]
        )
    language = []
    pairs = set()
    while len(language) < rows:
        pair = (rng.choice(codes), _word(rng, 13, 19))
        if pair in pairs:
            continue
        pairs.add(pair)
        language.append(
            [
                pair[0],
                pair[1],
                rng.choice(("T", "F")),
                f"{rng.randint(10, 99)}.{rng.randint(0, 999):03d}",
            ]
        )
    return {"City": city, "Country": country, "CountryLanguage": language}


@dataclass
class Dataset:
    profile: str
    directory: str
    schemas: list[TableSchema]
    row_counts: dict[str, int]

    def data_path(self, table: str) -> str:
        return os.path.join(self.directory, f"{table}.dat")

    @property
    def schema_path(self) -> str:
        return os.path.join(self.directory, "schema.json")


def generate_dataset(profile: str, rows: int, seed: int, out_dir) -> Dataset:
    """Write `rows` rows per table plus schema.json into `out_dir`."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r} (expected one of {PROFILES})")
    if rows < 1:
        raise ValueError("rows must be at least 1")
    rng = random.Random(seed)
    os.makedirs(out_dir, exist_ok=True)

    if profile == "world":
        schemas = world_schemas()
        tables = _world_rows(rng, rows)
        if rows > 17000:
            raise ValueError("world profile supports at most 17000 rows per table")
    else:
        schemas = single_schemas()
        tables = {"Item": [[str(i)] for i in range(1, rows + 1)]}

    dataset = Dataset(
        profile=profile,
        directory=str(out_dir),
        schemas=schemas,
        row_counts={name: len(rows_) for name, rows_ in tables.items()},
    )
    for schema in schemas:
        write_data_file(dataset.data_path(schema.table_name), tables[schema.table_name])
    with open(dataset.schema_path, "w", encoding="utf-8") as fh:
        fh.write(schemas_to_json(schemas))
    return dataset


def mean_field_width(dataset: Dataset) -> float:
    """Average field byte width across all data files (NULLs count as 0)."""
    from .convert import read_data_file

    total = 0
    count = 0
    for schema in dataset.schemas:
        for row in read_data_file(dataset.data_path(schema.table_name)):
            for cell in row:
                total += len(cell.encode("utf-8")) if cell is not None else 0
                count += 1
    return total / count if count else 0.0
