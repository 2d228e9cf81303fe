import pytest

from icdb.dataset import generate_dataset, world_schemas
from icdb.schema import ColumnSpec, Model, TableSchema, catalog
from icdb.schemes import SchemeId, generate_keys

KEY_SEED = 20150723


@pytest.fixture(scope="session")
def rsa_key():
    return generate_keys(SchemeId.RSA_SIGN, rng_seed=KEY_SEED)


@pytest.fixture(scope="session")
def mac_key():
    return generate_keys(SchemeId.PBKDF2_MAC, rng_seed=KEY_SEED)


@pytest.fixture(scope="session")
def aes_key():
    return generate_keys(SchemeId.AES_CIPHER, rng_seed=KEY_SEED)


@pytest.fixture(scope="session")
def keys(rsa_key, mac_key, aes_key):
    return {
        SchemeId.RSA_SIGN: rsa_key,
        SchemeId.PBKDF2_MAC: mac_key,
        SchemeId.AES_CIPHER: aes_key,
    }


@pytest.fixture(scope="session")
def employee_schema():
    return TableSchema(
        "employee",
        (
            ColumnSpec("ssn", is_key=True),
            ColumnSpec("fname"),
            ColumnSpec("lname"),
            ColumnSpec("dno"),
        ),
    )


@pytest.fixture(scope="session")
def employee_ocf(employee_schema):
    return catalog([employee_schema.converted(Model.OCF)])


@pytest.fixture(scope="session")
def employee_oct(employee_schema):
    return catalog([employee_schema.converted(Model.OCT)])


@pytest.fixture(scope="session")
def world_plain():
    return world_schemas()


@pytest.fixture(scope="session")
def world_svc_ocf(world_plain):
    return catalog(s.converted(Model.OCF, "_SVC") for s in world_plain)


@pytest.fixture(scope="session")
def world_ic_ocf(world_plain):
    return catalog(s.converted(Model.OCF) for s in world_plain)


@pytest.fixture(scope="session")
def world_oct(world_plain):
    return catalog(s.converted(Model.OCT) for s in world_plain)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """World profile, 40 rows per table."""
    out = tmp_path_factory.mktemp("dataset")
    return generate_dataset("world", 40, seed=5, out_dir=out)


@pytest.fixture(scope="session")
def bench_workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("bench")
