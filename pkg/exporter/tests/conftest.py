import os

import pytest

# keep hub lookups from leaving the machine: bad model refs fail fast
os.environ.setdefault("HF_HUB_OFFLINE", "1")

# without the package installed this directory contributes nothing, so the
# core test suite stays runnable on its own
collect_ignore_glob: list[str] = []
try:
    import transformer_exporter  # noqa: F401
except ImportError:
    collect_ignore_glob.append("test_*.py")


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory):
    from transformer_exporter import build_tiny_checkpoint

    return build_tiny_checkpoint(tmp_path_factory.mktemp("base") / "ckpt", seed=0)
