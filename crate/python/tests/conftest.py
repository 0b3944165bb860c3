"""Makes the `hggs` extension importable without installing it.

An installed wheel wins. Otherwise the cdylib from `cargo build -p hggs-py`
is copied under its Python module name into a temp dir on `sys.path`.
"""

import importlib.util
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]


def _locate_cdylib():
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target"))
    for profile in ("release", "debug"):
        lib = target / profile / "libhggs.so"
        if lib.exists():
            return lib
    return None


if importlib.util.find_spec("hggs") is None:
    lib = _locate_cdylib()
    if lib is None:
        raise RuntimeError("build the extension first: cargo build -p hggs-py")
    staging = Path(tempfile.mkdtemp(prefix="hggs-py-"))
    shutil.copy(lib, staging / "hggs.so")
    sys.path.insert(0, str(staging))
