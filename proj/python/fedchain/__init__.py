"""Python surface of the fedchain simulator.

The compiled extension normally sits next to this file. During
in-tree development the build directory can be pointed at with the
FEDCHAIN_EXT_DIR environment variable instead.
"""

import importlib
import importlib.util
import os
import sys

__all__ = ["ckks", "data", "fl", "ledger", "sim"]


def _load_core():
    try:
        return importlib.import_module("fedchain._core")
    except ImportError:
        ext_dir = os.environ.get("FEDCHAIN_EXT_DIR")
        if not ext_dir:
            raise
        for name in os.listdir(ext_dir):
            if name.startswith("_core") and name.endswith((".so", ".pyd")):
                spec = importlib.util.spec_from_file_location(
                    "fedchain._core", os.path.join(ext_dir, name)
                )
                module = importlib.util.module_from_spec(spec)
                sys.modules["fedchain._core"] = module
                spec.loader.exec_module(module)
                return module
        raise


_core = _load_core()

ckks = _core.ckks
data = _core.data
fl = _core.fl
ledger = _core.ledger
sim = _core.sim
