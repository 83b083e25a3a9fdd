"""Deterministic CSV output and run manifests.

All floats are written in scientific notation with 17 significant digits so
identical configs reproduce byte-identical files.  CSV dialect: UTF-8, LF
line endings, comma separator, one header row, '#'-prefixed comment lines for
metadata.
"""
from __future__ import annotations

import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from .errors import ConfigError


def fmt(x) -> str:
    """Canonical float formatting (17 significant digits, scientific)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def write_csv(path, header_cols, rows, meta: dict | None = None):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(header_cols) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunManifest:
    """Provenance record sufficient to re-run an experiment exactly.

    The fully resolved config echo is written to ``config_echo.json`` before
    execution; the manifest itself (versions, durations, output checksums) is
    finalized at the end of the run.
    """

    def __init__(self, out_dir, config: dict):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.t_start = time.time()
        self.outputs: list[Path] = []
        echo = self.out_dir / "config_echo.json"
        with open(echo, "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def register(self, path) -> Path:
        self.outputs.append(Path(path))
        return Path(path)

    def finalize(self, extra: dict | None = None) -> Path:
        manifest = {
            "config": self.config,
            "versions": {
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "platform": platform.platform(),
            },
            "started_unix": self.t_start,
            "duration_s": time.time() - self.t_start,
            "outputs": {str(p.name): sha256_of(p) for p in self.outputs},
        }
        if extra:
            manifest["extra"] = extra
        path = self.out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def parse_strict(data: dict, schema: dict, where: str = "config") -> dict:
    """Validate a config dict against {key: (type(s), default)}.

    Unknown keys are errors, not warnings: a typo in a physics sweep must not
    silently fall back to a default.  Returns the dict with defaults filled.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    unknown = set(data) - set(schema)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; "
                          f"allowed: {sorted(schema)}")
    out = {}
    for key, (types, default) in schema.items():
        if key in data:
            val = data[key]
            if types is float and isinstance(val, int):
                val = float(val)
            if not isinstance(val, types):
                raise ConfigError(
                    f"{where}.{key}: expected {types}, got {type(val).__name__}")
            out[key] = val
        else:
            out[key] = default
    return out
