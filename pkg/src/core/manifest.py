#!/usr/bin/env python3
"""
Run manifest for pdqrng.
Lists every artifact a run wrote with its content hash, plus the config hash,
seed scheme and library versions. Contains no timestamps so identical runs
produce identical manifests.
"""

import hashlib
import json
import os
import platform
from typing import Any, Dict, Optional

from core.logger import log_info

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def library_versions() -> Dict[str, str]:
    import numpy
    import scipy
    return {
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
    }


class RunManifest:
    """Accumulates the artifacts and statistics of one output directory"""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.data: Dict[str, Any] = {
            "config_sha256": None,
            "seed_scheme": None,
            "versions": library_versions(),
            "outputs": {},
            "stages": {},
        }

    @property
    def path(self) -> str:
        return os.path.join(self.out_dir, MANIFEST_NAME)

    @classmethod
    def load(cls, out_dir: str) -> "RunManifest":
        """Open an existing manifest, or start a fresh one if absent."""
        manifest = cls(out_dir)
        if os.path.exists(manifest.path):
            with open(manifest.path, "r") as f:
                manifest.data.update(json.load(f))
        return manifest

    def set_config(self, config_text: str, seed_scheme: Dict[str, Any]) -> None:
        self.data["config_sha256"] = hashlib.sha256(config_text.encode("utf-8")).hexdigest()
        self.data["seed_scheme"] = seed_scheme

    def add_output(self, path: str, kind: str) -> None:
        name = os.path.relpath(path, self.out_dir)
        self.data["outputs"][name] = {"kind": kind, "sha256": sha256_file(path)}

    def record_stage(self, stage: str, info: Dict[str, Any]) -> None:
        self.data["stages"][stage] = info

    def stage(self, stage: str) -> Optional[Dict[str, Any]]:
        return self.data["stages"].get(stage)

    def save(self) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        with open(self.path, "w") as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
            f.write("\n")
        log_info(f"Manifest written: {self.path}", component="pipeline")
        return self.path
