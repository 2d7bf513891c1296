"""Small shared helpers: seed derivation and artifact hashing."""

from __future__ import annotations

import hashlib
from pathlib import Path


def derive_seed(master_seed: int, name: str) -> int:
    """Derive a 64-bit component seed from a master seed and a component name.

    sha256 over "master:name", truncated to the first 8 bytes. Distinct names
    give unrelated streams, so the same master seed can never accidentally
    couple, say, augmentation noise to k-means initialization.
    """
    digest = hashlib.sha256(f"{master_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def sha256_file(path: str | Path) -> str:
    """Hex sha256 of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_csv_excluding(path: str | Path, exclude_columns: list[str]) -> str:
    """Hex sha256 of a CSV with the named columns dropped.

    Used for artifacts that carry wall-clock columns: the timing values are
    excluded from the content hash so reruns verify against the manifest.
    """
    import csv

    h = hashlib.sha256()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        keep = [i for i, name in enumerate(header) if name not in exclude_columns]
        h.update(",".join(header[i] for i in keep).encode("utf-8"))
        for row in reader:
            h.update(b"\n")
            h.update(",".join(row[i] for i in keep).encode("utf-8"))
    return h.hexdigest()


def fmt_float(x: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(x))
