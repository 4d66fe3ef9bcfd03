"""File formats: delimited sample files, metadata sidecars, and the
versioned result document.

Samples are decimal text, one point per row, 17 significant digits per
field -- enough for an exact float64 round-trip, so emitted files re-parse
to the arrays that produced them bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .datasets import GENERATOR_NAME
from .features import (
    DiscriminatorParams,
    GaussianBump,
    PotentialParams,
    scale_form_from_flat,
)
from .transport import ComposedMap

__all__ = [
    "InputError",
    "read_samples",
    "write_samples",
    "write_json",
    "read_json",
    "composed_to_doc",
    "composed_from_doc",
    "RESULT_FORMAT_VERSION",
]

RESULT_FORMAT_VERSION = "1"


class InputError(ValueError):
    """Malformed input file; carries the 1-based row number when known."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


def write_samples(path, X: np.ndarray, header: bool = False) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    lines = []
    if header:
        lines.append(",".join(f"x{i + 1}" for i in range(d)))
    for row in X:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_samples(path) -> np.ndarray:
    rows = []
    width = None
    with open(path) as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if i == 1 and fields and fields[0].startswith("x1"):
                continue  # optional header
            try:
                row = [float(v) for v in fields]
            except ValueError:
                raise InputError(f"{path}: non-numeric field", row=i) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InputError(f"{path}: ragged row ({len(row)} fields, expected {width})",
                                 row=i)
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_json(path, doc: dict) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def generator_metadata(seed: int, extra: dict | None = None) -> dict:
    doc = {"generator": GENERATOR_NAME, "seed": seed}
    if extra:
        doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# parameter (de)serialization for the result document
# ---------------------------------------------------------------------------

def _bump_to_doc(b: GaussianBump) -> dict:
    return {
        "amplitude": b.amplitude,
        "center": b.center.tolist(),
        "scale_kind": b.scale.kind,
        "scale": b.scale.flat().tolist(),
    }


def _bump_from_doc(doc: dict) -> GaussianBump:
    center = np.asarray(doc["center"], dtype=float)
    return GaussianBump(
        amplitude=float(doc["amplitude"]),
        center=center,
        scale=scale_form_from_flat(doc["scale_kind"], center.size, doc["scale"]),
    )


def potential_to_doc(p: PotentialParams) -> dict:
    return {
        "A0": p.A0.tolist(),
        "a1": p.a1.tolist(),
        "bumps": [_bump_to_doc(b) for b in p.bumps],
    }


def potential_from_doc(doc: dict) -> PotentialParams:
    return PotentialParams(
        A0=np.asarray(doc["A0"], dtype=float),
        a1=np.asarray(doc["a1"], dtype=float),
        bumps=[_bump_from_doc(b) for b in doc["bumps"]],
    )


def discriminator_to_doc(p: DiscriminatorParams) -> dict:
    return {
        "B0": p.B0.tolist(),
        "b1": p.b1.tolist(),
        "b2": p.b2,
        "bumps": [_bump_to_doc(b) for b in p.bumps],
    }


def discriminator_from_doc(doc: dict) -> DiscriminatorParams:
    return DiscriminatorParams(
        B0=np.asarray(doc["B0"], dtype=float),
        b1=np.asarray(doc["b1"], dtype=float),
        b2=float(doc["b2"]),
        bumps=[_bump_from_doc(b) for b in doc["bumps"]],
    )


def composed_to_doc(composed: ComposedMap) -> list:
    return [potential_to_doc(p) for p in composed.locals]


def composed_from_doc(doc: list) -> ComposedMap:
    return ComposedMap([potential_from_doc(p) for p in doc])
