"""CSV and JSON formats.

* coefficient CSV: one curve per row, D basis coefficients, no header.
* curve CSV: header ``t,<t_1>,...,<t_m>``; each further row is a curve label
  followed by its values on the grid. A header cell that is not a number
  (``t``) is tolerated only in the first column.
* model JSON: see :func:`model_to_dict`.
"""

import csv
import json
import math
from datetime import datetime, timezone

import numpy as np

from .basis import BasisSpec, CurveGrid
from .errors import NonFiniteInput, ValidationError
from .innovations import FmaModel

SCHEMA_VERSION = 1


def _floats(cells, where):
    try:
        vals = [float(c) for c in cells]
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    if not all(math.isfinite(v) for v in vals):
        raise NonFiniteInput(f"{where}: non-finite value")
    return vals


def read_coeffs(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    data = [_floats(r, f"{path} row {i + 1}") for i, r in enumerate(rows)]
    width = {len(r) for r in data}
    if len(width) != 1:
        raise ValidationError(f"{path}: rows have differing lengths {sorted(width)}")
    return np.array(data)


def write_coeffs(path, coeffs) -> None:
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in coeffs:
            w.writerow([repr(float(v)) for v in row])


def read_curves(path) -> CurveGrid:
    """Read a curve CSV; the first column of data rows is a label and is dropped."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValidationError(f"{path}: need a header row and at least one curve")
    points = _floats(rows[0][1:], f"{path} header")
    values = [_floats(r[1:], f"{path} row {i + 2}") for i, r in enumerate(rows[1:])]
    if any(len(v) != len(points) for v in values):
        raise ValidationError(f"{path}: every curve needs {len(points)} values")
    return CurveGrid(np.array(points), np.array(values))


def write_grid(path, row_labels, col_labels, table, corner="t") -> None:
    """Write a labelled table: header ``corner,cols...`` then ``label,values...``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner] + [repr(float(c)) for c in col_labels])
        for lab, row in zip(row_labels, np.asarray(table, dtype=float)):
            w.writerow([repr(float(lab))] + [repr(float(v)) for v in row])


def model_to_dict(model: FmaModel) -> dict:
    prov = dict(model.provenance)
    prov.setdefault("timestamp", datetime.now(timezone.utc).isoformat(timespec="seconds"))
    return {
        "schema_version": SCHEMA_VERSION,
        "basis": {"kind": model.basis.kind, "dim": model.basis.dim},
        "mean": model.mean.tolist(),
        "eigvals": np.asarray(model.eigvals_all).tolist(),
        "eigvecs": model.eigvecs.tolist(),
        "d": model.d,
        "q": model.q,
        "k_used": model.k_used,
        "theta": np.asarray(model.theta).tolist(),
        "V": np.asarray(model.V).tolist(),
        "provenance": prov,
    }


def model_from_dict(doc: dict) -> FmaModel:
    try:
        if doc["schema_version"] != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema_version {doc['schema_version']}")
        basis = BasisSpec(int(doc["basis"]["dim"]), doc["basis"]["kind"])
        d, q = int(doc["d"]), int(doc["q"])
        eigvecs = np.array(doc["eigvecs"], dtype=float).reshape(basis.dim, d)
        theta = np.array(doc["theta"], dtype=float).reshape(q, d, d)
        V = np.array(doc["V"], dtype=float).reshape(d, d)
        mean = np.array(doc["mean"], dtype=float).reshape(basis.dim)
        model = FmaModel(
            basis=basis,
            eigvecs=eigvecs,
            eigvals_all=np.array(doc["eigvals"], dtype=float),
            d=d,
            q=q,
            k_used=int(doc["k_used"]),
            theta=theta,
            V=V,
            mean=mean,
            provenance=dict(doc.get("provenance", {})),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model document: {exc!r}") from None
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed model document: {exc}") from None
    for arr in (eigvecs, theta, V, mean):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("model document contains non-finite numbers")
    return model


def save_model(path, model: FmaModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> FmaModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc)


def true_model_doc(truth, D: int, provenance: dict | None = None) -> dict:
    """Model document for a simulated truth, expressed in the full basis.

    The eigenvectors are the identity, so ``d = D`` and ``theta`` holds the
    true operators; ``V`` is the innovation covariance.
    """
    q = len(truth.theta_true)
    return {
        "schema_version": SCHEMA_VERSION,
        "true_model": True,
        "basis": {"kind": "fourier", "dim": D},
        "mean": [0.0] * D,
        "eigvals": [],
        "eigvecs": np.eye(D).tolist(),
        "d": D,
        "q": q,
        "k_used": 0,
        "theta": [np.asarray(t).tolist() for t in truth.theta_true],
        "V": truth.innovation_cov.tolist(),
        "provenance": {
            "sigma": truth.sigma.tolist(),
            "invertible": bool(truth.invertible),
            "companion_radius": truth.companion_radius,
            **(provenance or {}),
        },
    }


def write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=True)
        fh.write("\n")
