"""JSON encoding of spaces, subspaces, plans, certificates and reports.

Documents use sorted keys and shortest round-trip float formatting, so equal
objects always produce byte-identical files. Non-finite floats are written
as the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .density import LewisBasis
from .discretize import Certificate, SamplePlan
from .errors import PreconditionError
from .space import DiscreteSpace, Subspace


def plain(obj):
    """Recursively convert numpy and dataclass values to JSON-ready Python objects."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=1, ensure_ascii=False,
                      allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _num(x):
    if isinstance(x, str):
        return float(x)
    return x


# ------------------------------------------------------------------ encoders

def subspace_to_dict(sub: Subspace) -> dict:
    sp = sub.space
    d = {"label": sub.label, "space_label": sp.label, "M": sp.size, "d": sp.dim,
         "weights": sp.weights, "values": sub.values, "orthonormal": sub.orthonormal}
    if sp.coords is not None:
        d["coords"] = sp.coords
    if sp.origin is not None:
        d["origin"] = sp.origin
    return plain(d)


def subspace_from_dict(d: dict) -> Subspace:
    try:
        weights = np.asarray(d["weights"], dtype=float)
        values = np.asarray(d["values"], dtype=float)
    except KeyError as exc:
        raise PreconditionError(f"subspace document lacks {exc}") from None
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if values.shape[0] != weights.size or d.get("M", weights.size) != weights.size:
        raise PreconditionError("subspace document has inconsistent sizes")
    coords = d.get("coords")
    space = DiscreteSpace(weights=weights, coords=None if coords is None else np.asarray(coords),
                          label=d.get("space_label", d.get("label", "")), origin=d.get("origin"))
    return Subspace(space=space, values=values, orthonormal=bool(d.get("orthonormal", False)),
                    label=d.get("label", ""))


def plan_to_dict(plan: SamplePlan) -> dict:
    return plain({"indices": plan.indices, "weights": plan.weights, "p": plan.p,
                  "provenance": plan.provenance})


def plan_from_dict(d: dict) -> SamplePlan:
    return SamplePlan(indices=d["indices"], weights=d["weights"], p=_num(d["p"]),
                      provenance=d.get("provenance", "random"))


def certificate_to_dict(cert: Certificate) -> dict:
    return plain({"p": cert.p, "C1": cert.C1, "C2": cert.C2, "method": cert.method,
                  "detail": cert.detail})


def certificate_from_dict(d: dict) -> Certificate:
    return Certificate(p=_num(d["p"]), C1=_num(d["C1"]), C2=_num(d["C2"]), method=d["method"],
                       detail=d.get("detail", {}))


def lewis_to_dict(lb: LewisBasis) -> dict:
    return plain({"phi": lb.phi, "F": lb.F, "p": lb.p, "residual": lb.residual,
                  "iterations": lb.iterations, "damped": lb.damped})


def lewis_from_dict(d: dict) -> LewisBasis:
    return LewisBasis(phi=np.asarray(d["phi"], dtype=float), F=np.asarray(d["F"], dtype=float),
                      p=_num(d["p"]), residual=_num(d["residual"]),
                      iterations=int(d["iterations"]), damped=bool(d.get("damped", False)))
