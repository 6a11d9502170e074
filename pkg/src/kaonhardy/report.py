"""JSON/CSV serialization of results.

JSON documents carry ``schema_version``, the resolved configuration and a
command-specific payload; floats are written with 12 significant digits and
keys sorted, so parse -> re-emit is byte-identical. Schemas live in
``docs/schemas``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any

from .hardy import FeasibilityReport, HardyCertificate, VerdictResult
from .montecarlo import CountsTable, StatReport
from .measurement import ProbabilityTable

SCHEMA_VERSION = "1.0"
SIGNIFICANT_DIGITS = 12

CSV_COLUMNS = {
    "predict": ("setting", "left", "right", "probability"),
    "simulate": ("setting", "left", "right", "count"),
    "solve": ("key", "value"),
    "lhv-check": ("key", "value"),
}


def _round(x: float) -> float | None:
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def _clean(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, float):
        return _round(obj)
    if isinstance(obj, complex):
        return {"re": _round(obj.real), "im": _round(obj.imag)}
    if isinstance(obj, Fraction):
        return {"value": _round(float(obj)), "exact": str(obj)}
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def document(command: str, config: dict[str, Any] | None, payload: dict[str, Any]) -> dict[str, Any]:
    return _clean({"schema_version": SCHEMA_VERSION, "command": command, "config": config, "payload": payload})


def dumps_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def table_payload(table: ProbabilityTable) -> dict[str, Any]:
    return {
        "setting": int(table.setting),
        "entries": [
            {"left": jo.left.value, "right": jo.right.value, "probability": p}
            for jo, p in table.entries.items()
        ],
    }


def observables_payload(values) -> dict[str, float]:
    return {f"P{i}": float(v) for i, v in enumerate(values, start=1)}


def certificate_payload(cert: HardyCertificate) -> dict[str, Any]:
    return {
        "r_abs": cert.r_abs,
        "T_star": cert.T_star,
        "required_arg_r": cert.required_arg_r,
        "R": cert.R,
        "Rprime": cert.Rprime,
        "residuals": dict(zip(("P2", "P3", "P4"), cert.residuals)),
        "fraction": cert.fraction,
        "fraction_full": cert.fraction_full,
        "survival_probability": cert.survival_probability,
        "regime_warning": cert.regime_warning,
    }


def verdict_payload(v: VerdictResult) -> dict[str, Any]:
    return {"verdict": v.verdict.value, "reason": v.reason, "lhv_bound": v.lhv_bound, "margin": v.margin}


def feasibility_payload(rep: FeasibilityReport) -> dict[str, Any]:
    witness = None
    if rep.witness is not None:
        witness = [
            {
                "left": {"strangeness": s.left_strangeness.value, "lifetime": s.left_lifetime.value},
                "right": {"strangeness": s.right_strangeness.value, "lifetime": s.right_lifetime.value},
                "weight": w,
            }
            for s, w in rep.witness.items()
        ]
    return {"feasible": rep.feasible, "witness": witness, "violation": rep.violation, "reason": rep.reason}


def counts_payload(counts: CountsTable) -> dict[str, Any]:
    return {
        "events_per_setting": counts.events_per_setting,
        "total_generated": counts.total_generated,
        "survival_probability": counts.survival_probability,
        "produced_pairs": counts.produced_pairs,
        "settings": [
            {
                "setting": int(s),
                "counts": [{"left": jo.left.value, "right": jo.right.value, "count": n} for jo, n in table.items()],
            }
            for s, table in counts.counts.items()
        ],
    }


def stats_payload(report: StatReport) -> dict[str, Any]:
    rows = []
    for i, s in enumerate(report.observables, start=1):
        if s is None:
            rows.append({"observable": f"P{i}", "measured": False})
            continue
        rows.append(
            {
                "observable": f"P{i}",
                "measured": True,
                "name": s.name,
                "setting": int(s.setting),
                "count": s.count,
                "n": s.n,
                "estimate": s.estimate,
                "stderr": s.stderr,
                "z_zero": s.z_zero,
                "z_qm": s.z_qm,
                "qm_prediction": s.qm_prediction,
                "tolerance": report.confidence * s.stderr,
            }
        )
    return {"confidence": report.confidence, "observables": rows}


def _flatten(prefix: str, obj: Any, out: list[tuple[str, Any]]) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else k, obj[k], out)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, obj))


def dumps_csv(doc: dict[str, Any]) -> str:
    """Flat CSV view of a document; column order per ``CSV_COLUMNS``."""
    command = doc["command"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS[command])
    payload = doc["payload"]
    if command == "predict":
        for table in payload["tables"]:
            for e in table["entries"]:
                writer.writerow((table["setting"], e["left"], e["right"], repr(e["probability"])))
    elif command == "simulate":
        for block in payload["counts"]["settings"]:
            for e in block["counts"]:
                writer.writerow((block["setting"], e["left"], e["right"], e["count"]))
    else:
        rows: list[tuple[str, Any]] = []
        _flatten("", payload, rows)
        for key, value in rows:
            writer.writerow((key, "" if value is None else value))
    return buf.getvalue()
