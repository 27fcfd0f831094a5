"""Serialization of estimate rows to JSON and aligned text.

Values are proportions internally; the x100 presentation scale is applied
here and nowhere else. Every number is rounded to 12 significant digits so
the JSON and text renderings carry identical values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .estimators import PointEstimates
from .inference import InferenceReport

SCALE = 100.0
SIG = 12
FOOTNOTE = "All values have been multiplied by 100 (z statistics excepted)."
HOMOGENEOUS_NOTE = "single subgroup: rho_a equals rho_b, so rho_a and ci_a are omitted"


def fmt(v) -> str:
    if v is None:
        return "."
    return f"{v:.{SIG}g}"


def rounded(v):
    """Round to the shared significant-digit grid; non-finite values become None."""
    if v is None or not math.isfinite(v):
        return None
    return float(fmt(v))


@dataclass(frozen=True)
class EstimateRow:
    """One reported target: a label, its cells, and point plus interval estimates."""

    panel: str
    label: str
    n_groups: int
    n_obs: int
    point: PointEstimates
    inference: InferenceReport
    notes: tuple = field(default=())

    @property
    def homogeneous(self):
        return self.n_groups == 1

    def to_dict(self) -> dict:
        p, inf = self.point, self.inference
        s = SCALE
        notes = list(self.notes) + list(inf.notes)
        if self.homogeneous:
            notes.append(HOMOGENEOUS_NOTE)
        if p.rho_d_approximate:
            notes.append("rho_d uses a robust covariance; exact unbiasedness not guaranteed")
        return {
            "panel": self.panel,
            "label": self.label,
            "n_groups": self.n_groups,
            "n_obs": int(self.n_obs),
            "tau_bar": rounded(s * p.tau_bar),
            "rho_a": None if self.homogeneous else rounded(s * p.rho_a),
            "rho_b": rounded(s * p.rho_b),
            "rho_c": rounded(s * p.rho_c),
            "rho_d": rounded(s * p.rho_d),
            "ci_tau": [rounded(s * v) for v in inf.ci_tau],
            "ci_a": None if self.homogeneous else [rounded(s * v) for v in inf.ci_a],
            "ci_rho": [rounded(s * v) for v in inf.ci_rho],
            "z_tau": rounded(inf.z_tau),
            "z_a": rounded(inf.z_a),
            "z_mu": rounded(inf.z_mu),
            "se_tau_bar": rounded(s * inf.se_tau_bar),
            "notes": notes,
        }


def to_json(rows, meta=None) -> str:
    doc = {"scaled_by_100": True}
    doc.update(meta or {})
    doc["rows"] = [r.to_dict() for r in rows]
    return json.dumps(doc, indent=2) + "\n"


COLUMNS = ("tau_bar", "rho_a", "rho_b", "rho_c", "rho_d", "ci_tau", "ci_a", "ci_rho", "z_tau", "z_mu")


def _cell(d, key):
    v = d[key]
    if isinstance(v, list):
        return f"[{fmt(v[0])}, {fmt(v[1])}]"
    return fmt(v)


def to_text(rows, title="Estimates of the average effect in percentage points") -> str:
    """Aligned table grouped into panels, in row order."""
    dicts = [r.to_dict() for r in rows]
    header = ("", "N") + COLUMNS
    body = [[d["label"], str(d["n_obs"])] + [_cell(d, k) for k in COLUMNS] for d in dicts]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]

    def line(cells):
        return "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths))).rstrip()

    out = [title, line(header), "-" * len(line(header))]
    panel = None
    for d, b in zip(dicts, body):
        if d["panel"] != panel:
            panel = d["panel"]
            out.append(f"{panel}:")
        out.append(line(b))
    out.append("")
    out.append(f"Note: {FOOTNOTE}")
    seen = []
    for d in dicts:
        for n in d["notes"]:
            if n not in seen:
                seen.append(n)
    out.extend(f"Note: {n}" for n in seen)
    return "\n".join(out) + "\n"


def parse_text_numbers(text) -> list:
    """Numeric tokens of the table body, in order; used for round-trip checks."""
    vals = []
    for ln in text.splitlines():
        if not ln or ln.startswith(("Note", "-")) or ln.endswith(":"):
            continue
        for tok in ln.replace("[", " ").replace("]", " ").replace(",", " ").split():
            try:
                vals.append(float(tok))
            except ValueError:
                pass
    return vals
