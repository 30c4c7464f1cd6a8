"""CSV tables laid out like the convergence and regularity tables of the study."""
from __future__ import annotations

import csv
import io
from collections.abc import Sequence

from .analysis import ErrorReport, eoc
from .regularity import RegularityReport

ERROR_NORMS = {
    "central": ("L2_Omega", "L2_Gamma", "Vh", "Vh_Gamma"),
    "upwind": ("L2_Omega", "L2_Gamma", "Vh_Omega"),
    "splitting": ("L2_Omega", "L2_Gamma", "Vh_Omega"),
}
REGULARITY_COLUMNS = ("h", "reg_mesh", "reg_mesh_omega", "reg_mesh_gamma", "varrho")


def _num(x) -> str:
    return "" if x is None else f"{x:.6e}"


def _rate(x) -> str:
    return "" if x is None else f"{x:.3f}"


def error_header(scheme: str) -> list[str]:
    out = ["h"]
    for norm in ERROR_NORMS[scheme]:
        out += [norm.replace("_", "") if norm.startswith("Vh") else norm, "EOC"]
    return out


def error_table(scheme: str, rows: Sequence[ErrorReport | tuple[float, str]]) -> str:
    """One line per level.

    A level that failed is passed as ``(h, message)`` and becomes a
    diagnostic line; rates are only computed between consecutive solved
    levels.
    """
    norms = ERROR_NORMS[scheme]
    rates = {}
    for norm in norms:
        seq = [None]
        for a, b in zip(rows, rows[1:]):
            if isinstance(a, ErrorReport) and isinstance(b, ErrorReport):
                seq.append(eoc([a, b], norm)[1])
            else:
                seq.append(None)
        rates[norm] = seq
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(error_header(scheme))
    for i, r in enumerate(rows):
        if isinstance(r, ErrorReport):
            line = [_num(r.h)]
            for norm in norms:
                line += [_num(r.value(norm)), _rate(rates[norm][i])]
        else:
            h, message = r
            line = [_num(h), message] + [""] * (2 * len(norms) - 1)
        w.writerow(line)
    return buf.getvalue()


def regularity_table(reports: Sequence[RegularityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REGULARITY_COLUMNS)
    for r in reports:
        row = r.row()
        w.writerow([f"{row[k]:.6e}" for k in REGULARITY_COLUMNS])
    return buf.getvalue()


def status_table(rows: Sequence[dict]) -> str:
    cols = ("level", "dims", "h", "status", "iterations", "residual", "message")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in cols})
    return buf.getvalue()


def mesh_stats_table(stats: Sequence[dict]) -> str:
    if not stats:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(stats[0]), lineterminator="\n")
    w.writeheader()
    for s in stats:
        w.writerow({k: (f"{v:.6e}" if isinstance(v, float) else v) for k, v in s.items()})
    return buf.getvalue()


def read_table(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))
