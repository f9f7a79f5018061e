"""CSV and JSON writers for trajectories, pole tables and reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

FMT = "{:.16e}"


def _f(x) -> str:
    return FMT.format(float(x))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_f(x) if isinstance(x, (float, np.floating)) else x for x in row])


def trajectory_rows(propagator, state=None):
    """Header and rows: ``t``, ``re/im U_ab`` for all ``a, b``, survival."""
    n = propagator.n
    header = ["t"]
    for a in range(n):
        for b in range(n):
            header += [f"re_U{a + 1}{b + 1}", f"im_U{a + 1}{b + 1}"]
    header.append("survival_probability")
    c = np.eye(n)[0] if state is None else state
    surv = propagator.survival(c)
    rows = []
    for k, t in enumerate(propagator.t_grid):
        u = propagator.values[k]
        row = [float(t)]
        for a in range(n):
            for b in range(n):
                row += [float(u[a, b].real), float(u[a, b].imag)]
        row.append(float(surv[k]))
        rows.append(row)
    return header, rows


def write_trajectory(path, propagator, state=None) -> None:
    write_csv(path, *trajectory_rows(propagator, state))


POLE_COLUMNS = ["re_z", "im_z", "branch", "newton_residual", "trace_Q_re", "trace_Q_im"]


def write_poles(path, poles) -> None:
    rows = []
    for p in poles:
        tr = np.trace(p.projector)
        rows.append([float(p.z_pole.real), float(p.z_pole.imag), p.branch,
                     float(p.newton_residual), float(tr.real), float(tr.imag)])
    write_csv(path, POLE_COLUMNS, rows)


def _default(o):
    if isinstance(o, np.ndarray):
        if np.iscomplexobj(o):
            return {"re": o.real.tolist(), "im": o.imag.tolist()}
        return o.tolist()
    if isinstance(o, (complex, np.complexfloating)):
        return {"re": float(o.real), "im": float(o.imag)}
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, default=_default, indent=2, sort_keys=True) + "\n")
