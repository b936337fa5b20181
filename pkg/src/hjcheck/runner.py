"""Run the checks of an experiment and assemble a JSON-ready report."""

from __future__ import annotations

import datetime
import math
from pathlib import Path
from typing import Callable

import numpy as np

from hjcheck import __version__
from hjcheck.config import Experiment
from hjcheck.errors import DomainError, HJError
from hjcheck.flow import lift_and_compare, write_comparison_csv
from hjcheck.geometry import rank_at, subspace_lagrangian_check
from hjcheck.hj import RELATEDNESS_FACTOR, graph_tangent, hj_verdict, lagrangian_residual_norm
from hjcheck.models.canonical import closed_form_check
from hjcheck.models.extended import forced_section_check, mu_relatedness_defect, tdep_hj_check
from hjcheck.models.nonholonomic import nh_hj_check, nh_section_check

TOOLKIT = "hjcheck"


def clean(value):
    """Recursively turn numpy scalars/arrays into plain JSON values; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def _point_records(check: str, points: np.ndarray, evaluate: Callable[[np.ndarray], dict]) -> list[dict]:
    records = []
    for i, x in enumerate(points):
        rec = {"check": check, "index": i, "point": [float(v) for v in x]}
        try:
            rec.update(evaluate(x))
        except DomainError as exc:
            rec.update({"domain_exit": True, "error": str(exc), "pass": False})
        records.append(rec)
    return records


def lagrangian_records(exp: Experiment) -> list[dict]:
    model, sec, tol = exp.model, exp.section, exp.tolerances

    def evaluate(x):
        residual = lagrangian_residual_norm(model.bivector, sec, x)
        tangent = graph_tangent(sec, x, tol["rank_tol"])
        sub = subspace_lagrangian_check(model.bivector, sec.point(x), tangent)
        ok = residual <= tol["residual_tol"]
        rec = {"residual": residual, "subspace_holds": sub.holds, "subspace_defect": sub.defect,
               "cross_check_agree": ok == sub.holds, "pass": ok}
        if model.family == "canonical":
            rec["closed_form_defect"] = closed_form_check(sec, x)
        elif model.family == "nonholonomic":
            rec["constraint_form_defect"] = nh_section_check(model.detail, exp.one_form, x)
        elif model.family == "forced":
            rec["forced_section_defect"] = forced_section_check(model.detail, sec, x)
        return rec

    return _point_records("lagrangian", exp.grid, evaluate)


def hj_records(exp: Experiment) -> list[dict]:
    model, sec, tol = exp.model, exp.section, exp.tolerances
    related_tol = RELATEDNESS_FACTOR * tol["defect_tol"]

    if model.extended:
        def evaluate(x):
            res = tdep_hj_check(model.detail, sec, x, tol["rank_tol"])
            related = mu_relatedness_defect(model.detail, sec, x)
            hypothesis = res.lagrangian_residual <= tol["residual_tol"]
            hj = res.residual <= tol["defect_tol"]
            rel = related <= related_tol
            rec = {"lagrangian_residual": res.lagrangian_residual, "hj_defect": res.residual,
                   "time_coefficient": res.coefficient, "relatedness_defect": related,
                   "intersection_dim": res.intersection_dim, "hypothesis_ok": hypothesis,
                   "hj_holds": hj, "related_holds": rel,
                   "agree": (hj == rel) if hypothesis else None,
                   "pass": hypothesis and hj and rel}
            if model.family == "forced":
                rec["forced_section_defect"] = forced_section_check(model.detail, sec, x)
            return rec
    else:
        def evaluate(x):
            v = hj_verdict(model.bivector, model.hamiltonian, sec, x, tol["residual_tol"],
                           tol["defect_tol"], tol["rank_tol"])
            rec = v.to_dict()
            del rec["point"]
            if model.family == "nonholonomic":
                rec["energy_defect"] = nh_hj_check(model.detail, exp.one_form, x).defect
            rec["pass"] = v.hypothesis_ok and v.hj_holds and v.related_holds
            return rec

    return _point_records("hj", exp.grid, evaluate)


def rank_records(exp: Experiment) -> list[dict]:
    model, tol = exp.model, exp.tolerances
    if exp.total_grid is not None:
        points, on_section = exp.total_grid, False
    else:
        points, on_section = exp.grid, True

    def evaluate(x):
        z = exp.section.point(x) if on_section else x
        r = rank_at(model.bivector, z, tol["rank_tol"])
        rec = {"rank": r, "dim": model.chart.dim}
        rec["pass"] = exp.expected_rank is None or r == exp.expected_rank
        return rec

    if on_section and exp.section is None:
        raise HJError("rank-scan needs a section or domain.fiber_box")
    return _point_records("rank", points, evaluate)


def flow_records(exp: Experiment, csv_dir: str | Path | None = None) -> list[dict]:
    model, sec, spec, tol = exp.model, exp.section, exp.flow, exp.tolerances
    indices = list(model.detail.layout.mu_indices) if model.extended else None
    rec = {"check": "flow", "index": 0, "point": [float(v) for v in spec["x0"]]}
    try:
        result = lift_and_compare(model.bivector, model.hamiltonian, sec, spec["x0"], spec["t1"],
                                  spec["steps"], spec.get("t0", 0.0), indices)
    except DomainError as exc:
        rec.update({"domain_exit": True, "error": str(exc), "pass": False})
        return [rec]
    ok = result.max_error <= tol["flow_tol"]
    rec.update({"max_error": result.max_error, "exited": result.exited,
                "exit_time": result.exit_time, "steps_compared": int(result.base.times.size - 1)})
    if exp.exact:
        names = model.chart.names
        worst = 0.0
        for name, f in exp.exact.items():
            col = result.upstairs.states[:, names.index(name)]
            expected = np.array([f(float(t)) for t in result.upstairs.times])
            worst = max(worst, float(np.max(np.abs(col - expected))))
        rec["exact_error"] = worst
        ok = ok and worst <= tol["flow_tol"]
    rec["pass"] = ok
    if csv_dir is not None:
        stem = Path(exp.source).stem
        # the time column is "t"; an extended chart's own t coordinate is renamed
        def rename(names):
            return ["t_ext" if n == "t" else n for n in names]

        paths = write_comparison_csv(result, csv_dir, stem, rename(model.chart.base),
                                     rename(model.chart.names))
        rec["csv"] = [p.name for p in paths]
    return [rec]


def run(exp: Experiment, csv_dir: str | Path | None = None) -> dict:
    """Evaluate every requested check; records are sorted by check name, then grid index."""
    records: list[dict] = []
    for check in exp.checks:
        if check == "lagrangian":
            records += lagrangian_records(exp)
        elif check == "hj":
            records += hj_records(exp)
        elif check == "rank":
            records += rank_records(exp)
        elif check == "flow":
            records += flow_records(exp, csv_dir)
    records.sort(key=lambda r: (r["check"], r["index"]))
    return clean({
        "toolkit": TOOLKIT,
        "version": __version__,
        "config": exp.raw,
        "model": {"name": exp.model.name, "family": exp.model.family,
                  "chart": list(exp.model.chart.names)},
        "records": records,
        "summary": summarize(records),
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    })


def summarize(records: list[dict]) -> dict:
    per_check: dict[str, dict] = {}
    for r in records:
        s = per_check.setdefault(r["check"], {"points": 0, "passed": 0, "failed": 0,
                                              "domain_exits": 0})
        s["points"] += 1
        s["passed" if r["pass"] else "failed"] += 1
        s["domain_exits"] += int(bool(r.get("domain_exit")))
        if r["check"] == "hj":
            s.setdefault("hypothesis_violations", 0)
            s.setdefault("disagreements", 0)
            s["hypothesis_violations"] += int(r.get("hypothesis_ok") is False)
            s["disagreements"] += int(r.get("agree") is False)
        if r["check"] == "lagrangian":
            s.setdefault("cross_check_disagreements", 0)
            s["cross_check_disagreements"] += int(r.get("cross_check_agree") is False)
        if r["check"] == "rank" and "rank" in r:
            s["min_rank"] = min(s.get("min_rank", r["rank"]), r["rank"])
            s["max_rank"] = max(s.get("max_rank", r["rank"]), r["rank"])
        if r["check"] == "flow" and "max_error" in r:
            s["max_error"] = r["max_error"]
    for s in per_check.values():
        if "min_rank" in s:
            s["constant_rank"] = s["min_rank"] == s["max_rank"]
    return {"passed": all(r["pass"] for r in records), "checks": per_check}
