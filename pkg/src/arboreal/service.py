"""One entry point per command: run it, collect assertions, render files.

Both the HTTP API and the CLI go through `run_verb`, so a command gives the
same bytes whichever front end asked for it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import experiments as ex
from .automorphism import GroupSpec, random_drift_element
from .batch import psi_phi_suite
from .errors import ArborealError
from .haar import (CompactOpenSubgroup, brute_haar, conjugate, conjugated_sequence, folner_defect,
                   folner_set, haar_value, rn_check, tempered_ratio)
from .tree import TreeShape

VERBS = ("equidist", "hedlund", "average", "minimality", "verify", "verify-psi-phi",
         "haar", "folner", "rn-check")


@dataclass
class Outcome:
    verb: str
    ok: bool
    result: dict
    csv: str = None


def _spec(params: dict) -> GroupSpec:
    return GroupSpec.full(TreeShape.parse(params.get("shape", "3,3")))


def _haar(cfg):
    shape = TreeShape.parse(cfg.params.get("shape", "3,3"))
    ks = cfg.params.get("k_values", list(range(-2, 5)))
    rows = []
    for k in ks:
        value = haar_value(k, shape)
        by_portraits = brute_haar(k, shape, "portraits")
        by_orbit = brute_haar(k, shape, "orbit")
        rows.append({"k": k, "haar": str(value), "brute_portraits": str(by_portraits),
                     "brute_orbit": str(by_orbit), "agree": value == by_portraits == by_orbit})
    result = {"header": cfg.header(), "rows": rows,
              "assertions": {"all_agree": all(r["agree"] for r in rows)}}
    return result, ex.table_csv(result, rows, ["k", "haar", "brute_portraits", "brute_orbit", "agree"])


def _folner(cfg):
    shape = TreeShape.parse(cfg.params.get("shape", "3,3"))
    spec = GroupSpec.full(shape)
    ns = cfg.params.get("n_values", [1, 2, 3, 4])
    K = CompactOpenSubgroup.ray(cfg.params.get("K_index", -2))
    F0 = folner_set(0, shape)
    rows = []
    for n in ns:
        d = folner_defect(K, conjugate(F0, n), spec)
        rows.append({"n": n, "defect_num": d.numerator, "defect_den": d.denominator,
                     "defect_float": repr(float(d)), "defect": d})
    seq = conjugated_sequence(F0)
    ratios = [tempered_ratio(seq, n, spec) for n in ns]
    bound = Fraction(cfg.params.get("tempered_bound", "1"))
    defects = [r["defect"] for r in rows]
    assertions = {"defect_nonincreasing": all(b <= a for a, b in zip(defects, defects[1:])),
                  "tempered_bounded": max(ratios) <= bound}
    for r in rows:
        r["defect"] = str(r["defect"])
    result = {"header": cfg.header(), "rows": rows, "tempered_ratios": [str(r) for r in ratios],
              "assertions": assertions}
    return result, ex.table_csv(result, rows, ["n", "defect_num", "defect_den", "defect_float"])


def _rn_check(cfg):
    p = cfg.params
    spec = _spec(p)
    i, radius = p.get("i", 1), p.get("radius", 1)
    reports = []
    for j in range(p.get("epsilon_cases", 1)):
        e = random_drift_element(spec, i, f"{cfg.seed}|{j}")
        reports.append(rn_check(spec, e, i, radius).to_json())
    result = {"header": cfg.header(), "reports": reports,
              "assertions": {"all_exact": all(r["ok"] for r in reports)}}
    return result, None


def _psi_phi(cfg):
    p = cfg.params
    spec = _spec(p)
    i, depth = p.get("i", 1), p.get("depth", 3)
    e = random_drift_element(spec, i, cfg.seed)
    rep = psi_phi_suite(spec, e, i, depth, seed=cfg.seed)
    result = {"header": cfg.header(), **rep.to_json(),
              "assertions": {"zero_failures": rep.ok}}
    return result, None


def _equidist(cfg):
    result = ex.run_equidistribution(cfg)
    return result, ex.distribution_csv(result)


def _hedlund(cfg):
    result = ex.run_hedlund(cfg)
    return result, ex.trajectory_csv(result, cfg.params.get("q", 2))


def _average(cfg):
    result = ex.run_horospherical_average(cfg)
    cols = ["n", "generic", "generic_float", "cusp", "expected", "within_3sigma"]
    return result, ex.table_csv(result, result["rows"], cols)


def _minimality(cfg):
    result = ex.run_boundary_minimality(cfg)
    return result, ex.table_csv(result, result["rows"], ["target", "matched", "height"])


def _verify(cfg):
    return ex.run_algebraic_suite(cfg), None


_HANDLERS = {"equidist": _equidist, "hedlund": _hedlund, "average": _average,
             "minimality": _minimality, "verify": _verify, "verify-psi-phi": _psi_phi,
             "haar": _haar, "folner": _folner, "rn-check": _rn_check}


def run_verb(verb: str, cfg: ex.ExperimentConfig) -> Outcome:
    """Run one command.  Library errors become a failed outcome with the
    error recorded, never a silent skip."""
    if verb not in _HANDLERS:
        raise ValueError(f"unknown command {verb}")
    try:
        result, csv_text = _HANDLERS[verb](cfg)
    except ArborealError as exc:
        result = {"header": cfg.header(), "error": {"type": type(exc).__name__, "message": str(exc)},
                  "assertions": {"completed": False}}
        csv_text = None
    result = ex._jsonable(result)
    ok = all(result.get("assertions", {}).values())
    return Outcome(verb, ok, result, csv_text)
