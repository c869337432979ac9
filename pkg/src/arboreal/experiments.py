"""Batch drivers with reproducible CSV/JSON output.

Every driver takes an ExperimentConfig.  It draws randomness only from
streams derived from the config seed, so equal configs give byte-identical
files.  Empirical distributions are kept as exact integer counts.  Total
variation distances are exact Fractions, and floats appear only in the
human-readable columns.

Observables factor through the quotient position p_v(g Gamma) = p(g^{-1} v).
For the cusp point x = Gamma and u in the horospherical group, the
translate a^i u x has position p(u^{-1} a^{-i} base).
"""
from __future__ import annotations

import csv
import io
import json
import math
import random
from itertools import islice, product
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import perms
from .automorphism import (Composite, GroupSpec, RandomElement, power, random_drift_element,
                           random_element, standard_a)
from .errors import ArborealError, HeightExhausted, LevelOverflow
from .extension import (an_decompose, bruhat_decompose, levi_decompose, stabilizer_factor,
                        verify_bruhat, verify_levi, verify_stabilizer_factor)
from .haar import (Check, CompactOpenSubgroup, brute_haar, conjugate, folner_defect, folner_set,
                   haar_value, rn_check)
from .sl2 import (GammaElem, LatticeVertex, LaurentTrunc, Matrix2, Poly, Series, act, classify_end,
                  end_ray, horospherical_sample, iter_convergents, iter_partials, make_series,
                  point_matrix, quotient_position_fast, rational_series, ray_weights)
from .tree import TreeShape, ball, x

SCHEMA_VERSION = "arboreal-output v1"


@dataclass
class ExperimentConfig:
    name: str
    params: dict = field(default_factory=dict)
    samples: int = 100_000
    seed: int = 0
    out: str = None

    def stream(self, *tag) -> random.Random:
        """Independent generator for a named sub-stream of this run."""
        return random.Random("|".join([self.name, str(self.seed)] + [str(t) for t in tag]))

    def header(self) -> dict:
        return {"config": {"name": self.name, "params": self.params, "samples": self.samples,
                           "seed": self.seed},
                "schema": SCHEMA_VERSION, "orders": perms.ORDERS_VERSION}

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        return cls(**data)


def _shape(cfg) -> TreeShape:
    return TreeShape.parse(cfg.params.get("shape", "3,3"))


def _spec(cfg) -> GroupSpec:
    return GroupSpec.full(_shape(cfg))


def parity_weights(q: int, parity: int, window: int = 200) -> dict:
    """Quotient masses restricted to one vertex type and renormalized.

    SL_2 preserves types, so p_v only sees positions of the parity of v.
    The geometric tail is summed in closed form."""
    w = ray_weights(q, window)
    raw = {n: Fraction(1, o) for n, o in w.vertex_group_orders.items() if n % 2 == parity}
    # exact sum over the whole class: positions >= 1 contribute 1/((q-1) q^{n+1})
    if parity == 0:
        total = Fraction(1, w.vertex_group_orders[0]) + Fraction(1, (q - 1) * q ** 3) / (1 - Fraction(1, q * q))
    else:
        total = Fraction(1, (q - 1) * q ** 2) / (1 - Fraction(1, q * q))
    return {n: m / total for n, m in raw.items()}


@dataclass
class DistributionReport:
    index: int
    samples: int
    counts: dict
    expected: dict
    tv: Fraction
    sigma: float
    note: str = ""

    @property
    def support(self) -> list:
        return sorted(self.counts)

    def masses(self) -> dict:
        """Empirical masses; they sum to exactly 1."""
        return {k: Fraction(v, self.samples) for k, v in sorted(self.counts.items())}

    def to_json(self) -> dict:
        top = max(self.counts)
        return {"i": self.index, "samples": self.samples,
                "counts": {str(k): v for k, v in sorted(self.counts.items())},
                "empirical": {str(k): str(m) for k, m in self.masses().items()},
                "expected": {str(k): str(m) for k, m in sorted(self.expected.items()) if k <= top},
                "tv": str(self.tv), "tv_float": float(self.tv), "sigma": self.sigma,
                "note": self.note}


def total_variation(counts: dict, total: int, expected: dict) -> Fraction:
    keys = set(counts) | set(expected)
    mass = sum(expected.values())
    tv = sum(abs(Fraction(counts.get(k, 0), total) - expected.get(k, 0)) for k in keys)
    return (tv + (1 - mass)) / 2


def tv_sigma(expected: dict, total: int) -> float:
    """Upper bound for the standard deviation of the empirical TV."""
    return 0.5 * sum(math.sqrt(float(p) * (1 - float(p)) / total) for p in expected.values())


def cusp_translate_position(q: int, i: int, rng: random.Random) -> int:
    """p(u a^{-i} base) for u Haar-random in the horospherical stabilizer of base."""
    prec = 2 * abs(i) + 4
    u = horospherical_sample(q, 0, prec, rng)
    v = act(u, LatticeVertex(q, 2 * i, ()))
    return quotient_position_fast(v)


def run_equidistribution(cfg: ExperimentConfig) -> dict:
    q = cfg.params.get("q", 2)
    i_values = cfg.params.get("i_values", list(range(0, 9)))
    expected = parity_weights(q, 0)
    reports = []
    for i in i_values:
        rng = cfg.stream("equidist", i)
        counts = {}
        for _ in range(cfg.samples):
            p = cusp_translate_position(q, i, rng)
            counts[p] = counts.get(p, 0) + 1
        tv = total_variation(counts, cfg.samples, expected)
        reports.append(DistributionReport(i, cfg.samples, counts, expected, tv,
                                          tv_sigma(expected, cfg.samples),
                                          "expected masses: quotient weights on even positions"))
    trend = monotone_majority([r for r in reports if r.index >= cfg.params.get("trend_from", 2)])
    threshold = cfg.params.get("tv_threshold", 0.10)
    exact = {i: exact_tv(q, i) for i in i_values}
    assertions = {"tv_last_below_threshold": float(reports[-1].tv) < threshold,
                  "trend": trend["passed"]}
    return {"header": cfg.header(), "assertions": assertions, "reports": reports,
            "trend": trend, "exact_tv": exact}


def exact_tv(q: int, i: int) -> Fraction:
    """TV between the exact law of p(u a^{-i} base) and the even-type weights.

    The vertex a^{-i} base = (2i, 0) is moved to (2i, w) with w uniform mod
    pi^{2i}; its position is read off from the reduction of every w."""
    counts = {}
    for w in product(range(q), repeat=2 * i):
        p = quotient_position_fast(LatticeVertex.make(q, 2 * i, dict(enumerate(w))))
        counts[p] = counts.get(p, 0) + 1
    return total_variation(counts, q ** (2 * i), parity_weights(q, 0))


def monotone_majority(reports: list) -> dict:
    """Decreasing-trend test calibrated by the 3 sigma TV noise bound.

    A step passes when TV does not rise by more than 3 sigma.  The test passes
    when a strict majority of steps pass and the last TV lies more than
    3 sigma below the first."""
    steps = []
    for a, b in zip(reports, reports[1:]):
        tol = 3 * (a.sigma + b.sigma)
        steps.append(float(b.tv) <= float(a.tv) + tol)
    first, last = reports[0], reports[-1]
    drop = float(first.tv) - float(last.tv) > 3 * (first.sigma + last.sigma)
    ok = sum(steps) * 2 > len(steps) and drop
    return {"steps": steps, "overall_drop": drop, "passed": ok}


def series_position(q: int, s: Series, u: Matrix2, observer: LatticeVertex = None) -> int:
    """Quotient position of g^{-1} u v, where g^{-1} sends the cusp to s.

    The observer vertex v defaults to the base vertex."""
    v = observer or LatticeVertex.base(q)
    return quotient_position_fast(act(point_matrix(q, s) @ u, v))


def trajectory(q: int, value: LaurentTrunc, steps: int) -> list:
    """Positions of a^{-n} x for n = 1..steps, i.e. p(g^{-1} a^n base)."""
    g_inv = point_matrix(q, value)
    return [quotient_position_fast(act(g_inv @ Matrix2.diag_t(q, n), LatticeVertex.base(q)))
            for n in range(1, steps + 1)]


def drifts_to_infinity(positions: list, tail: int = 6) -> bool:
    """Last `tail` positions strictly increasing by the translation length 2."""
    end = positions[-tail:]
    return len(end) == tail and all(b - a == 2 for a, b in zip(end, end[1:]))


def orbit_coverage(q, s, cfg, m_scale, prec, cover, observer, tag, samples=None) -> dict:
    rng = cfg.stream("hedlund", tag)
    seen, first_full = {}, None
    for k in range(samples or cfg.samples):
        u = horospherical_sample(q, m_scale, prec, rng)
        p = series_position(q, s, u, observer)
        seen[p] = seen.get(p, 0) + 1
        if first_full is None and all(j in seen for j in range(cover + 1)):
            first_full = k + 1
    return {"counts": seen, "covered": first_full is not None, "samples_to_cover": first_full,
            "missing": [j for j in range(cover + 1) if j not in seen]}


def run_hedlund(cfg: ExperimentConfig) -> dict:
    """Compact versus dense orbit proxies through the vertex-level map p_v.

    Sampled elements of the horospherical group preserve vertex types, so
    p_v only takes values of the parity of v.  Besides the literal coverage
    of {0..cover}, the report carries the coverage seen from an observer of
    the other type."""
    q = cfg.params.get("q", 2)
    prec = cfg.params.get("precision_N", 32)
    m_scale = cfg.params.get("m_scale", 12)
    cover = cfg.params.get("cover", 5)
    tag = cfg.params.get("series", "random:7")
    rng = cfg.stream("hedlund", "cusp")
    cusp_positions = {}
    for _ in range(cfg.samples):
        u = horospherical_sample(q, m_scale, prec, rng)
        p = quotient_position_fast(act(u, LatticeVertex.base(q)))
        cusp_positions[p] = cusp_positions.get(p, 0) + 1
    s = make_series(q, tag, prec)
    cls = classify_end(s)
    literal = orbit_coverage(q, s, cfg, m_scale, prec, cover, None, "series")
    other = orbit_coverage(q, s, cfg, m_scale, prec, cover, LatticeVertex(q, 1, ()), "series-odd",
                           min(cfg.samples, cfg.params.get("diagnostic_samples", 20_000)))
    reachable = [j for j in range(cover + 1) if j % 2 == 0]
    window = cfg.params.get("return_window", 4)
    steps = cfg.params.get("trajectory_steps", prec // 2 - 1)
    path = trajectory(q, s.value, steps)
    # a rational end passed off as a series drifts to infinity under a^{-n}
    mislabel = rational_series(Poly(q, (1,)), Poly(q, (1, 1)), prec)
    mis_path = trajectory(q, mislabel, steps)
    mis_class = classify_end(Series(mislabel, "rational 1/(t+1)"))
    returns = sum(1 for p in path if p <= window)
    assertions = {
        "cusp_single_fiber": len(cusp_positions) == 1,
        "series_covers_0_to_m": literal["covered"],
        "series_returns_to_window": returns >= 2,
        "mislabel_detected": drifts_to_infinity(mis_path),
    }
    return {"header": cfg.header(), "assertions": assertions,
            "cusp": {"counts": cusp_positions},
            "series": {"tag": tag, "class": asdict(cls), "observer_base": literal,
                       "reachable_positions": reachable,
                       "reachable_covered": all(j in literal["counts"] for j in reachable),
                       "observer_odd": other,
                       "trajectory": path, "returns_to_window": returns},
            "mislabel": {"class": asdict(mis_class), "trajectory": mis_path}}


def run_horospherical_average(cfg: ExperimentConfig) -> dict:
    q = cfg.params.get("q", 2)
    prec = cfg.params.get("precision_N", 32)
    window = set(cfg.params.get("window", [0, 1, 2]))
    tag = cfg.params.get("series", "random:7")
    n_max = cfg.params.get("n_max", 6)
    s = make_series(q, tag, prec)
    expected = sum(m for n, m in parity_weights(q, 0).items() if n in window)
    rows = []
    for n in range(0, n_max + 1):
        rng = cfg.stream("average", n)
        hits_generic = hits_cusp = 0
        for _ in range(cfg.samples):
            u = horospherical_sample(q, 2 * n, prec, rng)
            hits_generic += series_position(q, s, u) in window
            hits_cusp += quotient_position_fast(act(u, LatticeVertex.base(q))) in window
        est = Fraction(hits_generic, cfg.samples)
        sigma = math.sqrt(float(expected) * (1 - float(expected)) / cfg.samples)
        rows.append({"n": n, "generic": str(est), "generic_float": float(est),
                     "cusp": str(Fraction(hits_cusp, cfg.samples)),
                     "expected": str(expected), "within_3sigma": abs(float(est - expected)) <= 3 * sigma})
    return {"header": cfg.header(), "rows": rows,
            "assertions": {"converges_within_3sigma": rows[-1]["within_3sigma"]},
            "note": "compact cusp orbits exist, so only generic points are expected to converge"}


def random_target(q: int, rng: random.Random, prec: int):
    """Random boundary point: a series of random valuation, or the cusp."""
    if rng.random() < 0.05:
        return "infinity"
    val = rng.randrange(-3, 4)
    coeffs = {val: rng.randrange(1, q)}
    coeffs.update({e: rng.randrange(q) for e in range(val + 1, prec)})
    return LaurentTrunc(q, coeffs, prec)


def find_cusp_translate(q: int, target, depth: int, max_steps: int = 64):
    """gamma in SL_2(F_q[t]) whose cusp image p_k/q_k agrees with the target ray to depth.

    Columns (p_k, q_k) and (p_{k-1}, q_{k-1}) of consecutive convergents have
    determinant (-1)^{k+1}; negating the second column fixes the sign."""
    if target == "infinity":
        return GammaElem.identity(q), 0
    want = end_ray(q, target, depth)
    prev = (Poly.const(q, 1), Poly(q))
    for k, (p, den) in enumerate(islice(iter_convergents(iter_partials(target)), max_steps)):
        image = rational_series(p, den, depth + 2 * den.degree + 8)
        if end_ray(q, image, depth) == want:
            b, d = prev
            if k % 2 == 0:
                b, d = -b, -d
            gamma = GammaElem(p, b, den, d)
            return gamma, gamma.height
        prev = (p, den)
    raise HeightExhausted("no convergent matched the target prefix", best=None)


def cusp_image(gamma: GammaElem, prec: int):
    """gamma applied to the cusp: a/c, or the cusp itself when c = 0."""
    if gamma.c.is_zero():
        return "infinity"
    return rational_series(gamma.a, gamma.c, prec + 2 * gamma.c.degree + 8)


def run_boundary_minimality(cfg: ExperimentConfig) -> dict:
    q = cfg.params.get("q", 2)
    depth = cfg.params.get("depth", 8)
    targets = cfg.params.get("targets", 20)
    prec = cfg.params.get("precision_N", 48)
    rng = cfg.stream("minimality")
    rows, failures = [], 0
    for j in range(targets):
        target = random_target(q, rng, prec)
        try:
            gamma, height = find_cusp_translate(q, target, depth)
            ok = end_ray(q, cusp_image(gamma, depth), depth) == end_ray(q, target, depth)
        except ArborealError:
            ok, height = False, None
        failures += not ok
        rows.append({"target": j, "matched": ok, "height": height})
    return {"header": cfg.header(), "rows": rows, "failures": failures,
            "assertions": {"all_targets_matched": failures == 0}}


# --------------------------------------------------------- algebraic suite

def random_horospherical(spec: GroupSpec, seed, k: int):
    sub = CompactOpenSubgroup.ray(k)
    return RandomElement(spec, seed, x(k), x(k), fixed=lambda v: sub.fixed_colors(v, spec.shape))


def random_segment_stabilizer(spec: GroupSpec, seed, k: int):
    lo, hi = -2 * k, 2 * k

    def fixed(v):
        if not v.on_line or not lo <= v.anchor <= hi:
            return ()
        out = []
        if v.anchor < hi:
            out.append(1)
        if v.anchor > lo:
            out.append(2)
        return tuple(out)

    return RandomElement(spec, seed, x(0), x(0), fixed=fixed)


def decomposition_fuzz(spec: GroupSpec, op: str, cases: int, seed=0, depth: int = None) -> Check:
    """Recompose-and-compare over random inputs; failures carry a witness."""
    check = Check(f"{op}_fuzz")
    for j in range(cases):
        rng = random.Random(f"fuzz|{op}|{seed}|{j}")
        s = rng.getrandbits(48)
        try:
            if op == "bruhat":
                d = depth or 5
                g = random_element(spec, s)
                problems = verify_bruhat(spec, g, bruhat_decompose(spec, g, d), d)
            elif op == "an":
                d = depth or 5
                n = rng.randrange(-3, 4)
                u = random_horospherical(spec, s, rng.randrange(-2, 4))
                h = Composite(power(standard_a(spec), n), u)
                res = an_decompose(spec, h, d)
                problems = []
                if res.n != n:
                    problems.append(f"exponent {res.n} != {n}")
                for p in ball(x(0), d, spec.shape):
                    if power(standard_a(spec), res.n)(res.u(p)) != h(p):
                        problems.append(f"recomposition differs at {p}")
                        break
                if any(res.u(x(m)) != x(m) for m in (d + 40, d + 41)):
                    problems.append("u does not fix xi")
            elif op == "levi":
                d = depth or 5
                u = random_horospherical(spec, s, rng.randrange(-2, 4))
                problems = verify_levi(spec, u, levi_decompose(spec, u, d), d)
            elif op == "stabilizer_factor":
                d = depth or 4
                w = random_segment_stabilizer(spec, s, 1)
                problems = verify_stabilizer_factor(spec, w, stabilizer_factor(spec, w, 1, d), d)
            else:
                raise ValueError(op)
        except ArborealError as exc:
            problems = [f"{type(exc).__name__}: {exc}"]
        check.record(not problems, f"case {j}: {problems[:1]}")
    return check


def run_algebraic_suite(cfg: ExperimentConfig) -> dict:
    """Every exact check, with optional fault injection ('corrupt_t')."""
    from .batch import psi_phi_suite
    from .automorphism import Identity
    shapes = cfg.params.get("shapes", ["3,3", "3,4"])
    depth = cfg.params.get("depth", 2)
    fuzz_cases = cfg.params.get("fuzz_cases", 50)
    eps_cases = cfg.params.get("epsilon_cases", 3)
    faults = set(cfg.params.get("faults", []))
    checks = []
    for sh in shapes:
        shape = TreeShape.parse(sh)
        spec = GroupSpec.full(shape)
        hv = Check(f"{sh}:haar")
        for k in range(-2, 5):
            hv.record(haar_value(k, shape) == brute_haar(k, shape) == brute_haar(k, shape, "orbit"), k)
        checks.append(hv)
        for i in (1, 2):
            for r in (1, 2):
                rn = Check(f"{sh}:rn_check i={i} r={r}")
                for j in range(eps_cases):
                    e = random_drift_element(spec, i, f"{cfg.seed}|{j}")
                    t = Identity(shape) if "corrupt_t" in faults else None
                    try:
                        rep = rn_check(spec, e, i, r, t=t)
                        bad = [c for c in rep.checks if c.failures] if not rep.ok else []
                        rn.record(rep.ok, bad[0].witness if bad else rep.to_json())
                    except LevelOverflow as exc:
                        rn.record(False, f"LevelOverflow: {exc}")
                checks.append(rn)
            e = random_drift_element(spec, i, f"{cfg.seed}|suite")
            try:
                t = Identity(shape) if "corrupt_t" in faults else None
                rep = psi_phi_suite(spec, e, i, depth, seed=cfg.seed, t=t)
                for c in rep.checks:
                    c.name = f"{sh}:psi_phi i={i}:{c.name}"
                    checks.append(c)
            except LevelOverflow as exc:
                c = Check(f"{sh}:psi_phi i={i}")
                c.record(False, f"LevelOverflow: {exc}")
                checks.append(c)
        for op in ("bruhat", "an", "levi", "stabilizer_factor"):
            c = decomposition_fuzz(spec, op, fuzz_cases, cfg.seed)
            c.name = f"{sh}:{c.name}"
            checks.append(c)
        K = CompactOpenSubgroup.ray(-2)
        F0 = folner_set(0, shape)
        fd = Check(f"{sh}:folner_defect_nonincreasing")
        defects = [folner_defect(K, conjugate(F0, n), spec) for n in range(1, 5)]
        fd.record(all(b <= a for a, b in zip(defects, defects[1:])), [str(d) for d in defects])
        checks.append(fd)
    ok = all(c.failures == 0 for c in checks)
    return {"header": cfg.header(), "ok": ok, "checks": checks,
            "assertions": {"all_checks_pass": ok}}


# ------------------------------------------------------------------ output

def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (Check, DistributionReport)):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def to_json_text(result: dict) -> str:
    return json.dumps(_jsonable(result), sort_keys=True, indent=2) + "\n"


def _csv_writer():
    buf = io.StringIO()
    return buf, csv.writer(buf, lineterminator="\n")


def _header_line(result: dict) -> str:
    return "# " + json.dumps(_jsonable(result["header"]), sort_keys=True) + "\n"


def distribution_csv(result: dict) -> str:
    """Orbit-trace schema, one row per (i, position): step, position,
    weight_expected, weight_empirical (exact fractions)."""
    buf, w = _csv_writer()
    buf.write(_header_line(result))
    w.writerow(["step", "position", "weight_expected", "weight_empirical"])
    for rep in result["reports"]:
        top = max(rep.counts)
        for pos in sorted(set(rep.counts) | {p for p in rep.expected if p <= top}):
            w.writerow([rep.index, pos, str(rep.expected.get(pos, 0)),
                        str(Fraction(rep.counts.get(pos, 0), rep.samples))])
    return buf.getvalue()


def trajectory_csv(result: dict, q: int = 2) -> str:
    """Orbit-trace schema for the a^{-n} trajectory; weight_empirical is the
    running fraction of steps spent at the current position."""
    buf, w = _csv_writer()
    buf.write(_header_line(result))
    w.writerow(["step", "position", "weight_expected", "weight_empirical"])
    weights = parity_weights(q, 0)
    seen = {}
    for n, pos in enumerate(result["series"]["trajectory"], start=1):
        seen[pos] = seen.get(pos, 0) + 1
        w.writerow([n, pos, str(weights.get(pos, 0)), str(Fraction(seen[pos], n))])
    return buf.getvalue()


def table_csv(result: dict, rows: list, columns: list) -> str:
    buf, w = _csv_writer()
    buf.write(_header_line(result))
    w.writerow(columns)
    for row in rows:
        w.writerow([row[c] for c in columns])
    return buf.getvalue()


def defect_csv(shape: TreeShape, n_values, K=None) -> str:
    """Rows: n, defect_num, defect_den, defect_float."""
    spec = GroupSpec.full(shape)
    K = K or CompactOpenSubgroup.ray(-2)
    F0 = folner_set(0, shape)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "defect_num", "defect_den", "defect_float"])
    for n in n_values:
        d = folner_defect(K, conjugate(F0, n), spec)
        w.writerow([n, d.numerator, d.denominator, repr(float(d))])
    return buf.getvalue()


def write_outputs(result: dict, out_dir, stem: str, csv_text: str = None) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.json"]
    paths[0].write_text(to_json_text(result))
    if csv_text is not None:
        p = out / f"{stem}.csv"
        p.write_text(csv_text)
        paths.append(p)
    return paths
