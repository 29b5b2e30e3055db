"""Command-line entry point: ``rittlab {build,analyze,battery,selftest}``.

Configs are TOML.  A measure is declared either as ``[measure]`` or as named
tables ``[measures.<name>]``; ``[[combinator]]`` entries derive new measures
from earlier ones; ``target`` names the measure analyses default to;
``[grid]`` overrides the default theta grid; ``[[analysis]]`` lists the
analyses.  See the README for the full schema.

Exit codes: 0 success, 1 failed self-test, 2 invalid config or unreachable
tail target, 3 a growing/failing verdict under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import families as fam
from . import lattice as lat
from . import maximal as mx
from . import monotone_char as mc
from . import spectral as sp

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

EXIT_OK, EXIT_SELFTEST, EXIT_INVALID, EXIT_STRICT = 0, 1, 2, 3
FAILING = {"growing", "fail", "diverges"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# measures


@dataclass
class Entry:
    """A built measure together with whatever closed forms it carries."""

    name: str
    mu: lat.LatticeMeasure
    nu: fam.RepresentativeMeasure | None
    spectral: Callable[[sp.ThetaGrid], sp.SpectralSamples]
    psi: Callable[[sp.ThetaGrid], sp.PsiSamples]
    recipe: dict

    def summary(self) -> dict:
        return {
            "offset": self.mu.offset,
            "size": self.mu.size,
            "mass": self.mu.mass,
            "tail_bound": self.mu.tail_bound,
            "nu_atoms": None if self.nu is None else self.nu.size,
            "family": self.nu.family if self.nu is not None else self.mu.meta.get("family"),
            "recipe": self.recipe,
        }


def _need(spec: dict, key: str, where: str) -> Any:
    if key not in spec:
        raise ConfigError(f"{where}: missing key {key!r}")
    return spec[key]


def _nu_from_spec(spec: dict, family: str, where: str) -> fam.RepresentativeMeasure:
    if "nodes" in spec:
        return fam.normalize_nu(spec["nodes"], family)
    if "density" in spec:
        d = spec["density"]
        kind = _need(d, "kind", where + ".density")
        if kind == "power":
            dens = fam.power_density(float(_need(d, "beta", where + ".density")))
        elif kind == "gamma":
            dens = fam.gamma_density(float(_need(d, "gamma", where + ".density")))
        else:
            raise ConfigError(f"{where}.density: unknown kind {kind!r}")
        return fam.discretize_density(dens, family, int(d.get("j_max", 48)), int(d.get("j_zero", 30)), int(d.get("order", 8)))
    raise ConfigError(f"{where}: need 'nodes' or 'density'")


def _coeff_entry(name: str, mu: lat.LatticeMeasure, recipe: dict) -> Entry:
    return Entry(
        name, mu, None,
        lambda g: sp.fourier_from_coeffs(mu, g),
        lambda g: sp.psi_eval("quadratic", None, g),
        recipe,
    )


def build_entry(name: str, spec: dict) -> Entry:
    where = f"measure {name!r}"
    family = _need(spec, "family", where)
    trim = spec.get("trim")
    if family in fam.FAMILIES:
        nu = _nu_from_spec(spec, family, where)
        mu = fam.build_from_nu(nu, int(_need(spec, "n_max", where)), trim)
        return Entry(name, mu, nu, lambda g: sp.fourier_from_nu(nu, g), lambda g: sp.psi_eval(family, nu, g), spec)
    if family == "gamma":
        gamma = float(_need(spec, "gamma", where))
        mu = fam.build_gamma(gamma, int(_need(spec, "n_max", where)))
        nu = fam.discretize_density(fam.gamma_density(gamma), "cm")
        return Entry(name, mu, nu, lambda g: sp.fourier_gamma(gamma, g), lambda g: sp.psi_eval("cm", nu, g), spec)
    if family in ("cm_function", "centered_cm_function"):
        cm_spec = fam.CMFunctionSpec(float(_need(spec, "alpha", where)), tuple(float(a) for a in spec.get("alphas", ())))
        n_max = int(_need(spec, "n_max", where))
        if family == "cm_function":
            mu = fam.build_from_cm_function(cm_spec, n_max, trim)
        else:
            mu = fam.build_centered_cm_function(cm_spec, n_max, int(spec.get("atom_at", -1)), trim)
        return _coeff_entry(name, mu, spec)
    if family == "coeffs":
        mu = lat.from_coeffs(int(spec.get("offset", 0)), _need(spec, "coeffs", where), float(spec.get("tail_bound", 0.0)))
        return _coeff_entry(name, mu, spec)
    if family == "delta":
        return _coeff_entry(name, lat.delta(int(spec.get("at", 0))), spec)
    raise ConfigError(f"{where}: unknown family {family!r}")


def combine_entry(spec: dict, env: dict[str, Entry]) -> Entry:
    where = "combinator"
    name = _need(spec, "name", where)
    op = _need(spec, "op", where)
    args = _need(spec, "args", where)
    try:
        parts = [env[a] for a in args]
    except KeyError as exc:
        raise ConfigError(f"combinator {name!r}: unknown measure {exc.args[0]!r}") from None
    trim = float(spec.get("trim", 0.0))
    if op == "mixture":
        if len(parts) != 2:
            raise ConfigError(f"combinator {name!r}: mixture takes two measures")
        alpha = float(_need(spec, "alpha", where))
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"combinator {name!r}: mixture weight must lie in [0, 1]")
        a, b = parts
        mu = lat.mixture(alpha, a.mu, b.mu)
        nu = None
        if a.nu is not None and b.nu is not None and a.nu.family == b.nu.family:
            t = np.concatenate([a.nu.t, b.nu.t])
            w = np.concatenate([alpha * a.nu.w, (1 - alpha) * b.nu.w])
            nu = fam.normalize_nu(np.column_stack([t, w]), a.nu.family)
        return Entry(
            name, mu, nu,
            lambda g: sp.mixture_samples(alpha, a.spectral(g), b.spectral(g)),
            lambda g: sp.psi_combine([alpha, 1 - alpha], [a.psi(g), b.psi(g)]),
            spec,
        )
    if op == "convolve":
        if len(parts) != 2:
            raise ConfigError(f"combinator {name!r}: convolution takes two measures")
        a, b = parts
        mu = lat.convolve(a.mu, b.mu, trim)
        return Entry(
            name, mu, None,
            lambda g: sp.product_samples(a.spectral(g), b.spectral(g)),
            lambda g: sp.psi_combine([1.0, 1.0], [a.psi(g), b.psi(g)]),
            spec,
        )
    if op == "reverse":
        if len(parts) != 1:
            raise ConfigError(f"combinator {name!r}: reverse takes one measure")
        (a,) = parts
        return Entry(name, lat.reverse(a.mu), None, lambda g: a.spectral(g).conj(), a.psi, spec)
    raise ConfigError(f"combinator {name!r}: unknown op {op!r}")


def build_all(cfg: dict) -> tuple[dict[str, Entry], str | None]:
    specs: dict[str, dict] = {}
    if "measure" in cfg:
        specs["main"] = cfg["measure"]
    for name, spec in cfg.get("measures", {}).items():
        if name in specs:
            raise ConfigError(f"duplicate measure name {name!r}")
        specs[name] = spec
    env = {name: build_entry(name, spec) for name, spec in specs.items()}
    for spec in cfg.get("combinator", []):
        entry = combine_entry(spec, env)
        if entry.name in env:
            raise ConfigError(f"duplicate measure name {entry.name!r}")
        env[entry.name] = entry
    target = cfg.get("target")
    if target is None and env:
        target = list(env)[-1]
    if target is not None and target not in env:
        raise ConfigError(f"unknown target {target!r}")
    return env, target


def make_grid(cfg: dict) -> sp.ThetaGrid:
    g = cfg.get("grid", {})
    return sp.default_grid(
        float(g.get("theta_min", 1e-8)), float(g.get("theta_split", 0.1)),
        float(g.get("ratio", 2.0**0.125)), int(g.get("uniform", 2048)),
    )


# ---------------------------------------------------------------------------
# analyses


@dataclass
class Result:
    payload: dict
    series: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]


def _slope_verdict(slope: float) -> str:
    return "bounded" if slope <= lat.BOUNDED_SLOPE else "growing"


FIT_TAG = "fit-based: log-log slope <= 0.1 over the upper half of the scale"
GRID_TAG = "grid-restricted: small-theta trend over the 10 smallest grid points"


def _an_moments(e: Entry, a: dict, ctx: dict) -> Result:
    m = lat.moments(e.mu, 2)
    return Result({"mass": m.mass, "mean": m.mean, "second_moment": m.second_moment, "truncated": m.truncated}, {})


def _an_aperiodic(e: Entry, a: dict, ctx: dict) -> Result:
    ok = lat.is_strictly_aperiodic(e.mu)
    return Result({"strictly_aperiodic": ok, "verdict": "pass" if ok else "fail"}, {})


def _an_ritt(e: Entry, a: dict, ctx: dict) -> Result:
    ms = a.get("m", 1)
    ms = ms if isinstance(ms, list) else [ms]
    n_max = int(a.get("n_max", 2000))
    trim = float(a.get("trim", lat.DEFAULT_TRIM))
    out, series = {}, {}
    for m in ms:
        if "schedule" in a:
            s = a["schedule"]
            ns = lat.geometric_schedule(int(s.get("lo", max(1, n_max // 8))), n_max, int(s.get("per_octave", 8)))
            rs = lat.ritt_sweep(e.mu, int(m), n_max, trim, ns=ns, window=int(a.get("window", 1 << 20)))
        else:
            rs = lat.ritt_sweep(e.mu, int(m), n_max, trim)
        n_lo = int(a.get("fit_lo", max(1, n_max // 2) if "schedule" not in a else rs.ns[0]))
        slope = rs.growth_exponent(n_lo, n_max)
        out[f"m={m}"] = {
            "sup": rs.sup, "growth_exponent": slope, "fit_window": [n_lo, n_max],
            "final_value": float(rs.values[-1]), "final_tail_error": float(rs.tail_error[-1]),
            "method": rs.method, "verdict": _slope_verdict(slope), "convention": FIT_TAG,
        }
        series[f"m{m}"] = (rs.ns, rs.values, rs.tail_error)
    return Result(out, series)


def _an_bar(e: Entry, a: dict, ctx: dict) -> Result:
    s = e.spectral(ctx["grid"])
    r = sp.bar_and_sector_ratios(s)
    err = np.full(s.theta.size, s.error_bound[0])
    return Result(
        {
            "bar_sup": r.bar_sup, "bar_argmax_theta": r.bar_argmax, "bar_trend": r.bar_trend,
            "sector_sup": r.sector_sup, "sector_argmax_theta": r.sector_argmax, "sector_trend": r.sector_trend,
            "path": s.path, "verdict": "diverges" if r.bar_diverges else "bounded", "convention": GRID_TAG,
        },
        {"bar": (s.theta, r.bar, err), "sector": (s.theta, r.sector, err)},
    )


def _an_hypothesis(e: Entry, a: dict, ctx: dict) -> Result:
    g = ctx["grid"]
    kind = a.get("psi")
    psi = e.psi(g) if kind is None else sp.psi_eval(kind, e.nu, g)
    r = sp.hypothesis_H_check(e.spectral(g), psi)
    return Result(
        {
            "psi": psi.kind, "c_est": r.c_est, "C_est": r.C_est, "D_est": r.D_est,
            "trends": r.trends, "items": r.verdict, "doubling_pass": r.D_pass,
            "verdict": "pass" if r.passed else "fail", "convention": GRID_TAG,
        },
        {},
    )


def _an_chi(e: Entry, a: dict, ctx: dict) -> Result:
    if e.nu is None or e.nu.family != "cm":
        raise ConfigError(f"chi analysis needs a CM representative measure (measure {e.name!r})")
    r = sp.chi_sector_check(e.nu)
    return Result(
        {
            "sup": r.sup, "argmax": [r.argmax.real, r.argmax.imag], "axis_trend": r.axis_trend,
            "axis_ratio_smallest_y": float(r.axis_ratio[0]), "violations": r.violations,
            "verdict": "bounded" if r.stabilizes else "diverges", "convention": GRID_TAG,
        },
        {"axis": (r.axis_y, r.axis_ratio, np.zeros_like(r.axis_y))},
    )


def _profile_result(p: mc.InequalityProfile) -> Result:
    lo = p.constants_lo if p.constants_lo is not None else p.constants
    hi = p.constants_hi if p.constants_hi is not None else p.constants
    err = np.maximum(np.abs(p.constants - lo), np.abs(hi - p.constants))
    return Result(
        {
            "which": p.which, "sup": p.sup, "growth_exponent": p.growth_exponent,
            "verdict": p.verdict, "convention": FIT_TAG, "points": int(p.points.size),
        },
        {p.which: (p.points, p.constants, err)},
    )


def _an_discrete(e: Entry, a: dict, ctx: dict) -> Result:
    which = _need(a, "which", "analysis 'inequality'")
    n_max = int(a.get("n_max", min(e.mu.hi, 1 << 16)))
    return _profile_result(mc.discrete_inequality_check(e.mu, which, n_max, nu=e.nu))


def _an_integral(e: Entry, a: dict, ctx: dict) -> Result:
    if e.nu is None:
        raise ConfigError(f"integral condition needs a representative measure (measure {e.name!r})")
    which = _need(a, "which", "analysis 'condition'")
    return _profile_result(mc.integral_inequality_check(e.nu, which, int(a.get("j_max", 16))))


def _an_cm_check(e: Entry, a: dict, ctx: dict) -> Result:
    n_max = int(a.get("n_max", 200))
    seq = e.mu.dense(int(a.get("start", 0)), n_max)
    r = mc.cm_check(seq, int(a.get("m_max", 6)), float(a.get("tol", 0.0)))
    return Result({"passed": r.passed, "violation": r.violation, "verdict": "pass" if r.passed else "fail"}, {})


def _an_weak_type(e: Entry, a: dict, ctx: dict) -> Result:
    Ns = a.get("Ns", list(mx.DEFAULT_SCHEDULE))
    seed = ctx["seed"] if ctx["seed"] is not None else mx.DEFAULT_SEED
    st = mx.weak_type_study(e.mu, int(a.get("m", 0)), mx.default_batch(seed), Ns, max_index=a.get("max_index"))
    slopes = st.growth_exponents()
    series = {
        f"{i:02d}": (st.Ns, st.constants[i], st.error_bounds[i]) for i in range(len(st.labels))
    }
    return Result(
        {
            "labels": list(st.labels), "sup": st.sup, "final_constants": st.constants[:, -1].tolist(),
            "growth_exponents": slopes.tolist(), "l2_growth_exponents": st.growth_exponents(st.l2_ratios).tolist(),
            "seed": seed, "verdict": "bounded" if st.stabilizes else "growing", "convention": FIT_TAG,
        },
        series,
    )


def _an_square(e: Entry, a: dict, ctx: dict) -> Result:
    Ns = a.get("Ns", list(mx.DEFAULT_SCHEDULE))
    fields = mx.square_function_study(e.mu, lat.delta(0), Ns, max_index=a.get("max_index"))
    ratios = np.array([f.l1_ratio for f in fields])
    ns = np.array([f.N for f in fields], dtype=np.float64)
    return Result(
        {"l1_ratios": ratios.tolist(), "Ns": ns.tolist(), "note": "exploratory trend, no verdict"},
        {"l1_ratio": (ns, ratios, np.zeros_like(ns))},
    )


def _an_bc(e: Entry, a: dict, ctx: dict) -> Result:
    r = mx.bc_spatial_check(
        e.mu, int(a.get("m", 0)), int(a.get("N", 512)), int(a.get("k_max", 32)), int(a.get("l_max", 256)),
        max_index=a.get("max_index"),
    )
    slope = r.growth_exponent()
    return Result(
        {
            "sup": r.sup, "argmax_n_k_l": list(r.argmax), "growth_exponent": slope,
            "error_bound": r.error_bound, "verdict": _slope_verdict(slope), "convention": FIT_TAG,
        },
        {"running_sup": (r.Ns, r.running_sup, np.full(r.Ns.size, r.error_bound))},
    )


def _an_diagnostics(e: Entry, a: dict, ctx: dict) -> Result:
    ns = a.get("ns", [2**j for j in range(1, 11)])
    t = sp.proof_condition_diagnostics(e.spectral(ctx["grid"]), ns, int(a.get("m", 1)))
    growth = {k: t.growth(k) for k in t.columns}
    series = {k: (t.ns.astype(np.float64), v, np.zeros_like(v)) for k, v in t.columns.items()}
    return Result({"growth": growth, "convention": FIT_TAG}, series)


ANALYSES: dict[str, Callable[[Entry, dict, dict], Result]] = {
    "moments": _an_moments,
    "aperiodic": _an_aperiodic,
    "ritt": _an_ritt,
    "bar": _an_bar,
    "hypothesis_h": _an_hypothesis,
    "chi": _an_chi,
    "inequality": _an_discrete,
    "condition": _an_integral,
    "cm_check": _an_cm_check,
    "weak_type": _an_weak_type,
    "square": _an_square,
    "bc": _an_bc,
    "diagnostics": _an_diagnostics,
}
# dependency order: build, spectral, checks, maximal
STAGE = {
    "moments": 0, "aperiodic": 0, "bar": 1, "hypothesis_h": 1, "chi": 1, "diagnostics": 1,
    "ritt": 2, "inequality": 2, "condition": 2, "cm_check": 2, "weak_type": 3, "square": 3, "bc": 3,
}


# ---------------------------------------------------------------------------
# output


def clean(x: Any) -> Any:
    """JSON-safe copy: numpy scalars become Python numbers, non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return x


def dump_report(report: dict, path: Path, wall_clock: float) -> None:
    body = dict(report)
    body["wall_clock"] = round(wall_clock, 3)
    path.write_text(json.dumps(clean(body), indent=2, sort_keys=True) + "\n")


def write_series(path: Path, x: np.ndarray, y: np.ndarray, err: np.ndarray) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_or_theta", "value", "error_bound"])
    for a, b, c in zip(np.asarray(x, float), np.asarray(y, float), np.asarray(err, float)):
        w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
    path.write_text(buf.getvalue())


def _verdicts(x: Any) -> list[str]:
    if isinstance(x, dict):
        out = [x["verdict"]] if isinstance(x.get("verdict"), str) else []
        for k, v in x.items():
            if k != "verdict":
                out += _verdicts(v)
        return out
    if isinstance(x, list):
        return [v for item in x for v in _verdicts(item)]
    return []


# ---------------------------------------------------------------------------
# commands


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


def run_analyses(cfg: dict, out: Path, threads: int, seed: int | None) -> dict:
    env, target = build_all(cfg)
    analyses = cfg.get("analysis", [])
    jobs = []
    for i, a in enumerate(analyses):
        kind = a.get("kind")
        if kind not in ANALYSES:
            raise ConfigError(f"analysis #{i}: unknown kind {kind!r}")
        name = a.get("target", target)
        if name not in env:
            raise ConfigError(f"analysis #{i}: unknown target {name!r}")
        jobs.append((i, kind, env[name], a))
    ctx = {"grid": make_grid(cfg), "seed": seed}
    jobs.sort(key=lambda j: (STAGE[j[1]], j[0]))

    def work(job):
        i, kind, e, a = job
        return i, kind, e.name, a, ANALYSES[kind](e, a, ctx)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        done = list(pool.map(work, jobs))
    done.sort(key=lambda d: d[0])
    results, files = [], []
    for i, kind, name, a, res in done:
        entry = {"index": i, "op": kind, "target": name, "params": a, "result": res.payload, "series": []}
        for key, (x, y, err) in res.series.items():
            fname = f"{i:02d}_{kind}_{name}_{key}.csv"
            write_series(out / fname, x, y, err)
            entry["series"].append(fname)
            files.append(fname)
        results.append(entry)
    return {
        "measures": {k: e.summary() for k, e in env.items()},
        "target": target,
        "analyses": results,
        "series": files,
    }


def run_battery(cfg: dict, seed: int | None) -> dict:
    b = cfg.get("battery", {})
    j_max = int(b.get("j_max", 14))
    seed = int(b.get("seed", 0)) if seed is None else seed
    fams = b.get("families", list(fam.FAMILIES))
    out: dict[str, Any] = {"j_max": j_max, "seed": seed, "families": {}}
    for f in fams:
        cases = mc.equivalence_battery(f, j_max, seed)
        out["families"][f] = {
            "agree": all(c.agree for c in cases),
            "cases": [
                {
                    "label": c.label, "integral": c.integral.which, "discrete": c.discrete.which,
                    "integral_slope": c.integral.growth_exponent, "discrete_slope": c.discrete.growth_exponent,
                    "integral_verdict": c.integral.verdict, "discrete_verdict": c.discrete.verdict, "agree": c.agree,
                }
                for c in cases
            ],
        }
    out["catalogue"] = example_catalogue(int(b.get("catalogue_n_max", 1 << 14)))
    return out


def example_catalogue(n_max: int) -> dict:
    """Coefficient-side verdicts for the named examples."""
    cat: dict[str, Any] = {}
    nu = fam.normalize_nu([[0.5, 1.0]], "cm")
    p = mc.discrete_inequality_check(None, "cns1", n_max, nu=nu)
    q = mc.integral_inequality_check(nu, "condBAR", int(math.log2(n_max)))
    cat["geometric"] = {"cns1_slope": p.growth_exponent, "cns1": p.verdict, "condBAR": q.verdict}
    p = mc.discrete_inequality_check(fam.build_gamma(0.5, n_max), "cns1", n_max)
    cat["gamma_1/2"] = {"cns1_slope": p.growth_exponent, "cns1_sup": p.sup, "cns1": p.verdict}
    for alpha in (1.5, 2.0):
        mu = fam.build_from_cm_function(fam.CMFunctionSpec(alpha, ()), n_max)
        p = mc.discrete_inequality_check(mu, "cns1", n_max)
        cat[f"power_alpha={alpha}"] = {"cns1_slope": p.growth_exponent, "cns1_sup": p.sup, "cns1": p.verdict}
    return cat


def run_selftest() -> list[tuple[str, bool, str]]:
    """Exact and closed-form oracles; each returns (name, ok, detail)."""
    checks: list[tuple[str, bool, str]] = []

    def add(name: str, ok: bool, detail: str = "") -> None:
        checks.append((name, bool(ok), detail))

    bern = lat.from_coeffs(0, [0.5, 0.5])
    rs = lat.ritt_sweep(bern, 1, 60, 0.0)
    exact = np.array([n * math.comb(n, n // 2) / 2.0**n for n in range(1, 61)])
    err = float(np.max(np.abs(rs.values - exact) / exact))
    add("binomial ritt oracle", err <= 1e-10, f"max rel err {err:.2e}")
    a = fam.gamma_coeffs(0.5, 4)
    add("gamma recurrence", [float(x) for x in a[1:5]] == [0.5, 0.125, 0.0625, 5 / 128], str([float(x) for x in a[1:5]]))
    nu = fam.normalize_nu([[0.5, 1.0]], "cm")
    p = mc.discrete_inequality_check(fam.build_cm(nu, 200), "cns1", 64, nu=nu)
    add("geometric cns1 at n=1", abs(p.constants[0] - 0.5) <= 1e-15, repr(float(p.constants[0])))
    fld = mx.maximal_function(lat.delta(1), lat.delta(0), 0, 3)
    add("shifted-delta maximal function", fld.offset == 1 and list(fld.values) == [1.0, 1.0, 1.0])
    add("weak-type constant of three unit values", mx.weak_type_constant(fld)[0] == 3.0)
    sq = mx.square_function(lat.delta(1), lat.delta(0), 4)
    add("shifted-delta square function", np.allclose(sq.values**2, [1, 3, 5, 7, 4], rtol=0, atol=1e-15))
    add("identity bc check", mx.bc_spatial_check(lat.delta(0), 0, 8, 2, 8).sup == 0.0)
    g = sp.default_grid()
    s = sp.fourier_from_coeffs(lat.from_coeffs(-1, [1 / 3] * 3), g)
    exact_f = (1 + 2 * np.cos(g.points)) / 3
    err = float(np.max(np.abs(s.f - exact_f)))
    add("ternary transform", err <= 1e-15, f"max err {err:.2e}")
    return checks


def _cmd_build(args, cfg, out: Path) -> tuple[dict, int]:
    env, target = build_all(cfg)
    files = []
    for name, e in env.items():
        fname = f"measure_{name}.csv"
        write_series(out / fname, e.mu.indices, e.mu.coeffs, np.full(e.mu.size, e.mu.tail_bound))
        files.append(fname)
    return {"measures": {k: e.summary() for k, e in env.items()}, "target": target, "series": files}, EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="rittlab", description="Convolution-power laboratory on the integers.")
    parser.add_argument("command", choices=("build", "analyze", "battery", "selftest"))
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--strict", action="store_true", help="exit 3 on any growing or failing verdict")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for independent analyses")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized batches")
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    start = time.perf_counter()
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.command in ("build", "analyze") and args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "selftest":
            checks = run_selftest()
            for name, ok, detail in checks:
                print(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
            report = {"checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in checks]}
            code = EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_SELFTEST
        elif args.command == "build":
            report, code = _cmd_build(args, cfg, out)
        elif args.command == "analyze":
            report, code = run_analyses(cfg, out, args.threads, args.seed), EXIT_OK
        else:
            report, code = run_battery(cfg, args.seed), EXIT_OK
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = {"tool": "rittlab", "version": __version__, "command": args.command, "config": cfg, **report}
    dump_report(report, out / f"{args.command}.json", time.perf_counter() - start)
    if args.command == "battery":
        failed = not all(f["agree"] for f in report["families"].values())
    else:
        failed = bool(FAILING.intersection(_verdicts(report)))
    if code == EXIT_OK and args.strict and failed:
        return EXIT_STRICT
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
