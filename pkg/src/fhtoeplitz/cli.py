"""Config-driven experiment runner.

Config files are flat ``key = value`` text with dotted keys::

    name = c1ii
    kind = trace
    pair.f1.alpha = 0.25
    pair.f1.poly = 1.0
    pair.f2.alpha = -0.25
    grid.N = 512, 1024, 2048, 4096

Verdicts: a report is ``consistent`` when |residual| shrinks at every grid
step and the fitted log-log rate is below -0.15, ``inconsistent`` when the
fitted rate is above -0.15 (the residual does not decay), and
``inconclusive`` otherwise or when a grid point failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from importlib import resources

import numpy as np
from scipy import stats

from . import asymptotics as asy
from .spectral import empirical_moments, pushforward_moments
from .stochastic import clt_experiment, ldp_experiment
from .symbols import FHSymbol, beta_series, fourier_coeffs
from .toeplitz import build_toeplitz, gen_eigs, predictor, trace_ratio_power

SCHEMA_VERSION = 1
KINDS = ("trace", "trace-power", "predictor", "eigen", "spectral", "ldp", "clt", "corollary")
DECAY_THRESHOLD = -0.15
CSV_HEADER = "N,exact,predicted,residual,flag"

log = logging.getLogger("fhtoeplitz")


class ConfigError(ValueError):
    pass


# -- configuration ------------------------------------------------------------

def _floats(v):
    return [float(x) for x in v.replace(";", ",").split(",") if x.strip()]


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    f1: FHSymbol
    f2: FHSymbol
    N_grid: tuple
    s_list: tuple = (1,)
    t_grid: tuple = ()
    u_grid: tuple = ()  # 2t as a fraction of 1/sup(f1/f2)
    R: int = 10000
    seed: int = 0
    variant: str = "diagonal"
    c1_variant: str = "arbitrate"
    c1i_mode: str = "explicit"
    tolerances: dict = field(default_factory=dict)
    out: str = "."
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}")
        Ns = list(self.N_grid)
        if not Ns or any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ConfigError("grid.N must be strictly increasing")
        if self.kind == "ldp" and not (self.t_grid or self.u_grid):
            raise ConfigError("ldp needs grid.t or grid.u")
        if self.c1_variant not in ("arbitrate",) + asy.VARIANTS:
            raise ConfigError(f"unknown c1.variant {self.c1_variant!r}")
        if self.c1i_mode not in ("explicit", "fitted"):
            raise ConfigError(f"unknown c1i.mode {self.c1i_mode!r}")

    @classmethod
    def parse(cls, text, **overrides):
        kv = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            kv[k] = v
        kv.update({k: str(v) for k, v in overrides.items() if v is not None})

        def sym(tag):
            try:
                return FHSymbol(float(kv[f"pair.{tag}.alpha"]),
                                tuple(_floats(kv.get(f"pair.{tag}.poly", "1"))),
                                kv.get(f"pair.{tag}.label", tag))
            except KeyError as exc:
                raise ConfigError(f"missing {exc.args[0]}") from None

        try:
            return cls(
                kind=kv.get("kind", "trace"),
                f1=sym("f1"), f2=sym("f2"),
                N_grid=tuple(int(x) for x in _floats(kv.get("grid.N", ""))),
                s_list=tuple(int(x) for x in _floats(kv.get("grid.s", "1"))),
                t_grid=tuple(_floats(kv.get("grid.t", ""))),
                u_grid=tuple(_floats(kv.get("grid.u", ""))),
                R=int(float(kv.get("mc.R", 10000))),
                seed=int(kv.get("mc.seed", 0)),
                variant=kv.get("psi.variant", "diagonal"),
                c1_variant=kv.get("c1.variant", "arbitrate"),
                c1i_mode=kv.get("c1i.mode", "explicit"),
                tolerances={k[4:]: float(v) for k, v in kv.items() if k.startswith("tol.")},
                out=kv.get("out", "."),
                name=kv.get("name", ""),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, **overrides):
        with open(path) as fh:
            return cls.parse(fh.read(), **overrides)


def bank_names():
    return sorted(p.name[:-4] for p in resources.files("fhtoeplitz.bank").iterdir()
                  if p.name.endswith(".cfg"))


def bank_config(name, **overrides):
    text = resources.files("fhtoeplitz.bank").joinpath(f"{name}.cfg").read_text()
    return ExperimentConfig.parse(text, **overrides)


# -- reports ------------------------------------------------------------------

@dataclass
class FitResult:
    rate: float
    ci: tuple
    flag: str = "ok"


def fit_rate(rows) -> FitResult:
    """Least-squares slope of ln|residual| against ln N with a 95% interval."""
    N = np.array([r[0] for r in rows], dtype=float)
    res = np.array([r[1] for r in rows], dtype=float)
    if N.size < 4:
        raise ValueError("need at least 4 points")
    if np.any(res == 0):
        raise ValueError("residuals must be nonzero")
    flag = "sign-change" if np.any(np.sign(res) != np.sign(res[0])) else "ok"
    lr = stats.linregress(np.log(N), np.log(np.abs(res)))
    h = stats.t.ppf(0.975, N.size - 2) * lr.stderr
    return FitResult(float(lr.slope), (float(lr.slope - h), float(lr.slope + h)), flag)


@dataclass
class ConvergenceReport:
    rows: list  # dicts with N, exact, predicted, residual, flag
    fitted_rate: dict | None
    verdict: str
    metadata: dict

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "rows": self.rows,
                "fitted_rate": self.fitted_rate, "verdict": self.verdict,
                "metadata": self.metadata}

    @classmethod
    def from_dict(cls, d):
        return cls(d["rows"], d["fitted_rate"], d["verdict"], d["metadata"])


def _group(row):
    # rows of one series share an s= or t= tag; other flags are per-point status
    f = row["flag"]
    return f if f.startswith(("s=", "t=")) else ""


def _verdict(rows, scale=0.0):
    ok = [r for r in rows if r["flag"] in ("", "ok") or r["flag"].startswith(("s=", "t="))]
    if len(ok) != len(rows) or len(rows) < 4:
        return None, "inconclusive"
    groups = {}
    for r in rows:
        groups.setdefault(_group(r), []).append(r)
    fits, verdicts = [], []
    for g in groups.values():
        res = [abs(r["residual"]) / r["N"] ** scale for r in g]
        if len(g) < 4 or min(res) == 0:
            verdicts.append("inconclusive")
            continue
        fr = fit_rate([(r["N"], r["residual"] / r["N"] ** scale) for r in g])
        fits.append(fr)
        shrinking = all(b < a for a, b in zip(res, res[1:]))
        if fr.rate > DECAY_THRESHOLD:
            verdicts.append("inconsistent")
        elif shrinking:
            verdicts.append("consistent")
        else:
            verdicts.append("inconclusive")
    fit = None
    if fits:
        worst = max(fits, key=lambda f: f.rate)
        fit = {"rate": worst.rate, "ci": list(worst.ci), "flag": worst.flag,
               "scale_exponent": scale, "reading": _reading(worst.rate)}
    for v in ("inconsistent", "inconclusive"):
        if v in verdicts:
            return fit, v
    return fit, "consistent"


def _reading(rate):
    if rate <= DECAY_THRESHOLD:
        return "decaying"
    return "converged constant" if rate < -DECAY_THRESHOLD else "growing"


def _row(N, exact, predicted, flag="ok"):
    return {"N": int(N), "exact": float(exact), "predicted": float(predicted),
            "residual": float(exact - predicted), "flag": flag}


def _run_points(fn, points, workers):
    """Evaluate grid points (in parallel when asked); errors become flags."""
    def safe(p):
        try:
            return fn(p)
        except Exception as exc:  # attached to the grid point, report stays partial
            log.warning("grid point %s failed: %s", p, exc)
            return [{"N": int(p[0] if isinstance(p, tuple) else p), "exact": float("nan"),
                     "predicted": float("nan"), "residual": float("nan"),
                     "flag": f"error: {type(exc).__name__}: {exc}"}]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(safe, points))
    else:
        out = [safe(p) for p in points]
    return [r for rs in out for r in rs]


def run_experiment(config: ExperimentConfig, max_n=None, workers=1) -> ConvergenceReport:
    f1, f2 = config.f1, config.f2
    Ns = [N for N in config.N_grid if max_n is None or N <= max_n]
    tag = asy.classify_case(f1.alpha, f2.alpha)
    meta = {
        "name": config.name, "kind": config.kind,
        "f1": f1.to_record(), "f2": f2.to_record(),
        "case": tag.case.value, "alpha_difference": tag.beta,
        "numerics": {"pairing_K": asy.PAIRING_K, "psi_grid": asy.PSI_GRID,
                     "quad_tol": asy.QUAD_TOL},
    }
    kind = config.kind
    scale = 0.0
    if kind == "trace":
        # fitted constants are read off beyond the grid so the grid stays a test set
        fit_N = 2 * max(Ns)
        try:
            pred = asy.predict_trace(f1, f2, c1_variant=config.c1_variant,
                                     fit_grid=(fit_N,), c1i_mode=config.c1i_mode)
        except asy.OutOfRangeError as exc:
            meta["error"] = f"OUT_OF_RANGE: {exc}"
            return ConvergenceReport([], None, "inconclusive", meta)
        meta["prediction"] = pred.to_record()
        # the residual must be small against the last explicit term
        scale = max(0.0, pred.terms[-1].exponent)
        rows = _run_points(lambda N: [_row(N, trace_ratio_power(f1, f2, N, 1, "structured"),
                                           pred.value(N))], Ns, workers)
    elif kind == "trace-power":
        meta["psi_variant"] = config.variant
        d = asy.psi_derivatives(f1, f2, 6, config.variant)
        meta["psi_flags"] = list(d.flags)
        preds = {s: asy.predict_trace_power(f1, f2, s, d) for s in config.s_list}
        meta["predictions"] = {str(s): p.to_record() for s, p in preds.items()}
        pts = [(N, s) for s in config.s_list for N in Ns]
        rows = _run_points(lambda p: [_row(p[0], trace_ratio_power(f1, f2, p[0], p[1]),
                                           preds[p[1]].value(p[0]), f"s={p[1]}")], pts, workers)
    elif kind == "predictor":
        a = f1.alpha

        def one(N):
            b = predictor(fourier_coeffs(f1, N), N).beta
            bk = beta_series(f1, N).coeffs
            k = np.arange(int(np.ceil(N**0.3)), int(N - N**0.7) + 1)
            dev = np.max(np.abs(b[k] / (bk[k] * (1 - k / N) ** a) - 1))
            return [_row(N, dev, 0.0)]
        rows = _run_points(one, Ns, workers)
        meta["inoue"] = {str(N): float(N * predictor(fourier_coeffs(f1, N), N).beta[N])
                         for N in Ns[-1:]}
    elif kind == "eigen":
        sup = asy.ratio_sup(f1, f2)
        meta["target_max"] = sup
        rows = _run_points(lambda N: [_row(N, gen_eigs(f1, f2, N).eigenvalues[-1], sup)],
                           Ns, workers)
    elif kind == "spectral":
        S = max(config.s_list)
        pm = pushforward_moments(f1, f2, S)
        meta["pushforward_moments"] = pm.moments.tolist()

        def one(N):
            em = empirical_moments(gen_eigs(f1, f2, N), S)
            return [_row(N, em[s - 1], pm.moments[s - 1], f"s={s}") for s in config.s_list]
        rows = _run_points(one, Ns, workers)
    elif kind == "ldp":
        delta = asy.ratio_sup(f1, f2)
        ts = list(config.t_grid) or [u / (2 * delta) for u in config.u_grid]
        d = asy.psi_derivatives(f1, f2, 6, config.variant)
        meta["psi_variant"] = config.variant
        meta["psi_derivatives"] = d.values.tolist()
        meta["psi_flags"] = list(d.flags)
        lrows = ldp_experiment(f1, f2, Ns, ts, derivs=d)
        rows = [_row(r.N, r.second, r.predicted, f"t={r.t!r}") for r in lrows if r.t != 0]
        meta["first_order"] = [{"N": r.N, "t": r.t, "gap": r.gap} for r in lrows]
    elif kind == "clt":
        def one(N):
            c = clt_experiment(f1, f2, N, config.R, config.seed)
            meta.setdefault("clt", {})[str(N)] = asdict(c)
            return [_row(N, c.sample_variance, c.exact_variance)]
        rows = _run_points(one, Ns, 1)
        meta["R"], meta["seed"] = config.R, config.seed
    elif kind == "corollary":
        def one(N):
            A = build_toeplitz(fourier_coeffs(f1, N), N).dense()
            B = build_toeplitz(fourier_coeffs(f2, N), N).dense()
            C = A @ B
            P, out = np.eye(N + 1), []
            for s in range(1, max(config.s_list) + 1):
                P = P @ C
                if s in config.s_list:
                    out.append(_row(N, np.trace(P) / (N + 1),
                                    asy.product_trace_limit(f1, f2, s), f"s={s}"))
            return out
        rows = _run_points(one, Ns, workers)
    else:  # pragma: no cover - guarded by the config
        raise ConfigError(kind)
    rows.sort(key=lambda r: (_group(r), r["N"]))
    fit, verdict = _verdict(rows, scale)
    return ConvergenceReport(rows, fit, verdict, meta)


def emit_report(report: ConvergenceReport, fmt, out_dir, stem="report", timestamp=True):
    """Write csv, json or svg-data (two-column log-log residual series)."""
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "csv":
        path = os.path.join(out_dir, f"{stem}.csv")
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in report.rows:
                flag = r["flag"].replace(",", ";")
                fh.write(f"{r['N']},{r['exact']!r},{r['predicted']!r},{r['residual']!r},{flag}\n")
    elif fmt == "json":
        path = os.path.join(out_dir, f"{stem}.json")
        d = report.to_dict()
        if timestamp:
            d["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        with open(path, "w") as fh:
            json.dump(d, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
    elif fmt == "svg-data":
        path = os.path.join(out_dir, f"{stem}.svg-data.csv")
        with open(path, "w") as fh:
            fh.write(f"# schema_version={SCHEMA_VERSION}\nlog10_N,log10_abs_residual\n")
            for r in sorted(report.rows, key=lambda r: r["N"]):
                if r["residual"] and np.isfinite(r["residual"]):
                    fh.write(f"{float(np.log10(r['N']))!r},"
                             f"{float(np.log10(abs(r['residual'])))!r}\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if hasattr(o, "value"):
        return o.value
    return str(o)


def load_report(path) -> ConvergenceReport:
    with open(path) as fh:
        d = json.load(fh)
    return ConvergenceReport.from_dict(d)


# -- entry point --------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="fhtoeplitz", description=__doc__.split("\n")[0])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH")
    src.add_argument("--bank", metavar="NAME", help="run a built-in bank config")
    src.add_argument("--list-bank", action="store_true")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", type=int)
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("--max-n", type=int)
    p.add_argument("--format", default="csv,json,svg-data")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list_bank:
        print("\n".join(bank_names()))
        return 0
    overrides = {"mc.seed": args.seed, "kind": args.kind}
    try:
        if args.config:
            cfg = ExperimentConfig.load(args.config, **overrides)
        else:
            cfg = bank_config(args.bank, **overrides)
        report = run_experiment(cfg, max_n=args.max_n, workers=args.workers)
        out = args.out or cfg.out
        stem = cfg.name or cfg.kind
        for fmt in args.format.split(","):
            print(emit_report(report, fmt.strip(), out, stem, not args.no_timestamp))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"verdict: {report.verdict}")
    return 2 if report.verdict == "inconsistent" else 0


if __name__ == "__main__":
    sys.exit(main())
