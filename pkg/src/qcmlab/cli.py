"""Scenario runner: ``qcmlab <subcommand> --key value ...``.

Options resolve as flag, then (for the seed) ``QCM_SEED``, then the config
file section named after the subcommand, then its ``[common]`` section, then
the built-in default.  Every run writes ``report.csv`` and ``summary.txt`` to
``--output-dir``; ``--plot`` adds ``plot.svg``.

Exit status: 0 pass, 1 fail, 2 usage error, 3 inconclusive.
"""
import argparse
import configparser
from dataclasses import dataclass, field
import math
import os
import sys
import warnings

import numpy as np

from . import checkers, counterexample, mapping, measures, singular, svg
from .exceptions import BudgetExceededWarning, DecayViolated, InjectivityViolation, QCMError
from .io import FormatError, anchor_set, parse_measure, parse_point, parse_region, polyline_csv, table_csv
from .quadrature import QuadratureConfig
from .reports import FAIL, INCONCLUSIVE, PASS, CheckReport, fmt, worse_verdict
from .sampling import log_uniform, random_unit, trial_rng

EXIT = {PASS: 0, FAIL: 1, INCONCLUSIVE: 3}
USAGE = 2

# name -> (type, default, help); shared by every subcommand
COMMON = {
    "seed": (int, 0, "master seed (QCM_SEED overrides the config file)"),
    "trials": (int, None, "number of randomized trials"),
    "output-dir": (str, "qcm_output", "directory for report.csv, summary.txt, plot.svg"),
    "truncation-radius": (float, 1e3, "quadrature truncation radius"),
    "rel-tol": (float, 1e-6, "quadrature relative tolerance"),
    "max-depth": (int, 5, "quadrature refinement levels"),
    "base-subdivision": (int, 4, "coarsest quadrature panel count"),
}
FLAGS = {"plot": "write plot.svg"}

COMMANDS = {
    "eval-map": ("kernel map f_mu at a point", {
        "measure": (str, "uniform-ball", "measure family:params"),
        "at": (str, "0,0", "evaluation point x,y,..."),
        "route": (str, "origin", "integration route: origin or split"),
    }, {}),
    "potential": ("potential v_mu at a point (grad v_mu = f_mu)", {
        "measure": (str, "uniform-ball", "measure family:params"),
        "at": (str, "0,0", "evaluation point"),
    }, {"raw": "report the unhalved integral"}),
    "riesz": ("Riesz potential I_gamma mu at a point", {
        "measure": (str, "uniform-ball", "measure family:params"),
        "at": (str, "0,0", "evaluation point"),
        "gamma": (float, None, "order, default n-1"),
    }, {}),
    "check-decay": ("decay integral of |z|^-1 over |z| > 1", {
        "measure": (str, "uniform-ball", "measure family:params"),
    }, {}),
    "check-doubling": ("ball doubling constant", {
        "measure": (str, "uniform-ball", "measure family:params"),
        "domain": (str, None, "centre region ball:... or box:..., default unit ball"),
        "r-min": (float, 1e-3, "smallest radius"),
        "r-max": (float, 1e1, "largest radius"),
        "bound": (float, None, "fail when the estimate exceeds this"),
    }, {}),
    "check-cone": ("cone condition ratio", {
        "measure": (str, "uniform-ball", "measure family:params"),
        "alpha": (float, 0.5, "cone half-angle"),
        "M": (float, 2.0, "annulus enlargement"),
        "r-min": (float, 1e-2, "smallest radius"),
        "r-max": (float, 1e1, "largest radius"),
        "bound": (float, None, "fail when the estimate exceeds this"),
    }, {}),
    "check-monotone": ("delta-monotonicity constant of a map", {
        "map": (str, "kernel", "identity | linear:a,b,c,d | power:p | kernel"),
        "measure": (str, "uniform-ball", "measure for the kernel map"),
        "r-min": (float, 1e-3, "smallest pair distance"),
        "r-max": (float, 1.0, "largest pair distance"),
    }, {}),
    "check-qs": ("empirical quasisymmetry modulus eta", {
        "map": (str, "kernel", "identity | linear:a,b,c,d | power:p | kernel"),
        "measure": (str, "uniform-ball", "measure for the kernel map"),
        "t-grid": (str, "0.25,0.5,1,2,4", "distance ratios"),
    }, {}),
    "check-isotropic": ("isotropic doubling over congruent intersecting boxes", {
        "measure": (str, "lebesgue", "measure family:params"),
        "eps": (float, 1e-3, "witness box half-width"),
        "eps-ref": (float, 1e-1, "reference half-width for the witness growth"),
        "growth": (float, 2.0, "witness growth factor that signals divergence"),
        "scale-min": (float, 1e-2, "smallest box scale"),
        "scale-max": (float, 1.0, "largest box scale"),
        "aspect-max": (float, 10.0, "largest box aspect ratio"),
        "bound": (float, None, "fail when the estimate exceeds this"),
    }, {"paper-witness": "use the thin witness boxes instead of random boxes"}),
    "check-segments": ("segment integral comparability of a weight", {
        "measure": (str, "riesz:2,2", "weight family:params"),
        "r-min": (float, 1e-2, "smallest segment length"),
        "r-max": (float, 1.0, "largest segment length"),
        "bound": (float, None, "fail when the estimate exceeds this"),
    }, {}),
    "check-projection": ("face projection of a measure restricted to a cube", {
        "measure": (str, "lebesgue", "measure family:params"),
        "cube": (str, None, "box:centre,half-lengths, default unit cube about the origin"),
        "k": (int, 8, "cells per face axis"),
        "face-axis": (int, 0, "normal axis of the face"),
        "bound": (float, None, "fail when max/min cell mass exceeds this"),
    }, {}),
    "check-ulnc": ("uniform linear non-convexity of an anchor set", {
        "anchors": (str, "cantor:4", "cantor[:depth] | points:x,y;... | IFS file"),
        "arbitrary-trials": (int, 1000, "pairs testing the reformulated condition"),
        "p": (float, None, "also test the distance weight dist(., A)^p"),
    }, {"all-pairs": "enumerate every pair of anchors"}),
    "singular-demo": ("Riesz product normalization, line integrals and probe", {
        "n": (int, 2, "dimension"),
        "m": (int, 1, "number of factors"),
        "tol": (float, None, "normalization tolerance, default 1e-3 (m=1) or 1e-2"),
        "envelope": (float, 16.0, "line-integral comparability envelope [1/E, E]"),
        "r-min": (float, 1e-3, "smallest segment length"),
        "r-max": (float, 1.0, "largest segment length"),
    }, {"normalization": "check the period-cell integral (default mode)",
        "segments": "check line-integral comparability", "probe": "tabulate the singularity probe"}),
    "badset": ("cardinality of the bad set of exponents", {
        "q": (float, 4.0, "base q > 1"),
        "eps": (float, 0.75, "epsilon in (0, 1)"),
        "n": (int, 2, "dimension"),
        "v": (str, None, "fixed direction; random when omitted"),
        "k-min": (int, -50, "smallest exponent"),
        "k-max": (int, 50, "largest exponent"),
    }, {"random-settings": "also draw q, eps and n at random"}),
    "counterexample-demo": ("staircase curve Gamma and its tube mass", {
        "n": (int, 2, "dimension"),
        "K": (int, 2, "staircase level"),
        "t-min": (float, -1.0, "start of the t-window"),
        "t-max": (float, 1.0, "end of the t-window"),
        "grid": (int, 10000, "t-grid points for the bound checks"),
        "k-list": (str, "0,1,2", "levels for the tube probe"),
    }, {"probe": "run the neighbourhood mass probe"}),
}

DEFAULT_TRIALS = {"check-doubling": 100, "check-cone": 50, "check-monotone": 200, "check-qs": 100,
                  "check-isotropic": 100, "check-segments": 100, "check-ulnc": 1000, "singular-demo": 100,
                  "badset": 1000, "check-projection": 1}


class UsageError(Exception):
    pass


@dataclass
class ScenarioConfig:
    command: str
    values: dict
    flags: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self):
        return self.values["seed"]

    @property
    def quadrature(self):
        return QuadratureConfig(truncation_radius=self["truncation-radius"], base_subdivision=self["base-subdivision"],
                                max_depth=self["max-depth"], rel_tol=self["rel-tol"])

    @property
    def trials(self):
        t = self.values["trials"]
        return DEFAULT_TRIALS.get(self.command, 1) if t is None else t


@dataclass
class Outcome:
    verdict: str
    csv: str
    summary: str
    plot: str = None
    extra: dict = field(default_factory=dict)
    stdout: str = ""


# -- argument handling -----------------------------------------------------------

def _dest(name):
    return name.replace("-", "_")


def build_parser():
    parser = argparse.ArgumentParser(prog="qcmlab", description="Numerical experiments on kernel maps of measures.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    for name, (help_text, opts, flags) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", default=None, help="config file (key = value, sections per subcommand)")
        for key, (_, default, h) in {**COMMON, **opts}.items():
            p.add_argument(f"--{key}", dest=_dest(key), default=None, metavar="VALUE",
                           help=f"{h} (default {default})")
        for key, h in {**FLAGS, **flags}.items():
            p.add_argument(f"--{key}", dest=_dest(key), action="store_const", const=True, default=None, help=h)
    return parser


def _convert(key, typ, raw):
    if raw is None:
        return None
    if typ is bool:
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"--{key}: expected a boolean, got {raw!r}")
    try:
        return typ(raw)
    except ValueError as exc:
        raise UsageError(f"--{key}: cannot parse {raw!r} as {typ.__name__}") from exc


def _config_lookup(parser, section, key):
    for sec in (section, "common"):
        if parser.has_section(sec):
            for k in (key, _dest(key)):
                if parser.has_option(sec, k):
                    return parser.get(sec, k)
    return None


def resolve(args):
    """Merge flags, ``QCM_SEED``, the config file and defaults into a ``ScenarioConfig``."""
    command = args.command
    _, opts, flags = COMMANDS[command]
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if args.config:
        if not os.path.isfile(args.config):
            raise UsageError(f"config file not found: {args.config}")
        try:
            cp.read(args.config, encoding="utf-8")
        except configparser.Error as exc:
            raise UsageError(f"malformed config file: {exc}") from exc
        known = set(COMMANDS) | {"common"}
        for sec in cp.sections():
            if sec not in known:
                raise UsageError(f"unknown config section [{sec}]")
        allowed = set(COMMON) | set(FLAGS) | {k for _, o, f in COMMANDS.values() for k in (*o, *f)}
        for sec in cp.sections():
            for k in cp.options(sec):
                if k not in allowed and k.replace("_", "-") not in allowed:
                    raise UsageError(f"unknown key {k!r} in [{sec}]")
    values = {}
    for key, (typ, default, _) in {**COMMON, **opts}.items():
        v = getattr(args, _dest(key))
        if v is None and key == "seed" and os.environ.get("QCM_SEED"):
            v = os.environ["QCM_SEED"]
        if v is None:
            v = _config_lookup(cp, command, key)
        v = _convert(key, typ, v)
        values[key] = default if v is None else v
    if not 0 <= values["seed"] < 2 ** 64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if values["trials"] is not None and values["trials"] < 1:
        raise UsageError("--trials must be positive")
    fl = {}
    for key in {**FLAGS, **flags}:
        v = getattr(args, _dest(key))
        if v is None:
            v = _convert(key, bool, _config_lookup(cp, command, key))
        fl[key] = bool(v)
    return ScenarioConfig(command, values, fl)


# -- helpers -----------------------------------------------------------------------

def _measure(cfg):
    try:
        return parse_measure(cfg["measure"])
    except FormatError as exc:
        raise UsageError(str(exc)) from exc


def _point(text, n):
    try:
        x = parse_point(text)
    except FormatError as exc:
        raise UsageError(str(exc)) from exc
    if x.size != n:
        raise UsageError(f"point {text!r} has {x.size} coordinates, the measure lives in R^{n}")
    return x


def _region(text, n, default):
    if text is None:
        return default
    try:
        return parse_region(text, n)
    except FormatError as exc:
        raise UsageError(str(exc)) from exc


def _tuple_text(v):
    return "(" + ", ".join(format(float(c) + 0.0, ".17g") for c in np.ravel(v)) + ")"


def _report_outcome(report, cfg, bound=None, plot=None, lower=False):
    verdict = report.verdict
    if bound is not None:
        bad = report.estimated_constant < bound if lower else report.estimated_constant > bound
        if bad or math.isnan(report.estimated_constant):
            verdict = worse_verdict(verdict, FAIL)
        report.verdict = verdict
    return Outcome(verdict, report.to_csv(), report.summary(), plot,
                   stdout=f"{report.property_name}: {fmt(report.estimated_constant)} ({verdict})")


def _summary(prop, constant, trials, witness, seed, verdict, extra=()):
    rep = CheckReport(prop, constant, max(int(trials), 1), dict(witness), seed, verdict)
    text = rep.summary()
    for k, v in extra:
        text += f"{k} = {fmt(v)}\n"
    return text


def _scatter(rows, xkey, ykey, title, logx=True, logy=False):
    xs = [r.get(xkey, math.nan) for r in rows]
    ys = [r.get(ykey, math.nan) for r in rows]
    xs = [float(np.linalg.norm(x)) if np.ndim(x) else float(x) for x in xs]
    return svg.line_chart([(ykey, xs, ys)], title=title, xlabel=xkey, ylabel=ykey, logx=logx, logy=logy,
                          scatter=True)


def _map_under_test(cfg):
    spec = cfg["map"]
    kind, _, arg = spec.partition(":")
    try:
        if kind == "identity":
            return checkers.identity_map(int(arg) if arg else 2)
        if kind == "linear":
            v = [float(c) for c in arg.split(",")]
            k = int(round(math.sqrt(len(v))))
            if k * k != len(v):
                raise UsageError("linear map needs a square matrix, row-major")
            return checkers.linear_map(np.array(v).reshape(k, k))
        if kind == "power":
            return checkers.power_map(float(arg))
    except ValueError as exc:
        raise UsageError(f"bad map {spec!r}") from exc
    if kind == "kernel":
        mu = _measure(cfg)
        return checkers.kernel_map(mapping.KernelMapEval(mu, cfg.quadrature))
    raise UsageError(f"unknown map {spec!r}")


# -- subcommands ---------------------------------------------------------------------

def cmd_eval_map(cfg):
    mu = _measure(cfg)
    x = _point(cfg["at"], mu.n)
    ev = mapping.KernelMapEval(mu, cfg.quadrature, route=cfg["route"])
    f = mapping.f_mu(ev, x) + 0.0
    csv_text = table_csv([{"x": x, "f": f}], cfg.seed)
    summary = _summary(f"kernel map f_mu for {mu.label()}", float(np.linalg.norm(f)), 1, {"x": x, "f": f},
                       cfg.seed, PASS)
    return Outcome(PASS, csv_text, summary, stdout=_tuple_text(f))


def cmd_potential(cfg):
    mu = _measure(cfg)
    x = _point(cfg["at"], mu.n)
    ev = mapping.KernelMapEval(mu, cfg.quadrature)
    v = mapping.v_mu(ev, x, normalized=not cfg.flags["raw"])
    csv_text = table_csv([{"x": x, "v": v}], cfg.seed)
    summary = _summary(f"potential v_mu for {mu.label()}", v, 1, {"x": x}, cfg.seed, PASS)
    return Outcome(PASS, csv_text, summary, stdout=fmt(v))


def cmd_riesz(cfg):
    mu = _measure(cfg)
    x = _point(cfg["at"], mu.n)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else mu.n - 1.0
    if not 0.0 < gamma < mu.n:
        raise UsageError("--gamma must lie in (0, n)")
    val = mapping.riesz_potential(mu, gamma, x, cfg.quadrature)
    verdict = PASS if math.isfinite(val) else FAIL
    csv_text = table_csv([{"x": x, "gamma": gamma, "value": val}], cfg.seed)
    summary = _summary(f"Riesz potential I_gamma mu for {mu.label()}", val, 1, {"x": x, "gamma": gamma},
                       cfg.seed, verdict)
    return Outcome(verdict, csv_text, summary, stdout=fmt(val))


def cmd_check_decay(cfg):
    mu = _measure(cfg)
    res = measures.decay_check(mu, cfg.quadrature)
    verdict = {"finite": PASS, "infinite": FAIL}.get(res.verdict, INCONCLUSIVE)
    if not res.converged:
        verdict = worse_verdict(verdict, INCONCLUSIVE)
    rows, lo = [], 1.0
    for i, s in enumerate(res.shells):
        hi = min(2.0 * lo, cfg["truncation-radius"])
        rows.append({"shell": i, "r_lo": lo, "r_hi": hi, "integral": s})
        lo = hi
    summary = _summary(f"decay int_{{|z|>1}} |z|^-1 dmu < inf for {mu.label()}", res.integral_estimate,
                       len(res.shells), {"tail_bound": res.tail_bound, "status": res.verdict}, cfg.seed, verdict)
    plot = None
    if cfg.flags["plot"]:
        plot = svg.line_chart([("shell integral", [r["r_hi"] for r in rows], [r["integral"] for r in rows])],
                              title="decay shells", xlabel="outer radius", ylabel="shell integral", logx=True)
    return Outcome(verdict, table_csv(rows, cfg.seed), summary, plot,
                   stdout=f"decay integral: {fmt(res.integral_estimate)} ({res.verdict})")


def cmd_check_doubling(cfg):
    mu = _measure(cfg)
    domain = _region(cfg["domain"], mu.n, measures.Ball(np.zeros(mu.n), 1.0))
    rep = measures.doubling_constant_estimate(mu, domain, cfg.trials, cfg.quadrature, cfg.seed,
                                              cfg["r-min"], cfg["r-max"])
    plot = _scatter(rep.rows, "radius", "ratio", "doubling ratio vs radius") if cfg.flags["plot"] else None
    return _report_outcome(rep, cfg, cfg["bound"], plot)


def cmd_check_cone(cfg):
    mu = _measure(cfg)
    rep = measures.cone_condition_check(mu, cfg["alpha"], cfg["M"], cfg.trials, cfg.quadrature, cfg.seed,
                                        r_min=cfg["r-min"], r_max=cfg["r-max"])
    plot = _scatter(rep.rows, "r", "ratio", "cone ratio vs radius") if cfg.flags["plot"] else None
    return _report_outcome(rep, cfg, cfg["bound"], plot)


def cmd_check_monotone(cfg):
    fmap = _map_under_test(cfg)
    rep = checkers.delta_monotone_estimate(fmap, cfg.trials, cfg.seed, cfg["r-min"], cfg["r-max"])
    plot = None
    if cfg.flags["plot"]:
        dist = [{"distance": float(np.linalg.norm(r["x"] - r["y"])), "ratio": r["ratio"]} for r in rep.rows]
        plot = _scatter(dist, "distance", "ratio", f"monotonicity cosine, {fmap.name}")
    return _report_outcome(rep, cfg, None, plot)


def cmd_check_qs(cfg):
    fmap = _map_under_test(cfg)
    try:
        grid = [float(t) for t in cfg["t-grid"].split(",")]
    except ValueError as exc:
        raise UsageError("--t-grid must be comma-separated numbers") from exc
    try:
        est = checkers.quasisymmetry_eta_estimate(fmap, cfg.trials, grid, cfg.seed)
    except InjectivityViolation as exc:
        summary = _summary(f"quasisymmetry of {fmap.name}", math.inf, 1, exc.args[1] if len(exc.args) > 1 else {},
                           cfg.seed, FAIL)
        return Outcome(FAIL, table_csv([{"error": str(exc.args[0])}], cfg.seed), summary, stdout=str(exc.args[0]))
    rep = est.report
    rows = [{"t": t, "eta": e, "raw_max": r, "count": c}
            for t, e, r, c in zip(est.t_grid, est.eta_values, est.raw_max, est.counts)]
    extra = [(f"eta({fmt(t)})", e) for t, e in zip(est.t_grid, est.eta_values)]
    summary = rep.summary() + "".join(f"{k} = {fmt(v)}\n" for k, v in extra)
    plot = None
    if cfg.flags["plot"]:
        plot = svg.line_chart([("eta", est.t_grid, est.eta_values), ("t", est.t_grid, est.t_grid)],
                              title=f"empirical eta, {fmap.name}", xlabel="t", ylabel="eta(t)", logx=True, logy=True)
    return Outcome(rep.verdict, table_csv(rows, cfg.seed), summary, plot,
                   stdout=" ".join(f"eta({fmt(t)})={fmt(e)}" for t, e in zip(est.t_grid, est.eta_values)))


def cmd_check_isotropic(cfg):
    mu = _measure(cfg)
    q = cfg.quadrature
    if cfg.flags["paper-witness"]:
        eps, ref = cfg["eps"], cfg["eps-ref"]
        if not (0.0 < eps < 1.0 and 0.0 < ref < 1.0):
            raise UsageError("--eps and --eps-ref must lie in (0, 1)")
        r = checkers.witness_box_ratio(mu, eps, q)
        r_ref = checkers.witness_box_ratio(mu, ref, q)
        growth = r / r_ref
        verdict = FAIL if growth >= cfg["growth"] else PASS
        b1, b2 = checkers.example_witness_boxes(mu.n, eps)
        rows = [{"eps": ref, "ratio": r_ref}, {"eps": eps, "ratio": r}]
        witness = {"box1": b1.as_tuple(), "box2": b2.as_tuple(), "ratio": r, "ratio_ref": r_ref, "growth": growth}
        summary = _summary(f"isotropic doubling on thin witness boxes for {mu.label()}, growth mu(R1)/mu(R2) "
                           f"from eps={fmt(ref)}", growth, 2, witness, cfg.seed, verdict)
        plot = None
        if cfg.flags["plot"]:
            es = np.geomspace(min(eps, ref), max(eps, ref), 7)
            plot = svg.line_chart([("mu(R1)/mu(R2)", es, [checkers.witness_box_ratio(mu, e, q) for e in es])],
                                  title="witness box ratio", xlabel="eps", ylabel="ratio", logx=True)
        return Outcome(verdict, table_csv(rows, cfg.seed), summary, plot,
                       stdout=f"witness ratio {fmt(r)} at eps={fmt(eps)}, {fmt(r_ref)} at eps={fmt(ref)} ({verdict})")
    rep = checkers.isotropic_doubling_check(mu, cfg.trials, (cfg["scale-min"], cfg["scale-max"]), cfg["aspect-max"],
                                            cfg.seed, q)
    plot = None
    if cfg.flags["plot"]:
        pts = [{"scale": float(np.max(r["half"])), "ratio": r["ratio"]} for r in rep.rows]
        plot = _scatter(pts, "scale", "ratio", "congruent box mass ratio vs scale")
    return _report_outcome(rep, cfg, cfg["bound"], plot)


def cmd_check_segments(cfg):
    mu = _measure(cfg)
    rep = checkers.segment_integral_check(mu, cfg.trials, cfg.seed, cfg.quadrature, r_min=cfg["r-min"],
                                          r_max=cfg["r-max"])
    plot = None
    if cfg.flags["plot"]:
        pts = [{"length": float(np.linalg.norm(r["v"])), "ratio": r["ratio"]} for r in rep.rows]
        plot = _scatter(pts, "length", "ratio", "segment mean ratio vs length")
    return _report_outcome(rep, cfg, cfg["bound"], plot)


def cmd_check_projection(cfg):
    mu = _measure(cfg)
    cube = _region(cfg["cube"], mu.n, measures.OrientedBox(np.zeros(mu.n), np.ones(mu.n)))
    if not isinstance(cube, measures.OrientedBox):
        raise UsageError("--cube must be a box:... region")
    if not 0 <= cfg["face-axis"] < mu.n:
        raise UsageError("--face-axis out of range")
    try:
        rep = checkers.face_projection_check(mu, cube, cfg.quadrature, cfg["k"], cfg["face-axis"], cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    plot = None
    if cfg.flags["plot"]:
        plot = svg.line_chart([("cell mass", list(range(len(rep.rows))), [r["mass"] for r in rep.rows])],
                              title="projected cell masses", xlabel="cell", ylabel="mass", scatter=True)
    return _report_outcome(rep, cfg, cfg["bound"], plot)


def cmd_check_ulnc(cfg):
    try:
        A = anchor_set(cfg["anchors"])
    except (FormatError, OSError, ValueError) as exc:
        raise UsageError(f"bad anchors {cfg['anchors']!r}: {exc}") from exc
    trials = None if cfg.flags["all-pairs"] else cfg.trials
    res = checkers.ulnc_check(A, trials, cfg.seed, cfg["arbitrary-trials"])
    rep = res.report
    verdict = rep.verdict
    summary = rep.summary() + f"tau_prime = {fmt(res.tau_prime)}\n"
    if cfg["p"] is not None:
        w = checkers.distance_weight_bounds_check(A, cfg["p"], res.tau_hat, cfg.trials, cfg.seed)
        verdict = worse_verdict(verdict, w.verdict)
        summary += "\n" + w.summary()
    plot = None
    if cfg.flags["plot"]:
        pts = [{"length": float(np.linalg.norm(r["a"] - r["b"])), "ratio": r["ratio"]} for r in rep.rows]
        plot = _scatter(pts, "length", "ratio", "clearance ratio vs chord length")
    return Outcome(verdict, rep.to_csv(), summary, plot,
                   stdout=f"tau_hat = {fmt(res.tau_hat)}, tau_prime = {fmt(res.tau_prime)} ({verdict})")


def cmd_singular_demo(cfg):
    n, m = cfg["n"], cfg["m"]
    if n < 1 or m < 0:
        raise UsageError("need n >= 1 and m >= 0")
    modes = [k for k in ("normalization", "segments", "probe") if cfg.flags[k]] or ["normalization"]
    verdict, rows, text, out = PASS, [], "", []
    if "normalization" in modes:
        res = singular.mass_normalization(n, m, cfg.quadrature)
        tol = cfg["tol"] if cfg["tol"] is not None else (1e-3 if m <= 1 else 1e-2)
        v = PASS if res.deviation <= tol else (INCONCLUSIVE if math.isnan(res.deviation) else FAIL)
        verdict = worse_verdict(verdict, v)
        rows.append({"mode": "normalization", "n": n, "m": m, "integral": res.integral, "target": res.target,
                     "deviation": res.deviation, "nodes_per_axis": res.nodes_per_axis})
        text += _summary("Riesz product mass over the period cell equals (2 pi)^n", res.deviation, 1,
                         {"integral": res.integral, "target": res.target}, cfg.seed, v, [("tolerance", tol)])
        out.append(f"deviation {fmt(res.deviation)}")
    if "segments" in modes:
        E = cfg["envelope"]
        lo, hi, worst = math.inf, -math.inf, {}
        v = PASS
        for i in range(cfg.trials):
            rng = trial_rng(cfg.seed, i)
            x0 = rng.uniform(-math.pi, math.pi, n)
            vec = float(log_uniform(rng, cfg["r-min"], cfg["r-max"])) * random_unit(rng, n)
            c = singular.line_integral_comparability(n, m, x0, vec, cfg.quadrature)
            rows.append({"mode": "segments", "trial": i, "x0": x0, "v": vec, "lhs": c.lhs, "rhs": c.rhs,
                         "ratio": c.ratio, "K": c.K, "lhs_expansion": c.lhs_expansion})
            if not c.converged:
                v = worse_verdict(v, INCONCLUSIVE)
            if c.ratio < lo:
                lo = c.ratio
            if c.ratio > hi:
                hi, worst = c.ratio, {"x0": x0, "v": vec}
        if lo < 1.0 / E or hi > E:
            v = FAIL
        verdict = worse_verdict(verdict, v)
        text += ("\n" if text else "") + _summary(
            "line integral of Lambda_m comparable to r prod lambda_k(x0)", hi, cfg.trials, worst, cfg.seed, v,
            [("min_ratio", lo), ("envelope", E)])
        out.append(f"comparability ratios in [{fmt(lo)}, {fmt(hi)}]")
    if "probe" in modes:
        rng = trial_rng(cfg.seed, 0)
        X = rng.uniform(-math.pi, math.pi, (min(cfg.trials, 50), n))
        m_list = [k for k in range(0, m + 1) if k <= singular.MAX_POINTWISE_M.get(n, 0)]
        for r in singular.singularity_probe(n, m_list, X):
            rows.append({"mode": "probe", "m": r.m, "x": r.x, "r_m": r.r_m, "normalized_mass": r.normalized_mass,
                         "log_Lambda": r.log_Lambda})
        means = {k: float(np.mean([r["log_Lambda"] for r in rows if r.get("mode") == "probe" and r["m"] == k]))
                 for k in m_list}
        text += ("\n" if text else "") + _summary(
            "mean log Lambda_m decreases linearly in m", means[m_list[-1]], len(X), {}, cfg.seed, PASS,
            [(f"mean_log_Lambda_{k}", v) for k, v in means.items()] + [("per_factor_mean", singular.log_lambda_mean())])
        out.append(f"mean log Lambda_{m_list[-1]} = {fmt(means[m_list[-1]])}")
    plot = None
    if cfg.flags["plot"]:
        seg = [r for r in rows if r.get("mode") == "segments"]
        if seg:
            plot = _scatter([{"length": float(np.linalg.norm(r["v"])), "ratio": r["ratio"]} for r in seg],
                            "length", "ratio", "line integral comparability", logy=True)
        else:
            g = np.linspace(-math.pi, math.pi, 2001)
            X = np.zeros((g.size, n))
            X[:, 0] = g
            plot = svg.line_chart([(f"Lambda_{m}", g, singular.Lambda_m_many(n, m, X))],
                                  title=f"Lambda_{m} along the first axis", xlabel="x1", ylabel="Lambda")
    return Outcome(verdict, table_csv(rows, cfg.seed), text, plot, stdout="; ".join(out) + f" ({verdict})")


def cmd_badset(cfg):
    ks = range(cfg["k-min"], cfg["k-max"] + 1)
    rows, verdict, worst, best = [], PASS, {}, -math.inf
    for i in range(cfg.trials):
        rng = trial_rng(cfg.seed, i)
        q, eps, n = cfg["q"], cfg["eps"], cfg["n"]
        if cfg.flags["random-settings"]:
            q = float(rng.choice([1.5, 2.0, 3.0, 4.0, 8.0]))
            eps = float(rng.uniform(0.05, 0.95))
            n = int(rng.integers(2, 5))
        if cfg["v"] is not None:
            v = _point(cfg["v"], n)
        else:
            v = rng.standard_normal(n)
        try:
            B = singular.bad_set(q, eps, v, ks)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        bound = singular.bad_set_bound(q, eps, n)
        bound_int = singular.bad_set_bound_integer(q, eps, n)
        excess = len(B) - bound
        rows.append({"trial": i, "q": q, "eps": eps, "n": n, "v": v, "cardinality": len(B), "bound": bound,
                     "integer_bound": bound_int, "members": list(B)})
        if len(B) > bound:
            verdict = FAIL
        if excess > best:
            best, worst = excess, {"q": q, "eps": eps, "n": n, "v": v, "cardinality": len(B), "bound": bound}
    summary = _summary("bad set cardinality <= n(n-1) log((n-1)/eps) / log q, max(card - bound)", best,
                       cfg.trials, worst, cfg.seed, verdict,
                       [("max_cardinality", max(r["cardinality"] for r in rows)),
                        ("integer_bound_violations", sum(r["cardinality"] > r["integer_bound"] for r in rows))])
    plot = None
    if cfg.flags["plot"]:
        plot = svg.line_chart([("cardinality", [r["bound"] for r in rows], [r["cardinality"] for r in rows])],
                              title="bad set cardinality vs bound", xlabel="bound", ylabel="cardinality", scatter=True)
    return Outcome(verdict, table_csv(rows, cfg.seed), summary, plot,
                   stdout=f"max cardinality minus bound: {fmt(best)} ({verdict})")


def cmd_counterexample_demo(cfg):
    n, K = cfg["n"], cfg["K"]
    if n not in counterexample.K_MAX or not 0 <= K <= counterexample.K_MAX[n]:
        raise UsageError(f"need n in {sorted(counterexample.K_MAX)} and 0 <= K <= K_MAX[n]")
    t_lo, t_hi = cfg["t-min"], cfg["t-max"]
    if not t_hi > t_lo:
        raise UsageError("--t-max must exceed --t-min")
    t = np.linspace(t_lo, t_hi, cfg["grid"])
    rows, verdict = [], PASS
    worst_gap = math.inf
    for k in range(1, K + 1):
        gap = counterexample.staircase_gap(n, k, t)
        bound = counterexample.gap_bound(n, k)
        ok = bool(np.all((gap >= 0.0) & (gap <= bound)))
        margin = float(np.min(bound - gap))
        worst_gap = min(worst_gap, margin)
        rows.append({"check": "gap", "k": k, "max_gap": float(gap.max()), "bound": bound, "holds": ok})
        if not ok:
            verdict = FAIL
    oc = counterexample.on_curve_check(n, K, t)
    oc_ok = oc.product_margin >= 0.0 and (K < 2 or oc.min_margin >= 0.0)
    rows.append({"check": "on_curve", "k": K, "min_margin": oc.min_margin, "product_margin": oc.product_margin,
                 "holds": oc_ok})
    if not oc_ok:
        verdict = FAIL
    poly = counterexample.gamma_polyline(n, K, (t_lo, t_hi))
    ca = counterexample.chord_arc_estimate(poly, seed=cfg.seed)
    rows.append({"check": "chord_arc", "k": K, "estimate": ca})
    extra = [("chord_arc", ca), ("on_curve_product_margin", oc.product_margin)]
    out = [f"gap bounds {'hold' if verdict == PASS else 'fail'}", f"chord-arc {fmt(ca)}"]
    if cfg.flags["probe"]:
        try:
            k_list = [int(k) for k in cfg["k-list"].split(",")]
        except ValueError as exc:
            raise UsageError("--k-list must be comma-separated integers") from exc
        probe = counterexample.neighborhood_mass_probe(n, k_list, cfg.quadrature)
        for r in probe:
            rows.append({"check": "probe", "k": r.K, "epsilon": r.epsilon, "mass_over_epsilon": r.mass_over_epsilon,
                         "error": r.error})
        vals = [r.mass_over_epsilon for r in probe]
        increasing = all(b > a for a, b in zip(vals, vals[1:]))
        if not increasing:
            verdict = FAIL
        extra += [(f"mass_over_eps_K{r.K}", r.mass_over_epsilon) for r in probe]
        extra.append(("probe_increasing", str(increasing)))
        out.append("probe " + ", ".join(fmt(v) for v in vals))
    summary = _summary("staircase gap 0 <= h_k - h_(k-1) <= 2 pi 4^(-nk^2-2k), min margin", worst_gap,
                       cfg["grid"], {}, cfg.seed, verdict, extra)
    plot = None
    if cfg.flags["plot"]:
        xs, ys = svg.decimate(poly[:, 0], poly[:, 1])
        plot = svg.line_chart([(f"Gamma, K={K}", xs, ys)], title="staircase curve", xlabel="t", ylabel="h_K(t)")
    return Outcome(verdict, table_csv(rows, cfg.seed), summary, plot,
                   extra={"polyline.csv": polyline_csv(poly, cfg.seed)}, stdout="; ".join(out) + f" ({verdict})")


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


# -- runner ------------------------------------------------------------------------------

def run(config):
    """Execute ``config``, write its files and return the exit status."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BudgetExceededWarning)
        outcome = HANDLERS[config.command](config)
    budget = any(issubclass(w.category, BudgetExceededWarning) for w in caught)
    verdict = worse_verdict(outcome.verdict, INCONCLUSIVE) if budget else outcome.verdict
    out = config["output-dir"]
    os.makedirs(out, exist_ok=True)
    summary = f"command = {config.command}\n" + outcome.summary
    if budget:
        summary += "budget = exceeded\n"
    summary += f"overall_verdict = {verdict}\n"
    files = {"report.csv": outcome.csv, "summary.txt": summary, **outcome.extra}
    if config.flags.get("plot") and outcome.plot:
        files["plot.svg"] = outcome.plot
    for name, text in files.items():
        with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if outcome.stdout:
        print(outcome.stdout)
    return EXIT[verdict]


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE
    try:
        return run(resolve(args))
    except (UsageError, FormatError, DecayViolated) as exc:
        print(f"qcmlab {args.command}: error: {exc}", file=sys.stderr)
        return USAGE
    except (QCMError, ValueError) as exc:
        print(f"qcmlab {args.command}: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
