"""Plain-text formats: grid measures, IFS specs, measure strings and polyline CSV.

Grid file: a header ``n=<dim> origin=<x,y,..> cell=<h> shape=<k,l,..>`` followed
by whitespace-separated cell masses in row-major order.  IFS file: an optional
``n=<dim>`` line, then one similarity per line, ``scale tx ty [tz] [angles]``.
``#`` starts a comment in both.
"""
import csv
import io
import math

import numpy as np

from .measures import (Ball, DistancePower, GaussianWeight, GridMeasure, PowerWeight, RieszProduct,
                       SelfSimilarSet, Truncated, UniformBall, UniformBox, cantor_four_corner, lebesgue)
from .reports import fmt


class FormatError(ValueError):
    """Malformed file or measure string."""


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise FormatError(f"bad {what}: {text!r}") from exc


def _strip_comments(text):
    return [ln.split("#", 1)[0].strip() for ln in text.splitlines()]


# -- grid measures -------------------------------------------------------------

def parse_grid(text):
    lines = [ln for ln in _strip_comments(text) if ln]
    if not lines:
        raise FormatError("empty grid file")
    header = {}
    for tok in lines[0].split():
        if "=" not in tok:
            raise FormatError(f"bad header token {tok!r}")
        k, v = tok.split("=", 1)
        header[k] = v
    missing = {"n", "origin", "cell", "shape"} - header.keys()
    if missing:
        raise FormatError(f"grid header lacks {sorted(missing)}")
    try:
        n = int(header["n"])
        shape = tuple(int(v) for v in header["shape"].split(","))
    except ValueError as exc:
        raise FormatError("bad n or shape in grid header") from exc
    origin = _floats(header["origin"], "origin")
    cell = _floats(header["cell"], "cell")
    if len(shape) != n or len(origin) != n or len(cell) != 1:
        raise FormatError("grid header dimensions disagree")
    try:
        masses = np.array([float(v) for ln in lines[1:] for v in ln.split()])
    except ValueError as exc:
        raise FormatError("non-numeric cell mass") from exc
    if masses.size != math.prod(shape):
        raise FormatError(f"expected {math.prod(shape)} masses, found {masses.size}")
    try:
        return GridMeasure(origin, cell[0], masses.reshape(shape))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def format_grid(mu):
    head = (f"n={mu.n} origin={','.join(fmt(v) for v in mu.origin)} cell={fmt(mu.cell)} "
            f"shape={','.join(str(s) for s in mu.masses.shape)}")
    rows = mu.masses.reshape(-1, mu.masses.shape[-1])
    return head + "\n" + "\n".join(" ".join(fmt(v) for v in r) for r in rows) + "\n"


def read_grid(path):
    with open(path, encoding="utf-8") as fh:
        return parse_grid(fh.read())


def write_grid(mu, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_grid(mu))


# -- IFS --------------------------------------------------------------------------

def parse_ifs(text, n=None, depth=4):
    maps = []
    for ln in _strip_comments(text):
        if not ln:
            continue
        if ln.startswith("n="):
            try:
                n = int(ln[2:])
            except ValueError as exc:
                raise FormatError(f"bad dimension line {ln!r}") from exc
            continue
        try:
            vals = [float(v) for v in ln.split()]
        except ValueError as exc:
            raise FormatError(f"bad IFS line {ln!r}") from exc
        maps.append(vals)
    if not maps:
        raise FormatError("IFS file has no maps")
    n = n or 2
    parsed = []
    for vals in maps:
        if len(vals) < 1 + n:
            raise FormatError(f"IFS line needs scale and {n} translation components")
        angles = vals[1 + n:]
        parsed.append((vals[0], tuple(vals[1:1 + n]), tuple(angles)) if angles else (vals[0], tuple(vals[1:1 + n])))
    try:
        return SelfSimilarSet(tuple(parsed), n=n, depth=depth)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def read_ifs(path, n=None, depth=4):
    with open(path, encoding="utf-8") as fh:
        return parse_ifs(fh.read(), n, depth)


def anchor_set(spec, depth=4):
    """``cantor[:depth]``, ``points:x,y;x,y;...`` or a path to an IFS file."""
    if spec.startswith("cantor"):
        _, _, arg = spec.partition(":")
        return cantor_four_corner(int(arg) if arg else depth)
    if spec.startswith("points:"):
        pts = [_floats(p, "point") for p in spec[len("points:"):].split(";") if p.strip()]
        if len({len(p) for p in pts}) != 1:
            raise FormatError("points must share one dimension")
        return np.array(pts)
    return read_ifs(spec, depth=depth)


# -- measure strings -------------------------------------------------------------

FAMILIES = ("lebesgue", "uniform-ball", "uniform-box", "power", "gaussian", "riesz", "distance", "grid",
            "truncated")


def parse_measure(spec):
    """``family:param,param,...``; see ``FAMILIES``."""
    family, _, arg = spec.strip().partition(":")
    try:
        if family == "lebesgue":
            return lebesgue(int(arg) if arg else 2)
        if family == "uniform-ball":
            v = _floats(arg, "uniform-ball parameters")
            if not v:
                return UniformBall()
            return UniformBall(v[:-1], v[-1])
        if family == "uniform-box":
            v = _floats(arg, "uniform-box parameters")
            if len(v) % 2:
                raise FormatError("uniform-box needs centre and half-lengths")
            k = len(v) // 2
            return UniformBox(v[:k], v[k:])
        if family == "power":
            v = _floats(arg, "power parameters")
            return PowerWeight(v[0], int(v[1]) if len(v) > 1 else 2)
        if family == "gaussian":
            v = _floats(arg, "gaussian parameters")
            return GaussianWeight(v[0] if v else 1.0, int(v[1]) if len(v) > 1 else 2)
        if family == "riesz":
            v = _floats(arg, "riesz parameters")
            return RieszProduct(int(v[0]), int(v[1]) if len(v) > 1 else 2)
        if family == "distance":
            p, _, rest = arg.partition(",")
            return DistancePower(anchor_set(rest or "cantor"), float(p))
        if family == "grid":
            return read_grid(arg)
        if family == "truncated":
            r, _, inner = arg.partition(",")
            return Truncated(parse_measure(inner), float(r))
    except (ValueError, IndexError, OSError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"bad measure {spec!r}: {exc}") from exc
    raise FormatError(f"unknown measure family {family!r}; expected one of {', '.join(FAMILIES)}")


def parse_point(text):
    return np.array(_floats(text, "point"))


def parse_region(text, n):
    """``ball:x,y,r`` or ``box:x,y,hx,hy``."""
    kind, _, arg = text.partition(":")
    v = _floats(arg, "region")
    if kind == "ball" and len(v) == n + 1:
        return Ball(v[:n], v[n])
    if kind == "box" and len(v) == 2 * n:
        from .measures import OrientedBox
        return OrientedBox(v[:n], v[n:])
    raise FormatError(f"bad region {text!r}")


# -- CSV -------------------------------------------------------------------------------

def polyline_csv(poly, seed=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((["seed"] if seed is not None else []) + ["t", "h"])
    for t, h in poly:
        w.writerow(([str(seed)] if seed is not None else []) + [fmt(float(t)), fmt(float(h))])
    return buf.getvalue()


def table_csv(rows, seed):
    """Rows of dicts (or named tuples) to CSV with a leading seed column."""
    rows = [r._asdict() if hasattr(r, "_asdict") else dict(r) for r in rows]
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed"] + keys)
    for r in rows:
        w.writerow([str(seed)] + [fmt(r.get(k, "")) for k in keys])
    return buf.getvalue()
