"""Outcome records of randomized checks and their CSV/summary serialization."""
from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


def fmt(value):
    """17 significant digits for floats, plain ``str`` otherwise."""
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if isinstance(value, np.ndarray):
        return ";".join(fmt(v) for v in value.ravel())
    if isinstance(value, (list, tuple)):
        return ";".join(fmt(v) for v in value)
    return str(value)


def worse_verdict(a, b):
    order = {PASS: 0, INCONCLUSIVE: 1, FAIL: 2}
    return a if order[a] >= order[b] else b


@dataclass
class CheckReport:
    """Result of a randomized property check.

    ``estimated_constant`` is the extreme sampled value (a max for ratios, a
    min for angle constants), ``worst_witness`` the inputs that produced it.
    """

    property_name: str
    estimated_constant: float
    trials: int
    worst_witness: dict
    master_seed: int
    verdict: str = PASS
    rows: list = field(default_factory=list)
    extreme: str = "max"

    def __post_init__(self):
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if self.verdict not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def merge(self, other):
        """Associative merge of two reports over disjoint trial sets."""
        if other.property_name != self.property_name or other.extreme != self.extreme:
            raise ValueError("cannot merge reports of different properties")
        better = max if self.extreme == "max" else min
        pick_self = better(self.estimated_constant, other.estimated_constant) == self.estimated_constant
        return CheckReport(
            self.property_name,
            self.estimated_constant if pick_self else other.estimated_constant,
            self.trials + other.trials,
            self.worst_witness if pick_self else other.worst_witness,
            self.master_seed,
            worse_verdict(self.verdict, other.verdict),
            self.rows + other.rows,
            self.extreme,
        )

    def to_csv(self):
        buf = io.StringIO()
        keys = []
        for row in self.rows:
            for k in row:
                if k not in keys:
                    keys.append(k)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seed"] + keys)
        for row in self.rows:
            writer.writerow([str(self.master_seed)] + [fmt(row.get(k, "")) for k in keys])
        return buf.getvalue()

    def summary(self):
        lines = [
            f"property = {self.property_name}",
            f"estimated_constant = {fmt(self.estimated_constant)}",
            f"trials = {self.trials}",
            f"verdict = {self.verdict}",
            f"seed = {self.master_seed}",
        ]
        for k, v in self.worst_witness.items():
            lines.append(f"witness.{k} = {fmt(v)}")
        return "\n".join(lines) + "\n"
