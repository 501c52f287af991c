"""Parameter sweeps producing one error row per (cell, seed)."""
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import itertools
import json
import math
import re
import sys
import time

import yaml

from . import rng as _rng
from .assign import classify_all
from .baseline import BlockPowerConfig, block_power_stream
from .memory import MemoryMeter
from .metrics import misclassification
from .sbm import SbmParams, generate, open_stream, restrict_to_green
from .streaming import StreamConfig, offline_stream, online_stream

MODES = ("partial", "offline", "online", "blockpower")
COLUMNS = ("seed", "n", "K", "f_n", "gamma", "h_n", "T", "algorithm", "epsilon", "peak_bits",
           "runtime_ms", "error")

_TERM = re.compile(r"^(?:(?P<num>[0-9.eE+-]+)|n\^(?P<pow>[0-9.eE+-]+)|n|(?:ln|log)(?:\^(?P<lpow>[0-9.eE+-]+))?\s*n)$")


def parse_f(expr):
    """``f(n)`` from a number or a product of ``c``, ``n^a``, ``ln^b n`` terms.

    >>> round(parse_f("ln^2 n")(100), 4)
    21.2076
    """
    if isinstance(expr, (int, float)):
        val = float(expr)
        return lambda n: val
    terms = [t.strip() for t in str(expr).split("*")]
    parsed = []
    for t in terms:
        m = _TERM.match(t)
        if not m:
            raise ValueError(f"cannot parse f(n) term {t!r}")
        parsed.append(m.groupdict() | {"raw": t})

    def f(n):
        out = 1.0
        for p in parsed:
            if p["num"] is not None:
                out *= float(p["num"])
            elif p["pow"] is not None:
                out *= n ** float(p["pow"])
            elif p["raw"] == "n":
                out *= n
            else:
                out *= math.log(n) ** (float(p["lpow"]) if p["lpow"] else 1.0)
        return out
    return f


def _listify(x, default):
    if x is None:
        return list(default)
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass
class ExperimentSpec:
    """Sweep grid. ``T`` entries are fractions of ``n``; ``f_n`` entries are expressions."""
    mode: str = "partial"
    n: list = field(default_factory=lambda: [2000])
    K: list = field(default_factory=lambda: [2])
    a: list = field(default_factory=lambda: [8.0])
    b: list = field(default_factory=lambda: [2.0])
    f_n: list = field(default_factory=lambda: ["ln^2 n"])
    fractions: list = None
    gamma: list = field(default_factory=lambda: [1.0])
    h_n: list = field(default_factory=lambda: [1.0])
    T: list = field(default_factory=lambda: [1.0])
    g_n: list = field(default_factory=lambda: [1.0])
    seeds: list = field(default_factory=lambda: [0])
    output: str = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for name in ("n", "K", "a", "b", "f_n", "gamma", "h_n", "T", "g_n", "seeds"):
            val = _listify(getattr(self, name), [])
            if not val:
                raise ValueError(f"grid {name!r} is empty")
            setattr(self, name, val)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError("spec file must be a mapping")
        return cls.from_dict(data)

    def cells(self):
        if self.mode == "partial":
            extra = [("gamma", self.gamma)]
        elif self.mode == "blockpower":
            extra = [("g_n", self.g_n), ("T", self.T)]
        else:
            extra = [("h_n", self.h_n), ("T", self.T)]
        names = ["n", "K", "a", "b", "f_n"] + [e[0] for e in extra]
        grids = [self.n, self.K, self.a, self.b, self.f_n] + [e[1] for e in extra]
        for combo in itertools.product(*grids):
            cell = dict(zip(names, combo))
            cell["mode"] = self.mode
            cell["fractions"] = self.fractions
            yield cell


def run_cell(cell, seed):
    """One sweep row. Failures are reported in the ``error`` field."""
    n = int(cell["n"])
    row = {"seed": seed, "n": n, "K": int(cell["K"]), "f_n": None, "gamma": cell.get("gamma", ""),
           "h_n": cell.get("h_n", cell.get("g_n", "")), "T": "", "algorithm": cell["mode"],
           "epsilon": "", "peak_bits": "", "runtime_ms": "", "error": ""}
    t0 = time.perf_counter()
    try:
        f_val = parse_f(cell["f_n"])(n)
        row["f_n"] = round(f_val, 6)
        params = SbmParams(n=n, K=row["K"], a=float(cell["a"]), b=float(cell["b"]), f_n=f_val,
                           cluster_fractions=cell.get("fractions"))
        truth, graph = generate(params, seed)
        meter = MemoryMeter()
        mode = cell["mode"]
        if mode == "partial":
            gamma = float(cell["gamma"])
            m = max(params.K, int(round(gamma * n)))
            green = _rng.generator(seed, _rng.ALGORITHM).choice(n, size=min(m, n), replace=False)
            view = restrict_to_green(graph, green)
            est = classify_all(view, params.K, seed=seed, meter=meter)
            row["T"] = view.m
        else:
            T = max(1, int(round(float(cell["T"]) * n)))
            row["T"] = T
            stream = open_stream(graph, seed)
            if mode == "blockpower":
                est = block_power_stream(stream, BlockPowerConfig(n, params.p, float(cell["g_n"]), T),
                                         params.K, seed=seed, meter=meter).assignment
            elif mode == "offline":
                est = offline_stream(stream, StreamConfig(n, float(cell["h_n"]), T=T, p=params.p),
                                     params.K, seed=seed, meter=meter).assignment
            else:
                est = online_stream(stream, StreamConfig(n, float(cell["h_n"]), T=T, p=params.p),
                                    params.K, seed=seed, meter=meter).assignment(params.K)
        row["epsilon"] = round(misclassification(truth, est).epsilon, 10)
        row["peak_bits"] = meter.peak
    except Exception as exc:  # a failing cell must not abort the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["runtime_ms"] = round(1000 * (time.perf_counter() - t0), 1)
    return row


def _run(args):
    return run_cell(*args)


def run_sweep(spec, jobs=1):
    """Rows for every (cell, seed), ordered by cell then seed."""
    tasks = [(cell, int(s)) for cell in spec.cells() for s in spec.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run, tasks))
    return [_run(t) for t in tasks]


def write_rows(rows, path, fmt="csv"):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        if fmt == "json":
            json.dump(rows, fh, indent=1)
            fh.write("\n")
        else:
            w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
