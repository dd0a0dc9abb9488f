"""File formats, configuration and report generation.

Parameter documents are flat JSON objects holding the dataclass field names
plus ``"measure"`` (``"P"``, ``"Q"``) or ``"model": "hn-q"`` for the
Heston-Nandi risk-neutral comparator.  Floats are written with ``repr`` so
they re-parse to the same doubles; CSV reports use 10 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .calibration import OptionQuote
from .dynamics import DVGParams, QParams
from .errors import ValidationError
from .hn import HNRiskNeutral
from .pricing import FourierConfig, price_fourier_strikes, price_mc_strikes

__all__ = [
    "Config",
    "params_to_dict",
    "params_from_dict",
    "load_params",
    "save_params",
    "read_returns",
    "read_surface",
    "annual_to_per_step",
    "fmt",
    "TABLE1_MODEL",
    "TABLE1_PAPER",
    "run_table1",
    "write_table1",
    "read_table1",
]

STEPS_PER_YEAR = {"trading/252": 252, "act/365": 365, "act/360": 360}


def fmt(x) -> str:
    """Report number format: 10 significant digits, '.' decimal separator."""
    return f"{float(x):.10g}"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class Config:
    """Settings shared by the command-line front end; unknown keys are rejected."""

    command: str = "price"
    inputs: list = field(default_factory=list)
    output: str | None = None
    seed: int = 0
    quad_order: int = 10
    u_max: float = 200.0
    day_count: str = "trading/252"
    moneyness: tuple | None = (0.975, 1.025)
    n_paths: int = 100_000
    steps_per_month: int = 30

    COMMANDS = ("price", "density", "simulate", "estimate", "calibrate", "map-q", "table1",
                "coefs")

    def __post_init__(self):
        errors = []
        if self.command not in self.COMMANDS:
            errors.append(f"unknown command {self.command!r}")
        if not (isinstance(self.quad_order, int) and 1 <= self.quad_order <= 256):
            errors.append(f"quad_order must be an integer in [1, 256], got {self.quad_order!r}")
        if not self.u_max > 0:
            errors.append(f"u_max must be > 0, got {self.u_max}")
        if self.day_count not in STEPS_PER_YEAR:
            errors.append(f"day_count must be one of {sorted(STEPS_PER_YEAR)}")
        if self.moneyness is not None:
            lo, hi = self.moneyness
            if not 0 < lo < hi:
                errors.append(f"moneyness bounds must satisfy 0 < lo < hi, got {self.moneyness}")
            self.moneyness = (float(lo), float(hi))
        if not (isinstance(self.seed, int) and self.seed >= 0):
            errors.append(f"seed must be a non-negative integer, got {self.seed!r}")
        if errors:
            raise ValidationError("invalid configuration: " + "; ".join(errors), errors)

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValidationError(f"unknown configuration keys: {unknown}",
                                  [f"unknown key {k!r}" for k in unknown])
        return cls(**d)

    @classmethod
    def from_file(cls, path, **overrides) -> "Config":
        with open(path) as fh:
            d = json.load(fh)
        d.update(overrides)
        return cls.from_dict(d)

    @property
    def steps_per_year(self) -> int:
        return STEPS_PER_YEAR[self.day_count]

    def to_dict(self) -> dict:
        return asdict(self)


def annual_to_per_step(rate: float, steps_per_year: int = 252) -> float:
    """Simple per-step rate: 0.0252 a year over 252 steps is 0.0001 per step."""
    return rate / steps_per_year


# ---------------------------------------------------------------------------
# parameter documents
# ---------------------------------------------------------------------------

_PARAM_TYPES = {"P": DVGParams, "Q": QParams}


def params_to_dict(p) -> dict:
    if isinstance(p, HNRiskNeutral):
        d = {"model": "hn-q"}
    elif isinstance(p, (DVGParams, QParams)):
        d = {"measure": p.measure}
    else:
        raise ValidationError(f"cannot serialise {type(p).__name__}")
    d.update({f.name: getattr(p, f.name) for f in fields(p)})
    return d


def params_from_dict(d: dict):
    d = dict(d)
    if d.get("model") == "hn-q":
        d.pop("model")
        cls = HNRiskNeutral
    else:
        measure = d.pop("measure", None)
        if measure not in _PARAM_TYPES:
            raise ValidationError(f"parameter document needs \"measure\": \"P\" or \"Q\", "
                                  f"got {measure!r}")
        cls = _PARAM_TYPES[measure]
    known = {f.name for f in fields(cls)}
    errors = [f"unknown field {k!r}" for k in sorted(set(d) - known)]
    for k, v in d.items():
        if k in known and v is not None and not isinstance(v, (int, float)):
            errors.append(f"field {k!r} must be a number, got {v!r}")
    if errors:
        raise ValidationError(f"invalid {cls.__name__} document: " + "; ".join(errors), errors)
    return cls(**{k: (float(v) if v is not None else None) for k, v in d.items()})


def load_params(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return params_from_dict(d)


def save_params(p, path) -> None:
    with open(path, "w") as fh:
        json.dump(params_to_dict(p), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# CSV inputs
# ---------------------------------------------------------------------------

def _rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            return None, []
        return header, [(i, row) for i, row in enumerate(reader, start=2)
                        if any(c.strip() for c in row)]


def _number(text, name, line, errors, positive=False):
    try:
        v = float(text)
    except (TypeError, ValueError):
        errors.append(f"line {line}: {name} {text!r} is not a number")
        return None
    if not math.isfinite(v):
        errors.append(f"line {line}: {name} must be finite, got {text!r}")
        return None
    if positive and not v > 0:
        errors.append(f"line {line}: {name} must be > 0, got {text!r}")
        return None
    return v


def read_returns(path):
    """Read ``date,logreturn`` or ``date,close`` (log-differenced); returns (dates, returns)."""
    header, rows = _rows(path)
    if header is None or not rows:
        raise ValidationError(f"{path}: no observations")
    if header[:2] not in (["date", "logreturn"], ["date", "close"]):
        raise ValidationError(f"{path}: header must be 'date,logreturn' or 'date,close', "
                              f"got {','.join(header)!r}")
    kind = header[1]
    errors, dates, values = [], [], []
    for line, row in rows:
        if len(row) != len(header):
            errors.append(f"line {line}: expected {len(header)} fields, got {len(row)}")
            continue
        v = _number(row[1], kind, line, errors, positive=(kind == "close"))
        if v is not None:
            dates.append(row[0].strip())
            values.append(v)
    if errors:
        raise ValidationError(f"{path}: {len(errors)} malformed rows", errors)
    values = np.array(values)
    if kind == "close":
        values = np.diff(np.log(values))
        dates = dates[1:]
    if len(values) == 0:
        raise ValidationError(f"{path}: no observations")
    return dates, values


SURFACE_HEADER = ["date", "expiry", "steps", "strike", "mid", "spot", "rate", "div_yield"]


def read_surface(path, annual_rates: bool = False, steps_per_year: int = 252):
    """Read a surface CSV into OptionQuote records.

    Rates and dividend yields are per step unless ``annual_rates``, in which
    case both are divided by ``steps_per_year``.
    """
    header, rows = _rows(path)
    if header is None or not rows:
        raise ValidationError(f"{path}: no quotes")
    if header != SURFACE_HEADER:
        raise ValidationError(f"{path}: header must be {','.join(SURFACE_HEADER)!r}")
    errors, quotes = [], []
    for line, row in rows:
        if len(row) != len(SURFACE_HEADER):
            errors.append(f"line {line}: expected {len(SURFACE_HEADER)} fields, got {len(row)}")
            continue
        rec = dict(zip(SURFACE_HEADER, (c.strip() for c in row)))
        n_err = len(errors)
        try:
            steps = int(rec["steps"])
            if steps < 1:
                errors.append(f"line {line}: steps must be >= 1, got {rec['steps']!r}")
        except ValueError:
            errors.append(f"line {line}: steps {rec['steps']!r} is not an integer")
            steps = None
        nums = {k: _number(rec[k], k, line, errors, positive=True)
                for k in ("strike", "mid", "spot")}
        for k in ("rate", "div_yield"):
            nums[k] = _number(rec[k], k, line, errors)
        if len(errors) > n_err:
            continue
        rate, dy = nums["rate"], nums["div_yield"]
        if annual_rates:
            rate = annual_to_per_step(rate, steps_per_year)
            dy = annual_to_per_step(dy, steps_per_year)
        quotes.append(OptionQuote(date=rec["date"], expiry=rec["expiry"], steps=steps,
                                  strike=nums["strike"], mid=nums["mid"], spot=nums["spot"],
                                  rate=rate, div_yield=dy))
    if errors:
        raise ValidationError(f"{path}: {len(errors)} malformed rows", errors)
    return quotes


def write_surface(quotes, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SURFACE_HEADER)
        for q in quotes:
            w.writerow([q.date, q.expiry, q.steps, repr(q.strike), repr(q.mid), repr(q.spot),
                        repr(q.rate), repr(q.div_yield)])


# ---------------------------------------------------------------------------
# Table 1 regeneration
# ---------------------------------------------------------------------------

# Table 1 caption parameters; the Q drift is the Esscher value -sigma^2/2 (printed as -0.005)
TABLE1_MODEL = QParams(r=0.0, sigma=0.1001, a=3.0, alpha0=0.05, alpha1=0.12, beta1=0.08,
                       h1=0.15)
TABLE1_STRIKES = (0.9, 0.95, 1.0, 1.05, 1.1)

# (maturity in months, strike): (MC, LB, UB, FT) as printed
TABLE1_PAPER = {
    (1, 0.90): (0.1626, 0.1611, 0.1640, 0.1632),
    (1, 0.95): (0.1344, 0.1330, 0.1357, 0.1350),
    (1, 1.00): (0.1102, 0.1089, 0.1114, 0.1108),
    (1, 1.05): (0.0898, 0.0886, 0.0909, 0.0905),
    (1, 1.10): (0.0728, 0.0717, 0.0739, 0.0736),
    (2, 0.90): (0.2041, 0.2019, 0.2062, 0.2048),
    (2, 0.95): (0.1790, 0.1770, 0.1810, 0.1797),
    (2, 1.00): (0.1567, 0.1547, 0.1586, 0.1573),
    (2, 1.05): (0.1369, 0.1351, 0.1388, 0.1375),
    (2, 1.10): (0.1195, 0.1178, 0.1213, 0.1201),
    (3, 0.90): (0.2363, 0.2337, 0.2390, 0.2373),
    (3, 0.95): (0.2130, 0.2105, 0.2156, 0.2139),
    (3, 1.00): (0.1919, 0.1895, 0.1944, 0.1926),
    (3, 1.05): (0.1729, 0.1705, 0.1752, 0.1734),
    (3, 1.10): (0.1557, 0.1534, 0.1580, 0.1561),
}

TABLE1_COLUMNS = ["maturity", "strike", "mc", "lb", "ub", "ft", "pass"]


def run_table1(config: Config | None = None, model: QParams = TABLE1_MODEL,
               fourier: FourierConfig | None = None):
    """Regenerate the 15-row Monte Carlo vs Fourier comparison.

    Returns (rows, summary) where each row is a dict with the report columns.
    """
    cfg = config or Config(command="table1")
    started = time.perf_counter()
    rows = []
    for month in (1, 2, 3):
        steps = month * cfg.steps_per_month
        ft = price_fourier_strikes(model, 1.0, TABLE1_STRIKES, steps, "call", config=fourier)
        mc = price_mc_strikes(model, 1.0, TABLE1_STRIKES, steps, n_paths=cfg.n_paths,
                              seed=cfg.seed + month)
        for K, f, m in zip(TABLE1_STRIKES, ft, mc):
            rows.append({"maturity": month, "strike": K, "mc": m.price, "lb": m.lower,
                         "ub": m.upper, "ft": float(f), "pass": bool(m.lower <= f <= m.upper)})
    n_pass = sum(r["pass"] for r in rows)
    summary = (f"table1: {n_pass}/{len(rows)} Fourier prices inside the 95% Monte Carlo "
               f"interval (N={cfg.n_paths}, seed={cfg.seed}, {cfg.steps_per_month} steps/month, "
               f"{time.perf_counter() - started:.1f}s)")
    return rows, summary


def write_table1(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE1_COLUMNS)
        for r in rows:
            w.writerow([r["maturity"], fmt(r["strike"]), fmt(r["mc"]), fmt(r["lb"]),
                        fmt(r["ub"]), fmt(r["ft"]), "PASS" if r["pass"] else "FAIL"])


def read_table1(path):
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            out.append({"maturity": int(r["maturity"]), "strike": float(r["strike"]),
                        "mc": float(r["mc"]), "lb": float(r["lb"]), "ub": float(r["ub"]),
                        "ft": float(r["ft"]), "pass": r["pass"] == "PASS"})
    return out
