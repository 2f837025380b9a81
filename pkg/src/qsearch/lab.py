"""Experiment harness: sweeps, CSV persistence, scaling fits and tables."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, fields

import numpy as np

from .grover import classical_baselines, optimal_queries
from .hilbert import NormDriftError
from .lattice import DEFAULT_MAX_N, Lattice, make_lattice
from .spatial import (
    ConsistencyError,
    SearchConfig,
    Tulsi,
    default_cos_delta,
    lower_bound_check,
    run_search,
)
from .walk import tune_tau

log = logging.getLogger(__name__)

MODES = ("grover", "spatial", "tulsi")
CSV_COLUMNS = (
    "mode", "d", "L", "N", "t1", "tau", "cos_delta", "t2_star", "p_max",
    "effective_queries", "walk_steps_total", "runtime_ms", "status",
)
DONE = ("ok", "budget-limited")


class FitError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def max_n_from_env(default: int = DEFAULT_MAX_N) -> int:
    raw = os.environ.get("QSEARCH_MAX_N")
    if not raw:
        return default
    try:
        return int(float(raw))
    except ValueError:
        raise ConfigError(f"QSEARCH_MAX_N={raw!r} is not a number") from None


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


@dataclass
class SearchRecord:
    mode: str
    d: int | None
    L: int | None
    N: int
    t1: int | None
    tau: float | None
    cos_delta: float | None
    t2_star: int | None = None
    p_max: float | None = None
    effective_queries: float | None = None
    walk_steps_total: int | None = None
    runtime_ms: float | None = None
    status: str = "ok"

    @property
    def key(self) -> tuple[str, ...]:
        return record_key(self.mode, self.d, self.L, self.N, self.t1, self.cos_delta)

    def row(self) -> list[str]:
        return [fmt(getattr(self, f.name)) for f in fields(self)]


def record_key(mode, d, L, n, t1, cos_delta) -> tuple:
    # sortable and recoverable from the CSV columns alone
    return (mode, d or 0, L or 0, n, t1 or 0, fmt(cos_delta))


def _key_from_row(row: dict) -> tuple:
    num = lambda s: int(s) if s else 0
    return (row["mode"], num(row["d"]), num(row["L"]), int(row["N"]), num(row["t1"]), row["cos_delta"])


def config_seed(seed: int, key: tuple) -> int:
    """Per-config 64-bit seed derived from the sweep seed and the config key."""
    h = hashlib.sha256(repr((seed, key)).encode()).digest()
    return int.from_bytes(h[:8], "little")


def parse_cos_delta(label, n: int) -> float | None:
    """Resolve a cos(delta) setting: a number, "auto", "auto:k" or "none"."""
    if label is None:
        return None
    if isinstance(label, (int, float)):
        return float(label)
    s = str(label).strip().lower()
    if s in ("none", "off", ""):
        return None
    if s == "auto":
        return default_cos_delta(n)
    if s.startswith("auto:"):
        return default_cos_delta(n, float(s[5:]))
    return float(s)


@dataclass
class SweepSpec:
    mode: str
    dims: list[int] = field(default_factory=list)
    sides: list[int] = field(default_factory=list)
    t1_values: list[int] = field(default_factory=lambda: [3])
    tau: float | None = None  # None: tune per (d, L, t1)
    cos_delta_values: list = field(default_factory=lambda: ["auto"])
    ns: list[int] = field(default_factory=list)  # grover mode
    seed: int = 0
    output_path: str | None = None
    t2_max: int | None = None
    order: str = "reflect"
    stop_at_peak: bool = True
    jobs: int = 1
    max_n: int | None = DEFAULT_MAX_N
    timing: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


@dataclass(frozen=True)
class _Job:
    mode: str
    d: int | None
    L: int | None
    n: int
    t1: int | None
    cos_delta: float | None

    @property
    def key(self):
        return record_key(self.mode, self.d, self.L, self.n, self.t1, self.cos_delta)


def plan(spec: SweepSpec) -> list[_Job]:
    """Expand a spec into jobs, validating every lattice before anything runs."""
    if spec.mode == "grover":
        for n in spec.ns:
            if n < 1:
                raise ConfigError(f"invalid database size {n}")
        return [_Job("grover", None, None, n, None, None) for n in spec.ns]
    jobs = []
    for d in spec.dims:
        for L in spec.sides:
            lat = make_lattice(d, L, spec.max_n)
            for t1 in spec.t1_values:
                if t1 < 1:
                    raise ConfigError("t1 must be >= 1")
                if spec.mode == "spatial":
                    jobs.append(_Job("spatial", d, L, lat.N, t1, None))
                    continue
                for label in spec.cos_delta_values:
                    cd = parse_cos_delta(label, lat.N)
                    if cd is not None and not 0.0 < cd <= 1.0:
                        raise ConfigError(f"cos_delta {cd} outside (0, 1]")
                    jobs.append(_Job("tulsi", d, L, lat.N, t1, cd))
    # duplicates (e.g. repeated list entries) collapse to one run
    return sorted({j.key: j for j in jobs}.values(), key=lambda j: j.key)


def _run_job(job: _Job, spec: SweepSpec, tau_cache: dict) -> SearchRecord:
    start = time.perf_counter()
    if job.mode == "grover":
        q, p = optimal_queries(job.n)
        rec = SearchRecord("grover", None, None, job.n, None, None, None,
                           t2_star=q, p_max=p, effective_queries=q / math.sqrt(p), walk_steps_total=0)
    else:
        lat = make_lattice(job.d, job.L, spec.max_n)
        tau = spec.tau if spec.tau is not None else tau_cache.get((job.d, job.L, job.t1))
        reg = None if job.cos_delta is None else Tulsi(job.cos_delta, spec.order)
        cfg = SearchConfig(lat, t1=job.t1, tau=tau, regulator=reg, t2_max=spec.t2_max,
                           stop_at_peak=spec.stop_at_peak)
        r = run_search(cfg)
        lower_bound_check(lat, r)
        rec = SearchRecord(job.mode, job.d, job.L, job.n, job.t1, r.tau, job.cos_delta,
                           t2_star=r.t2_star, p_max=r.p_max, effective_queries=r.effective_queries,
                           walk_steps_total=r.walk_steps_total, status=r.status)
    if spec.timing:
        rec.runtime_ms = round(1000.0 * (time.perf_counter() - start), 3)
    return rec


def _error_record(job: _Job, exc: Exception) -> SearchRecord:
    return SearchRecord(job.mode, job.d, job.L, job.n, job.t1, None, job.cos_delta,
                        status=f"error:{type(exc).__name__}")


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(records, key=lambda r: r.key):
        w.writerow(r.row())
    return buf.getvalue()


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".sweep-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv_rows(path: str) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ConfigError(f"{path} does not have the sweep CSV header")
    return rows


def _record_from_row(row: dict) -> SearchRecord:
    conv = {"d": int, "L": int, "N": int, "t1": int, "t2_star": int, "walk_steps_total": int,
            "tau": float, "cos_delta": float, "p_max": float, "effective_queries": float,
            "runtime_ms": float}
    kw = {}
    for k in CSV_COLUMNS:
        v = row[k]
        kw[k] = conv[k](v) if k in conv and v != "" else (v if k in ("mode", "status") else None)
    return SearchRecord(**kw)


def sweep(spec: SweepSpec) -> list[SearchRecord]:
    """Run every configuration of ``spec``; rows come back sorted by config key.

    With ``output_path`` set, completed rows already in that file are kept
    and skipped, and the file is rewritten atomically after every new row.
    Failures become ``error:<type>`` rows and the sweep carries on.
    """
    jobs = plan(spec)
    done: dict[tuple, SearchRecord] = {}
    if spec.output_path and os.path.exists(spec.output_path):
        for row in read_csv_rows(spec.output_path):
            if row["status"] in DONE:
                rec = _record_from_row(row)
                done[_key_from_row(row)] = rec
        log.info("resuming: %d completed rows in %s", len(done), spec.output_path)
    todo = [j for j in jobs if j.key not in done]
    results = dict(done)

    tau_cache: dict = {}
    if spec.mode != "grover" and spec.tau is None:
        # tune once per geometry, up front, so the workers share no mutable state
        for j in todo:
            k = (j.d, j.L, j.t1)
            if k not in tau_cache:
                tau_cache[k] = tune_tau(Lattice(j.d, j.L), j.t1)[0]

    def emit(job, rec):
        results[job.key] = rec
        log.info("%s d=%s L=%s t1=%s cos_delta=%s -> %s", job.mode, job.d, job.L, job.t1, fmt(job.cos_delta), rec.status)
        if spec.output_path:
            _write_atomic(spec.output_path, records_to_csv(results.values()))

    def guarded(job):
        try:
            return _run_job(job, spec, tau_cache)
        except (ConsistencyError, NormDriftError, ArithmeticError, ValueError) as exc:
            log.error("config %s failed: %s", job.key, exc)
            return _error_record(job, exc)

    if spec.jobs == 1:
        for job in todo:
            emit(job, guarded(job))
    else:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            futs = {pool.submit(guarded, j): j for j in todo}
            for fut in as_completed(futs):
                emit(futs[fut], fut.result())
    if spec.output_path and not todo:
        _write_atomic(spec.output_path, records_to_csv(results.values()))
    return sorted(results.values(), key=lambda r: r.key)


# ---- config files ----

_INT_LISTS = {"dims": "dims", "d": "dims", "sides": "sides", "l": "sides", "t1": "t1_values",
              "t1_values": "t1_values", "ns": "ns", "n": "ns"}


def parse_int_list(text: str) -> list[int]:
    """"3,4,5", "3..5" and mixtures such as "2,4..6" all work."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(float(part)))
    return out


def parse_config(text: str) -> SweepSpec:
    """Flat ``key = value`` lines; '#' starts a comment; lists are comma-separated."""
    kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        try:
            if key in _INT_LISTS:
                kw[_INT_LISTS[key]] = parse_int_list(val)
            elif key == "mode":
                kw["mode"] = val
            elif key == "tau":
                kw["tau"] = None if val.lower() in ("auto", "tune", "") else float(val)
            elif key in ("cos_delta", "cos_deltas", "cos_delta_values"):
                kw["cos_delta_values"] = [v.strip() for v in val.split(",") if v.strip()]
            elif key in ("seed", "jobs", "t2_max", "max_n"):
                kw[key] = int(float(val))
            elif key in ("output", "output_path"):
                kw["output_path"] = val
            elif key == "order":
                kw["order"] = val
            elif key in ("stop_at_peak", "timing"):
                kw[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from None
    if "mode" not in kw:
        raise ConfigError("config needs a mode")
    return SweepSpec(**kw)


def load_config(path: str) -> SweepSpec:
    with open(path) as f:
        return parse_config(f.read())


# ---- fits and tables ----

@dataclass(frozen=True)
class FitResult:
    a: float
    b: float
    residual_rms: float
    points_used: int


def fit_inverse(xs, ys) -> FitResult:
    """Unweighted least squares of y = a + b/x."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("xs and ys must be 1-d and the same length")
    if np.any(x <= 0):
        raise FitError("xs must be positive")
    if np.unique(x).size < 2:
        raise FitError("need at least 2 distinct x values")
    A = np.column_stack([np.ones_like(x), 1.0 / x])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([a, b])
    return FitResult(float(a), float(b), float(np.sqrt(np.mean(resid**2))), int(x.size))


@dataclass(frozen=True)
class TableRow:
    n: int
    classical_binary: int
    classical_unsorted_mean: float
    quantum_q: int
    quantum_success: float


def grover_table(ns) -> list[TableRow]:
    if not ns:
        raise ValueError("need at least one N")
    rows = []
    for n in ns:
        c = classical_baselines(n)
        q, p = optimal_queries(n)
        rows.append(TableRow(n, c.binary_sorted, c.unsorted_mean_with_memory, q, p))
    return rows


_TABLE_HEAD = ("N", "classical_binary", "classical_unsorted_mean", "quantum_Q", "quantum_success")


def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_TABLE_HEAD)
    for r in rows:
        w.writerow([r.n, r.classical_binary, fmt(r.classical_unsorted_mean), r.quantum_q, fmt(r.quantum_success)])
    return buf.getvalue()


def table_text(rows) -> str:
    cells = [_TABLE_HEAD] + [
        (str(r.n), str(r.classical_binary), f"{r.classical_unsorted_mean:g}", str(r.quantum_q), f"{r.quantum_success:.6f}")
        for r in rows
    ]
    widths = [max(len(c[i]) for c in cells) for i in range(len(_TABLE_HEAD))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in cells) + "\n"


# ---- figure reproductions ----

def _feasible(d: int, L: int, max_n: int | None) -> bool:
    if max_n is not None and L**d > max_n:
        log.warning("skipping d=%d L=%d: N=%d exceeds the size cap %d", d, L, L**d, max_n)
        return False
    return True


def reproduce_fig3(Ls, ds, t1: int = 3, max_n: int | None = DEFAULT_MAX_N, **kw):
    """Effective queries / sqrt(N) against d, fitted to a + b/d.

    Returns (records, fit); fit is None when fewer than two distinct d
    values survive.
    """
    records = []
    for d in ds:
        for L in Ls:
            if not _feasible(d, L, max_n):
                continue
            spec = SweepSpec("spatial", dims=[d], sides=[L], t1_values=[t1], max_n=max_n, **kw)
            records.extend(sweep(spec))
    good = [r for r in records if r.status in DONE]
    try:
        fit = fit_inverse([r.d for r in good], [r.effective_queries / math.sqrt(r.N) for r in good])
    except FitError as exc:
        log.warning("fig3 fit skipped: %s", exc)
        fit = None
    else:
        log.info("fig3 fit a=%.4f b=%.4f (pi/4 = %.4f)", fit.a, fit.b, math.pi / 4)
    return records, fit


def fig4_y(r: SearchRecord) -> float:
    return r.effective_queries / math.sqrt(r.N * math.log2(r.N))


def reproduce_fig4(Ls, cos_deltas=("auto",), t1: int = 3, max_n: int | None = DEFAULT_MAX_N,
                   control: bool = True, **kw):
    """Regulated d=2 searches; y = effective_queries/sqrt(N log2 N) fitted to a + b/L.

    ``cos_deltas`` entries are numbers, "auto" or "auto:k". With ``control``
    an unregulated column is added under the label "none". Returns
    (records, {label: FitResult or None}).
    """
    labels = [str(c) for c in cos_deltas]
    if control and "none" not in labels:
        labels.append("none")
    records, fits = [], {}
    Ls = [L for L in Ls if _feasible(2, L, max_n)]
    for label in labels:
        col = []
        for L in Ls:
            if label == "none":
                spec = SweepSpec("spatial", dims=[2], sides=[L], t1_values=[t1], max_n=max_n, **kw)
            else:
                spec = SweepSpec("tulsi", dims=[2], sides=[L], t1_values=[t1], cos_delta_values=[label],
                                 max_n=max_n, **kw)
            col.extend(sweep(spec))
        records.extend(col)
        good = [r for r in col if r.status in DONE]
        try:
            fits[label] = fit_inverse([r.L for r in good], [fig4_y(r) for r in good])
        except FitError as exc:
            log.warning("fig4 fit for cos_delta=%s skipped: %s", label, exc)
            fits[label] = None
    return records, fits
