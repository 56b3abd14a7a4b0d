"""Parameter scans over the (omega, Omega) plane and phase labelling.

Config files are flat ``key = value`` text. Blank lines and ``#`` comments
are ignored; keys are the field names of :class:`ScanConfig`. Ratios are
relative to ``omega0`` and ``Omega0``; ``gamma`` is in units of ``a``.

Example::

    mode = gaussian
    omega_min = 0.0
    omega_max = 2.0
    omega_steps = 21
    Omega_min = 0.0
    Omega_max = 2.5
    Omega_steps = 26
    gamma = 1.0
    J = 150
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .errors import CentralSpinError, ConfigError
from .exact import BISTABLE_TOL, NULL_TOL, build_liouvillian, observables, steady_state
from .gaussian import solve_gaussian
from .params import ModelParams
from .semiclassical import find_roots

log = logging.getLogger(__name__)

__all__ = [
    "PHASES",
    "FORMAT_VERSION",
    "ScanConfig",
    "parse_config",
    "load_config",
    "ScanPointRecord",
    "classify_phase",
    "scan",
    "gaussian_point",
    "exact_point",
    "records_to_csv",
    "records_to_json",
    "write_records",
]

PHASES = ("A", "B", "C", "D", "supercritical", "invalid")
FORMAT_VERSION = 1


@dataclass
class ScanConfig:
    """Grid, solver and output settings for :func:`scan`."""

    mode: str = "gaussian"
    omega_min: float = 0.0
    omega_max: float = 2.0
    omega_steps: int = 21
    Omega_min: float = 0.0
    Omega_max: float = 2.5
    Omega_steps: int = 26
    gamma: float = 1.0
    a: float = 1.0
    J: float = 150.0
    null_tol: float = NULL_TOL
    bistable_tol: float = BISTABLE_TOL
    overdamped_tol: float = 1e-3
    suspect_t_eff: float = 0.5
    reseed_every: int = 10
    grid_density: int = 40
    workers: int = 1
    memory_budget: Optional[int] = None
    out: Optional[str] = None
    format: str = "csv"
    timestamp: bool = True

    def __post_init__(self):
        if self.mode not in ("exact", "gaussian"):
            raise ConfigError(f"mode must be 'exact' or 'gaussian', got {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be 'csv' or 'json', got {self.format!r}")
        for name in ("omega_steps", "Omega_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.reseed_every < 1 or self.workers < 1:
            raise ConfigError("reseed_every and workers must be positive")

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.omega_steps)

    @property
    def Omegas(self) -> np.ndarray:
        return np.linspace(self.Omega_min, self.Omega_max, self.Omega_steps)

    def params(self, omega_ratio: float, Omega_ratio: float) -> ModelParams:
        return ModelParams.from_ratios(omega_ratio, Omega_ratio, gamma=self.gamma * self.a,
                                       J=self.J, a=self.a)


_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _convert(name: str, raw: str):
    f = {f.name: f for f in dataclasses.fields(ScanConfig)}[name]
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    raw = raw.strip()
    if "Optional" in kind and raw.lower() in ("", "none"):
        return None
    if "bool" in kind:
        if raw.lower() not in _BOOL:
            raise ValueError(f"expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if "int" in kind:
        return int(raw)
    if "float" in kind:
        return float(raw)
    return raw


def parse_config(text: str, source: str = "<config>", **overrides) -> ScanConfig:
    """Parse ``key = value`` lines into a :class:`ScanConfig`.

    Keyword ``overrides`` (already typed, ``None`` values ignored) take
    precedence over the file.

    Raises
    ------
    ConfigError
        With the offending line number and field name.
    """
    names = {f.name for f in dataclasses.fields(ScanConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in names:
            raise ConfigError(f"{source}:{lineno}: unknown field {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: field {key!r}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScanConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: str, **overrides) -> ScanConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=path, **overrides)


@dataclass(frozen=True)
class ScanPointRecord:
    """One grid point of a scan.

    ``validity`` holds flags such as ``converged``, ``expansion-valid``,
    ``truncation-ok``, ``bistable-suspect`` and the branch of the selected
    root (``branch-normal`` / ``branch-anomalous``).
    """

    omega_over_omega0: float
    Omega_over_Omega0: float
    gamma_over_a: float
    two_j: Optional[int]
    mode: str
    phase: str
    adr_re: float = math.nan
    adr_im: float = math.nan
    electron: tuple = (math.nan,) * 3
    nuclear_over_j: tuple = (math.nan,) * 3
    d_purity: float = math.nan
    t_eff: float = math.nan
    lambda_min: float = math.nan
    c_witness: float = math.nan
    bistable: bool = False
    validity: frozenset = field(default_factory=frozenset)

    @property
    def J(self) -> Optional[float]:
        return None if self.two_j is None else self.two_j / 2

    @staticmethod
    def columns() -> list:
        cols = []
        for f in dataclasses.fields(ScanPointRecord):
            if f.name in ("electron", "nuclear_over_j"):
                cols += [f"{f.name}_{c}" for c in "xyz"]
            else:
                cols.append(f.name)
        return cols

    def as_row(self) -> dict:
        row = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("electron", "nuclear_over_j"):
                row.update({f"{f.name}_{c}": float(x) for c, x in zip("xyz", v)})
            elif f.name == "validity":
                row[f.name] = ";".join(sorted(v))
            else:
                row[f.name] = v
        return row


def classify_phase(mode: str, omega_ratio: float, stable: bool, overdamped: bool,
                   branch: Optional[str], bistable: bool = False) -> str:
    """Phase label from solver outputs.

    ``C`` requires exact-mode bistability; ``D`` an overdamped drift (real
    lowest eigenvalue pair). Other points below ``omega0`` are
    ``supercritical``; above it the branch gives ``A`` (normal) or ``B``
    (anomalous). Contradictory or incomplete inputs give ``invalid``.
    """
    if mode not in ("exact", "gaussian") or not stable:
        return "invalid"
    if bistable:
        return "C" if mode == "exact" else "invalid"
    if overdamped:
        return "D"
    if branch not in ("normal", "anomalous"):
        return "invalid"
    if omega_ratio < 1:
        return "supercritical"
    return "A" if branch == "normal" else "B"


def _invalid(cfg: ScanConfig, w: float, O: float, reason: str) -> ScanPointRecord:
    log.warning("point (%g, %g) invalid: %s", w, O, reason)
    return ScanPointRecord(w, O, cfg.gamma, int(round(2 * cfg.J)), cfg.mode, "invalid")


def _gaussian_record(cfg: ScanConfig, w: float, O: float, sol) -> ScanPointRecord:
    root, drift, cov = sol.root, sol.drift, sol.cov
    flags = set(sol.flags) | {"converged", f"branch-{root.branch}"}
    phase = classify_phase("gaussian", w, True, drift.overdamped, root.branch)
    if phase == "A" and w > 1 and cov.t_eff >= cfg.suspect_t_eff:
        flags.add("bistable-suspect")
    adr = drift.adr
    return ScanPointRecord(
        w, O, cfg.gamma, int(round(2 * cfg.J)), "gaussian", phase,
        adr_re=float(adr.real), adr_im=float(adr.imag),
        electron=tuple(float(x) for x in root.electron),
        nuclear_over_j=tuple(float(x) for x in root.nuclear0),
        d_purity=float(cov.d_purity), t_eff=float(cov.t_eff),
        lambda_min=float(cov.lambda_min), c_witness=float(cov.c_witness),
        bistable=False, validity=frozenset(flags))


def _pick(stable, prev_beta):
    if prev_beta is None or len(stable) == 1:
        return stable[0]
    return min(stable, key=lambda s: abs(s.root.beta - prev_beta))


def gaussian_point(cfg: ScanConfig, w: float, O: float, seeds=None, full_search=True):
    """Gaussian analysis of one point.

    Returns ``(record, roots, beta)`` where ``beta`` is the displacement of
    the selected stable root (``None`` if there is none). With several
    stable roots the one closest to ``seeds[0]`` is kept.
    """
    p = cfg.params(w, O)
    roots = find_roots(p, grid_density=cfg.grid_density if full_search else 0, seeds=seeds)
    best, sols = solve_gaussian(p, roots)
    if best is None and not full_search:
        return gaussian_point(cfg, w, O, seeds=seeds, full_search=True)
    if best is None:
        return _invalid(cfg, w, O, "no stable root"), roots, None
    prev = None if seeds is None or len(seeds) == 0 else seeds[0]
    sol = _pick([s for s in sols if s.stable], prev)
    return _gaussian_record(cfg, w, O, sol), roots, sol.root.beta


def _gaussian_row(args):
    cfg, w = args
    out = []
    seeds = None
    for idx, O in enumerate(cfg.Omegas):
        full = seeds is None or idx % cfg.reseed_every == 0
        try:
            rec, roots, beta = gaussian_point(cfg, w, float(O), seeds=seeds, full_search=full)
        except (CentralSpinError, np.linalg.LinAlgError) as exc:
            rec, beta = _invalid(cfg, w, float(O), str(exc)), None
        if beta is None:
            seeds = None
        else:
            seeds = np.array([beta] + [r.beta for r in roots if not r.boundary])
        out.append(rec)
    return out


def exact_point(cfg: ScanConfig, w: float, O: float) -> ScanPointRecord:
    """Exact steady state, ADR and labels for one point."""
    p = cfg.params(w, O)
    L = build_liouvillian(p, memory_budget=cfg.memory_budget)
    ss = steady_state(L, null_tol=cfg.null_tol)
    ob = observables(ss.rho, L)
    adr = ss.spectrum.adr if ss.spectrum is not None else complex("nan")
    bistable = bool(abs(adr) <= cfg.bistable_tol * p.a)
    overdamped = bool(w < 1 and abs(adr.imag) <= cfg.overdamped_tol * p.a)
    branch = "normal" if ob.i_over_j[2] < 0 else "anomalous"
    phase = classify_phase("exact", w, True, overdamped, branch, bistable=bistable)
    # witness: max over directions of 1 - (2/J) Var - <I_n>^2 / J^2
    Q = 2 * p.J * ob.nuclear_cov + np.outer(ob.i, ob.i)
    c = max(0.0, 1 - float(np.linalg.eigvalsh(Q)[0]) / p.J**2)
    flags = {"converged", "truncation-ok", f"branch-{branch}"}
    return ScanPointRecord(
        w, O, cfg.gamma, p.two_j, "exact", phase, adr_re=float(adr.real),
        adr_im=float(adr.imag), electron=tuple(float(x) for x in ob.s),
        nuclear_over_j=tuple(float(x) for x in ob.i_over_j),
        lambda_min=float(ss.rho.min_eigenvalue), c_witness=c, bistable=bistable,
        validity=frozenset(flags))


def _exact_task(args):
    cfg, w, O = args
    try:
        return exact_point(cfg, w, O)
    except (CentralSpinError, np.linalg.LinAlgError, RuntimeError) as exc:
        return _invalid(cfg, w, O, str(exc))


def scan(cfg: ScanConfig) -> list:
    """Evaluate every grid point; records are sorted by ``(omega, Omega)``.

    Gaussian mode walks each fixed-``omega`` row in increasing ``Omega``,
    seeding Newton with the previous roots and re-running the full
    multi-start every ``reseed_every`` points. Failures become ``invalid``
    records.
    """
    if cfg.mode == "gaussian":
        tasks = [(cfg, float(w)) for w in cfg.omegas]
        fn = _gaussian_row
    else:
        tasks = [(cfg, float(w), float(O)) for w in cfg.omegas for O in cfg.Omegas]
        fn = _exact_task
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(fn, tasks))
    else:
        results = [fn(t) for t in tasks]
    records = [r for row in results for r in row] if cfg.mode == "gaussian" else results
    records.sort(key=lambda r: (r.omega_over_omega0, r.Omega_over_Omega0))
    return records


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _header_lines(timestamp: bool) -> list:
    lines = [f"# format-version: {FORMAT_VERSION}"]
    if timestamp:
        lines.append(f"# generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}")
    return lines


def records_to_csv(records, timestamp: bool = True) -> str:
    buf = io.StringIO()
    for line in _header_lines(timestamp):
        buf.write(line + "\r\n")
    writer = csv.DictWriter(buf, fieldnames=ScanPointRecord.columns())
    writer.writeheader()
    for r in records:
        writer.writerow({k: _fmt(v) for k, v in r.as_row().items()})
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def records_to_json(records, timestamp: bool = True) -> str:
    rows = [{k: _json_value(v) for k, v in r.as_row().items()} for r in records]
    return json.dumps(rows, indent=1) + "\n"


def write_records(records, path: str, fmt: str = "csv", timestamp: bool = True) -> None:
    text = records_to_csv(records, timestamp) if fmt == "csv" else records_to_json(records)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
