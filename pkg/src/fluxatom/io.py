"""Run configuration (JSON in) and result tables (CSV / JSON out).

Complex numbers are written as ``[re, im]`` pairs. Every output carries a
provenance block with the SHA-256 of the canonical configuration.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import FluxatomError, ModelError, ParseError, SchemaError, ValidationError
from .model import Drive, HPModel, validate_model
from .spherical import SphericalModel

COMMANDS = ("steady", "evolve", "count", "flux", "lineshape", "diffxs", "oracle", "validate")
FORMATS = ("csv", "json")


# -- typed sections ---------------------------------------------------------


@dataclass(frozen=True)
class GenericSection:
    n: int
    omega0: float
    alpha: tuple[complex, ...]
    S_plus: tuple[tuple[complex, ...], ...]
    S_minus: tuple[tuple[complex, ...], ...]


@dataclass(frozen=True)
class SphericalSection:
    alpha_norm: float
    eta: float
    omega0: float
    s_plus: float = 0.0
    s_minus: float = 0.0
    g_plus: tuple[complex, ...] = ()
    g_minus: tuple[complex, ...] = ()
    delta: float = 0.0
    c_light: float = 1.0


@dataclass(frozen=True)
class ScanSection:
    min: float
    max: float
    points: int
    mode: str = "omega"


@dataclass(frozen=True)
class DriveSection:
    lam: tuple[complex, ...] | None = None
    omega: float | None = None
    omega_scan: ScanSection | None = None


@dataclass(frozen=True)
class ThetaGrid:
    min: float = 0.01
    max: float = math.pi
    points: int = 91


@dataclass(frozen=True)
class RunSection:
    command: str | None = None
    t_end: float | None = None
    h: float | None = None
    dt: float | None = None
    n_traj: int = 2000
    n_samples: int = 50
    seed: int | None = None
    output: str | None = None
    format: str = "csv"
    degrees: bool = False
    initial: Any = "ground"
    theta: ThetaGrid = field(default_factory=ThetaGrid)
    corpus_size: int = 100


@dataclass(frozen=True)
class RunConfig:
    generic: GenericSection | None
    spherical: SphericalSection | None
    drive: DriveSection
    run: RunSection

    @property
    def model_kind(self) -> str:
        return "generic" if self.generic is not None else "spherical"

    def to_dict(self) -> dict:
        return _to_jsonable(
            {
                "model": {self.model_kind: asdict(self.generic or self.spherical)},
                "drive": _drive_dict(self.drive),
                "run": asdict(self.run),
            }
        )

    def sha256(self) -> str:
        doc = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(doc.encode()).hexdigest()

    # model construction; angles are already in radians here

    def build_generic(self) -> tuple[HPModel, Drive]:
        g = self.generic
        if g is None:
            raise SchemaError("this command needs a 'generic' model section")
        if self.drive.lam is None:
            raise SchemaError("generic models need drive.lambda")
        omega = self._single_omega()
        try:
            model = validate_model(g.n, g.omega0, g.alpha, g.S_plus, g.S_minus)
            return model, Drive(np.array(self.drive.lam, dtype=complex), omega)
        except ModelError as exc:
            raise ValidationError(f"{type(exc).__name__}: {exc}") from exc

    def build_spherical(self, omega: float | None = None) -> SphericalModel:
        s = self.spherical
        if s is None:
            raise SchemaError("this command needs a 'spherical' model section")
        if omega is None:
            omega = self._single_omega() if self.drive.omega is not None else s.omega0
        try:
            return SphericalModel(
                s.alpha_norm, s.eta, s.omega0, omega, s.s_plus, s.s_minus,
                np.array(s.g_plus, dtype=complex), np.array(s.g_minus, dtype=complex), s.delta, s.c_light,
            )
        except ModelError as exc:
            raise ValidationError(f"{type(exc).__name__}: {exc}") from exc

    def _single_omega(self) -> float:
        if self.drive.omega is None:
            raise SchemaError("this command needs drive.omega")
        return self.drive.omega


def _drive_dict(d: DriveSection) -> dict:
    out: dict[str, Any] = {}
    if d.lam is not None:
        out["lambda"] = d.lam
    if d.omega is not None:
        out["omega"] = d.omega
    if d.omega_scan is not None:
        out["omega_scan"] = asdict(d.omega_scan)
    return out


def _to_jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


# -- parsing ----------------------------------------------------------------


def _check_keys(section: Any, where: str, required: Sequence[str], optional: Sequence[str] = ()) -> dict:
    if not isinstance(section, dict):
        raise SchemaError(f"{where} must be an object")
    missing = [k for k in required if k not in section]
    if missing:
        raise SchemaError(f"{where}: missing required field(s) {', '.join(missing)}")
    extra = sorted(set(section) - set(required) - set(optional))
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {', '.join(extra)}")
    return section


def _real(x: Any, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{where} must be a number")
    return float(x)


def _int(x: Any, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(f"{where} must be an integer")
    return x


def _complex(x: Any, where: str) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise SchemaError(f"{where} must be a [re, im] pair")
        return complex(_real(x[0], where), _real(x[1], where))
    return complex(_real(x, where))


def _cvec(x: Any, where: str) -> tuple[complex, ...]:
    if not isinstance(x, list):
        raise SchemaError(f"{where} must be a list of [re, im] pairs")
    return tuple(_complex(v, f"{where}[{i}]") for i, v in enumerate(x))


def _cmat(x: Any, where: str) -> tuple[tuple[complex, ...], ...]:
    if not isinstance(x, list):
        raise SchemaError(f"{where} must be a list of rows")
    return tuple(_cvec(row, f"{where}[{i}]") for i, row in enumerate(x))


def parse_config(doc: dict) -> RunConfig:
    """Schema-check a decoded JSON document and convert angles to radians."""
    _check_keys(doc, "config", ["model", "drive"], ["run"])
    run = _parse_run(doc.get("run", {}))
    deg = math.pi / 180 if run.degrees else 1.0

    model = _check_keys(doc["model"], "model", [], ["generic", "spherical"])
    if ("generic" in model) == ("spherical" in model):
        raise SchemaError("model: exactly one of 'generic' or 'spherical' must be present")

    generic = spherical = None
    if "generic" in model:
        g = _check_keys(model["generic"], "model.generic", ["n", "omega0", "alpha", "S_plus", "S_minus"])
        generic = GenericSection(
            _int(g["n"], "model.generic.n"),
            _real(g["omega0"], "model.generic.omega0"),
            _cvec(g["alpha"], "model.generic.alpha"),
            _cmat(g["S_plus"], "model.generic.S_plus"),
            _cmat(g["S_minus"], "model.generic.S_minus"),
        )
    else:
        s = _check_keys(
            model["spherical"], "model.spherical", ["alpha_norm", "eta", "omega0"],
            ["s_plus", "s_minus", "g_plus", "g_minus", "delta", "c_light"],
        )
        spherical = SphericalSection(
            _real(s["alpha_norm"], "model.spherical.alpha_norm"),
            _real(s["eta"], "model.spherical.eta"),
            _real(s["omega0"], "model.spherical.omega0"),
            _real(s.get("s_plus", 0.0), "model.spherical.s_plus") * deg,
            _real(s.get("s_minus", 0.0), "model.spherical.s_minus") * deg,
            _cvec(s.get("g_plus", []), "model.spherical.g_plus"),
            _cvec(s.get("g_minus", []), "model.spherical.g_minus"),
            _real(s.get("delta", 0.0), "model.spherical.delta") * deg,
            _real(s.get("c_light", 1.0), "model.spherical.c_light"),
        )

    d = _check_keys(doc["drive"], "drive", [], ["lambda", "omega", "omega_scan"])
    if "omega" in d and "omega_scan" in d:
        raise SchemaError("drive: give either 'omega' or 'omega_scan', not both")
    if "omega" not in d and "omega_scan" not in d:
        raise SchemaError("drive: one of 'omega' or 'omega_scan' is required")
    if spherical is not None and "lambda" in d:
        raise SchemaError("drive.lambda is implicit (collimated beam) for spherical models")
    scan = None
    if "omega_scan" in d:
        sc = _check_keys(d["omega_scan"], "drive.omega_scan", ["min", "max", "points"], ["mode"])
        mode = sc.get("mode", "omega")
        if mode not in ("omega", "x"):
            raise SchemaError("drive.omega_scan.mode must be 'omega' or 'x'")
        scan = ScanSection(
            _real(sc["min"], "drive.omega_scan.min"),
            _real(sc["max"], "drive.omega_scan.max"),
            _int(sc["points"], "drive.omega_scan.points"),
            mode,
        )
        if not scan.min < scan.max or (mode == "omega" and not scan.min > 0):
            raise SchemaError("drive.omega_scan: bounds must satisfy 0 < min < max")
        if scan.points < 2:
            raise SchemaError("drive.omega_scan.points must be >= 2")
    drive = DriveSection(
        _cvec(d["lambda"], "drive.lambda") if "lambda" in d else None,
        _real(d["omega"], "drive.omega") if "omega" in d else None,
        scan,
    )
    # angles are radians from here on
    return RunConfig(generic, spherical, drive, replace(run, degrees=False))


def _parse_run(r: Any) -> RunSection:
    r = _check_keys(
        r, "run", [],
        ["command", "t_end", "h", "dt", "n_traj", "n_samples", "seed", "output", "format",
         "degrees", "initial", "theta", "corpus_size"],
    )
    command = r.get("command")
    if command is not None and command not in COMMANDS:
        raise SchemaError(f"run.command must be one of {', '.join(COMMANDS)}")
    fmt = r.get("format", "csv")
    if fmt not in FORMATS:
        raise SchemaError("run.format must be 'csv' or 'json'")
    degrees = r.get("degrees", False)
    if not isinstance(degrees, bool):
        raise SchemaError("run.degrees must be true or false")
    theta = ThetaGrid()
    if "theta" in r:
        t = _check_keys(r["theta"], "run.theta", [], ["min", "max", "points"])
        deg = math.pi / 180 if degrees else 1.0
        theta = ThetaGrid(
            _real(t.get("min", theta.min / deg), "run.theta.min") * deg,
            _real(t.get("max", theta.max / deg), "run.theta.max") * deg,
            _int(t.get("points", theta.points), "run.theta.points"),
        )
    initial = r.get("initial", "ground")
    if isinstance(initial, dict):
        _check_keys(initial, "run.initial", ["u"], ["v"])
        initial = {"u": _real(initial["u"], "run.initial.u"), "v": _complex(initial.get("v", 0.0), "run.initial.v")}
    elif initial not in ("ground", "excited"):
        raise SchemaError("run.initial must be 'ground', 'excited' or {u, v}")
    opt = lambda k, conv: conv(r[k], f"run.{k}") if r.get(k) is not None else None  # noqa: E731
    output = r.get("output")
    if output is not None and not isinstance(output, str):
        raise SchemaError("run.output must be a string")
    return RunSection(
        command=command,
        t_end=opt("t_end", _real),
        h=opt("h", _real),
        dt=opt("dt", _real),
        n_traj=_int(r.get("n_traj", 2000), "run.n_traj"),
        n_samples=_int(r.get("n_samples", 50), "run.n_samples"),
        seed=opt("seed", _int),
        output=output,
        format=fmt,
        degrees=degrees,
        initial=initial,
        theta=theta,
        corpus_size=_int(r.get("corpus_size", 100), "run.corpus_size"),
    )


def loads_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc)


def load_config(path: str | Path) -> RunConfig:
    """Read and schema-check a JSON run configuration."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads_config(text)


def dumps_config(cfg: RunConfig) -> str:
    """Serialize back to JSON; angles are written in radians."""
    return json.dumps(cfg.to_dict(), indent=2)


# -- result tables ----------------------------------------------------------


@dataclass(frozen=True)
class ResultTable:
    name: str
    columns: tuple[str, ...]
    units: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if rows.size == 0:
            rows = rows.reshape(0, len(self.columns))
        if rows.shape[1] != len(self.columns) or len(self.units) != len(self.columns):
            raise FluxatomError(f"table {self.name}: column count mismatch")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_columns(cls, name: str, cols: dict[str, tuple[str, Any]]) -> "ResultTable":
        """Build from ``{column: (unit, values)}``."""
        n = max(np.size(v) for _, v in cols.values())
        data = np.column_stack([np.broadcast_to(np.asarray(v, dtype=float), (n,)) for _, v in cols.values()])
        return cls(name, tuple(cols), tuple(u for u, _ in cols.values()), data)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def _fmt(x: float) -> str:
    return f"{x:.15e}"


def render_csv(tables: Sequence[ResultTable], provenance: dict) -> dict[str, str]:
    """One CSV document per table, keyed by table name."""
    docs = {}
    for t in tables:
        buf = io.StringIO()
        for k, v in provenance.items():
            buf.write(f"# {k}: {v}\n")
        buf.write(f"# table: {t.name}\n")
        buf.write("# units: " + ",".join(t.units) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(t.columns)
        for row in t.rows:
            w.writerow([_fmt(x) for x in row])
        docs[t.name] = buf.getvalue()
    return docs


def render_json(tables: Sequence[ResultTable], provenance: dict) -> str:
    doc = {
        "provenance": provenance,
        "tables": [
            {
                "name": t.name,
                "columns": list(t.columns),
                "units": dict(zip(t.columns, t.units)),
                "data": {c: [float(_fmt(x)) for x in t.rows[:, i]] for i, c in enumerate(t.columns)},
            }
            for t in tables
        ],
    }
    return json.dumps(doc, indent=1)


def read_csv_table(text: str) -> tuple[dict, ResultTable]:
    """Inverse of :func:`render_csv` for a single table document."""
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    cols = tuple(rows[0])
    units = tuple(meta.pop("units").split(","))
    name = meta.pop("table")
    data = np.array([[float(x) for x in r] for r in rows[1:]]).reshape(-1, len(cols))
    return meta, ResultTable(name, cols, units, data)


def write_tables(
    tables: Sequence[ResultTable], provenance: dict, fmt: str, out: str | Path | None, stream=None
) -> list[Path]:
    """Write tables to ``out`` (or ``stream`` when no path is given).

    With CSV the first table goes to ``out`` and each further table to
    ``<stem>.<table name>.csv`` beside it.
    """
    written: list[Path] = []
    if fmt == "json":
        text = render_json(tables, provenance)
        if out is None:
            stream.write(text + "\n")
        else:
            Path(out).write_text(text + "\n")
            written.append(Path(out))
        return written
    docs = render_csv(tables, provenance)
    if out is None:
        stream.write("\n".join(docs.values()))
        return written
    out = Path(out)
    for i, (name, text) in enumerate(docs.items()):
        path = out if i == 0 else out.with_name(f"{out.stem}.{name}{out.suffix or '.csv'}")
        path.write_text(text)
        written.append(path)
    return written


def provenance(cfg: RunConfig, command: str, seed: int | None) -> dict:
    return {
        "tool": "fluxatom",
        "version": __version__,
        "command": command,
        "config_sha256": cfg.sha256(),
        "seed": "none" if seed is None else str(seed),
    }
