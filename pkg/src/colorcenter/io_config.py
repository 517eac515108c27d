"""Input parsing, validation and deterministic result writing."""
from __future__ import annotations

import configparser
import datetime as _dt
import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .units import Quantity, UnitError, canonical_unit, convert, dimension

TASKS = ("apes-fit", "polaron", "lineshape", "rates", "hyperfine")


class ConfigError(ValueError):
    """Invalid configuration or input file; carries a location when known."""

    def __init__(self, msg, line=None, column=None, source=None):
        loc = ""
        if source:
            loc += f"{source}:"
        if line is not None:
            loc += f"{line}:"
            if column is not None:
                loc += f"{column}:"
        super().__init__(f"{loc} {msg}" if loc else msg)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Key:
    kind: str                  # float | int | str | path | bool | vector | floats
    unit: str | None = None    # canonical unit the value is stored in
    required: bool = False
    default: object = None
    lo: float | None = None
    hi: float | None = None
    lo_open: bool = False
    choices: tuple | None = None
    doc: str = ""


def _F(unit=None, **kw):
    return Key("float", unit, **kw)


SCHEMA: dict[str, dict[str, Key]] = {
    "apes-fit": {
        "scan_file": Key("path", required=True, doc="PES scan (Q E1 [E2 [E3]])"),
        "mode": Key("str", required=True, choices=("E", "T")),
        "coordinate": Key("str", default=None, choices=("theta", "eps", "xi", "eta", "zeta")),
        "delta_eV": _F("eV", default=0.0),
    },
    "polaron": {
        "hw_E_eV": _F("eV", required=True, lo=0.0, lo_open=True),
        "hw_T_eV": _F("eV", required=True, lo=0.0, lo_open=True),
        "F_E_eV": _F("eV", default=None, lo=0.0),
        "F_T_eV": _F("eV", default=None, lo=0.0),
        "E_JT_E_eV": _F("eV", default=None, lo=0.0),
        "E_JT_T_eV": _F("eV", default=None, lo=0.0),
        "delta_eV": _F("eV", default=0.0),
        "o_max": Key("int", default=10, lo=4, hi=30),
        "o_min": Key("int", default=2, lo=0),
        "tol_eV": _F("eV", default=1e-9, lo=0.0, lo_open=True),
        "dump_matrix": Key("bool", default=False),
    },
    "lineshape": {
        "zpl_eV": _F("eV", required=True, lo=0.0, lo_open=True),
        "mode_file": Key("path", default=None),
        "hw0_eV": _F("eV", default=None, lo=0.0, lo_open=True),
        "S": _F(None, default=None, lo=0.0),
        "E_FC_eV": _F("eV", default=None, lo=0.0),
        "sigma_eV": _F("eV", default=0.005, lo=0.0, lo_open=True),
        "T_K": _F("K", default=0.0, lo=0.0),
        "e_min_eV": _F("eV", default=None, lo=0.0),
        "e_max_eV": _F("eV", default=None, lo=0.0, lo_open=True),
        "n_points": Key("int", default=4096, lo=16),
        "photon_factor": Key("bool", default=True),
    },
    "rates": {
        "zpl_eV": _F("eV", required=True, lo=0.0, lo_open=True),
        "mu_debye": _F("debye", required=True, lo=0.0),
        "n_index": _F(None, required=True, lo=1.0),
        "g": Key("int", default=1, lo=1),
        "W_if": _F(None, default=None, lo=0.0, doc="eV amu^-1/2 angstrom^-1"),
        "hw_i_eV": _F("eV", default=None, lo=0.0, lo_open=True),
        "hw_f_eV": _F("eV", default=None, lo=0.0, lo_open=True),
        "dE_eV": _F("eV", default=None, lo=0.0, lo_open=True),
        "dQ": _F(None, default=None, doc="amu^1/2 angstrom"),
        "E_rel_eV": _F("eV", default=None, lo=0.0),
        "sigma_eV": _F("eV", default=0.010, lo=0.0, lo_open=True),
        "T_min_K": _F("K", default=0.0, lo=0.0),
        "T_max_K": _F("K", default=600.0, lo=0.0),
        "T_step_K": _F("K", default=50.0, lo=0.0, lo_open=True),
        "level_budget": Key("int", default=200, lo=2),
    },
    "hyperfine": {
        "grid_file": Key("path", required=True),
        "nucleus": Key("str", default="all"),
        "c_axis": Key("vector", default=(0.0, 0.0, 1.0)),
        "grouping": Key("str", default="printed", choices=("printed", "conventional")),
        "exclusion_radius": _F("angstrom", default=None, lo=0.0),
        "interpolation": Key("str", default="linear", choices=("linear", "cubic")),
    },
}


@dataclass
class RunConfig:
    task: str
    params: dict
    source: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    def path(self, key) -> Path | None:
        v = self.params.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p


_UNIT_RE = re.compile(r"^\s*([-+0-9.eE]+(?:[eE][-+]?\d+)?)\s*([A-Za-zÅ*·\s]+)?\s*$")


def _line_of(text: str, section: str, key: str):
    cur = None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
        elif cur == section and re.match(rf"^{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return no, raw.index(s) + 1
    return None, None


def _coerce(raw: str, spec: Key, key: str):
    raw = raw.strip()
    if spec.kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if spec.kind in ("str", "path"):
        if spec.choices and raw not in spec.choices:
            raise ConfigError(f"{key}: must be one of {', '.join(spec.choices)}, got {raw!r}")
        return raw
    if spec.kind == "vector":
        parts = raw.replace(",", " ").split()
        try:
            vec = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{key}: expected three numbers, got {raw!r}") from None
        if len(vec) != 3 or not any(vec):
            raise ConfigError(f"{key}: expected a nonzero 3-vector")
        return vec
    if spec.kind == "int":
        try:
            val = int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    else:
        m = _UNIT_RE.match(raw)
        if not m:
            raise ConfigError(f"{key}: expected a number, got {raw!r}")
        try:
            val = float(m.group(1))
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        unit_tok = (m.group(2) or "").strip()
        if unit_tok:
            if spec.unit is None:
                raise ConfigError(f"{key}: dimensionless value given with unit {unit_tok!r}")
            try:
                src = canonical_unit(unit_tok)
            except UnitError:
                raise ConfigError(f"{key}: unknown unit {unit_tok!r}") from None
            if dimension(src) != dimension(spec.unit):
                raise ConfigError(
                    f"{key}: unit mismatch, {unit_tok!r} is {dimension(src)} but {dimension(spec.unit)} expected"
                )
            val = convert(Quantity(val, src), spec.unit).value
        if not np.isfinite(val):
            raise ConfigError(f"{key}: value must be finite")
    _check_range(val, spec, key)
    return val


def _check_range(val, spec: Key, key: str):
    if spec.lo is not None and (val < spec.lo or (spec.lo_open and val == spec.lo)):
        op = ">" if spec.lo_open else ">="
        raise ConfigError(f"{key}: out of range, must be {op} {spec.lo} (got {val})")
    if spec.hi is not None and val > spec.hi:
        raise ConfigError(f"{key}: out of range, must be <= {spec.hi} (got {val})")


def parse_config(text: str, task: str | None = None, source: str | None = None,
                 base_dir=None, overrides: dict | None = None, check_files: bool = True) -> RunConfig:
    """Parse INI-style ``[section]`` / ``key = value`` text into a validated RunConfig.

    The task comes from ``task`` or from ``[run] task = ...``; parameters
    are read from the section of the same name. Values may carry a unit
    token (``652 meV``) that is converted to the key's canonical unit.
    """
    parser = configparser.ConfigParser(
        interpolation=None, strict=True, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("text before the first [section] header", line=exc.lineno, source=source) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc),
                          line=getattr(exc, "lineno", None), source=source) from None
    except configparser.ParsingError as exc:
        (lineno, line), *_ = exc.errors
        raise ConfigError(f"cannot parse line {line!r}", line=lineno, source=source) from None

    if task is None:
        if parser.has_option("run", "task"):
            task = parser.get("run", "task").strip()
        else:
            raise ConfigError("no task selected: pass one or set [run] task = ...", source=source)
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {', '.join(TASKS)}", source=source)
    for sec in parser.sections():
        if sec not in TASKS and sec != "run":
            raise ConfigError(f"unknown section [{sec}]", source=source)
    if parser.has_section("run"):
        for k in parser.options("run"):
            if k != "task":
                ln, col = _line_of(text, "run", k)
                raise ConfigError(f"unknown key {k!r} in [run]", line=ln, column=col, source=source)

    schema = SCHEMA[task]
    raw = dict(parser.items(task)) if parser.has_section(task) else {}
    for k, v in (overrides or {}).items():
        raw[k] = v

    params = {}
    for k, v in raw.items():
        if k not in schema:
            ln, col = _line_of(text, task, k)
            raise ConfigError(f"unknown key {k!r} for task {task}", line=ln, column=col, source=source)
        try:
            params[k] = _coerce(v, schema[k], k)
        except ConfigError as exc:
            ln, col = _line_of(text, task, k)
            raise ConfigError(str(exc), line=ln, column=col, source=source) from None
    missing = [k for k, s in schema.items() if s.required and k not in params]
    if missing:
        raise ConfigError(f"missing required key(s) for [{task}]: {', '.join(missing)}", source=source)
    for k, s in schema.items():
        params.setdefault(k, s.default)

    cfg = RunConfig(task, params, source, Path(base_dir) if base_dir else Path.cwd())
    _check_task(cfg, text, check_files)
    return cfg


def _check_task(cfg: RunConfig, text: str, check_files: bool):
    p = cfg.params
    src = cfg.source

    def need(cond, msg, key=None):
        if not cond:
            ln, col = _line_of(text, cfg.task, key) if key else (None, None)
            raise ConfigError(msg, line=ln, column=col, source=src)

    if check_files:
        for k, s in SCHEMA[cfg.task].items():
            if s.kind == "path" and p.get(k):
                path = cfg.path(k)
                need(path.is_file() and os.access(path, os.R_OK), f"{k}: cannot read {path}", k)
    if cfg.task == "polaron":
        for mode in ("E", "T"):
            need(not (p[f"F_{mode}_eV"] is not None and p[f"E_JT_{mode}_eV"] is not None),
                 f"give either F_{mode}_eV or E_JT_{mode}_eV, not both", f"E_JT_{mode}_eV")
        need(p["o_min"] < p["o_max"], "o_min must be below o_max", "o_min")
    elif cfg.task == "lineshape":
        single = p["hw0_eV"] is not None
        need(single != (p["mode_file"] is not None), "give either mode_file or hw0_eV with S / E_FC_eV")
        if single:
            need((p["S"] is None) != (p["E_FC_eV"] is None), "give exactly one of S and E_FC_eV")
        if (p["e_min_eV"] is None) != (p["e_max_eV"] is None):
            need(False, "give both e_min_eV and e_max_eV or neither")
        if p["e_min_eV"] is not None:
            need(p["e_min_eV"] < p["e_max_eV"], "e_min_eV must be below e_max_eV", "e_min_eV")
    elif cfg.task == "rates":
        nonrad = [k for k in ("W_if", "hw_i_eV", "hw_f_eV") if p[k] is not None]
        if nonrad:
            need(len(nonrad) == 3, "nonradiative rates need W_if, hw_i_eV and hw_f_eV together")
            need((p["dQ"] is None) != (p["E_rel_eV"] is None), "give exactly one of dQ and E_rel_eV")
        need(p["T_min_K"] <= p["T_max_K"], "T_min_K must not exceed T_max_K", "T_min_K")


def load_config(path, task=None, overrides=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, task=task, source=str(path), base_dir=path.parent, overrides=overrides)


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        k = k.strip()
        if k in out:
            raise ConfigError(f"duplicate override for {k!r}")
        out[k] = v.strip()
    return out


# ---------------------------------------------------------------- data files


def _numeric_rows(text: str, source: str, ncols: tuple):
    rows = []
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) not in ncols:
            raise ConfigError(f"expected {' or '.join(map(str, ncols))} columns, found {len(parts)}",
                              line=no, source=source)
        try:
            rows.append((no, [float(x) for x in parts]))
        except ValueError:
            raise ConfigError(f"non-numeric entry in {raw.strip()!r}", line=no, source=source) from None
    return rows


def read_pes_scan(path, coordinate: str):
    from .apes import PesScan

    path = Path(path)
    rows = _numeric_rows(path.read_text(), str(path), (2, 3, 4))
    if not rows:
        raise ConfigError("scan file has no data", source=str(path))
    width = len(rows[0][1])
    for no, r in rows:
        if len(r) != width:
            raise ConfigError("inconsistent branch count", line=no, source=str(path))
    data = np.array([r for _, r in rows])
    try:
        return PesScan(coordinate, data[:, 0], data[:, 1:])
    except ValueError as exc:
        raise ConfigError(str(exc), source=str(path)) from None


def read_modes(path):
    """Mode file: ``hbar_omega_eV  value  kind`` with kind S or q."""
    from .lineshape import ModeDisplacementSet

    path = Path(path)
    hw, S = [], []
    for no, raw in enumerate(path.read_text().splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) != 3 or parts[2] not in ("S", "q"):
            raise ConfigError("expected 'hbar_omega_eV value S|q'", line=no, source=str(path))
        try:
            w, val = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError("non-numeric entry", line=no, source=str(path)) from None
        if w <= 0:
            raise ConfigError("mode energy must be positive", line=no, source=str(path))
        if parts[2] == "q":
            val = ModeDisplacementSet.from_displacements([w], [val]).S[0]
        if val < 0:
            raise ConfigError("Huang-Rhys factor must be non-negative", line=no, source=str(path))
        hw.append(w)
        S.append(val)
    return ModeDisplacementSet(np.array(hw), np.array(S))


def read_spin_grid(path):
    """Grid file: header line, nucleus lines, then n1*n2*n3 values (row-major)."""
    from .hyperfine import Nucleus, SpinDensityGrid

    path = Path(path)
    src = str(path)
    lines = [(no, raw.split("#", 1)[0].strip()) for no, raw in enumerate(path.read_text().splitlines(), 1)]
    lines = [(no, s) for no, s in lines if s]
    if not lines:
        raise ConfigError("empty grid file", source=src)
    no, head = lines[0]
    parts = head.split()
    if len(parts) != 16:
        raise ConfigError("header must be 'ox oy oz ax ay az bx by bz cx cy cz n1 n2 n3 Sz' "
                          "(origin as three numbers)", line=no, source=src)
    try:
        origin = [float(x) for x in parts[0:3]]
        axes = np.array([float(x) for x in parts[3:12]]).reshape(3, 3)
        n1, n2, n3 = (int(x) for x in parts[12:15])
        sz = float(parts[15])
    except ValueError:
        raise ConfigError("malformed header", line=no, source=src) from None
    nuclei = []
    k = 1
    while k < len(lines):
        no, s = lines[k]
        toks = s.split()
        if not toks[0][0].isalpha():
            break
        if len(toks) != 6:
            raise ConfigError("nucleus line must be 'label x y z gN gammaN'", line=no, source=src)
        try:
            nuclei.append(Nucleus(toks[0], [float(t) for t in toks[1:4]], float(toks[4]), float(toks[5])))
        except ValueError:
            raise ConfigError("malformed nucleus line", line=no, source=src) from None
        k += 1
    vals = []
    for no, s in lines[k:]:
        try:
            vals.extend(float(t) for t in s.split())
        except ValueError:
            raise ConfigError("non-numeric density value", line=no, source=src) from None
    if len(vals) != n1 * n2 * n3:
        raise ConfigError(f"expected {n1 * n2 * n3} density values, found {len(vals)}", source=src)
    return SpinDensityGrid(origin, axes, np.array(vals).reshape(n1, n2, n3), sz, nuclei)


def write_spin_grid(path, grid) -> None:
    with open(path, "w") as fh:
        head = list(grid.origin) + list(grid.axes.ravel())
        fh.write(" ".join(f"{x:.10g}" for x in head))
        fh.write(" " + " ".join(str(n) for n in grid.shape) + f" {grid.spin_z:.10g}\n")
        for nuc in grid.nuclei:
            x, y, z = nuc.position
            fh.write(f"{nuc.label} {x:.10g} {y:.10g} {z:.10g} {nuc.g_N:.10g} {nuc.gamma_N:.10g}\n")
        flat = grid.values.ravel()
        for i in range(0, flat.size, 6):
            fh.write(" ".join(f"{v:.10e}" for v in flat[i:i + 6]) + "\n")


# ---------------------------------------------------------------- writing


def fmt(x) -> str:
    """Scientific notation with 9 significant digits; integers stay integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    if np.isnan(x):
        return "nan"
    return f"{x:.8e}"


def format_columns(header: str, columns) -> str:
    lines = [f"# {header}"]
    for row in zip(*columns):
        lines.append(" ".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def format_summary(pairs: dict) -> str:
    out = []
    for k, v in pairs.items():
        if isinstance(v, (bool, str)) or v is None:
            out.append(f"{k}={v}")
        elif isinstance(v, (int, np.integer)):
            out.append(f"{k}={int(v)}")
        else:
            out.append(f"{k}={fmt(v)}")
    return "\n".join(out) + "\n"


def parse_summary(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, v = line.split("=", 1)
        out[k] = v
    return out


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_file(path) -> str:
    return digest_bytes(Path(path).read_bytes())


@dataclass
class RunManifest:
    config_digest: str
    inputs: dict
    outputs: dict
    version: str = __version__
    timestamp: str = ""
    task: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {"task": self.task, "version": self.version, "timestamp": self.timestamp,
             "config_digest": self.config_digest, "inputs": self.inputs, "outputs": self.outputs},
            indent=2, sort_keys=True,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        return cls(d["config_digest"], d["inputs"], d["outputs"], d["version"], d["timestamp"], d["task"])


def write_results(out_dir, files: dict, manifest: RunManifest | None = None,
                  manifest_name: str = "manifest.json") -> RunManifest | None:
    """Write ``{name: text}`` atomically; the manifest goes last.

    Everything is staged in temporary files in ``out_dir`` first, so a
    failure leaves no partial scientific output behind.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
    except OSError:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    for tmp, dst in staged:
        os.replace(tmp, dst)
    if manifest is not None:
        manifest.outputs = {name: digest_bytes(text.encode()) for name, text in files.items()}
        if not manifest.timestamp:
            manifest.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        fd, tmp = tempfile.mkstemp(prefix=".manifest.", dir=out)
        with os.fdopen(fd, "w") as fh:
            fh.write(manifest.to_json())
        os.replace(tmp, out / manifest_name)
    return manifest
