"""Command-line driver: configuration, run orchestration and report files.

Configuration documents are TOML (or JSON with the same structure)::

    family = "sierpinski_gasket"   # or give [[maps]] tables instead
    r = 0.3333333333333333
    sides = 5                      # regular_polygon only
    k_max = 8
    gap = "auto"                   # "auto" | "exact" | "estimate" | "estimate:K" | positive number
    tie_tol = 1e-9
    dedupe_eps = 1e-12
    cert_depth = 30                # optional; default depends on the system
    threads = 1
    max_points = 2000000

    [output]
    csv = "table.csv"
    json = "trace.json"
    svg = "balls.svg"

    [[maps]]
    ratio = 0.25
    translation = [0.0]
    rotation = 90.0                # planar only: angle in degrees, or
    # matrix = [[0.0, -1.0], [1.0, 0.0]]
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, GapEstimationError, ResourceCapError, ValidationError
from .families import KINDS, FamilySpec, build, oracle
from .generation import DEFAULT_MAX_POINTS, closest_cylinders, estimate_gap, exact_gap
from .ifs import IFSSystem, Similitude, diameter_check
from .packing import lower_bound, run
from .report import emit_json, emit_svg, emit_table, fmt

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("packing_measure")

EXIT_CONFIG, EXIT_RESOURCE, EXIT_GAP, EXIT_VERIFY = 1, 2, 3, 4


@dataclass(frozen=True)
class MapSpec:
    ratio: float
    translation: tuple
    rotation: float | None = None
    matrix: tuple | None = None

    def similitude(self) -> Similitude:
        n = len(self.translation)
        if self.matrix is not None:
            O = np.array(self.matrix, dtype=float)
        elif self.rotation is not None:
            if n != 2:
                raise ValidationError("rotation angles apply to planar maps only")
            a = math.radians(self.rotation)
            O = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        else:
            O = np.eye(n)
        return Similitude(self.ratio, O, np.array(self.translation, dtype=float))


@dataclass(frozen=True)
class RunConfig:
    family: str | None = None
    r: float | None = None
    sides: int | None = None
    maps: tuple | None = None
    k_max: int = 8
    gap: str | float = "auto"
    tie_tol: float = 1e-9
    dedupe_eps: float = 1e-12
    cert_depth: int | None = None
    threads: int = 1
    max_points: int = DEFAULT_MAX_POINTS
    csv: str | None = None
    json: str | None = None
    svg: str | None = None

    @property
    def family_spec(self) -> FamilySpec | None:
        return None if self.family is None else FamilySpec(self.family, self.r, self.sides)

    def system(self) -> IFSSystem:
        if self.family is not None:
            return build(self.family_spec)
        return IFSSystem(tuple(m.similitude() for m in self.maps))


_SCALARS = {
    "family": str, "r": float, "sides": int, "k_max": int, "gap": (str, float),
    "tie_tol": float, "dedupe_eps": float, "cert_depth": int, "threads": int, "max_points": int,
}
_OUTPUTS = ("csv", "json", "svg")
_MAP_KEYS = ("ratio", "translation", "rotation", "matrix")


def _line_of(text: str, key: str, occurrence: int = 0) -> int | None:
    """Best-effort line number of a key in a TOML or JSON document."""
    pattern = re.compile(rf'^[ \t]*(?:"{re.escape(key)}"\s*:|{re.escape(key)}\s*=)|"{re.escape(key)}"\s*:',
                         re.MULTILINE)
    hits = list(pattern.finditer(text))
    if len(hits) <= occurrence:
        return None
    return text.count("\n", 0, hits[occurrence].start()) + 1


def _coerce(value, kind, key, text, occurrence=0):
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool):
        raise ConfigError(f"{key} must not be a boolean", _line_of(text, key, occurrence))
    for k in kinds:
        if k is float and isinstance(value, (int, float)):
            return float(value)
        if k is int and isinstance(value, int):
            return value
        if k is str and isinstance(value, str):
            return value
    names = " or ".join(k.__name__ for k in kinds)
    raise ConfigError(f"{key} must be of type {names}, got {value!r}", _line_of(text, key, occurrence))


def _load(text: str) -> dict:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, exc.lineno) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(str(exc), int(m.group(1)) if m else None) from None


def _vector(value, key, text, occurrence):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                              for v in value):
        raise ConfigError(f"{key} must be a list of numbers", _line_of(text, key, occurrence))
    return tuple(float(v) for v in value)


def _parse_map(entry, index, text) -> MapSpec:
    if not isinstance(entry, dict):
        raise ConfigError(f"map {index + 1} must be a table", _line_of(text, "maps"))
    unknown = set(entry) - set(_MAP_KEYS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r} in map {index + 1}", _line_of(text, key))
    for key in ("ratio", "translation"):
        if key not in entry:
            raise ConfigError(f"map {index + 1} lacks {key!r}", _line_of(text, "ratio", index))
    ratio = _coerce(entry["ratio"], float, "ratio", text, index)
    translation = _vector(entry["translation"], "translation", text, index)
    rotation = matrix = None
    if "rotation" in entry and "matrix" in entry:
        raise ConfigError(f"map {index + 1} gives both rotation and matrix", _line_of(text, "matrix"))
    if "rotation" in entry:
        rotation = _coerce(entry["rotation"], float, "rotation", text)
    if "matrix" in entry:
        rows = entry["matrix"]
        if not isinstance(rows, list):
            raise ConfigError("matrix must be a list of rows", _line_of(text, "matrix"))
        matrix = tuple(_vector(row, "matrix", text, 0) for row in rows)
    return MapSpec(ratio, translation, rotation, matrix)


def _check_gap(value, text):
    if isinstance(value, float):
        if not value > 0:
            raise ConfigError("gap value must be positive", _line_of(text, "gap"))
        return value
    if value in ("auto", "exact", "estimate"):
        return value
    m = re.fullmatch(r"estimate:(\d+)", value)
    if m and int(m.group(1)) >= 1:
        return value
    raise ConfigError(f"gap must be auto, exact, estimate, estimate:K or a number, got {value!r}",
                      _line_of(text, "gap"))


def config_from_dict(data: dict, text: str = "") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(data) - set(_SCALARS) - {"maps", "output"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", _line_of(text, key))
    values = {k: _coerce(data[k], kind, k, text) for k, kind in _SCALARS.items() if k in data}
    output = data.get("output", {})
    if not isinstance(output, dict) or set(output) - set(_OUTPUTS):
        raise ConfigError(f"output table accepts only {', '.join(_OUTPUTS)}", _line_of(text, "output"))
    for key in _OUTPUTS:
        if key in output:
            values[key] = _coerce(output[key], str, key, text)
    if "maps" in data:
        if not isinstance(data["maps"], list):
            raise ConfigError("maps must be a list of tables", _line_of(text, "maps"))
        values["maps"] = tuple(_parse_map(e, i, text) for i, e in enumerate(data["maps"]))
    if ("family" in values) == ("maps" in values):
        raise ConfigError("give exactly one system source: family or maps")
    if "family" in values:
        if values["family"] not in KINDS:
            raise ConfigError(f"unknown family {values['family']!r}", _line_of(text, "family"))
        if "r" not in values:
            raise ConfigError("family needs a ratio r", _line_of(text, "family"))
    elif "r" in values or "sides" in values:
        raise ConfigError("r and sides apply to families only", _line_of(text, "r") or _line_of(text, "sides"))
    if "gap" in values:
        values["gap"] = _check_gap(values["gap"], text)
    cfg = RunConfig(**values)
    validate(cfg, text)
    return cfg


def validate(cfg: RunConfig, text: str = "") -> None:
    if cfg.k_max < 1:
        raise ConfigError("k_max must be at least 1", _line_of(text, "k_max"))
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1", _line_of(text, "threads"))
    if not 0 <= cfg.tie_tol < 1:
        raise ConfigError("tie_tol must lie in [0, 1)", _line_of(text, "tie_tol"))
    if cfg.dedupe_eps < 0:
        raise ConfigError("dedupe_eps must be non-negative", _line_of(text, "dedupe_eps"))
    if cfg.cert_depth is not None and cfg.cert_depth < 1:
        raise ConfigError("cert_depth must be at least 1", _line_of(text, "cert_depth"))
    if cfg.max_points < 1:
        raise ConfigError("max_points must be positive", _line_of(text, "max_points"))
    try:
        system = cfg.system()
    except ValidationError as exc:
        key = "r" if cfg.family is not None else "maps"
        raise ConfigError(str(exc), _line_of(text, key)) from None
    if cfg.family is None:
        check_separation(system, text)
    if cfg.gap == "exact" and system.exact_gap is None:
        raise ConfigError("exact gap requested but the system has none; give a number",
                          _line_of(text, "gap"))


def check_separation(system: IFSSystem, text: str = "", tol: float = 1e-12) -> None:
    """Reject explicit systems whose first-level cylinders may meet.

    Sample points of two cylinders lie within ``r_max**depth |E|`` of the
    cylinders themselves, so the cylinders are certainly disjoint only when
    the sampled distance exceeds twice that.
    """
    depth = max(1, int(math.log(4096) / math.log(system.N)))
    i, j, dist = closest_cylinders(system, depth)
    resolution = 2.0 * system.r_max ** depth * system.diameter_bound
    if dist <= resolution + tol:
        raise ConfigError(f"maps {i} and {j} produce images closer than {resolution:.3g}; "
                          "strong separation fails or cannot be confirmed", _line_of(text, "maps"))


def parse_config(text: str) -> RunConfig:
    return config_from_dict(_load(text), text)


def _toml_value(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return str(v)


def config_to_dict(cfg: RunConfig) -> dict:
    data = {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None or f.name in _OUTPUTS or f.name == "maps":
            continue
        data[f.name] = v
    output = {k: getattr(cfg, k) for k in _OUTPUTS if getattr(cfg, k) is not None}
    if output:
        data["output"] = output
    if cfg.maps is not None:
        data["maps"] = [{k: (list(map(list, v)) if k == "matrix" else list(v) if k == "translation" else v)
                         for k, v in dataclasses.asdict(m).items() if v is not None} for m in cfg.maps]
    return data


def serialize_config(cfg: RunConfig, fmt_: str = "toml") -> str:
    data = config_to_dict(cfg)
    if fmt_ == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt_ != "toml":
        raise ValueError(f"unknown format {fmt_!r}")
    lines = [f"{k} = {_toml_value(v)}" for k, v in data.items() if k not in ("output", "maps")]
    if "output" in data:
        lines += ["", "[output]"] + [f"{k} = {_toml_value(v)}" for k, v in data["output"].items()]
    for m in data.get("maps", []):
        lines += ["", "[[maps]]"] + [f"{k} = {_toml_value(v)}" for k, v in m.items()]
    return "\n".join(lines) + "\n"


def resolve_gap(cfg: RunConfig, system: IFSSystem):
    g = cfg.gap
    if isinstance(g, float):
        return exact_gap(system, g)
    if g == "exact" or (g == "auto" and system.exact_gap is not None):
        return exact_gap(system)
    depth = int(g.split(":")[1]) if ":" in g else None
    return estimate_gap(system, depth)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="packing-measure",
                                description="Compute and certify the packing measure of a self-similar set.")
    p.add_argument("--config", type=Path, help="TOML or JSON configuration document")
    p.add_argument("--family", choices=KINDS)
    p.add_argument("--r", type=float, help="contraction ratio of the family")
    p.add_argument("--sides", type=int, help="polygon side count")
    p.add_argument("--kmax", type=int, help="number of generations")
    p.add_argument("--gap", help="auto, exact, estimate, estimate:K, or a positive number")
    p.add_argument("--out", help="CSV table path")
    p.add_argument("--json", help="JSON trace path")
    p.add_argument("--svg", help="SVG snapshot path (final generation)")
    p.add_argument("--threads", type=int)
    p.add_argument("--tie-tol", type=float)
    p.add_argument("--dedupe-eps", type=float)
    p.add_argument("--cert-depth", type=int)
    p.add_argument("--max-points", type=int)
    p.add_argument("--verify", action="store_true", help="run the invariant suite instead of a plain run")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> RunConfig:
    if args.config is not None:
        if args.family is not None:
            raise ConfigError("--config and --family are exclusive")
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        data = _load(text)
    else:
        if args.family is None or args.r is None:
            raise ConfigError("give --config PATH or --family NAME --r X")
        text = ""
        data = {"family": args.family, "r": args.r}
        if args.sides is not None:
            data["sides"] = args.sides
    overrides = {"k_max": args.kmax, "threads": args.threads, "tie_tol": args.tie_tol,
                 "dedupe_eps": args.dedupe_eps, "cert_depth": args.cert_depth, "max_points": args.max_points}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.gap is not None:
        try:
            data["gap"] = float(args.gap)
        except ValueError:
            data["gap"] = args.gap
    outputs = {"csv": args.out, "json": args.json, "svg": args.svg}
    if any(v is not None for v in outputs.values()):
        data.setdefault("output", {}).update({k: v for k, v in outputs.items() if v is not None})
    return config_from_dict(data, text)


def _verify(cfg: RunConfig, system: IFSSystem, gap) -> int:
    from .verify import run_invariants
    results = run_invariants(system, min(cfg.k_max, 6), gap)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    return 0 if all(r.passed for r in results) else EXIT_VERIFY


def execute(cfg: RunConfig, verify: bool = False) -> int:
    system = cfg.system()
    enclosure = diameter_check(system, max(1, int(math.log(4096) / math.log(system.N))))
    if not enclosure.normalized:
        log.warning("diameter enclosure [%.9g, %.9g] excludes 1; the system is not normalized",
                    enclosure.lo, enclosure.hi)
    gap = resolve_gap(cfg, system)
    print(f"system: {system.name} (N={system.N}, dimension={system.dimension}, s={fmt(system.s)})")
    kind = "exact" if gap.exact else f"estimated at k={gap.k_used}"
    print(f"gap: {kind}, c_tilde={fmt(gap.c_tilde)}")
    if verify:
        return _verify(cfg, system, gap)
    trace = run(system, gap, cfg.k_max, cfg.tie_tol, eps=cfg.dedupe_eps, cert_depth=cfg.cert_depth,
                threads=cfg.threads, max_points=cfg.max_points)
    ref = oracle(cfg.family_spec) if cfg.family is not None else None
    for g in trace.results:
        print(f"k={g.k} points={g.size} m_tilde={fmt(g.m_tilde) or 'none'} candidates={len(g.candidates)} "
              f"certified={str(g.certified).lower()} stable={str(g.stable).lower()}")
    final = trace.final.m_tilde
    print(f"final m_tilde = {'none' if final is None else format(final, '.9f')}")
    bound = lower_bound(trace)
    print("lower bound: none certified" if bound is None else f"certified lower bound {bound:.9f}")
    if ref is not None:
        if ref.value is None:
            print(f"oracle: {ref.validity}")
        else:
            dev = "n/a" if final is None else f"{final - ref.value:.3e}"
            print(f"oracle: {ref.value:.9f} ({ref.validity}), deviation {dev}")
    print(f"stability={str(trace.stable).lower()}")
    if cfg.csv:
        Path(cfg.csv).write_text(emit_table(trace, ref))
    if cfg.json:
        Path(cfg.json).write_text(emit_json(trace, ref))
    if cfg.svg:
        Path(cfg.svg).write_text(emit_svg(system, trace.final_state, trace.final.candidates))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return execute(cfg, args.verify)
    except (ConfigError, ValidationError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except GapEstimationError as exc:
        print(f"gap estimation failed: {exc}", file=sys.stderr)
        return EXIT_GAP


if __name__ == "__main__":
    sys.exit(main())
