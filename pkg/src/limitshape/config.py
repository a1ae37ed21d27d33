"""Schema resolution for run-config documents."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import syntax
from .errors import ConfigError, SourceSpan
from .parser import parse_document, parse_override
from .solver import INIT_CHOICES
from .tension import TENSION_MODELS

COMMANDS = ("solve", "obstacles", "sample", "compare", "diagnose", "tension-eval", "enumerate")

#field sources understood by compare and diagnose besides file paths
FIELD_SOURCES = ("solve", "sample")

Converter = Callable[[syntax.Value], object]


#a value could not be converted; the resolver attaches the key and span
class _Reject(Exception):
    pass


# Converters -------------------------------------------------------------------


def _number(value: syntax.Value) -> float:
    if not isinstance(value, syntax.Number):
        raise _Reject(f"expected a number, found '{syntax.describe(value)}'")
    return value.value


def _float(lo: Optional[float] = None, hi: Optional[float] = None, strict_lo: bool = False) -> Converter:
    def convert(value: syntax.Value) -> float:
        x = float(_number(value))
        if lo is not None and (x < lo or (strict_lo and x == lo)):
            raise _Reject(f"must be {'>' if strict_lo else '>='} {lo}, got {x!r}")
        if hi is not None and x > hi:
            raise _Reject(f"must be <= {hi}, got {x!r}")
        return x

    return convert


def _int(lo: Optional[int] = None, hi: Optional[int] = None) -> Converter:
    def convert(value: syntax.Value) -> int:
        x = _number(value)
        if not isinstance(x, int):
            raise _Reject(f"expected an integer, got {x!r}")
        if lo is not None and x < lo:
            raise _Reject(f"must be >= {lo}, got {x}")
        if hi is not None and x > hi:
            raise _Reject(f"must be <= {hi}, got {x}")
        return x

    return convert


def _choice(options: Sequence[str]) -> Converter:
    def convert(value: syntax.Value) -> str:
        if not isinstance(value, syntax.Word) or value.text not in options:
            raise _Reject(f"expected one of {', '.join(options)}; got '{syntax.describe(value)}'")
        return value.text

    return convert


def _flag(value: syntax.Value) -> bool:
    return _choice(("true", "false"))(value) == "true"


#paths may be quoted strings or bare words
def _text(value: syntax.Value) -> str:
    if isinstance(value, (syntax.String, syntax.Word)):
        return value.text
    raise _Reject(f"expected a path or name, found '{syntax.describe(value)}'")


def _vector(value: syntax.Value) -> Tuple[float, float]:
    if not isinstance(value, syntax.Vector) or len(value.components) != 2:
        raise _Reject(f"expected a 2-vector like (x, y), found '{syntax.describe(value)}'")
    return value.components


def _items(value: syntax.Value) -> List[syntax.Value]:
    return list(value.items) if isinstance(value, syntax.ListValue) else [value]


def _vectors(value: syntax.Value) -> Tuple[Tuple[float, float], ...]:
    return tuple(_vector(item) for item in _items(value))


def _floats(value: syntax.Value) -> Tuple[float, ...]:
    return tuple(float(_number(item)) for item in _items(value))


def _sides(value: syntax.Value) -> Tuple[int, int, int]:
    sides = tuple(_int(lo=0)(item) for item in _items(value))
    if len(sides) != 3:
        raise _Reject("expected three side lengths a, b, c")
    return sides


#`hexagon a b c` names a boxed lattice hexagon; `explicit` takes sampler.sites and sampler.heights
def _lattice_region(value: syntax.Value) -> Tuple[str, Tuple[int, ...]]:
    if isinstance(value, syntax.Word) and value.text == "explicit":
        return "explicit", ()
    if isinstance(value, syntax.Phrase) and isinstance(value.atoms[0], syntax.Word) and value.atoms[0].text == "hexagon":
        sides = tuple(_int(lo=0)(atom) for atom in value.atoms[1:])
        if len(sides) == 3 and max(sides) > 0:
            return "hexagon", sides
    raise _Reject(f"expected 'hexagon a b c' or 'explicit', found '{syntax.describe(value)}'")


def _site(value: syntax.Value) -> Tuple[int, int]:
    x, y = _vector(value)
    if not (float(x).is_integer() and float(y).is_integer()):
        raise _Reject(f"lattice sites need integer coordinates, found '{syntax.describe(value)}'")
    return int(x), int(y)


def _sites(value: syntax.Value) -> Tuple[Tuple[int, int], ...]:
    return tuple(_site(item) for item in _items(value))


#one entry per site: an integer boundary height, or `free`
def _heights(value: syntax.Value) -> Tuple[Optional[int], ...]:
    out: List[Optional[int]] = []
    for item in _items(value):
        if isinstance(item, syntax.Word) and item.text == "free":
            out.append(None)
        elif isinstance(item, syntax.Number):
            out.append(_int()(item))
        else:
            raise _Reject(f"expected an integer height or 'free', found '{syntax.describe(item)}'")
    return tuple(out)


def _field_source(value: syntax.Value) -> str:
    if isinstance(value, syntax.Word) and value.text in FIELD_SOURCES:
        return value.text
    return _text(value)


# Schema -----------------------------------------------------------------------


#one key of the schema: converter plus default (None means absent)
@dataclass(frozen=True, slots=True)
class KeySpec:
    convert: Converter
    default: object = None


SCHEMA: Dict[str, Dict[str, KeySpec]] = {
    "run": {
        "command": KeySpec(_choice(COMMANDS)),
        "seed": KeySpec(_int(lo=0, hi=2**64 - 1), 0),
        "out": KeySpec(_text, "out"),
        "workers": KeySpec(_int(lo=1), 1),
        "raster": KeySpec(_flag, False),
        "raster_size": KeySpec(_int(lo=8, hi=4096), 256),
    },
    "polygon": {
        "preset": KeySpec(_choice(("square", "lozenge", "regular", "custom")), "square"),
        "half_width": KeySpec(_float(lo=0.0, strict_lo=True), 1.0),
        "sides": KeySpec(_int(lo=3), 6),
        "radius": KeySpec(_float(lo=0.0, strict_lo=True), 1.0),
        "vertices": KeySpec(_vectors),
        "interior_point": KeySpec(_vector),
    },
    "tension": {
        "model": KeySpec(_choice(TENSION_MODELS), "quadratic"),
        "weight": KeySpec(_float(lo=0.0, strict_lo=True), 1.0),
        "center": KeySpec(_vector, (0.0, 0.0)),
        "singular_points": KeySpec(_vectors, ()),
        "weights": KeySpec(_floats, ()),
        "exponents": KeySpec(_floats, ()),
        "base_weight": KeySpec(_float(lo=0.0, strict_lo=True), 1.0),
        "singular_radius": KeySpec(_float(lo=0.0, strict_lo=True), 1e-3),
    },
    "domain": {
        "preset": KeySpec(_choice(("rectangle", "hexagon", "polygon")), "rectangle"),
        "width": KeySpec(_float(lo=0.0, strict_lo=True), 1.0),
        "height": KeySpec(_float(lo=0.0, strict_lo=True), 1.0),
        "origin": KeySpec(_vector, (0.0, 0.0)),
        "sides": KeySpec(_sides, (1, 1, 1)),
        "vertices": KeySpec(_vectors),
    },
    "mesh": {
        "resolution": KeySpec(_int(lo=2, hi=4096), 16),
    },
    "boundary": {
        "preset": KeySpec(_choice(("zero", "constant", "linear", "hexagon-stepped", "explicit")), "zero"),
        "value": KeySpec(_float(), 0.0),
        "slope": KeySpec(_vector, (0.0, 0.0)),
        "constant": KeySpec(_float(), 0.0),
        "polyline": KeySpec(_vectors),
        "values": KeySpec(_floats),
        "sample_density": KeySpec(_float(lo=0.0, strict_lo=True)),
    },
    "penalty": {
        "stages": KeySpec(_int(lo=1, hi=30), 8),
        "min_stages": KeySpec(_int(lo=1, hi=30), 1),
        "penalty_base": KeySpec(_float(lo=1.0, strict_lo=True), 4.0),
        "epsilon_base": KeySpec(_float(lo=1.0, strict_lo=True), 4.0),
        "radius_base": KeySpec(_float(lo=1.0, strict_lo=True), 2.0),
    },
    "tolerances": {
        "kkt": KeySpec(_float(lo=0.0, strict_lo=True)),
        "constraint": KeySpec(_float(lo=0.0, strict_lo=True), 5e-2),
        "energy": KeySpec(_float(lo=0.0, strict_lo=True), 1e-9),
        "boundary_layer": KeySpec(_float(lo=0.0)),
        "max_iterations": KeySpec(_int(lo=1), 200),
    },
    "solver": {
        "init": KeySpec(_choice(INIT_CHOICES), "lower"),
    },
    "sampler": {
        "region": KeySpec(_lattice_region, ("hexagon", (2, 2, 2))),
        "sites": KeySpec(_sites, ()),
        "heights": KeySpec(_heights, ()),
        "scale": KeySpec(_float(lo=0.0, strict_lo=True)),
        "burn_in": KeySpec(_int(lo=0)),
        "samples": KeySpec(_int(lo=1), 50),
        "thinning": KeySpec(_int(lo=1), 10),
        "audit_every": KeySpec(_int(lo=0), 0),
    },
    "enumerate": {
        "limit": KeySpec(_int(lo=1, hi=64), 30),
    },
    "evaluate": {
        "points": KeySpec(_vectors, ((0.0, 0.0),)),
        "order": KeySpec(_int(lo=0, hi=2), 0),
        "legendre": KeySpec(_flag, False),
    },
    "diagnose": {
        "field": KeySpec(_field_source, "solve"),
        "radii": KeySpec(_floats, (0.05, 0.1, 0.2)),
        "facet_tol": KeySpec(_float(lo=0.0, strict_lo=True), 0.05),
        "chord_tol": KeySpec(_float(lo=0.0, strict_lo=True)),
        "jump_tol": KeySpec(_float(lo=0.0, strict_lo=True), 0.5),
        "direction": KeySpec(_vector, (1.0, 0.0)),
        "c0": KeySpec(_float(), 0.0),
        "c1": KeySpec(_float(), 1.0),
        "window_center": KeySpec(_vector),
        "window_radius": KeySpec(_float(lo=0.0, strict_lo=True)),
        "tangent_radius": KeySpec(_float(lo=0.0, strict_lo=True)),
    },
    "compare": {
        "a": KeySpec(_field_source, "sample"),
        "b": KeySpec(_field_source, "solve"),
    },
}


# Resolved config --------------------------------------------------------------


#frozen, fully-defaulted view of a config document
@dataclass(frozen=True, slots=True)
class RunConfig:
    command: str
    sections: Mapping[str, Mapping[str, object]]
    explicit: frozenset = field(default_factory=frozenset)

    def section(self, name: str) -> Mapping[str, object]:
        return self.sections[name]

    def get(self, section: str, key: str) -> object:
        return self.sections[section][key]

    def is_set(self, section: str, key: str) -> bool:
        return (section, key) in self.explicit

    @property
    def seed(self) -> int:
        return int(self.get("run", "seed"))

    @property
    def out(self) -> Path:
        return Path(str(self.get("run", "out")))

    @property
    def workers(self) -> int:
        return int(self.get("run", "workers"))

    #canonical text form: every key with its effective value, in schema order
    def to_text(self) -> str:
        lines: List[str] = []
        for name, keys in SCHEMA.items():
            lines.append(f"[{name}]")
            for key in keys:
                value = self.sections[name][key]
                if value is not None and value != ():
                    lines.append(f"{key} = {format_value(value, vector=keys[key].convert is _vector)}")
            lines.append("")
        return "\n".join(lines)


def format_value(value: object, vector: bool = False) -> str:
    if value is None:
        return "free"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        bare = value[:1].isalpha() or value[:1] == "_"
        return value if bare and all(c.isalnum() or c in "_-/" for c in value) else f'"{value}"'
    if isinstance(value, tuple) and value and value[0] == "hexagon":
        return "hexagon " + " ".join(str(s) for s in value[1])
    if isinstance(value, tuple) and value == ("explicit", ()):
        return "explicit"
    if isinstance(value, tuple) and value and all(isinstance(v, tuple) for v in value):
        return ", ".join(format_value(v, vector=True) for v in value)
    if isinstance(value, tuple) and vector:
        return "(" + ", ".join(format_value(float(v)) for v in value) + ")"
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    raise TypeError(f"cannot format config value {value!r}")


# Resolution -------------------------------------------------------------------


#checks a parsed document against the schema and fills in defaults
class Resolver:
    def __init__(self, document: syntax.Document, overrides: Sequence[Tuple[str, str, syntax.Value]] = ()) -> None:
        self._document = document
        self._overrides = list(overrides)
        self._entries: Dict[Tuple[str, str], syntax.Entry] = {}

    def resolve(self, command: Optional[str] = None) -> RunConfig:
        self._collect()
        values: Dict[str, Dict[str, object]] = {}
        for section, keys in SCHEMA.items():
            values[section] = {}
            for key, spec in keys.items():
                entry = self._entries.get((section, key))
                if entry is None:
                    values[section][key] = spec.default
                    continue
                try:
                    values[section][key] = spec.convert(entry.value)
                except _Reject as reject:
                    raise ConfigError(f"{section}.{key}: {reject}", entry.value.span) from None
        if command is not None:
            values["run"]["command"] = command
        if values["run"]["command"] is None:
            raise ConfigError("no command given: set run.command or pass one on the command line")
        self._cross_check(values)
        frozen = MappingProxyType({name: MappingProxyType(keys) for name, keys in values.items()})
        return RunConfig(command=values["run"]["command"], sections=frozen, explicit=frozenset(self._entries))

    def _collect(self) -> None:
        seen_sections: Dict[str, SourceSpan] = {}
        for section in self._document.sections:
            if section.name not in SCHEMA:
                raise ConfigError(f"unknown section [{section.name}]", section.name_span)
            if section.name in seen_sections:
                raise ConfigError(f"section [{section.name}] appears twice", section.name_span)
            seen_sections[section.name] = section.name_span
            for entry in section.entries:
                self._check_key(section.name, entry.key, entry.key_span)
                if (section.name, entry.key) in self._entries:
                    raise ConfigError(f"key '{entry.key}' set twice in [{section.name}]", entry.key_span)
                self._entries[(section.name, entry.key)] = entry
        for section, key, value in self._overrides:
            self._check_key(section, key, value.span)
            self._entries[(section, key)] = syntax.Entry(span=value.span, key=key, key_span=value.span, value=value)

    def _check_key(self, section: str, key: str, span: Optional[SourceSpan]) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", span)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in [{section}]", span)

    def _span(self, section: str, key: str) -> Optional[SourceSpan]:
        entry = self._entries.get((section, key))
        return None if entry is None else entry.value.span

    #constraints that tie several keys together
    def _cross_check(self, values: Dict[str, Dict[str, object]]) -> None:
        penalty = values["penalty"]
        if penalty["min_stages"] > penalty["stages"]:
            raise ConfigError("penalty.min_stages exceeds penalty.stages", self._span("penalty", "min_stages"))
        polygon = values["polygon"]
        if polygon["preset"] == "custom" and not polygon["vertices"]:
            raise ConfigError("polygon.preset = custom needs polygon.vertices", self._span("polygon", "preset"))
        if values["tension"]["model"] == "lozenge" and polygon["preset"] not in ("lozenge", "custom"):
            raise ConfigError("tension.model = lozenge needs polygon.preset = lozenge", self._span("tension", "model"))
        tension = values["tension"]
        if tension["model"] == "custom-singular":
            count = len(tension["singular_points"])
            if count == 0 or len(tension["weights"]) != count or len(tension["exponents"]) != count:
                raise ConfigError(
                    "custom-singular needs singular_points, weights and exponents of equal, non-zero length",
                    self._span("tension", "model"),
                )
        domain = values["domain"]
        if domain["preset"] == "polygon" and not domain["vertices"]:
            raise ConfigError("domain.preset = polygon needs domain.vertices", self._span("domain", "preset"))
        boundary = values["boundary"]
        if boundary["preset"] == "explicit":
            if not boundary["polyline"] or not boundary["values"]:
                raise ConfigError("boundary.preset = explicit needs polyline and values", self._span("boundary", "preset"))
            if len(boundary["polyline"]) != len(boundary["values"]):
                raise ConfigError("boundary.polyline and boundary.values differ in length", self._span("boundary", "values"))
        if boundary["preset"] == "hexagon-stepped" and domain["preset"] != "hexagon":
            raise ConfigError("boundary.preset = hexagon-stepped needs domain.preset = hexagon", self._span("boundary", "preset"))
        diagnose = values["diagnose"]
        if diagnose["c0"] >= diagnose["c1"]:
            raise ConfigError("diagnose.c0 must be below diagnose.c1", self._span("diagnose", "c0"))
        if (diagnose["window_center"] is None) != (diagnose["window_radius"] is None):
            raise ConfigError("diagnose.window_center and window_radius go together", self._span("diagnose", "window_center"))
        if any(r <= 0 for r in diagnose["radii"]):
            raise ConfigError("diagnose.radii must be positive", self._span("diagnose", "radii"))
        sampler = values["sampler"]
        if sampler["region"][0] == "explicit":
            if not sampler["sites"]:
                raise ConfigError("sampler.region = explicit needs sampler.sites", self._span("sampler", "region"))
            if len(sampler["heights"]) != len(sampler["sites"]):
                raise ConfigError(
                    f"sampler.heights lists {len(sampler['heights'])} entries for {len(sampler['sites'])} sites",
                    self._span("sampler", "heights") or self._span("sampler", "sites"),
                )


def load_config(
    text: str,
    overrides: Sequence[str] = (),
    command: Optional[str] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None,
) -> RunConfig:
    document = parse_document(text)
    parsed = [parse_override(item) for item in overrides]
    if seed is not None:
        parsed.append(("run", "seed", syntax.Number(span=None, value=int(seed))))
    if out is not None:
        parsed.append(("run", "out", syntax.String(span=None, text=str(out))))
    return Resolver(document, parsed).resolve(command)


def load_config_file(path: Path, **kwargs) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return load_config(text, **kwargs)


__all__ = [
    "COMMANDS",
    "FIELD_SOURCES",
    "KeySpec",
    "Resolver",
    "RunConfig",
    "SCHEMA",
    "format_value",
    "load_config",
    "load_config_file",
]
