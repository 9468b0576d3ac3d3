"""Flat ``key = value`` experiment files.

Blank lines and ``#`` comments are ignored.  An optional ``kind = scenario``
or ``kind = design`` line picks the config type; without it the type is
inferred from the keys (any designer-only key means design).  An empty file
gives the default :class:`~otawave.simulator.ScenarioConfig`.
"""

from __future__ import annotations

from pathlib import Path

from .designer import DESIGN_FIELDS, DesignConfig
from .simulator import SCENARIO_FIELDS, ScenarioConfig


class ConfigError(ValueError):
    pass


def _convert(raw: str, typ: str, key: str, lineno: int):
    typ = typ.replace(" ", "")
    try:
        if raw.lower() == "none" and "None" in typ:
            return None
        if typ.startswith("bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ.startswith("int"):
            return int(raw)
        if typ.startswith("float"):
            return float(raw)
        if typ.startswith("tuple"):
            return tuple(int(v) for v in raw.replace("[", "").replace("]", "").split(",") if v.strip())
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key}={raw!r} as {typ}") from None


def parse_pairs(text: str, source: str = "<config>") -> dict[str, tuple[str, int]]:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}: line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r}")
        pairs[key] = (val, lineno)
    return pairs


def load_config(path, kind: str | None = None) -> ScenarioConfig | DesignConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    return loads(path.read_text(), kind, str(path))


def loads(text: str, kind: str | None = None, source: str = "<config>"):
    pairs = parse_pairs(text, source)
    if "kind" in pairs:
        declared, lineno = pairs.pop("kind")
        if declared not in ("scenario", "design"):
            raise ConfigError(f"{source}: line {lineno}: kind must be scenario or design")
        kind = kind or declared
    if kind is None:
        kind = "design" if any(k not in SCENARIO_FIELDS and k in DESIGN_FIELDS for k in pairs) else "scenario"
    schema, cls = (DESIGN_FIELDS, DesignConfig) if kind == "design" else (SCENARIO_FIELDS, ScenarioConfig)
    values = {}
    for key, (raw, lineno) in pairs.items():
        if key not in schema:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r} for {kind} config")
        values[key] = _convert(raw, schema[key], key, lineno)
    try:
        return cls(**values)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def dumps(cfg) -> str:
    """Inverse of :func:`loads`, one key per line in field order."""
    kind = "design" if isinstance(cfg, DesignConfig) else "scenario"
    schema = DESIGN_FIELDS if kind == "design" else SCENARIO_FIELDS
    lines = [f"kind = {kind}"]
    for key in schema:
        v = getattr(cfg, key)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
