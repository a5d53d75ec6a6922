"""Run configuration for the command line tools.

The format is flat INI text: `key = value` lines where the key carries its
section as a dotted prefix (`tree.ell = 0.5`).  A bracketed `[section]`
header sets the prefix for the bare keys that follow, so the two spellings

    [tree]
    ell = 0.5

and `tree.ell = 0.5` are equivalent.  `#` and `;` start comments.  Unknown
keys, malformed lines, and unparsable values are rejected with their line
number.
"""

import hashlib
import math
import re
from dataclasses import dataclass, field

from .circle import FourierFn
from .errors import ConfigError
from .exterior import RadialSource
from .tree import TreeParams


def _parse_int(s):
    return int(s, 10)


def _parse_float(s):
    return float(s)


def _parse_complex(s):
    return complex(s.replace(" ", ""))


def _parse_str(s):
    return s


def _parse_int_list(s):
    return [int(part.strip(), 10) for part in s.split(",") if part.strip()]


def _parse_float_list(s):
    return [float(part.strip()) for part in s.split(",") if part.strip()]


# key -> (parser, default); required keys carry the sentinel _REQUIRED
_REQUIRED = object()

_KEYS = {
    "tree.p": (_parse_int, _REQUIRED),
    "tree.ell": (_parse_float, _REQUIRED),
    "tree.omega": (_parse_float, _REQUIRED),
    "tree.L0": (_parse_float, 1.0),
    "tree.omega0": (_parse_float, 1.0),
    "tree.N1": (_parse_int, 0),
    "interface.radius": (_parse_float, 1.0),
    "interface.N": (_parse_int, 3),
    "interface.mode_cutoff": (_parse_int, None),
    "transmission.alpha1": (_parse_complex, complex(1.0)),
    "transmission.alpha0": (_parse_complex, complex(0.0)),
    "transmission.c_root": (_parse_complex, complex(0.0)),
    "transmission.source_depth": (_parse_int, None),
    "transmission.levels": (_parse_int_list, None),
    "transmission.pencil_count": (_parse_int, 8),
    "transmission.manufactured_mode": (_parse_int, None),
    "transmission.manufactured_amplitude": (_parse_complex, complex(1.0)),
    "source.tree.constant": (_parse_complex, complex(0.0)),
    "source.exterior.r_max": (_parse_float, 2.0),
    "run.out_dir": (_parse_str, "."),
    "run.seed": (_parse_int, 0),
}

# patterned keys: override corridor entries and exterior source profiles
_PATTERNS = [
    (re.compile(r"^tree\.length_override\.(\d+)\.(\d+)$"), _parse_float),
    (re.compile(r"^tree\.weight_override\.(\d+)\.(\d+)$"), _parse_float),
    (re.compile(r"^source\.exterior\.profile\.(-?\d+)$"), _parse_float_list),
]

_SECTIONS = ("tree", "interface", "transmission", "source.tree", "source.exterior", "run")


@dataclass
class RunConfig:
    """Parsed and validated key/value configuration."""

    values: dict = field(default_factory=dict)
    path: str | None = None
    text: str = ""

    def get(self, key):
        if key in self.values:
            return self.values[key]
        if key in _KEYS:
            default = _KEYS[key][1]
            if default is _REQUIRED:
                raise ConfigError("missing required key %r" % key)
            return default
        raise ConfigError("unknown key %r" % key)

    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def echo(self):
        """All effective key/value pairs, sorted, for the run manifest."""
        out = {}
        for key, (_, default) in _KEYS.items():
            if default is _REQUIRED and key not in self.values:
                continue
            out[key] = self.get(key)
        out.update(self.values)
        return sorted((k, v) for k, v in out.items() if v is not None)

    def params(self) -> TreeParams:
        length_overrides, weight_overrides = {}, {}
        for key, val in self.values.items():
            m = re.match(r"^tree\.length_override\.(\d+)\.(\d+)$", key)
            if m:
                length_overrides[(int(m.group(1)), int(m.group(2)))] = val
            m = re.match(r"^tree\.weight_override\.(\d+)\.(\d+)$", key)
            if m:
                weight_overrides[(int(m.group(1)), int(m.group(2)))] = val
        return TreeParams(
            p=self.get("tree.p"), ell=self.get("tree.ell"), omega=self.get("tree.omega"),
            L0=self.get("tree.L0"), omega0=self.get("tree.omega0"), N1=self.get("tree.N1"),
            length_overrides=length_overrides, weight_overrides=weight_overrides)

    def exterior_source(self) -> RadialSource | None:
        terms = []
        for key, val in self.values.items():
            m = re.match(r"^source\.exterior\.profile\.(-?\d+)$", key)
            if m:
                terms.append((int(m.group(1)), val))
        if not terms:
            return None
        return RadialSource(R=self.get("interface.radius"),
                            r_max=self.get("source.exterior.r_max"), terms=terms)

    def manufactured(self) -> FourierFn | None:
        mode = self.get("transmission.manufactured_mode")
        if mode is None:
            return None
        amp = self.get("transmission.manufactured_amplitude")
        modes = {mode: amp} if mode == 0 else {mode: amp, -mode: amp}
        return FourierFn.from_modes(self.get("interface.radius"), modes)

    def transmission(self, level: int | None = None):
        """Build the TransmissionConfig at the given level (default interface.N)."""
        from .calculus import constant_function
        from .transmission import TransmissionConfig
        from .tree import build_condensed

        params = self.params()
        if level is None:
            level = self.get("interface.N")
        source_depth = self.get("transmission.source_depth")
        if source_depth is None:
            source_depth = level + 4
        tree_source = None
        const = self.get("source.tree.constant")
        if const != 0:
            tree_source = constant_function(build_condensed(params, source_depth), const)
        return TransmissionConfig(
            params=params, level=level, alpha1=self.get("transmission.alpha1"),
            alpha0=self.get("transmission.alpha0"), c_root=self.get("transmission.c_root"),
            tree_source=tree_source, exterior_source=self.exterior_source(),
            source_depth=source_depth, R=self.get("interface.radius"))


def parse_text(text: str, origin: str = "<config>") -> RunConfig:
    values = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError("%s, line %d: unknown section [%s]" % (origin, lineno, section))
            continue
        if "=" not in line:
            raise ConfigError("%s, line %d: expected 'key = value', got %r"
                              % (origin, lineno, raw.strip()))
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        candidates = ["%s.%s" % (section, key)] if section else []
        if "." in key:
            candidates.append(key)
        full, parser = None, None
        for cand in candidates:
            if cand in _KEYS:
                full, parser = cand, _KEYS[cand][0]
                break
            for pattern, pparser in _PATTERNS:
                if pattern.match(cand):
                    full, parser = cand, pparser
                    break
            if parser is not None:
                break
        if parser is None:
            shown = candidates[0] if candidates else key
            raise ConfigError("%s, line %d: unknown key %r" % (origin, lineno, shown))
        if full in values:
            raise ConfigError("%s, line %d: duplicate key %r" % (origin, lineno, full))
        try:
            parsed = parser(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError("%s, line %d: bad value for %r: %s"
                              % (origin, lineno, full, exc)) from exc
        if isinstance(parsed, float) and not math.isfinite(parsed):
            raise ConfigError("%s, line %d: non-finite value for %r" % (origin, lineno, full))
        values[full] = parsed
    for key, (_, default) in _KEYS.items():
        if default is _REQUIRED and key not in values:
            raise ConfigError("%s: missing required key %r" % (origin, key))
    return RunConfig(values=values, path=None if origin == "<config>" else origin, text=text)


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %r: %s" % (path, exc)) from exc
    return parse_text(text, origin=path)
