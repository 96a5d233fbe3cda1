"""Experiment configuration: a sectioned key=value text format with a closed
schema.  Unknown sections or keys are hard errors so that typos cannot
silently invalidate an experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _scalar(tok: str):
    low = tok.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _value(raw: str):
    toks = raw.split()
    if not toks:
        return []
    if len(toks) == 1:
        return _scalar(toks[0])
    return [_scalar(t) for t in toks]


# key -> (required_type, is_list); type None means any scalar
_NUM = (float, int)
SCHEMA = {
    "experiment": {
        "dims": (_NUM, True),
        "seed": (int, False),
        "p_list": (_NUM, True),
    },
    "nonlinearity": {"alpha1": (_NUM, False), "alpha2": (_NUM, False), "c": (_NUM, False)},
    "decay": {"a": (_NUM, False), "D": (_NUM, False)},
    "schedule": {
        "rho": (_NUM, False),
        "gamma_speed": (_NUM, False),
        "delta": (_NUM, False),
        "N": (int, False),
        "omega_star": (_NUM, False),
    },
    "soliton.*": {
        "dim": (int, False),
        "omega": (_NUM, False),
        "v": (_NUM, True),
        "x0": (_NUM, True),
        "gamma": (_NUM, False),
    },
    "grid.*": {"n": (int, False), "L": (_NUM, False)},
    "solver": {
        "dt": (_NUM, False),
        "t0": (_NUM, False),
        "T_end": (_NUM, False),
        "n_time": (int, False),
        "max_iter": (int, False),
        "contraction_tol": (_NUM, False),
        "ball_radius": (_NUM, False),
        "lambda_weight": (_NUM, False),
        "lambda_targets": (_NUM, True),
        "forward_dt": (_NUM, False),
    },
    "estimates": {
        "r": (_NUM, False),
        "s": (_NUM, False),
        "p": (_NUM, False),
        "q": (_NUM, False),
        "t_max": (_NUM, False),
        "n_times": (int, False),
        "gradient": (bool, False),
    },
    "appendixB": {
        "m": (_NUM, False),
        "a": (_NUM, False),
        "p": (_NUM, False),
        "q": (_NUM, False),
    },
    "outputs": {"directory": (None, False), "formats": (None, True)},
}

DEFAULTS = {
    "experiment": {"dims": [1], "seed": 0, "p_list": [2.0, math.inf]},
    "nonlinearity": {"alpha1": 2.0, "alpha2": 2.0, "c": 0.0},
    "decay": {"a": 0.9, "D": 5.0},
    "solver": {
        "dt": 1e-3,
        "t0": 0.0,
        "T_end": 5.0,
        "n_time": 1024,
        "max_iter": 12,
        "contraction_tol": 1e-9,
        "ball_radius": 1.0,
        "lambda_weight": 0.0,
        "lambda_targets": [],
        "forward_dt": 2e-4,
    },
    "estimates": {"r": 2.0, "s": 1.0, "p": 2.0, "q": 2.0, "t_max": 2.0, "n_times": 21, "gradient": False},
    "appendixB": {"m": 0.25, "a": 1.5, "p": 4.0, "q": 2.0},
    "outputs": {"directory": "out", "formats": ["csv", "json"]},
}


def _schema_for(section: str) -> dict:
    if section in SCHEMA:
        return SCHEMA[section]
    head = section.split(".", 1)[0]
    pat = head + ".*"
    if pat in SCHEMA and section.count(".") == 1:
        return SCHEMA[pat]
    raise ConfigError(f"unknown section [{section}]")


def _check_key(section: str, key: str, value):
    schema = _schema_for(section)
    if key not in schema:
        raise ConfigError(f"unknown key {section}.{key}")
    want, is_list = schema[key]
    vals = value if isinstance(value, list) else [value]
    if not is_list and isinstance(value, list):
        raise ConfigError(f"{section}.{key} takes a single value")
    if want is not None:
        for v in vals:
            if want is bool:
                ok = isinstance(v, bool)
            elif want is int:
                ok = isinstance(v, int) and not isinstance(v, bool)
            else:
                ok = isinstance(v, _NUM) and not isinstance(v, bool)
            if not ok:
                raise ConfigError(f"{section}.{key}: bad value {v!r}")
    if is_list and not isinstance(value, list):
        return [value]
    return value


@dataclass
class ExperimentConfig:
    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        if section in self.sections and key in self.sections[section]:
            return self.sections[section][key]
        if section in DEFAULTS and key in DEFAULTS[section]:
            return DEFAULTS[section][key]
        if default is not None:
            return default
        raise ConfigError(f"missing required config value {section}.{key}")

    def has(self, section: str) -> bool:
        return section in self.sections

    def subsections(self, head: str) -> list[str]:
        pre = head + "."
        return sorted(
            (s for s in self.sections if s.startswith(pre)),
            key=lambda s: int(s.split(".", 1)[1]),
        )

    def set(self, dotted: str, raw: str) -> None:
        if dotted.count(".") < 1:
            raise ConfigError(f"--set expects section.key=..., got {dotted!r}")
        section, key = dotted.rsplit(".", 1)
        value = _check_key(section, key, _value(raw))
        self.sections.setdefault(section, {})[key] = value

    def echo(self) -> dict:
        return {s: dict(kv) for s, kv in sorted(self.sections.items())}


def parse_config(text: str, origin: str = "<config>") -> ExperimentConfig:
    cfg = ExperimentConfig()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            _schema_for(section)
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value, got {raw!r}")
        if section is None:
            raise ConfigError(f"{origin}:{lineno}: key outside any [section]")
        key, _, rest = line.partition("=")
        key = key.strip()
        value = _check_key(section, key, _value(rest.strip()))
        cfg.sections[section][key] = value
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, origin=str(path))
