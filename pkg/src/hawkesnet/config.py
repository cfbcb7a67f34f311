"""INI run configuration with a closed schema.

Every key has a default; unknown sections or keys are rejected with their
``section.key`` path. ``explain()`` prints the schema with defaults.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable

from .errors import ConfigError
from .estimate import FitOptions
from .kernel import GroundParams
from .markmodel import DEFAULT_STATS, MarkModelSpec
from .process import ModelSpec


def _floats(s: str) -> tuple[float, ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(x) for x in s.replace(",", " ").split())


def _words(s: str) -> tuple[str, ...]:
    return tuple(x for x in s.replace(",", " ").split() if x)


def _matrix(s: str) -> tuple[tuple[float, ...], ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(_floats(row) for row in s.split(";"))


def _optional_float(s: str) -> float | None:
    s = s.strip().lower()
    return None if s in ("", "none") else float(s)


def _pairs(s: str) -> dict[str, float]:
    out = {}
    for item in _words(s):
        k, sep, v = item.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {item!r}")
        out[k] = float(v)
    return out


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# section -> key -> (default text, parser, help)
SCHEMA: dict[str, dict[str, tuple[str, Callable[[str], Any], str]]] = {
    "ground": {
        "mu": ("10", float, "background rate"),
        "K": ("0.5", float, "excitation amplitude"),
        "beta": ("2", float, "excitation decay rate"),
    },
    "mark": {
        "variant": ("ba", str, "mark model: ba, cs, sbm or ls"),
        "tau": ("0.5", float, "decay rate of edge probabilities"),
        "theta": ("", _floats, "coefficients (cs: one per statistic; ls: one)"),
        "stats": (" ".join(DEFAULT_STATS), _words, "change statistics used by cs"),
        "nu": ("0", float, "baseline edge weight (cs)"),
        "lambda_nodes": ("1", float, "mean number of new nodes per event (cs, sbm, ls)"),
        "block_probs": ("", _floats, "community probabilities (sbm)"),
        "block_matrix": ("", _matrix, "rows separated by ';' (sbm)"),
        "latent_dim": ("2", int, "latent space dimension (ls)"),
        "sigma_ls": ("1", float, "latent position scale (ls)"),
        "edge_scope": ("auto", str, "new_node_only, all_pairs or auto (cs: all_pairs, else new_node_only)"),
        "activity": ("arrival", str, "activity time of a node: arrival or last_edge"),
    },
    "horizon": {
        "T": ("100", float, "observation window [0, T]"),
        "node_cutoff": ("none", _optional_float, "fraction of T after which no nodes are added"),
    },
    "optimizer": {
        "max_evals": ("20000", int, "evaluation budget per parameter block"),
        "restarts": ("5", int, "random restarts for the ground block"),
        "mark_restarts": ("1", int, "random restarts for the mark blocks"),
        "restart_scale": ("0.5", float, "sd of restart perturbations in transformed space"),
        "fix": ("", _pairs, "parameters held fixed, as name=value"),
        "init": ("", _pairs, "starting values, as name=value"),
        "start_at_truth": ("false", _bool, "start fits from the configured parameters"),
        "std_errors": ("hessian", str, "hessian, replication or none"),
    },
    "seeds": {
        "master": ("0", int, "master seed; replications use derived child seeds"),
    },
    "io": {
        "events": ("", str, "event-stream path"),
        "out": ("", str, "output path"),
        "report": ("", str, "fit report path"),
    },
}


@dataclass
class RunConfig:
    values: dict[str, dict[str, Any]] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, raw: str) -> None:
        self.values[section][key] = _parse(section, key, raw)

    def model_spec(self) -> ModelSpec:
        g, m, h = self.values["ground"], self.values["mark"], self.values["horizon"]
        scope = None if m["edge_scope"] == "auto" else m["edge_scope"]
        try:
            mark = MarkModelSpec(m["variant"], m["tau"], m["theta"], m["stats"], m["nu"], m["lambda_nodes"],
                                 m["block_probs"], m["block_matrix"], m["latent_dim"], m["sigma_ls"], scope,
                                 m["activity"])
            return ModelSpec(GroundParams(g["mu"], g["K"], g["beta"]), mark, h["T"], h["node_cutoff"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def fit_options(self) -> FitOptions:
        o = self.values["optimizer"]
        return FitOptions(fixed=dict(o["fix"]), init=dict(o["init"]), max_evals=o["max_evals"],
                          restarts=o["restarts"], mark_restarts=o["mark_restarts"],
                          restart_scale=o["restart_scale"], seed=self.values["seeds"]["master"])

    def to_ini(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_render(self.values[section][key])}")
            lines.append("")
        return "\n".join(lines)


def _render(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict):
        return " ".join(f"{k}={x:g}" for k, x in v.items())
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return "; ".join(" ".join(f"{x:g}" for x in r) for r in v)
        return " ".join(f"{x:g}" if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def _parse(section: str, key: str, raw: str):
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {section}.{key}")
    try:
        return SCHEMA[section][key][1](raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from None


def defaults() -> RunConfig:
    return RunConfig({s: {k: _parse(s, k, d) for k, (d, _, _) in keys.items()} for s, keys in SCHEMA.items()})


def loads(text: str, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";;"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    cfg = base or defaults()
    for section in parser.sections():
        for key, raw in parser.items(section):
            cfg.set(section, key, raw)
    return cfg


def load(path: str, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read(), base)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


PRESETS = ("ba", "cs", "contacts")


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("hawkesnet.presets").joinpath(f"{name}.ini").read_text(encoding="utf-8")
    return loads(text)


def explain() -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (default, _, help_) in keys.items():
            lines.append(f"{key} = {default}".rstrip() + f"    ; {help_}")
        lines.append("")
    return "\n".join(lines)


def spec_to_json(spec: ModelSpec) -> str:
    return json.dumps(spec.to_dict(), sort_keys=True)
