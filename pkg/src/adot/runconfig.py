"""Run configuration: one YAML document drives every CLI command.

Values are validated at load time with file and line numbers in the error
messages; command-line overrides address fields by their config path
(``--solver.tolerance 1e-6``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .local import SolverConfig
from .objective import PenaltyConfig
from .transport import GlobalConfig, PAIRINGS

__all__ = ["ConfigError", "RunConfig", "load_config", "apply_overrides"]


class ConfigError(ValueError):
    """Invalid configuration; message carries file and line."""


_DEFAULTS = {
    "seed": 0,
    "out": "out",
    "deterministic": True,
    "generate": {},
    "data": {},
    "features": {
        "scale_form": "auto",
        "potential_bumps": 1,
        "discriminator_bumps": 2,
    },
    "penalty": {"lam": 1e-3, "epsilon": "auto", "diameter": "auto"},
    "solver": {
        "eta0": 0.1,
        "eta_min": 1e-8,
        "eta_max": 1e6,
        "grow": 2.0,
        "shrink": 0.5,
        "tolerance": 1e-4,
        "max_iter": 250,
        "gauss_newton": False,
    },
    "transport": {
        "n_steps": 10,
        "max_sweeps": 5,
        "sweep_tol": 1e-3,
        "pairing": "auto",
    },
    "benchmark": {
        "kind": "steps",
        "params": [1, 10],
        "seeds": [1, 2, 3, 4, 5],
        "epsilon": 0.25,
        "n_fixed": 500,
        "k_fixed": 10,
    },
    "plots": {"bins": 40, "grid_points": 400, "render": True},
}

# path -> (predicate, message); checked only when the value is numeric
_CHECKS = {
    "seed": (lambda v: isinstance(v, int), "must be an integer"),
    "penalty.lam": (lambda v: v >= 0, "must be >= 0"),
    "penalty.epsilon": (lambda v: v == "auto" or v > 0, "must be 'auto' or > 0"),
    "penalty.diameter": (lambda v: v == "auto" or v > 0, "must be 'auto' or > 0"),
    "features.potential_bumps": (lambda v: isinstance(v, int) and v >= 0, "must be an integer >= 0"),
    "features.discriminator_bumps": (lambda v: isinstance(v, int) and v >= 0, "must be an integer >= 0"),
    "features.scale_form": (
        lambda v: v in ("auto", "full", "isotropic", "directional", "diagonal"),
        "must be one of auto/full/isotropic/directional/diagonal"),
    "solver.eta0": (lambda v: v > 0, "must be > 0"),
    "solver.eta_min": (lambda v: v > 0, "must be > 0"),
    "solver.eta_max": (lambda v: v > 0, "must be > 0"),
    "solver.grow": (lambda v: v > 1, "must be > 1"),
    "solver.shrink": (lambda v: 0 < v < 1, "must be in (0, 1)"),
    "solver.tolerance": (lambda v: v > 0, "must be > 0"),
    "solver.max_iter": (lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
    "transport.n_steps": (lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
    "transport.max_sweeps": (lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
    "transport.sweep_tol": (lambda v: v > 0, "must be > 0"),
    "transport.pairing": (lambda v: v in PAIRINGS + ("auto",),
                          f"must be one of {('auto',) + PAIRINGS}"),
    "benchmark.kind": (lambda v: v in ("steps", "samples"), "must be 'steps' or 'samples'"),
    "benchmark.epsilon": (lambda v: v > 0, "must be > 0"),
    "plots.bins": (lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
    "plots.grid_points": (lambda v: isinstance(v, int) and v >= 2, "must be an integer >= 2"),
}


def _collect_lines(node, prefix, out):
    """Map config paths to line numbers from the YAML node tree."""
    if isinstance(node, yaml.MappingNode):
        for key_node, val_node in node.value:
            path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
            out[path] = key_node.start_mark.line + 1
            _collect_lines(val_node, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _collect_lines(item, f"{prefix}[{i}]", out)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    """Validated configuration with accessors for the solver objects."""

    doc: dict
    path: str = "<defaults>"
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.doc[key]

    def get(self, path, default=None):
        node = self.doc
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def penalty_config(self, X=None, Y=None) -> PenaltyConfig | None:
        """Explicit PenaltyConfig, or None when both constants are 'auto'
        (the solver then derives them from the data)."""
        p = self.doc["penalty"]
        if p["epsilon"] == "auto" or p["diameter"] == "auto":
            return None
        return PenaltyConfig(lam=float(p["lam"]), epsilon=float(p["epsilon"]),
                             diameter=float(p["diameter"]))

    def solver_config(self) -> SolverConfig:
        s = self.doc["solver"]
        return SolverConfig(
            eta0=float(s["eta0"]), eta_min=float(s["eta_min"]),
            eta_max=float(s["eta_max"]), grow=float(s["grow"]),
            shrink=float(s["shrink"]), tolerance=float(s["tolerance"]),
            max_iter=int(s["max_iter"]), penalty=self.penalty_config(),
            lam=float(self.doc["penalty"]["lam"]),
            gauss_newton=bool(s["gauss_newton"]),
        )

    def global_config(self) -> GlobalConfig:
        t = self.doc["transport"]
        f = self.doc["features"]
        return GlobalConfig(
            N=int(t["n_steps"]), max_sweeps=int(t["max_sweeps"]),
            sweep_tol=float(t["sweep_tol"]), pairing=t["pairing"],
            local=self.solver_config(), seed=int(self.doc["seed"]),
            scale_form=f["scale_form"],
            potential_bumps=int(f["potential_bumps"]),
            discriminator_bumps=int(f["discriminator_bumps"]),
        )

    def validate(self):
        for path, (pred, msg) in _CHECKS.items():
            value = self.get(path)
            if value is None:
                continue
            ok = False
            try:
                ok = bool(pred(value))
            except TypeError:
                ok = False
            if not ok:
                line = self.lines.get(path)
                where = f"{self.path}:{line}" if line else self.path
                raise ConfigError(f"{where}: {path} {msg} (got {value!r})")
        s = self.doc["solver"]
        if not (s["eta_min"] <= s["eta0"] <= s["eta_max"]):
            line = self.lines.get("solver.eta0")
            where = f"{self.path}:{line}" if line else self.path
            raise ConfigError(f"{where}: solver.eta0 must lie in [eta_min, eta_max]")
        p = self.doc["penalty"]
        if p["epsilon"] != "auto" and p["diameter"] != "auto" \
                and not p["epsilon"] < p["diameter"]:
            line = self.lines.get("penalty.epsilon")
            where = f"{self.path}:{line}" if line else self.path
            raise ConfigError(f"{where}: penalty.epsilon must be smaller than penalty.diameter")
        return self


def load_config(path: str | None) -> RunConfig:
    """Load, merge over defaults, and validate a YAML config file."""
    if path is None:
        return RunConfig(doc=_merge(_DEFAULTS, {})).validate()
    with open(path) as f:
        text = f.read()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    lines = {}
    if node is not None:
        _collect_lines(node, "", lines)
    cfg = RunConfig(doc=_merge(_DEFAULTS, doc), path=path, lines=lines)
    return cfg.validate()


def _parse_literal(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def apply_overrides(cfg: RunConfig, pairs: list) -> RunConfig:
    """Apply (path, raw-value) overrides addressed by config path."""
    for path, raw in pairs:
        node = cfg.doc
        parts = path.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = _parse_literal(raw)
    return cfg.validate()
