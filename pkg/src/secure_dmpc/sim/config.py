"""Scenario files: INI-style key/value text with one section per room.

::

    [scenario]
    Ts = 0.25          # sampling period [h]
    Np = 4             # prediction horizon [steps]
    u_max = 4000       # total heating power [W]
    steps = 20
    mode = nominal     # nominal | attacked | secured
    seed = 0

    [negotiation]
    rho = 4000         # omit for 0.9 / max lambda_max(P_i)
    eps = 1e-6
    max_iters = 20000

    [estimator]
    eps_P = 1e-4
    phi = 0.995
    delta = 1e12
    eps_est = 1e-9
    probe_cap = 50
    nominal_source = calibration   # calibration | model

    [agent I]
    C_res = 5e4
    Cs = 8e4
    Rf = 5e-3
    Ri = 2.5e-4
    Ro = 0.5e-4
    q = 10, 0          # diagonal of Q (air, wall)
    r = 1e-7
    reference = 20     # air reference; optional second value for the wall
    x0 = 15, 15
    attack_scale = 4   # optional: reported prices become attack_scale * lam
    attack_start = 6
    attack_end = 19    # optional, inclusive

Keys are case-insensitive. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError, InvalidParameterError
from ..lti import RoomParams
from ..secure import SecureConfig

MODES = ("nominal", "attacked", "secured")
NOMINAL_SOURCES = ("calibration", "model")

_SCENARIO_KEYS = {"ts", "np", "u_max", "steps", "mode", "seed"}
_NEGOTIATION_KEYS = {"rho", "eps", "max_iters"}
_ESTIMATOR_KEYS = {"eps_p", "phi", "delta", "eps_est", "probe_cap", "min_probes",
                   "probe_low", "probe_high", "nominal_source"}
_AGENT_KEYS = {"c_res", "cs", "rf", "ri", "ro", "q", "r", "reference", "x0",
               "attack_scale", "attack_start", "attack_end"}
_AGENT_REQUIRED = {"c_res", "cs", "rf", "ri", "ro"}


@dataclass(frozen=True)
class AgentConfig:
    name: str
    room: RoomParams
    q: tuple = (1.0, 0.0)
    r: float = 1e-7
    reference: tuple = (20.0, 0.0)
    x0: tuple = (15.0, 15.0)
    attack_scale: Optional[float] = None
    attack_start: int = 0
    attack_end: Optional[int] = None


@dataclass(frozen=True)
class ScenarioConfig:
    agents: tuple
    Ts: float = 0.25
    Np: int = 4
    u_max: float = 4000.0
    steps: int = 20
    mode: str = "nominal"
    seed: int = 0
    rho: Optional[float] = None
    eps: float = 1e-6
    max_iters: int = 20_000
    estimator: SecureConfig = field(default_factory=SecureConfig)
    nominal_source: str = "calibration"

    def __post_init__(self):
        if not self.agents:
            raise ConfigError("at least one agent is required")
        if not self.Ts > 0:
            raise ConfigError(f"Ts must be positive, got {self.Ts}")
        if self.Np < 1 or self.steps < 1:
            raise ConfigError("Np and steps must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.nominal_source not in NOMINAL_SOURCES:
            raise ConfigError(f"nominal_source must be one of {NOMINAL_SOURCES}")
        if self.rho is not None and not self.rho > 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if not self.eps > 0 or self.max_iters < 1:
            raise ConfigError("eps must be positive and max_iters >= 1")
        names = [a.name for a in self.agents]
        if len(set(names)) != len(names):
            raise ConfigError("agent names must be unique")

    @property
    def M(self) -> int:
        return len(self.agents)

    def with_mode(self, mode: str) -> "ScenarioConfig":
        return replace(self, mode=mode)


def _line_of(lines, section, key=None):
    current = None
    for no, raw in enumerate(lines, 1):
        s = raw.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
            return no
    return 0


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    lines = text.splitlines()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    def fail(msg, section, key=None):
        line = _line_of(lines, section, key)
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: {msg}")

    def get(section, key, conv):
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            fail(f"bad value for {key!r}: {raw!r} ({exc})", section, key)

    def check_keys(section, allowed):
        for key in parser.options(section):
            if key not in allowed:
                fail(f"unknown key {key!r} in [{section}]", section, key)

    def as_int(v):
        f = float(v)
        if f != int(f):
            raise ValueError("expected an integer")
        return int(f)

    kwargs = {}
    sec_kwargs = {}
    agents = []
    for section in parser.sections():
        if section == "scenario":
            check_keys(section, _SCENARIO_KEYS)
            conv = {"ts": float, "np": as_int, "u_max": float, "steps": as_int,
                    "mode": str.strip, "seed": as_int}
            names = {"ts": "Ts", "np": "Np"}
            for key in parser.options(section):
                kwargs[names.get(key, key)] = get(section, key, conv[key])
        elif section == "negotiation":
            check_keys(section, _NEGOTIATION_KEYS)
            conv = {"rho": float, "eps": float, "max_iters": as_int}
            for key in parser.options(section):
                kwargs[key] = get(section, key, conv[key])
        elif section == "estimator":
            check_keys(section, _ESTIMATOR_KEYS)
            conv = {"eps_p": float, "phi": float, "delta": float, "eps_est": float,
                    "probe_cap": as_int, "min_probes": as_int, "probe_low": float,
                    "probe_high": float, "nominal_source": str.strip}
            for key in parser.options(section):
                val = get(section, key, conv[key])
                if key == "nominal_source":
                    kwargs["nominal_source"] = val
                else:
                    sec_kwargs["eps_P" if key == "eps_p" else key] = val
        elif section.lower().startswith("agent"):
            check_keys(section, _AGENT_KEYS)
            missing = _AGENT_REQUIRED - set(parser.options(section))
            if missing:
                fail(f"missing keys {sorted(missing)} in [{section}]", section)
            name = section[len("agent"):].strip() or str(len(agents) + 1)
            try:
                room = RoomParams(*(get(section, k, float) for k in ("c_res", "cs", "rf", "ri", "ro")))
            except InvalidParameterError as exc:
                fail(str(exc), section)
            a = {"name": name, "room": room}
            if parser.has_option(section, "q"):
                a["q"] = get(section, "q", _floats)
            if parser.has_option(section, "r"):
                a["r"] = get(section, "r", float)
            if parser.has_option(section, "reference"):
                ref = get(section, "reference", _floats)
                a["reference"] = ref + (0.0,) * (2 - len(ref))
            if parser.has_option(section, "x0"):
                a["x0"] = get(section, "x0", _floats)
            if parser.has_option(section, "attack_scale"):
                a["attack_scale"] = get(section, "attack_scale", float)
            if parser.has_option(section, "attack_start"):
                a["attack_start"] = get(section, "attack_start", as_int)
            if parser.has_option(section, "attack_end"):
                a["attack_end"] = get(section, "attack_end", as_int)
            for key, size in (("q", 2), ("reference", 2), ("x0", 2)):
                if key in a and len(a[key]) != size:
                    fail(f"{key!r} needs {size} values", section, key)
            if "q" in a and min(a["q"]) < 0:
                fail("q entries must be non-negative", section, "q")
            if "r" in a and not a["r"] > 0:
                fail("r must be positive", section, "r")
            if a.get("attack_scale") is not None and a["attack_scale"] == 0:
                fail("attack_scale must be non-zero (T must stay invertible)", section, "attack_scale")
            agents.append(AgentConfig(**a))
        else:
            fail(f"unknown section [{section}]", section)

    low = sec_kwargs.pop("probe_low", None)
    high = sec_kwargs.pop("probe_high", None)
    if low is not None or high is not None:
        umax = kwargs.get("u_max", ScenarioConfig.u_max)
        sec_kwargs["probe_bounds"] = (0.0 if low is None else low, umax if high is None else high)
    try:
        estimator = SecureConfig(**sec_kwargs)
        return ScenarioConfig(agents=tuple(agents), estimator=estimator, **kwargs)
    except (InvalidParameterError, ConfigError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, str(path))


def bundled_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"nominal"``."""
    fname = name if name.endswith(".cfg") else f"{name}.cfg"
    return Path(str(resources.files("secure_dmpc") / "scenarios" / fname))


def load_bundled(name: str) -> ScenarioConfig:
    return load_scenario(bundled_path(name))


def stacked_reference(agent: AgentConfig, Np: int) -> np.ndarray:
    return np.tile(np.asarray(agent.reference, dtype=float), Np)
