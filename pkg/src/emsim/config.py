"""Run configuration: flat dotted-key documents with nominal defaults.

The native format is one ``key = value`` pair per line, ``#`` comments
allowed.  Values are JSON literals (numbers, booleans, lists) or bare
strings.  A JSON document (flat dotted keys or nested objects) is accepted
as an alternative ingest format.  Every key omitted falls back to the
nominal value, so an empty document reproduces the reference setup exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, EmsimError
from .plant import PlantParams
from .simulate import RoadProfile, SimConfig
from .synthesis import LqWeights, NoiseModel

_PLANT_KEYS = ("m", "r_coil", "l_coil", "i0", "x0", "k_em",
               "e_pot", "d_pot", "g", "mu0", "n_turns", "a_pole")
_KNOWN_KEYS = (
    {f"plant.{k}" for k in _PLANT_KEYS}
    | {"lqg.q", "lqg.r", "lqg.n_c", "lqg.xi", "lqg.theta", "lqg.n_f"}
    | {"lqi.q", "lqi.r", "lqi.n"}
    | {"road.shape", "road.amplitude", "road.start", "road.duration"}
    | {"sim.dt", "sim.t_final", "sim.seed", "sim.noise_on", "sim.initial_state"}
    | {"out.dir"}
)

PLANT_ORDER = 3


@dataclass(frozen=True)
class RunConfig:
    """Everything one toolkit run needs: plant, weights, road, integration."""

    plant: PlantParams
    lqg_weights: LqWeights
    noise: NoiseModel
    lqi_weights: LqWeights
    road: RoadProfile
    sim: SimConfig
    out_dir: str = "out"

    @classmethod
    def defaults(cls) -> "RunConfig":
        return parse_config("")


def _weight_matrix(value, size: int, key: str) -> np.ndarray:
    """Scalar -> scaled identity; flat list -> diagonal; nested -> full."""
    if np.isscalar(value):
        return float(value) * np.eye(size)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.size != size:
            raise ConfigError(f"{key}: expected {size} diagonal entries, got {arr.size}")
        return np.diag(arr)
    if arr.shape != (size, size):
        raise ConfigError(f"{key}: expected a {size}x{size} matrix, got shape {arr.shape}")
    return arr


def _column(value, size: int, key: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1 or arr.size != size:
        raise ConfigError(f"{key}: expected a length-{size} vector")
    return arr.reshape(size, 1)


def _flatten(obj, prefix: str = "") -> dict:
    """Flatten nested JSON objects into dotted keys; lists stay values."""
    flat = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _parse_kv_lines(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno,
                              column=len(line.rstrip()) + 1)
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if not key:
            raise ConfigError("missing key before '='", line=lineno, column=1)
        if not value_text:
            raise ConfigError(f"missing value for '{key}'", line=lineno,
                              column=line.index("=") + 2)
        try:
            value = json.loads(value_text)
        except json.JSONDecodeError:
            value = value_text  # bare string, e.g. road.shape = half_sine_bump
        values[key] = value
    return values


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document and fill nominal defaults.

    Raises ``ConfigError`` with the offending line/column for syntax
    problems, the offending key for schema violations, and the failed
    constraint for invariant violations.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}",
                              line=exc.lineno, column=exc.colno) from exc
        if not isinstance(data, dict):
            raise ConfigError("JSON configuration must be an object")
        values = _flatten(data)
    else:
        values = _parse_kv_lines(text)

    unknown = sorted(set(values) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}")

    def pop(key, default):
        return values.pop(key, default)

    n = PLANT_ORDER
    try:
        plant = PlantParams(
            m=float(pop("plant.m", 1.0)),
            r_coil=float(pop("plant.r_coil", 10.0)),
            l_coil=float(pop("plant.l_coil", 0.2)),
            i0=float(pop("plant.i0", 0.8)),
            x0=float(pop("plant.x0", 0.03)),
            k_em=float(pop("plant.k_em", 2.9e-6)),
            e_pot=float(pop("plant.e_pot", 5.0)),
            d_pot=float(pop("plant.d_pot", 0.13)),
            g=float(pop("plant.g", 9.81)),
            mu0=_opt_float(pop("plant.mu0", None)),
            n_turns=_opt_float(pop("plant.n_turns", None)),
            a_pole=_opt_float(pop("plant.a_pole", None)),
        )
        lqg_weights = LqWeights(
            q=_weight_matrix(pop("lqg.q", 5.0), n, "lqg.q"),
            r=_weight_matrix(pop("lqg.r", 10.0), 1, "lqg.r"),
            n_c=_column(pop("lqg.n_c", [0.0] * n), n, "lqg.n_c"),
        )
        noise = NoiseModel(
            xi=_weight_matrix(pop("lqg.xi", 5e-4), 1, "lqg.xi"),
            theta=_weight_matrix(pop("lqg.theta", 1e-7), 1, "lqg.theta"),
            n_f=_weight_matrix(pop("lqg.n_f", 0.0), 1, "lqg.n_f"),
        )
        lqi_weights = LqWeights(
            q=_weight_matrix(pop("lqi.q", 5.0), n + 1, "lqi.q"),
            r=_weight_matrix(pop("lqi.r", 10.0), 1, "lqi.r"),
            n_c=_column(pop("lqi.n", [0.0, 1.0, 1.0, 1.0]), n + 1, "lqi.n"),
        )
        road = RoadProfile(
            shape=str(pop("road.shape", "half_sine_bump")),
            amplitude=float(pop("road.amplitude", 0.1)),
            start=float(pop("road.start", 1.0)),
            duration=float(pop("road.duration", 6.0)),
        )
        noise_on = pop("sim.noise_on", False)
        if not isinstance(noise_on, bool):
            raise ConfigError("sim.noise_on must be true or false")
        sim = SimConfig(
            dt=float(pop("sim.dt", 1e-3)),
            t_final=float(pop("sim.t_final", 10.0)),
            seed=int(pop("sim.seed", 0)),
            noise_on=noise_on,
            initial_state=tuple(pop("sim.initial_state", (0.0,) * n)),
        )
        out_dir = str(pop("out.dir", "out"))
    except ConfigError:
        raise
    except (EmsimError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(plant=plant, lqg_weights=lqg_weights, noise=noise,
                     lqi_weights=lqi_weights, road=road, sim=sim,
                     out_dir=out_dir)


def _opt_float(value):
    return None if value is None else float(value)


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, str)):
        return str(value)
    if isinstance(value, np.ndarray):
        return json.dumps(value.tolist())
    if isinstance(value, (list, tuple)):
        return json.dumps(list(value))
    raise TypeError(f"cannot render {type(value)}")


def render_config(cfg: RunConfig) -> str:
    """Render a RunConfig as the flat key-value document.

    Lossless: ``parse_config(render_config(cfg)) == cfg`` for every valid
    configuration.
    """
    p = cfg.plant
    lines = [
        f"plant.m = {_render_value(p.m)}",
        f"plant.r_coil = {_render_value(p.r_coil)}",
        f"plant.l_coil = {_render_value(p.l_coil)}",
        f"plant.i0 = {_render_value(p.i0)}",
        f"plant.x0 = {_render_value(p.x0)}",
        f"plant.k_em = {_render_value(p.k_em)}",
        f"plant.e_pot = {_render_value(p.e_pot)}",
        f"plant.d_pot = {_render_value(p.d_pot)}",
        f"plant.g = {_render_value(p.g)}",
    ]
    for name in ("mu0", "n_turns", "a_pole"):
        value = getattr(p, name)
        if value is not None:
            lines.append(f"plant.{name} = {_render_value(value)}")
    lines += [
        f"lqg.q = {_render_value(cfg.lqg_weights.q)}",
        f"lqg.r = {_render_value(cfg.lqg_weights.r)}",
        f"lqg.n_c = {_render_value(cfg.lqg_weights.n_c)}",
        f"lqg.xi = {_render_value(cfg.noise.xi)}",
        f"lqg.theta = {_render_value(cfg.noise.theta)}",
        f"lqg.n_f = {_render_value(cfg.noise.n_f)}",
        f"lqi.q = {_render_value(cfg.lqi_weights.q)}",
        f"lqi.r = {_render_value(cfg.lqi_weights.r)}",
        f"lqi.n = {_render_value(cfg.lqi_weights.n_c)}",
        f"road.shape = {cfg.road.shape}",
        f"road.amplitude = {_render_value(cfg.road.amplitude)}",
        f"road.start = {_render_value(cfg.road.start)}",
        f"road.duration = {_render_value(cfg.road.duration)}",
        f"sim.dt = {_render_value(cfg.sim.dt)}",
        f"sim.t_final = {_render_value(cfg.sim.t_final)}",
        f"sim.seed = {_render_value(cfg.sim.seed)}",
        f"sim.noise_on = {_render_value(cfg.sim.noise_on)}",
        f"sim.initial_state = {_render_value(cfg.sim.initial_state)}",
        f"out.dir = {cfg.out_dir}",
    ]
    return "\n".join(lines) + "\n"
