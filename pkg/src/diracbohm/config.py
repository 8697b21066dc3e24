"""Scenario configuration: strict JSON schema and canonical serialization.

Configs are plain JSON with nested sections. Validation is deliberately
strict: unknown keys anywhere are rejected with their dotted path, because
a silently ignored typo in a physics parameter is the worst failure mode a
scenario runner can have. Numbers in all emitted artifacts are formatted
with 17 significant digits so that reruns and cross-platform diffs compare
meaningfully.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .dynamics import IntegratorOptions
from .errors import ConfigError
from .models import (
    CircularWave,
    PlaneWaveSpec,
    PlaneWaveSuperposition,
    QuadratureSpec,
    SumModel,
    WaveFunctionModel,
    gaussian_packet,
    spanning_waves,
    speed_c_superposition,
)

_MODEL_KINDS = ("circular", "plane_waves", "packet", "speed_c")


def _err(path: str, msg: str) -> None:
    raise ConfigError(f"{path}: {msg}")


def _check_keys(d: dict, path: str, required: tuple, optional: tuple) -> None:
    if not isinstance(d, dict):
        _err(path, f"expected an object, got {type(d).__name__}")
    unknown = sorted(set(d) - set(required) - set(optional))
    if unknown:
        _err(path, f"unknown keys {unknown}")
    missing = sorted(set(required) - set(d))
    if missing:
        _err(path, f"missing required keys {missing}")


def _as_float(v: Any, path: str, lo=None, hi=None, lo_strict=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _err(path, f"expected a number, got {v!r}")
    v = float(v)
    if not np.isfinite(v):
        _err(path, f"must be finite, got {v!r}")
    if lo is not None and (v <= lo if lo_strict else v < lo):
        _err(path, f"must be {'>' if lo_strict else '>='} {lo}, got {v!r}")
    if hi is not None and v > hi:
        _err(path, f"must be <= {hi}, got {v!r}")
    return v


def _as_int(v: Any, path: str, lo=None, hi=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        _err(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        _err(path, f"must be >= {lo}, got {v!r}")
    if hi is not None and v > hi:
        _err(path, f"must be <= {hi}, got {v!r}")
    return int(v)


def _as_bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        _err(path, f"expected true or false, got {v!r}")
    return v


def _as_vec3(v: Any, path: str) -> tuple[float, float, float]:
    if not isinstance(v, list) or len(v) != 3:
        _err(path, f"expected a list of 3 numbers, got {v!r}")
    return tuple(_as_float(c, f"{path}[{i}]") for i, c in enumerate(v))


def _as_pair(v: Any, path: str) -> tuple[float, float]:
    if not isinstance(v, list) or len(v) != 2:
        _err(path, f"expected a list of 2 numbers, got {v!r}")
    return tuple(_as_float(c, f"{path}[{i}]") for i, c in enumerate(v))


def _as_complex(v: Any, path: str) -> complex:
    re, im = _as_pair(v, path)
    return complex(re, im)


def _as_span(v: Any, path: str) -> tuple[float, float]:
    a, b = _as_pair(v, path)
    if not a < b:
        _err(path, f"need t1 < t2, got {v!r}")
    return a, b


def _validate_model(cfg: Any, path: str = "model") -> dict:
    _check_keys(
        cfg,
        path,
        required=("kind",),
        optional=(
            "omega",
            "mass",
            "waves",
            "center",
            "width",
            "branch",
            "quadrature",
            "event",
            "target",
            "wavenumber",
            "perturbation",
        ),
    )
    kind = cfg["kind"]
    if kind not in _MODEL_KINDS:
        _err(f"{path}.kind", f"must be one of {_MODEL_KINDS}, got {kind!r}")
    allowed = {"kind", "perturbation"}
    if kind == "circular":
        allowed |= {"omega"}
        _as_float(cfg.get("omega", 1.0), f"{path}.omega", lo=0.0, lo_strict=True)
    elif kind == "plane_waves":
        allowed |= {"mass", "waves"}
        _as_float(cfg.get("mass", 1.0), f"{path}.mass", lo=0.0)
        waves = cfg.get("waves")
        if not isinstance(waves, list) or not waves:
            _err(f"{path}.waves", "expected a nonempty list of waves")
        for i, w in enumerate(waves):
            wpath = f"{path}.waves[{i}]"
            _check_keys(w, wpath, required=("k", "branch"), optional=("amplitude",))
            k = _as_vec3(w["k"], f"{wpath}.k")
            if k == (0.0, 0.0, 0.0):
                _err(f"{wpath}.k", "wave vector must be nonzero")
            _as_int(w["branch"], f"{wpath}.branch", lo=1, hi=2)
            if "amplitude" in w:
                _as_pair(w["amplitude"], f"{wpath}.amplitude")
    elif kind == "packet":
        allowed |= {"mass", "center", "width", "branch", "quadrature"}
        _as_float(cfg.get("mass", 1.0), f"{path}.mass", lo=0.0)
        _as_vec3(cfg.get("center", [0.0, 0.0, 2.0]), f"{path}.center")
        _as_float(cfg.get("width", 0.5), f"{path}.width", lo=0.0, lo_strict=True)
        _as_int(cfg.get("branch", 1), f"{path}.branch", lo=1, hi=2)
        quad = cfg.get("quadrature", {})
        _check_keys(
            quad, f"{path}.quadrature", required=(), optional=("nodes_per_axis", "radius")
        )
        _as_int(quad.get("nodes_per_axis", 5), f"{path}.quadrature.nodes_per_axis", lo=1)
        _as_float(
            quad.get("radius", 1.25),
            f"{path}.quadrature.radius",
            lo=0.0,
            lo_strict=True,
        )
    elif kind == "speed_c":
        allowed |= {"mass", "event", "target", "wavenumber"}
        _as_float(cfg.get("mass", 1.0), f"{path}.mass", lo=0.0)
        event = cfg.get("event", [0.0, 0.0, 0.0, 0.0])
        if not isinstance(event, list) or len(event) != 4:
            _err(f"{path}.event", f"expected a list of 4 numbers, got {event!r}")
        for i, c in enumerate(event):
            _as_float(c, f"{path}.event[{i}]")
        target = cfg.get("target", [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
        if not isinstance(target, list) or len(target) != 4:
            _err(f"{path}.target", "expected 4 [re, im] pairs")
        for i, c in enumerate(target):
            _as_pair(c, f"{path}.target[{i}]")
        _as_float(
            cfg.get("wavenumber", 1.0), f"{path}.wavenumber", lo=0.0, lo_strict=True
        )
    stray = sorted(set(cfg) - allowed)
    if stray:
        _err(path, f"keys {stray} do not apply to kind {kind!r}")
    if "perturbation" in cfg:
        ppath = f"{path}.perturbation"
        _check_keys(
            cfg["perturbation"],
            ppath,
            required=("amplitude", "seed"),
            optional=("wavenumber",),
        )
        _as_float(cfg["perturbation"]["amplitude"], f"{ppath}.amplitude", lo=0.0)
        _as_int(cfg["perturbation"]["seed"], f"{ppath}.seed")
        _as_float(
            cfg["perturbation"].get("wavenumber", 1.0),
            f"{ppath}.wavenumber",
            lo=0.0,
            lo_strict=True,
        )
    return cfg


def build_model(cfg: dict) -> WaveFunctionModel:
    """Construct the wave-function model described by a validated section.

    Value problems the schema cannot see (a speed-c target outside the
    eigenspace, an oversized quadrature) surface here as ConfigError.
    """
    try:
        return _build_model(cfg)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc


def _build_model(cfg: dict) -> WaveFunctionModel:
    kind = cfg["kind"]
    if kind == "circular":
        model: WaveFunctionModel = CircularWave(cfg.get("omega", 1.0))
    elif kind == "plane_waves":
        specs = [
            PlaneWaveSpec(
                tuple(w["k"]),
                w["branch"],
                _as_complex(w.get("amplitude", [1.0, 0.0]), "model.waves.amplitude"),
            )
            for w in cfg["waves"]
        ]
        model = PlaneWaveSuperposition(specs, cfg.get("mass", 1.0))
    elif kind == "packet":
        quad = cfg.get("quadrature", {})
        model = gaussian_packet(
            center=cfg.get("center", [0.0, 0.0, 2.0]),
            width=cfg.get("width", 0.5),
            branch=cfg.get("branch", 1),
            quad=QuadratureSpec(
                nodes_per_axis=quad.get("nodes_per_axis", 5),
                radius=quad.get("radius", 1.25),
            ),
            mass=cfg.get("mass", 1.0),
        )
    elif kind == "speed_c":
        target = np.array([complex(re, im) for re, im in cfg.get(
            "target", [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]
        )])
        model = speed_c_superposition(
            np.asarray(cfg.get("event", [0.0, 0.0, 0.0, 0.0]), dtype=float),
            target,
            cfg.get("wavenumber", 1.0),
            cfg.get("mass", 1.0),
        )
    else:  # pragma: no cover - kinds are validated upstream
        raise ConfigError(f"unknown model kind {kind!r}")
    pert = cfg.get("perturbation")
    if pert is not None and pert["amplitude"] > 0:
        rng = np.random.default_rng(pert["seed"])
        raw = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        coeffs = pert["amplitude"] * raw / np.sqrt(2.0)
        extra = PlaneWaveSuperposition(
            spanning_waves(pert.get("wavenumber", 1.0), coeffs), model.mass
        )
        model = SumModel([model, extra])
    return model


def _validate_box(cfg: Any, path: str) -> dict:
    _check_keys(cfg, path, required=("t_span", "lo", "hi"), optional=("resolution",))
    _as_span(cfg["t_span"], f"{path}.t_span")
    lo = _as_vec3(cfg["lo"], f"{path}.lo")
    hi = _as_vec3(cfg["hi"], f"{path}.hi")
    if not all(a < b for a, b in zip(lo, hi)):
        _err(path, f"need lo < hi per axis, got {lo} vs {hi}")
    res = cfg.get("resolution", [17, 17, 17, 17])
    if not isinstance(res, list) or len(res) != 4:
        _err(f"{path}.resolution", f"expected 4 integers, got {res!r}")
    for i, r in enumerate(res):
        _as_int(r, f"{path}.resolution[{i}]", lo=2)
    return cfg


_SIGMA_TOL_KEYS = (
    "newton_tol",
    "margin_tol",
    "degenerate_tol",
    "degenerate_cell_fraction",
    "max_iter",
)


def _validate_sigma_tols(cfg: dict, path: str) -> None:
    for key in ("newton_tol", "margin_tol", "degenerate_tol"):
        if key in cfg:
            _as_float(cfg[key], f"{path}.{key}", lo=0.0, lo_strict=True)
    if "degenerate_cell_fraction" in cfg:
        _as_float(cfg["degenerate_cell_fraction"], f"{path}.degenerate_cell_fraction",
                  lo=0.0, hi=1.0)
    if "max_iter" in cfg:
        _as_int(cfg["max_iter"], f"{path}.max_iter", lo=1)


@dataclass
class ScenarioConfig:
    """A validated scenario: model plus optional per-subcommand sections."""

    raw: dict
    model: dict
    integrator: IntegratorOptions
    simulate: dict | None
    ensemble: dict | None
    sigma: dict | None
    perturb: dict | None
    output_dir: str


def parse_config(raw: Any) -> ScenarioConfig:
    """Validate a parsed JSON document into a ScenarioConfig."""
    _check_keys(
        raw,
        "config",
        required=("model",),
        optional=(
            "integrator",
            "simulate",
            "ensemble",
            "sigma",
            "perturb",
            "output_dir",
        ),
    )
    model = _validate_model(raw["model"])

    icfg = raw.get("integrator", {})
    _check_keys(
        icfg,
        "integrator",
        required=(),
        optional=(
            "rel_tol",
            "abs_tol",
            "max_step",
            "psi_floor",
            "speed_event_epsilon",
            "max_samples",
            "fixed_step",
        ),
    )
    try:
        integrator = IntegratorOptions(**icfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from exc

    simulate = raw.get("simulate")
    if simulate is not None:
        _check_keys(
            simulate, "simulate", required=("t_span", "initial_positions"), optional=()
        )
        _as_span(simulate["t_span"], "simulate.t_span")
        pos = simulate["initial_positions"]
        if not isinstance(pos, list) or not pos:
            _err("simulate.initial_positions", "expected a nonempty list")
        for i, p in enumerate(pos):
            _as_vec3(p, f"simulate.initial_positions[{i}]")

    ensemble = raw.get("ensemble")
    if ensemble is not None:
        _check_keys(
            ensemble,
            "ensemble",
            required=("region", "t_span", "epsilons", "histogram"),
            optional=("transport_step", "lost_tol"),
        )
        region = ensemble["region"]
        _check_keys(
            region, "ensemble.region", required=("lo", "hi", "n", "seed"), optional=()
        )
        _as_vec3(region["lo"], "ensemble.region.lo")
        _as_vec3(region["hi"], "ensemble.region.hi")
        _as_int(region["n"], "ensemble.region.n", lo=1)
        _as_int(region["seed"], "ensemble.region.seed")
        _as_span(ensemble["t_span"], "ensemble.t_span")
        eps = ensemble["epsilons"]
        if not isinstance(eps, list) or not eps:
            _err("ensemble.epsilons", "expected a nonempty list")
        for i, e in enumerate(eps):
            v = _as_float(e, f"ensemble.epsilons[{i}]")
            if not 0.0 < v < 1.0:
                _err(f"ensemble.epsilons[{i}]", f"must lie in (0, 1), got {v!r}")
        hist = ensemble["histogram"]
        _check_keys(
            hist, "ensemble.histogram", required=("lo", "hi", "bins"), optional=()
        )
        _as_vec3(hist["lo"], "ensemble.histogram.lo")
        _as_vec3(hist["hi"], "ensemble.histogram.hi")
        bins = hist["bins"]
        if not isinstance(bins, list) or len(bins) != 3:
            _err("ensemble.histogram.bins", f"expected 3 integers, got {bins!r}")
        for i, b in enumerate(bins):
            _as_int(b, f"ensemble.histogram.bins[{i}]", lo=1)
        if "transport_step" in ensemble:
            _as_float(
                ensemble["transport_step"],
                "ensemble.transport_step",
                lo=0.0,
                lo_strict=True,
            )
        if "lost_tol" in ensemble:
            _as_float(ensemble["lost_tol"], "ensemble.lost_tol", lo=0.0, hi=1.0)

    sigma = raw.get("sigma")
    if sigma is not None:
        _check_keys(
            sigma,
            "sigma",
            required=("box",),
            optional=(*_SIGMA_TOL_KEYS, "write_points_csv"),
        )
        _validate_box(sigma["box"], "sigma.box")
        _validate_sigma_tols(sigma, "sigma")
        if "write_points_csv" in sigma:
            _as_bool(sigma["write_points_csv"], "sigma.write_points_csv")

    perturb = raw.get("perturb")
    if perturb is not None:
        _check_keys(
            perturb,
            "perturb",
            required=("box", "amplitude", "trials", "seed"),
            optional=(*_SIGMA_TOL_KEYS, "wavenumber"),
        )
        _validate_box(perturb["box"], "perturb.box")
        _as_float(perturb["amplitude"], "perturb.amplitude", lo=0.0)
        _as_int(perturb["trials"], "perturb.trials", lo=1)
        _as_int(perturb["seed"], "perturb.seed")
        if "wavenumber" in perturb:
            _as_float(perturb["wavenumber"], "perturb.wavenumber", lo=0.0, lo_strict=True)
        _validate_sigma_tols(perturb, "perturb")

    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        _err("output_dir", f"expected a nonempty string, got {output_dir!r}")

    return ScenarioConfig(
        raw=raw,
        model=model,
        integrator=integrator,
        simulate=simulate,
        ensemble=ensemble,
        sigma=sigma,
        perturb=perturb,
        output_dir=output_dir,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file; parse errors carry line and column."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(raw)


def _render_json(obj: Any, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise ValueError(f"non-string key {key!r} is not serializable")
            items.append(
                f'{pad}{json.dumps(key)}: {_render_json(obj[key], level + 1, indent)}'
            )
        return "{\n" + ",\n".join(items) + "\n" + closing + "}"
    if isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{_render_json(v, level + 1, indent)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + closing + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            raise ValueError(f"non-finite number {v!r} is not serializable")
        return format(v, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise ValueError(f"type {type(obj).__name__} is not serializable")


def canonical_json(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    return _render_json(obj, 0, indent) + "\n"


def scenario_hash(raw: dict) -> str:
    """sha256 of the canonical serialization of a config document."""
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()
