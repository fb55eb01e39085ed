"""Experiment driver: config parsing, initial-condition generation, run
orchestration and file output.

Config files are flat key=value text with dotted section prefixes, e.g.

    method=forward
    functional=tv
    grid.rows=64
    grid.cols=64
    init.kind=gaussian_noise
    init.sigma=1.0
    flow.dt=0.2
    seed=7

Every output file embeds the fully resolved configuration so runs are
reconstructible, and (config, seed) -> outputs is deterministic byte for
byte in single-threaded mode.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import fieldio
from .analysis import spectral_transform, validate_eigenfunction
from .errors import ConfigError, EigenflowError
from .flows import FlowConfig, run_forward, run_inverse, run_linear
from .functionals import FunctionalKind, tgv2_value, tv_value
from .grid import GridField, norm, null_project
from .ipm import run_ipm
from .operators import neg_laplacian
from .solver import SolverParams

_METHODS = ("forward", "inverse", "ipm", "linear", "spectral", "validate")


@dataclass(frozen=True)
class InitSpec:
    """Initial-condition generator: square, disk, gaussian_noise, composite1d
    (named 1D preset) or from_file."""

    variant: str
    params: dict = field(default_factory=dict)

    _VARIANTS = ("square", "disk", "gaussian_noise", "composite1d", "from_file")

    def __post_init__(self):
        if self.variant not in self._VARIANTS:
            raise ConfigError(f"unknown init kind {self.variant!r}")


@dataclass
class ExperimentConfig:
    method: str
    functional: FunctionalKind
    grid: tuple[int, int]
    init: InitSpec
    flow: FlowConfig
    output_dir: str = "."
    snapshot_every: int = 0
    seed: int = 0
    spectral_dt: float = 0.1
    spectral_t_end: float = 10.0
    validate_lambda: float = 0.0

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.grid[0] < 2 or self.grid[1] < 1:
            raise ConfigError(f"grid dims too small: {self.grid}")

    def resolved(self) -> dict:
        """All settings with defaults filled in, for output headers."""
        out = {
            "method": self.method,
            "functional": self.functional.name,
            "grid.rows": self.grid[0],
            "grid.cols": self.grid[1],
            "init.kind": self.init.variant,
            "flow.dt": self.flow.dt,
            "flow.eps": self.flow.eps,
            "flow.theta_thresh": self.flow.theta_thresh,
            "flow.max_outer": self.flow.max_outer,
            "inner.max_iters": self.flow.inner.max_iters,
            "inner.tol": self.flow.inner.tol,
            "inner.step_ratio": self.flow.inner.step_ratio,
            "inner.over_relaxation": self.flow.inner.over_relaxation,
            "snapshot_every": self.snapshot_every,
            "seed": self.seed,
            "theta_unit": "degrees",
        }
        if self.functional.name == "tgv2":
            out["functional.alpha0"] = self.functional.alpha0
            out["functional.alpha1"] = self.functional.alpha1
        for key, val in self.init.params.items():
            out[f"init.{key}"] = val
        if self.method == "spectral":
            out["spectral.dt"] = self.spectral_dt
            out["spectral.t_end"] = self.spectral_t_end
        if self.method == "validate":
            out["validate.lambda"] = self.validate_lambda
        return out


def parse_kv(text: str) -> dict:
    """Parse the flat key=value format; '#' starts a comment."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _pop(kv, key, default=None, cast=str, required=False):
    if key in kv:
        raw = kv.pop(key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if required:
        raise ConfigError(f"missing required key {key}")
    return default


def parse_config(text: str) -> ExperimentConfig:
    kv = parse_kv(text)
    method = _pop(kv, "method", required=True)
    fname = _pop(kv, "functional", default="tv").lower()
    if fname == "tv":
        functional = FunctionalKind.tv()
    elif fname == "tgv2":
        functional = FunctionalKind.tgv2(
            _pop(kv, "functional.alpha0", 2.0, float),
            _pop(kv, "functional.alpha1", 1.0, float),
        )
    else:
        raise ConfigError(f"unknown functional {fname!r}")
    grid = (_pop(kv, "grid.rows", 64, int), _pop(kv, "grid.cols", 1, int))
    init_kind = _pop(kv, "init.kind", required=True)
    init_params = {}
    for key in [k for k in kv if k.startswith("init.")]:
        init_params[key[len("init.") :]] = kv.pop(key)
    inner = SolverParams(
        max_iters=_pop(kv, "inner.max_iters", 40000, int),
        tol=_pop(kv, "inner.tol", 1e-6, float),
        step_ratio=_pop(kv, "inner.step_ratio", 0.99, float),
        over_relaxation=_pop(kv, "inner.over_relaxation", 1.0, float),
    )
    flow = FlowConfig(
        dt=_pop(kv, "flow.dt", 0.2, float),
        eps=_pop(kv, "flow.eps", 0.1, float),
        theta_thresh=_pop(kv, "flow.theta_thresh", 1.0, float),
        max_outer=_pop(kv, "flow.max_outer", 2000, int),
        inner=inner,
    )
    cfg = ExperimentConfig(
        method=method,
        functional=functional,
        grid=grid,
        init=InitSpec(init_kind, init_params),
        flow=flow,
        output_dir=_pop(kv, "output_dir", "."),
        snapshot_every=_pop(kv, "snapshot_every", 0, int),
        seed=_pop(kv, "seed", 0, int),
        spectral_dt=_pop(kv, "spectral.dt", 0.1, float),
        spectral_t_end=_pop(kv, "spectral.t_end", 10.0, float),
        validate_lambda=_pop(kv, "validate.lambda", 0.0, float),
    )
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return cfg


def parse_config_file(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# initial conditions


def gaussian_noise_field(shape, sigma: float, seed: int) -> GridField:
    """Seeded Gaussian noise; PCG64 raw 64-bit draws through Box-Muller.

    Bit-exact recipe so traces reproduce across ports: each uniform is
    u = ((r >> 11) + 1) * 2^-53 from a raw 64-bit PCG64 output r, and pairs
    (u1, u2) map to sqrt(-2 ln u1) * (cos, sin)(2 pi u2).
    """
    rows, cols = shape
    n = rows * cols
    pairs = (n + 1) // 2
    gen = np.random.Generator(np.random.PCG64(seed))
    raw = gen.integers(0, 2**64, size=2 * pairs, dtype=np.uint64, endpoint=False)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    ang = 2.0 * math.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(ang)
    z[1::2] = r * np.sin(ang)
    return GridField(sigma * z[:n].reshape(rows, cols))


_PRESETS_1D = ("boxes", "spike", "steps")


def _composite_1d(n: int, preset: str) -> np.ndarray:
    v = np.zeros(n)
    if preset == "boxes":
        v[n // 8 : n // 8 + n // 5] = 1.0
        v[n // 2 : n // 2 + n // 4] = -0.6
    elif preset == "spike":
        w = max(1, n // 32)
        v[n // 2 - w : n // 2 + w] = 1.0
    elif preset == "steps":
        v[n // 4 : n // 2] = 0.5
        v[n // 2 : 3 * n // 4] = 1.0
    else:
        raise ConfigError(f"unknown 1D preset {preset!r}; choose from {_PRESETS_1D}")
    return v


def generate_init(
    spec: InitSpec, grid: tuple[int, int], seed: int, kind: FunctionalKind
) -> GridField:
    """Deterministic initial condition, null-projected for the functional."""
    rows, cols = grid
    p = spec.params
    if spec.variant == "square":
        side = int(p.get("side", min(rows, cols) // 4))
        r0 = int(p.get("offset_r", 0)) + (rows - side) // 2
        c0 = int(p.get("offset_c", 0)) + (cols - side) // 2
        if r0 < 0 or c0 < 0 or r0 + side > rows or c0 + side > cols:
            raise ConfigError("square does not fit inside the grid")
        v = np.zeros(grid)
        v[r0 : r0 + side, c0 : c0 + side] = 1.0
        f = GridField(v)
    elif spec.variant == "disk":
        radius = float(p.get("radius", min(rows, cols) / 6))
        cr = float(p.get("center_r", (rows - 1) / 2))
        cc = float(p.get("center_c", (cols - 1) / 2))
        if radius <= 0 or cr - radius < -0.5 or cr + radius > rows - 0.5:
            raise ConfigError("disk does not fit inside the grid")
        ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        f = GridField(((ii - cr) ** 2 + (jj - cc) ** 2 <= radius**2).astype(float))
    elif spec.variant == "gaussian_noise":
        f = gaussian_noise_field(grid, float(p.get("sigma", 1.0)), seed)
    elif spec.variant == "composite1d":
        if cols != 1:
            raise ConfigError("composite1d requires a Nx1 grid")
        f = GridField(_composite_1d(rows, p.get("preset", "boxes")))
    elif spec.variant == "from_file":
        path = p.get("path")
        if not path:
            raise ConfigError("from_file requires init.path")
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        f = fieldio.load_text(path)
        if f.shape != grid:
            raise ConfigError(f"file grid {f.shape} != configured grid {grid}")
    else:  # pragma: no cover - guarded by InitSpec
        raise ConfigError(spec.variant)
    return null_project(f, kind)


# ---------------------------------------------------------------------------
# orchestration


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _report_lines(header: dict, body: dict) -> str:
    lines = [f"# {k}={v}" for k, v in sorted(header.items())]
    lines += [f"{k}: {v}" for k, v in body.items()]
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, output_dir: str | None = None) -> int:
    """Execute one configured run; returns the process exit status
    (0 converged, 2 iteration budget exhausted, 1 on error)."""
    outdir = output_dir or cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    header = {str(k): str(v) for k, v in cfg.resolved().items()}
    try:
        return _run_experiment(cfg, outdir, header)
    except (EigenflowError, OSError) as exc:
        _write(
            os.path.join(outdir, "report.txt"),
            _report_lines(header, {"error": f"{type(exc).__name__}: {exc}"}),
        )
        return 1


def _run_experiment(cfg: ExperimentConfig, outdir: str, header: dict) -> int:
    _write(
        os.path.join(outdir, "resolved.cfg"),
        "\n".join(f"{k}={v}" for k, v in sorted(header.items())) + "\n",
    )
    f = generate_init(cfg.init, cfg.grid, cfg.seed, cfg.functional)

    if cfg.method == "spectral":
        sr = spectral_transform(
            f,
            cfg.functional,
            dt=cfg.spectral_dt,
            t_end=cfg.spectral_t_end,
            inner_params=cfg.flow.inner,
        )
        csv = "\n".join(f"# {k}={v}" for k, v in sorted(header.items()))
        _write(os.path.join(outdir, "spectrum.csv"), csv + "\n" + sr.spectrum_csv())
        fieldio.save_text(sr.residual, os.path.join(outdir, "residual.txt"), header)
        return 0

    if cfg.method == "validate":
        rep = validate_eigenfunction(
            f, cfg.validate_lambda, cfg.functional, inner_params=cfg.flow.inner
        )
        _write(
            os.path.join(outdir, "report.txt"),
            "\n".join(f"# {k}={v}" for k, v in sorted(header.items()))
            + "\n"
            + rep.render(),
        )
        return 0 if rep.all_ok else 2

    snapshots = []
    callback = None
    if cfg.snapshot_every > 0:

        def callback(k, u):
            if k % cfg.snapshot_every == 0:
                path = os.path.join(outdir, f"snap_{k:06d}.txt")
                fieldio.save_text(u, path, header)
                snapshots.append(path)

    if cfg.method == "forward":
        result = run_forward(f, cfg.functional, cfg.flow, callback=callback)
    elif cfg.method == "inverse":
        result = run_inverse(f, cfg.functional, cfg.flow, callback=callback)
    elif cfg.method == "ipm":
        result = run_ipm(f, cfg.functional, cfg.flow, callback=callback)
    elif cfg.method == "linear":
        result = run_linear(f, neg_laplacian, cfg.flow)
    else:  # pragma: no cover - guarded in __post_init__
        raise ConfigError(cfg.method)

    result.trace.meta.update(header)
    _write(os.path.join(outdir, "trace.csv"), result.trace.to_csv())
    fieldio.save_text(result.u_star, os.path.join(outdir, "final.txt"), header)
    fieldio.save_pgm(result.u_star, os.path.join(outdir, "final.pgm"))

    body = {
        "converged": result.converged,
        "lambda": f"{result.lam:.12g}",
        "affinity": f"{result.affinity:.12g}",
        "theta_deg": f"{math.degrees(math.acos(min(result.affinity, 1.0))):.6g}",
        "outer_iterations": result.trace.rows[-1].k,
        "recenter_events": result.trace.recenter_events,
        "dt_halvings": result.trace.dt_halvings,
    }
    if cfg.method in ("forward", "inverse", "ipm"):
        if cfg.functional.name == "tv":
            j_init = tv_value(f)
        else:
            j_init = tgv2_value(
                f, cfg.functional.alpha0, cfg.functional.alpha1, solver=cfg.flow.inner
            )
        bound = j_init / (norm(f) ** 2)
        body["rayleigh_of_input"] = f"{bound:.12g}"
        if cfg.method == "forward":
            # converged forward eigenvalues satisfy 0 < lambda <= J(f)/||f||^2
            body["lambda_bound_ok"] = bool(0.0 < result.lam <= bound * (1.0 + 1e-9))
    _write(os.path.join(outdir, "report.txt"), _report_lines(header, body))
    return 0 if result.converged else 2
