"""Scene construction: preset geometries, config files, validation.

A scene is a list of drops (initial curve, point count, viscosity ratio)
plus solver tolerances and output settings.  Scene files are JSON (nested
key-value text: language-agnostic, diff-able, trivially parsed).  All
lengths are nondimensional; optional sigma/mu0/L entries only set the
physical time scale factor sigma/(L*mu0) reported alongside results.

Presets:
  flower    - six-petal drop, the single-drop reference case
  cshape    - C-shaped drop with a slim ellipse in its cavity (near-contact
              geometry: slit and clearance far below the panel length)
  circle / ellipse - primitives
  swissroll - reduced roll-up scene: a rounded spiral tube plus 8 small
              ellipses hugging the spiral channel at ~5e-3 clearance.
              The layout is this package's own construction (tuned to
              exercise the near-singular quadrature), not a reference
              geometry; no benchmark values attach to it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import spectral as sp
from .dynamics import SimulationState, SolverOptions


class SceneError(ValueError):
    """Scene file or geometry fails validation."""


def flower_curve(s):
    return np.exp(1j * (s + 2.0)) * (1.0 + 0.6 * np.cos(6.0 * s)) \
        * (1.0 + 0.4 * np.cos(s))


def cshape_curve(s):
    return -(1.5 + np.sin(s)) * np.exp(-0.999j * np.pi * np.cos(s))


def cshape_ellipse_curve(s):
    return 0.6 * np.cos(s) + 0.1j * np.sin(s) + 0.105


def circle_curve(center: complex, radius: float):
    return lambda s: center + radius * np.exp(1j * s)


def ellipse_curve(center: complex, a: float, b: float, angle: float = 0.0):
    rot = np.exp(1j * angle)
    return lambda s: center + rot * (a * np.cos(s) + 1j * b * np.sin(s))


def swissroll_spiral_curve(turns: float = 1.5, pitch: float = 0.5,
                           r0: float = 0.55, width: float = 0.3,
                           samples: int = 4096):
    """Closed rounded-cap tube around an Archimedean spiral centerline.

    Built by offsetting the centerline by +-width/2, joining the sides with
    half-circle caps, and smoothing the corner joins with a spectral
    low-pass window; the result is an analytic closed curve.
    """
    w = width / 2.0

    def center(u):
        r = r0 + pitch * turns * u
        th = 2.0 * np.pi * turns * u - 0.5 * np.pi
        return r * np.exp(1j * th)

    du = 1e-5
    uu = np.linspace(0.0, 1.0, samples // 3)
    gz = center(uu)
    gt = (center(uu + du) - center(uu - du)) / (2 * du)
    nu = -1j * gt / np.abs(gt)
    side_a = gz + w * nu
    side_b = (gz - w * nu)[::-1]
    phi = np.linspace(0.0, np.pi, samples // 6)
    t_end = gt[-1] / abs(gt[-1])
    cap1 = center(np.array([1.0]))[0] + w * np.exp(1j * phi) * (-1j * t_end)
    t_0 = gt[0] / abs(gt[0])
    cap0 = center(np.array([0.0]))[0] + w * np.exp(1j * phi) * (1j * t_0)
    path = np.concatenate([side_a, cap1, side_b, cap0])
    # Resample the polyline by arclength, then smooth the C^1 cap joins.
    seg = np.abs(np.diff(path, append=path[:1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    targets = np.linspace(0.0, total, samples, endpoint=False)
    idx = np.searchsorted(cum, targets, side="right") - 1
    frac = (targets - cum[idx]) / seg[idx]
    closed = np.concatenate([path, path[:1]])
    resampled = closed[idx] * (1 - frac) + closed[idx + 1] * frac
    spec = np.fft.fft(resampled)
    k = np.abs(sp.fourier_modes(samples))
    spec *= np.exp(-((k / (samples / 8.0)) ** 8))
    smooth = np.fft.ifft(spec)

    def curve(svals):
        return sp.trig_eval(smooth, np.atleast_1d(svals))

    return curve


def swissroll_ellipses(turns: float = 1.5, pitch: float = 0.5,
                       r0: float = 0.55, width: float = 0.3,
                       clearance: float = 5e-3):
    """Deterministic layout of 8 small ellipses hugging the spiral channel.

    The ellipses are elongated radially: circularization then pulls their
    near wall away from the spiral, so the initial ~5e-3 clearance (which
    exercises the near-singular quadrature) grows monotonically instead of
    closing."""
    w = width / 2.0
    a_r, a_t = 0.07, 0.04
    out = []
    fracs = np.linspace(0.08, 0.92, 8)
    for i, f in enumerate(fracs):
        th = 2.0 * np.pi * turns * f - 0.5 * np.pi
        r_wall = r0 + pitch * turns * f + w          # outer wall of turn below
        rc = r_wall + clearance + a_r
        out.append(ellipse_curve(rc * np.exp(1j * th), a_r, a_t, angle=th))
    return out


@dataclass
class DropSpec:
    curve: object
    n: int
    lam: float
    name: str = "drop"


@dataclass
class FieldGridSpec:
    nx: int
    ny: int
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    times: list = field(default_factory=list)

    def points(self) -> np.ndarray:
        xs = np.linspace(self.xmin, self.xmax, self.nx)
        ys = np.linspace(self.ymin, self.ymax, self.ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return (X + 1j * Y).ravel()


@dataclass
class SceneConfig:
    drops: list
    opts: SolverOptions = field(default_factory=SolverOptions)
    snapshot_interval: float = 1.0
    out_dir: str = "out"
    field_grid: FieldGridSpec | None = None
    t_max: float = np.inf
    time_scale: float | None = None    # sigma/(L*mu0) if physical values given
    name: str = "scene"


def preset_drops(name: str, n: int | None = None, lam=None, params=None) -> list[DropSpec]:
    """Drop list for a named preset; lam may be a scalar or per-drop list."""
    params = params or {}

    def lam_for(i, default=1.0):
        if lam is None:
            return default
        if np.isscalar(lam):
            return float(lam)
        return float(lam[i])

    if name == "flower":
        return [DropSpec(flower_curve, n or 3200, lam_for(0), "flower")]
    if name == "cshape":
        n1 = n or 4800
        n2 = params.get("n_ellipse", max(32, int(round(n1 / 6 / 16) * 16)))
        return [DropSpec(cshape_curve, n1, lam_for(0), "cshape"),
                DropSpec(cshape_ellipse_curve, n2, lam_for(1), "ellipse")]
    if name == "circle":
        c = complex(*params.get("center", (0.0, 0.0)))
        return [DropSpec(circle_curve(c, params.get("radius", 1.0)),
                         n or 64, lam_for(0), "circle")]
    if name == "ellipse":
        c = complex(*params.get("center", (0.0, 0.0)))
        return [DropSpec(ellipse_curve(c, params.get("a", 1.0), params.get("b", 0.5),
                                       params.get("angle", 0.0)),
                         n or 64, lam_for(0), "ellipse")]
    if name == "swissroll":
        spiral = swissroll_spiral_curve()
        drops = [DropSpec(spiral, n or 1280, lam_for(0), "spiral")]
        for i, ell in enumerate(swissroll_ellipses()):
            drops.append(DropSpec(ell, 96, lam_for(i + 1), f"ellipse{i}"))
        return drops
    raise SceneError(f"unknown preset {name!r}")


def load_scene(path: str) -> SceneConfig:
    """Parse and validate a JSON scene file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise SceneError(f"scene file is not valid JSON: {e}") from e
    if "drops" not in raw or not raw["drops"]:
        raise SceneError("scene file lists no drops")
    drops: list[DropSpec] = []
    for i, d in enumerate(raw["drops"]):
        lam = float(d.get("lambda", 1.0))
        if lam <= 0:
            raise SceneError(f"drop {i}: lambda must be positive")
        n = d.get("n")
        if "preset" in d:
            specs = preset_drops(d["preset"], n=n, lam=lam, params=d.get("params"))
            drops.extend(specs)
        elif "points" in d:
            pts = np.array([complex(x, y) for x, y in d["points"]])
            curve = geo.curve_from_markers(pts)
            drops.append(DropSpec(curve, n or max(32, len(pts)), lam,
                                  d.get("name", f"drop{i}")))
        else:
            raise SceneError(f"drop {i}: needs 'preset' or 'points'")
    solver = raw.get("solver", {})
    opts = SolverOptions(
        rk_tol=float(solver.get("rk_tol", 1e-8)),
        gmres_tol=float(solver.get("gmres_tol", 1e-10)),
        sq_tol=float(solver.get("sq_tol", 1e-13)),
        use_special_quad=bool(solver.get("use_special_quad", True)),
    )
    if opts.rk_tol <= 0 or opts.gmres_tol <= 0 or opts.sq_tol <= 0:
        raise SceneError("solver tolerances must be positive")
    outputs = raw.get("outputs", {})
    fg = None
    if "field_grid" in outputs:
        f = outputs["field_grid"]
        b = f.get("bounds", [-3, 3, -3, 3])
        fg = FieldGridSpec(nx=int(f.get("nx", 50)), ny=int(f.get("ny", 50)),
                           xmin=b[0], xmax=b[1], ymin=b[2], ymax=b[3],
                           times=list(f.get("times", [])))
    time_scale = None
    phys = raw.get("physical", {})
    if phys:
        sigma = float(phys.get("sigma", 1.0))
        mu0 = float(phys.get("mu0", 1.0))
        L = float(phys.get("L", 1.0))
        if sigma <= 0 or mu0 <= 0 or L <= 0:
            raise SceneError("physical parameters must be positive")
        time_scale = sigma / (L * mu0)
    return SceneConfig(
        drops=drops,
        opts=opts,
        snapshot_interval=float(outputs.get("snapshot_interval", 1.0)),
        out_dir=outputs.get("out_dir", "out"),
        field_grid=fg,
        t_max=float(raw.get("t_max", np.inf)),
        time_scale=time_scale,
        name=raw.get("name", "scene"),
    )


def build_state(config: SceneConfig) -> SimulationState:
    """Equalize all initial curves and assemble the simulation state."""
    boundaries = []
    for spec in config.drops:
        if spec.n % 16 or spec.n < 32:
            raise SceneError(f"{spec.name}: point count {spec.n} must be a "
                             "multiple of 16 and >= 32")
        b = geo.equalize_arclength(spec.curve, spec.n, lam=spec.lam)
        if geo.self_intersection_suspected(b.markers):
            raise SceneError(f"{spec.name}: initial curve appears to "
                             "self-intersect")
        boundaries.append(b)
    if not geo.boundaries_disjoint(boundaries):
        raise SceneError("initial drops touch or intersect")
    return SimulationState(boundaries)
