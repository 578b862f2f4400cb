"""End-to-end scattering scenarios: config file -> correlation maps on disk.

Pipeline: scatterer modes (analytic circle or method of moments) ->
perturbation/scattering diagonals -> beam excitation coefficients ->
rotation -> overlap -> orthogonalization -> per-pixel principal-mode fields
-> photon state -> per-pixel first-order intensity and equal-point g2.

Outputs are deterministic: identical resolved configs produce byte-identical
CSV files regardless of worker count.
"""

import math
import time
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import __version__
from . import beams as beams_mod
from . import circle as circle_mod
from . import fock, kernels, mom
from .errors import ConfigError, NumericalError

#: relative intensity floor under which g2 is undefined (masked, not zeroed)
INTENSITY_FLOOR_REL = 1e-12

#: non-circular scatterers get far-zone maps only: k rho >= FAR_ZONE_FACTOR * ka
FAR_ZONE_FACTOR = 10.0

#: angle samples used for pattern projections (must exceed twice the largest
#: retained harmonic order)
PATTERN_GRID = 4096

_STATES = ("single_photon_pair", "noon2", "single_mode_one_photon")
_SCATTERERS = ("none", "circle", "ellipse", "superellipse")
_OUTPUTS = ("g1_map", "g2_map", "g2_line", "patterns")
_ORDERS = ("leading", "cubic")

_GRID_DEFAULT = (-25.0, 25.0, -25.0, 25.0, 251, 251)


@dataclass
class ScenarioConfig:
    wavelength: float = 1.0
    scatterer: str = "none"
    radius: float = None
    semi_axis_x: float = None
    semi_axis_y: float = None
    superellipse_exponent: float = 4.0
    state: str = "single_photon_pair"
    excitation_order: str = "cubic"
    beams: tuple = ()
    grid: tuple = _GRID_DEFAULT
    outputs: tuple = ("g1_map", "g2_map")
    line_x: float = 12.0
    line_y_min: float = -25.0
    line_y_max: float = 25.0
    line_n: int = 201
    n_max_override: int = None
    mom_segments: int = None
    mom_keep_modes: int = None
    threads: int = None

    def resolved_items(self):
        """Flat, sorted key/value view used by the manifest and presets."""
        items = {
            "wavelength": self.wavelength,
            "scatterer": self.scatterer,
            "state": self.state,
            "excitation_order": self.excitation_order,
            "grid_x_min": self.grid[0], "grid_x_max": self.grid[1],
            "grid_y_min": self.grid[2], "grid_y_max": self.grid[3],
            "grid_nx": self.grid[4], "grid_ny": self.grid[5],
            "outputs": ",".join(self.outputs),
        }
        if self.scatterer == "circle":
            items["radius"] = self.radius
        elif self.scatterer in ("ellipse", "superellipse"):
            items["semi_axis_x"] = self.semi_axis_x
            items["semi_axis_y"] = self.semi_axis_y
            if self.scatterer == "superellipse":
                items["superellipse_exponent"] = self.superellipse_exponent
        for i, b in enumerate(self.beams, start=1):
            items[f"beam{i}_beta"] = b.beta
            items[f"beam{i}_x0"] = b.x0
            items[f"beam{i}_theta_deg"] = math.degrees(b.theta)
            items[f"beam{i}_amplitude"] = b.amplitude
        if "g2_line" in self.outputs:
            items.update(line_x=self.line_x, line_y_min=self.line_y_min,
                         line_y_max=self.line_y_max, line_n=self.line_n)
        if self.n_max_override is not None:
            items["n_max_override"] = self.n_max_override
        if self.mom_segments is not None:
            items["mom_segments"] = self.mom_segments
        if self.mom_keep_modes is not None:
            items["mom_keep_modes"] = self.mom_keep_modes
        if self.threads is not None:
            items["threads"] = self.threads
        return dict(sorted(items.items()))


_FLOAT_KEYS = {
    "wavelength", "radius", "semi_axis_x", "semi_axis_y",
    "superellipse_exponent", "grid_x_min", "grid_x_max", "grid_y_min",
    "grid_y_max", "line_x", "line_y_min", "line_y_max",
    "beam1_beta", "beam1_x0", "beam1_theta_deg", "beam1_amplitude",
    "beam2_beta", "beam2_x0", "beam2_theta_deg", "beam2_amplitude",
}
_INT_KEYS = {"grid_nx", "grid_ny", "line_n", "n_max_override",
             "mom_segments", "mom_keep_modes", "threads"}
_STR_KEYS = {"scatterer", "state", "excitation_order", "outputs"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def parse_config_text(text, source="<config>"):
    """Parse the flat key-value grammar.

    One ``key = value`` pair per line; '#' starts a comment; blank lines are
    ignored; keys outside the documented set are fatal.  Every violation
    reports its line number.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}",
                              line=lineno)
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", line=lineno)
        if key in _FLOAT_KEYS:
            try:
                raw[key] = float(value)
            except ValueError:
                raise ConfigError(
                    f"{key} expects a number, got {value!r}", line=lineno)
        elif key in _INT_KEYS:
            try:
                raw[key] = int(value)
            except ValueError:
                raise ConfigError(
                    f"{key} expects an integer, got {value!r}", line=lineno)
        else:
            raw[key] = value
        raw.setdefault("_lines", {})[key] = lineno
    lines = raw.pop("_lines", {})
    return _build_config(raw, lines, source)


def _fail(key, msg, lines):
    raise ConfigError(f"{key}: {msg}", line=lines.get(key))


def _build_config(raw, lines, source):
    cfg = ScenarioConfig()
    scatterer = raw.get("scatterer", "none")
    if scatterer not in _SCATTERERS:
        _fail("scatterer", f"must be one of {_SCATTERERS}", lines)
    state = raw.get("state", "single_photon_pair")
    if state not in _STATES:
        _fail("state", f"must be one of {_STATES}", lines)
    order = raw.get("excitation_order", "cubic")
    if order not in _ORDERS:
        _fail("excitation_order", f"must be one of {_ORDERS}", lines)
    outputs = tuple(s.strip() for s in
                    raw.get("outputs", "g1_map,g2_map").split(","))
    for o in outputs:
        if o not in _OUTPUTS:
            _fail("outputs", f"unknown output {o!r}", lines)
    wavelength = raw.get("wavelength", 1.0)
    if wavelength <= 0:
        _fail("wavelength", "must be positive", lines)
    if scatterer == "circle":
        if "radius" not in raw:
            _fail("radius", "required for circle scatterers", lines)
        if raw["radius"] <= 0:
            _fail("radius", "must be positive", lines)
    if scatterer in ("ellipse", "superellipse"):
        for k in ("semi_axis_x", "semi_axis_y"):
            if k not in raw:
                _fail(k, f"required for {scatterer} scatterers", lines)
            if raw[k] <= 0:
                _fail(k, "must be positive", lines)

    beam_specs = []
    for i in (1, 2):
        keys = [k for k in raw if k.startswith(f"beam{i}_")]
        if not keys:
            continue
        if f"beam{i}_beta" not in raw:
            _fail(f"beam{i}_beta", "required when the beam is configured",
                  lines)
        if raw[f"beam{i}_beta"] <= 0:
            _fail(f"beam{i}_beta", "must be positive", lines)
        beam_specs.append(beams_mod.GaussianBeamSpec(
            beta=raw[f"beam{i}_beta"],
            x0=raw.get(f"beam{i}_x0", 0.0),
            theta=math.radians(raw.get(f"beam{i}_theta_deg", 0.0)),
            amplitude=raw.get(f"beam{i}_amplitude", 1.0)))
    if raw.get("beam2_beta") is not None and "beam1_beta" not in raw:
        _fail("beam1_beta", "beam2 configured without beam1", lines)
    need = 1 if state == "single_mode_one_photon" else 2
    if len(beam_specs) != need:
        raise ConfigError(
            f"state {state!r} needs {need} beam(s), {len(beam_specs)} "
            f"configured (in {source})")

    grid = (raw.get("grid_x_min", _GRID_DEFAULT[0]),
            raw.get("grid_x_max", _GRID_DEFAULT[1]),
            raw.get("grid_y_min", _GRID_DEFAULT[2]),
            raw.get("grid_y_max", _GRID_DEFAULT[3]),
            raw.get("grid_nx", _GRID_DEFAULT[4]),
            raw.get("grid_ny", _GRID_DEFAULT[5]))
    if grid[4] < 2 or grid[5] < 2:
        _fail("grid_nx", "grid must be at least 2x2", lines)
    if grid[1] <= grid[0] or grid[3] <= grid[2]:
        _fail("grid_x_max", "grid extents must be increasing", lines)
    line_n = raw.get("line_n", 201)
    if line_n < 2:
        _fail("line_n", "must be at least 2", lines)
    for k in ("n_max_override", "mom_segments", "mom_keep_modes", "threads"):
        if k in raw and raw[k] <= 0:
            _fail(k, "must be positive", lines)

    return replace(
        cfg, wavelength=wavelength, scatterer=scatterer,
        radius=raw.get("radius"), semi_axis_x=raw.get("semi_axis_x"),
        semi_axis_y=raw.get("semi_axis_y"),
        superellipse_exponent=raw.get("superellipse_exponent", 4.0),
        state=state, excitation_order=order, beams=tuple(beam_specs),
        grid=grid, outputs=outputs,
        line_x=raw.get("line_x", 12.0),
        line_y_min=raw.get("line_y_min", -25.0),
        line_y_max=raw.get("line_y_max", 25.0), line_n=line_n,
        n_max_override=raw.get("n_max_override"),
        mom_segments=raw.get("mom_segments"),
        mom_keep_modes=raw.get("mom_keep_modes"),
        threads=raw.get("threads"))


def parse_config(path):
    """Load and validate a scenario configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config_text(text, source=str(path))


def load_preset(name):
    """Bundled presets: fig3, fig4, fig5."""
    try:
        text = resources.files("cmscat.presets").joinpath(
            f"{name}.cfg").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"unknown preset {name!r}")
    return parse_config_text(text, source=f"preset:{name}")


def config_from_manifest(manifest_text):
    """Rebuild the scenario configuration from a manifest's resolved section.

    Re-running the returned config reproduces the original CSV outputs
    byte-for-byte.
    """
    lines = []
    active = False
    for line in manifest_text.splitlines():
        if line.strip() == "[resolved_config]":
            active = True
            continue
        if active:
            if not line.strip():
                break
            lines.append(line)
    if not lines:
        raise ConfigError("manifest has no [resolved_config] section")
    return parse_config_text("\n".join(lines), source="<manifest>")


# ---------------------------------------------------------------------------
# run pipeline
# ---------------------------------------------------------------------------

@dataclass
class FieldGrid:
    """Spatial maps: complex principal-mode amplitudes and correlations.

    ``geometry_mask`` flags pixels excluded from evaluation (scatterer
    interior, or near zone of a non-circular scatterer); ``g2_mask``
    additionally flags pixels where g2 is undefined (intensity below the
    floor).  Masked values are stored as 0 and must be read together with
    their flags.
    """
    x: np.ndarray
    y: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    geometry_mask: np.ndarray
    g2_mask: np.ndarray


@dataclass
class LineGrid:
    """g2(y1, y2) along a vertical cut at fixed x."""
    x: float
    y: np.ndarray
    g2: np.ndarray
    mask: np.ndarray


@dataclass
class RunManifest:
    resolved_config: dict
    package_version: str
    backend: str
    threads: int
    n_max_used: int
    modes_kept: int
    tail_estimates: tuple
    mu12_abs: float
    intensity_floor: float
    wall_clock_s: float
    notes: tuple = (
        "intensities are reported up to one global constant "
        "(natural units, unit field-operator prefactor)",
        "masked=1 rows carry value=0; the value is undefined, not zero",
    )

    def to_text(self):
        # the resolved-config section is valid config grammar: feeding it
        # back through the parser reproduces every CSV bit-exactly
        lines = ["[resolved_config]"]
        for k, v in self.resolved_config.items():
            lines.append(f"{k} = {v}")
        lines.append("")
        lines.append("[run]")
        lines.append(f"package_version = {self.package_version}")
        lines.append(f"backend = {self.backend}")
        lines.append(f"threads = {self.threads}")
        lines.append(f"n_max_used = {self.n_max_used}")
        lines.append(f"modes_kept = {self.modes_kept}")
        lines.append("beam_tail_estimates = "
                     + ",".join(f"{t:.3e}" for t in self.tail_estimates))
        lines.append(f"mu12_abs = {self.mu12_abs:.16e}")
        lines.append(f"intensity_floor = {self.intensity_floor:.16e}")
        lines.append(f"wall_clock_s = {self.wall_clock_s:.3f}  # informational")
        lines.append("")
        lines.append("[notes]")
        for n in self.notes:
            lines.append(f"- {n}")
        lines.append("")
        lines.append("[formats]")
        lines.append("csv = 'x,y,value,masked' rows, %.16e floats, LF endings")
        lines.append("image = binary PPM (P6), linear min-max grayscale, "
                     "masked pixels rendered red")
        return "\n".join(lines) + "\n"


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    grid: FieldGrid
    line: LineGrid
    patterns: dict
    manifest: RunManifest


class _CircleFieldEngine:
    """Pixel fields for free space or an analytic circular scatterer."""

    def __init__(self, ctx, scatterer, coeff_sets):
        self.ctx = ctx
        self.scatterer = scatterer
        n_max = max(c.n_max for c in coeff_sets)
        if scatterer is not None:
            n_max = max(n_max, scatterer.n_max)
        self.n_max = n_max
        self.coefs = np.stack([c.padded(n_max).values for c in coeff_sets])
        if scatterer is None:
            self.pdiag = np.zeros(0, dtype=complex)
        else:
            self.pdiag = scatterer.p_diag_table(
                min(scatterer.n_max, n_max))

    def fields(self, px, py):
        return kernels.modal_field_grid(px, py, self.ctx.k, self.coefs,
                                        self.pdiag, self.n_max)

    def excluded(self, px, py):
        if self.scatterer is None:
            return np.zeros(px.shape, dtype=bool)
        return np.hypot(px, py) < self.scatterer.radius


class _MomFieldEngine:
    """Far-zone pixel fields for a general smooth scatterer.

    The total field is the free beam plus the scattered correction carried
    by one synthetic boundary current per beam:

        correction_s(p) = -(omega mu / 4) sum_j H_0^(1)(k|p - x_j|) Jc_s[j] w,
        Jc_s = sum_m beta_sm (S_m - 1) J_m,

    where beta_sm projects the beam's incoming angular amplitude onto the
    mode's (conjugated) pattern.  Modes outside the kept set respond with
    S = 1 and drop out.
    """

    def __init__(self, ctx, shape, coeff_sets, n_segments=None,
                 keep_modes=None):
        self.ctx = ctx
        self.shape = shape
        n_max = max(c.n_max for c in coeff_sets)
        self.n_max = n_max
        self.coefs = np.stack([c.padded(n_max).values for c in coeff_sets])
        contour = mom.discretize_contour(
            shape, ctx, n_segments if n_segments else 16)
        self.contour = contour
        z = mom.assemble_impedance(contour, ctx)
        ka_eff = ctx.k * self._max_extent()
        if keep_modes is None:
            keep_modes = 2 * int(math.ceil(ka_eff)) + 25
        wr = np.linalg.eigvalsh(z.r)
        rank = int((wr > 1e-12 * wr.max()).sum())
        keep_modes = min(keep_modes, rank)
        self.modes = mom.solve_modes(z, keep_modes)
        self.scat = mom.perturbation_and_scattering(self.modes.eigenvalues)
        self.kept = keep_modes
        # project each beam's incoming channel on the mode patterns
        phis = np.arange(PATTERN_GRID) * (2.0 * math.pi / PATTERN_GRID)
        ns = np.arange(-n_max, n_max + 1)
        ipow = (1j) ** np.mod(ns, 4)
        harm = np.exp(-1j * np.outer(ns, phis))
        b_in = (self.coefs * ipow[None, :]) @ harm \
            / (2.0 * math.sqrt(2.0 * math.pi))
        w = float(contour.lengths[0])
        self.jc = np.zeros((self.coefs.shape[0], contour.segment_count),
                           dtype=complex)
        for m in range(keep_modes):
            pm = mom.mode_pattern_raw(self.modes, m, phis)
            s2 = float(np.mean(np.abs(pm) ** 2))
            beta_m = (b_in @ pm) / (PATTERN_GRID * s2)
            resp = self.scat.s_diag[m] - 1.0
            if abs(resp) < 2.0 * circle_mod.P_RETAIN:
                continue
            self.jc += np.outer(beta_m * resp,
                                self.modes.currents[:, m].astype(complex))
        self._w = w

    def _max_extent(self):
        if isinstance(self.shape, mom.Circle):
            return self.shape.radius
        return max(self.shape.semi_axis_x, self.shape.semi_axis_y)

    def fields(self, px, py, chunk=4096):
        free = kernels.modal_field_grid(px, py, self.ctx.k, self.coefs,
                                        np.zeros(0, dtype=complex),
                                        self.n_max)
        k = self.ctx.k
        scale = -(self.ctx.omega * self.ctx.mu / 4.0) * self._w
        mids = self.contour.midpoints
        out = free.astype(complex)
        for lo in range(0, px.shape[0], chunk):
            hi = min(lo + chunk, px.shape[0])
            d = np.hypot(px[lo:hi, None] - mids[None, :, 0],
                         py[lo:hi, None] - mids[None, :, 1])
            d = np.maximum(d, 1e-9 * self.contour.total_length)
            h0 = (lambda jy: jy[0] + 1j * jy[1])(kernels.h0_many(k * d.ravel()))
            h0 = h0.reshape(d.shape)
            out[:, lo:hi] += scale * (self.jc @ h0.T)
        return out

    def excluded(self, px, py):
        pts = np.stack([px, py], axis=-1)
        inside = self.shape.contains(pts)
        near = np.hypot(px, py) * self.ctx.k \
            < FAR_ZONE_FACTOR * self.ctx.k * self._max_extent()
        return inside | near


def _build_engine(config, ctx, coeff_sets):
    if config.scatterer == "none":
        return _CircleFieldEngine(ctx, None, coeff_sets)
    if config.scatterer == "circle":
        n_max = None
        if config.n_max_override is not None:
            n_max = config.n_max_override
        scat = circle_mod.CircleScatterer(config.radius, ctx, n_max=n_max)
        return _CircleFieldEngine(ctx, scat, coeff_sets)
    if config.scatterer == "ellipse":
        shape = mom.Ellipse(config.semi_axis_x, config.semi_axis_y)
    else:
        shape = mom.Superellipse(config.semi_axis_x, config.semi_axis_y,
                                 config.superellipse_exponent)
    return _MomFieldEngine(ctx, shape, coeff_sets,
                           n_segments=config.mom_segments,
                           keep_modes=config.mom_keep_modes)


def _correlations(state, v1, v2, floor):
    """Equal-point G1 and g2 for per-pixel mode amplitudes."""
    n = v1.shape[0]
    g1v = np.empty(n)
    g2v = np.zeros(n)
    g2m = np.zeros(n, dtype=bool)
    two = v2 is not None
    for i in range(n):
        w = np.array([v1[i], v2[i]]) if two else np.array([v1[i]])
        g1v[i] = fock.g1_from_amplitudes(state, w, w).real
    gmax = float(g1v.max()) if n else 0.0
    eps = floor * gmax
    for i in range(n):
        w = np.array([v1[i], v2[i]]) if two else np.array([v1[i]])
        val = fock.g2_from_amplitudes(state, w, w, intensity_floor=eps)
        if val is None:
            g2m[i] = True
        else:
            g2v[i] = val
    return g1v, g2v, g2m, eps


def run_scenario(config):
    """Execute a scenario and return grids plus the reproducibility manifest."""
    t0 = time.perf_counter()
    if config.threads is not None:
        kernels.set_worker_threads(config.threads)
    ctx = mom.WaveContext(config.wavelength)
    coeff_sets = [beams_mod.excitation_coeffs(b, ctx,
                                              order=config.excitation_order)
                  for b in config.beams]
    mu12 = 0.0 + 0.0j
    if len(coeff_sets) == 2:
        pair = beams_mod.orthogonalize(coeff_sets[0], coeff_sets[1])
        mu12 = pair.mu12
    engine = _build_engine(config, ctx, coeff_sets)
    state = fock.build_state(config.state)

    x0, x1, y0, y1, nx, ny = config.grid
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    gx, gy = np.meshgrid(xs, ys)
    px = gx.ravel()
    py = gy.ravel()
    fields = engine.fields(px, py)
    excluded = engine.excluded(px, py)
    v1 = np.where(excluded, 0.0, fields[0])
    if len(coeff_sets) == 2:
        raw2 = np.where(excluded, 0.0, fields[1])
        v2 = (raw2 - mu12 * v1) / math.sqrt(1.0 - abs(mu12) ** 2)
    else:
        v2 = None

    g1v, g2v, g2m, eps = _correlations(state, v1, v2, INTENSITY_FLOOR_REL)
    g1v = np.where(excluded, 0.0, g1v)
    g2v = np.where(excluded | g2m, 0.0, g2v)
    grid = FieldGrid(
        x=xs, y=ys,
        v1=v1.reshape(ny, nx),
        v2=(v2.reshape(ny, nx) if v2 is not None
            else np.zeros((ny, nx), dtype=complex)),
        g1=g1v.reshape(ny, nx),
        g2=g2v.reshape(ny, nx),
        geometry_mask=excluded.reshape(ny, nx),
        g2_mask=(excluded | g2m).reshape(ny, nx))

    line = None
    if "g2_line" in config.outputs:
        line = _line_cut(config, engine, state, coeff_sets, mu12)

    patterns = {}
    if "patterns" in config.outputs:
        patterns = _pattern_table(config, engine)

    manifest = RunManifest(
        resolved_config=config.resolved_items(),
        package_version=__version__,
        backend=kernels.backend_name(),
        threads=config.threads if config.threads else 0,
        n_max_used=engine.n_max,
        modes_kept=getattr(engine, "kept",
                           getattr(getattr(engine, "scatterer", None),
                                   "n_max", 0) or 0),
        tail_estimates=tuple(c.tail_estimate for c in coeff_sets),
        mu12_abs=abs(mu12),
        intensity_floor=eps,
        wall_clock_s=time.perf_counter() - t0)
    return ScenarioResult(config=config, grid=grid, line=line,
                          patterns=patterns, manifest=manifest)


def _line_cut(config, engine, state, coeff_sets, mu12):
    ys = np.linspace(config.line_y_min, config.line_y_max, config.line_n)
    px = np.full(ys.shape, config.line_x)
    fields = engine.fields(px, ys)
    excluded = engine.excluded(px, ys)
    v1 = np.where(excluded, 0.0, fields[0])
    if len(coeff_sets) == 2:
        raw2 = np.where(excluded, 0.0, fields[1])
        v2 = (raw2 - mu12 * v1) / math.sqrt(1.0 - abs(mu12) ** 2)
    else:
        v2 = None
    n = len(ys)
    inten = np.empty(n)
    for i in range(n):
        w = np.array([v1[i], v2[i]]) if v2 is not None else np.array([v1[i]])
        inten[i] = fock.g1_from_amplitudes(state, w, w).real
    eps = INTENSITY_FLOOR_REL * float(inten.max())
    g2mat = np.zeros((n, n))
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        wi = np.array([v1[i], v2[i]]) if v2 is not None else np.array([v1[i]])
        for j in range(n):
            if excluded[i] or excluded[j]:
                mask[i, j] = True
                continue
            wj = (np.array([v1[j], v2[j]]) if v2 is not None
                  else np.array([v1[j]]))
            val = fock.g2_from_amplitudes(state, wi, wj,
                                          intensity_floor=eps)
            if val is None:
                mask[i, j] = True
            else:
                g2mat[i, j] = val
    return LineGrid(x=config.line_x, y=ys, g2=g2mat, mask=mask)


def _pattern_table(config, engine):
    phis = np.arange(PATTERN_GRID // 8) * (2.0 * math.pi / (PATTERN_GRID // 8))
    out = {}
    if isinstance(engine, _MomFieldEngine):
        for m in range(engine.kept):
            pat = mom.far_pattern(engine.modes, m, phis)
            out[f"mode_{m}"] = (phis, pat.values)
    elif engine.scatterer is not None:
        for n in range(0, engine.scatterer.n_max + 1):
            if engine.scatterer.unscattered[n]:
                continue
            out[f"harmonic_{n}"] = (phis, circle_mod.circle_pattern(n, phis))
    return out


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def _write_csv_grid(path, xs, ys, values, mask):
    rows = ["x,y,value,masked"]
    for iy, yv in enumerate(ys):
        for ix, xv in enumerate(xs):
            m = 1 if mask[iy, ix] else 0
            val = 0.0 if m else float(values[iy, ix])
            rows.append(f"{xv:.16e},{yv:.16e},{val:.16e},{m}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def read_csv_grid(path):
    """Round-trip reader for the CSV grid format."""
    xs, ys, vals, masks = [], [], [], []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "x,y,value,masked":
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            a, b, c, d = line.strip().split(",")
            xs.append(float(a))
            ys.append(float(b))
            vals.append(float(c))
            masks.append(int(d))
    return (np.array(xs), np.array(ys), np.array(vals),
            np.array(masks, dtype=bool))


_MASK_RGB = (255, 0, 0)


def _write_ppm(path, values, mask):
    """8-bit binary PPM: linear min-max grayscale, masked pixels red."""
    ny, nx = values.shape
    valid = ~mask
    if valid.any():
        lo = float(values[valid].min())
        hi = float(values[valid].max())
    else:
        lo, hi = 0.0, 1.0
    span = hi - lo if hi > lo else 1.0
    gray = np.clip((values - lo) / span * 255.0, 0.0, 255.0).astype(np.uint8)
    img = np.repeat(gray[:, :, None], 3, axis=2)
    img[mask] = _MASK_RGB
    img = img[::-1]          # image rows top-down, y axis bottom-up
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_outputs(result, out_dir):
    """Write CSV maps, PPM images, optional extras, and the manifest."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    grid = result.grid
    written = []
    if "g1_map" in cfg.outputs:
        p = os.path.join(out_dir, "g1.csv")
        _write_csv_grid(p, grid.x, grid.y, grid.g1, grid.geometry_mask)
        _write_ppm(os.path.join(out_dir, "g1.ppm"), grid.g1,
                   grid.geometry_mask)
        written += [p, os.path.join(out_dir, "g1.ppm")]
    if "g2_map" in cfg.outputs:
        p = os.path.join(out_dir, "g2.csv")
        _write_csv_grid(p, grid.x, grid.y, grid.g2, grid.g2_mask)
        _write_ppm(os.path.join(out_dir, "g2.ppm"), grid.g2, grid.g2_mask)
        written += [p, os.path.join(out_dir, "g2.ppm")]
    if "g2_line" in cfg.outputs and result.line is not None:
        p = os.path.join(out_dir, "g2_line.csv")
        _write_csv_grid(p, result.line.y, result.line.y, result.line.g2,
                        result.line.mask)
        _write_ppm(os.path.join(out_dir, "g2_line.ppm"), result.line.g2,
                   result.line.mask)
        written += [p, os.path.join(out_dir, "g2_line.ppm")]
    if "patterns" in cfg.outputs and result.patterns:
        p = os.path.join(out_dir, "patterns.csv")
        rows = ["pattern,phi,re,im"]
        for name, (phis, vals) in result.patterns.items():
            for ph, v in zip(phis, vals):
                rows.append(f"{name},{ph:.16e},{v.real:.16e},{v.imag:.16e}")
        with open(p, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(rows) + "\n")
        written.append(p)
    mp = os.path.join(out_dir, "manifest.txt")
    with open(mp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.manifest.to_text())
    written.append(mp)
    return written
