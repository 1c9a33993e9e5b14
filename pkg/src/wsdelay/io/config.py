"""Line-oriented run configuration.

Grammar (one construct per line, UTF-8)::

    file     := { line }
    line     := [ section | entry ] [ comment ] NEWLINE
    section  := "[" NAME "]"
    entry    := KEY "=" VALUE
    comment  := "#" { any character }

Whitespace around names, keys and values is ignored. Every key belongs to
the most recent section; keys outside a section, unknown sections and
unknown keys are errors. Only ``layer`` and ``resonance`` may repeat.

Sections and keys (defaults in brackets)::

    [profile]    geometry = radial | full_line   [radial]
                 corpus = NAME                   bundled profile, excludes layer
                 layer = WIDTH HEIGHT            repeatable, from the origin out
                 resonance = E0 GAMMA            repeatable, synthetic Breit-Wigner S
                 background = DELTA              phase offset of the synthetic S [0]
    [grid]       e_min [0.01]  e_max [50]  points [4001]  refine = true|false [true]
    [reference]  a                               [support end of the profile]
    [count]      quantum = h | hbar | custom=VAL [h]   e_star [grid e_max]
    [oscillator] omega0 [1]  ramp_rate [0.001]  x0 [1]  p0 [0]
                 t_end [time for omega to double]  dt [2 pi/(200 omega(t_end))]
    [wigner]     window = hann | rectangular | blackman [hann]  pad [4]
                 e_max [grid e_max]  points [2000]  eps_steps [1]
    [ingest]     file = PATH                     relative to the config file
    [units]      mass = neutron | electron | KG  length_nm = L
    [output]     dir [out]

The ``[units]`` block only changes what ``report.txt`` shows; computations
always run in natural units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from ..corpus import names as corpus_names
from ..corpus import profile as corpus_profile
from ..engine import BreitWignerScatterer
from ..errors import ConfigError, ConfigSyntaxError, ConstraintViolation, UnknownKey
from ..oscillator import OscillatorConfig
from ..potential import Geometry, Layer, PotentialProfile, validate_profile
from ..units import HBAR, H_PLANCK
from ..wigner import WINDOWS

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ProfileSpec:
    geometry: str = "radial"
    corpus: str = ""
    layers: tuple[tuple[float, float], ...] = ()
    resonances: tuple[tuple[float, float], ...] = ()
    background: float = 0.0


@dataclass(frozen=True)
class GridSpec:
    e_min: float = 0.01
    e_max: float = 50.0
    points: int = 4001
    refine: bool = True


@dataclass(frozen=True)
class QuantumSpec:
    kind: str = "h"
    value: float = H_PLANCK

    @classmethod
    def parse(cls, text: str) -> "QuantumSpec":
        t = text.strip()
        if t == "h":
            return cls("h", H_PLANCK)
        if t == "hbar":
            return cls("hbar", HBAR)
        if t.startswith("custom="):
            try:
                v = float(t[len("custom="):])
            except ValueError:
                raise ConstraintViolation(f"custom quantum {t!r} is not a number") from None
            if not (math.isfinite(v) and v > 0):
                raise ConstraintViolation("custom quantum must be finite and > 0")
            return cls("custom", v)
        raise ConstraintViolation(f"quantum must be h, hbar or custom=VALUE, got {t!r}")

    def text(self) -> str:
        return self.kind if self.kind != "custom" else f"custom={self.value!r}"


@dataclass(frozen=True)
class OscillatorSpec:
    omega0: float = 1.0
    ramp_rate: float = 1e-3
    x0: float = 1.0
    p0: float = 0.0
    t_end: float | None = None
    dt: float | None = None

    def build(self) -> OscillatorConfig:
        t_end = self.t_end if self.t_end is not None else (
            1.0 / self.ramp_rate if self.ramp_rate > 0 else 1000.0)
        cfg = OscillatorConfig(self.omega0, self.ramp_rate, self.x0, self.p0, t_end, 1.0)
        dt = self.dt if self.dt is not None else cfg.max_dt()
        return replace(cfg, dt=dt)


@dataclass(frozen=True)
class WignerSpec:
    window: str = "hann"
    pad: int = 4
    e_max: float | None = None
    points: int = 2000
    eps_steps: int = 1


@dataclass(frozen=True)
class UnitsSpec:
    mass: str = ""
    length_nm: float | None = None


@dataclass(frozen=True)
class RunConfig:
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    a: float | None = None
    quantum: QuantumSpec = field(default_factory=QuantumSpec)
    e_star: float | None = None
    oscillator: OscillatorSpec = field(default_factory=OscillatorSpec)
    wigner: WignerSpec = field(default_factory=WignerSpec)
    ingest_file: str = ""
    units: UnitsSpec = field(default_factory=UnitsSpec)
    out_dir: str = "out"

    # -- derived objects ---------------------------------------------------
    def source(self):
        """Validated profile or synthetic scatterer described by ``[profile]``."""
        p = self.profile
        if p.resonances:
            e0 = tuple(r[0] for r in p.resonances)
            g = tuple(r[1] for r in p.resonances)
            return BreitWignerScatterer(e0, g, p.background)
        if p.corpus:
            return corpus_profile(p.corpus)
        raw = PotentialProfile(Geometry(p.geometry), tuple(Layer(w, h) for w, h in p.layers),
                               free_particle=not p.layers)
        return validate_profile(raw)

    def reference_length(self) -> float:
        return self.a if self.a is not None else float(self.source().support_end)

    def star_energy(self) -> float:
        return self.e_star if self.e_star is not None else self.grid.e_max

    def wigner_e_max(self) -> float:
        return self.wigner.e_max if self.wigner.e_max is not None else self.grid.e_max


# -- schema ---------------------------------------------------------------------

def _float(text):
    try:
        v = float(text)
    except ValueError:
        raise ConstraintViolation(f"{text!r} is not a number") from None
    if not math.isfinite(v):
        raise ConstraintViolation(f"{text!r} is not finite")
    return v


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ConstraintViolation(f"{text!r} is not an integer") from None


def _bool(text):
    t = text.lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ConstraintViolation(f"{text!r} is not a boolean")


def _pair(text):
    parts = text.split()
    if len(parts) != 2:
        raise ConstraintViolation(f"expected two numbers, got {text!r}")
    return _float(parts[0]), _float(parts[1])


def _str(text):
    return text


SCHEMA = {
    "profile": {"geometry": _str, "corpus": _str, "layer": _pair, "resonance": _pair,
                "background": _float},
    "grid": {"e_min": _float, "e_max": _float, "points": _int, "refine": _bool},
    "reference": {"a": _float},
    "count": {"quantum": QuantumSpec.parse, "e_star": _float},
    "oscillator": {"omega0": _float, "ramp_rate": _float, "x0": _float, "p0": _float,
                   "t_end": _float, "dt": _float},
    "wigner": {"window": _str, "pad": _int, "e_max": _float, "points": _int,
               "eps_steps": _int},
    "ingest": {"file": _str},
    "units": {"mass": _str, "length_nm": _float},
    "output": {"dir": _str},
}
REPEATABLE = {("profile", "layer"), ("profile", "resonance")}


def _tokenize(text: str):
    """Yield ``(line_no, section, key, raw_value)`` for every entry."""
    section = None
    seen = set()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigSyntaxError(no, f"unterminated section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise UnknownKey(f"line {no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigSyntaxError(no, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigSyntaxError(no, "missing key before '='")
        if section is None:
            raise ConfigSyntaxError(no, f"key {key!r} appears before any [section]")
        if key not in SCHEMA[section]:
            raise UnknownKey(f"line {no}: unknown key {key!r} in [{section}]")
        if (section, key) in seen and (section, key) not in REPEATABLE:
            raise ConfigSyntaxError(no, f"duplicate key {key!r} in [{section}]")
        seen.add((section, key))
        yield no, section, key, value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration text; see the module docstring."""
    values: dict[str, dict] = {s: {} for s in SCHEMA}
    for no, section, key, raw in _tokenize(text):
        try:
            v = SCHEMA[section][key](raw)
        except ConfigError as err:
            raise ConstraintViolation(f"line {no}: [{section}] {key}: {err}") from err
        if (section, key) in REPEATABLE:
            values[section].setdefault(key, []).append(v)
        else:
            values[section][key] = v
    return _build(values)


def _build(v) -> RunConfig:
    pr = v["profile"]
    profile = ProfileSpec(
        geometry=pr.get("geometry", "radial"),
        corpus=pr.get("corpus", ""),
        layers=tuple(pr.get("layer", ())),
        resonances=tuple(pr.get("resonance", ())),
        background=pr.get("background", 0.0),
    )
    osc = v["oscillator"]
    wg = v["wigner"]
    cfg = RunConfig(
        profile=profile,
        grid=GridSpec(**v["grid"]),
        a=v["reference"].get("a"),
        quantum=v["count"].get("quantum", QuantumSpec()),
        e_star=v["count"].get("e_star"),
        oscillator=OscillatorSpec(**osc),
        wigner=WignerSpec(**wg),
        ingest_file=v["ingest"].get("file", ""),
        units=UnitsSpec(**v["units"]),
        out_dir=v["output"].get("dir", "out"),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    """Check cross-field constraints, reporting the module whose rule failed."""
    p = cfg.profile
    if p.geometry not in ("radial", "full_line"):
        raise ConstraintViolation(f"profile: geometry must be radial or full_line, got {p.geometry!r}")
    if p.corpus and p.corpus not in corpus_names():
        raise ConstraintViolation(f"profile: unknown corpus entry {p.corpus!r}")
    if sum(bool(x) for x in (p.corpus, p.layers, p.resonances)) > 1:
        raise ConstraintViolation("profile: corpus, layer and resonance are mutually exclusive")
    if any(g <= 0 for _, g in p.resonances):
        raise ConstraintViolation("resonance-fit: synthetic widths must be > 0")
    try:
        src = cfg.source()
    except ConfigError as err:
        raise ConstraintViolation(f"potential-model: {err}") from err
    g = cfg.grid
    if not (0 < g.e_min < g.e_max):
        raise ConstraintViolation("scattering-engine: need 0 < e_min < e_max")
    if g.points < 2:
        raise ConstraintViolation("timedelay-core: grid needs at least 2 points")
    if cfg.a is not None and cfg.a < src.support_end:
        raise ConstraintViolation(
            f"scattering-engine: reference length a = {cfg.a!r} lies inside the support "
            f"(support end {src.support_end!r})")
    if cfg.e_star is not None and not (g.e_min <= cfg.e_star <= g.e_max):
        raise ConstraintViolation("timedelay-core: e_star must lie within the grid")
    w = cfg.wigner
    if w.window not in WINDOWS:
        raise ConstraintViolation(f"wigner-bridge: window must be one of {WINDOWS}")
    if w.pad < 2 or w.points < 16 or not 1 <= w.eps_steps <= 8:
        raise ConstraintViolation("wigner-bridge: need pad >= 2, points >= 16, 1 <= eps_steps <= 8")
    if w.e_max is not None and w.e_max <= 0:
        raise ConstraintViolation("wigner-bridge: e_max must be > 0")
    try:
        cfg.oscillator.build().validate()
    except ConfigError as err:
        raise ConstraintViolation(f"adiabatic-oscillator: {err}") from err
    u = cfg.units
    if u.mass and u.mass not in ("neutron", "electron"):
        try:
            if _float(u.mass) <= 0:
                raise ConstraintViolation("units: mass must be > 0")
        except ConstraintViolation as err:
            raise ConstraintViolation(f"units: mass must be neutron, electron or kg ({err})") from err
    if u.length_nm is not None and u.length_nm <= 0:
        raise ConstraintViolation("units: length_nm must be > 0")
    if bool(u.mass) != (u.length_nm is not None):
        raise ConstraintViolation("units: mass and length_nm must be given together")


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c)) == c``."""
    out = [f"# format_version = {FORMAT_VERSION}", "[profile]"]
    p = cfg.profile
    if not p.corpus:
        out.append(f"geometry = {p.geometry}")
    if p.corpus:
        out.append(f"corpus = {p.corpus}")
    out += [f"layer = {w!r} {h!r}" for w, h in p.layers]
    out += [f"resonance = {e!r} {g!r}" for e, g in p.resonances]
    out.append(f"background = {p.background!r}")
    g = cfg.grid
    out += ["[grid]", f"e_min = {g.e_min!r}", f"e_max = {g.e_max!r}",
            f"points = {g.points}", f"refine = {str(g.refine).lower()}"]
    if cfg.a is not None:
        out += ["[reference]", f"a = {cfg.a!r}"]
    out += ["[count]", f"quantum = {cfg.quantum.text()}"]
    if cfg.e_star is not None:
        out.append(f"e_star = {cfg.e_star!r}")
    out.append("[oscillator]")
    for f in fields(OscillatorSpec):
        val = getattr(cfg.oscillator, f.name)
        if val is not None:
            out.append(f"{f.name} = {val!r}")
    w = cfg.wigner
    out += ["[wigner]", f"window = {w.window}", f"pad = {w.pad}", f"points = {w.points}",
            f"eps_steps = {w.eps_steps}"]
    if w.e_max is not None:
        out.append(f"e_max = {w.e_max!r}")
    if cfg.ingest_file:
        out += ["[ingest]", f"file = {cfg.ingest_file}"]
    if cfg.units.mass:
        out += ["[units]", f"mass = {cfg.units.mass}", f"length_nm = {cfg.units.length_nm!r}"]
    out += ["[output]", f"dir = {cfg.out_dir}"]
    return "\n".join(out) + "\n"
