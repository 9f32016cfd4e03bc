"""Flat key=value configuration files with [metric], [damping], [data], [solver].

Keys may also be written fully qualified (``damping.beta = 0.9``) outside
any section.  ``#`` or ``;`` starts a comment at the start of a line or
after whitespace.  Values are numbers, ``true``/``false`` or strings
(optionally quoted).
"""
import configparser
from dataclasses import dataclass, field, fields, replace

from .errors import InvalidParameter, NonIntegrableDamping, ParseError, ValidationError
from .exponents import ProblemPoint, classify_region
from .metric import make_profile
from .rescale import DampingProfile

SECTIONS = ("metric", "damping", "data", "solver")


@dataclass(frozen=True)
class MetricSection:
    family: str = "flat"
    a: float = 0.0
    rho: float = 1.0


@dataclass(frozen=True)
class DampingSection:
    mu: float = 0.0
    beta: float = 2.0


@dataclass(frozen=True)
class DataSection:
    eps: float = 0.05
    R0: float = 1.0
    A0: float = 1.0
    A1: float = 1.0
    power: int = 4


@dataclass(frozen=True)
class SolverSection:
    n: int = 3
    p: float = 2.0
    q: float = 2.0
    c1: float = 1.0
    c2: float = 0.0
    h: float = 0.05
    cfl: float = 0.5
    threshold: float = 1e8
    t_max: float = 100.0
    mode: str = "transformed"
    lam: float = 1.0


@dataclass(frozen=True)
class LabConfig:
    metric: MetricSection = field(default_factory=MetricSection)
    damping: DampingSection = field(default_factory=DampingSection)
    data: DataSection = field(default_factory=DataSection)
    solver: SolverSection = field(default_factory=SolverSection)

    def profile(self):
        return make_profile(self.metric.family, self.metric.a, self.metric.rho, self.solver.n)

    def damping_profile(self):
        return DampingProfile.from_params(self.damping.mu, self.damping.beta)

    def solver_config(self, **overrides):
        from .wave_solver import SolverConfig

        s, d = self.solver, self.data
        kw = dict(n=s.n, p=s.p, q=s.q, c1=s.c1, c2=s.c2, metric=self.profile(),
                  damping=self.damping_profile(), h=s.h, cfl=s.cfl, t_max=s.t_max,
                  threshold=s.threshold, R0=d.R0, A0=d.A0, A1=d.A1, data_power=d.power)
        kw.update(overrides)
        return SolverConfig(**kw)

    def regime(self):
        s = self.solver
        return classify_region(ProblemPoint(s.n, s.p, s.q, s.c1, s.c2))


def _convert(text, kind, line):
    t = text.strip()
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "\"'":
        t = t[1:-1]
        if kind is str:
            return t
    try:
        if kind is bool:
            low = t.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(t)
        if kind is int:
            val = float(t)
            if val != int(val):
                raise ValueError(t)
            return int(val)
        return kind(t)
    except ValueError:
        raise ParseError(f"cannot read {text.strip()!r} as {kind.__name__}", line) from None


def _types(section_cls):
    return {f.name: type(f.default) for f in fields(section_cls)}


_SECTION_CLS = {"metric": MetricSection, "damping": DampingSection, "data": DataSection,
                "solver": SolverSection}


_ROOT = "__root__"


def _line_of(lines, sec, key):
    """1-based line of ``key`` (best effort, for error messages)."""
    current = None
    for num, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            continue
        head = line.split("=", 1)[0].strip()
        if (current == sec and head == key) or (current is None and head == f"{sec}.{key}"):
            return num
    return None


def parse_text(text):
    """Parse configuration text and validate it.

    Tokenizing is done by :mod:`configparser`; a synthetic leading section
    collects fully qualified keys written before any header.

    Raises
    ------
    ParseError
        On malformed lines, unknown sections or keys (with the line number).
    ValidationError
        If a value violates an invariant of the module that consumes it.
    """
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";"),
                                   default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(f"[{_ROOT}]\n" + text)
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.section}.{exc.option}", exc.lineno - 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}]", exc.lineno - 1) from None
    except configparser.ParsingError as exc:
        line, text_ = exc.errors[0]
        raise ParseError(f"expected key = value, got {text_}", line - 1) from None
    lines = text.splitlines()
    values = {name: {} for name in SECTIONS}
    for sec_name in cp.sections():
        if sec_name != _ROOT and sec_name not in SECTIONS:
            raise ParseError(f"unknown section [{sec_name}]", _header_line(lines, sec_name))
        for key, raw in cp.items(sec_name):
            sec, name = sec_name, key
            if sec_name == _ROOT:
                if "." not in key:
                    raise ParseError(f"key {key!r} outside any section", _line_of(lines, None, key))
                sec, name = key.split(".", 1)
            line = _line_of(lines, sec, name)
            if sec not in SECTIONS:
                raise ParseError(f"unknown section {sec!r}", line)
            types = _types(_SECTION_CLS[sec])
            if name not in types:
                raise ParseError(f"unknown key {sec}.{name}", line)
            if name in values[sec]:
                raise ParseError(f"duplicate key {sec}.{name}", line)
            values[sec][name] = _convert(raw, types[name], line)
    cfg = LabConfig(**{k: _SECTION_CLS[k](**v) for k, v in values.items()})
    validate(cfg)
    return cfg


def _header_line(lines, name):
    for num, raw in enumerate(lines, start=1):
        if raw.strip() == f"[{name}]":
            return num
    return None


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def validate(cfg):
    """Build every consumer object once so invariants fail early."""
    try:
        cfg.damping_profile()
    except NonIntegrableDamping as exc:
        raise ValidationError(f"NonIntegrableDamping: {exc}", cause="NonIntegrableDamping")
    try:
        cfg.profile()
        s, d = cfg.solver, cfg.data
        if s.mode not in ("original", "transformed"):
            raise InvalidParameter(f"solver.mode must be original or transformed, got {s.mode!r}")
        if not 0 < d.eps:
            raise InvalidParameter("data.eps must be positive")
        if not s.lam > 0:
            raise InvalidParameter("solver.lam must be positive")
        cfg.solver_config()
        cfg.regime()
    except ValidationError:
        raise
    except InvalidParameter as exc:
        raise ValidationError(str(exc), cause=type(exc).__name__) from exc
    return cfg


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, int):
        return str(v)
    return f'"{v}"'


def emit(cfg):
    """Configuration text that parses back to ``cfg``."""
    out = []
    for name in SECTIONS:
        sec = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in fields(sec):
            out.append(f"{f.name} = {format_value(getattr(sec, f.name))}")
        out.append("")
    return "\n".join(out)


def updated(cfg, **changes):
    """Copy with ``section_key=value`` changes, e.g. ``updated(cfg, solver_h=0.1)``."""
    parts = {}
    for key, val in changes.items():
        sec, name = key.split("_", 1)
        parts.setdefault(sec, {})[name] = val
    return replace(cfg, **{s: replace(getattr(cfg, s), **kv) for s, kv in parts.items()})
