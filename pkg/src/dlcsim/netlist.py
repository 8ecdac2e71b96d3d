"""Circuit data model and a small SPICE-subset text format.

Grammar (keywords case-insensitive, first line is the title)::

    * comment
    Mxxx nd ng ns nb model W=<val> L=<val>
    Rxxx n1 n2 <val>
    Cxxx n1 n2 <val>
    Vxxx n+ n- <DC val | PULSE(v1 v2 td tr tf pw per) | PWL(t1 v1 t2 v2 ...)>
    .model <name> <nmos|pmos> (VT0=<v> KP=<v> LAMBDA=<v> CGSO=<v> CGDO=<v> COX=<v>)
    .tran <tstep> <tstop>
    .op
    .end
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

from .devmodel import ModelCard
from .units import format_value, parse_value

GROUND = "0"


class NetlistError(ValueError):
    """Raised for malformed or inconsistent netlists."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# -- waveforms --------------------------------------------------------------

@dataclass(frozen=True)
class Dc:
    volts: float

    def value(self, t: float) -> float:
        return self.volts

    def breakpoints(self, tstop: float) -> list[float]:
        return []


@dataclass(frozen=True)
class Pulse:
    v1: float
    v2: float
    delay_s: float
    rise_s: float
    fall_s: float
    width_s: float
    period_s: float

    def __post_init__(self):
        if not (self.rise_s > 0 and self.fall_s > 0):
            raise ValueError("pulse rise and fall times must be > 0")
        if self.delay_s < 0 or self.width_s < 0:
            raise ValueError("pulse delay and width must be >= 0")
        if self.period_s < self.rise_s + self.width_s + self.fall_s:
            raise ValueError("pulse period shorter than rise + width + fall")

    def value(self, t: float) -> float:
        if t < self.delay_s:
            return self.v1
        k = math.floor((t - self.delay_s) / self.period_s)
        tau = t - (self.delay_s + k * self.period_s)
        if tau < self.rise_s:
            return self.v1 + (self.v2 - self.v1) * tau / self.rise_s
        tau -= self.rise_s
        if tau < self.width_s:
            return self.v2
        tau -= self.width_s
        if tau < self.fall_s:
            return self.v2 + (self.v1 - self.v2) * tau / self.fall_s
        return self.v1

    def breakpoints(self, tstop: float) -> list[float]:
        out = []
        k = 0
        offsets = (0.0, self.rise_s, self.rise_s + self.width_s, self.rise_s + self.width_s + self.fall_s)
        while True:
            start = self.delay_s + k * self.period_s
            if start > tstop:
                break
            out.extend(start + o for o in offsets if start + o <= tstop)
            k += 1
        return out


@dataclass(frozen=True)
class Pwl:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("PWL needs at least one point")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("PWL times must be strictly increasing")

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.points)

    def value(self, t: float) -> float:
        pts = self.points
        if t <= pts[0][0]:
            return pts[0][1]
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return pts[-1][1]

    def breakpoints(self, tstop: float) -> list[float]:
        return [t for t, _ in self.points if 0 <= t <= tstop]


Waveform = Union[Dc, Pulse, Pwl]


# -- devices ----------------------------------------------------------------

@dataclass(frozen=True)
class Mosfet:
    name: str
    drain: str
    gate: str
    source: str
    bulk: str
    model: str
    width_m: float
    length_m: float

    def __post_init__(self):
        if not (self.width_m > 0 and self.length_m > 0):
            raise ValueError(f"{self.name}: W and L must be > 0")

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.drain, self.gate, self.source, self.bulk)


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    ohms: float

    def __post_init__(self):
        if not self.ohms > 0:
            raise ValueError(f"{self.name}: resistance must be > 0")

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.n1, self.n2)


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    farads: float

    def __post_init__(self):
        if not self.farads > 0:
            raise ValueError(f"{self.name}: capacitance must be > 0")

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.n1, self.n2)


@dataclass(frozen=True)
class VSource:
    name: str
    npos: str
    nneg: str
    waveform: Waveform

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.npos, self.nneg)


Device = Union[Mosfet, Resistor, Capacitor, VSource]

_KIND_LETTER = {Mosfet: "M", Resistor: "R", Capacitor: "C", VSource: "V"}


@dataclass(frozen=True)
class Tran:
    tstep_max_s: float
    tstop_s: float

    def __post_init__(self):
        if not self.tstop_s > 0:
            raise ValueError(".tran stop time must be > 0")
        if not (0 < self.tstep_max_s < self.tstop_s):
            raise ValueError(".tran step must satisfy 0 < tstep < tstop")


@dataclass(frozen=True)
class Op:
    pass


AnalysisDirective = Union[Tran, Op]


@dataclass
class Netlist:
    title: str = ""
    devices: list = field(default_factory=list)
    models: dict = field(default_factory=dict)
    directives: list = field(default_factory=list)

    ground = GROUND

    @property
    def nodes(self) -> list[str]:
        """All node names in first-use order, ground included if referenced."""
        seen: dict[str, None] = {}
        for dev in self.devices:
            for n in dev.nodes:
                seen.setdefault(n, None)
        return list(seen)

    def device(self, name: str) -> Device:
        key = name.upper()
        for dev in self.devices:
            if dev.name.upper() == key:
                return dev
        raise KeyError(name)

    def of_kind(self, kind: type) -> list:
        return [d for d in self.devices if isinstance(d, kind)]

    @property
    def tran(self) -> Tran | None:
        for d in self.directives:
            if isinstance(d, Tran):
                return d
        return None

    def validate(self) -> None:
        names = set()
        for dev in self.devices:
            letter = _KIND_LETTER[type(dev)]
            if not dev.name or dev.name[0].upper() != letter:
                raise NetlistError(f"device {dev.name!r} must start with {letter!r}")
            key = dev.name.upper()
            if key in names:
                raise NetlistError(f"duplicate device name {dev.name!r}")
            names.add(key)
            if isinstance(dev, Mosfet) and dev.model not in self.models:
                raise NetlistError(f"{dev.name}: undefined model {dev.model!r}")
        if self.devices and GROUND not in self.nodes:
            raise NetlistError("no device connects to ground node '0'")


# -- parsing ----------------------------------------------------------------

_PAREN_RE = re.compile(r"^(PULSE|PWL)\s*\((.*)\)\s*$", re.IGNORECASE)
_MODEL_RE = re.compile(r"^\.model\s+(\S+)\s+(\S+)\s*\((.*)\)\s*$", re.IGNORECASE)
_MODEL_KEYS = {"VT0": "vt0", "KP": "kp", "LAMBDA": "lambda_", "CGSO": "cgso", "CGDO": "cgdo", "COX": "cox"}


def _val(tok: str, lineno: int) -> float:
    try:
        return parse_value(tok)
    except ValueError as exc:
        raise NetlistError(str(exc), lineno) from None


def _parse_keyvals(tokens: list[str], lineno: int) -> dict[str, float]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise NetlistError(f"expected KEY=value, got {tok!r}", lineno)
        k, v = tok.split("=", 1)
        out[k.strip().upper()] = _val(v, lineno)
    return out


def _parse_waveform(spec: str, lineno: int) -> Waveform:
    m = _PAREN_RE.match(spec)
    if m:
        kind, body = m.group(1).upper(), m.group(2).replace(",", " ").split()
        vals = [_val(t, lineno) for t in body]
        try:
            if kind == "PULSE":
                if len(vals) != 7:
                    raise NetlistError("PULSE takes 7 values (v1 v2 td tr tf pw per)", lineno)
                return Pulse(*vals)
            if len(vals) < 2 or len(vals) % 2:
                raise NetlistError("PWL takes an even number of values (t1 v1 t2 v2 ...)", lineno)
            return Pwl(tuple(zip(vals[::2], vals[1::2])))
        except ValueError as exc:
            if isinstance(exc, NetlistError):
                raise
            raise NetlistError(str(exc), lineno) from None
    toks = spec.split()
    if len(toks) == 2 and toks[0].upper() == "DC":
        return Dc(_val(toks[1], lineno))
    if len(toks) == 1:
        return Dc(_val(toks[0], lineno))
    raise NetlistError(f"cannot parse source value {spec!r}", lineno)


def _parse_element(line: str, lineno: int) -> Device:
    toks = line.split()
    name = toks[0]
    kind = name[0].upper()
    try:
        if kind == "M":
            if len(toks) != 8:
                raise NetlistError(
                    f"MOSFET {name} needs 'nd ng ns nb model W=.. L=..' ({len(toks) - 1} fields given)", lineno)
            kv = _parse_keyvals(toks[6:], lineno)
            if set(kv) != {"W", "L"}:
                raise NetlistError(f"MOSFET {name} needs exactly W= and L=", lineno)
            return Mosfet(name, toks[1], toks[2], toks[3], toks[4], toks[5], kv["W"], kv["L"])
        if kind in "RC":
            if len(toks) != 4:
                raise NetlistError(f"{name} needs 'n1 n2 value'", lineno)
            cls = Resistor if kind == "R" else Capacitor
            return cls(name, toks[1], toks[2], _val(toks[3], lineno))
        if kind == "V":
            if len(toks) < 4:
                raise NetlistError(f"{name} needs 'n+ n- waveform'", lineno)
            spec = line.split(None, 3)[3]
            return VSource(name, toks[1], toks[2], _parse_waveform(spec, lineno))
    except NetlistError:
        raise
    except ValueError as exc:
        raise NetlistError(str(exc), lineno) from None
    raise NetlistError(f"unknown element type {name!r}", lineno)


def _parse_model(line: str, lineno: int) -> tuple[str, ModelCard]:
    m = _MODEL_RE.match(line)
    if not m:
        raise NetlistError("expected '.model <name> <nmos|pmos> (KEY=value ...)'", lineno)
    name, pol, body = m.groups()
    pol = pol.lower()
    if pol not in ("nmos", "pmos"):
        raise NetlistError(f"model type must be nmos or pmos, got {pol!r}", lineno)
    kv = _parse_keyvals(body.replace(",", " ").split(), lineno)
    unknown = set(kv) - set(_MODEL_KEYS)
    if unknown:
        raise NetlistError(f"unknown model parameter(s) {sorted(unknown)}", lineno)
    if "VT0" not in kv or "KP" not in kv:
        raise NetlistError("model needs at least VT0 and KP", lineno)
    try:
        card = ModelCard(pol, **{_MODEL_KEYS[k]: v for k, v in kv.items()})
    except ValueError as exc:
        raise NetlistError(str(exc), lineno) from None
    return name, card


def parse(text: str) -> Netlist:
    """Parse netlist text; see the module docstring for the grammar."""
    lines = text.splitlines()
    if not lines:
        raise NetlistError("empty input (a title line is required)", 1)
    net = Netlist(title=lines[0].strip())
    where: dict[str, int] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        if line.startswith("."):
            card = line.split()[0].lower()
            if card == ".end":
                break
            if card == ".model":
                name, mc = _parse_model(line, lineno)
                if name in net.models:
                    raise NetlistError(f"duplicate model {name!r}", lineno)
                net.models[name] = mc
            elif card == ".tran":
                toks = line.split()
                if len(toks) != 3:
                    raise NetlistError("expected '.tran <tstep> <tstop>'", lineno)
                try:
                    net.directives.append(Tran(_val(toks[1], lineno), _val(toks[2], lineno)))
                except ValueError as exc:
                    raise NetlistError(str(exc), lineno) from None
            elif card == ".op":
                net.directives.append(Op())
            else:
                raise NetlistError(f"unsupported control card {card!r}", lineno)
            continue
        dev = _parse_element(line, lineno)
        key = dev.name.upper()
        if key in where:
            raise NetlistError(f"duplicate device name {dev.name!r} (first on line {where[key]})", lineno)
        where[key] = lineno
        net.devices.append(dev)

    for dev in net.of_kind(Mosfet):
        if dev.model not in net.models:
            raise NetlistError(f"{dev.name}: undefined model {dev.model!r}", where[dev.name.upper()])
    if net.devices and GROUND not in net.nodes:
        raise NetlistError("missing ground: no device connects to node '0'")
    return net


# -- printing ---------------------------------------------------------------

def format_waveform(wf: Waveform) -> str:
    f = format_value
    if isinstance(wf, Dc):
        return f"DC {f(wf.volts)}"
    if isinstance(wf, Pulse):
        vals = (wf.v1, wf.v2, wf.delay_s, wf.rise_s, wf.fall_s, wf.width_s, wf.period_s)
        return "PULSE(" + " ".join(f(v) for v in vals) + ")"
    return "PWL(" + " ".join(f"{f(t)} {f(v)}" for t, v in wf.points) + ")"


def format_model(name: str, mc: ModelCard) -> str:
    f = format_value
    return (f".model {name} {mc.polarity} (VT0={f(mc.vt0)} KP={f(mc.kp)} LAMBDA={f(mc.lambda_)} "
            f"CGSO={f(mc.cgso)} CGDO={f(mc.cgdo)} COX={f(mc.cox)})")


def format_device(dev: Device) -> str:
    f = format_value
    if isinstance(dev, Mosfet):
        return (f"{dev.name} {dev.drain} {dev.gate} {dev.source} {dev.bulk} {dev.model} "
                f"W={f(dev.width_m)} L={f(dev.length_m)}")
    if isinstance(dev, Resistor):
        return f"{dev.name} {dev.n1} {dev.n2} {f(dev.ohms)}"
    if isinstance(dev, Capacitor):
        return f"{dev.name} {dev.n1} {dev.n2} {f(dev.farads)}"
    return f"{dev.name} {dev.npos} {dev.nneg} {format_waveform(dev.waveform)}"


def to_text(net: Netlist) -> str:
    """Canonical text form; ``parse(to_text(n)) == n`` for valid netlists."""
    out = [net.title]
    out += [format_model(name, mc) for name, mc in net.models.items()]
    out += [format_device(d) for d in net.devices]
    for d in net.directives:
        if isinstance(d, Tran):
            out.append(f".tran {format_value(d.tstep_max_s)} {format_value(d.tstop_s)}")
        else:
            out.append(".op")
    out.append(".end")
    return "\n".join(out) + "\n"


# ``print`` would shadow the builtin
print_netlist = to_text
