"""Monte-Carlo mismatch, process corners and parameter sweeps.

Mismatch follows the area law: sigma(dVT) = a_vt/sqrt(W*L) and
sigma(dbeta/beta) = a_beta/sqrt(W*L). Every perturbed device gets a private
copy of its model card, so samples stay structurally identical and are
simulated together in batches.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .devmodel import ModelCard
from .engine import SolverOptions
from .metrics import (METRIC_FIELDS, ComparatorMetrics, TestbenchSpec, characterize_netlists,
                      evaluate_metric)
from .netlist import Mosfet, Netlist
from .topologies import TopologyId, generate_topology
from .units import parse_value

# 5 mV*um and 1 %*um, expressed in SI
DEFAULT_A_VT = 5e-9
DEFAULT_A_BETA = 1e-8


@dataclass(frozen=True)
class MismatchSpec:
    a_vt: float = DEFAULT_A_VT
    a_beta: float = DEFAULT_A_BETA
    seed: int = 0
    n_samples: int = 100
    # restrict mismatch to these device names (None = every MOSFET)
    devices: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.a_vt < 0 or self.a_beta < 0:
            raise ValueError("mismatch coefficients must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def sigma_vt(spec: MismatchSpec, width_m: float, length_m: float) -> float:
    return spec.a_vt / math.sqrt(width_m * length_m)


def sigma_beta(spec: MismatchSpec, width_m: float, length_m: float) -> float:
    return spec.a_beta / math.sqrt(width_m * length_m)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one sample, derived from (seed, index) only."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def draw_mismatch(core: Netlist, spec: MismatchSpec, index: int) -> dict[str, tuple[float, float]]:
    """Per-device (dVT, dbeta/beta) for sample ``index``.

    Draws are made for every MOSFET in netlist order before the device
    filter is applied, so enabling or disabling a device never changes
    the values drawn for the others.
    """
    mos = core.of_kind(Mosfet)
    z = sample_rng(spec.seed, index).standard_normal((len(mos), 2))
    wanted = None if spec.devices is None else {d.upper() for d in spec.devices}
    if wanted is not None:
        unknown = wanted - {d.name.upper() for d in mos}
        if unknown:
            raise ValueError(f"mismatch filter names unknown devices {sorted(unknown)}")
    out = {}
    for (zv, zb), d in zip(z, mos):
        if wanted is not None and d.name.upper() not in wanted:
            continue
        out[d.name] = (zv * sigma_vt(spec, d.width_m, d.length_m), zb * sigma_beta(spec, d.width_m, d.length_m))
    return out


def apply_mismatch(core: Netlist, deltas: Mapping[str, tuple[float, float]]) -> Netlist:
    """Copy of ``core`` where each listed device uses its own shifted model card.

    A positive dVT raises the threshold magnitude for either polarity.
    """
    models: dict[str, ModelCard] = dict(core.models)
    devices = []
    for d in core.devices:
        if isinstance(d, Mosfet) and d.name in deltas:
            dvt, dbeta = deltas[d.name]
            base = core.models[d.model]
            name = f"{d.model}_{d.name.lower()}"
            models[name] = replace(base, vt0=base.vt0 + dvt, kp=base.kp * (1.0 + dbeta))
            d = replace(d, model=name)
        devices.append(d)
    return replace(core, devices=devices, models=models, directives=list(core.directives))


@dataclass(frozen=True)
class Distribution:
    """Metric values of the samples that completed, plus the ones that failed."""

    metric: str
    indices: tuple[int, ...]
    samples: tuple[float, ...]
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=float)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.n else math.nan

    @property
    def std(self) -> float:
        """Sample standard deviation (n - 1 in the denominator)."""
        return float(np.std(self.values, ddof=1)) if self.n > 1 else 0.0

    @property
    def min(self) -> float:
        return float(np.min(self.values)) if self.n else math.nan

    @property
    def max(self) -> float:
        return float(np.max(self.values)) if self.n else math.nan

    def summary(self) -> dict:
        return {"metric": self.metric, "mean": self.mean, "std": self.std, "min": self.min,
                "max": self.max, "n": self.n, "n_failed": self.n_failed}

    def to_csv(self) -> str:
        """``sample_index,value`` rows in index order; failed samples read ``nan``."""
        rows = dict(zip(self.indices, self.samples))
        rows.update({i: math.nan for i, _ in self.failures})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_index", "value"])
        for i in sorted(rows):
            w.writerow([i, format(rows[i], ".17g")])
        return buf.getvalue()

    def histogram(self, bins: int = 20) -> dict:
        counts, edges = np.histogram(self.values, bins=bins)
        return {"edges": edges.tolist(), "counts": counts.tolist()}


def monte_carlo(topology: TopologyId | str, bench: TestbenchSpec | None = None,
                spec: MismatchSpec | None = None, metric: str = "offset_v",
                options: SolverOptions | None = None, *, sizing=None, models=None,
                chunk_size: int = 100) -> Distribution:
    """Distribution of ``metric`` over ``spec.n_samples`` mismatch samples.

    Samples are simulated ``chunk_size`` at a time; each sample's value
    depends only on (seed, index), not on the chunking.
    """
    if metric not in METRIC_FIELDS:
        raise ValueError(f"unknown metric {metric!r}; choose from {list(METRIC_FIELDS)}")
    spec = spec or MismatchSpec()
    core = generate_topology(topology, sizing, models=models)
    draw_mismatch(core, spec, 0)  # rejects an unknown device filter before any simulation
    indices, samples, failures = [], [], []
    for start in range(0, spec.n_samples, chunk_size):
        idx, cores = [], []
        for i in range(start, min(start + chunk_size, spec.n_samples)):
            try:
                cores.append(apply_mismatch(core, draw_mismatch(core, spec, i)))
                idx.append(i)
            except ValueError as exc:  # a draw pushed a card out of its valid range
                failures.append((i, f"invalid sample: {exc}"))
        if not cores:
            continue
        for i, value in zip(idx, evaluate_metric(cores, metric, bench, options)):
            if isinstance(value, Exception):
                failures.append((i, str(value)))
            else:
                indices.append(i)
                samples.append(float(value))
    return Distribution(metric, tuple(indices), tuple(samples), tuple(sorted(failures)))


@dataclass(frozen=True)
class Corner:
    """kp multiplier and relative vt0 change per polarity."""

    name: str
    nmos_kp: float = 1.0
    nmos_vt0: float = 0.0
    pmos_kp: float = 1.0
    pmos_vt0: float = 0.0

    def apply(self, card: ModelCard) -> ModelCard:
        kp, dvt = (self.nmos_kp, self.nmos_vt0) if card.polarity == "nmos" else (self.pmos_kp, self.pmos_vt0)
        return card.scaled(kp_scale=kp, vt0_scale=1.0 + dvt)


_FAST = (1.1, -0.1)
_SLOW = (0.9, 0.1)
DEFAULT_CORNERS = (
    Corner("TT"),
    Corner("FF", *_FAST, *_FAST),
    Corner("SS", *_SLOW, *_SLOW),
    Corner("FS", *_FAST, *_SLOW),
    Corner("SF", *_SLOW, *_FAST),
)


def corners(topology: TopologyId | str, bench: TestbenchSpec | None = None,
            corner_set: Sequence[Corner] = DEFAULT_CORNERS, options: SolverOptions | None = None,
            *, sizing=None) -> dict[str, ComparatorMetrics | Exception]:
    """Full characterization per corner; failures are returned in place of metrics."""
    if not corner_set:
        return {}
    core = generate_topology(topology, sizing)
    cores = []
    for c in corner_set:
        cores.append(replace(core, devices=list(core.devices),
                             models={k: c.apply(v) for k, v in core.models.items()}))
    results = characterize_netlists(cores, bench, options)
    return {c.name: r for c, r in zip(corner_set, results)}


class UnknownParameter(ValueError):
    pass


def _parse_path(path: str) -> tuple[str, str, str]:
    parts = path.split(".")
    if len(parts) == 2 and parts[0].lower() == "bench":
        if parts[1] not in TestbenchSpec.__dataclass_fields__:
            raise UnknownParameter(f"unknown bench field {parts[1]!r}")
        return "bench", "", parts[1]
    if len(parts) == 3 and parts[0].lower() == "model":
        field_name = {"lambda": "lambda_"}.get(parts[2].lower(), parts[2].lower())
        if field_name not in ModelCard.__dataclass_fields__ or field_name == "polarity":
            raise UnknownParameter(f"unknown model field {parts[2]!r}")
        return "model", parts[1], field_name
    if len(parts) == 2 and parts[1].upper() in ("W", "L"):
        return "device", parts[0].upper(), parts[1].upper()
    raise UnknownParameter(f"cannot interpret parameter path {path!r}; use Mx.W, Mx.L, "
                           "model.<name>.<field> or bench.<field>")


def sweep(topology: TopologyId | str, bench: TestbenchSpec | None, path: str, values: Sequence,
          options: SolverOptions | None = None, *, metric: str | None = None) -> list[tuple]:
    """Characterize once per value of ``path``, in input order.

    Returns ``(value, result)`` pairs where ``result`` is a
    :class:`ComparatorMetrics` (or just ``metric`` when given), or the
    exception that stopped that point.
    """
    kind, owner, name = _parse_path(path)
    values = [parse_value(v) if isinstance(v, str) else float(v) for v in values]
    if not values:
        return []
    bench = bench or TestbenchSpec()
    base = generate_topology(topology)

    def run(cores, b):
        if metric is None:
            return characterize_netlists(cores, b, options)
        return evaluate_metric(cores, metric, b, options)

    if kind == "bench":
        out = []
        for v in values:
            cast = int(v) if isinstance(getattr(bench, name), int) else v
            out.append((v, run([base], replace(bench, **{name: cast}))[0]))
        return out
    cores = []
    for v in values:
        if kind == "device":
            try:
                base.device(owner)
            except KeyError:
                raise UnknownParameter(f"no device named {owner!r}") from None
            cores.append(generate_topology(topology, {owner: {name: v}}))
        else:
            if owner not in base.models:
                raise UnknownParameter(f"no model named {owner!r}")
            models = dict(base.models)
            models[owner] = replace(models[owner], **{name: v})
            cores.append(replace(base, devices=list(base.devices), models=models))
    return list(zip(values, run(cores, bench)))
