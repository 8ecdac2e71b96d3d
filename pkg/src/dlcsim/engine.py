"""Modified nodal analysis with Newton iteration: DC operating point and transient.

The solver works on a *batch* of netlists that share one structure (same
devices, nodes and source breakpoints) but may differ in every numeric value.
Each batch member is solved independently; the batch only shares the time
grid, so a member's waveform is bit-identical whether it is simulated alone
or alongside others. Monte-Carlo and corner runs rely on this.

Unknown vector layout: node voltages (ground excluded), then one branch
current per voltage source. Source currents follow the SPICE sign: positive
when flowing into the ``+`` terminal, so a supply delivering power reports a
negative current.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .devmodel import effective_lambda, meyer_caps, mosfet_terminal_eval
from .netlist import GROUND, Capacitor, Dc, Mosfet, Netlist, Pulse, Pwl, Resistor, Tran, VSource

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    def __init__(self, message: str, time: float | None = None, node: str | None = None):
        self.time = time
        self.node = node
        detail = []
        if time is not None:
            detail.append(f"t={time:.6g}s")
        if node is not None:
            detail.append(f"worst node {node!r}")
        super().__init__(message + (f" ({', '.join(detail)})" if detail else ""))


class StepUnderflow(NonConvergence):
    pass


@dataclass(frozen=True)
class SolverOptions:
    reltol: float = 1e-3
    vabstol: float = 1e-6
    iabstol: float = 1e-12
    max_newton_iters: int = 100
    gmin: float = 1e-12
    integration: str = "trap"
    dt_max: float | None = None
    # Breakpoint-aware grid: after every waveform corner the step restarts at
    # ``edge_step``, holds for ``edge_window`` seconds, then grows by
    # ``step_growth`` per step up to ``dt_max``. ``edge_step=None`` is a
    # uniform grid of ``dt_max``.
    edge_step: float | None = None
    edge_window: float = 0.0
    step_growth: float = 1.0
    vstep_limit: float = 0.5
    # nodes / voltage sources to record; None records everything
    save: tuple[str, ...] | None = None
    save_sources: tuple[str, ...] | None = None

    def __post_init__(self):
        if min(self.reltol, self.vabstol, self.iabstol, self.gmin, self.vstep_limit) <= 0:
            raise ValueError("tolerances, gmin and vstep_limit must be > 0")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be >= 1")
        if self.integration not in ("trap", "be"):
            raise ValueError("integration must be 'trap' or 'be'")
        if self.dt_max is not None and self.dt_max <= 0:
            raise ValueError("dt_max must be > 0")
        if self.edge_step is not None and self.edge_step <= 0:
            raise ValueError("edge_step must be > 0")
        if self.step_growth < 1.0:
            raise ValueError("step_growth must be >= 1")


@dataclass
class TransientResult:
    times: np.ndarray
    node_voltages: np.ndarray
    source_currents: np.ndarray
    node_index: dict[str, int]
    source_index: dict[str, int] = field(default_factory=dict)

    def v(self, node: str) -> np.ndarray:
        return self.node_voltages[:, self.node_index[node]]

    def i(self, source: str) -> np.ndarray:
        return self.source_currents[:, self.source_index[source.upper()]]

    def to_csv(self, fh=None) -> str | None:
        """Write ``time_s, V(node)..., I(Vname)...`` with 17 significant digits."""
        nodes = [n for n in self.node_index if n != GROUND]
        sources = list(self.source_index)
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s"] + [f"V({n})" for n in nodes] + [f"I({s})" for s in sources])
        vcols = [self.node_index[n] for n in nodes]
        icols = [self.source_index[s] for s in sources]
        for k, t in enumerate(self.times):
            row = [t, *self.node_voltages[k, vcols], *self.source_currents[k, icols]]
            w.writerow([format(float(x), ".17g") for x in row])
        return buf.getvalue() if fh is None else None


# -- compilation ------------------------------------------------------------

def _structure_key(net: Netlist) -> tuple:
    key = []
    for d in net.devices:
        key.append((type(d).__name__, d.name.upper(), d.nodes, type(getattr(d, "waveform", None)).__name__))
    return tuple(key)


class _SourceBank:
    """Evaluates every voltage source of every batch member at a time point."""

    def __init__(self, waveforms: list[list]):
        # waveforms[k][b]: waveform of source k for batch member b
        self.plans = []
        for wfs in waveforms:
            first = wfs[0]
            # PWL sources always take the vectorized path so a member's
            # stimulus is evaluated identically whatever batch it sits in
            if all(isinstance(w, Pwl) and w.times == first.times for w in wfs):
                times = np.array(first.times)
                vals = np.array([[v for _, v in w.points] for w in wfs])
                self.plans.append(("pwl", (times, vals)))
            elif all(w == first for w in wfs):
                self.plans.append(("same", first))
            elif all(isinstance(w, Dc) for w in wfs):
                self.plans.append(("dc", np.array([w.volts for w in wfs])))
            else:
                self.plans.append(("each", wfs))
        self.batch = len(waveforms[0]) if waveforms else 0

    def values(self, t: float, batch: int) -> np.ndarray:
        out = np.empty((batch, len(self.plans)))
        for k, (kind, data) in enumerate(self.plans):
            if kind == "same":
                out[:, k] = data.value(t)
            elif kind == "dc":
                out[:, k] = data
            elif kind == "pwl":
                times, vals = data
                if t <= times[0]:
                    out[:, k] = vals[:, 0]
                elif t >= times[-1]:
                    out[:, k] = vals[:, -1]
                else:
                    j = int(np.searchsorted(times, t, side="right")) - 1
                    w = (t - times[j]) / (times[j + 1] - times[j])
                    out[:, k] = vals[:, j] + (vals[:, j + 1] - vals[:, j]) * w
            else:
                out[:, k] = [wf.value(t) for wf in data]
        return out

    def breakpoints(self, waveforms: list[list], tstop: float) -> list[float]:
        bps: set[float] = set()
        for wfs in waveforms:
            seen = []
            for wf in wfs:
                if any(wf == s for s in seen):
                    continue
                seen.append(wf)
                bps.update(wf.breakpoints(tstop))
        return sorted(bps)


class _Circuit:
    def __init__(self, netlists: Sequence[Netlist], gmin: float):
        if not netlists:
            raise ValueError("need at least one netlist")
        ref = netlists[0]
        key = _structure_key(ref)
        for net in netlists[1:]:
            if _structure_key(net) != key:
                raise ValueError("batched netlists must share device names, kinds and connectivity")
        for net in netlists:
            net.validate()
        self.B = B = len(netlists)
        self.nodes = [n for n in ref.nodes if n != GROUND]
        self.N = N = len(self.nodes)
        self.sources = [d.name.upper() for d in ref.of_kind(VSource)]
        self.m = m = len(self.sources)
        self.n = n = N + m
        self.gnd = n
        idx = {name: i for i, name in enumerate(self.nodes)}
        idx[GROUND] = n
        self.node_idx = idx

        # linear conductance matrix, shared when every member agrees
        glin = np.zeros((B, n + 1, n + 1))
        for b, net in enumerate(netlists):
            for r in net.of_kind(Resistor):
                i, j, g = idx[r.n1], idx[r.n2], 1.0 / r.ohms
                glin[b, i, i] += g
                glin[b, j, j] += g
                glin[b, i, j] -= g
                glin[b, j, i] -= g
            for k, s in enumerate(net.of_kind(VSource)):
                i, j, row = idx[s.npos], idx[s.nneg], N + k
                glin[b, i, row] += 1.0
                glin[b, j, row] -= 1.0
                glin[b, row, i] += 1.0
                glin[b, row, j] -= 1.0
        glin = glin[:, :n, :n]
        glin[:, np.arange(N), np.arange(N)] += gmin
        self.glin = glin[:1].copy() if np.all(glin == glin[:1]) else glin

        self.waveforms = [[net.of_kind(VSource)[k].waveform for net in netlists] for k in range(m)]
        self.src = _SourceBank(self.waveforms)

        mos = ref.of_kind(Mosfet)
        self.ndev = len(mos)
        self.dev_names = [d.name for d in mos]
        self.md = np.array([idx[d.drain] for d in mos], dtype=np.intp)
        self.mg = np.array([idx[d.gate] for d in mos], dtype=np.intp)
        self.ms = np.array([idx[d.source] for d in mos], dtype=np.intp)
        # Newton step limiting applies to nodes at MOSFET terminals only;
        # nodes touched only by linear elements take the full step
        touches = np.zeros(n + 1, dtype=bool)
        touches[np.concatenate([self.md, self.mg, self.ms])] = True
        self.limit_nodes = np.flatnonzero(touches[:N])
        shape = (B, self.ndev)
        self.pol = np.empty(shape)
        self.vt0 = np.empty(shape)
        self.beta = np.empty(shape)
        self.lam = np.empty(shape)
        self.cox_wl = np.empty(shape)
        self.cgso_w = np.empty(shape)
        self.cgdo_w = np.empty(shape)
        for b, net in enumerate(netlists):
            for k, d in enumerate(net.of_kind(Mosfet)):
                mc = net.models[d.model]
                self.pol[b, k] = 1.0 if mc.polarity == "nmos" else -1.0
                self.vt0[b, k] = mc.vt0
                self.beta[b, k] = mc.kp * d.width_m / d.length_m
                self.lam[b, k] = effective_lambda(mc, d.length_m)
                self.cox_wl[b, k] = mc.cox * d.width_m * d.length_m
                self.cgso_w[b, k] = mc.cgso * d.width_m
                self.cgdo_w[b, k] = mc.cgdo * d.width_m

        caps = ref.of_kind(Capacitor)
        self.nlin_cap = len(caps)
        self.cap_lin = np.array([[c.farads for c in net.of_kind(Capacitor)] for net in netlists]).reshape(B, -1)
        # capacitor elements: linear ones, then (gate, source) and (gate, drain) per MOSFET
        ca = [idx[c.n1] for c in caps] + list(self.mg) + list(self.mg)
        cb = [idx[c.n2] for c in caps] + list(self.ms) + list(self.md)
        self.ca = np.array(ca, dtype=np.intp)
        self.cb = np.array(cb, dtype=np.intp)

        size = n + 1
        self.size = size
        d, g, s = self.md, self.mg, self.ms
        self.pos_f_mos = np.concatenate([d, s])
        self.pos_j_mos = np.concatenate([d * size + d, d * size + g, d * size + s,
                                         s * size + d, s * size + g, s * size + s])
        a, c = self.ca, self.cb
        self.pos_f_cap = np.concatenate([a, c])
        self.pos_j_cap = np.concatenate([a * size + a, c * size + c, a * size + c, c * size + a])

    # -- device evaluation

    def _mos(self, sel, xe):
        vd, vg, vs = xe[:, self.md], xe[:, self.mg], xe[:, self.ms]
        return mosfet_terminal_eval(vd, vg, vs, self.pol[sel], self.vt0[sel], self.beta[sel], self.lam[sel])

    def mos_caps(self, sel, x) -> np.ndarray:
        xe = _extend(x)
        _, _, _, _, region, rev = self._mos(sel, xe)
        cgs, cgd = meyer_caps(region, self.cox_wl[sel], self.cgso_w[sel], self.cgdo_w[sel])
        c_gs_phys = np.where(rev, cgd, cgs)
        c_gd_phys = np.where(rev, cgs, cgd)
        return np.concatenate([self.cap_lin[sel], c_gs_phys, c_gd_phys], axis=1)

    def assemble(self, sel, x, bsrc, geq=None, jhist=None, shunt=None, clamp=None):
        """Residual F(x) and Jacobian for members ``sel`` at state ``x``."""
        Ba = x.shape[0]
        size, n = self.size, self.n
        xe = _extend(x)
        i_d, dvd, dvg, dvs, _, _ = self._mos(sel, xe)

        f_pos = [self.pos_f_mos]
        f_val = [i_d, -i_d]
        j_pos = [self.pos_j_mos]
        j_val = [dvd, dvg, dvs, -dvd, -dvg, -dvs]
        if geq is not None:
            vc = xe[:, self.ca] - xe[:, self.cb]
            ic = geq * vc - jhist
            f_pos.append(self.pos_f_cap)
            f_val += [ic, -ic]
            j_pos.append(self.pos_j_cap)
            j_val += [geq, geq, -geq, -geq]

        off = np.arange(Ba)[:, None]
        fp = (off * size + np.concatenate(f_pos)[None, :]).ravel()
        F = np.bincount(fp, np.concatenate(f_val, axis=1).ravel(), minlength=Ba * size).reshape(Ba, size)[:, :n]
        jp = (off * (size * size) + np.concatenate(j_pos)[None, :]).ravel()
        J = np.bincount(jp, np.concatenate(j_val, axis=1).ravel(), minlength=Ba * size * size)
        J = J.reshape(Ba, size, size)[:, :n, :n]

        glin = self.glin if self.glin.shape[0] == 1 else self.glin[sel]
        F = F + (glin * x[:, None, :]).sum(axis=2)
        F[:, self.N:] -= bsrc
        J = J + glin
        diag = np.arange(self.N)
        if shunt:
            F[:, :self.N] += shunt * x[:, :self.N]
            J[:, diag, diag] += shunt
        if clamp is not None:
            gc, target = clamp
            F[:, :self.N] += gc * (x[:, :self.N] - target)
            J[:, diag, diag] += gc
        return F, J


def _extend(x):
    return np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1)


# -- Newton -----------------------------------------------------------------

def _newton(ckt: _Circuit, opts: SolverOptions, sel, x0, bsrc, *, geq=None, jhist=None,
            shunt=None, clamp=None, check_residual=False):
    """Newton iteration per member; returns (x, converged mask, worst-node index)."""
    x = x0.copy()
    N = ckt.N
    conv = np.zeros(len(sel), dtype=bool)
    worst = np.zeros(len(sel), dtype=np.intp)
    active = np.arange(len(sel))
    for _ in range(opts.max_newton_iters):
        a_sel = sel[active]
        xa = x[active]
        F, J = ckt.assemble(a_sel, xa,
                            bsrc[active],
                            None if geq is None else geq[active],
                            None if jhist is None else jhist[active],
                            shunt,
                            None if clamp is None else (clamp[0], clamp[1][active]))
        try:
            dx = np.linalg.solve(J, -F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            dx = np.stack([_lstsq(Jk, -Fk) for Jk, Fk in zip(J, F)])
        lim = ckt.limit_nodes
        dv = dx[:, lim]
        limited = np.abs(dv) > opts.vstep_limit
        dx[:, lim] = np.clip(dv, -opts.vstep_limit, opts.vstep_limit)
        xn = xa + dx
        tol = opts.reltol * np.maximum(np.abs(xn[:, :N]), np.abs(xa[:, :N])) + opts.vabstol
        ok = np.all(np.abs(dx[:, :N]) <= tol, axis=1) & ~limited.any(axis=1)
        ok &= np.all(np.isfinite(xn), axis=1)
        if check_residual:
            ok &= np.all(np.abs(F[:, :N]) <= opts.iabstol, axis=1)
        worst[active] = np.argmax(np.abs(dx[:, :N]) - tol, axis=1) if N else 0
        x[active] = xn
        conv[active[ok]] = True
        active = active[~ok]
        if active.size == 0:
            break
    return x, conv, worst


def _lstsq(J, F):
    return np.linalg.lstsq(J, F, rcond=None)[0]


# -- DC ---------------------------------------------------------------------

def _dc(ckt: _Circuit, opts: SolverOptions, t: float = 0.0, clamp: Mapping[str, Sequence[float]] | None = None):
    """DC solve for all members; returns (x, failed mask, worst node per member)."""
    B, n, N = ckt.B, ckt.n, ckt.N
    sel = np.arange(B)
    bsrc = ckt.src.values(t, B)
    clamp_arg = None
    if clamp:
        gc = np.zeros(N)
        target = np.zeros((B, N))
        for node, vals in clamp.items():
            k = ckt.node_idx[node]
            gc[k] = 1e3
            target[:, k] = vals
        clamp_arg = (gc, target)

    x = np.zeros((B, n))
    x, conv, worst = _newton(ckt, opts, sel, x, bsrc, clamp=clamp_arg, check_residual=True)
    if conv.all():
        return x, ~conv, worst

    # gmin stepping on the failures, then source stepping
    bad = np.flatnonzero(~conv)
    xb = np.zeros((bad.size, n))
    cl = None if clamp_arg is None else (clamp_arg[0], clamp_arg[1][bad])
    for shunt in [10.0 ** -k for k in range(2, 13)]:
        xb, _, _ = _newton(ckt, opts, bad, xb, bsrc[bad], shunt=shunt, clamp=cl)
    xb, c, w = _newton(ckt, opts, bad, xb, bsrc[bad], clamp=cl, check_residual=True)
    if not c.all():
        still = ~c
        xs = np.zeros((still.sum(), n))
        sub = bad[still]
        for scale in np.linspace(0.05, 1.0, 20):
            cl = None if clamp_arg is None else (clamp_arg[0], clamp_arg[1][sub] * scale)
            xs, cs, ws = _newton(ckt, opts, sub, xs, bsrc[sub] * scale, clamp=cl, check_residual=scale == 1.0)
        xb[still] = xs
        c[still] = cs
        w[still] = ws
    x[bad] = xb
    conv[bad] = c
    worst[bad] = w
    return x, ~conv, worst


def dc_operating_point(netlist: Netlist, options: SolverOptions | None = None,
                       t: float = 0.0) -> dict[str, float]:
    """Node voltages with capacitors open and sources at their value at ``t``."""
    opts = options or SolverOptions()
    ckt = _Circuit([netlist], opts.gmin)
    x, failed, worst = _dc(ckt, opts, t)
    if failed[0]:
        raise NonConvergence("DC operating point did not converge after gmin and source stepping",
                             t, ckt.nodes[worst[0]] if ckt.N else None)
    out = {GROUND: 0.0}
    out.update({name: float(x[0, k]) for k, name in enumerate(ckt.nodes)})
    return out


# -- transient --------------------------------------------------------------

def time_grid(breakpoints: Iterable[float], tstop: float, dt_max: float, edge_step: float | None = None,
              edge_window: float = 0.0, growth: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic step sequence hitting every breakpoint exactly.

    Returns (times, restart) where ``restart[k]`` marks steps that begin at a
    breakpoint (integrated with backward Euler to damp trapezoidal ringing).
    """
    bps = sorted({0.0, float(tstop), *(b for b in breakpoints if 0.0 <= b <= tstop)})
    h0 = dt_max if edge_step is None else min(edge_step, dt_max)
    times = [0.0]
    restart = [False]
    for b0, b1 in zip(bps, bps[1:]):
        t, h, elapsed, first = b0, h0, 0.0, True
        while t < b1:
            remaining = b1 - t
            if remaining <= h * (1 + 1e-9):
                t = b1
            elif remaining < 2 * h:
                t = t + remaining / 2
            else:
                t = t + h
            times.append(t)
            restart.append(first)
            first = False
            elapsed += h
            if elapsed >= edge_window:
                h = min(h * growth, dt_max)
    return np.array(times), np.array(restart)


class _Failure(Exception):
    def __init__(self, members, h, worst):
        self.members = members
        self.h = h
        self.worst = worst


def transient_batch(netlists: Sequence[Netlist], options: SolverOptions | None = None, *,
                    tstop: float | None = None,
                    initial: Mapping[str, float | Sequence[float]] | None = None,
                    raise_errors: bool = True) -> list:
    """Transient analysis of structurally identical netlists on a shared grid.

    Returns one :class:`TransientResult` per netlist. With
    ``raise_errors=False`` failing members yield their exception object
    instead and the remaining members continue.

    ``initial`` holds node voltages imposed at t=0 (the DC solution is found
    with those nodes clamped); without it the run starts from the DC
    operating point at the t=0 source values.
    """
    opts = options or SolverOptions()
    ref = netlists[0]
    tran = ref.tran
    if tstop is None:
        if tran is None:
            raise ValueError("netlist has no .tran directive")
        tstop = tran.tstop_s
    dt_max = opts.dt_max or (tran.tstep_max_s if tran else tstop / 1000)

    ckt = _Circuit(netlists, opts.gmin)
    B, N = ckt.B, ckt.N
    bps = ckt.src.breakpoints(ckt.waveforms, tstop)
    times, restart = time_grid(bps, tstop, dt_max, opts.edge_step, opts.edge_window, opts.step_growth)

    clamp = None
    if initial:
        clamp = {k: np.broadcast_to(np.asarray(v, dtype=float), (B,)) for k, v in initial.items()}
    x, failed, worst = _dc(ckt, opts, 0.0, clamp)
    errors: list = [None] * B
    for b in np.flatnonzero(failed):
        errors[b] = NonConvergence("initial DC operating point failed", 0.0, ckt.nodes[worst[b]])

    save_nodes = list(opts.save) if opts.save is not None else list(ckt.nodes)
    save_cols = np.array([ckt.node_idx[s] for s in save_nodes if s != GROUND], dtype=np.intp)
    save_nodes = [s for s in save_nodes if s != GROUND]

    if opts.save_sources is not None:
        src_names = [name.upper() for name in opts.save_sources]
        missing = set(src_names) - set(ckt.sources)
        if missing:
            raise KeyError(f"unknown sources in save_sources: {sorted(missing)}")
    else:
        src_names = list(ckt.sources)
    src_cols = np.array([N + ckt.sources.index(name) for name in src_names], dtype=np.intp)

    C = ckt.mos_caps(np.arange(B), x)
    ihist = np.zeros_like(C)
    rec_v = np.empty((len(times), B, len(save_cols)))
    rec_i = np.empty((len(times), B, len(src_cols)))
    rec_v[0] = x[:, save_cols]
    rec_i[0] = x[:, src_cols]

    alive = np.flatnonzero(~failed)
    for k in range(1, len(times)):
        t0, t1 = times[k - 1], times[k]
        method = "be" if (restart[k] or opts.integration == "be") else "trap"
        if alive.size:
            xs, ihs, bad = _advance(ckt, opts, alive, x[alive], ihist[alive], C[alive], t0, t1 - t0, method, dt_max)
            for j, (name, t_fail, kind) in bad.items():
                b = alive[j]
                errors[b] = kind(f"transient step failed", t_fail, name)
            keep = np.array([j not in bad for j in range(alive.size)], dtype=bool)
            x[alive[keep]] = xs[keep]
            ihist[alive[keep]] = ihs[keep]
            alive = alive[keep]
            if alive.size:
                C[alive] = ckt.mos_caps(alive, x[alive])
        rec_v[k] = x[:, save_cols]
        rec_i[k] = x[:, src_cols]

    node_index = {GROUND: 0}
    node_index.update({name: i + 1 for i, name in enumerate(save_nodes)})
    source_index = {name: i for i, name in enumerate(src_names)}
    results: list = []
    for b in range(B):
        if errors[b] is not None:
            if raise_errors:
                raise errors[b]
            results.append(errors[b])
            continue
        nv = np.zeros((len(times), len(save_cols) + 1))
        nv[:, 1:] = rec_v[:, b, :]
        results.append(TransientResult(times.copy(), nv, np.ascontiguousarray(rec_i[:, b, :]),
                                       dict(node_index), dict(source_index)))
    return results


def _advance(ckt: _Circuit, opts: SolverOptions, sel, x, ihist, C, t0, h, method, dt_max):
    """One step of size h for members ``sel``; failing members are sub-stepped.

    Returns (x_new, ihist_new, failures) where failures maps local member
    index to (worst node name, time, exception class).
    """
    xn, ih, conv, worst = _step(ckt, opts, sel, x, ihist, C, t0, h, method)
    failures: dict[int, tuple] = {}
    if conv.all():
        return xn, ih, failures
    bad = np.flatnonzero(~conv)
    if method == "trap":
        xb, ihb, cb, wb = _step(ckt, opts, sel[bad], x[bad], ihist[bad], C[bad], t0, h, "be")
        xn[bad], ih[bad] = xb, ihb
        worst[bad] = wb
        bad = bad[~cb]
        if bad.size == 0:
            return xn, ih, failures
    half = h / 2
    if half < dt_max * 1e-6:
        for j in bad:
            failures[int(j)] = (ckt.nodes[worst[j]] if ckt.N else None, t0 + h, StepUnderflow)
        return xn, ih, failures
    sub = sel[bad]
    xm, ihm, f1 = _advance(ckt, opts, sub, x[bad], ihist[bad], C[bad], t0, half, "be", dt_max)
    Cm = ckt.mos_caps(sub, xm)
    xe, ihe, f2 = _advance(ckt, opts, sub, xm, ihm, Cm, t0 + half, half, "be", dt_max)
    xn[bad], ih[bad] = xe, ihe
    for j, info in {**f2, **f1}.items():
        failures[int(bad[j])] = info
    return xn, ih, failures


def _step(ckt: _Circuit, opts: SolverOptions, sel, x, ihist, C, t0, h, method):
    xe = _extend(x)
    vc = xe[:, ckt.ca] - xe[:, ckt.cb]
    if method == "trap":
        geq = 2.0 * C / h
        jhist = geq * vc + ihist
    else:
        geq = C / h
        jhist = geq * vc
    bsrc = ckt.src.values(t0 + h, ckt.B)[sel]
    xn, conv, worst = _newton(ckt, opts, sel, x, bsrc, geq=geq, jhist=jhist)
    xne = _extend(xn)
    ih = geq * (xne[:, ckt.ca] - xne[:, ckt.cb]) - jhist
    return xn, ih, conv, worst


def transient(netlist: Netlist, options: SolverOptions | None = None, *, tstop: float | None = None,
              initial: Mapping[str, float] | None = None) -> TransientResult:
    """Transient analysis of one netlist (see :func:`transient_batch`)."""
    return transient_batch([netlist], options, tstop=tstop, initial=initial)[0]


def supply_current_integral(result: TransientResult, vsource_name: str, t0: float, t1: float) -> float:
    """Charge in coulombs delivered by a source to the circuit over [t0, t1].

    This is the integral of ``-I(Vname)`` (trapezoidal rule, with the window
    ends linearly interpolated), i.e. positive for a supply sourcing current.
    """
    key = vsource_name.upper()
    if key not in result.source_index:
        raise KeyError(f"unknown source {vsource_name!r}")
    if t1 < t0:
        raise ValueError("inverted integration interval")
    times = result.times
    if t0 < times[0] - 1e-21 or t1 > times[-1] + 1e-21:
        raise ValueError("integration window outside the simulated span")
    cur = -result.source_currents[:, result.source_index[key]]
    inside = (times > t0) & (times < t1)
    tt = np.concatenate([[t0], times[inside], [t1]])
    ii = np.concatenate([[np.interp(t0, times, cur)], cur[inside], [np.interp(t1, times, cur)]])
    return float(np.trapezoid(ii, tt))
