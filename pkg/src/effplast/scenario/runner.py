"""Time stepping of configured scenarios and result persistence.

Every run starts from the virgin state, steps to the protocol value at
``t = 0`` and then through the time grid.  It produces a table with one
row per time (including ``t = 0``) and a summary with the energy bookkeeping

    residual = external work - (psi_final - psi_initial) - dissipation

where the external work is integrated with the trapezoidal rule over the
driven quantities and their conjugate forces.  Reduced-model runs also
record the admissibility of every accepted step.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .. import sphere as sph
from .. import tensor as tn
from ..errors import ConfigError, EffplastError
from ..oracles.rve import PeriodicGrid, RveFEM
from ..oracles.sphere import SphereFEM
from ..oracles.torsion import TorsionPointwise
from ..rve import geometry as rg
from ..rve import model as rm
from ..torsion import TorsionModel
from .protocol import combined_time_grid

FLOAT_FORMAT = "%.17g"
ONSET_TOL = 1e-9
ONSET_PROBE = 1e-6
ONSET_GRID = 32


@dataclass
class Admissibility:
    """Running record of the per-step admissibility checks."""

    max_yield_violation: float = -np.inf
    max_trace: float = 0.0
    q_monotone: bool = True
    dissipation_nonnegative: bool = True

    def update(self, violation, trace=0.0, q_old=None, q_new=None, dissipation=0.0):
        self.max_yield_violation = max(self.max_yield_violation, float(np.max(violation)))
        self.max_trace = max(self.max_trace, float(np.max(np.abs(trace))))
        if q_old is not None and np.any(np.asarray(q_new) < np.asarray(q_old)):
            self.q_monotone = False
        if dissipation < 0:
            self.dissipation_nonnegative = False

    def ok(self, tol):
        return (
            self.max_yield_violation <= tol
            and self.max_trace <= 1e-12
            and self.q_monotone
            and self.dissipation_nonnegative
        )

    def to_dict(self, tol):
        return {
            "max_relative_yield_violation": self.max_yield_violation,
            "max_abs_plastic_trace": self.max_trace,
            "q_non_decreasing": self.q_monotone,
            "dissipation_non_negative": self.dissipation_nonnegative,
            "tolerance": tol,
            "ok": self.ok(tol),
        }


@dataclass
class Bookkeeping:
    """Trapezoidal external work, stored energy and cumulative dissipation."""

    psi0: float = 0.0
    psi: float = 0.0
    work: float = 0.0
    dissipation: float = 0.0
    _forces: np.ndarray = None
    _loads: np.ndarray = None

    def start(self, psi, loads, forces):
        self.psi0 = self.psi = float(psi)
        self._loads = np.atleast_1d(np.asarray(loads, dtype=float))
        self._forces = np.atleast_1d(np.asarray(forces, dtype=float))

    def advance(self, psi, loads, forces, dissipation):
        loads = np.atleast_1d(np.asarray(loads, dtype=float))
        forces = np.atleast_1d(np.asarray(forces, dtype=float))
        self.work += float(0.5 * (self._forces + forces) @ (loads - self._loads))
        self.dissipation += float(dissipation)
        self.psi = float(psi)
        self._loads, self._forces = loads, forces

    @property
    def residual(self):
        return self.work - (self.psi - self.psi0) - self.dissipation

    def to_dict(self):
        bound = 1e-6 * (abs(self.work) + 1.0)
        return {
            "stored_energy_initial": self.psi0,
            "stored_energy_final": self.psi,
            "external_work": self.work,
            "cumulative_dissipation": self.dissipation,
            "residual": self.residual,
            "bound": bound,
            "ok": abs(self.residual) <= bound,
        }


@dataclass
class ScenarioResult:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)

    @property
    def data(self):
        return np.array(self.rows, dtype=float)

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def write(self, out_dir, name="run"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{name}.csv"
        write_csv(csv_path, self.columns, self.rows)
        json_path = out / f"{name}_summary.json"
        json_path.write_text(json.dumps(self.summary, indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(FLOAT_FORMAT % float(v) for v in row) + "\n")


def read_csv(path):
    """Return ``(columns, data)`` of a result file."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    return columns, data.reshape(-1, len(columns))


def _radii(geometry, inner_key, outer_key, origin=None):
    if "radii" in geometry:
        return np.asarray(geometry["radii"], dtype=float)
    n = int(geometry.get("n_subdomains", 5))
    lo = origin if origin is not None else float(geometry[inner_key])
    return np.linspace(lo, float(geometry[outer_key]), n + 1)


class _TorsionReduced:
    def __init__(self, model, proto):
        self.model, self.proto = model, proto
        self.scale = model.tau_y

    def load(self, t):
        return np.array([float(self.proto(t))])

    def zero(self):
        return self.model.zero_state()

    def step(self, state, load):
        return self.model.step(state, float(load[0]))

    def trial_violation(self, state, load):
        return self.model.yield_violation(float(load[0]), state) / self.scale

    def energy(self, state, load):
        return self.model.macro_energy(float(load[0]), state)

    def forces(self, state, load):
        return np.array([self.model.torque(float(load[0]), state)])

    def dissipation(self, old, new):
        return self.model.dissipation(new.p - old.p)

    def check(self, adm, old, new, load, d):
        adm.update(self.trial_violation(new, load), 0.0, old.q, new.q, d)

    def row(self, t, load, state):
        return [t, load[0], self.forces(state, load)[0]] + list(state.p) + list(state.q)


def _run_torsion(cfg, times):
    mat = cfg.material(cfg.geometry["material"])
    proto = cfg.protocol["twist"]
    radii = _radii(cfg.geometry, None, "radius", origin=0.0)
    if not cfg.is_oracle:
        model = TorsionModel(radii, mat.shear_modulus, mat.yield_stress, mat.hardening)
        n = model.n
        columns = ["t", "twist", "torque"] + [f"p_{i}" for i in range(1, n + 1)] + [f"q_{i}" for i in range(1, n + 1)]
        return (columns,) + _march(_TorsionReduced(model, proto), times, cfg)
    solver = TorsionPointwise(
        float(radii[-1]), mat.shear_modulus, mat.yield_stress, mat.hardening,
        int(cfg.geometry.get("n_points", 1024)), int(cfg.geometry.get("panels", 1)),
    )
    book = Bookkeeping()
    rows = []
    book.start(0.0, 0.0, 0.0)
    for t in times:
        tw = float(proto(t))
        d = solver.advance(tw)
        book.advance(solver.energy(), tw, solver.torque(), d)
        rows.append([t, tw, solver.torque()])
    return ["t", "twist", "torque"], rows, book, None


class _SphereReduced:
    def __init__(self, form, protocols):
        self.form = form
        self.retained = [s for s in ("u_in", "u_out") if form.retains(s)]
        self.protocols = [protocols.get(s) for s in self.retained]
        self.thresholds = form.model.thresholds

    def load(self, t):
        return np.array([float(p(t)) if p is not None else 0.0 for p in self.protocols])

    def _kw(self, load):
        return {s: float(v) for s, v in zip(self.retained, load)}

    def zero(self):
        return sph.SphereState.zero(self.form.model.n)

    def step(self, state, load):
        return sph.step(self.form, state, tol=self.tol, sweep_limit=self.sweep_limit, **self._kw(load))

    def _at(self, state, load):
        kw = {"u_in": state.u_in, "u_out": state.u_out}
        kw.update(self._kw(load))
        return sph.SphereState(state.p, kw["u_in"], kw["u_out"])

    def trial_violation(self, state, load):
        return sph.yield_violation(self.form, self._at(state, load)) / self.thresholds

    def energy(self, state, load):
        return self.form.energy(state)

    def forces(self, state, load):
        grad = self.form.form.gradient(self.form.vector(state))
        return np.array([grad[self.form.form.index(s)] for s in self.retained])

    def dissipation(self, old, new):
        return sph.dissipation(self.form, new.p - old.p)

    def check(self, adm, old, new, load, d):
        adm.update(sph.yield_violation(self.form, new) / self.thresholds, 0.0, None, None, d)

    def row(self, t, load, state):
        sig = sph.inner_traction(self.form, state) if self.form.retains("u_in") else 0.0
        return [t, state.u_out, sig] + list(state.p)


def _run_sphere(cfg, times):
    g = cfg.geometry
    mat = cfg.material(g["material"])
    radii = _radii(g, "r_in", "r_out")
    free_in = g.get("inner", "displacement") == "free"
    free_out = g.get("outer", "displacement") == "free"
    for side, free in (("u_in", free_in), ("u_out", free_out)):
        if free and side in cfg.protocol:
            raise ConfigError(f"{side} is prescribed but that boundary is free")
    model = sph.SphereModel(
        radii, mat.bulk_modulus, mat.shear_modulus, mat.yield_stress,
        g.get("dissipation", "nominal"), float(g.get("solid_angle", sph.FOUR_PI)),
    )
    n = model.n
    columns = ["t", "u_out", "sigma_rr_in"] + [f"p_{i}" for i in range(1, n + 1)]
    if not cfg.is_oracle:
        form = sph.assemble(model, free_outer=free_out, free_inner=free_in)
        return (columns,) + _march(_SphereReduced(form, cfg.protocol), times, cfg)
    zero = lambda t: 0.0
    p_in = cfg.protocol.get("u_in", zero)
    p_out = cfg.protocol.get("u_out", zero)
    fem = SphereFEM.for_partition(
        radii, int(g.get("elements_per_subdomain", 40)), model.bulk, model.shear, model.pointwise_yield,
        order=int(g.get("order", 3)), solid_angle=model.solid_angle,
    )
    book = Bookkeeping()
    rows = []
    book.start(0.0, [0.0, 0.0], [0.0, 0.0])
    for k, t in enumerate(times):
        a = None if free_in else float(p_in(t))
        b = None if free_out else float(p_out(t))
        p_prev = fem.p.copy()
        try:
            fem.solve(a, b)
        except EffplastError as exc:
            raise _at_step(exc, k, t)
        R = fem.reactions()
        d = float(np.sum(fem.w * fem.yield_force * np.abs(fem.p - p_prev)))
        book.advance(fem.energy(), [fem.u[0], fem.u[-1]], [R[0], R[-1]], d)
        sig = 0.0 if free_in else fem.inner_radial_stress()
        rows.append([t, fem.u[-1], sig] + list(fem.subdomain_means(radii)))
    return columns, rows, book, None


def resolve_geometry(spec):
    """Build an :class:`RveGeometry` from the ``geometry`` block of a config."""
    if "name" in spec:
        try:
            return rg.CONSTRUCTORS[spec["name"]]()
        except KeyError:
            raise ConfigError(f"unknown rve geometry {spec['name']!r}; expected one of {sorted(rg.CONSTRUCTORS)}") from None
    if "file" in spec:
        path = Path(spec["file"])
        if not path.is_absolute() and "_base" in spec:
            path = Path(spec["_base"]) / path
        return rg.RveGeometry.load(path)
    return rg.RveGeometry.from_dict(spec["inline"])


def _rve_materials(cfg, geom):
    ids = list(cfg.geometry["materials"])
    needed = sorted(set(geom.materials))
    if len(ids) <= needed[-1]:
        raise ConfigError(f"geometry uses material ids up to {needed[-1]} but only {len(ids)} are assigned")
    return {k: cfg.material(ids[k]) for k in range(len(ids))}


class _RveReduced:
    def __init__(self, form, e_M, row):
        self.form, self.load, self._row = form, e_M, row

    def zero(self):
        return rm.RveState.zero(self.form.n)

    def step(self, state, load):
        return rm.step(self.form, load, state, tol=self.tol, sweep_limit=self.sweep_limit)

    def trial_violation(self, state, load):
        trial = rm.RveState(state.e_p, state.q, np.asarray(load, dtype=float))
        return rm.yield_violation(self.form, trial) / self.form.sigma_y

    def energy(self, state, load):
        return self.form.energy(load, state.e_p, state.q)

    def forces(self, state, load):
        return self.form.macro_stress(load, state.e_p)

    def dissipation(self, old, new):
        return rm.dissipation(self.form, old, new)

    def check(self, adm, old, new, load, d):
        adm.update(self.trial_violation(new, load), tn.trace(new.e_p), old.q, new.q, d)

    def row(self, t, load, state):
        f = self.form
        return self._row(
            t, load, f.macro_stress(load, state.e_p), f.energy(load, state.e_p, state.q),
            state.e_p, state.q, f.energy(load, state.e_p),
        )


def _run_rve(cfg, times):
    geom = resolve_geometry(cfg.geometry)
    mats = _rve_materials(cfg, geom)
    comps = cfg.protocol["components"]

    def e_M(t):
        return tn.from_components(**{"t" + k: float(p(t)) for k, p in comps.items()})

    n = geom.n_subdomains
    columns = (
        ["t"]
        + [f"e{c}" for c in tn.NAMES]
        + [f"s{c}" for c in tn.NAMES]
        + ["energy", "voigt_energy", "reuss_energy", "elastic_energy"]
        + [f"ep{i}_{c}" for i in range(1, n + 1) for c in tn.NAMES]
    )
    rom = rm.assemble_quadratic(geom, mats)
    reuss = rm.reuss_assemble(geom, mats)
    voigt = rm.voigt_assemble(geom, mats)

    def row(t, e, sig, psi, ep, q, elastic):
        return (
            [t] + list(tn.components(e)) + list(tn.components(sig))
            + [psi, voigt.energy(e, ep, q), reuss.energy(e, ep, q), elastic]
            + list(np.ravel(tn.components(ep)))
        )

    if not cfg.is_oracle:
        form = {"rve": rom, "rve-reuss": reuss, "rve-voigt": voigt}[cfg.model]
        return (columns,) + _march(_RveReduced(form, e_M, row), times, cfg)
    fem = RveFEM(PeriodicGrid.from_geometry(geom, int(cfg.geometry.get("per_unit", 32))), mats, geom.materials)
    book = Bookkeeping()
    rows = []
    book.start(0.0, np.zeros(6), np.zeros(6))
    for k, t in enumerate(times):
        e = e_M(t)
        prev = fem.eps_p.copy()
        try:
            fem.solve(e)
        except EffplastError as exc:
            raise _at_step(exc, k, t)
        d = float(np.mean(tn.TWO_THIRDS_SQRT * fem.sigma_y * tn.norm(fem.eps_p - prev)))
        sig = fem.macro_stress()
        book.advance(fem.energy(), e, sig, d)
        rows.append(row(t, e, sig, fem.energy(), fem.subdomain_plastic_strain(), None, fem.elastic_energy()))
    return columns, rows, book, None


def _onset(model, state, a, b):
    """Smallest load fraction in ``(0, 1)`` at which an elastic subdomain reaches yield.

    Internal variables are frozen at ``state``, so the fraction is exact
    while no other subdomain flows.  Each trial violation is convex in the
    fraction (norm of an affine trial stress minus a constant), so a
    subdomain that starts on its yield surface and unloads elastically
    re-enters it at most once, after its minimum.  Returns ``None`` if no
    subdomain passes from inside to outside its yield surface.
    """
    viol = lambda s: model.trial_violation(state, a + s * (b - a))
    v0, v1 = viol(0.0), viol(1.0)
    rising = v1 > ONSET_TOL
    inside = rising & (v0 < -ONSET_TOL)
    # on the surface at the start: only a subdomain whose violation first drops can re-enter
    unloading = rising & ~inside & (viol(ONSET_PROBE) < v0)
    roots = [brentq(lambda x, i=i: viol(x)[i], 0.0, 1.0, xtol=1e-15) for i in np.flatnonzero(inside)]
    if unloading.any():
        grid = np.linspace(0.0, 1.0, ONSET_GRID + 1)
        values = np.array([viol(x) for x in grid])
        for i in np.flatnonzero(unloading):
            f = lambda x, i=i: viol(x)[i]
            j = int(np.argmin(values[:, i]))
            lo, f_lo = grid[j], values[j, i]
            if f_lo >= -ONSET_TOL:
                bracket = (grid[max(j - 1, 0)], grid[min(j + 1, ONSET_GRID)])
                res = minimize_scalar(f, bounds=bracket, method="bounded", options={"xatol": 1e-12})
                lo, f_lo = res.x, res.fun
            if f_lo < -ONSET_TOL:
                roots.append(brentq(f, lo, 1.0, xtol=1e-15))
    if not roots:
        return None
    s = min(roots)
    return s if ONSET_TOL < s < 1.0 - ONSET_TOL else None


def _march(model, times, cfg):
    """Step a reduced model through ``times``; returns ``(rows, book, adm)``.

    With ``split_onset`` every step is cut where an elastic subdomain first
    reaches its yield surface along the linear load path, and each piece is
    a separate backward-Euler update.  Bookkeeping and admissibility cover
    every piece.
    """
    model.tol, model.sweep_limit = cfg.yield_tol, cfg.sweep_limit
    state = model.zero()
    load = model.load(0.0) * 0.0
    book, adm = Bookkeeping(), Admissibility()
    book.start(model.energy(state, load), load, model.forces(state, load))
    rows = []
    max_pieces = 4 * (len(model.trial_violation(state, load)) + 1)
    for k, t in enumerate(times):
        target = model.load(t)
        try:
            for _ in range(max_pieces):
                s = _onset(model, state, load, target) if cfg.split_onset else None
                piece = target if s is None else load + s * (target - load)
                new = model.step(state, piece)
                d = model.dissipation(state, new)
                book.advance(model.energy(new, piece), piece, model.forces(new, piece), d)
                model.check(adm, state, new, piece, d)
                state, load = new, piece
                if s is None:
                    break
            else:
                new = model.step(state, target)
                d = model.dissipation(state, new)
                book.advance(model.energy(new, target), target, model.forces(new, target), d)
                model.check(adm, state, new, target, d)
                state, load = new, target
        except EffplastError as exc:
            raise _at_step(exc, k, t)
        rows.append(model.row(t, load, state))
    return rows, book, adm


def _at_step(exc, k, t):
    exc.step = k
    exc.args = (f"step {k} (t={t:.6g}): {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
    return exc


DRIVERS = {"torsion": _run_torsion, "sphere": _run_sphere, "rve": _run_rve}


def run_scenario(cfg, out_dir=None, name=None):
    """Run a parsed :class:`ScenarioConfig`; optionally write CSV and summary files."""
    times = np.concatenate([[0.0], combined_time_grid(cfg.protocols().values())])
    columns, rows, book, adm = DRIVERS[cfg.family](cfg, times)
    summary = {
        "model": cfg.model,
        "n_steps": len(times) - 1,
        "columns": columns,
        "final": dict(zip(columns, rows[-1])),
        "energy": book.to_dict(),
    }
    if adm is not None:
        summary["admissibility"] = adm.to_dict(cfg.yield_tol)
    result = ScenarioResult(columns, rows, summary)
    out_dir = out_dir if out_dir is not None else cfg.output.get("dir")
    if out_dir is not None:
        result.write(out_dir, name or cfg.output.get("name", "run"))
    return result
