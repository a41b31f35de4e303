"""Sweep configuration, execution over eps, convergence metrics and reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import spacetime as st
from . import spectral as sp
from . import suitability as su
from .errors import SchemaError
from .reference import simulate_ns, taylor_green
from .solver import Trajectory, global_energy_check, simulate

log = logging.getLogger(__name__)

INIT_TYPES = ("taylor-green", "abc", "random", "file", "zero")
MONITORS = ("energy", "convergence", "lemma31", "velocity", "pressure", "nonlinear", "forcing", "modal", "suitability")
WORKERS_ENV = "ACNS_WORKERS"
# config fields that do not change any computed value
RUN_ONLY_FIELDS = ("output", "workers", "save_trajectories")


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class InitSpec:
    type: str = "taylor-green"
    seed: int = 0
    amplitude: float = 1.0
    band: int = 4
    path: str = ""


@dataclass(frozen=True)
class SweepConfig:
    dim: int
    n: int
    L: float = 2 * math.pi
    nu: float = 1.0
    T: float = 1.0
    dt: float = 1e-3
    dt_rec: float = 2e-3
    eps_list: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    init: InitSpec = InitSpec()
    output: str = "acns-out"
    monitors: tuple = MONITORS
    bumps: object = "default"  # "default" or a tuple of bump dicts
    workers: int | None = None
    nonlinear: bool = True
    energy_budget: float = 1e-6
    modal_band: float = 4.0
    save_trajectories: bool = False

    def grid(self):
        return sp.TorusGrid(self.dim, self.n, self.L)

    def config_hash(self):
        """Hash of the fields that determine the numbers (not where or how they are run)."""
        fields = {k: v for k, v in serialize(self).items() if k not in RUN_ONLY_FIELDS}
        blob = json.dumps(fields, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def resolved_workers(self):
        env = os.environ.get(WORKERS_ENV)
        if env:
            return max(1, int(env))
        return self.workers or 1


def _num(v, path, *, integer=False, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, "expected a number")
    if integer and int(v) != v:
        raise SchemaError(path, "expected an integer")
    if not math.isfinite(v):
        raise SchemaError(path, "must be finite")
    if positive and v <= 0:
        raise SchemaError(path, "must be positive")
    return int(v) if integer else float(v)


def _divides(a, b):
    r = b / a
    return abs(r - round(r)) <= 1e-9 * max(1.0, r) and round(r) >= 1


def _parse_init(obj):
    if isinstance(obj, str):
        obj = {"type": obj}
    if not isinstance(obj, dict):
        raise SchemaError("init", "expected an object or a type name")
    unknown = set(obj) - {f.name for f in fields(InitSpec)}
    if unknown:
        raise SchemaError(f"init.{sorted(unknown)[0]}", "unknown field")
    kind = obj.get("type", "taylor-green")
    if kind not in INIT_TYPES:
        raise SchemaError("init.type", f"must be one of {', '.join(INIT_TYPES)}")
    spec = InitSpec(
        type=kind,
        seed=_num(obj.get("seed", 0), "init.seed", integer=True),
        amplitude=_num(obj.get("amplitude", 1.0), "init.amplitude"),
        band=_num(obj.get("band", 4), "init.band", integer=True, positive=True),
        path=str(obj.get("path", "")),
    )
    if kind == "file" and not spec.path:
        raise SchemaError("init.path", "required for file initial data")
    return spec


def _parse_bumps(obj, dim):
    if obj == "default":
        return "default"
    if not isinstance(obj, list):
        raise SchemaError("bumps", "expected \"default\" or a list")
    out = []
    for i, b in enumerate(obj):
        p = f"bumps[{i}]"
        if not isinstance(b, dict):
            raise SchemaError(p, "expected an object")
        c = b.get("center")
        if not isinstance(c, list) or len(c) != dim:
            raise SchemaError(f"{p}.center", f"expected {dim} coordinates")
        out.append(dict(
            center=tuple(_num(x, f"{p}.center[{j}]") for j, x in enumerate(c)),
            t0=_num(b.get("t0"), f"{p}.t0"),
            rx=_num(b.get("rx"), f"{p}.rx", positive=True),
            rt=_num(b.get("rt"), f"{p}.rt", positive=True),
        ))
    return tuple(out)


def parse_config(source):
    """Validate a JSON config (path, JSON text or dict) and fill defaults."""
    if isinstance(source, dict):
        raw = source
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError("$", f"invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise SchemaError("$", "top level must be an object")
    known = {f.name for f in fields(SweepConfig)}
    unknown = set(raw) - known
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    for req in ("dim", "n"):
        if req not in raw:
            raise SchemaError(req, "required")
    kw = {}
    kw["dim"] = _num(raw["dim"], "dim", integer=True)
    if kw["dim"] not in (2, 3):
        raise SchemaError("dim", "must be 2 or 3")
    kw["n"] = _num(raw["n"], "n", integer=True)
    if kw["n"] < 8 or kw["n"] % 2:
        raise SchemaError("n", "must be an even integer >= 8")
    for name in ("L", "nu", "T", "dt", "dt_rec", "energy_budget", "modal_band"):
        if name in raw:
            kw[name] = _num(raw[name], name, positive=True)
    if "eps_list" in raw:
        e = raw["eps_list"]
        if not isinstance(e, list) or not e:
            raise SchemaError("eps_list", "expected a non-empty list")
        vals = tuple(_num(x, f"eps_list[{i}]", positive=True) for i, x in enumerate(e))
        for i in range(1, len(vals)):
            if not vals[i] < vals[i - 1]:
                raise SchemaError(f"eps_list[{i}]", "must be strictly decreasing")
        kw["eps_list"] = vals
    if "init" in raw:
        kw["init"] = _parse_init(raw["init"])
    if "output" in raw:
        if not isinstance(raw["output"], str):
            raise SchemaError("output", "expected a string")
        kw["output"] = raw["output"]
    if "monitors" in raw:
        m = raw["monitors"]
        if isinstance(m, dict):
            for k, v in m.items():
                if k not in MONITORS:
                    raise SchemaError(f"monitors.{k}", "unknown monitor")
                if not isinstance(v, bool):
                    raise SchemaError(f"monitors.{k}", "expected true/false")
            kw["monitors"] = tuple(k for k in MONITORS if m.get(k, True))
        elif isinstance(m, list):
            for i, k in enumerate(m):
                if k not in MONITORS:
                    raise SchemaError(f"monitors[{i}]", "unknown monitor")
            kw["monitors"] = tuple(k for k in MONITORS if k in m)
        else:
            raise SchemaError("monitors", "expected an object or list")
    if "bumps" in raw:
        kw["bumps"] = _parse_bumps(raw["bumps"], kw["dim"])
    if "workers" in raw and raw["workers"] is not None:
        kw["workers"] = _num(raw["workers"], "workers", integer=True, positive=True)
    for name in ("nonlinear", "save_trajectories"):
        if name in raw:
            if not isinstance(raw[name], bool):
                raise SchemaError(name, "expected true/false")
            kw[name] = raw[name]
    cfg = SweepConfig(**kw)
    if not _divides(cfg.dt, cfg.dt_rec):
        raise SchemaError("dt", "must divide dt_rec")
    if not _divides(cfg.dt_rec, cfg.T):
        raise SchemaError("dt_rec", "must divide T")
    if cfg.init.type == "taylor-green" and abs(cfg.L - 2 * math.pi) > 1e-12:
        raise SchemaError("init.type", "taylor-green needs L = 2 pi")
    if cfg.init.type == "abc" and (cfg.dim != 3 or abs(cfg.L - 2 * math.pi) > 1e-12):
        raise SchemaError("init.type", "abc flow needs dim = 3 and L = 2 pi")
    return cfg


def serialize(cfg):
    """Plain JSON-ready dict; parse_config(serialize(cfg)) == cfg."""
    d = asdict(cfg)
    d["eps_list"] = list(cfg.eps_list)
    d["monitors"] = list(cfg.monitors)
    d["bumps"] = "default" if cfg.bumps == "default" else [dict(b, center=list(b["center"])) for b in cfg.bumps]
    return d


def with_overrides(cfg, **kw):
    """Copy of cfg with non-None overrides, re-validated."""
    d = serialize(cfg)
    d.update({k: v for k, v in kw.items() if v is not None})
    return parse_config(d)


# ---------------------------------------------------------------- initial data


def abc_flow(grid, A=1.0, B=1.0, C=1.0):
    """Beltrami field (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)."""
    x, y, z = grid.coordinates()
    u = np.stack([A * np.sin(z) + C * np.cos(y), B * np.sin(x) + A * np.cos(z), C * np.sin(y) + B * np.cos(x)])
    return sp.transform_to_spectral(u, grid)


def random_solenoidal(grid, seed, amplitude=1.0, band=4):
    """Seeded divergence-free field: Gaussian samples, band-limited to
    |k_j| <= band, mean removed, Leray-projected, scaled to
    ||u||_{L^2} = amplitude."""
    rng = np.random.default_rng(seed)
    f = sp.random_field(grid, rng, components=grid.dim, band=band)
    c = f.coeffs.copy()
    c[(slice(None),) + (0,) * grid.dim] = 0.0
    c = c - sp.q_hat(grid, c)
    norm = math.sqrt(float(sp.sobolev_sq(grid, c, 0, False)))
    return sp.SpectralField(grid, c * (amplitude / norm if norm > 0 else 0.0))


def build_initial_velocity(cfg):
    g = cfg.grid()
    kind = cfg.init.type
    if kind == "taylor-green":
        u, _ = taylor_green(0.0, cfg.nu, g)
        return u * cfg.init.amplitude
    if kind == "abc":
        return abc_flow(g) * cfg.init.amplitude
    if kind == "random":
        return random_solenoidal(g, cfg.init.seed, cfg.init.amplitude, cfg.init.band)
    if kind == "zero":
        return sp.SpectralField.zeros(g, g.dim)
    u, _ = sp.read_snapshot(cfg.init.path)
    if not u.grid.same_as(g) or u.ncomp != g.dim:
        raise SchemaError("init.path", "snapshot grid does not match the config")
    return u


def build_bumps(cfg):
    g = cfg.grid()
    if cfg.bumps == "default":
        return su.default_bumps(g, cfg.T)
    return [su.make_bump((b["center"], b["t0"]), (b["rx"], b["rt"]), g, cfg.T, label=f"bump{i}")
            for i, b in enumerate(cfg.bumps)]


# ---------------------------------------------------------------- metrics


def _check_match(a, b):
    if not a.grid.same_as(b.grid):
        raise ValueError("trajectories live on different grids")
    if len(a) != len(b) or abs(a.dt_rec - b.dt_rec) > 1e-14 or abs(a.t0 - b.t0) > 1e-14:
        raise ValueError("trajectories are sampled at different times")


def acoustic_average(samples, eps, dt_rec):
    """Centred moving average over one acoustic period 2 pi sqrt(eps)."""
    w = int(round(2 * math.pi * math.sqrt(eps) / dt_rec)) if eps > 0 else 0
    if w < 2:
        return samples
    w = min(w, 2 * samples.shape[0] - 1)
    w += 1 - w % 2
    out = uniform_filter1d(samples.real, w, axis=0, mode="nearest")
    return out + 1j * uniform_filter1d(samples.imag, w, axis=0, mode="nearest")


def convergence_metrics(traj_ac, traj_ref, s=0.5, margin=st.MARGIN):
    """Distances between an AC run and the incompressible reference.

    Keys: Qu_L2L4, Pu_ref_L2L2, sqrt_eps_p_LinfL2 and p_ref_distance (the
    acoustically averaged pressure difference in H^{-r}(H^{-s})).
    """
    _check_match(traj_ac, traj_ref)
    g = traj_ac.grid
    dt = traj_ac.dt_rec
    qu = sp.q_hat(g, traj_ac.u)
    l4 = st.lp_series(g, qu, 4)
    diff = traj_ac.u - qu - traj_ref.u
    l2 = np.sqrt(sp.sobolev_sq(g, diff, 0, False))
    pl2 = np.sqrt(sp.sobolev_sq(g, traj_ac.p[:, np.newaxis], 0, False))
    dp = acoustic_average(traj_ac.p - traj_ref.p, traj_ac.eps, dt)
    shim = Trajectory(g, traj_ac.eps, traj_ac.nu, dt, np.zeros_like(traj_ac.u), dp, 0.0, {})
    _, _, rbar = st.exponents_for_space_index(s)
    spec = st.NormSpec(-(float(rbar) + margin), -s)
    pdist = st.spacetime_norm(st.extend_trajectory(shim).pressure(), spec)
    return dict(
        Qu_L2L4=st.lp_time(l4, dt, 2),
        Pu_ref_L2L2=st.lp_time(l2, dt, 2),
        sqrt_eps_p_LinfL2=math.sqrt(traj_ac.eps) * float(np.max(pl2)),
        p_ref_distance=pdist,
    )


# ---------------------------------------------------------------- sweep


@dataclass
class EpsResult:
    eps: float
    metrics: dict = field(default_factory=dict)
    monitors: list = field(default_factory=list)
    suitability: list = field(default_factory=list)
    energy: dict = field(default_factory=dict)
    error: str | None = None
    trajectory: object = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class ConvergenceReport:
    config: SweepConfig
    results: list
    reference: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    suitability: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def metric_names(self):
        names = []
        for r in self.results:
            for k in r.metrics:
                if k not in names:
                    names.append(k)
        return names


def _energy_metrics(traj):
    rep = global_energy_check(traj)
    E0 = rep.E0
    scale = E0 if E0 > 0 else 1.0
    kp = traj.grid.volume * np.sum(np.abs(traj.p) ** 2, axis=tuple(range(1, traj.grid.dim + 1)))
    return rep, dict(
        energy_creation=float(np.max(rep.deficit)) / scale,
        energy_loss=float(-np.min(rep.deficit)) / scale,
        eps_p2_over_2E0=float(np.max(traj.eps * kp)) / (2 * E0) if E0 > 0 else 0.0,
    )


def _run_eps(cfg, eps, u0, ref, bumps, keep):
    res = EpsResult(eps)
    try:
        mon = set(cfg.monitors)
        traj = simulate(u0, eps, cfg.nu, cfg.T, cfg.dt, cfg.dt_rec, nonlinear=cfg.nonlinear)
        if cfg.save_trajectories:
            traj.save(Path(cfg.output) / f"traj_eps{eps:.3e}")
        if "energy" in mon:
            rep, em = _energy_metrics(traj)
            res.metrics.update(em)
            scale = rep.E0 if rep.E0 > 0 else 1.0
            res.energy = dict(t=rep.t.tolist(), deficit=(rep.deficit / scale).tolist())
        if "convergence" in mon and ref is not None:
            res.metrics.update(convergence_metrics(traj, ref))
        need_ext = mon & {"velocity", "pressure", "nonlinear", "forcing", "modal", "lemma31", "suitability"}
        ext = st.extend_trajectory(traj) if need_ext else None
        reports = []
        if "lemma31" in mon:
            reports += st.lemma31_suite(traj, eps, ext)
        if "velocity" in mon:
            reports += st.velocity_estimate_suite(ext, eps)
        if "pressure" in mon:
            reports += st.pressure_estimate_suite(ext, eps)
        if "nonlinear" in mon:
            reports.append(st.nonlinear_term_norm(ext))
        if "forcing" in mon:
            reports.append(st.forcing_term_norm(ext))
        res.monitors = [asdict(r) for r in reports]
        if "modal" in mon:
            res.metrics["modal_residual"] = st.modal_residual_check(ext, eps, cfg.nu, band=cfg.modal_band)
        if "suitability" in mon:
            bound = st.pressure_product_bound(ext, eps)
            vmax = 0.0
            for phi in bumps:
                ser = su.local_term_series(traj, phi)
                ns = su.report_from_series(phi.label, *ser, traj.times, su.TERMS[1:4])
                chk = su.identity_tolerance(traj, phi, series=ser)
                van = su.integrate_series(ser[0], {"v": ser[1]["pressure_div"]}, traj.times)["v"]
                vmax = max(vmax, abs(van))
                res.suitability.append(dict(
                    eps=eps, label=phi.label, lhs=ns.lhs, rhs=ns.rhs, slack=ns.slack, tol=chk.tol,
                    identity_residual=chk.residual, pressure_div=van, product_bound=bound,
                    terms=dict(ns.terms)))
            res.metrics["vanishing_term_max"] = vmax
            res.metrics["vanishing_bound"] = bound
        if keep:
            res.trajectory = traj
    except Exception as e:  # recorded per eps; the sweep continues
        log.warning("eps=%g failed: %s", eps, e)
        res.error = f"{type(e).__name__}: {e}"
    return res


def _run_eps_star(args):
    return _run_eps(*args)


def run_sweep(cfg, keep_trajectories=False):
    """Reference run, one AC run per eps (concurrently) and every enabled check."""
    u0 = build_initial_velocity(cfg)
    mon = set(cfg.monitors)
    bumps = build_bumps(cfg) if "suitability" in mon else []
    ref = None
    refinfo = {}
    if mon & {"convergence", "suitability"}:
        ref = simulate_ns(u0, cfg.nu, cfg.T, cfg.dt, cfg.dt_rec)
        refinfo["u_L2L2"] = st.lp_time(np.sqrt(sp.sobolev_sq(ref.grid, ref.u, 0, False)), ref.dt_rec, 2)
    jobs = [(cfg, eps, u0, ref, bumps, keep_trajectories) for eps in cfg.eps_list]
    workers = min(cfg.resolved_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_eps_star, jobs))
    else:
        results = [_run_eps_star(j) for j in jobs]
    report = ConvergenceReport(cfg, results, refinfo)
    if "suitability" in mon and ref is not None:
        refterms = {}
        for phi in bumps:
            r = su.local_energy_residual(ref, phi)
            refterms[phi.label] = dict(lhs=r.lhs, slack=r.slack, **r.terms)
        report.reference["suitability"] = refterms
    if keep_trajectories:
        report.reference["trajectory"] = ref
    report.checks = evaluate_checks(report)
    return report


def _strictly_decreasing(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


def evaluate_checks(report, term_rtol=0.02):
    """Pass/fail of every enabled check, keyed by name."""
    cfg = report.config
    ok = [r for r in report.results if r.ok]
    checks = {f"run[eps={r.eps:g}]": r.ok for r in report.results}
    mon = set(cfg.monitors)
    if "energy" in mon:
        for r in ok:
            checks[f"energy_creation[eps={r.eps:g}]"] = r.metrics["energy_creation"] <= 1e-10
            checks[f"energy_budget[eps={r.eps:g}]"] = r.metrics["energy_loss"] <= cfg.energy_budget
            checks[f"eps_p2_bound[eps={r.eps:g}]"] = r.metrics["eps_p2_over_2E0"] <= 1.0
    if "convergence" in mon and len(ok) >= 2:
        qu = [r.metrics["Qu_L2L4"] for r in ok]
        checks["Qu_decreasing"] = _strictly_decreasing(qu) or max(qu) == 0
        checks["Qu_ratio"] = qu[-1] <= 0.1 * qu[0] if qu[0] > 0 else True
        pu = [r.metrics["Pu_ref_L2L2"] for r in ok]
        floor = cfg.dt**2 * report.reference.get("u_L2L2", 0.0)
        checks["Pu_decreasing"] = all(b < a or b <= floor for a, b in zip(pu, pu[1:]))
    if len(ok) >= 2 and ok[0].monitors:
        first = {m["label"]: m["value"] for m in ok[0].monitors}
        for m in ok[-1].monitors:
            checks[f"uniform[{m['label']}]"] = m["value"] <= 2 * first[m["label"]] + 1e-300
    if "modal" in mon and not cfg.nonlinear:
        for r in ok:
            checks[f"modal[eps={r.eps:g}]"] = r.metrics["modal_residual"] <= 1e-6
    if "suitability" in mon and ok:
        last = ok[-1]
        refterms = report.reference.get("suitability", {})
        verdict = []
        for row in last.suitability:
            good = row["slack"] >= -row["tol"]
            ref = refterms.get(row["label"])
            diffs = {}
            if ref is not None:
                scale = max(abs(ref["lhs"]), np.finfo(float).tiny)
                diffs["dissipation"] = abs(row["lhs"] - ref["lhs"]) / scale
                for k in su.TERMS[1:4]:
                    diffs[k] = abs(row["terms"][k] - ref[k]) / scale
            verdict.append(dict(label=row["label"], slack=row["slack"], tol=row["tol"], suitable=good,
                                term_rel_diff=diffs))
            checks[f"suitable[{row['label']}]"] = good
            if diffs:
                checks[f"terms_match[{row['label']}]"] = max(diffs.values()) <= term_rtol
        report.suitability = dict(eps=last.eps, rows=verdict)
        for r in ok:
            for row in r.suitability:
                checks[f"vanishing_bound[eps={r.eps:g},{row['label']}]"] = abs(row["pressure_div"]) <= row["product_bound"]
        if len(ok) >= 2:
            a, b = ok[0].metrics["vanishing_term_max"], ok[-1].metrics["vanishing_term_max"]
            checks["vanishing_decay"] = b <= 0.2 * a if a > 0 else b == 0
    return checks


# ---------------------------------------------------------------- output


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def emit_report(report, directory, figures=True):
    """Write CSV tables, a JSON summary, two-column plot data and figures.

    Data files carry no timestamps, so identical reports give identical
    bytes.  Returns the list of written paths.
    """
    out = Path(directory)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    names = report.metric_names()
    written = []

    p = out / "convergence.csv"
    _write_csv(p, ["eps", "status"] + names,
               [[r.eps, "ok" if r.ok else "failed"] + [r.metrics.get(k, float("nan")) for k in names]
                for r in report.results])
    written.append(p)

    p = out / "metrics_long.csv"
    _write_csv(p, ["eps", "metric", "value"],
               [[r.eps, k, r.metrics[k]] for r in report.results for k in names if k in r.metrics])
    written.append(p)

    p = out / "monitors.csv"
    _write_csv(p, ["label", "eps", "value", "spec", "indices"],
               [[m["label"], m["eps"], m["value"], m["spec"], json.dumps(m["indices"], sort_keys=True)]
                for r in report.results for m in r.monitors])
    written.append(p)

    p = out / "suitability.csv"
    _write_csv(p, ["eps", "label", "lhs", "rhs", "slack", "tol", "identity_residual", "pressure_div", "product_bound"],
               [[s["eps"], s["label"], s["lhs"], s["rhs"], s["slack"], s["tol"], s["identity_residual"],
                 s["pressure_div"], s["product_bound"]] for r in report.results for s in r.suitability])
    written.append(p)

    for k in names:
        p = out / "plotdata" / f"{k}.dat"
        lines = [f"# eps {k}"] + [f"{r.eps!r} {float(r.metrics[k])!r}" for r in report.results if k in r.metrics]
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    labels = []
    for r in report.results:
        for m in r.monitors:
            if m["label"] not in labels:
                labels.append(m["label"])
    for lab in labels:
        safe = lab.replace("/", "_")
        p = out / "plotdata" / f"monitor_{safe}.dat"
        rows = [f"{m['eps']!r} {float(m['value'])!r}" for r in report.results for m in r.monitors if m["label"] == lab]
        p.write_text("\n".join([f"# eps {lab}"] + rows) + "\n")
        written.append(p)

    summary = dict(
        config=serialize(report.config),
        config_hash=report.config.config_hash(),
        metrics=names,
        passed=report.passed,
        checks=report.checks,
        results=[dict(eps=r.eps, error=r.error, metrics=r.metrics, monitors=r.monitors,
                      suitability=r.suitability) for r in report.results],
        reference={k: v for k, v in report.reference.items() if k != "trajectory"},
        suitability=report.suitability,
    )
    p = out / "summary.json"
    p.write_text(json.dumps(_jsonable(summary), indent=1, sort_keys=True) + "\n")
    written.append(p)

    if figures:
        from . import plotting

        written += plotting.render_report(report, out / "figures")
    return written


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x

