"""Command-line entry point: ``friedrichs <subcommand> --model FILE``.

Every run writes ``metadata.json`` (model hash, options, version) next to its
outputs in ``--out`` (default: ``$FRIEDRICHS_OUT`` or ``./friedrichs_out``).
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, acceptance, analysis, export, modelfile
from .errors import FitRejected, ModelError, NotApplicableError
from .kernel import CorrelationKernel
from .memory_evolution import (build_resonant_density, normalized_state, solve_markovian,
                               solve_memory_kernel)
from .model import FlatWindow, omega_at
from .oracle import discretize, dispersion, exact_reduced_propagator
from .resolvent import PoleSearch, ReducedGenerator

OUT_ENV = "FRIEDRICHS_OUT"
SUBCOMMANDS = ("kernel", "evolve", "poles", "background", "oracle", "semigroup", "check")


@dataclass
class RunConfig:
    subcommand: str
    model_path: str = None
    output_dir: str = "friedrichs_out"
    step: float = 0.05
    t_max: float = 50.0
    grid_m: int = 2000
    seed: int = 12345
    tol_root: float = 1e-12
    tol_deg: float = 1e-8
    lambda_sweep: tuple = ()
    mode: str = "exact"
    state: tuple = ()
    notes: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("tol_root", "tol_deg", "step", "t_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def options(self) -> dict:
        return {"step": self.step, "t_max": self.t_max, "grid_m": self.grid_m,
                "seed": self.seed, "tol_root": self.tol_root, "tol_deg": self.tol_deg,
                "lambda_sweep": list(self.lambda_sweep), "mode": self.mode,
                "state": [[complex(c).real, complex(c).imag] for c in self.state]}


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _amplitudes(text):
    return tuple(complex(x.strip().replace("i", "j")) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="friedrichs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    helps = {"kernel": "correlation matrix alpha(t) and its Laplace transform on a grid",
             "evolve": "memory-kernel (Volterra) and Markovian trajectories",
             "poles": "second-sheet poles, projectors and residues",
             "background": "branch-point contour term (half_line models)",
             "oracle": "discretized-continuum reference evolution",
             "semigroup": "composition-law deviation report",
             "check": "model invariants, or the acceptance suite without --model"}
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--model", required=name != "check", help="model TOML file")
        s.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV})")
        s.add_argument("--step", type=float, default=0.05)
        s.add_argument("--tmax", type=float, default=50.0)
        s.add_argument("--grid-m", type=int, default=2000)
        s.add_argument("--seed", type=int, default=12345)
        s.add_argument("--tol-root", type=float, default=1e-12)
        s.add_argument("--tol-deg", type=float, default=1e-8)
        s.add_argument("--lambda-sweep", type=_floats, default=(),
                       help="comma-separated flat-window cutoffs")
        s.add_argument("--mode", choices=("ww", "exact"), default="exact")
        s.add_argument("--state", type=_amplitudes, default=(),
                       help="initial amplitudes c_a, e.g. '1,0' or '0.6,0.8i'")
    return p


def config_from_args(args) -> RunConfig:
    out = args.out or os.environ.get(OUT_ENV) or "friedrichs_out"
    return RunConfig(args.subcommand, args.model, out, args.step, args.tmax, args.grid_m,
                     args.seed, args.tol_root, args.tol_deg, tuple(args.lambda_sweep),
                     args.mode, tuple(args.state))


def _state(cfg, model):
    if not cfg.state:
        return np.eye(model.n, dtype=complex)[0]
    c = np.asarray(cfg.state, dtype=complex)
    if c.size != model.n:
        raise ValueError(f"--state has {c.size} amplitudes, model has {model.n} levels")
    return c / np.linalg.norm(c)


def _grid(cfg):
    n = int(np.ceil(cfg.t_max / cfg.step - 1e-9))
    return cfg.step * np.arange(n + 1)


def _matrix_rows(t, mats, prefix):
    n = mats.shape[-1]
    header = ["t"] + [f"{part}_{prefix}{a + 1}{b + 1}" for a in range(n) for b in range(n)
                      for part in ("re", "im")]
    rows = []
    for s, m in zip(t, mats):
        row = [float(s)]
        for a in range(n):
            for b in range(n):
                row += [float(m[a, b].real), float(m[a, b].imag)]
        rows.append(row)
    return header, rows


def _oracle_focus(model):
    lo, hi = float(model.energies.min()), float(model.energies.max())
    pad = max(3.0, hi - lo)
    return (lo - pad, hi + pad)


# subcommands

def cmd_kernel(cfg, model, out):
    k = CorrelationKernel(model)
    files = []
    if model.is_markovian:
        cfg.notes.append("unbounded flat coupling: alpha(t) = 2 pi omega delta(t), no grid")
    else:
        t = _grid(cfg)
        export.write_csv(out / "alpha_t.csv", *_matrix_rows(t, k.alpha_t(t), "alpha"))
        files.append("alpha_t.csv")
    lo, hi = float(model.energies.min()) - 2, float(model.energies.max()) + 2
    re = np.linspace(lo, hi, 41)
    rows, rows2 = [], []
    n = model.n
    for y in (0.01, 0.1, 1.0):
        for x in re:
            a = k.alpha_z_first_sheet(complex(x, y))
            rows.append([x, y] + [float(v) for e in a.ravel() for v in (e.real, e.imag)])
            if model.continuable:
                try:
                    a2 = k.alpha_z_second_sheet(complex(x, -y))
                    rows2.append([x, -y] + [float(v) for e in a2.ravel()
                                            for v in (e.real, e.imag)])
                except ValueError as exc:
                    cfg.notes.append(str(exc))
    header = ["re_z", "im_z"] + [f"{part}_alpha{a + 1}{b + 1}" for a in range(n)
                                 for b in range(n) for part in ("re", "im")]
    export.write_csv(out / "alpha_z_first_sheet.csv", header, rows)
    files.append("alpha_z_first_sheet.csv")
    if rows2:
        export.write_csv(out / "alpha_z_second_sheet.csv", header, rows2)
        files.append("alpha_z_second_sheet.csv")
    return files, {}


def cmd_evolve(cfg, model, out):
    c = _state(cfg, model)
    files, report = [], {}
    if model.is_markovian:
        cfg.notes.append("unbounded flat coupling: memory-kernel solve replaced by the "
                         "exact Markovian generator")
    else:
        vol = solve_memory_kernel(model, t_max=cfg.t_max, step=cfg.step)
        export.write_trajectory(out / "trajectory_volterra.csv", vol, c)
        files.append("trajectory_volterra.csv")
        report["volterra_max_singular_value"] = vol.max_singular_value()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        w_res = build_resonant_density(model)
    cfg.notes.extend(str(w.message) for w in caught)
    mark = solve_markovian(model, w_res, t_max=cfg.t_max, step=cfg.step)
    export.write_trajectory(out / "trajectory_markovian.csv", mark, c)
    files.append("trajectory_markovian.csv")
    report["omega_res"] = w_res
    return files, report


def _poles(cfg, model):
    gen = ReducedGenerator(model, deg_tol=cfg.tol_deg)
    poles = gen.find_poles(PoleSearch(tol=cfg.tol_root), mode=cfg.mode)
    cfg.notes.extend(poles.notes)
    return gen, poles


def cmd_poles(cfg, model, out):
    gen, poles = _poles(cfg, model)
    export.write_poles(out / "poles.csv", poles)
    export.write_json(out / "poles.json", [p.to_dict() for p in poles])
    fingerprints = [np.round(p.projector, 10) for p in poles]
    report = {"n_poles": len(poles), "projector_fingerprints": fingerprints}
    if len(poles) >= 2:
        report["cross_pole_orthogonality"] = analysis.cross_pole_orthogonality(poles)
    return ["poles.csv", "poles.json"], report


def cmd_background(cfg, model, out):
    gen, poles = _poles(cfg, model)
    t = _grid(cfg)[1:]
    mats, info = [], None
    for s in t:
        b, info = gen.background_integral(s, full_output=True)
        mats.append(b)
    export.write_csv(out / "background.csv", *_matrix_rows(t, np.array(mats), "B"))
    return ["background.csv"], {"contour_eps": info["eps"] if info else None,
                                "depth_rule": "40/t", "n_poles": len(poles)}


def _sweep_models(cfg, model):
    if not cfg.lambda_sweep:
        return [(None, model)]
    out = []
    for cut in cfg.lambda_sweep:
        chans = []
        for ch in model.channels:
            if isinstance(ch, FlatWindow) and not ch.unbounded:
                lo = 0.0 if model.spectrum_kind == "half_line" else -cut
                chans.append(FlatWindow(ch.g, lo, cut))
            else:
                chans.append(ch)
        out.append((cut, model.replace_channels(chans)))
    return out


def cmd_oracle(cfg, model, out):
    c = _state(cfg, model)
    files, sweep_rows, report = [], [], {}
    for cut, mod in _sweep_models(cfg, model):
        dh = discretize(mod, cfg.grid_m, focus=_oracle_focus(mod), focus_fraction=0.7)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            prop = exact_reduced_propagator(dh, _grid(cfg))
        cfg.notes.extend(str(w.message) for w in caught)
        dh2 = dispersion(dh, c)
        tag = "" if cut is None else f"_L{cut:g}"
        export.write_trajectory(out / f"trajectory_oracle{tag}.csv", prop, c)
        files.append(f"trajectory_oracle{tag}.csv")
        try:
            fit = analysis.fit_decay_rate(prop, state=c, dispersion=dh2,
                                          t_end=min(cfg.t_max, prop.valid_until))
            rate = fit.rate
        except FitRejected as exc:
            cfg.notes.append(f"decay fit rejected{tag}: {exc}")
            rate = float("nan")
        sweep_rows.append([float("nan") if cut is None else cut, dh2, rate,
                           dh.recurrence_time])
    export.write_csv(out / "oracle_summary.csv",
                     ["cutoff", "dispersion", "fitted_rate", "recurrence_time"], sweep_rows)
    files.append("oracle_summary.csv")
    return files, report


def cmd_semigroup(cfg, model, out):
    gen, poles = _poles(cfg, model)
    if not poles:
        raise ModelError("no poles found; cannot set the lifetime scale")
    dom = analysis.dominant_poles(poles, model.n)
    tau = float(np.mean([p.lifetime for p in dom]))
    pairs = analysis.default_pairs(tau)
    reports = []

    def pole_source(t):
        return gen.pole_approx_propagator(poles, t, mode=cfg.mode)

    pole_source.name = f"pole_approx_{cfg.mode}"
    reports.append(analysis.semigroup_deviation(pole_source, pairs))
    reports.append(analysis.semigroup_deviation(
        solve_markovian(model, build_resonant_density(model), 4 * tau, tau / 4), pairs,
        name="markovian"))
    if not model.is_markovian:
        step = min(cfg.step, tau / 20)
        vol = solve_memory_kernel(model, t_max=4 * tau, step=tau / round(tau / step))
        reports.append(analysis.semigroup_deviation(vol, pairs, name="volterra"))
        dh = discretize(model, cfg.grid_m, focus=_oracle_focus(model), focus_fraction=0.7)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            orc = exact_reduced_propagator(dh, [4 * tau])
        cfg.notes.extend(str(w.message) for w in caught)
        reports.append(analysis.semigroup_deviation(orc, pairs, name="oracle"))
    export.write_json(out / "semigroup.json", {"tau": tau, "reports": reports})
    rows = [[r.source, p[0], p[1], d] for r in reports for p, d in zip(r.pairs, r.deviation)]
    export.write_csv(out / "semigroup.csv", ["source", "t1", "t2", "deviation"], rows)
    return ["semigroup.json", "semigroup.csv"], {"tau": tau}


def model_checks(cfg, model) -> list:
    """Invariant checks on a single model: ``[(name, passed, value)]``."""
    rng = np.random.default_rng(cfg.seed)
    checks = []
    lam = np.linspace(float(model.energies.min()) - 5, float(model.energies.max()) + 5, 201)
    w = omega_at(model, lam)
    herm = float(np.abs(w - np.conj(np.swapaxes(w, -1, -2))).max())
    checks.append(("omega_hermitian", herm < 1e-12, herm))
    min_eig = float(np.linalg.eigvalsh(w).min())
    scale = max(1.0, float(np.abs(w).max()))
    checks.append(("omega_psd", min_eig > -1e-12 * scale, min_eig))
    gen = ReducedGenerator(model, deg_tol=cfg.tol_deg)
    margin = np.inf
    for _ in range(200):
        z = complex(rng.uniform(lam[0], lam[-1]), rng.uniform(0.01, 2.0))
        h = gen.h_first_sheet(z)
        chi = rng.normal(size=model.n) + 1j * rng.normal(size=model.n)
        chi /= np.linalg.norm(chi)
        margin = min(margin, float((np.vdot(chi, h @ chi)).imag - z.imag))
    checks.append(("first_sheet_bound", margin > -1e-12, margin))
    if model.continuable and not all(ch.is_zero for ch in model.channels):
        poles = gen.find_poles(PoleSearch(tol=cfg.tol_root), mode=cfg.mode)
        below = all(p.z_pole.imag < 0 for p in poles)
        checks.append(("poles_below_axis", below and len(poles) > 0, len(poles)))
        if poles:
            idem = max(np.linalg.norm(p.projector @ p.projector - p.projector) for p in poles)
            trace = max(abs(np.trace(p.projector) - 1) for p in poles)
            checks.append(("pole_projectors_rank_one", idem < 1e-10 and trace < 1e-10,
                           float(max(idem, trace))))
            worst = 0.0
            for p in poles:
                q, _ = gen.projectors(p.z_pole)
                worst = max(worst, np.linalg.norm(sum(q) - np.eye(model.n)))
            checks.append(("projector_completeness", worst < 1e-10, float(worst)))
        if model.is_rational and model.spectrum_kind == "full_line" and not model.is_markovian:
            # meromorphic case: the pole sum is the whole propagator
            t_end = min(3 * max(p.lifetime for p in poles), 20.0)
            vol = solve_memory_kernel(model, t_max=t_end, step=t_end / 4000)
            u_p = gen.pole_approx_propagator(poles, vol.t_grid, mode="exact")
            err = float(np.linalg.norm(vol.values - u_p, axis=(1, 2)).max())
            checks.append(("pole_sum_matches_volterra", err < 1e-4, err))
    return checks


def cmd_check(cfg, model, out):
    if model is None:
        results = acceptance.run_all(echo=print)
        export.write_json(out / "acceptance.json", [r.to_dict() for r in results])
        return ["acceptance.json"], {"passed": all(r.passed for r in results)}
    checks = model_checks(cfg, model)
    for name, ok, value in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {value:.6g}")
    export.write_json(out / "check.json", [{"name": n, "passed": bool(ok), "value": v}
                                           for n, ok, v in checks])
    return ["check.json"], {"passed": all(ok for _, ok, _ in checks)}


COMMANDS = {"kernel": cmd_kernel, "evolve": cmd_evolve, "poles": cmd_poles,
            "background": cmd_background, "oracle": cmd_oracle, "semigroup": cmd_semigroup,
            "check": cmd_check}


def run(cfg: RunConfig) -> int:
    model = modelfile.load(cfg.model_path) if cfg.model_path else None
    if cfg.state and model is not None:
        normalized_state(np.asarray(cfg.state) / np.linalg.norm(cfg.state), model.n)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files, report = COMMANDS[cfg.subcommand](cfg, model, out)
    meta = {"subcommand": cfg.subcommand, "version": __version__, "options": cfg.options(),
            "model_path": cfg.model_path,
            "model_hash": modelfile.model_hash(model) if model is not None else None,
            "outputs": files, "notes": cfg.notes, "report": report}
    export.write_json(out / "metadata.json", meta)
    return 0 if report.get("passed", True) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except (ModelError, NotApplicableError, ValueError) as exc:
        print(f"friedrichs {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
