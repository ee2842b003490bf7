"""Command-line front end: config parsing, run orchestration, artifacts.

Subcommands rasterize the min-angle field, probe circles and spheres,
trace exceptional lines, evaluate analytic line predictions, and run
disorder ensembles.  Every run writes CSV artifacts plus a JSON manifest
with content digests; heatmaps are emitted as self-contained PGM or SVG
(log-scale, clamped to [1e-7, pi/2]) without any plotting dependency.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 IO failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, perturb, scan
from .errors import ConfigError, FermiepError
from .model import DisorderRealization, ModelSpec, solve_exceptional_twists

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

ANGLE_CLAMP = (1e-7, math.pi / 2)

SWEEP_COLUMNS = ("phi", "u_re", "u_im", "min_angle", "argmin_i", "argmin_j")
TRACE_COLUMNS = ("idx", "phi", "u_re", "u_im", "min_angle", "endpoint_tag")
PREDICT_COLUMNS = ("phi", "u_re", "u_im", "realness", "branch_id", "state_labels")
CIRCLE_COLUMNS = ("theta", "phi", "u_re", "u_im", "min_angle")
SPHERE_COLUMNS = ("nu", "eta", "phi", "u_re", "u_im", "min_angle")


def _reject_unknown(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")


@dataclass(frozen=True)
class RunConfig:
    """Validated union of the model / run / output config blocks."""

    model: ModelSpec
    n_fermions: int
    run: dict = field(repr=False)
    out_dir: Path = Path("out")
    formats: str = "csv"
    workers: int = 1

    @staticmethod
    def parse(raw: dict) -> "RunConfig":
        _reject_unknown(raw, {"model", "run", "output"}, "")
        mblock = dict(raw.get("model", {}))
        _reject_unknown(mblock, {"L", "m", "phi", "U", "disorder_sigma", "seed"}, "model")
        try:
            model = ModelSpec(
                L=int(mblock.get("L", 6)),
                m=float(mblock.get("m", 0.7)),
                phi=float(mblock.get("phi", 0.0)),
                U=complex(mblock.get("U", 0.0)),
                disorder_sigma=float(mblock.get("disorder_sigma", 0.0)),
                seed=int(mblock.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad model block: {exc}") from exc
        rblock = dict(raw.get("run", {}))
        n = int(rblock.pop("N", 2))
        if n < 1:
            raise ConfigError("N must be >= 1")
        oblock = dict(raw.get("output", {}))
        _reject_unknown(oblock, {"directory", "formats", "workers"}, "output")
        formats = oblock.get("formats", "csv")
        if formats not in ("csv", "csv+svg", "csv+pgm"):
            raise ConfigError(f"unknown format {formats!r}")
        return RunConfig(
            model=model,
            n_fermions=n,
            run=rblock,
            out_dir=Path(oblock.get("directory", "out")),
            formats=formats,
            workers=int(oblock.get("workers", 1)),
        )

    def serialize(self) -> dict:
        return {
            "model": {
                "L": self.model.L,
                "m": self.model.m,
                "phi": self.model.phi,
                "disorder_sigma": self.model.disorder_sigma,
                "seed": self.model.seed,
            },
            "run": dict(self.run, N=self.n_fermions),
            "output": {"directory": str(self.out_dir), "formats": self.formats,
                       "workers": self.workers},
        }


def load_config(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_bytes()
    if path.suffix == ".json":
        return json.loads(text)
    return tomllib.loads(text.decode())


def _grid_from_config(run: dict) -> scan.GridSpec:
    block = dict(run.get("grid", {}))
    _reject_unknown(block, {"phi", "u", "u_axis", "sector"}, "run.grid")
    phi = block.get("phi", [0.0, 2 * math.pi, 301])
    u = block.get("u", [-2.0, 2.0, 301])
    sector = block.get("sector")
    return scan.GridSpec(
        phi_range=(float(phi[0]), float(phi[1]), int(phi[2])),
        u_range=(float(u[0]), float(u[1]), int(u[2])),
        u_axis=block.get("u_axis", scan.U_AXIS_REAL),
        sector=None if sector is None else int(sector),
    )


def _probe_from_config(run: dict) -> scan.ProbeSpec:
    block = dict(run.get("probe", {}))
    _reject_unknown(
        block,
        {"center_phi", "center_u_re", "center_u_im", "r_phi", "r_u",
         "n_theta", "n_nu", "n_eta", "sector", "threshold"},
        "run.probe",
    )
    center = (
        float(block.get("center_phi", 0.0)),
        complex(float(block.get("center_u_re", 0.0)), float(block.get("center_u_im", 0.0))),
    )
    sector = block.get("sector")
    return scan.ProbeSpec(
        center=center,
        r_phi=float(block.get("r_phi", 0.05)),
        r_u=float(block.get("r_u", 0.05)),
        n_theta=int(block.get("n_theta", 720)),
        n_nu=int(block.get("n_nu", 181)),
        n_eta=int(block.get("n_eta", 91)),
        sector=None if sector is None else int(sector),
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ArtifactWriter:
    """Collects written files, removes them all on failure."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.files.append(p)
        return p

    def write_csv(self, name: str, columns, rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(row)
        return p

    def write_manifest(self, config: RunConfig, extra: dict, wall_time: float) -> Path:
        manifest = {
            "config": config.serialize(),
            "versions": {
                "fermiep": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": sys.version.split()[0],
            },
            "wall_time_s": round(wall_time, 3),
            "artifacts": [
                {"file": f.name, "sha256": _sha256(f)} for f in self.files if f.exists()
            ],
        }
        manifest.update(extra)
        p = self.path("manifest.json")
        p.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
        return p

    def cleanup(self) -> None:
        for f in self.files:
            f.unlink(missing_ok=True)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_pgm(path: Path, angles: np.ndarray) -> None:
    """ASCII PGM heatmap; rows follow axis 1 (U), columns axis 0 (phi)."""
    lo, hi = ANGLE_CLAMP
    a = np.clip(np.nan_to_num(angles, nan=hi), lo, hi)
    level = (np.log(a) - math.log(lo)) / (math.log(hi) - math.log(lo))
    img = np.round(255 * level).astype(int).T[::-1]
    lines = [f"P2", f"{img.shape[1]} {img.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in img]
    path.write_text("\n".join(lines) + "\n")


def write_svg(path: Path, angles: np.ndarray) -> None:
    """Rect-per-cell SVG heatmap on the same log scale as the PGM."""
    lo, hi = ANGLE_CLAMP
    a = np.clip(np.nan_to_num(angles, nan=hi), lo, hi)
    level = (np.log(a) - math.log(lo)) / (math.log(hi) - math.log(lo))
    n_phi, n_u = level.shape
    cell = 3
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{n_phi * cell}" height="{n_u * cell}">'
    ]
    for i in range(n_phi):
        for j in range(n_u):
            g = int(round(255 * level[i, j]))
            parts.append(
                f'<rect x="{i * cell}" y="{(n_u - 1 - j) * cell}" '
                f'width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>'
            )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _maybe_heatmap(writer: ArtifactWriter, config: RunConfig, stem: str, angles: np.ndarray) -> None:
    if config.formats == "csv+pgm":
        write_pgm(writer.path(f"{stem}.pgm"), angles)
    elif config.formats == "csv+svg":
        write_svg(writer.path(f"{stem}.svg"), angles)


def _sweep_rows(result: scan.SweepResult):
    phis = result.grid.phi_values
    us = result.grid.u_values
    for i, phi in enumerate(phis):
        for j, u in enumerate(us):
            yield (
                _fmt(phi), _fmt(u.real), _fmt(u.imag),
                _fmt(result.angles[i, j]),
                int(result.argmin_i[i, j]), int(result.argmin_j[i, j]),
            )


def cmd_sweep(config: RunConfig, writer: ArtifactWriter) -> dict:
    _reject_unknown(config.run, {"grid"}, "run")
    grid = _grid_from_config(config.run)
    noise = None
    if config.model.disorder_sigma > 0:
        noise = DisorderRealization.draw(config.model, stream=0)
    result = scan.sweep(grid, config.model, N=config.n_fermions, noise=noise,
                        workers=config.workers)
    writer.write_csv("sweep.csv", SWEEP_COLUMNS, _sweep_rows(result))
    _maybe_heatmap(writer, config, "sweep", result.angles)
    return {"min_angle": float(np.nanmin(result.angles))}


def cmd_probe_circle(config: RunConfig, writer: ArtifactWriter) -> dict:
    _reject_unknown(config.run, {"probe"}, "run")
    probe = _probe_from_config(config.run)
    threshold = float(config.run.get("probe", {}).get("threshold", 1e-2))
    result = scan.circle_probe(probe, config.model, N=config.n_fermions,
                               threshold=threshold)
    phi_c, u_c = probe.center
    rows = []
    for th, ang in zip(result.thetas, result.angles):
        phi = phi_c + probe.r_phi * math.cos(th)
        u = u_c + probe.r_u * math.sin(th)
        rows.append((_fmt(th), _fmt(phi), _fmt(u.real), _fmt(u.imag), _fmt(ang)))
    writer.write_csv("circle.csv", CIRCLE_COLUMNS, rows)
    return {
        "n_dips": result.n_dips,
        "dip_thetas": [float(result.thetas[i]) for i in result.dip_indices],
    }


def cmd_probe_sphere(config: RunConfig, writer: ArtifactWriter) -> dict:
    _reject_unknown(config.run, {"probe"}, "run")
    probe = _probe_from_config(config.run)
    threshold = float(config.run.get("probe", {}).get("threshold", 1e-2))
    result = scan.sphere_probe(probe, config.model, N=config.n_fermions,
                               threshold=threshold)
    phi_c, u_c = probe.center
    rows = []
    for i, nu in enumerate(result.nus):
        for j, eta in enumerate(result.etas):
            phi = phi_c + probe.r_phi * math.cos(nu) * math.sin(eta)
            u = u_c + probe.r_u * math.sin(nu) * math.sin(eta) + 1j * probe.r_u * math.cos(eta)
            rows.append((_fmt(nu), _fmt(eta), _fmt(phi), _fmt(u.real), _fmt(u.imag),
                         _fmt(result.angles[i, j])))
    writer.write_csv("sphere.csv", SPHERE_COLUMNS, rows)
    _maybe_heatmap(writer, config, "sphere", result.angles)
    return {"n_dips": result.n_dips, "dips": [list(d) for d in result.dips]}


def cmd_trace(config: RunConfig, writer: ArtifactWriter) -> dict:
    _reject_unknown(config.run, {"trace"}, "run")
    block = dict(config.run.get("trace", {}))
    _reject_unknown(
        block,
        {"start_phi", "start_u_re", "start_u_im", "sector", "step", "max_steps",
         "direction", "phi_bounds", "u_bounds"},
        "run.trace",
    )
    u0 = complex(float(block.get("start_u_re", 0.0)), float(block.get("start_u_im", 0.0)))
    sector = block.get("sector")
    sector = None if sector is None else int(sector)
    start = scan.refine_ep(float(block["start_phi"]), u0, config.model,
                           N=config.n_fermions, sector=sector)
    if start.status != scan.STATUS_CONFIRMED:
        raise FermiepError("trace start did not refine to an exceptional point")
    direction = block.get("direction")
    line = scan.trace_line(
        start, config.model, N=config.n_fermions, sector=sector,
        step=float(block.get("step", 0.02)),
        max_steps=int(block.get("max_steps", 200)),
        phi_bounds=tuple(block.get("phi_bounds", (0.0, 2 * math.pi))),
        u_bounds=tuple(block.get("u_bounds", (-4.0, 4.0))),
        initial_direction=None if direction is None else tuple(direction),
    )
    rows = []
    for idx, ((phi, u), ang) in enumerate(zip(line.points, line.angles)):
        tag = line.endpoint_tag if idx == len(line.points) - 1 else ""
        rows.append((idx, _fmt(phi), _fmt(u.real), _fmt(u.imag), _fmt(ang), tag))
    writer.write_csv("trace.csv", TRACE_COLUMNS, rows)
    return {"endpoint_tag": line.endpoint_tag, "n_points": len(line.points)}


def _predictions_from_config(config: RunConfig) -> list[perturb.EPPrediction]:
    block = dict(config.run.get("predict", {}))
    _reject_unknown(block, {"kind", "k", "q", "xi", "size", "band", "family",
                            "k_e", "xi_k", "xi_q", "phi", "n_phi"}, "run.predict")
    kind = block.get("kind", "inherited")
    model = config.model
    preds: list[perturb.EPPrediction] = []
    if kind == "inherited":
        twists = solve_exceptional_twists(model)
        for tw in twists:
            for q in range(model.L):
                if q == tw.k_e:
                    continue
                for band in (1, -1):
                    preds.append(
                        perturb.predict_U_inherited(q, band, tw.family, tw.k_e, model)
                    )
    elif kind == "emergent":
        k, q, xi = int(block["k"]), int(block["q"]), int(block.get("xi", 1))
        size = int(block.get("size", 3))
        preds.extend(perturb.predict_U_emergent(size, k, q, xi, model))
    elif kind == "three_fermion":
        family = block.get("family", "M_ZERO")
        preds.append(
            perturb.predict_U_three_fermion(
                family, int(block["k_e"]),
                (int(block["k"]), int(block.get("xi_k", 1))),
                (int(block["q"]), int(block.get("xi_q", 1))),
                model,
            )
        )
    else:
        raise ConfigError(f"unknown prediction kind {kind!r}")
    return preds


def cmd_predict(config: RunConfig, writer: ArtifactWriter) -> dict:
    _reject_unknown(config.run, {"predict"}, "run")
    block = dict(config.run.get("predict", {}))
    phi_lo, phi_hi = block.get("phi", [0.0, 2 * math.pi])[:2]
    n_phi = int(block.get("n_phi", 301))
    preds = _predictions_from_config(config)
    rows = []
    realness_count: dict[str, int] = {}
    for bid, pred in enumerate(preds):
        states = ";".join(repr(s) for s in pred.involved_states)
        seen = set()
        for phi in np.linspace(float(phi_lo), float(phi_hi), n_phi):
            try:
                u = pred.evaluate(float(phi))
            except FermiepError:
                continue
            tag = pred.realness(float(phi))
            seen.add(tag)
            rows.append((_fmt(phi), _fmt(u.real), _fmt(u.imag), tag, bid, states))
        for tag in seen:
            realness_count[tag] = realness_count.get(tag, 0) + 1
    writer.write_csv("predict.csv", PREDICT_COLUMNS, rows)
    return {"n_branches": len(preds), "realness_branch_counts": realness_count}


def cmd_disorder(config: RunConfig, writer: ArtifactWriter) -> dict:
    _reject_unknown(config.run, {"grid", "disorder"}, "run")
    if config.model.disorder_sigma <= 0:
        raise ConfigError("disorder command requires disorder_sigma > 0")
    if config.n_fermions != 2:
        raise ConfigError("disorder sweeps support N=2 only")
    block = dict(config.run.get("disorder", {}))
    _reject_unknown(block, {"realizations"}, "run.disorder")
    n_real = int(block.get("realizations", 3))
    grid = _grid_from_config(config.run)
    if grid.sector is not None:
        raise ConfigError("sector restriction invalid with disorder")
    stack = []
    for r in range(n_real):
        noise = DisorderRealization.draw(config.model, stream=r)
        result = scan.sweep(grid, config.model, N=2, noise=noise,
                            workers=config.workers)
        writer.write_csv(f"sweep_r{r}.csv", SWEEP_COLUMNS, _sweep_rows(result))
        stack.append(result.angles)
    median = np.median(np.array(stack), axis=0)
    rows = []
    for i, phi in enumerate(grid.phi_values):
        for j, u in enumerate(grid.u_values):
            rows.append((_fmt(phi), _fmt(u.real), _fmt(u.imag), _fmt(median[i, j]), -1, -1))
    writer.write_csv("ensemble_median.csv", SWEEP_COLUMNS, rows)
    _maybe_heatmap(writer, config, "ensemble_median", median)
    return {"realizations": n_real, "median_min_angle": float(np.nanmin(median))}


def cmd_selftest(config: RunConfig, writer: ArtifactWriter) -> dict:
    """Small internal battery: twist solver, spectrum additivity, and
    eigensolver biorthogonality on the configured model."""
    from .fock import assemble_h0_many, assemble_hint, enumerate_basis
    from .model import band_energy
    from .spectral import decompose

    checks = {}
    model = ModelSpec(L=config.model.L, m=config.model.m)
    twists = solve_exceptional_twists(model)
    worst = 0.0
    for tw in twists:
        local = ModelSpec(L=model.L, m=model.m, phi=tw.phi_e)
        c = perturb.bloch_coefficients(tw.k_e, local)
        worst = max(worst, min(abs(c.m_k), abs(c.p_k)))
    checks["twist_coefficient_residual"] = worst
    basis = enumerate_basis(model.L, 2)
    local = ModelSpec(L=model.L, m=model.m, phi=1.234)
    H0 = assemble_h0_many(basis, local).matrix
    singles = [band_energy(k, local, b) for k in range(model.L) for b in (1, -1)]
    expected = [0.0] * model.L
    for i in range(len(singles)):
        for j in range(i):
            if i // 2 != j // 2:
                expected.append(singles[i] + singles[j])
    got = sorted(np.linalg.eigvals(H0), key=lambda z: (round(z.real, 8), round(z.imag, 8)))
    want = sorted(np.array(expected, dtype=complex), key=lambda z: (round(z.real, 8), round(z.imag, 8)))
    checks["additivity_residual"] = float(np.abs(np.array(got) - np.array(want)).max())
    H = H0 + 0.37 * assemble_hint(basis).matrix
    dec = decompose(H)
    checks["biorth_residual"] = dec.biorth_residual
    ok = (
        checks["twist_coefficient_residual"] < 1e-10
        and checks["additivity_residual"] < 1e-9
        and checks["biorth_residual"] < 1e-8
    )
    checks["ok"] = ok
    if not ok:
        raise FermiepError(f"selftest failed: {checks}")
    return checks


COMMANDS = {
    "sweep": cmd_sweep,
    "probe-circle": cmd_probe_circle,
    "probe-sphere": cmd_probe_sphere,
    "trace": cmd_trace,
    "predict": cmd_predict,
    "disorder": cmd_disorder,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermiep",
        description="Exceptional points of interacting fermions on twisted rings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="TOML or JSON run configuration")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, default=None,
                       choices=["csv", "csv+svg", "csv+pgm"])
        p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config) if args.config else {}
        if args.out is not None:
            raw.setdefault("output", {})["directory"] = args.out
        if args.format is not None:
            raw.setdefault("output", {})["formats"] = args.format
        if args.workers is not None:
            raw.setdefault("output", {})["workers"] = args.workers
        if args.seed is not None:
            raw.setdefault("model", {})["seed"] = args.seed
        config = RunConfig.parse(raw)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError,
            tomllib.TOMLDecodeError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    writer = ArtifactWriter(config.out_dir)
    t0 = time.perf_counter()
    try:
        summary = COMMANDS[args.command](config, writer)
    except ConfigError as exc:
        writer.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FermiepError, np.linalg.LinAlgError) as exc:
        writer.cleanup()
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        writer.cleanup()
        print(f"io failure: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        writer.write_manifest(config, {"command": args.command, "summary": summary},
                              time.perf_counter() - t0)
    except OSError as exc:
        writer.cleanup()
        print(f"io failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({"command": args.command, "summary": summary}, default=str))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
