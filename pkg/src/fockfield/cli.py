"""Command-line experiment runner.

    fockfield run <experiment> [--config FILE] [--out DIR] [--seed N] [--set key=value ...]

Exit status: 0 success, 2 configuration error, 3 numerical invariant violation.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .csvio import DENSITY_HEADER, WAVE_HEADER, density_rows, wave_rows, write_csv
from .errors import DomainError, InvariantViolation

log = logging.getLogger("fockfield")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

SCHEMAS: dict[str, dict] = {
    "two_slit": {"slit_separation": 20.0, "slit_width": 4.0, "wavenumber": 3.0,
                 "theta_max": 0.5, "points": 2001},
    "which_path": {"slit_separation": 20.0, "slit_width": 4.0, "wavenumber": 3.0,
                   "theta_max": 0.5, "points": 2001, "x_s": 0.0, "efficiency": 1.0},
    "epr": {"alpha": 0.0, "beta": 0.0, "filter": "none", "filter_theta": 0.0},
    "chsh": {"angles": [0.0, float(np.pi / 2), float(np.pi / 4), float(3 * np.pi / 4)], "grid_points": 19},
    "weyl": {"energy": 1.25, "half_width": 0.1, "mass": 1.0, "x_min": -200.0, "x_max": 200.0,
             "points": 2048, "t_max": 10.0, "steps": 10, "periodic": True, "quadrature_points": 64},
    "thermal": {"kelvin": 300.0, "level_energies_ev": [0.0, 0.025], "mass_u": 39.948},
    "decohere": {"c": 0.9, "n_max": 100, "p1": 0.5, "efficiencies": [1.0, 1.0], "random_overlaps": False},
    "cat": {"c": 0.5, "n": 30, "p_live": 0.5, "sigma_coherence": 0.0},
    "oracle": {"pattern": "*", "tolerance_override": None},
}
TOP_LEVEL = {"experiment", "parameters", "output", "seed"}


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    output: str = "out"
    seed: int = 0


# -- config loading ----------------------------------------------------------------


def _key_lines(text: str) -> dict:
    """Map ``key`` / ``parameters.key`` to 1-based source lines."""
    lines = {}
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if not isinstance(node, yaml.MappingNode):
        return lines
    for k, v in node.value:
        lines[k.value] = k.start_mark.line + 1
        if k.value == "parameters" and isinstance(v, yaml.MappingNode):
            for pk, _ in v.value:
                lines[f"parameters.{pk.value}"] = pk.start_mark.line + 1
    return lines


def _where(lines, key, source):
    ln = lines.get(key)
    return f"{source}:{ln}: " if ln else f"{source}: "


def _coerce(name, value, default):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"field '{name}' must be true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"field '{name}' must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field '{name}' must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            raise ConfigError(f"field '{name}' must be a list of numbers, got {value!r}")
        return [float(x) for x in value]
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"field '{name}' must be a string, got {value!r}")
        return value
    return value


def load_config(experiment: str, path: str | None = None, overrides: dict | None = None,
                out: str | None = None, seed: int | None = None) -> ExperimentConfig:
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment '{experiment}'; choose from {', '.join(SCHEMAS)}")
    raw, lines, source = {}, {}, "<flags>"
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{source}: invalid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: top level must be a mapping")
        lines = _key_lines(text)
    for k in raw:
        if k not in TOP_LEVEL:
            raise ConfigError(f"{_where(lines, k, source)}unknown key '{k}' (allowed: {', '.join(sorted(TOP_LEVEL))})")
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"{_where(lines, 'experiment', source)}config is for '{raw['experiment']}', "
                          f"command asked for '{experiment}'")
    schema = SCHEMAS[experiment]
    params = dict(schema)
    given = raw.get("parameters") or {}
    if not isinstance(given, dict):
        raise ConfigError(f"{_where(lines, 'parameters', source)}'parameters' must be a mapping")
    for k, v in list(given.items()) + list((overrides or {}).items()):
        key = f"parameters.{k}"
        loc = _where(lines, key, source) if k in given else "<flags>: "
        if k not in schema:
            raise ConfigError(f"{loc}unknown parameter '{k}' for {experiment} "
                              f"(allowed: {', '.join(sorted(schema))})")
        try:
            params[k] = _coerce(k, v, schema[k])
        except ConfigError as exc:
            raise ConfigError(f"{loc}{exc}") from None
    s = raw.get("seed", 0) if seed is None else seed
    if isinstance(s, bool) or not isinstance(s, int):
        raise ConfigError(f"{_where(lines, 'seed', source)}seed must be an integer")
    output = out if out is not None else raw.get("output", "out")
    return ExperimentConfig(experiment, params, str(output), s)


# -- experiments -------------------------------------------------------------------


def _geometry(p):
    from .waves import Grid1D, SlitGeometry

    g = SlitGeometry(p["slit_separation"], p["slit_width"], p["wavenumber"])
    return g, Grid1D(-p["theta_max"], p["theta_max"], p["points"])


def run_two_slit(p, out: Path, rng):
    from .waves import fringe_zeros, slit_pattern, visibility

    geom, grid = _geometry(p)
    i1 = slit_pattern(geom, 1, grid).intensity()
    i2 = slit_pattern(geom, 2, grid).intensity()
    z = float(fringe_zeros(geom)[0])
    v = visibility(float(i2[grid.index_of(0.0)]), float(i2[grid.index_of(z)]))
    return {"screen.csv": (("theta", "intensity_k1", "intensity_k2", "visibility"),
                           [(x, a, b, v) for x, a, b in zip(grid.x, i1, i2)])}


def which_path_setup(p):
    """Two-slit photon mode ``t``, one-slit re-emission mode ``o``, recoil ``r``."""
    from .fock import ModeSet, create_ket
    from .waves import slit_pattern

    geom, grid = _geometry(p)
    f2 = slit_pattern(geom, 2, grid)
    f1 = slit_pattern(geom, 1, grid, slit=1)
    ms = ModeSet.build(["t", "o", "r"])
    return geom, grid, {"t": f2, "o": f1}, create_ket(ms, "t")


def run_which_path(p, out: Path, rng):
    from .detectors import compton_channel, fringe_visibility, screen_intensity
    from .waves import fringe_zeros

    geom, grid, modes, state = which_path_setup(p)
    before = screen_intensity(state, modes)
    after = compton_channel(state, p["x_s"], {"t": modes["t"]}, {"o": modes["o"]}, "r", p["efficiency"])
    after_i = screen_intensity(after, modes)
    one = modes["o"].intensity()
    z = float(fringe_zeros(geom)[0])
    rows = [(x, a, b, c) for x, a, b, c in zip(grid.x, before, after_i, one)]
    vis = [(name, fringe_visibility(i, grid, 0.0, z)) for name, i in
           (("before", before), ("after", after_i), ("one_slit", one))]
    return {"which_path.csv": (("theta", "intensity_before", "intensity_after", "intensity_one_slit"), rows),
            "visibility.csv": (("pattern", "visibility"), vis)}


def run_epr(p, out: Path, rng):
    from .detectors import BellConfig, FilterSpec, epr_coincidence_table, singlet_state

    if p["filter"] not in ("none", "projection", "spin_flip"):
        raise ConfigError(f"parameter 'filter' must be none, projection or spin_flip, got {p['filter']!r}")
    flt = None if p["filter"] == "none" else FilterSpec(p["filter"], theta=p["filter_theta"])
    t = epr_coincidence_table(singlet_state(), flt, BellConfig(p["alpha"], p["beta"]))
    rows = [(a, b, t[(a, b)]) for a in "+-" for b in "+-"]
    return {"epr.csv": (("spin_1", "spin_2", "probability"), rows)}


def run_chsh(p, out: Path, rng):
    from .detectors import BellConfig, bell_correlation, chsh, chsh_terms, singlet_state

    if len(p["angles"]) != 4:
        raise ConfigError("parameter 'angles' needs four values (alpha1, alpha2, beta1, beta2)")
    s = singlet_state()
    cfg = BellConfig(chsh=tuple(p["angles"]))
    terms = chsh_terms(s, cfg)
    rows = [(k, v) for k, v in terms.items()] + [("S", chsh(s, cfg))]
    ang = np.linspace(0.0, np.pi, p["grid_points"])
    grid = [(a, b, bell_correlation(s, a, b), -np.cos(a - b)) for a in ang for b in ang]
    return {"bell.csv": (("alpha", "beta", "E", "minus_cos"), grid),
            "chsh.csv": (("term", "value"), rows)}


def run_weyl(p, out: Path, rng):
    from .waves import Grid1D, WeylPacket, group_velocity, weyl_peak, weyl_snapshot

    grid = Grid1D(p["x_min"], p["x_max"], p["points"])
    if p["periodic"]:
        # periodic grid: drop the duplicated end point so the period is points * dx
        dx = (p["x_max"] - p["x_min"]) / p["points"]
        grid = Grid1D(p["x_min"], p["x_max"] - dx, p["points"])
    pk = WeylPacket(p["energy"], p["half_width"], p["mass"], quadrature_points=p["quadrature_points"],
                    period=grid.period if p["periodic"] else None)
    times = np.linspace(0.0, p["t_max"], p["steps"] + 1)
    rows = []
    x0 = weyl_peak(pk, grid, 0.0)
    for t in times:
        w = weyl_snapshot(pk, grid, t)
        norm = float(np.sum(np.abs(w) ** 2) * grid.dx)
        xp = weyl_peak(pk, grid, t)
        rows.append((t, xp, (xp - x0) / t if t > 0 else group_velocity(p["energy"], p["mass"]), norm))
    from .waves import WaveMode

    snap = WaveMode(grid, weyl_snapshot(pk, grid, times[-1]), {"t": times[-1]})
    return {"weyl.csv": (("t", "peak", "mean_velocity", "norm"), rows),
            "weyl_snapshot.csv": (WAVE_HEADER, list(wave_rows(snap)))}


def run_thermal(p, out: Path, rng):
    from .density import (AMU_EV, K_B_EV_PER_K, ThermalConfig, argon_localization, boltzmann_entropy,
                          thermal_density)

    if p["kelvin"] <= 0:
        raise ConfigError("parameter 'kelvin' must be positive")
    kt = p["kelvin"] * K_B_EV_PER_K
    rho = thermal_density(ThermalConfig(kt, p["level_energies_ev"]))
    loc = argon_localization(kt, p["mass_u"] * AMU_EV)
    levels = [(i, e, w) for i, (e, w) in enumerate(zip(p["level_energies_ev"], rho.diagonal()))]
    return {"thermal.csv": (("level", "energy_ev", "weight"), levels),
            "localization.csv": (("kelvin", "length_nm", "below_atomic_scale", "entropy"),
                                 [(p["kelvin"], loc.length_nm, loc.below_atomic_scale, boltzmann_entropy(rho))])}


def run_decohere(p, out: Path, rng):
    from .decoherence import EnvironmentModel, decay_curve, entropy_increase_check, measure_with_chain
    from .density import DensityMatrix

    if p["n_max"] < 1:
        raise ConfigError("parameter 'n_max' must be at least 1")
    if not 0 <= p["p1"] <= 1:
        raise ConfigError("parameter 'p1' must lie in [0, 1]")
    sys_rho = DensityMatrix.pure([np.sqrt(p["p1"]), np.sqrt(1 - p["p1"])])
    coh = abs(sys_rho.rho[0, 1]) * np.sqrt(np.prod(p["efficiencies"]))
    if p["random_overlaps"]:
        mags = rng.uniform(0.0, p["c"], p["n_max"])
        phases = rng.uniform(0.0, 2 * np.pi, p["n_max"])
        ov = mags * np.exp(1j * phases)
        rows = []
        for n in range(1, p["n_max"] + 1):
            o = measure_with_chain(sys_rho, EnvironmentModel(n, overlaps=tuple(ov[:n])), p["efficiencies"])
            rows.append((n, o.overlap.magnitude, o.overlap.bound, o.offdiagonal))
    else:
        rows = [(n, m, b, coh * m) for n, m, b in decay_curve(p["c"], p["n_max"])]
        o = measure_with_chain(sys_rho, EnvironmentModel(p["n_max"], p["c"]), p["efficiencies"])
    ent = entropy_increase_check(sys_rho, o)
    return {"decay.csv": (("N", "magnitude", "bound", "offdiagonal"), rows),
            "pointer.csv": (DENSITY_HEADER, list(density_rows(o.reduced_rho))),
            "entropy.csv": (("initial", "final", "increased"), [(ent.initial, ent.final, ent.increased)])}


def run_cat(p, out: Path, rng):
    from .cat import TransitionModel, cat_verdict, final_state_density
    from .decoherence import EnvironmentModel, measure_with_chain
    from .density import DensityMatrix

    pl = p["p_live"]
    if not 0 <= pl <= 1:
        raise ConfigError("parameter 'p_live' must lie in [0, 1]")
    k = p["sigma_coherence"]
    sigma = DensityMatrix([[0.5, k], [k, 0.5]])
    final = final_state_density(TransitionModel.polarization_split(), sigma, DensityMatrix.mixture([1, 1]))
    o = measure_with_chain(DensityMatrix.pure([np.sqrt(pl), np.sqrt(1 - pl)]), EnvironmentModel(p["n"], p["c"]))
    v = cat_verdict(o)
    return {"cat.csv": (("p_live", "p_dead", "offdiagonal", "bound", "verdict"),
                        [(v.p_live, v.p_dead, v.offdiagonal, v.bound, v.verdict)]),
            "final_state.csv": (DENSITY_HEADER, list(density_rows(final)))}


def run_oracle(p, out: Path, rng):
    from .oracle import format_reports, run_oracle_suite

    reports = run_oracle_suite(p["pattern"], p["tolerance_override"])
    print(format_reports(reports))
    rows = [(r.case_id, r.primary, r.oracle, r.abs_deviation, r.rel_deviation, r.tolerance, r.passed, r.skipped)
            for r in reports]
    failed = [r.case_id for r in reports if not r.passed and not r.skipped]
    files = {"oracle.csv": (("case_id", "primary", "oracle", "abs_dev", "rel_dev", "tolerance", "passed", "skipped"),
                            rows)}
    return files, failed


RUNNERS = {
    "two_slit": run_two_slit, "which_path": run_which_path, "epr": run_epr, "chsh": run_chsh,
    "weyl": run_weyl, "thermal": run_thermal, "decohere": run_decohere, "cat": run_cat, "oracle": run_oracle,
}


def run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    result = RUNNERS[cfg.experiment](cfg.parameters, out, rng)
    failed = []
    if isinstance(result, tuple):
        result, failed = result
    checksums = {name: write_csv(out / name, header, rows) for name, (header, rows) in result.items()}
    manifest = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "parameters": cfg.parameters,
        "started_utc": started,
        "finished_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "versions": {"fockfield": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__, "pyyaml": yaml.__version__},
        "sha256": checksums,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name in checksums:
        log.info("wrote %s", out / name)
    if failed:
        raise InvariantViolation("oracle agreement", ", ".join(failed))
    return EXIT_OK


def _parse_set(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = yaml.safe_load(v)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fockfield", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment", choices=sorted(SCHEMAS))
    r.add_argument("--config", help="YAML file with experiment, parameters, output, seed")
    r.add_argument("--out", help="output directory (default: config 'output' or ./out)")
    r.add_argument("--seed", type=int, help="seed for randomized sweeps")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter (repeatable)")
    r.add_argument("--c", type=float, help="shorthand for --set c=...")
    r.add_argument("--n-max", type=int, dest="n_max", help="shorthand for --set n_max=...")
    sub.add_parser("schema", help="print every experiment's parameters and defaults")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "schema":
        print(yaml.safe_dump(SCHEMAS, sort_keys=True), end="")
        return EXIT_OK
    try:
        overrides = _parse_set(args.set)
        if args.c is not None:
            overrides["c"] = args.c
        if args.n_max is not None:
            overrides["n_max"] = args.n_max
        cfg = load_config(args.experiment, args.config, overrides, args.out, args.seed)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
