"""Command-line driver.

    kerrcheck verify    [--config FILE] [--out FILE] [--suite NAME]
    kerrcheck table     [--config FILE] [--out FILE]
    kerrcheck evolve    [--config FILE] [--out FILE]
    kerrcheck modes     [--config FILE] [--out FILE]
    kerrcheck transform [--config FILE] [--out FILE]

Configuration is an INI file; every section and key is listed in
:data:`SCHEMA` with its default, and anything else is rejected.  Exit
status: 0 all checks pass, 1 some check fails, 2 configuration or domain
error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys

import numpy as np

from . import frames, horizontal, rw_evolver, suites
from .kerr_metric import DomainError, KerrParams, metric_tensor
from .sampler import SampleSpec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _words(text):
    return tuple(v for v in text.replace(",", " ").split() if v)


#: section -> key -> (parser, default)
SCHEMA = {
    "sample": {
        "seed": (int, 0),
        "n_points": (int, 500),
        "r_min": (float, 1.05),  # multiple of r_+
        "r_max": (float, 20.0),  # units of m
        "theta_margin": (float, 0.1),
        "a_over_m": (_floats, (0.0, 0.05, 0.3, 0.7)),
        "m": (_floats, (0.5, 1.0, 2.0)),
        "n_transforms": (int, 100),
    },
    "verify": {
        "suites": (_words, suites.SUITES),
        "transform_points": (int, 20),
        "commutator_points": (int, 10),
        "sphere_radii": (_floats, (3.0, 6.0, 12.0)),
    },
    "table": {
        "a": (float, 0.3),
        "m": (float, 1.0),
        "r": (float, 3.0),
        "theta": (float, 1.0),
        "phi": (float, 0.0),
    },
    "evolve": {
        "m": (float, 1.0),
        "ell": (int, 2),
        "rstar_min": (float, -200.0),
        "rstar_max": (float, 400.0),
        "n_points": (int, 8193),
        "cfl": (float, 0.5),
        "t_end": (float, 300.0),  # units of m
        "bc": (str, "outgoing"),
        "center_r": (float, 3.0),  # areal radius of the pulse centre, units of m
        "width": (float, 2.0),
        "amplitude": (float, 1.0),
        "r_obs": (float, 10.0),  # units of m
        "record_every": (int, 10),
        "refine": (_bool, False),
    },
    "modes": {
        "a": (float, 0.0),
        "m": (float, 1.0),
        "r": (float, 3.0),
        "field": (str, "cos"),
        "n_theta": (int, 64),
        "n_phi": (int, 64),
    },
    "transform": {
        "a": (float, 0.3),
        "m": (float, 1.0),
        "r": (float, 3.0),
        "theta": (float, 1.0),
        "phi": (float, 0.0),
        "f1": (float, 0.1),
        "f2": (float, -0.05),
        "fb1": (float, 0.02),
        "fb2": (float, 0.2),
        "lam": (float, 1.5),
    },
}

MODE_FIELDS = {
    "const": lambda th, ph: np.ones_like(th),
    "cos": lambda th, ph: np.cos(th),
    "sin_cos": lambda th, ph: np.sin(th) * np.cos(ph),
    "sin_sin": lambda th, ph: np.sin(th) * np.sin(ph),
}


def load_config(path: str | None) -> dict:
    """Parse ``path`` against :data:`SCHEMA`; missing keys take defaults."""
    cfg = {sec: {k: default for k, (_, default) in keys.items()} for sec, keys in SCHEMA.items()}
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, text in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            conv = SCHEMA[sec][key][0]
            try:
                cfg[sec][key] = conv(text)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{key}: {text!r}") from exc
    return cfg


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([fmt(v) for v in row] for row in rows)
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def sample_spec(cfg) -> SampleSpec:
    s = cfg["sample"]
    return SampleSpec(
        seed=s["seed"],
        n_points=s["n_points"],
        r_range=(s["r_min"], s["r_max"]),
        theta_margin=s["theta_margin"],
        a_over_m=s["a_over_m"],
        m=s["m"],
        n_transforms=s["n_transforms"],
    )


# -- commands ----------------------------------------------------------------
def cmd_verify(cfg, out=None, suite=None) -> int:
    spec = sample_spec(cfg)
    v = cfg["verify"]
    selected = (suite,) if suite else v["suites"]
    unknown = [s for s in selected if s not in suites.SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(suites.SUITES)}")
    opts = suites.VerifyOptions(
        transform_points=v["transform_points"],
        commutator_points=v["commutator_points"],
        sphere_radii=v["sphere_radii"],
    )
    rows = suites.run_suites(spec, selected, opts)
    _emit(_csv(suites.REPORT_HEADER, [r.fields() for r in rows]), out)
    failed = sum(not r.passed for r in rows)
    print(f"verify: {len(rows)} rows, {failed} failed", file=sys.stderr)
    return report_status(rows)


def report_status(rows) -> int:
    return EXIT_FAIL if any(not r.passed for r in rows) else EXIT_OK


TABLE_HEADER = ("quantity", "re_computed", "im_computed", "re_kerr", "im_kerr", "rel_err")
TABLE_TOL = 1e-10


def table_rows(params: KerrParams, p) -> list:
    """(quantity, computed, kerr, rel_err) for every entry of the Kerr table."""
    p = np.asarray(p, dtype=float)
    frames.principal_frame(params, p)  # domain checks
    rc = horizontal.ricci_coefficients(params, None, p)
    cc = horizontal.curvature_components(params, None, p)
    jk = horizontal.jk_form(params, p)
    kv = horizontal.kerr_values(params.a, params.m, p[1], p[2], jk)
    absP = abs(complex(kv["P"]))
    rows = []

    def add(name, comp, ref, scale=None):
        comp, ref = complex(comp), complex(ref)
        den = scale if scale is not None else (abs(ref) if abs(ref) > 0 else absP)
        rows.append((name, comp, ref, abs(comp - ref) / den))

    add("P", cc.P, kv["P"])
    add("trX", rc.trX, kv["trX"])
    add("trXb", rc.trXb, kv["trXb"])
    for name, val in (("Z", rc.Z), ("H", rc.H), ("Hb", rc.Hb)):
        ref = kv[name]
        scale = float(np.abs(ref).max()) or absP
        for k in range(2):
            add(f"{name}_{k + 1}", val[k], ref[k], scale)
    for name, val in (("B", cc.B), ("Bb", cc.Bb)):
        for k in range(2):
            add(f"{name}_{k + 1}", val[k], 0.0, absP)
    for name, val in (("A", cc.A), ("Ab", cc.Ab), ("Xhat", rc.Xhat), ("Xbhat", rc.Xbhat)):
        for i in range(2):
            for j in range(2):
                add(f"{name}_{i + 1}{j + 1}", val[i, j], 0.0, absP)
    return rows


def cmd_table(cfg, out=None) -> int:
    t = cfg["table"]
    params = KerrParams(t["a"], t["m"])
    rows = table_rows(params, [0.0, t["r"], t["theta"], t["phi"]])
    body = [(n, c.real, c.imag, k.real, k.imag, e) for n, c, k, e in rows]
    _emit(_csv(TABLE_HEADER, body), out)
    return EXIT_FAIL if any(not e < TABLE_TOL for *_, e in rows) else EXIT_OK


def evolve_setup(e):
    m = e["m"]
    if m < 0:
        raise ConfigError("evolve.m must be non-negative")
    if e["bc"] not in rw_evolver.BOUNDARY_CONDITIONS:
        raise ConfigError(f"evolve.bc must be one of {rw_evolver.BOUNDARY_CONDITIONS}")
    if e["cfl"] > rw_evolver.CFL_MAX or e["cfl"] <= 0:
        raise ConfigError(f"evolve.cfl must lie in (0, {rw_evolver.CFL_MAX}]")
    grid = rw_evolver.Grid1D.with_cfl(e["rstar_min"], e["rstar_max"], e["n_points"], e["cfl"])
    unit = m if m > 0 else 1.0
    pot = rw_evolver.rw_potential(e["ell"], m, grid)
    center = float(rw_evolver.tortoise(e["center_r"] * unit, m))
    psi0, pi0 = rw_evolver.gaussian_data(grid, center, e["width"] * unit, e["amplitude"])
    return grid, pot, psi0, pi0, unit


def cmd_evolve(cfg, out=None) -> int:
    e = cfg["evolve"]
    grid, pot, psi0, pi0, unit = evolve_setup(e)
    hist = rw_evolver.run(
        grid,
        pot,
        psi0,
        pi0,
        t_end=e["t_end"] * unit,
        bc=e["bc"],
        r_obs=e["r_obs"] * unit,
        record_every=e["record_every"],
    )
    rep = rw_evolver.decay_report(hist)
    energies = hist.column("E_total")
    footer = {
        "energy_drift": rw_evolver.energy_drift(hist),
        "max_energy_increase": float(np.max(np.diff(energies), initial=0.0)),
        "local_energy_drop_orders": rep.drop_orders,
        "tail_slope": rep.slope,
        "tail_slope_ci95_low": rep.slope_ci[0],
        "tail_slope_ci95_high": rep.slope_ci[1],
    }
    if e["refine"]:
        footer["convergence_order"] = rw_evolver.self_convergence(pot.m, pot.ell)
    _emit(hist.to_csv(footer), out)
    status = EXIT_OK
    e0 = abs(energies[0]) or 1.0
    if e["bc"] == "reflecting" and not footer["energy_drift"] < 1e-6:
        status = EXIT_FAIL
    if e["bc"] == "outgoing" and not footer["max_energy_increase"] <= 1e-10 * e0:
        status = EXIT_FAIL
    if e["refine"] and not abs(footer["convergence_order"] - 2.0) <= 0.15:
        status = EXIT_FAIL
    return status


def cmd_modes(cfg, out=None) -> int:
    c = cfg["modes"]
    if c["field"] not in MODE_FIELDS:
        raise ConfigError(f"modes.field must be one of {sorted(MODE_FIELDS)}")
    params = KerrParams(c["a"], c["m"])
    i0, ip, im = horizontal.ell1_modes(MODE_FIELDS[c["field"]], params, c["r"], c["n_theta"], c["n_phi"])
    area = 4 * math.pi * c["r"] ** 2
    _emit(_csv(("field", "r", "I0", "I_plus", "I_minus", "area_4pi_r2"), [(c["field"], c["r"], i0, ip, im, area)]), out)
    return EXIT_OK


def cmd_transform(cfg, out=None) -> int:
    c = cfg["transform"]
    params = KerrParams(c["a"], c["m"])
    p = np.array([0.0, c["r"], c["theta"], c["phi"]])
    x = frames.FrameTransform(f=(c["f1"], c["f2"]), fb=(c["fb1"], c["fb2"]), lam=c["lam"])
    base = frames.principal_frame(params, p)
    g = metric_tensor(params, p)
    inv = frames.frame_invariants(g, frames.transform_frame(base, x))
    rt = frames.round_trip_residual(g, base, x)
    rows = [(name, float(v), 1e-10) for name, v in inv.items()]
    rows.append(("roundtrip_null_pair", float(rt["null_pair"]), 1e-9))
    rows.append(("roundtrip_horizontal", float(rt["horizontal"]), 1e-9))
    body = [(n, v, tol, int(v < tol)) for n, v, tol in rows]
    body.append(("horizontal_rotation_angle", rt["angle"], float("inf"), 1))
    _emit(_csv(("invariant", "residual", "tolerance", "pass"), body), out)
    return EXIT_FAIL if any(not v < tol for _, v, tol in rows) else EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "table": cmd_table,
    "evolve": cmd_evolve,
    "modes": cmd_modes,
    "transform": cmd_transform,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kerrcheck", description="Kerr geometry verification toolkit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--suite", help="run a single verify suite")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.suite)
        if args.suite:
            raise ConfigError("--suite only applies to verify")
        return COMMANDS[args.command](cfg, args.out)
    except (ConfigError, DomainError, rw_evolver.CFLError, ValueError) as exc:
        print(f"kerrcheck: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
