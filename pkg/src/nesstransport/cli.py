"""Command-line interface.

Exit codes: 0 success, 1 computation or validation failure, 2 invalid input.
Tabular output is CSV with 17 significant digits and ``\\n`` line endings.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys

import numpy as np

from . import fcs, timeevo, transport
from .config import load_config, with_numerics
from .errors import ComputationError, InvalidInput
from .numerics import EnergyGrid
from .scattering import transmittance_sweep
from .validate import run_all

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _fmt(x):
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


@contextlib.contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _write_csv(path, header, rows):
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _config(args):
    cfg = load_config(args.config)
    if args.tol is not None:
        if not args.tol > 0:
            raise InvalidInput("--tol must be positive")
        cfg = with_numerics(cfg, abs_tol=args.tol)
    return cfg


def cmd_smatrix(args):
    cfg = _config(args)
    M = cfg.spec.M
    grid = EnergyGrid.uniform(args.emin, args.emax, args.n)
    data = transmittance_sweep(cfg.spec, grid)
    pairs = [(j, k) for j in range(M) for k in range(M)]
    header = (["eps"] + [f"re_s_{j}{k}" for j, k in pairs] + [f"im_s_{j}{k}" for j, k in pairs]
              + [f"T_{j}{k}" for j, k in pairs])
    rows = []
    for d in data:
        rows.append([d.eps] + [d.s[j, k].real for j, k in pairs] + [d.s[j, k].imag for j, k in pairs]
                    + [d.transmittance[j, k] for j, k in pairs])
    _write_csv(args.out, header, rows)


def cmd_currents(args):
    cfg = _config(args)
    rep = transport.current_report(cfg.spec, cfg.numerics.abs_tol)
    rows = [
        [k, rep.particle_current[k], rep.energy_current[k], rep.heat_current[k]]
        for k in range(cfg.spec.M)
    ]
    _write_csv(args.out, ["lead", "particle", "energy", "heat"], rows)
    print(
        f"Ep={_fmt(rep.entropy_production)} residual_particle={_fmt(rep.conservation_residual_particle)}"
        f" residual_energy={_fmt(rep.conservation_residual_energy)}"
        f" quadrature_error={_fmt(rep.quadrature_error_estimate)}",
        file=sys.stderr,
    )


def cmd_onsager(args):
    cfg = _config(args)
    L = transport.onsager_matrix(cfg.spec, cfg.eq, args.method, cfg.numerics.abs_tol)
    M = cfg.spec.M
    labels = [f"{a}{k}" for a in "ep" for k in range(M)]
    rows = [[labels[i]] + list(L.L[i]) for i in range(2 * M)]
    _write_csv(args.out, ["row"] + labels, rows)


def _field(M, lead, kind, value):
    v = np.zeros(2 * M)
    v[(0 if kind == "energy" else M) + lead] = value
    return fcs.CountingField.from_vector(v)


def _check_lead(cfg, lead):
    if not 0 <= lead < cfg.spec.M:
        raise InvalidInput(f"lead {lead} out of range for M={cfg.spec.M}")


def cmd_fcs(args):
    cfg = _config(args)
    _check_lead(cfg, args.lead)
    if args.n < 1:
        raise InvalidInput("--n must be positive")
    rows = []
    for x in np.linspace(args.min, args.max, args.n):
        val = fcs.cumulant_generating(cfg.spec, _field(cfg.spec.M, args.lead, args.kind, x), cfg.numerics.fcs_tol)
        rows.append([x, val.value, val.quadrature_error])
    _write_csv(args.out, ["field", "e_plus", "quadrature_error"], rows)


def cmd_ldp(args):
    cfg = _config(args)
    _check_lead(cfg, args.lead)
    if args.n < 1:
        raise InvalidInput("--n must be positive")
    rows = [[q, fcs.rate_function(cfg.spec, q, lead=args.lead)] for q in np.linspace(args.qmin, args.qmax, args.n)]
    _write_csv(args.out, ["q", "rate"], rows)


def cmd_evolve(args):
    cfg = _config(args)
    _check_lead(cfg, args.lead)
    R = args.R or cfg.numerics.R
    fin = timeevo.build_finite(cfg.spec, R)
    tmax = args.tmax if args.tmax is not None else cfg.numerics.window[1] * R
    times = np.linspace(0.0, tmax, args.n)
    cur = timeevo.current_vs_time(fin, args.lead, args.kind, times)
    _write_csv(args.out, ["t", "current"], zip(times, cur))
    plateau = timeevo.plateau_current(fin, args.lead, args.kind, cfg.numerics.window, cfg.numerics.time_samples)
    print(f"plateau={_fmt(plateau)}", file=sys.stderr)


def cmd_validate(args):
    cfg = _config(args)
    results = run_all(cfg)
    with _sink(args.out) as fh:
        for r in results:
            fh.write(r.line() + "\n")
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="nesstransport", description="Landauer-Buttiker transport and full counting statistics for lattice quantum dots.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--tol", type=float, default=None, help="override the quadrature tolerance")
        sp.set_defaults(func=func)
        return sp

    s = add("smatrix", cmd_smatrix, "S-matrix and transmittances on an energy grid")
    s.add_argument("--emin", type=float, default=-0.95)
    s.add_argument("--emax", type=float, default=0.95)
    s.add_argument("--n", type=int, default=191)

    add("currents", cmd_currents, "steady currents, heat currents and entropy production")

    s = add("onsager", cmd_onsager, "Onsager matrix at the reference equilibrium")
    s.add_argument("--method", choices=("direct", "fcs"), default="direct")

    s = add("fcs", cmd_fcs, "cumulant generating function along one counting field")
    s.add_argument("--lead", type=int, default=0)
    s.add_argument("--kind", choices=transport.KINDS, default="particle")
    s.add_argument("--min", type=float, default=-1.0)
    s.add_argument("--max", type=float, default=1.0)
    s.add_argument("--n", type=int, default=21)

    s = add("ldp", cmd_ldp, "particle-current rate function of one lead")
    s.add_argument("--lead", type=int, default=0)
    s.add_argument("--qmin", type=float, required=True)
    s.add_argument("--qmax", type=float, required=True)
    s.add_argument("--n", type=int, default=21)

    s = add("evolve", cmd_evolve, "current versus time on a truncated lattice")
    s.add_argument("--lead", type=int, default=0)
    s.add_argument("--kind", choices=transport.KINDS, default="particle")
    s.add_argument("--R", type=int, default=None, help="lead length (default from config)")
    s.add_argument("--tmax", type=float, default=None)
    s.add_argument("--n", type=int, default=201)

    add("validate", cmd_validate, "run the cross-module identity checks")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except (InvalidInput, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ComputationError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK if code is None else code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
