"""Command-line entry point: ``blowuplab <subcommand> [options]``.

Exit status: 0 success, 1 inequality check violated, 2 invalid input or
unknown subcommand, 3 numerical failure.  CSV outputs start with ``#``
header lines echoing the tool version, subcommand and configuration;
wall-clock timestamps go to a ``<out>.manifest.json`` sidecar so that the
CSV itself is bit-identical across reruns.
"""
import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

from .config import LabConfig, emit, format_value, parse_config
from .errors import (BlowupLabError, InvalidParameter, NoBlowup, NumericalFailure, ParseError,
                     ValidationError)

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
SUBCOMMANDS = ("exponents", "regions", "rescale", "eigenmode", "mode", "run", "sweep", "kato",
               "check")


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_value(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


class Output:
    """Writes CSV artifacts with a deterministic header and a timestamped sidecar."""

    def __init__(self, subcommand, argv, config=None, stdout=None):
        self.subcommand = subcommand
        self.argv = list(argv)
        self.config = config
        self.stdout = stdout or sys.stdout
        self.started = datetime.now(timezone.utc).isoformat()
        self.paths = []

    def header(self):
        lines = [f"# tool = blowuplab {tool_version()}", f"# subcommand = {self.subcommand}"]
        if self.config is not None:
            section = ""
            for raw in emit(self.config).splitlines():
                if raw.startswith("["):
                    section = raw[1:-1]
                elif raw:
                    lines.append(f"# config {section}.{raw}")
        return lines

    def csv(self, path, names, rows):
        buf = io.StringIO()
        for line in self.header():
            buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        if path is None or path == "-":
            self.stdout.write(buf.getvalue())
            return
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        self.paths.append(path)

    def json(self, obj, path=None):
        text = json.dumps(_jsonable(obj), indent=2, sort_keys=True)
        if path is None:
            self.stdout.write(text + "\n")
            return
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        self.paths.append(path)

    def manifest(self):
        for path in list(self.paths):
            if path.endswith(".manifest.json"):
                continue
            data = {"tool": "blowuplab", "version": tool_version(), "subcommand": self.subcommand,
                    "argv": self.argv, "started": self.started,
                    "finished": datetime.now(timezone.utc).isoformat(), "outputs": self.paths,
                    "config": emit(self.config) if self.config is not None else None}
            with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
                json.dump(data, fh, indent=2)


def _load(args):
    return parse_config(args.config) if getattr(args, "config", None) else LabConfig()


def cmd_exponents(args, out):
    from .exponents import glassey_exponent, strauss_exponent

    dims = args.dim if args.dim else [2, 3, 4, 5]
    rows = [(n, strauss_exponent(n), glassey_exponent(n)) for n in dims]
    if args.out or args.csv:
        out.csv(args.out, ["n", "p_S", "p_G"], rows)
    else:
        out.stdout.write(f"{'n':>3} {'p_S':>20} {'p_G':>20}\n")
        for n, ps, pg in rows:
            out.stdout.write(f"{n:>3} {ps:>20.17g} {pg:>20.17g}\n")
    return EXIT_OK


def cmd_regions(args, out):
    from .exponents import classification_grid

    q, p, reg, ex = classification_grid(args.dim, args.resolution,
                                        (args.q_min, args.q_max), (args.p_min, args.p_max),
                                        args.c1, args.c2)
    rows = [(q[j], p[i], reg[i, j], ex[i, j]) for i in range(len(p)) for j in range(len(q))]
    out.csv(args.out, ["q", "p", "regime", "alpha"], rows)
    return EXIT_OK


def cmd_rescale(args, out):
    from .rescale import DampingProfile, build_rescaling, check_identities

    damping = DampingProfile.from_params(args.mu, args.beta)
    resc = build_rescaling(damping, args.t_max)
    t = np.linspace(0.0, args.t_max, args.samples)
    s = resc.h(t)
    rows = zip(t, resc.m(t), s, resc.m_tilde(s))
    out.csv(args.out, ["t", "m", "s", "m_tilde"], rows)
    if args.out:
        ident = check_identities(resc)
        out.json({"k": resc.k, "delta1": resc.delta1, "inverse_residual": resc.residual,
                  "eta_residual": ident.eta_residual, "m_tilde_residual": ident.m_tilde_residual})
    return EXIT_OK


def cmd_eigenmode(args, out):
    from .eigenmode import solve_eigenmode, verify_hypothesis
    from .metric import make_profile

    prof = make_profile(args.family, args.a, args.rho, args.dim)
    mode = solve_eigenmode(prof, args.lam, r_max=args.r_max, h=args.h)
    verdict = verify_hypothesis(mode)
    stride = max(1, len(mode.r) // args.samples)
    sl = slice(None, None, stride)
    ratio = mode.envelope_ratio()
    if args.out:
        out.csv(args.out, ["r", "r_tilde", "phi", "envelope_ratio"],
                zip(mode.r[sl], mode.r_tilde[sl], mode.phi[sl], ratio[sl]))
    out.json({"passed": verdict.passed, "c": verdict.c, "growth": verdict.growth,
              "plateau_variation": verdict.plateau_variation})
    return EXIT_OK


def cmd_mode(args, out):
    from .rescale import DampingProfile, build_rescaling
    from .temporal_mode import extrapolated_limit, nu_bounds, solve_decaying_mode, verify_levinson

    resc = build_rescaling(DampingProfile.from_params(args.mu, args.beta), args.t_max)
    mode = solve_decaying_mode(resc, args.lam, args.t_max)
    rep = verify_levinson(mode)
    if args.out:
        out.csv(args.out, ["t", "phi", "nu", "log_phi"],
                zip(mode.t, mode.phi, mode.nu, mode.log_phi))
    out.json({"k": mode.k, "nu_end": float(mode.nu[-1]), "nu_limit": mode.lam * mode.k,
              "nu_extrapolated": extrapolated_limit(mode), "delta2": nu_bounds(mode),
              "plateau": rep.plateau, "variation": rep.variation, "converged": rep.converged,
              "slow": rep.slow})
    return EXIT_OK


def cmd_run(args, out):
    from .wave_solver import run

    cfg = out.config
    eps = args.eps if args.eps is not None else cfg.data.eps
    rep = run(cfg.solver_config(), eps, cfg.solver.mode, refine=not args.no_refine)
    summary = rep.as_dict()
    summary["eps"] = eps
    summary["regime"] = cfg.regime().regime
    if args.out:
        out.csv(args.out, ["s", "t", "sup_u", "sup_v"], rep.trace)
    out.json(summary)
    return EXIT_OK


def cmd_sweep(args, out):
    from .blowup_lab import KatoProblem, sweep

    cfg = out.config
    eps = args.eps_start * args.eps_factor ** np.arange(args.eps_count)
    if args.mode == "pde":
        template = cfg.solver_config()
    else:
        s = cfg.solver
        if args.form == "first_order":
            a = args.a if args.a is not None else 0.5 * (s.n - 1) * (s.p - 1)
            template = KatoProblem(s.p, a, float(eps[0]), args.kappa)
        else:
            a = args.a if args.a is not None else s.n * (s.q - 1)
            template = KatoProblem(s.q, a, float(eps[0]), args.kappa, "second_order")
    fit = sweep(template, eps, mode=args.mode, solver_mode=cfg.solver.mode)
    rows = [(r.eps, r.T, r.consistent) for r in fit.rows]
    if args.out:
        out.csv(args.out, ["eps", "T", "consistent"], rows)
        out.json(fit.summary(), args.out + ".summary.json")
    out.json(fit.summary())
    return EXIT_OK


def cmd_kato(args, out):
    from .blowup_lab import KatoProblem, comparison_time, kato_blowup_time

    pr = KatoProblem(args.p, args.a, args.eps, args.kappa, args.form, eps1=args.eps1)
    res = kato_blowup_time(pr, args.method)
    data = {"T": res.T, "log1p_T": res.log1p_T, "method": res.method}
    if args.form == "second_order":
        data["comparison_T"] = comparison_time(pr, res.T)
    out.json(data)
    return EXIT_OK


def cmd_check(args, out):
    from .diagnostics import check_inequalities, record_trace, trace_table

    cfg = out.config
    eps = args.eps if args.eps is not None else cfg.data.eps
    trace = record_trace(cfg.solver_config(), eps, lam=cfg.solver.lam)
    rep = check_inequalities(trace)
    if args.out:
        names, table = trace_table(trace, rep)
        out.csv(args.out, names, table)
    out.json({"passed": rep.passed, "margins": rep.margins, "fitted": rep.fitted,
              "tol_factor": rep.tol_factor, "blown_up": trace.report.blown_up,
              "T_num": trace.report.T_num, "steps": len(trace)})
    return EXIT_OK if rep.all_passed else EXIT_CHECK


def build_parser():
    ap = argparse.ArgumentParser(prog="blowuplab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("exponents", help="critical exponents per dimension")
    p.add_argument("--dim", type=int, action="append")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("regions", help="regime classification on a (q, p) grid")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--q-min", type=float, default=1.05)
    p.add_argument("--q-max", type=float, default=5.0)
    p.add_argument("--p-min", type=float, default=1.05)
    p.add_argument("--p-max", type=float, default=5.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--out")

    p = sub.add_parser("rescale", help="tabulate the time change for a damping profile")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--out")

    p = sub.add_parser("eigenmode", help="radial eigenfunction and growth envelope")
    p.add_argument("--family", default="flat")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=20.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--out")

    p = sub.add_parser("mode", help="decaying temporal mode")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=1000.0)
    p.add_argument("--out")

    for name, helptext in (("run", "one PDE run with refinement check"),
                           ("check", "functional inequality replay")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config")
        p.add_argument("--eps", type=float)
        p.add_argument("--out")
        if name == "run":
            p.add_argument("--no-refine", action="store_true")

    p = sub.add_parser("sweep", help="lifespan scaling over an eps list")
    p.add_argument("--config")
    p.add_argument("--mode", choices=("pde", "ode"), default="ode")
    p.add_argument("--form", choices=("first_order", "second_order"), default="first_order")
    p.add_argument("--a", type=float)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--eps-start", type=float, default=1e-2)
    p.add_argument("--eps-factor", type=float, default=0.5)
    p.add_argument("--eps-count", type=int, default=6)
    p.add_argument("--out")

    p = sub.add_parser("kato", help="blow-up time of a Kato problem")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--eps1", type=float)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--form", choices=("first_order", "second_order"), default="first_order")
    p.add_argument("--method", choices=("closed", "numeric"))
    return ap


HANDLERS = {"exponents": cmd_exponents, "regions": cmd_regions, "rescale": cmd_rescale,
            "eigenmode": cmd_eigenmode, "mode": cmd_mode, "run": cmd_run, "sweep": cmd_sweep,
            "kato": cmd_kato, "check": cmd_check}


def dispatch(argv, stdout=None, stderr=None):
    """Run one subcommand and return its exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            build_parser().print_help(stdout)
            return EXIT_OK
        stderr.write(f"blowuplab: unknown subcommand {argv[0] if argv else '(none)'}; "
                     f"choose from {', '.join(SUBCOMMANDS)}\n")
        return EXIT_INVALID
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        config = _load(args) if args.command in ("run", "sweep", "check") else None
        out = Output(args.command, argv, config, stdout)
        status = HANDLERS[args.command](args, out)
        out.manifest()
        return status
    except (ParseError, ValidationError, InvalidParameter, NoBlowup, OSError) as exc:
        stderr.write(f"blowuplab: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    except NumericalFailure as exc:
        stderr.write(f"blowuplab: numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except BlowupLabError as exc:
        stderr.write(f"blowuplab: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
