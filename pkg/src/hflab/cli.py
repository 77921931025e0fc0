"""Command-line front end.

Every subcommand writes its tables into ``--out`` (CSV and/or JSON as
chosen by ``--format``) plus a ``run.json`` manifest with the resolved
parameters and library versions.  Exit codes: 0 success, 1 configuration
error, 2 convergence failure, 3 numerical or conditioning failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from pathlib import Path

import mpmath
import numpy as np
import scipy

from . import __version__, gauge, greens, models, scattering, tunneling
from .analysis import count_nodes
from .errors import ConfigurationError, HFLabError
from .grid import MAPPINGS, PlotTransform, build_grid, plot_scale
from .scf.atoms import AtomSpec, load_atom, parse_shells
from .scf.io import orbital_csv, result_from_json, result_to_json
from .scf.solver import SCHEMES, SCFOptions, solve
from .scf.tails import refine_tail

log = logging.getLogger("hflab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=float) + "\n"


# ---------------------------------------------------------------------------
# Shared inputs
# ---------------------------------------------------------------------------


def _add_grid(p):
    g = p.add_argument_group("grid")
    g.add_argument("--r-min", type=float, default=1e-6)
    g.add_argument("--r-max", type=float, default=60.0)
    g.add_argument("--points", type=int, default=2000)
    g.add_argument("--mapping", choices=MAPPINGS, default="log-uniform")
    g.add_argument("--linear-scale", type=float, default=1.0)


def _add_atom(p, scheme_default="hf"):
    _add_grid(p)
    a = p.add_argument_group("atom")
    a.add_argument("--atom", default=None, help="builtin symbol or key-value config file")
    a.add_argument("--shells", default=None, help='inline configuration, e.g. "1s2 2s2 2p6"')
    a.add_argument("--Z", type=int, default=None, help="nuclear charge for --shells")
    a.add_argument("--scheme", choices=SCHEMES, default=scheme_default)
    a.add_argument("--mixing", type=float, default=0.3)
    a.add_argument("--max-iterations", type=int, default=300)
    a.add_argument("--from-result", default=None, help="reuse a state.json written by solve --save-state")


def _atom(args) -> AtomSpec:
    if args.shells is not None:
        if args.Z is None:
            raise ConfigurationError("--shells needs --Z")
        atom = AtomSpec(args.Z, parse_shells(args.shells), name=f"Z{args.Z}")
    elif args.atom is not None:
        atom = load_atom(args.atom)
    else:
        raise ConfigurationError("give --atom or --shells with --Z")
    if atom.electron_count != atom.Z:
        log.warning("electron count %d differs from Z=%d (ion)", atom.electron_count, atom.Z)
    return atom


def _grid(args):
    return build_grid(args.r_min, args.r_max, args.points, args.mapping, args.linear_scale)


def _core(args, scheme=None):
    if args.from_result:
        res = result_from_json(Path(args.from_result).read_text())
        if scheme is not None and res.scheme != scheme:
            raise ConfigurationError(f"saved result uses scheme {res.scheme}, need {scheme}")
        return res
    opts = SCFOptions(mixing=args.mixing, max_iterations=args.max_iterations)
    return solve(_atom(args), _grid(args), scheme or args.scheme, opts)


# ---------------------------------------------------------------------------
# Subcommands: each returns {filename: text} and a short summary
# ---------------------------------------------------------------------------


def cmd_solve(args):
    res = _core(args)
    out = {"result.json": result_to_json(res) + "\n"}
    if args.save_state:
        out["state.json"] = result_to_json(res, include_radial=True) + "\n"
    for o in res.orbitals:
        out[f"orbital_{o.label}.csv"] = orbital_csv(res, o.label)
    summary = [f"E_total={res.total_energy!r}", f"iterations={res.iterations}", f"virial={res.virial_ratio:.3e}"]
    summary += [f"{o.label} {o.energy!r}" for o in res.orbitals]
    return out, summary


def cmd_nodes(args):
    res = _core(args)
    labels = args.shell or [o.label for o in res.orbitals]
    reports = []
    for lbl in labels:
        o = res.orbital(lbl)
        tail = None if args.grid_only else refine_tail(res, lbl)
        rep = count_nodes(o, res.grid, tail=tail, r_cut=args.r_cut)
        rep.expected_local = o.n - o.l - 1
        reports.append(rep)
    rows = [(r.shell, r.count, r.extra, " ".join(f"{x:.6g}" for x in r.node_positions)) for r in reports]
    out = {"nodes.json": _json([json.loads(r.to_json()) for r in reports]),
           "nodes.csv": _csv(["shell", "count", "extra", "positions"], rows)}
    return out, [f"{r.shell}: {r.count} nodes at {[round(x, 4) for x in r.node_positions]}" for r in reports]


def cmd_tails(args):
    res = _core(args)
    out, summary = {}, []
    for lbl in args.shell:
        t = refine_tail(res, lbl, r_from=args.r_from, r_to=args.r_to, step=args.step)
        out[f"tail_{lbl}.csv"] = t.to_csv()
        out[f"tail_{lbl}.json"] = _json(t.to_dict())
        summary.append(f"{lbl}: decay constant {t.decay_constant!r} (sqrt(2|E|) = {float(np.sqrt(2 * abs(t.energy)))!r})")
    return out, summary


def cmd_tunneling(args):
    rows = tunneling.sweep(args.Ii, args.Io, args.E, args.n, args.ni, args.Cn, args.No, args.eta_form, args.tau_form)
    reports = [tunneling.report(tunneling.TunnelingInput(args.Ii, args.Io, E, args.n, args.ni, args.Cn, args.No),
                                args.eta_form, args.tau_form).to_dict() for E in args.E]
    out = {"tunneling.csv": _csv(tunneling.SWEEP_COLUMNS, rows), "tunneling.json": _json(reports)}
    return out, [f"E={r[2]!r} log10_eta={r[7]:.4f} log10_tau={r[8]:.4f}" for r in rows]


def _channel(args):
    if args.channel == "free":
        return scattering.free_channel(args.l)
    if args.channel == "square-well":
        return scattering.square_well_channel(args.l, args.depth, args.radius)
    return scattering.core_channel(_core(args), args.l)


def _mesh(args):
    return scattering.default_energy_mesh(args.e_min, args.e_max, args.per_decade)


def cmd_phases(args):
    ch = _channel(args)
    curve = scattering.phase_curve(ch, args.l, _mesh(args), r_match=args.r_match, step=args.step)
    out = {f"phases_l{args.l}.csv": curve.to_csv(), f"phases_l{args.l}.json": _json(curve.to_dict())}
    return out, [f"l={args.l} delta(E_min)/pi={curve.deltas[0] / np.pi:.5f} max jump {curve.max_jump():.3g}"]


def cmd_levinson(args):
    ch = _channel(args)
    curve = scattering.phase_curve(ch, args.l, _mesh(args), r_match=args.r_match, step=args.step)
    rep = scattering.levinson_check(curve, ch, args.tolerance)
    out = {f"levinson_l{args.l}.json": rep.to_json() + "\n", f"phases_l{args.l}.csv": curve.to_csv()}
    return out, [f"l={args.l} delta(0)/pi={rep.delta_zero:.5f} n_l={rep.n_l} occupied={rep.n_l_occupied} "
                 f"expected={rep.expected} conclusive={rep.conclusive}"]


def cmd_green(args):
    core = _core(args)
    out, summary = {}, []
    if core.scheme == "hf":
        op = greens.hf_channel(core, args.l)
        E = args.E if args.E is not None else float(greens.probe_energies(op, 1)[0])
        rows = greens.residual_sweep(core, args.l, args.lambdas, E)
        out["green_residual.csv"] = greens.sweep_csv(rows)
        out["green_residual.json"] = _json({"l": args.l, "E": E, "lambda": [r[0] for r in rows],
                                            "residual": [r[1] for r in rows]})
        summary += [f"lambda={lam:g} residual={res:.6e}" for lam, res in rows]
    else:
        from .scf.solver import channel_operator

        op = channel_operator(core, args.l)
        E = args.E if args.E is not None else float(greens.probe_energies(op, 1)[0])
        direct = greens.green_direct(op, E)
        prod = greens.green_product(op.bands[1] * 0.0 + _local_potential(core), args.l, E, core.grid).matrix()
        err = float(np.max(np.abs(prod.G - direct.G)) / np.max(np.abs(direct.G)))
        out["green_compare.json"] = _json({"l": args.l, "E": E, "product_vs_direct": err,
                                           "direct_residual": direct.residual(op),
                                           "symmetry": direct.symmetry_error()})
        out["green_compare.csv"] = _csv(["l", "E", "product_vs_direct"], [(args.l, E, err)])
        summary.append(f"l={args.l} E={E!r} product vs direct {err:.3e}")
        op_dump = direct
    if args.dump_kernel:
        K = (greens.green_direct(op, E) if core.scheme == "hf" else op_dump).G
        out["green_kernel.csv"] = "\n".join(",".join(repr(float(x)) for x in row) for row in K) + "\n"
    return out, summary


def _local_potential(core):
    from .scf.solver import hartree_potential

    return hartree_potential(core.orbitals, core.grid, Z=core.atom.Z)


def cmd_gauge(args):
    core = _core(args)
    forms = gauge.FORMS if args.form == "both" else (args.form,)
    out, summary = {}, []
    for form in forms:
        rep = gauge.oscillator_sum(core, form, args.omega_max)
        out[f"fvalues_{form}.csv"] = rep.to_csv()
        out[f"sumrule_{form}.json"] = rep.to_json() + "\n"
        summary.append(f"S_{form}({args.omega_max:g}) = {rep.partial_sum!r} (N={rep.N})")
    if args.shell:
        pairs = gauge.transition_pairs(core, args.shell, args.lf, args.count)
        out["dipole_pairs.csv"] = _csv(["transition", "omega", "d_length", "d_velocity", "relative_discrepancy"],
                                       [(p.transition, p.omega, p.d_length, p.d_velocity, p.relative_discrepancy)
                                        for p in pairs])
        out["dipole_pairs.json"] = _json([p.to_dict() for p in pairs])
        summary += [f"{p.transition}: discrepancy {p.relative_discrepancy:.3e}" for p in pairs]
    return out, summary


def cmd_model(args):
    if args.model == "coulomb":
        normal = models.coulomb_normal(args.Z, args.n, args.l, args.alpha)
        rows = [normal]
        if args.family:
            if args.alpha != args.n ** 2:
                raise ConfigurationError("the singular family exists only at alpha = n^2")
            rows = models.coulomb_family(args.Z, args.n, args.l, args.family)
        out = {"coulomb.csv": models.coulomb_family_csv(rows),
               "coulomb.json": _json({"normal": normal.to_dict(), "rows": [r.to_dict() for r in rows]})}
        E = [r.E_total for r in rows]
        return out, [f"{len(rows)} rows, E_total in [{min(E)!r}, {max(E)!r}]"]
    if args.model == "oscillator":
        sols = models.oscillator_solutions(args.omega, args.beta_tilde, args.family or 0)
        rows = sols[1:] if len(sols) > 1 else sols
        out = {"oscillator.csv": models.oscillator_family_csv(rows),
               "oscillator.json": _json([{"omega_eff_1": s.omega_eff_1, "omega_eff_2": s.omega_eff_2,
                                          "kind": s.kind, "constraint_residual": s.constraint_residual()}
                                         for s in sols])}
        return out, [f"{len(rows)} rows, normal omega_eff = {sols[0].omega_eff_1!r}"]
    res = models.rpa_instability(args.Z, args.n, args.l, args.basis, args.interpretation)
    out = {"rpa.json": _json(res.to_dict()),
           "rpa.csv": _csv(["basis_size", "alpha_critical"],
                           [(b, "" if a is None else a) for b, a in res.history])}
    return out, [f"alpha_critical={res.alpha_critical!r} drift={res.drift} alpha/n^2={res.ratio_to_n2}"]


def cmd_figdata(args):
    ref = _core(args, args.reference_scheme)
    hf = solve(ref.atom, ref.grid, "hf", SCFOptions(mixing=args.mixing, max_iterations=args.max_iterations))
    tr = PlotTransform(args.a)
    out, summary = {}, []
    labels = args.shell or [o.label for o in hf.orbitals]
    for lbl in labels:
        ta = plot_scale(ref.orbital(lbl), ref.grid, tr, args.r_cut)
        tb = plot_scale(hf.orbital(lbl), hf.grid, tr, args.r_cut)
        out[f"figdata_{lbl}.csv"] = _csv(["rho", f"f_{ref.scheme}", "f_hf"], zip(ta.rho, ta.f, tb.f))
        out[f"figdata_{lbl}.json"] = _json({"columns": ["rho", f"f_{ref.scheme}", "f_hf"],
                                            "rows": [[float(a), float(b), float(c)] for a, b, c in zip(ta.rho, ta.f, tb.f)]})
        summary.append(f"{lbl}: sign changes {ref.scheme}={ta.sign_changes()} hf={tb.sign_changes()}")
    return out, summary


# ---------------------------------------------------------------------------
# Parser and driver
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hflab", description="Exchange effects in closed-shell atoms.")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="self-consistent field solution")
    _add_atom(s)
    s.add_argument("--save-state", action="store_true", help="also write state.json with orbitals")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("nodes", help="node positions of occupied orbitals")
    _add_atom(s)
    s.add_argument("--shell", nargs="*")
    s.add_argument("--grid-only", action="store_true", help="count on grid samples without tail refinement")
    s.add_argument("--r-cut", type=float, default=None)
    s.set_defaults(func=cmd_nodes)

    s = sub.add_parser("tails", help="high-precision asymptotic tails")
    _add_atom(s)
    s.add_argument("--shell", nargs="+", required=True)
    s.add_argument("--r-from", type=float, default=None)
    s.add_argument("--r-to", type=float, default=None)
    s.add_argument("--step", type=float, default=0.05)
    s.set_defaults(func=cmd_tails)

    s = sub.add_parser("tunneling", help="exchange-assisted tunneling estimates")
    s.add_argument("--Ii", type=float, required=True)
    s.add_argument("--Io", type=float, required=True)
    s.add_argument("--E", type=float, nargs="+", required=True)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--ni", type=int, default=1)
    s.add_argument("--Cn", type=float, default=1.0)
    s.add_argument("--No", type=int, default=1)
    s.add_argument("--eta-form", choices=tunneling.ETA_FORMS, default="approximate")
    s.add_argument("--tau-form", choices=tunneling.TAU_FORMS, default="proportional")
    s.set_defaults(func=cmd_tunneling)

    for name, func in (("phases", cmd_phases), ("levinson", cmd_levinson)):
        s = sub.add_parser(name, help="phase shifts" if name == "phases" else "Levinson check")
        _add_atom(s)
        s.add_argument("--channel", choices=("core", "free", "square-well"), default="core")
        s.add_argument("--l", type=int, default=0)
        s.add_argument("--depth", type=float, default=1.0)
        s.add_argument("--radius", type=float, default=2.0)
        s.add_argument("--e-min", type=float, default=1e-4)
        s.add_argument("--e-max", type=float, default=50.0)
        s.add_argument("--per-decade", type=int, default=16)
        s.add_argument("--r-match", type=float, default=30.0)
        s.add_argument("--step", type=float, default=0.01)
        if name == "levinson":
            s.add_argument("--tolerance", type=float, default=0.05)
        s.set_defaults(func=func)

    s = sub.add_parser("green", help="direct versus product-form Green's function")
    _add_atom(s)
    s.add_argument("--l", type=int, default=0)
    s.add_argument("--E", type=float, default=None)
    s.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    s.add_argument("--dump-kernel", action="store_true")
    s.set_defaults(func=cmd_green)

    s = sub.add_parser("gauge", help="length/velocity dipole forms and oscillator sums")
    _add_atom(s)
    s.add_argument("--form", choices=("length", "velocity", "both"), default="both")
    s.add_argument("--omega-max", type=float, default=50.0)
    s.add_argument("--shell", default=None, help="initial shell for length/velocity pairs")
    s.add_argument("--lf", type=int, default=None, help="final partial wave for pairs")
    s.add_argument("--count", type=int, default=3)
    s.set_defaults(func=cmd_gauge)

    s = sub.add_parser("model", help="solvable nonlinear Hartree models")
    s.add_argument("model", choices=("coulomb", "oscillator", "rpa"))
    s.add_argument("--Z", type=float, default=1.0)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--l", type=int, default=0)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--family", type=int, default=0)
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--beta-tilde", type=float, default=0.0)
    s.add_argument("--basis", type=int, default=29)
    s.add_argument("--interpretation", choices=models.INTERPRETATIONS, default="inverse-denominator")
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("figdata", help="rho-scaled orbital tables, reference scheme next to hf")
    _add_atom(s)
    s.add_argument("--reference-scheme", choices=("hartree", "hartree-no-self-action"), default="hartree")
    s.add_argument("--shell", nargs="*")
    s.add_argument("--a", type=float, default=2.79)
    s.add_argument("--r-cut", type=float, default=10.0)
    s.set_defaults(func=cmd_figdata)
    return p


def _strip_out(argv) -> list:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--out":
            skip = True
        elif not a.startswith("--out="):
            out.append(a)
    return out


def _manifest(args, argv, written) -> str:
    # the output directory is left out so identical runs give identical manifests
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return _json({
        "command": args.command,
        "argv": _strip_out(argv),
        "parameters": params,
        "outputs": sorted(written),
        "versions": {"hflab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "mpmath": mpmath.__version__, "python": platform.python_version()},
    })


def run(argv) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gauge" and (args.shell is None) != (args.lf is None):
        raise ConfigurationError("--shell and --lf go together")
    files, summary = args.func(args)
    keep = {"csv": (".csv",), "json": (".json",), "both": (".csv", ".json")}[args.format]
    files = {k: v for k, v in files.items() if k.endswith(keep)}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    (out / "run.json").write_text(_manifest(args, argv, files))
    if not args.quiet:
        for line in summary:
            print(line)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(argv)
    except HFLabError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
