"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 a certification or hypothesis
check failed. Every JSON summary embeds the resolved manifest (all
arguments after defaults) and carries no timestamps, so re-running the
same manifest reproduces the summary byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import languages as lang
from . import schreier as sch
from . import simulate as sim
from . import spectral
from .errors import HypothesisViolation, LampwalkError
from .graphs import Lattice
from .kernels import LatticeWalk, parse_kernel, srw

EXIT_OK, EXIT_INVALID, EXIT_CERT = 0, 2, 3

SIM_STATS = ("rate-of-escape", "support-growth", "range", "sws-return",
             "laplace-range", "cutpoints", "limit-config")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(x):
    """Make values JSON-safe: non-finite floats become null."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _load_kernel(text: str):
    path = Path(text)
    if text.endswith(".json") and path.exists():
        return parse_kernel(json.loads(path.read_text()))
    if text.lstrip().startswith("{"):
        return parse_kernel(json.loads(text))
    return parse_kernel(text)


def _load_graph(text: str) -> lang.LabeledDigraph:
    presets = {"full2": lambda: lang.full_shift("01"), "golden": lang.golden_mean,
               "example4": lang.four_vertex_example}
    if text in presets:
        return presets[text]()
    try:
        obj = json.loads(Path(text).read_text())
    except FileNotFoundError:
        raise UsageError(f"graph file {text!r} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"graph file {text!r} is not JSON: {exc}") from None
    return lang.LabeledDigraph.from_json(obj)


def _forbid(text: str | None) -> tuple[str, ...]:
    return tuple(w for w in (text or "").split(",") if w)


def _vertex(g, x):
    return g.vertex(x) if x is not None else 0


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="base seed (required for simulate)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="directory for summary.json and CSV files")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lampwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ps = sub.add_parser("simulate", help="Monte-Carlo estimators")
    ps.add_argument("statistic", choices=SIM_STATS)
    ps.add_argument("--kernel", default="srw:lattice:1")
    ps.add_argument("--n", type=int, default=1000, help="horizon")
    ps.add_argument("--trials", type=int, default=100)
    ps.add_argument("--t", type=float, default=1.0, help="Laplace parameter")
    ps.add_argument("--q", type=int, default=2, help="tree parameter for cutpoints")
    ps.add_argument("--radius", type=int, default=2, help="ball radius for limit-config")
    ps.add_argument("--window", type=int, default=sim.CUT_WINDOW)
    _common(ps)

    pp = sub.add_parser("spectral", help="exact return probabilities and Green functions")
    pp.add_argument("quantity", choices=("rho", "green"))
    pp.add_argument("--kernel", default="srw:lattice:1")
    pp.add_argument("--nmax", type=int, default=400)
    pp.add_argument("--z", type=float, default=1.0)
    _common(pp)

    pe = sub.add_parser("entropy", help="language entropy and growth sensitivity")
    pe.add_argument("check", choices=("report", "identity-check", "substoch-check"))
    pe.add_argument("--graph", required=True,
                    help="graph JSON file or one of full2, golden, example4")
    pe.add_argument("--forbid", default="", help="comma-separated forbidden words")
    pe.add_argument("--from", dest="x")
    pe.add_argument("--to", dest="y")
    pe.add_argument("--nmax", type=int, default=20)
    _common(pe)

    pg = sub.add_parser("schreier", help="Schreier graph construction")
    pg.add_argument("action", choices=("build",))
    pg.add_argument("--group", required=True, help="z2, cyclic:m, sym:n, zd:d or freeprod:k")
    pg.add_argument("--subgroup", default="trivial")
    pg.add_argument("--psi", required=True, help="e.g. a=t or a=1,b=-1")
    pg.add_argument("--radius", type=int, default=None)
    pg.add_argument("--nmax", type=int, default=10)
    _common(pg)

    pr = sub.add_parser("run", help="execute a JSON manifest")
    pr.add_argument("manifest")
    return parser


def manifest_to_argv(manifest: dict) -> list[str]:
    """Translate a manifest ``{"command": ..., "<positional>": ..., flags}``."""
    if not isinstance(manifest, dict) or "command" not in manifest:
        raise UsageError("manifest must be an object with a 'command' key")
    positional = {"simulate": "statistic", "spectral": "quantity",
                  "entropy": "check", "schreier": "action"}
    cmd = manifest["command"]
    if cmd not in positional or positional[cmd] not in manifest:
        raise UsageError(f"manifest for {cmd!r} needs {positional.get(cmd, 'a known command')!r}")
    argv = [cmd, str(manifest[positional[cmd]])]
    for key, value in sorted(manifest.items()):
        if key in ("command", positional[cmd]) or value is None:
            continue
        flag = {"x": "from", "y": "to"}.get(key, key)
        argv += [f"--{flag}", value if isinstance(value, str) else json.dumps(value)]
    return argv


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _trial_rows(values, n):
    return [(i, n, float(v)) for i, v in enumerate(values)]


def _cmd_simulate(args):
    if args.seed is None:
        raise UsageError("simulate needs --seed (no wall-clock default)")
    cfg = sim.SimConfig(args.seed, args.n, args.trials)
    th = args.threads
    stat = args.statistic
    extra = {}
    if stat == "cutpoints":
        point, time = sim.cut_point_density(args.q, cfg, args.window, th)
        est = point
        extra = {"time_density": time.summary(), "q": args.q}
    else:
        k = _load_kernel(args.kernel)
        if stat == "rate-of-escape":
            est = sim.rate_of_escape(k, cfg, threads=th)
        elif stat == "support-growth":
            est = sim.support_growth(k, cfg, threads=th)
        elif stat == "range":
            est = sim.expected_range(k, cfg, threads=th)
        elif stat == "sws-return":
            est = sim.sws_return_probability(k, args.n, cfg, threads=th)
        elif stat == "laplace-range":
            est = sim.laplace_range(k, args.t, args.n, cfg, threads=th)
            if isinstance(k, LatticeWalk) and k == srw(Lattice(1)):
                exact = sim.laplace_range_srw_z(args.t, args.n)
                extra = {"exact": exact.value, "exact_dropped": exact.dropped}
        else:
            est = sim.stabilization_rate(k, args.radius, cfg, threads=th)
    summary = est.summary() | extra
    return summary, {"trials": (("trial", "n", "statistic"), _trial_rows(est.values, args.n))}


def _cmd_spectral(args):
    k = _load_kernel(args.kernel)
    if args.quantity == "rho":
        e = spectral.spectral_radius_dp(k, n_max=args.nmax)
        summary = {"estimate": e.rho, "period": e.period, "n_max": args.nmax,
                   "last_root": float(e.roots[-1])}
        return summary, {"roots": (("n", "root"), e.rows())}
    x = k.origin_state
    value = spectral.truncated_green(k, x, x, args.z, args.nmax)
    logs = spectral.log_transition_probabilities(k, x, x, args.nmax)
    rows = [(n, math.exp(v) if math.isfinite(v) else 0.0) for n, v in enumerate(logs.tolist())]
    return {"green": value, "z": args.z, "N": args.nmax}, {"returns": (("n", "p"), rows)}


def _cmd_entropy(args):
    g = _load_graph(args.graph)
    F = _forbid(args.forbid)
    if args.check == "report":
        rep = lang.growth_sensitivity_report(g, F)
        summary = rep.to_json()
        x, y = _vertex(g, args.x), _vertex(g, args.y)
        rg = lang.restrict(g, F)
        rows = list(zip(range(args.nmax + 1), lang.count_sequence(g, x, [y], args.nmax),
                        rg.counts(x, y, args.nmax)))
        summary["pair"] = [x, y]
        if not rep.strict:
            raise _CertificationFailure(summary, "entropy drop is not strict")
        return summary, {"counts": (("n", "count", "count_F"), rows)}
    if args.check == "identity-check":
        return lang.entropy_spectral_identity_check(g).to_json(), {}
    rep = lang.substochastic_bound_check(lang.uniform_weighting(g), F)
    if not rep.passed:
        raise _CertificationFailure(rep.to_json(), "substochastic bound violated")
    return rep.to_json(), {}


def _cmd_schreier(args):
    G = sch.parse_group(args.group)
    spec = sch.GroupSpec(G, sch.parse_subgroup(G, args.subgroup))
    sg = sch.build_schreier(spec, sch.parse_psi(G, args.psi), args.radius)
    g = sg.graph
    summary = sg.to_json()
    summary["fully_deterministic"] = lang.check_fully_deterministic(g)
    summary["uniformly_connected"] = lang.uniform_connectedness(g)
    wp = sch.word_problem_language(sg)
    n = args.nmax if wp.horizon is None else min(args.nmax, wp.horizon)
    rows = list(enumerate(wp.counts(n)))
    return summary, {"word_problem": (("n", "count"), rows)}


class _CertificationFailure(Exception):
    def __init__(self, summary, message):
        super().__init__(message)
        self.summary = summary


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, summary, tables, stdout):
    summary = dict(summary)
    summary["manifest"] = _resolved(args)
    text = _dumps(summary) + "\n"
    fmt = args.format
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if fmt in ("json", "both"):
            (out / "summary.json").write_text(text)
        if fmt in ("csv", "both"):
            for name, (header, rows) in tables.items():
                (out / f"{name}.csv").write_text(_write_csv(header, rows))
    if fmt in ("json", "both"):
        stdout.write(text)
    if fmt in ("csv", "both") and not args.out:
        for header, rows in tables.values():
            stdout.write(_write_csv(header, rows))


COMMANDS = {"simulate": _cmd_simulate, "spectral": _cmd_spectral,
            "entropy": _cmd_entropy, "schreier": _cmd_schreier}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            try:
                manifest = json.loads(Path(args.manifest).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read manifest: {exc}") from None
            args = parser.parse_args(manifest_to_argv(manifest))
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        summary, tables = COMMANDS[args.command](args)
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except HypothesisViolation as exc:
        stderr.write(f"certification failed: {', '.join(exc.failures)}\n")
        return EXIT_CERT
    except _CertificationFailure as exc:
        stderr.write(f"certification failed: {exc}\n")
        stdout.write(_dumps(exc.summary) + "\n")
        return EXIT_CERT
    except LampwalkError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    _emit(args, summary, tables, stdout)
    return EXIT_OK


def main_entry():
    sys.exit(main())
