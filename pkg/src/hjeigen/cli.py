"""``eigen`` command-line front end.

Exit codes: 0 success, 1 a check ran and found a violation, 2 input or
parse errors (including solver preconditions such as an infeasible momentum
box).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import CATALOG_PARAMS, RunConfig, config_dict, format_config, load_config, merge
from .expression import variables
from .errors import BlowUpError, DivergenceError, EvaluationDomainError, InfeasibleError, InputError
from .hamiltonian import CATALOG, check_quasiconvexity, parse_hamiltonian
from .lipschitz import GridFunction, mollification_convergence_check, tent
from .quasiconvex import find_violating_measure, freeze, jensen_check

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("hamiltonian")
    g.add_argument("--ham", help="expression in x, p (1D) or x1, x2, p1, p2 (2D)")
    g.add_argument("--catalog", choices=sorted(CATALOG))
    g.add_argument("--dim", type=int, choices=(1, 2))
    g.add_argument("--pmax", type=float, help="momentum box radius P_max")
    g.add_argument("--quasiconvex", choices=("auto", "yes", "no"), help="quasiconvexity claim (auto: sample)")
    g.add_argument("--coercive", choices=("auto", "yes", "no"), help="coercivity claim (auto: growth probe)")
    for name in CATALOG_PARAMS:
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, help=f"catalog parameter {name}")
    r = p.add_argument_group("run")
    r.add_argument("--config", help="key = value config file; flags override it")
    r.add_argument("--m", type=int, help="grid resolution (power of two >= 8)")
    r.add_argument("--tol", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--out", help="JSON report path; CSV side files share its stem")
    r.add_argument("--echo-config", action="store_true", help="print the resolved config and continue")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigen", description="Additive eigenvalues of quasiconvex Hamiltonians")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minimax", help="minimax formula (Lipschitz bisection in 1D, smoothed in 2D)")
    _common(p)
    p.add_argument("--method", choices=("auto", "lipschitz", "smooth"))

    p = sub.add_parser("pde", help="long-time Lax-Friedrichs oracle (coercive H)")
    _common(p)
    p.add_argument("--T", type=float, dest="T")
    p.add_argument("--theta", type=float)

    p = sub.add_parser("coercive-limit", help="minimax of H + |p|/n extrapolated in n")
    _common(p)
    p.add_argument("--n-schedule", dest="n_schedule", type=_int_list)

    p = sub.add_parser("compare", help="all routes plus rough bounds")
    _common(p)
    p.add_argument("--T", type=float, dest="T")
    p.add_argument("--n-schedule", dest="n_schedule", type=_int_list)
    p.add_argument("--agree-tol", type=float, default=1e-2, help="pairwise agreement tolerance")

    check = sub.add_parser("check", help="structural checks").add_subparsers(dest="check", required=True)
    p = check.add_parser("quasiconvex", help="sample the quasiconvexity inequality")
    _common(p)
    p = check.add_parser("jensen", help="search two-point measures violating the Jensen-type inequality")
    _common(p)
    p.add_argument("--f", required=True, help="expression in p only")
    p = check.add_parser("mollify", help="mollified gradients approach the generalized gradient")
    _common(p)
    p.add_argument("--u", help="grid function CSV (default: tent on the m-grid)")
    p.add_argument("--x", type=_float_list, default=[0.25], help="target point (comma list in 2D)")
    p.add_argument("--n", type=_int_list, default=[4, 8, 16, 32], help="mollifier index schedule")
    p = check.add_parser("clarke-sup", help="sup of H over classical vs generalized gradients")
    _common(p)
    p.add_argument("--u", help="grid function CSV (default: tent on the m-grid)")
    return parser


def _int_list(s: str) -> list[int]:
    try:
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _float_list(s: str) -> list[float]:
    try:
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


_CONFIG_KEYS = ("ham", "catalog", "dim", "pmax", "quasiconvex", "coercive", "m", "tol", "seed", "trials", "out",
                "method", "T", "theta", "n_schedule") + CATALOG_PARAMS


def resolve_config(args: argparse.Namespace, need_hamiltonian: bool = True) -> RunConfig:
    base = load_config(args.config, need_hamiltonian=False) if args.config else RunConfig()
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if overrides["n_schedule"] is not None:
        overrides["n_schedule"] = tuple(overrides["n_schedule"])
    return merge(base, overrides).validate(need_hamiltonian)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(payload: dict) -> str:
    # json writes floats with repr, the shortest round-trip form.
    return json.dumps(_plain(payload), indent=2, sort_keys=False, allow_nan=False) + "\n"


class Emitter:
    def __init__(self, cfg: RunConfig):
        self.out = Path(cfg.out) if cfg.out else None

    def side(self, suffix: str, text: str) -> str | None:
        if self.out is None:
            return None
        path = self.out.with_name(self.out.stem + suffix)
        path.write_text(text)
        return path.name

    def report(self, payload: dict) -> None:
        text = dumps(payload)
        if self.out is None:
            sys.stdout.write(text)
        else:
            self.out.write_text(text)
            print(f"wrote {self.out}")


def _xu_csv(u: GridFunction) -> str:
    if u.dimension == 1:
        rows = [f"{x!r},{v!r}" for x, v in zip(u.nodes().tolist(), u.values.tolist())]
        return "x,u\n" + "\n".join(rows) + "\n"
    x = u.nodes().reshape(-1, 2).tolist()
    return "x1,x2,u\n" + "\n".join(f"{a!r},{b!r},{v!r}" for (a, b), v in zip(x, u.values.ravel().tolist())) + "\n"


def _emit_report(emit: Emitter, cfg: RunConfig, rep, extra: dict | None = None) -> None:
    ref = None
    if rep.optimizer is not None:
        ref = emit.side(".u.csv", rep.optimizer.to_csv())
        emit.side(".xu.csv", _xu_csv(rep.optimizer))
    payload = {"config": config_dict(cfg), "report": rep.to_dict(ref)}
    if extra:
        payload.update(extra)
    emit.report(payload)


def _summary(rep) -> str:
    text = f"{rep.method}: c = {rep.c!r}"
    if rep.bracket is not None:
        text += f"  bracket = [{rep.bracket[0]!r}, {rep.bracket[1]!r}]"
    text += f"  rough bounds = [{rep.rough_bounds[0]!r}, {rep.rough_bounds[1]!r}]"
    if rep.warnings:
        text += f"  warnings: {', '.join(rep.warnings)}"
    return text


def _load_u(path: str | None, m: int) -> GridFunction:
    if path is None:
        return tent(m)
    try:
        return GridFunction.from_csv(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_minimax(args, cfg: RunConfig) -> int:
    from .eigenvalue import minimax_1d, minimax_smooth

    h = cfg.hamiltonian()
    method = cfg.method
    if method == "auto":
        method = "lipschitz" if h.dimension == 1 else "smooth"
    if method == "lipschitz":
        if h.dimension != 1:
            raise InputError("the Lipschitz bisection solver is 1D; use --method smooth")
        rep = minimax_1d(h, cfg.m, cfg.tol)
    else:
        rep = minimax_smooth(h, cfg.m, seed=cfg.seed)
    print(_summary(rep))
    _emit_report(Emitter(cfg), cfg, rep)
    return EXIT_OK


def cmd_pde(args, cfg: RunConfig) -> int:
    from .eigenvalue import pde_eigenvalue

    h = cfg.hamiltonian()
    rep = pde_eigenvalue(h, cfg.m, cfg.T, cfg.theta)
    print(_summary(rep))
    _emit_report(Emitter(cfg), cfg, rep)
    return EXIT_OK


def cmd_coercive_limit(args, cfg: RunConfig) -> int:
    from .eigenvalue import coercive_limit

    h = cfg.hamiltonian()
    res = coercive_limit(h, cfg.n_schedule, cfg.m, cfg.tol)
    rep = res.report()
    print(_summary(rep))
    for n, c in zip(res.n_schedule, res.values):
        print(f"  n = {n}: c_n = {c!r}")
    emit = Emitter(cfg)
    series = emit.side(".series.csv", res.series_csv())
    _emit_report(emit, cfg, rep, {"series_ref": series, "nonincreasing": res.nonincreasing})
    if not res.nonincreasing:
        print("VIOLATION: c_n is not nonincreasing")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    from .eigenvalue import compare_all

    h = cfg.hamiltonian()
    cmp = compare_all(h, cfg.m, args.agree_tol, T=cfg.T, n_schedule=cfg.n_schedule, bisection_tol=cfg.tol)
    if cmp.banner:
        print(cmp.banner)
    for rep in cmp.reports:
        label = " (upper bound)" if "upper-bound" in rep.warnings else ""
        print(_summary(rep) + label)
    for note in cmp.notes:
        print(f"  note: {note}")
    print(f"verdict: {cmp.verdict}")
    Emitter(cfg).report({"config": config_dict(cfg), "comparison": cmp.to_dict()})
    return EXIT_OK if cmp.passed else EXIT_VIOLATION


def cmd_check_quasiconvex(args, cfg: RunConfig) -> int:
    h = cfg.hamiltonian()
    verdict = check_quasiconvexity(h, cfg.trials, cfg.seed)
    print("quasiconvexity: " + ("no violation found" if verdict.passed else "VIOLATION found"))
    Emitter(cfg).report({"config": config_dict(cfg), "verdict": verdict.to_dict()})
    return EXIT_OK if verdict.passed else EXIT_VIOLATION


def cmd_check_jensen(args, cfg: RunConfig) -> int:
    f = parse_hamiltonian(args.f, cfg.dim, p_max=cfg.pmax, quasiconvex=False, coercive=False)
    if any(kind == "x" for kind, _ in variables(f.source.tree)):
        raise InputError("--f must depend on p only")
    frozen = freeze(f, np.zeros(cfg.dim))
    mu = find_violating_measure(frozen, cfg.trials, cfg.seed, p_max=cfg.pmax, dimension=cfg.dim)
    payload = {"f": args.f, "trials": cfg.trials, "seed": cfg.seed, "witness": None}
    if mu is None:
        print("jensen: no violating measure found")
        Emitter(cfg).report(payload)
        return EXIT_OK
    v = jensen_check(frozen, mu)
    payload["witness"] = {**mu.to_dict(), "lhs": v.lhs, "rhs": v.rhs}
    print(f"jensen: VIOLATION  f(barycenter) = {v.lhs!r} > esssup = {v.rhs!r}")
    Emitter(cfg).report(payload)
    return EXIT_VIOLATION


def cmd_check_mollify(args, cfg: RunConfig) -> int:
    u = _load_u(args.u, cfg.m)
    x = np.asarray(args.x, dtype=float)
    if x.size != u.dimension:
        raise InputError(f"--x needs {u.dimension} coordinate(s)")
    if list(args.n) != sorted(set(args.n)) or not args.n:
        raise InputError("--n must be strictly increasing")
    rep = mollification_convergence_check(u, list(args.n), x)
    for n, d in zip(rep.n_schedule, rep.distances):
        print(f"  n = {n}: distance = {d!r}")
    print("mollify: " + ("converged" if rep.success else "VIOLATION"))
    Emitter(cfg).report({"config": config_dict(cfg), "convergence": rep.to_dict()})
    return EXIT_OK if rep.success else EXIT_VIOLATION


def cmd_check_clarke_sup(args, cfg: RunConfig) -> int:
    from .eigenvalue import clarke_sup_equality_check

    h = cfg.hamiltonian()
    u = _load_u(args.u, cfg.m)
    v = clarke_sup_equality_check(h, u)
    print(f"clarke-sup: classical = {v.sup_classical!r}, generalized = {v.sup_clarke!r}, tol = {v.tolerance!r}")
    print("clarke-sup: " + ("equal" if v.passed else "VIOLATION"))
    Emitter(cfg).report(
        {
            "config": config_dict(cfg),
            "passed": v.passed,
            "sup_classical": v.sup_classical,
            "sup_generalized": v.sup_clarke,
            "tolerance": v.tolerance,
        }
    )
    return EXIT_OK if v.passed else EXIT_VIOLATION


_COMMANDS = {
    "minimax": (cmd_minimax, True),
    "pde": (cmd_pde, True),
    "coercive-limit": (cmd_coercive_limit, True),
    "compare": (cmd_compare, True),
    ("check", "quasiconvex"): (cmd_check_quasiconvex, True),
    ("check", "jensen"): (cmd_check_jensen, False),
    ("check", "mollify"): (cmd_check_mollify, False),
    ("check", "clarke-sup"): (cmd_check_clarke_sup, True),
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    key = args.command if args.command != "check" else ("check", args.check)
    func, need_h = _COMMANDS[key]
    try:
        cfg = resolve_config(args, need_h)
        if args.echo_config:
            sys.stdout.write(format_config(cfg))
        return func(args, cfg)
    except (InputError, EvaluationDomainError, InfeasibleError, BlowUpError, DivergenceError) as exc:
        print(f"eigen: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
