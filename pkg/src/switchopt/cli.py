"""Command-line front end.

Subcommands: solve, project, simulate, theta, oracle, verify.  Config files
use a flat, typed key-value format with [sections] (INI grammar, ``#``
comments); the schemas are documented in the README and below.  The whole
pipeline is deterministic; --seedless asserts the (always-on) no-RNG mode.

Run config schema::

    [run]
    problem = paper_example     # registry name or problem-file path
    x0 = 0 0                    # initial state components
    output_dir = out
    emit_plots = true

    [solver]                    # all keys optional, defaults as in SolverConfig
    epsilon = 1e-6
    omega = 0.5
    gamma = 0.01
    k0 = 8
    k_max = 16
    fixed_k =                   # empty for adaptive
    l_max = 20
    armijo_alpha = 0.5
    armijo_beta = 0.5
    max_iter = 200
    n_cells = 256
    substeps = 4
    topology = terminal         # terminal | trajectory
    stall_floor = 1e-4

    [initial]
    kind = benchmark            # benchmark (one-switch shape) | csv
    t50 = 1.53125               # benchmark kind: switch time
    path =                      # csv kind: pure-signal CSV

Piecewise-affine problem file schema::

    [problem]
    name = my_system
    n_x = 2
    n_sigma = 2
    t_f = 2.0
    cost = distance 3 2         # distance T... | quadratic T...
    constraint1 = affine 1 0 -3 # a . x + b <= 0, keys constraint1..N

    [mode 1]                    # one section per mode, 1-based
    dx1 = pwl 2 : -1 0, 0 2, 0.5 0, 1 2   # piecewise-linear in state 2
    dx2 = const 0               # or: affine c1 .. cn b
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

import numpy as np

from . import verification
from .errors import ConfigError, ProjectionResolutionError, SwitchoptError
from .model import (
    SwitchedProblem,
    affine_component,
    assemble_mode,
    const_component,
    distance_cost,
    get_problem,
    pwl_component,
    quadratic_cost,
)
from .project import project_Rk
from .sim import cost_J, psi, simulate, trajectory_to_csv
from .signal import (
    DEFAULT_T50,
    Grid,
    initial_signal_paper,
    signal_from_csv,
    signal_to_csv,
)
from .solver import SolveStatus, SolverConfig, history_to_csv, oracle_enumerate, solve
from .svgplot import render_terminal_states
from .topology import TopologyKind
from .adjoint import optimality_theta

_STATUS_EXIT = {
    SolveStatus.STATIONARY: 0,
    SolveStatus.STALLED: 2,
    SolveStatus.MAX_ITER: 3,
}


# ---------------------------------------------------------------------------
# Config parsing helpers
# ---------------------------------------------------------------------------

def _read_config(path):
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        with open(path) as f:
            parser.read_file(f, source=path)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from err
    return parser

def _get_typed(section, key, convert, default=None, where=""):
    if key not in section or section[key].strip() == "":
        return default
    raw = section[key].strip()
    try:
        return convert(raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}{key} = {raw!r}: {err}") from err


def _vector(raw):
    return np.array([float(v) for v in raw.replace(",", " ").split()])


def _boolean(raw):
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_solver_config(section, override_topology=None) -> SolverConfig:
    where = "[solver] "
    kwargs = {}
    for key, conv in (
        ("epsilon", float),
        ("omega", float),
        ("gamma", float),
        ("k0", int),
        ("k_max", int),
        ("fixed_k", int),
        ("l_max", int),
        ("armijo_alpha", float),
        ("armijo_beta", float),
        ("max_iter", int),
        ("n_cells", int),
        ("substeps", int),
        ("stall_floor", float),
    ):
        value = _get_typed(section, key, conv, where=where)
        if value is not None:
            kwargs[key] = value
    topo = _get_typed(section, "topology", TopologyKind.from_string, where=where)
    if override_topology is not None:
        topo = TopologyKind.from_string(override_topology)
    if topo is not None:
        kwargs["topology"] = topo
    try:
        return SolverConfig(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"[solver] invalid configuration: {err}") from err


# ---------------------------------------------------------------------------
# Piecewise-affine problem files
# ---------------------------------------------------------------------------

def _parse_component(raw, n_x, where):
    tokens = raw.split()
    if not tokens:
        raise ConfigError(f"{where}: empty field component")
    kind = tokens[0]
    if kind == "const":
        if len(tokens) != 2:
            raise ConfigError(f"{where}: const takes one value")
        return const_component(float(tokens[1]), n_x)
    if kind == "affine":
        values = [float(v) for v in tokens[1:]]
        if len(values) != n_x + 1:
            raise ConfigError(
                f"{where}: affine needs {n_x} coefficients plus an offset"
            )
        return affine_component(values[:-1], values[-1])
    if kind == "pwl":
        body = raw[len("pwl"):]
        if ":" not in body:
            raise ConfigError(f"{where}: pwl syntax is 'pwl VAR : x y, x y, ...'")
        var_part, points_part = body.split(":", 1)
        var = int(var_part.strip())
        if not 1 <= var <= n_x:
            raise ConfigError(f"{where}: pwl state index {var} out of range")
        points = []
        for chunk in points_part.split(","):
            pair = chunk.split()
            if len(pair) != 2:
                raise ConfigError(f"{where}: bad pwl point {chunk!r}")
            points.append((float(pair[0]), float(pair[1])))
        if len(points) < 2:
            raise ConfigError(f"{where}: pwl needs at least two points")
        return pwl_component(var - 1, points, n_x)
    raise ConfigError(f"{where}: unknown component kind {kind!r}")


def _parse_cost(raw, where):
    tokens = raw.split()
    if not tokens:
        raise ConfigError(f"{where}: empty cost")
    kind, values = tokens[0], [float(v) for v in tokens[1:]]
    if kind == "distance":
        return distance_cost(values)
    if kind == "quadratic":
        return quadratic_cost(np.array(values) if values else None)
    raise ConfigError(f"{where}: unknown cost kind {kind!r}")


def load_problem_file(path) -> SwitchedProblem:
    parser = _read_config(path)
    if "problem" not in parser:
        raise ConfigError(f"{path}: missing [problem] section")
    sec = parser["problem"]
    n_x = _get_typed(sec, "n_x", int, where="[problem] ")
    n_sigma = _get_typed(sec, "n_sigma", int, where="[problem] ")
    t_f = _get_typed(sec, "t_f", float, where="[problem] ")
    if n_x is None or n_sigma is None or t_f is None:
        raise ConfigError(f"{path}: [problem] needs n_x, n_sigma, t_f")
    if "cost" not in sec:
        raise ConfigError(f"{path}: [problem] needs a cost")
    cost, cost_gradient = _parse_cost(sec["cost"], "[problem] cost")
    constraints = []
    idx = 1
    while f"constraint{idx}" in sec:
        raw = sec[f"constraint{idx}"].split()
        if raw[0] != "affine" or len(raw) != n_x + 2:
            raise ConfigError(
                f"[problem] constraint{idx}: expected 'affine c1 .. cn b'"
            )
        coeffs = np.array([float(v) for v in raw[1:-1]])
        offset = float(raw[-1])
        constraints.append(
            lambda x, c=coeffs, b=offset: float(c @ x) + b
        )
        idx += 1
    modes = []
    jacobians = []
    for m in range(1, n_sigma + 1):
        sec_name = f"mode {m}"
        if sec_name not in parser:
            raise ConfigError(f"{path}: missing [{sec_name}] section")
        mode_sec = parser[sec_name]
        components = []
        for i in range(1, n_x + 1):
            key = f"dx{i}"
            if key not in mode_sec:
                raise ConfigError(f"[{sec_name}]: missing {key}")
            components.append(
                _parse_component(mode_sec[key], n_x, f"[{sec_name}] {key}")
            )
        field, jac = assemble_mode(components)
        modes.append(field)
        jacobians.append(jac)
    return SwitchedProblem(
        n_x=n_x,
        n_sigma=n_sigma,
        n_u=0,
        t_f=t_f,
        modes=tuple(modes),
        mode_jacobians=tuple(jacobians),
        cost=cost,
        cost_gradient=cost_gradient,
        constraints=tuple(constraints),
        name=sec.get("name", os.path.basename(path)),
    )


def resolve_problem(name_or_path) -> SwitchedProblem:
    if os.path.sep in name_or_path or name_or_path.endswith(".cfg") or (
        os.path.exists(name_or_path) and not name_or_path.isidentifier()
    ):
        return load_problem_file(name_or_path)
    try:
        return get_problem(name_or_path)
    except KeyError:
        if os.path.exists(name_or_path):
            return load_problem_file(name_or_path)
        raise ConfigError(f"unknown problem {name_or_path!r}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    parser = _read_config(args.config)
    if "run" not in parser:
        raise ConfigError(f"{args.config}: missing [run] section")
    run_sec = parser["run"]
    if "problem" not in run_sec:
        raise ConfigError(f"{args.config}: [run] needs a problem")
    problem = resolve_problem(run_sec["problem"].strip())
    x0 = _get_typed(run_sec, "x0", _vector, where="[run] ")
    if x0 is None:
        x0 = np.zeros(problem.n_x)
    emit_plots = _get_typed(
        run_sec, "emit_plots", _boolean, default=True, where="[run] "
    )
    out_dir = args.out or _get_typed(
        run_sec, "output_dir", str, default="out", where="[run] "
    )
    solver_sec = parser["solver"] if "solver" in parser else {}
    cfg = load_solver_config(solver_sec, override_topology=args.topology)

    init_sec = parser["initial"] if "initial" in parser else {}
    kind = _get_typed(init_sec, "kind", str, default="benchmark", where="[initial] ")
    if kind == "csv":
        path = _get_typed(init_sec, "path", str, where="[initial] ")
        if not path:
            raise ConfigError("[initial] kind = csv needs a path")
        s0 = signal_from_csv(path, pure=True)
    elif kind == "benchmark":
        t50 = _get_typed(
            init_sec, "t50", float, default=DEFAULT_T50, where="[initial] "
        )
        s0 = initial_signal_paper(Grid.uniform(problem.t_f, cfg.n_cells), t50=t50)
    else:
        raise ConfigError(f"[initial] unknown kind {kind!r}")

    result = solve(problem, x0, s0, cfg)
    os.makedirs(out_dir, exist_ok=True)
    history_to_csv(result.history, os.path.join(out_dir, "history.csv"))
    signal_to_csv(result.signal, os.path.join(out_dir, "solution_signal.csv"))
    traj = simulate(problem, result.signal, x0, cfg.substeps)
    trajectory_to_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    if emit_plots:
        svg = render_terminal_states(
            result.history,
            landmarks=problem.landmarks,
            title=f"terminal states per iteration ({problem.name or 'problem'})",
        )
        with open(os.path.join(out_dir, "terminal_states.svg"), "w") as f:
            f.write(svg)
    last = result.history[-1]
    psi_text = "unconstrained" if last.psi is None else f"{last.psi:.6g}"
    print(
        f"status={result.status.value} iterations={len(result.history)} "
        f"J={last.cost:.6g} theta={last.theta:.6g} psi={psi_text}"
    )
    print(f"terminal state: {np.array2string(last.terminal_state, precision=6)}")
    print(f"artifacts written to {out_dir}/")
    return _STATUS_EXIT[result.status]


def cmd_project(args) -> int:
    if args.k is None or args.k < 1:
        print("error: --k must be a positive integer (k >= 1)", file=sys.stderr)
        return 1
    s = signal_from_csv(args.signal)
    projected = project_Rk(s, args.k)
    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "projected_signal.csv")
    signal_to_csv(projected, out_path)
    print(
        f"projected at 2^{args.k} cells: {projected.grid.n_cells} segments "
        f"-> {out_path}"
    )
    return 0


def cmd_simulate(args) -> int:
    problem = resolve_problem(args.problem)
    s = signal_from_csv(args.signal)
    x0 = _vector(args.x0) if args.x0 else np.zeros(problem.n_x)
    traj = simulate(problem, s, x0, args.substeps)
    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "trajectory.csv")
    trajectory_to_csv(traj, out_path)
    j = cost_J(problem, traj)
    level = psi(problem, traj)
    psi_text = "unconstrained" if level is None else f"{level:.6g}"
    print(
        f"J={j:.6g} psi={psi_text} terminal="
        f"{np.array2string(traj.terminal_state, precision=6)} -> {out_path}"
    )
    return 0


def cmd_theta(args) -> int:
    problem = resolve_problem(args.problem)
    s = signal_from_csv(args.signal)
    x0 = _vector(args.x0) if args.x0 else np.zeros(problem.n_x)
    theta, direction = optimality_theta(problem, s, x0, args.substeps)
    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "theta_direction.csv")
    signal_to_csv(direction, out_path)
    print(f"theta={theta!r} direction -> {out_path}")
    return 0


def cmd_oracle(args) -> int:
    problem = resolve_problem(args.problem)
    x0 = _vector(args.x0) if args.x0 else np.zeros(problem.n_x)
    grid = Grid.uniform(problem.t_f, args.cells)
    best, best_cost = oracle_enumerate(problem, x0, grid, substeps=args.substeps)
    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "oracle_signal.csv")
    signal_to_csv(best, out_path)
    print(
        f"best cost {best_cost!r} over {problem.n_sigma}^{args.cells} "
        f"candidates -> {out_path}"
    )
    return 0


def cmd_verify(args) -> int:
    out_dir = args.out or "verify_out"
    results = verification.run_all(out_dir)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  {r.detail}")
    failed = [r for r in results if not r.passed]
    print(
        f"{len(results) - len(failed)}/{len(results)} criteria passed"
        + (f"; FAILED: {', '.join(r.name for r in failed)}" if failed else "")
    )
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchopt",
        description=(
            "Optimal control of switched systems: relaxed descent plus "
            "pulse-frequency projection."
        ),
    )
    parser.add_argument(
        "--seedless",
        action="store_true",
        help="assert the no-RNG mode (always on; accepted for compatibility)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the outer iteration from a config")
    p_solve.add_argument("--config", required=True, help="run config path")
    p_solve.add_argument(
        "--topology", choices=("terminal", "trajectory"), help="override config"
    )
    p_solve.add_argument("--out", help="output directory (overrides config)")

    p_project = sub.add_parser("project", help="project a signal CSV to pure pulses")
    p_project.add_argument("--signal", required=True, help="input signal CSV")
    p_project.add_argument("--k", type=int, required=True, help="frequency exponent")
    p_project.add_argument("--out", help="output directory")

    p_sim = sub.add_parser("simulate", help="integrate a signal CSV")
    p_sim.add_argument("--problem", required=True, help="registry name or file")
    p_sim.add_argument("--signal", required=True, help="signal CSV")
    p_sim.add_argument("--x0", help="initial state, e.g. '0 0'")
    p_sim.add_argument("--substeps", type=int, default=4)
    p_sim.add_argument("--out", help="output directory")

    p_theta = sub.add_parser("theta", help="optimality function at a signal")
    p_theta.add_argument("--problem", required=True)
    p_theta.add_argument("--signal", required=True)
    p_theta.add_argument("--x0", help="initial state")
    p_theta.add_argument("--substeps", type=int, default=4)
    p_theta.add_argument("--out", help="output directory")

    p_oracle = sub.add_parser("oracle", help="exhaustive coarse-grid minimum")
    p_oracle.add_argument("--problem", required=True)
    p_oracle.add_argument("--cells", type=int, required=True, help="grid cells (<= 12)")
    p_oracle.add_argument("--x0", help="initial state")
    p_oracle.add_argument("--substeps", type=int, default=4)
    p_oracle.add_argument("--out", help="output directory")

    p_verify = sub.add_parser("verify", help="run the acceptance suite")
    p_verify.add_argument("--out", help="artifact directory")

    return parser


_HANDLERS = {
    "solve": cmd_solve,
    "project": cmd_project,
    "simulate": cmd_simulate,
    "theta": cmd_theta,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ProjectionResolutionError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ConfigError, SwitchoptError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
