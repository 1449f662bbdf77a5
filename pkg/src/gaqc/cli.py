"""Command-line front end.

Subcommands: benchmark, thermal, dynamics, vqe, verify. Option precedence is
flags over --config file entries over built-in defaults; grids use
start:stop:count syntax; couplings use key=value,... syntax. The default
output root is $GAQC_OUT (falling back to ./runs)."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import cost, ga, genome as genome_mod, opt, pipelines, sim, targets as targets_mod

_CONFIG_KEYS = {
    "qubits": ("num_qubits", int),
    "depth": ("depth", int),
    "pop_size": ("pop_size", int),
    "generations": ("generations", int),
    "iters": ("n_iter", int),
    "threshold": ("threshold", float),
    "seed": ("seed", int),
    "workers": ("workers", int),
    "method": ("method", str),
    "beta_grid": ("beta_grid", str),
    "time_grid": ("time_grid", str),
    "couplings": ("couplings", str),
    "trotter_r": ("trotter_r", int),
    "ga_stride": ("ga_stride", int),
    "train": ("n_train", int),
    "test": ("n_test", int),
    "hamiltonians": ("hamiltonian_path", str),
    "out": ("out_dir", str),
}


class CliError(Exception):
    pass


def parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(f"malformed grid {text!r}") from exc
    if count < 1 or stop < start:
        raise CliError(f"grid {text!r} is empty or reversed")
    return start, stop, count


def grid_values(grid: tuple[float, float, int]) -> tuple[float, ...]:
    start, stop, count = grid
    if count == 1:
        return (start,)
    return tuple(np.linspace(start, stop, count))


def parse_couplings(text: str) -> dict[str, float]:
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise CliError(f"couplings must be key=value pairs, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in ("J", "u", "h", "T"):
            raise CliError(f"unknown coupling {key!r} (expected J, u, h or T)")
        try:
            out[key] = float(value)
        except ValueError as exc:
            raise CliError(f"bad coupling value {item!r}") from exc
    return out


def read_config_file(path: str) -> dict[str, object]:
    """Flat 'key = value' lines; # comments; unknown keys are errors."""
    values: dict[str, object] = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from exc
    with fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{ln}: expected 'key = value'")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise CliError(f"{path}:{ln}: unknown key {key!r}")
            field, cast = _CONFIG_KEYS[key]
            try:
                values[field] = cast(text)
            except ValueError as exc:
                raise CliError(f"{path}:{ln}: bad value for {key}: {text!r}") from exc
    return values


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--qubits", type=int, dest="num_qubits",
                   help="register size (benchmark default 3, others 2)")
    p.add_argument("--depth", type=int,
                   help="structure depth (benchmark 9, thermal dense 2N / conventional 29, dynamics 4, vqe 4)")
    p.add_argument("--pop-size", type=int, dest="pop_size",
                   help="population size (benchmark/dynamics/vqe 8; thermal conventional 16)")
    p.add_argument("--generations", type=int,
                   help="generation budget (benchmark 10, thermal 16/20, dynamics 16, vqe 20)")
    p.add_argument("--iters", type=int, dest="n_iter",
                   help="inner optimization steps per target (benchmark/thermal 100, dynamics 500, vqe 200)")
    p.add_argument("--threshold", type=float,
                   help="stop when 1 - fitness <= threshold (benchmark/dynamics 0.01, "
                        "thermal 1e-4; vqe: energy bound, default none)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--workers", type=int, help="parallel fitness workers (default: machine cores)")
    p.add_argument("--out", dest="out_dir", help="output directory (default $GAQC_OUT/<run name>)")
    p.add_argument("--config", help="flat key = value config file; flags win over file entries")
    p.add_argument("--resume", help="checkpoint.json from an interrupted run")
    p.add_argument("--export-circuit", dest="export_circuit",
                   help="also write the best circuit to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaqc",
                                     description="Genetic multi-target circuit compiler")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="compile Haar-random unitaries; report held-out risk")
    _add_common(p)
    p.add_argument("--train", type=int, dest="n_train", help="training targets (default 20)")
    p.add_argument("--test", type=int, dest="n_test", help="held-out targets (default 10)")

    p = sub.add_parser("thermal", help="prepare Gibbs states across a beta grid")
    _add_common(p)
    p.add_argument("--method", choices=("dense", "conventional"),
                   help="dense N-qubit purification or two-copy 2N-qubit preparation (default dense)")
    p.add_argument("--beta-grid", dest="beta_grid",
                   help="inverse temperatures start:stop:count (default 0:10:11)")

    p = sub.add_parser("dynamics", help="magnetization under the ramped XX+YY chain")
    _add_common(p)
    p.add_argument("--couplings", help="key=value pairs among J,u,h,T (default J=1,u=0,h=0,T=10)")
    p.add_argument("--trotter-r", type=int, dest="trotter_r",
                   help="product-formula repetitions per sub-interval (default 100)")
    p.add_argument("--time-grid", dest="time_grid",
                   help="report times start:stop:count (default 0:10:101)")
    p.add_argument("--ga-stride", type=int, dest="ga_stride",
                   help="compile every k-th grid time (default 5)")

    p = sub.add_parser("vqe", help="minimize Pauli-sum energies with one structure")
    _add_common(p)
    p.add_argument("--hamiltonians", dest="hamiltonian_path",
                   help="text file of WORD coefficient blocks separated by ---")

    p = sub.add_parser("verify", help="run built-in oracle checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _merge_options(args: argparse.Namespace) -> dict[str, object]:
    values: dict[str, object] = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key, (field, _) in _CONFIG_KEYS.items():
        flag_value = getattr(args, field, None)
        if flag_value is not None:
            values[field] = flag_value
    for field in ("resume", "export_circuit"):
        if getattr(args, field, None) is not None:
            values[field] = getattr(args, field)
    return values


def _build_run_config(kind: str, values: dict[str, object]) -> tuple[pipelines.RunConfig, str | None]:
    export = values.pop("export_circuit", None)
    if "beta_grid" in values:
        values["betas"] = grid_values(parse_grid(str(values.pop("beta_grid"))))
    if "time_grid" in values:
        values["time_grid"] = parse_grid(str(values["time_grid"]))
    if "couplings" in values:
        mapping = parse_couplings(str(values.pop("couplings")))
        values.update({"coupling_j": mapping.get("J", 1.0),
                       "zz": mapping.get("u", 0.0),
                       "field": mapping.get("h", 0.0),
                       "total_time": mapping.get("T", 10.0)})
    try:
        cfg = pipelines.RunConfig(kind=kind, **values)
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    return cfg, export


def _default_out_dir(cfg: pipelines.RunConfig) -> str:
    root = os.environ.get("GAQC_OUT", "runs")
    name = cfg.kind if cfg.kind != "thermal" else f"thermal-{cfg.method}"
    return os.path.join(root, f"{name}-seed{cfg.seed}")


def run_verify(seed: int, log=print) -> int:
    """Quick oracle suite: shift-rule gradients, risk identity, product-formula
    ordering. Returns the number of failed checks."""
    failures = 0

    def report(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        failures += 0 if ok else 1
        log(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        circuit = genome_mod.random_genome(2, 3, rng)
        if circuit.param_count == 0:
            continue
        target = sim.haar_random_unitary(4, rng)
        tset = cost.TargetSet(2, (target,), (0,))
        workload = ga.build_workload(tset)
        objective = ga._kernel_objective(circuit, workload, 0)
        theta = rng.uniform(0, 2 * np.pi, circuit.param_count)
        grad = opt.parameter_shift_grad(objective, theta)
        h = 1e-5
        for mu in range(circuit.param_count):
            e = np.zeros_like(theta)
            e[mu] = h
            fd = (objective.evaluate(theta + e) - objective.evaluate(theta - e)) / (2 * h)
            worst = max(worst, abs(fd - grad[mu]))
    report("shift-rule gradient vs finite difference", worst <= 1e-6, f"max abs err {worst:.3e}")

    worst = 0.0
    for _ in range(10):
        circuit = genome_mod.random_genome(2, 3, rng)
        target = sim.haar_random_unitary(4, rng)
        tset = cost.TargetSet(2, (target,), (0,), ())
        theta = rng.uniform(0, 2 * np.pi, circuit.param_count)
        table = cost.ParameterTable(theta.reshape(1, -1))
        k = cost.kernel(target, circuit, theta)
        risk = cost.expected_risk(tset, circuit, table, indices=(0,))
        worst = max(worst, abs(risk - (1.0 - k)))
    report("trace-norm risk equals mean infidelity", worst <= 1e-10, f"max abs err {worst:.3e}")

    spec = targets_mod.DynamicsSpec(2, 1.0, 1.0, 0.25)
    psi0 = targets_mod.domain_wall_state(2)
    exact = targets_mod.exact_states(spec, [1.0], psi0)[0]
    err = []
    for order in (1, 2):
        state = targets_mod.trotter_states(spec, [1.0], psi0, order, r=8)[0]
        err.append(float(np.linalg.norm(state.amplitudes - exact.amplitudes)))
    report("second-order formula beats first-order", err[1] < err[0],
           f"order-1 err {err[0]:.3e}, order-2 err {err[1]:.3e}")
    return failures


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            failures = run_verify(args.seed)
            return 1 if failures else 0
        values = _merge_options(args)
        cfg, export = _build_run_config(args.command, values)
        if cfg.out_dir is None:
            cfg = pipelines.RunConfig(**{**cfg.__dict__, "out_dir": _default_out_dir(cfg)})
        runner = pipelines.RUNNERS[args.command]
        result = runner(cfg, log=print)
        paths = pipelines.write_outputs(result, cfg.out_dir, export)
        print(f"wrote {paths['results']}")
        return 0
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
