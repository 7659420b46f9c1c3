"""Experiment driver.

Subcommands:
    generate-obs   twin-experiment truth rollout + (noisy) observations
    solve          assimilate with ADMM or a first-order shooting baseline
    check-adjoint  dot-product / finite-difference verification of a model
    landscape      shooting-objective scan over a 3-D box (Lorenz)

Configuration is a flat `key = value` text file plus command-line overrides
(--key value). Unknown or malformed keys are rejected by name. Every output
directory receives a meta.txt echoing the fully resolved configuration, and
floats are printed with 17 significant digits so reruns are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 solver stall,
4 I/O failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .admm import AdmmParams, solve as admm_solve
from .assim import (
    AssimilationProblem,
    EnergyNorm,
    EuclideanNorm,
    generate_observations,
    rollout,
    scan_landscape,
)
from .baselines import BaselineConfig, LineSearchError, gradient_descent, nonlinear_cg
from .burgers import BurgersFDConfig, BurgersFEMConfig, BurgersSpectralConfig
from .lorenz import LorenzParams
from .models import (
    ModelCapability,
    burgers_fd_model,
    burgers_fem_model,
    burgers_spectral_model,
    lorenz_model,
    vorticity_model,
)
from .numerics import Grid2D, RandomStream
from .vorticity import VorticityConfig, save_field_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STALL = 3
EXIT_IO = 4
EXIT_VERIFY = 5

MODELS = ("lorenz", "burgers-fd", "burgers-fem", "burgers-spectral", "vorticity2d")
SOLVERS = ("admm", "gd", "cg-fr", "cg-pr")

# key -> (parser, help); every configuration key known to the tool
CONFIG_KEYS = {
    "model": (str, "dynamical model: " + "|".join(MODELS)),
    "dt": (float, "model time step"),
    "T": (float, "total horizon"),
    "T_obs": (float, "observation interval"),
    "m": (int, "grid count / mode count"),
    "gamma": (float, "Burgers viscosity"),
    "kappa": (float, "vorticity biharmonic coefficient"),
    "mu": (float, "objective scaling"),
    "eta": (float, "proximal regularization"),
    "s": (float, "penalty parameter"),
    "alpha": (float, "background weight"),
    "noise_std": (float, "observation noise standard deviation"),
    "seed": (int, "random seed"),
    "solver": (str, "solver: " + "|".join(SOLVERS)),
    "init": (str, "init: zeros | rollout:<c1,c2,..> | file:<path>"),
    "max_iters": (int, "sweep / iteration budget"),
    "constraint_tol": (float, "optional early-stop constraint tolerance"),
    "grad_tol": (float, "baseline gradient tolerance"),
    "threads": (int, "worker cap for the primal sweep"),
    "box": (str, "landscape box: x0,x1,y0,y1,z0,z1"),
    "resolution": (int, "landscape points per axis"),
    "output_dir": (str, "artifact directory"),
}

COMMON_DEFAULTS = {
    "eta": 0.1,
    "s": 2.0 / 3.0,
    "seed": 1234,
    "solver": "admm",
    "max_iters": 600,
    "constraint_tol": None,
    "grad_tol": 1e-8,
    "threads": 1,
    "box": "-6,6,-6,6,14,26",
    "resolution": 49,
}

MODEL_DEFAULTS = {
    "lorenz": {
        "dt": 0.01, "T": 3.0, "T_obs": 0.3, "mu": 100.0, "alpha": 0.1,
        "noise_std": 0.0, "init": "rollout:-3,-3,10",
    },
    "burgers-fd": {
        "m": 100, "gamma": 0.05, "dt": 0.005, "T": 2.0, "T_obs": 0.2,
        "mu": 20.0, "alpha": 0.0, "noise_std": 0.1, "init": "zeros",
    },
    "burgers-fem": {
        "m": 100, "gamma": 0.05, "dt": 0.0025, "T": 2.0, "T_obs": 0.2,
        "mu": 20.0, "alpha": 0.0, "noise_std": 0.1, "init": "zeros",
    },
    "burgers-spectral": {
        # noise scale 0.1*sqrt(2)*0.1 keeps the misfit comparable to the
        # nodal schemes under the sine-basis normalization
        "m": 50, "gamma": 0.05, "dt": 0.01, "T": 2.0, "T_obs": 0.2,
        "mu": 20.0, "alpha": 0.0, "noise_std": 0.1 * math.sqrt(2.0) * 0.1,
        "init": "zeros",
    },
    "vorticity2d": {
        "m": 20, "dt": 0.12, "kappa": 4e-5, "T": 36.0, "T_obs": 3.6,
        "mu": 20.0, "alpha": 0.0, "noise_std": 0.5, "init": "zeros",
    },
}


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def parse_config_file(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val.strip()
    return values


def resolve_config(file_values: dict, cli_values: dict, require_output: bool) -> dict:
    merged_raw = dict(file_values)
    merged_raw.update({k: v for k, v in cli_values.items() if v is not None})
    if "model" not in merged_raw:
        raise ConfigError("missing required key 'model'")
    model = str(merged_raw["model"])
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(MODEL_DEFAULTS[model])
    cfg["model"] = model
    cfg["output_dir"] = None
    for key, raw in merged_raw.items():
        if key == "model":
            continue
        caster, _ = CONFIG_KEYS[key]
        if isinstance(raw, str):
            try:
                cfg[key] = caster(raw)
            except ValueError as err:
                raise ConfigError(f"key {key!r}: cannot parse {raw!r}") from err
        else:
            cfg[key] = raw
    if cfg["solver"] not in SOLVERS:
        raise ConfigError(f"unknown solver {cfg['solver']!r}; expected one of {SOLVERS}")
    if require_output and not cfg.get("output_dir"):
        raise ConfigError("missing required key 'output_dir'")
    steps = cfg["T_obs"] / cfg["dt"]
    if abs(steps - round(steps)) > 1e-9:
        raise ConfigError(f"T_obs/dt = {steps} is not an integer")
    intervals = cfg["T"] / cfg["T_obs"]
    if abs(intervals - round(intervals)) > 1e-9:
        raise ConfigError(f"T/T_obs = {intervals} is not an integer")
    cfg["q"] = int(round(steps))
    cfg["N"] = cfg["q"] * int(round(intervals))
    return cfg


def build_model(cfg: dict) -> tuple[ModelCapability, object]:
    """Model capability plus the data-misfit norm for this configuration."""
    name = cfg["model"]
    if name == "lorenz":
        return lorenz_model(LorenzParams(dt=cfg["dt"])), EuclideanNorm()
    if name == "burgers-fd":
        return (
            burgers_fd_model(BurgersFDConfig(m=cfg["m"], gamma=cfg["gamma"], dt=cfg["dt"])),
            EuclideanNorm(),
        )
    if name == "burgers-fem":
        return (
            burgers_fem_model(BurgersFEMConfig(m=cfg["m"], gamma=cfg["gamma"], dt=cfg["dt"])),
            EuclideanNorm(),
        )
    if name == "burgers-spectral":
        return (
            burgers_spectral_model(
                BurgersSpectralConfig(m=cfg["m"], gamma=cfg["gamma"], dt=cfg["dt"])
            ),
            EuclideanNorm(),
        )
    grid = Grid2D(m=cfg["m"], dx=4.0 / cfg["m"], dy=4.0 / cfg["m"])
    vcfg = VorticityConfig(grid=grid, dt=cfg["dt"], kappa=cfg["kappa"])
    return vorticity_model(vcfg), EnergyNorm(vcfg)


def build_problem(cfg: dict):
    model, norm = build_model(cfg)
    u0_true = model.true_initial(RandomStream(cfg["seed"]))
    obs, truth = generate_observations(
        model, u0_true, cfg["N"], cfg["q"], cfg["noise_std"], cfg["seed"] + 1
    )
    problem = AssimilationProblem(
        model=model, obs=obs, alpha=cfg["alpha"], mu=cfg["mu"], norm=norm
    )
    return problem, truth


def write_meta(cfg: dict, outdir: Path) -> None:
    lines = [f"{key} = {fmt(cfg[key])}" for key in sorted(cfg) if cfg[key] is not None]
    (outdir / "meta.txt").write_text("\n".join(lines) + "\n")


def write_state_csv(path: Path, traj: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("k,component,value\n")
        for k, state in enumerate(traj):
            for c, val in enumerate(np.atleast_1d(state)):
                fh.write(f"{k},{c},{val:.17g}\n")


def parse_init(cfg: dict, problem: AssimilationProblem):
    init_spec = cfg["init"]
    if init_spec == "zeros":
        return {"init_mode": "zeros"}
    if init_spec.startswith("rollout:"):
        try:
            comps = np.array([float(v) for v in init_spec.split(":", 1)[1].split(",")])
        except ValueError as err:
            raise ConfigError(f"cannot parse init {init_spec!r}") from err
        if comps.size != problem.model.dim:
            raise ConfigError(
                f"init rollout has {comps.size} components, model dim is {problem.model.dim}"
            )
        return {"init_mode": "rollout", "u0_guess": comps}
    if init_spec.startswith("file:"):
        path = init_spec.split(":", 1)[1]
        try:
            traj = read_state_csv(path, problem.N + 1, problem.model.dim)
        except OSError as err:
            raise ConfigError(f"cannot read init trajectory {path}: {err}") from err
        return {"init_mode": "given", "trajectory": traj}
    raise ConfigError(f"unknown init {init_spec!r}")


def read_state_csv(path, n_rows: int, dim: int) -> np.ndarray:
    out = np.zeros((n_rows, dim))
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "k,component,value":
            raise ConfigError(f"{path}: expected header 'k,component,value'")
        for line in fh:
            k, c, v = line.strip().split(",")
            out[int(k), int(c)] = float(v)
    return out


def cmd_generate_obs(cfg: dict) -> int:
    problem, truth = build_problem(cfg)
    outdir = Path(cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    obs = problem.obs
    with open(outdir / "observations.csv", "w") as fh:
        fh.write("k,component,value\n")
        for j in range(obs.n_intervals + 1):
            k = j * obs.q
            for c, val in enumerate(obs.observations[j]):
                fh.write(f"{k},{c},{val:.17g}\n")
    write_state_csv(outdir / "truth_trajectory.csv", truth)
    write_meta(cfg, outdir)
    print(f"wrote observations for {cfg['model']} to {outdir}")
    return EXIT_OK


def write_admm_history(path: Path, history) -> None:
    with open(path, "w") as fh:
        fh.write("iter,total_error,constraint_error,objective\n")
        for rec in history:
            fh.write(
                f"{rec.iter},{rec.total_error:.17g},"
                f"{rec.constraint_error:.17g},{rec.objective:.17g}\n"
            )


def write_baseline_history(path: Path, history) -> None:
    with open(path, "w") as fh:
        fh.write("iter,objective,grad_norm,step_size\n")
        for rec in history:
            fh.write(
                f"{rec.iter},{rec.objective:.17g},{rec.grad_norm:.17g},{rec.step_size:.17g}\n"
            )


def cmd_solve(cfg: dict) -> int:
    problem, truth = build_problem(cfg)
    outdir = Path(cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    write_meta(cfg, outdir)
    if cfg["solver"] == "admm":
        params = AdmmParams(
            s=cfg["s"],
            eta=cfg["eta"],
            max_outer=cfg["max_iters"],
            constraint_tol=cfg["constraint_tol"],
            workers=cfg["threads"],
        )
        state, history = admm_solve(problem, params, reference=truth, **parse_init(cfg, problem))
        write_admm_history(outdir / "history.csv", history)
        write_state_csv(outdir / "recovered_trajectory.csv", state.primal)
        recovered_final = state.primal[-1]
    else:
        method = cfg["solver"]
        bl_cfg = BaselineConfig(
            method=method, max_iters=cfg["max_iters"], grad_tol=cfg["grad_tol"]
        )
        init = parse_init(cfg, problem)
        if init["init_mode"] != "rollout":
            raise ConfigError("baseline solvers need init = rollout:<components>")
        runner = gradient_descent if method == "gd" else nonlinear_cg
        try:
            u0_final, history = runner(init["u0_guess"], problem, bl_cfg)
        except LineSearchError as err:
            write_baseline_history(outdir / "history.csv", err.history)
            print(f"solver stalled: {err}", file=sys.stderr)
            return EXIT_STALL
        write_baseline_history(outdir / "history.csv", history)
        traj = rollout(problem.model, u0_final, problem.N)
        write_state_csv(outdir / "recovered_trajectory.csv", traj)
        recovered_final = traj[-1]
    if cfg["model"] == "vorticity2d":
        vcfg = problem.model.config
        save_field_csv(recovered_final, vcfg.grid, outdir / "final_field.csv")
    print(f"solve finished; artifacts in {outdir}")
    return EXIT_OK


def cmd_landscape(cfg: dict) -> int:
    problem, _ = build_problem(cfg)
    if problem.model.dim > 3:
        raise ConfigError("landscape scanning requires a model with dim <= 3")
    try:
        vals = [float(v) for v in cfg["box"].split(",")]
        box = np.array(vals).reshape(3, 2)
    except ValueError as err:
        raise ConfigError(f"cannot parse box {cfg['box']!r}") from err
    outdir = Path(cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    axes, values = scan_landscape(problem, box, cfg["resolution"])
    with open(outdir / "landscape.csv", "w") as fh:
        fh.write("x0,y0,z0,F\n")
        res = cfg["resolution"]
        for i in range(res):
            for j in range(res):
                for k in range(res):
                    fh.write(
                        f"{axes[0][i]:.17g},{axes[1][j]:.17g},{axes[2][k]:.17g},"
                        f"{values[i, j, k]:.17g}\n"
                    )
    write_meta(cfg, outdir)
    print(f"wrote landscape ({cfg['resolution']}^3 cells) to {outdir}")
    return EXIT_OK


def cmd_check_adjoint(cfg: dict, inject_fault: bool = False) -> int:
    model, _ = build_model(cfg)
    if inject_fault:
        clean = model.adjoint

        def broken(u, w):
            out = np.array(clean(u, w))
            out[..., 0] = -out[..., 0]
            return out

        model = ModelCapability(
            name=model.name, dim=model.dim, step=model.step, tangent=model.tangent,
            adjoint=broken, sample_state=model.sample_state,
            true_initial=model.true_initial, dt=model.dt, config=model.config,
        )
    dot_tol = 1e-8 if cfg["model"] == "vorticity2d" else 1e-10
    fd_tol = 1e-4
    stream = RandomStream(cfg["seed"])
    worst_dot = 0.0
    for _ in range(100):
        u = model.sample_state(stream)
        v = stream.normal(model.dim)
        w = stream.normal(model.dim)
        lhs = float(np.dot(model.tangent(u, v), w))
        rhs = float(np.dot(v, model.adjoint(u, w)))
        worst_dot = max(worst_dot, abs(lhs - rhs) / (np.linalg.norm(v) * np.linalg.norm(w)))
    worst_fd = 0.0
    eps = 1e-6
    for _ in range(5):
        u = model.sample_state(stream)
        v = stream.normal(model.dim)
        v /= np.linalg.norm(v)
        fd = (model.step(u + eps * v) - model.step(u)) / eps
        tan = model.tangent(u, v)
        worst_fd = max(worst_fd, np.linalg.norm(fd - tan) / np.linalg.norm(tan))
    print(f"model = {cfg['model']}")
    print(f"max dot-product error     = {worst_dot:.3e}  (tolerance {dot_tol:.1e})")
    print(f"max tangent FD error      = {worst_fd:.3e}  (tolerance {fd_tol:.1e})")
    failed = []
    if worst_dot > dot_tol:
        failed.append("dot-product")
    if worst_fd > fd_tol:
        failed.append("tangent-fd")
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    print("adjoint checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="admmvar", description="variational assimilation twin experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate-obs", "solve", "check-adjoint", "landscape"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        for key, (caster, help_text) in CONFIG_KEYS.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, help=help_text)
        if name == "check-adjoint":
            p.add_argument(
                "--inject-adjoint-fault",
                action="store_true",
                help="debug: negate one adjoint output component",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        cli_values = {key: getattr(args, key, None) for key in CONFIG_KEYS}
        require_output = args.command != "check-adjoint"
        cfg = resolve_config(file_values, cli_values, require_output)
        if args.command == "generate-obs":
            return cmd_generate_obs(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "landscape":
            return cmd_landscape(cfg)
        return cmd_check_adjoint(cfg, inject_fault=args.inject_adjoint_fault)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
