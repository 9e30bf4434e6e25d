"""Command line entry point.

Every subcommand resolves its flags into a plain dictionary (the run
configuration), validates it, runs, and writes JSON or CSV.  JSON outputs
embed the run configuration; ``--config FILE`` replays one, taking every
value except the output destination from the file.

Exit status: 0 on success, 2 on invalid input, 3 on a numerical domain
error.  Failures print a JSON error envelope on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import calculus, czd, experiments, grid, translation
from .errors import BesselOpError, DomainError, UsageError
from .experiments import SCHEMA_VERSION, _jsonable
from .grid import PHYSICAL, SPECTRAL, SampledFunction, atomic_write_text
from .measure import BesselSpace, Interval
from .transform import build_plan, calibrate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3

COMMANDS = (
    "transform",
    "inverse",
    "multiplier",
    "imaginary-power",
    "heat",
    "translate",
    "convolve",
    "cz",
    "mollifier",
    "kernel-tail",
    "norm-growth",
    "weak-type",
    "tail-scaling",
    "selftest",
)

# arguments that only say where output goes; never replayed from a config
_DESTINATION = ("output", "format", "config", "timings")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_plan_args(p, R=16.0, N=2048, Lam=None, N_spectral=None):
    p.add_argument("--r", type=float, required=True, help="weight exponent r > 0")
    p.add_argument("--R", type=float, default=R, help="physical truncation radius")
    p.add_argument("--N", type=int, default=N, help="physical node count (multiple of 8)")
    p.add_argument("--Lam", type=float, default=Lam, help="spectral truncation (default 2R)")
    p.add_argument("--N-spectral", dest="N_spectral", type=int, default=N_spectral,
                   help="spectral node count (default N)")
    p.add_argument("--scheme", choices=grid.SCHEMES, default=grid.UNIFORM, help="physical grid scheme")
    p.add_argument("--spectral-scheme", choices=grid.SCHEMES, default=grid.GEOMETRIC)


def _add_input_args(p, name="input", required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument(f"--{name}", dest=name.replace("-", "_"),
                       help="gaussian[:s], bump:c,w, indicator:a,b or spike:c")
    group.add_argument(f"--{name}-csv", dest=name.replace("-", "_") + "_csv", help="CSV of node,re[,im]")


def _add_output_args(p, default_format="json"):
    p.add_argument("-o", "--output", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default=default_format)
    p.add_argument("--config", help="replay the run configuration embedded in a JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="besselop", description="Functional calculus of the Bessel operator on (0, inf).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transform", help="forward Fourier-Bessel transform")
    _add_plan_args(p)
    _add_input_args(p)
    _add_output_args(p, "csv")

    p = sub.add_parser("inverse", help="inverse transform of spectral values")
    _add_plan_args(p)
    _add_input_args(p)
    _add_output_args(p, "csv")

    p = sub.add_parser("multiplier", help="apply a spectral multiplier")
    _add_plan_args(p)
    _add_input_args(p)
    p.add_argument("--symbol", required=True,
                   help="heat:t, imag:alpha, power:s, mollifier:t or const:v")
    _add_output_args(p, "csv")

    p = sub.add_parser("imaginary-power", help="apply L^{i alpha}")
    _add_plan_args(p)
    _add_input_args(p)
    p.add_argument("--alpha", type=float, required=True)
    _add_output_args(p, "csv")

    p = sub.add_parser("heat", help="apply exp(-tL)")
    _add_plan_args(p)
    _add_input_args(p)
    p.add_argument("--t", type=float, required=True)
    _add_output_args(p, "csv")

    p = sub.add_parser("translate", help="generalized translation by y")
    _add_plan_args(p)
    _add_input_args(p)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--method", choices=(translation.THETA_FORM, translation.Z_FORM), default=translation.THETA_FORM)
    _add_output_args(p, "csv")

    p = sub.add_parser("convolve", help="generalized convolution of two inputs")
    _add_plan_args(p, R=8.0, N=512)
    _add_input_args(p)
    _add_input_args(p, "input2")
    p.add_argument("--allow-large", action="store_true", help="permit more than 1024 nodes")
    _add_output_args(p, "csv")

    p = sub.add_parser("cz", help="Calderon-Zygmund decomposition at a height")
    _add_plan_args(p, N=1024)
    _add_input_args(p)
    p.add_argument("--lambda", dest="height", type=float, required=True)
    _add_output_args(p)

    p = sub.add_parser("mollifier", help="tabulate the finite propagation mollifier")
    p.add_argument("--xi-max", type=float, default=64.0)
    p.add_argument("--points", type=_float_list, default=[0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
    _add_output_args(p)

    p = sub.add_parser("kernel-tail", help="off-diagonal kernel mass of L^{i alpha}(I - Phi)^M")
    _add_plan_args(p, R=3.0, N=8192, Lam=2048.0, N_spectral=12288)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--center", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--y", type=_float_list, default=None, help="column points in I (default: sampled)")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--s0", type=int, default=None)
    _add_output_args(p)

    p = sub.add_parser("norm-growth", help="alpha sweep of L^p norm ratios over the test family")
    _add_plan_args(p, Lam=128.0, N_spectral=4096)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alphas", type=_float_list, default=list(experiments.DEFAULT_ALPHAS))
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--timings", action="store_true", help="include runtimes in the report")
    _add_output_args(p)

    p = sub.add_parser("weak-type", help="alpha sweep of the weak L^1 quantity for a unit spike")
    _add_plan_args(p, R=256.0, N=4096, Lam=64.0, N_spectral=22400)
    p.set_defaults(scheme=grid.GEOMETRIC)
    p.add_argument("--input", default="spike:1")
    p.add_argument("--alphas", type=_float_list, default=list(experiments.DEFAULT_ALPHAS))
    p.add_argument("--heights", type=_float_list, default=None)
    p.add_argument("--timings", action="store_true", help="include runtimes in the report")
    _add_output_args(p)

    p = sub.add_parser("tail-scaling", help="alpha sweep of the off-diagonal kernel mass")
    _add_plan_args(p, R=3.0, N=8192, Lam=2048.0, N_spectral=12288)
    p.add_argument("--alphas", type=_float_list, default=[1.0, 2.0, 4.0, 8.0, 16.0])
    p.add_argument("--center", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--s0", type=int, default=None)
    p.add_argument("--timings", action="store_true", help="include runtimes in the report")
    _add_output_args(p)

    p = sub.add_parser("selftest", help="run the built-in example suite")
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _plan(cfg: dict, cache=None):
    for key in ("R", "r"):
        if not (cfg[key] > 0 and math.isfinite(cfg[key])):
            raise UsageError(f"--{key} must be positive, got {cfg[key]!r}")
    if cfg.get("Lam") is not None and not cfg["Lam"] > 0:
        raise UsageError(f"--Lam must be positive, got {cfg['Lam']!r}")
    return build_plan(cfg["r"], cfg["R"], cfg["N"], cfg["Lam"], cfg["N_spectral"],
                      physical_scheme=cfg["scheme"], spectral_scheme=cfg["spectral_scheme"], cache=cache)


def _input(cfg: dict, target: grid.WeightedGrid, side: str, name: str = "input") -> SampledFunction:
    path = cfg.get(name + "_csv")
    if path:
        try:
            return grid.read_csv(path, target, side)
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    f = experiments.parse_function(cfg[name], target)
    return f if side == PHYSICAL else SampledFunction(target, f.values, SPECTRAL)


def _check_calibration(r: float):
    """Verify the inversion constant on a reference Gaussian before an
    experiment; aborts with a domain error on mismatch."""
    return calibrate(build_plan(r, 16.0, 1024, 32.0, 1024), tol=1e-6)


def _parse_symbol(text: str) -> calculus.Multiplier:
    name, _, arg = text.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise UsageError(f"symbol {text!r} needs a numeric parameter") from None
    if name == "heat":
        return calculus.heat_multiplier(value)
    if name == "imag":
        return calculus.imaginary_power_multiplier(value)
    if name == "power":
        return calculus.power_multiplier(value)
    if name == "mollifier":
        return calculus.mollifier_multiplier(calculus.build_mollifier(), value)
    if name == "const":
        return calculus.constant_multiplier(value)
    raise UsageError(f"unknown symbol {name!r}; expected heat, imag, power, mollifier or const")


def _document(cfg: dict, payload: dict) -> dict:
    run_config = {k: v for k, v in cfg.items() if k not in _DESTINATION}
    out = {"schema": SCHEMA_VERSION, "command": cfg["command"], "run_config": run_config}
    out.update(payload)
    return out


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _emit(cfg: dict, text: str):
    if cfg.get("output"):
        atomic_write_text(cfg["output"], text)
    else:
        sys.stdout.write(text)


def _emit_function(cfg: dict, f: SampledFunction, extra: dict | None = None):
    if cfg["format"] == "csv":
        _emit(cfg, grid.to_csv_text(f))
    else:
        vals = np.asarray(f.values, dtype=complex)
        payload = {"side": f.side, "nodes": list(f.grid.nodes), "re": list(vals.real), "im": list(vals.imag)}
        payload.update(extra or {})
        _emit(cfg, _dump(_document(cfg, payload)))


def _emit_report(cfg: dict, report: experiments.ExperimentReport):
    if cfg["format"] == "csv":
        _emit(cfg, report.to_csv())
    else:
        body = report.as_dict(include_runtimes=bool(cfg.get("timings")))
        _emit(cfg, _dump(_document(cfg, {"report": body})))


# ---------------------------------------------------------------------------
# commands


def _cmd_transform(cfg):
    plan = _plan(cfg)
    f = _input(cfg, plan.physical, PHYSICAL)
    _emit_function(cfg, plan.forward(f))


def _cmd_inverse(cfg):
    plan = _plan(cfg)
    g = _input(cfg, plan.spectral, SPECTRAL)
    _emit_function(cfg, plan.inverse(g))


def _cmd_multiplier(cfg):
    plan = _plan(cfg)
    f = _input(cfg, plan.physical, PHYSICAL)
    _emit_function(cfg, calculus.apply_multiplier(plan, _parse_symbol(cfg["symbol"]), f))


def _cmd_imaginary_power(cfg):
    plan = _plan(cfg)
    f = _input(cfg, plan.physical, PHYSICAL)
    out = calculus.imaginary_power(plan, cfg["alpha"], f)
    _emit_function(cfg, out, {"oscillation": calculus.oscillation_diagnostic(plan, cfg["alpha"])})


def _cmd_heat(cfg):
    plan = _plan(cfg)
    f = _input(cfg, plan.physical, PHYSICAL)
    _emit_function(cfg, calculus.heat(plan, cfg["t"], f))


def _cmd_translate(cfg):
    plan = _plan(cfg, cache=False)
    f = _input(cfg, plan.physical, PHYSICAL)
    out, info = translation.translate(plan.space, f, cfg["y"], method=cfg["method"], return_info=True)
    _emit_function(cfg, out, {"clipped_mass": info.clipped_mass,
                              "clipped_contribution": info.clipped_contribution})


def _cmd_convolve(cfg):
    plan = _plan(cfg, cache=False)
    f = _input(cfg, plan.physical, PHYSICAL)
    g = _input(cfg, plan.physical, PHYSICAL, "input2")
    _emit_function(cfg, translation.convolve(plan.space, f, g, allow_large=cfg["allow_large"]))


def _cmd_cz(cfg):
    plan = _plan(cfg, cache=False)
    f = _input(cfg, plan.physical, PHYSICAL)
    result = czd.decompose(plan.space, f, cfg["height"])
    _emit(cfg, _dump(_document(cfg, result.as_dict())))


def _cmd_mollifier(cfg):
    table = calculus.MollifierTable(cfg["xi_max"])
    pts = [float(v) for v in cfg["points"]]
    payload = {"table": table.describe(), "points": pts, "values": list(table(np.array(pts)))}
    _emit(cfg, _dump(_document(cfg, payload)))


def _cmd_kernel_tail(cfg):
    plan = _plan(cfg, cache=False)
    _check_calibration(cfg["r"])
    interval = Interval(cfg["center"], cfg["radius"])
    ys = cfg["y"] if cfg["y"] else experiments.tail_y_samples(interval)
    tcfg = calculus.tail_config(cfg["alpha"], plan.space, M=cfg["M"], s0=cfg["s0"])
    tm = calculus.kernel_tail_mass(plan, tcfg, interval, ys, calculus.build_mollifier())
    _emit(cfg, _dump(_document(cfg, {"tail": tm.as_dict()})))


def _cmd_norm_growth(cfg):
    plan = _plan(cfg)
    _check_calibration(cfg["r"])
    family = experiments.default_family(plan.physical)
    _emit_report(cfg, experiments.norm_growth(plan, cfg["p"], cfg["alphas"], family, cfg["epsilon"]))


def _cmd_weak_type(cfg):
    plan = _plan(cfg)
    _check_calibration(cfg["r"])
    f = experiments.parse_function(cfg["input"], plan.physical)
    _emit_report(cfg, experiments.weak_type_sweep(plan, cfg["alphas"], cfg["heights"], f))


def _cmd_tail_scaling(cfg):
    plan = _plan(cfg, cache=False)
    _check_calibration(cfg["r"])
    interval = Interval(cfg["center"], cfg["radius"])
    report = experiments.tail_scaling(plan, cfg["alphas"], interval, calculus.build_mollifier(),
                                      M=cfg["M"], s0=cfg["s0"])
    _emit_report(cfg, report)


def _cmd_selftest(cfg):
    from .selftest import run_selftest

    result = run_selftest(seed=cfg["seed"])
    if not cfg.get("output"):
        sys.stderr.write(result.matrix())
    _emit(cfg, _dump(_document(cfg, result.as_dict())))
    return 0 if result.all_passed else 1


_HANDLERS = {
    "transform": _cmd_transform,
    "inverse": _cmd_inverse,
    "multiplier": _cmd_multiplier,
    "imaginary-power": _cmd_imaginary_power,
    "heat": _cmd_heat,
    "translate": _cmd_translate,
    "convolve": _cmd_convolve,
    "cz": _cmd_cz,
    "mollifier": _cmd_mollifier,
    "kernel-tail": _cmd_kernel_tail,
    "norm-growth": _cmd_norm_growth,
    "weak-type": _cmd_weak_type,
    "tail-scaling": _cmd_tail_scaling,
    "selftest": _cmd_selftest,
}


def resolve_config(argv) -> dict:
    """Parse flags into a run configuration, applying ``--config`` replay."""
    args = build_parser().parse_args(argv)
    cfg = vars(args)
    if cfg.get("config"):
        try:
            with open(cfg["config"], encoding="utf-8") as fh:
                stored = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load config {cfg['config']}: {exc}") from None
        stored = stored.get("run_config", stored)
        if stored.get("command") != cfg["command"]:
            raise UsageError(f"config is for {stored.get('command')!r}, not {cfg['command']!r}")
        unknown = set(stored) - set(cfg)
        if unknown:
            raise UsageError(f"config has unknown fields {sorted(unknown)}")
        for key, value in stored.items():
            if key not in _DESTINATION:
                cfg[key] = value
    return cfg


_JSON_ONLY = ("cz", "mollifier", "kernel-tail", "selftest")


def run(cfg: dict) -> int:
    if cfg["command"] in _JSON_ONLY and cfg.get("format") == "csv":
        raise UsageError(f"{cfg['command']} writes JSON only")
    result = _HANDLERS[cfg["command"]](cfg)
    return EXIT_OK if result is None else int(result)


def _envelope(exc: BaseException, status: int) -> str:
    code = getattr(exc, "code", "error")
    return json.dumps({"schema": SCHEMA_VERSION, "error": {"code": code, "message": str(exc), "exit": status}})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve_config(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return run(cfg)
    except DomainError as exc:
        sys.stderr.write(_envelope(exc, EXIT_DOMAIN) + "\n")
        return EXIT_DOMAIN
    except (UsageError, BesselOpError) as exc:
        sys.stderr.write(_envelope(exc, EXIT_USAGE) + "\n")
        return EXIT_USAGE
    except BrokenPipeError:
        # the reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
