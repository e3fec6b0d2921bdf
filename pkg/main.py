from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from config import HALF_PI, LOG_FORMAT, WORKERS_ENV_VAR
from rcp import __version__
from rcp.convergence import decay_rate_no_queue, decay_rate_with_queue
from rcp.entities import InitialCondition, PacketSimConfig, ProtocolParams, RunManifest, SimConfig
from rcp.errors import ConfigError, ConvergenceError, DomainError, Inconclusive, InternalError
from rcp.export import (
    AMPLITUDE_HEADER,
    CHART_HEADER,
    HOPF_SWEEP_HEADER,
    ROC_HEADER,
    write_manifest,
    write_packet_trace,
    write_phase_portrait,
    write_rows,
    write_spectrum,
    write_trajectory,
)
from rcp.fluid import analyze_trajectory, phase_portrait, power_law_exponent, simulate
from rcp.hopf import hopf_report, hopf_sweep, measured_amplitudes
from rcp.model import equilibrium, validate_params
from rcp.packet import load_packet_config, queue_stats, run_packet_sim
from rcp.repro import run_checks
from rcp.stability import lambert_w_roots, rightmost_roots, stability_boundary_beta
from scenario_catalog import FLUID, PACKET, load_scenario_catalog

logger = logging.getLogger("rcplab")


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR)
    if raw is None or not raw.strip():
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV_VAR, f"must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(WORKERS_ENV_VAR, f"must be >= 1, got {value!r}")
    return value


def _fan_out(func: Callable, items: Sequence) -> List:
    """Map ``func`` over ``items`` on worker threads; results keep input order."""
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(func, items))


def _grid(lo: float, hi: float, points: int, name: str) -> np.ndarray:
    if points < 1:
        raise DomainError("points", f"must be >= 1, got {points!r}")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise DomainError(name, f"empty range [{lo!r}, {hi!r}]")
    return np.linspace(lo, hi, points)


def _params(args: argparse.Namespace, base: Optional[ProtocolParams] = None) -> ProtocolParams:
    base = base or ProtocolParams(a=1.0, beta=0.0, C=1.0, tau=1.0)
    overrides = {
        "a": args.a,
        "beta": args.beta,
        "C": args.cap,
        "tau": args.tau,
        "kappa": getattr(args, "kappa", None),
    }
    return validate_params(replace(base, **{k: v for k, v in overrides.items() if v is not None}))


def _summary(name: str, **fields: object) -> None:
    print(f"{name}_done " + " ".join(f"{key}={value}" for key, value in fields.items()))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    base_params = None
    ic = InitialCondition(R0=1.2)
    cfg = SimConfig(horizon=100.0)
    if args.scenario:
        scenario = _scenario(args.scenario, FLUID)
        base_params, ic, cfg = scenario.params(), scenario.initial_condition(), scenario.sim_config()
    p = _params(args, base_params)
    if not args.scenario and args.r0 is None:
        ic = InitialCondition(R0=1.2 * p.C)
    ic = replace(
        ic,
        R0=ic.R0 if args.r0 is None else args.r0,
        q0=ic.q0 if args.q0 is None else args.q0,
    )
    cfg = replace(
        cfg,
        horizon=cfg.horizon if args.horizon is None else args.horizon,
        steps_per_delay=cfg.steps_per_delay if args.steps_per_delay is None else args.steps_per_delay,
        clamp_queue=args.clamp_queue,
    )

    traj = simulate(p, ic, cfg)
    outputs.append(write_trajectory(out / "trajectory.csv", traj))
    if traj.times[-1] > p.tau:
        outputs.append(write_phase_portrait(out / "phase.csv", phase_portrait(traj, p.tau)))
    verdict = analyze_trajectory(traj, equilibrium(p), args.tail_fraction)
    _summary(
        "simulate",
        t=repr(float(traj.times[-1])),
        samples=len(traj),
        verdict=verdict.kind,
        amplitude=repr(verdict.amplitude),
        diverged=traj.diverged,
    )


def cmd_stability_chart(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    grid = [float(a) for a in _grid(args.a_min, args.a_max, args.points, "a") if a < HALF_PI]
    if len(grid) < args.points:
        logger.warning("dropped %d grid points with a >= pi/2 (no stable beta)", args.points - len(grid))
    boundaries = _fan_out(stability_boundary_beta, grid)
    outputs.append(write_rows(out / "stability_chart.csv", CHART_HEADER, zip(grid, boundaries)))
    _summary("stability_chart", points=len(grid))


def cmd_spectrum(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    p = _params(args)
    if args.oracle:
        spectrum = lambert_w_roots(p)
    else:
        spectrum = rightmost_roots(p, args.n_roots, nodes=args.nodes)
    outputs.append(write_spectrum(out / "spectrum.csv", spectrum))
    _summary(
        "spectrum",
        method=spectrum.method,
        roots=len(spectrum),
        rightmost_re=repr(spectrum.rightmost.real),
        rightmost_im=repr(spectrum.rightmost.imag),
    )


def _roc_row(point):
    a, beta, tau = point
    if beta == 0.0:
        report = decay_rate_no_queue(a, tau)
    else:
        report = decay_rate_with_queue(ProtocolParams(a=a, beta=beta, C=1.0, tau=tau))
    return a, beta, report.sigma, report.binding_branch, report.regime


def cmd_roc(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    tau = 1.0 if args.tau is None else args.tau
    if args.a is not None and args.beta is not None:
        points = [(args.a, args.beta, tau)]
    elif args.beta is not None:
        points = [(float(a), args.beta, tau) for a in _grid(args.a_min, args.a_max, args.points, "a")]
    elif args.a is not None:
        points = [(args.a, float(b), tau) for b in _grid(args.beta_min, args.beta_max, args.points, "beta")]
    else:
        raise DomainError("a", "give --a, --beta, or both")
    rows = _fan_out(_roc_row, points)
    outputs.append(write_rows(out / "roc.csv", ROC_HEADER, rows))
    best = max(rows, key=lambda row: row[2])
    _summary("roc", points=len(rows), sigma_max=repr(best[2]), at_a=repr(best[0]), at_beta=repr(best[1]))


def cmd_hopf(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    C = 1.0 if args.cap is None else args.cap
    tau = 1.0 if args.tau is None else args.tau
    if args.sweep:
        thetas = [float(t) for t in _grid(args.theta_min, args.theta_max, args.points, "theta")]
        rows = hopf_sweep(thetas, C, tau)
        outputs.append(write_rows(out / "hopf_sweep.csv", HOPF_SWEEP_HEADER, rows))
        sub = sum(1 for row in rows if row[3] == "sub_critical")
        _summary("hopf", points=len(rows), sub_critical=sub, super_critical=len(rows) - sub)
        return

    if args.a is None or args.beta is None:
        raise DomainError("a", "a single Hopf report needs both --a and --beta")
    report = hopf_report(args.a, args.beta, C, tau)
    lines = report.as_lines()
    path = out / "hopf_report.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs.append(path)
    for line in lines:
        print(line)
    _summary("hopf", mu2=repr(report.mu2), beta2=repr(report.beta2), classification=report.classification)


def cmd_amplitude(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    a = HALF_PI if args.a is None else args.a
    C = 1.0 if args.cap is None else args.cap
    tau = 1.0 if args.tau is None else args.tau
    offsets = list(args.offsets)

    def one(offset: float):
        return measured_amplitudes(a, C, tau, [offset], args.horizon, args.steps_per_delay)[0]

    rows = _fan_out(one, offsets)
    outputs.append(write_rows(out / "amplitude.csv", AMPLITUDE_HEADER, rows))
    fields: Dict[str, object] = {"points": len(rows)}
    if len(rows) >= 2:
        fields["exponent"] = repr(power_law_exponent([r[1] for r in rows], [r[3] for r in rows]))
    _summary("amplitude", **fields)


def cmd_packet_sim(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    if args.scenario and args.config:
        raise DomainError("config", "use either --scenario or --config")
    if args.scenario:
        cfg = _scenario(args.scenario, PACKET).packet_config()
    elif args.config:
        cfg = load_packet_config(Path(args.config))
    else:
        cfg = PacketSimConfig(num_flows=100, C=1.0, tau=1.0, a=1.0, beta=0.0)
    overrides = {
        "num_flows": args.flows,
        "a": args.a,
        "beta": args.beta,
        "C": args.cap,
        "tau": args.tau,
        "update_interval": args.update_interval,
        "slot": args.slot,
        "horizon": args.horizon,
        "initial_rate": args.initial_rate,
        "max_queue": args.max_queue,
        "clamp_queue": True if args.clamp_queue else None,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})

    trace = run_packet_sim(cfg)
    outputs.append(write_packet_trace(out / "packet_trace.csv", trace))
    events = out / "events.log"
    events.write_text("\n".join(trace.event_log) + "\n", encoding="utf-8")
    outputs.append(events)
    stats = queue_stats(trace, args.tail_fraction)
    _summary(
        "packet_sim",
        samples=len(trace),
        mean_queue=repr(stats.mean),
        amplitude=repr(stats.amplitude),
        oscillating=stats.oscillating,
    )


def cmd_repro(args: argparse.Namespace, out: Path, outputs: List[Path]) -> None:
    results = run_checks()
    rows = []
    for name, passed, detail, elapsed in results:
        print(f"{'PASS' if passed else 'FAIL'} {name} {detail}")
        rows.append((name, "pass" if passed else "fail", repr(round(elapsed, 3)), detail))
    outputs.append(write_rows(out / "repro.csv", ("check", "result", "seconds", "detail"), rows))
    failed = [name for name, passed, _, _ in results if not passed]
    _summary("repro", checks=len(results), failed=len(failed))
    if failed:
        raise InternalError(f"{len(failed)} check(s) failed: {', '.join(failed)}")


def _scenario(name: str, kind: str):
    catalog = load_scenario_catalog()
    if name not in catalog:
        raise ConfigError("scenario", f"unknown scenario {name!r}")
    scenario = catalog[name]
    if scenario.kind != kind:
        raise ConfigError("scenario", f"{name!r} is a {scenario.kind} scenario")
    return scenario


COMMANDS: Dict[str, Callable[[argparse.Namespace, Path, List[Path]], None]] = {
    "simulate": cmd_simulate,
    "stability-chart": cmd_stability_chart,
    "spectrum": cmd_spectrum,
    "roc": cmd_roc,
    "hopf": cmd_hopf,
    "amplitude": cmd_amplitude,
    "packet-sim": cmd_packet_sim,
    "repro": cmd_repro,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_protocol_flags(parser: argparse.ArgumentParser, *, kappa: bool = True) -> None:
    parser.add_argument("--a", type=float, default=None, help="rate-mismatch gain a")
    parser.add_argument("--beta", type=float, default=None, help="queue gain beta")
    parser.add_argument("--cap", type=float, default=None, help="link capacity C")
    parser.add_argument("--tau", type=float, default=None, help="round-trip time tau")
    if kappa:
        parser.add_argument("--kappa", type=float, default=None, help="bifurcation parameter kappa")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="reserved; every model is deterministic")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--verbose", action="store_true", help="debug logging")
    noise.add_argument("--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(prog="rcplab", description="RCP fluid-model analysis and simulation")
    parser.add_argument("--version", action="version", version=f"rcplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="fluid trajectory and phase portrait")
    _add_protocol_flags(sim)
    sim.add_argument("--scenario", default=None, help="named fluid scenario")
    sim.add_argument("--r0", type=float, default=None, help="constant rate history")
    sim.add_argument("--q0", type=float, default=None, help="queue at t = 0")
    sim.add_argument("--horizon", type=float, default=None)
    sim.add_argument("--steps-per-delay", type=int, default=None)
    sim.add_argument("--clamp-queue", action="store_true", help="keep q >= 0")
    sim.add_argument("--tail-fraction", type=float, default=0.5)

    chart = sub.add_parser("stability-chart", parents=[common], help="beta boundary over an a grid")
    chart.add_argument("--a-min", type=float, default=0.05)
    chart.add_argument("--a-max", type=float, default=1.5)
    chart.add_argument("--points", type=int, default=60)

    spectrum_parser = sub.add_parser("spectrum", parents=[common], help="rightmost characteristic roots")
    _add_protocol_flags(spectrum_parser)
    spectrum_parser.add_argument("--n-roots", type=int, default=4)
    spectrum_parser.add_argument("--nodes", type=int, default=64)
    spectrum_parser.add_argument("--oracle", action="store_true", help="Lambert-W roots (beta = 0 only)")

    roc = sub.add_parser("roc", parents=[common], help="decay rate over a or beta")
    _add_protocol_flags(roc, kappa=False)
    roc.add_argument("--a-min", type=float, default=0.05)
    roc.add_argument("--a-max", type=float, default=1.5)
    roc.add_argument("--beta-min", type=float, default=0.0)
    roc.add_argument("--beta-max", type=float, default=1.0)
    roc.add_argument("--points", type=int, default=50)

    hopf = sub.add_parser("hopf", parents=[common], help="Hopf report or Theta sweep")
    _add_protocol_flags(hopf, kappa=False)
    hopf.add_argument("--sweep", action="store_true")
    hopf.add_argument("--theta-min", type=float, default=0.05)
    hopf.add_argument("--theta-max", type=float, default=HALF_PI)
    hopf.add_argument("--points", type=int, default=60)

    amp = sub.add_parser("amplitude", parents=[common], help="rate-only limit-cycle amplitudes")
    _add_protocol_flags(amp, kappa=False)
    amp.add_argument("--offsets", type=float, nargs="+", default=[0.01, 0.02, 0.04], help="kappa - kappa_c values")
    amp.add_argument("--horizon", type=float, default=1500.0)
    amp.add_argument("--steps-per-delay", type=int, default=16)

    pkt = sub.add_parser("packet-sim", parents=[common], help="slotted packet-level simulation")
    _add_protocol_flags(pkt, kappa=False)
    pkt.add_argument("--scenario", default=None, help="named packet scenario")
    pkt.add_argument("--config", default=None, help="key=value config file")
    pkt.add_argument("--flows", type=int, default=None)
    pkt.add_argument("--update-interval", type=float, default=None)
    pkt.add_argument("--slot", type=float, default=None)
    pkt.add_argument("--horizon", type=float, default=None)
    pkt.add_argument("--initial-rate", type=float, default=None)
    pkt.add_argument("--max-queue", type=float, default=None)
    pkt.add_argument("--clamp-queue", action="store_true", help="router reacts to the physical queue, not the backlog")
    pkt.add_argument("--tail-fraction", type=float, default=0.5)

    sub.add_parser("repro", parents=[common], help="run every reproduction check")
    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    _configure_logging(args.verbose, args.quiet)
    out: Path = args.out
    started = time.perf_counter()
    outputs: List[Path] = []
    status = 0
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out, outputs)
    except (DomainError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = 1
    except (InternalError, ConvergenceError, Inconclusive) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        status = 2
    except Exception as exc:
        logger.debug("unhandled failure in %s", args.command, exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 2

    # Failed runs still get a manifest once they have written something.
    if status == 0 or outputs:
        _write_run_manifest(args, outputs, status, started)
    return status


def _write_run_manifest(args: argparse.Namespace, outputs: List[Path], status: int, started: float) -> None:
    parameters = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in vars(args).items()
        if key not in ("verbose", "quiet", "out")
    }
    manifest = RunManifest(
        subcommand=args.command,
        parameters=parameters,
        outputs=[str(path) for path in outputs],
        version=__version__,
        duration_s=time.perf_counter() - started,
        exit_code=status,
    )
    write_manifest(args.out, manifest)


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
