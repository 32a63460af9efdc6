"""
Command-line surface of the QIPA Separation Lab.

Usage:
    python -m app.cli analyze --graph triangle.txt
    python -m app.cli power --spectrum model.json --oracle exp
    python -m app.cli compare --graph g.txt --alpha 1.2 --steps 300
    python -m app.cli error-scan --graph edge.txt --alphas 1,2,4,8
    python -m app.cli demo --no-timestamp
    python -m app.cli rerun --manifest runs/compare/manifest.json --out runs/again

Every command writes its reports plus a ``manifest.json`` into ``--out``
(default ``<output_dir>/<command>``). Exit codes: 0 success, 1 numerical
failure, 2 input error, 3 iteration budget exceeded.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from app import __version__
from app.artifacts import (
    plot_blowup,
    plot_trajectories,
    read_manifest,
    write_json,
    write_manifest,
    write_scan_csv,
    write_trajectory_csv,
)
from app.config import get_settings
from app.error_model import speedup_error_tradeoff
from app.exceptions import InputError, NumericalError
from app.graph_ising import (
    brute_force_maxcut,
    brute_force_spectrum,
    build_maxcut_hamiltonian,
    load_graph,
    seven_node_demo_graph,
    upscale,
)
from app.models import (
    AnsatzSpec,
    EvolutionConfig,
    OracleFunction,
    RunManifest,
    SeparationConstants,
    WeightedGraph,
)
from app.power_iteration import (
    closed_form_majority_count,
    iterations_to_majority,
    kappa_bounds,
    levels_from_request,
    load_spectrum,
)
from app.separation_analysis import analyze_spectrum
from app.statevector import (
    exact_imaginary_evolution,
    initial_parameters,
    prepare_ansatz_state,
    uniform_state,
)
from app.variational_engine import run_evolution, steps_to_within

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

DEFAULT_ALPHAS = "1,2,4,8,16,32,64,128,256,512,1024"
ORACLE_CHOICES = {"identity": "identity", "exp": "exp", "double-exp": "double_exp"}


# ============================================================================
# Shared helpers
# ============================================================================


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}"
        ) from exc


def _constants(args: argparse.Namespace) -> SeparationConstants:
    return SeparationConstants(c=args.c, d=args.d, k=args.k)


def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out if args.out is not None else get_settings().output_dir / args.command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _strip_out(argv: Sequence[str]) -> list[str]:
    """Drop ``--out`` so a manifest can be replayed into any directory."""
    kept, skip = [], False
    for token in argv:
        if skip:
            skip = False
            continue
        if token == "--out":
            skip = True
            continue
        if token.startswith("--out="):
            continue
        kept.append(token)
    return kept


def _finish(
    args: argparse.Namespace, argv: Sequence[str], out: Path, outputs: list[str]
) -> None:
    config = {
        key: (value.as_posix() if isinstance(value, Path) else value)
        for key, value in sorted(vars(args).items())
        if key not in {"handler", "out"}
    }
    inputs = {
        name: getattr(args, name).as_posix()
        for name in ("graph", "spectrum")
        if getattr(args, name, None) is not None
    }
    manifest = RunManifest(
        command=args.command,
        arguments=_strip_out(argv),
        inputs=inputs,
        seed=getattr(args, "seed", 0),
        config=config,
        tool_version=__version__,
        outputs=sorted(outputs),
    )
    write_manifest(out, manifest)
    logger.info("Wrote %s to %s", ", ".join(sorted(outputs)), out)


def _source_levels(args: argparse.Namespace):
    """(n, levels, summary) from --graph or --spectrum, upscaled by --alpha."""
    if args.alpha < 1:
        raise InputError(f"--alpha must be >= 1, got {args.alpha}")
    if args.graph is not None:
        graph = load_graph(args.graph)
        hamiltonian = upscale(build_maxcut_hamiltonian(graph), args.alpha)
        summary = brute_force_spectrum(hamiltonian)
        return summary.num_qubits, list(summary.levels), summary
    spectrum = load_spectrum(args.spectrum)
    levels = [(args.alpha * lam, m) for lam, m in levels_from_request(spectrum)]
    return spectrum.n, sorted(levels, reverse=True), None


# ============================================================================
# Commands
# ============================================================================


def cmd_analyze(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Separation verdict and recommended upscale for a graph or spectrum."""
    n, levels, summary = _source_levels(args)
    if len(levels) < 2:
        raise InputError("spectrum needs at least two levels")
    analysis = analyze_spectrum(n, levels[0][0], levels[1][0], _constants(args))
    payload = {"spectrum": summary, "analysis": analysis}
    if args.graph is not None:
        best, partitions = brute_force_maxcut(load_graph(args.graph))
        payload["maxcut"] = {"value": best, "partitions": partitions}

    out = _out_dir(args)
    write_json(out / "report.json", payload)
    _finish(args, argv, out, ["report.json"])
    print(
        f"n={n} lambda1={levels[0][0]:.6g} lambda2={levels[1][0]:.6g} "
        f"separated={analysis.report.separated} "
        f"recommended_alpha={analysis.recommended_alpha:.6g}"
    )
    return EXIT_OK


def cmd_power(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Empirical and closed-form iterations-to-majority plus kappa bounds."""
    n, levels, _ = _source_levels(args)
    oracle = OracleFunction(variant=ORACLE_CHOICES[args.oracle], dt=args.dt)
    result = iterations_to_majority(levels, oracle, max_iter=args.max_iter)

    (lambda1, m1), (lambda2, _) = levels[0], levels[1]
    closed_form = None
    if len(levels) == 2 and m1 == 1:
        closed_form = closed_form_majority_count(n, lambda1, lambda2, oracle)
    bounds = kappa_bounds(n, lambda1, lambda2) if lambda2 > 0 else None

    out = _out_dir(args)
    write_json(
        out / "power.json",
        {
            "n": n,
            "oracle": oracle,
            "empirical": result.iterations,
            "status": result.status,
            "solution_probability": result.solution_probability,
            "closed_form": closed_form,
            "bounds": bounds,
        },
    )
    _finish(args, argv, out, ["power.json"])
    print(
        f"{oracle.label}: empirical={result.iterations} "
        f"closed_form={closed_form} status={result.status}"
    )
    return EXIT_OK if result.status == "reached" else EXIT_BUDGET


def _run_comparison(
    args: argparse.Namespace, argv: Sequence[str], graph: WeightedGraph
) -> int:
    if args.alpha < 1:
        raise InputError(f"--alpha must be >= 1, got {args.alpha}")
    hamiltonian = upscale(build_maxcut_hamiltonian(graph), args.alpha)
    spec = AnsatzSpec(num_qubits=graph.num_nodes, layers=args.layers)
    theta0 = initial_parameters(spec, args.seed)
    modes = ["varqite", "qipa2"] if args.mode == "both" else [args.mode]

    out = _out_dir(args)
    outputs, trajectories, report = [], [], {}
    for mode in modes:
        config = EvolutionConfig(
            delta_tau=args.dtau,
            delta_t=args.dt,
            num_steps=args.steps,
            regularization=args.regularization,
            mode=mode,
            seed=args.seed,
            qipa_orientation=args.orientation,
        )
        trajectory = run_evolution(hamiltonian, spec, config, theta0=theta0)
        trajectories.append(trajectory)
        name = f"trajectory_{mode}.csv"
        write_trajectory_csv(out / name, trajectory)
        outputs.append(name)
        last = trajectory.records[-1] if trajectory.records else None
        report[mode] = {
            "steps_to_2pct": steps_to_within(trajectory, 0.02),
            "final_energy": last.energy if last else None,
            "final_solution_prob": last.solution_prob if last else None,
            "bures_cum": last.bures_cum if last else 0.0,
            "aborted": trajectory.aborted,
            "diagnostic": trajectory.diagnostic,
        }

    plot_trajectories(out / "energy.svg", trajectories, timestamp=not args.no_timestamp)
    write_json(
        out / "summary.json",
        {
            "alpha": args.alpha,
            "ground_energy": trajectories[0].ground_energy,
            "num_parameters": spec.num_parameters,
            "modes": report,
        },
    )
    outputs += ["energy.svg", "summary.json"]
    _finish(args, argv, out, outputs)
    for mode in modes:
        entry = report[mode]
        print(
            f"{mode}: steps_to_2pct={entry['steps_to_2pct']} "
            f"final_energy={entry['final_energy']}"
        )
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """varQITE and QIPA2 trajectories from the same starting parameters."""
    return _run_comparison(args, argv, load_graph(args.graph))


def cmd_demo(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Comparison on the seeded seven-node analogue instance."""
    graph = seven_node_demo_graph(args.graph_seed)
    best, _ = brute_force_maxcut(graph)
    logger.info("Demo graph: %d edges, max cut %g", len(graph.edges), best)
    return _run_comparison(args, argv, graph)


def cmd_error_scan(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Variance / Delta blow-up over upscale factors, joined with oracle speedup."""
    graph = load_graph(args.graph)
    hamiltonian = build_maxcut_hamiltonian(graph)
    n = graph.num_nodes
    if args.state == "uniform":
        state = uniform_state(n)
    elif args.state == "ansatz":
        spec = AnsatzSpec(num_qubits=n, layers=args.layers)
        state = prepare_ansatz_state(spec, initial_parameters(spec, args.seed))
    else:
        state = exact_imaginary_evolution(hamiltonian, uniform_state(n), args.tau)

    rows = speedup_error_tradeoff(
        hamiltonian,
        state,
        args.alphas,
        args.dt,
        args.dtau,
        oracle=OracleFunction(variant="exp", dt=args.oracle_dt),
        max_iter=args.max_iter,
    )
    out = _out_dir(args)
    write_scan_csv(out / "scan.csv", rows)
    plot_blowup(out / "scan.svg", rows, timestamp=not args.no_timestamp)
    write_json(out / "tradeoff.json", {"state": args.state, "rows": rows})
    _finish(args, argv, out, ["scan.csv", "scan.svg", "tradeoff.json"])
    last = rows[-1]
    print(f"{len(rows)} rows; delta={last.delta:.6g} iterations={last.iterations}")
    return EXIT_OK


def cmd_rerun(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Replay the arguments recorded in a manifest."""
    try:
        manifest = read_manifest(args.manifest)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from exc
    replay = list(manifest.arguments)
    if args.out is not None:
        replay += ["--out", args.out.as_posix()]
    logger.info("Replaying %s", " ".join(replay))
    return main(replay)


# ============================================================================
# Parser
# ============================================================================


def _add_source(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--graph", type=Path, help="Edge list or JSON graph file.")
    group.add_argument("--spectrum", type=Path, help="JSON spectrum file.")
    parser.add_argument(
        "--alpha", type=float, default=1.0, help="Upscale factor (>= 1)."
    )


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=None, help="Output directory.")
    parser.add_argument(
        "--no-timestamp",
        dest="no_timestamp",
        action="store_true",
        help="Omit dates from SVG output.",
    )


def _add_constants(parser: argparse.ArgumentParser) -> None:
    settings = get_settings()
    parser.add_argument("--c", type=float, default=settings.default_c)
    parser.add_argument("--d", type=float, default=settings.default_d)
    parser.add_argument("--k", type=float, default=settings.default_k)


def _add_evolution(parser: argparse.ArgumentParser, alpha: float) -> None:
    parser.add_argument("--alpha", type=float, default=alpha)
    parser.add_argument(
        "--dtau", type=float, default=0.002, help="Imaginary-time Euler step."
    )
    parser.add_argument("--dt", type=float, default=0.01, help="QIPA2 oracle step.")
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--layers", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=["varqite", "qipa2", "both"], default="both")
    parser.add_argument(
        "--regularization", type=float, default=get_settings().regularization
    )
    parser.add_argument("--orientation", choices=["ground", "raw"], default="ground")


def build_argparser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="qipa-lab", description="Desk-scale checks of varQITE vs QIPA2 separation."
    )
    parser.add_argument("--log-level", dest="log_level", default=settings.log_level)
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="Separation report for a graph or spectrum.")
    _add_source(pa)
    _add_constants(pa)
    _add_output(pa)
    pa.set_defaults(handler=cmd_analyze)

    pp = sub.add_parser("power", help="Iterations-to-majority of the power iteration.")
    _add_source(pp)
    pp.add_argument("--oracle", choices=sorted(ORACLE_CHOICES), default="exp")
    pp.add_argument("--dt", type=float, default=1.0, help="Oracle step.")
    pp.add_argument("--max-iter", dest="max_iter", type=int, default=settings.max_iter)
    _add_output(pp)
    pp.set_defaults(handler=cmd_power)

    pc = sub.add_parser("compare", help="varQITE vs QIPA2 trajectories on a graph.")
    pc.add_argument("--graph", type=Path, required=True)
    _add_evolution(pc, alpha=1.0)
    _add_output(pc)
    pc.set_defaults(handler=cmd_compare)

    pe = sub.add_parser("error-scan", help="Error blow-up over upscale factors.")
    pe.add_argument("--graph", type=Path, required=True)
    pe.add_argument("--alphas", type=_float_list, default=_float_list(DEFAULT_ALPHAS))
    pe.add_argument("--dt", type=float, default=0.01, help="Requested oracle step.")
    pe.add_argument("--dtau", type=float, default=0.01)
    pe.add_argument(
        "--state",
        choices=["uniform", "ansatz", "exact"],
        default="uniform",
        help="State the expectations are taken in.",
    )
    pe.add_argument(
        "--tau", type=float, default=0.1, help="Imaginary time for --state exact."
    )
    pe.add_argument("--layers", type=int, default=2)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--oracle-dt", dest="oracle_dt", type=float, default=1.0)
    pe.add_argument("--max-iter", dest="max_iter", type=int, default=settings.max_iter)
    _add_output(pe)
    pe.set_defaults(handler=cmd_error_scan)

    pd = sub.add_parser("demo", help="Comparison on the seeded seven-node instance.")
    pd.add_argument("--graph-seed", dest="graph_seed", type=int, default=7)
    _add_evolution(pd, alpha=1.2)
    _add_output(pd)
    pd.set_defaults(handler=cmd_demo)

    pr = sub.add_parser("rerun", help="Replay a manifest.json.")
    pr.add_argument("--manifest", type=Path, required=True)
    pr.add_argument("--out", type=Path, default=None)
    pr.set_defaults(handler=cmd_rerun)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_argparser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args, argv)
    except (InputError, ValidationError) as exc:
        logger.error("Input error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        logger.error("Numerical failure: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
