"""Command-line front end for the qgsp toolkit.

Every subcommand reads a :class:`RunConfig` (a flat JSON ``--config`` file overridden by
explicit flags), derives all randomness from ``--seed``, writes its artifact and a
``<stem>.ledger.json`` query ledger beside it, and exits with 0 on success, 2 on a
precondition violation and 3 on a numerical failure.
"""

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from cli.config import settings
from cli.logging_setup import configure_logging
from cli.models import (
    AeMode,
    EnergyResultPayload,
    ErrorPayload,
    Family,
    OutputFormat,
    PhasePayload,
    PolynomialPayload,
    PrepResultPayload,
    RunConfig,
    RunStatus,
    SweepRow,
)
from modules.blockenc.encoding import QueryLedger
from modules.blockenc.reflector import make_reflector, sign_phase_factors
from modules.energysearch.search import GroundEnergySearch, prepare_without_bound
from modules.exceptions import ContractViolation, NumericalFailure, QgspError
from modules.groundprep.preparer import PrepProblem, prepare_low_energy, prepare_with_bound
from modules.hamlib.benchmarks import (
    avoided_crossing_truth,
    make_counting,
    make_grover_family,
    make_marked_oracle,
    search_reduction_probability,
    single_qubit_encoding,
)
from modules.hamlib.loader import build_family
from modules.polyapprox.remez import build_sign_poly, sign_poly_at_degree
from modules.qsp.phases import realized_residual, solve_phase_factors
from modules.sweeps.tasks import reflector_sweep

logger = logging.getLogger(__name__)

EXIT_CODES = {
    RunStatus.OK: 0,
    RunStatus.CONTRACT_VIOLATION: 2,
    RunStatus.NUMERICAL_FAILURE: 3,
}

Artifact = Tuple[Any, QueryLedger]


def _rows_to_csv(rows: List[Dict[str, Any]], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def output_path(config: RunConfig) -> str:
    if config.out:
        return config.out
    return os.path.join(settings.OUTPUT_DIR, f"{config.command}.{config.format.value}")


def ledger_path(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return f"{stem}.ledger.json"


def write_artifact(config: RunConfig, payload: Any, ledger: QueryLedger) -> str:
    """Write the primary artifact and its ledger; returns the artifact path."""
    path = output_path(config)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if config.format == OutputFormat.CSV:
        rows = payload if isinstance(payload, list) else [payload]
        _rows_to_csv(rows, path)
    else:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    with open(ledger_path(path), "w") as f:
        json.dump(ledger.to_json(), f, indent=2)
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def cmd_sign_poly(config: RunConfig) -> Artifact:
    if config.degree is not None:
        poly = sign_poly_at_degree(config.delta, config.degree)
    else:
        poly = build_sign_poly(config.delta, config.eps)
    payload = PolynomialPayload.model_validate(
        {**poly.to_json(), "eps": poly.eps_target or config.eps}
    )
    return payload.model_dump(), QueryLedger()


def cmd_phase_factors(config: RunConfig) -> Artifact:
    if config.degree is not None:
        poly = sign_poly_at_degree(config.delta, config.degree)
        phases = solve_phase_factors(poly, config.eps / 2.0)
    else:
        poly, phases = sign_phase_factors(config.delta, config.eps)
    payload = PhasePayload.model_validate(phases.to_json())
    result = payload.model_dump()
    result["polynomial_residual"] = realized_residual(phases, poly)
    return result, QueryLedger()


def cmd_reflector_sweep(config: RunConfig) -> Artifact:
    rows = reflector_sweep(config.points, config.delta, config.eps)
    rows = [SweepRow.model_validate(row).model_dump() for row in rows]
    # every point applies one reflector of the same degree
    ledger = QueryLedger()
    ref = make_reflector(single_qubit_encoding(0.0), 0.0, config.delta, config.eps)
    ledger.record_cost(ref.cost, config.points)
    return rows, ledger


def cmd_prepare(config: RunConfig) -> Artifact:
    rng = np.random.default_rng(config.seed)
    instance = build_family(config, rng)
    problem = PrepProblem.from_instance(
        instance, gamma=config.gamma, eps=config.eps, delta_gap=config.delta_gap, mu=config.mu
    )
    result = prepare_with_bound(problem, rng, deterministic=config.deterministic)
    payload = PrepResultPayload.model_validate(result.to_json())
    return payload.model_dump(), result.ledger


def _require_h(config: RunConfig) -> float:
    if config.h is None:
        raise ContractViolation(f"{config.command} needs --h")
    return config.h


def cmd_estimate_energy(config: RunConfig) -> Artifact:
    rng = np.random.default_rng(config.seed)
    instance = build_family(config, rng)
    search = GroundEnergySearch.from_instance(
        instance, config.gamma, _require_h(config), config.vartheta, ae_mode=config.ae_mode,
        shift=config.shift,
    )
    bracket = search.run(rng)
    payload = EnergyResultPayload.model_validate(bracket.to_json()).model_dump()
    payload["params"]["ground_energy"] = instance.ground_energy
    return payload, bracket.ledger


def cmd_prepare_unknown(config: RunConfig) -> Artifact:
    rng = np.random.default_rng(config.seed)
    instance = build_family(config, rng)
    delta_gap = config.delta_gap if config.delta_gap is not None else instance.gap
    result = prepare_without_bound(
        instance.encoding, instance.state_prep, config.gamma, delta_gap, config.eps,
        config.vartheta, rng, ae_mode=config.ae_mode, truth=instance,
        deterministic=config.deterministic, shift=config.shift,
    )
    payload = PrepResultPayload.model_validate(result.to_json())
    return payload.model_dump(), result.ledger


def cmd_low_energy(config: RunConfig) -> Artifact:
    if config.mu is None:
        raise ContractViolation("low-energy needs --mu")
    rng = np.random.default_rng(config.seed)
    instance = build_family(config, rng)
    problem = PrepProblem(
        encoding=instance.encoding, state_prep=instance.state_prep, gamma=config.gamma,
        eps=config.eps, truth=instance,
    )
    result = prepare_low_energy(
        problem, config.mu, config.resolution, rng,
        deterministic=config.deterministic, eps_prime=config.eps_prime,
    )
    payload = PrepResultPayload.model_validate(result.to_json())
    return payload.model_dump(), result.ledger


def cmd_lowerbound_demo(config: RunConfig) -> Artifact:
    n = config.n
    N = 2**n
    truth = avoided_crossing_truth(n, config.delta_exp)
    grover = make_grover_family(n, 0.5)
    marked = make_marked_oracle(n)
    t = marked.params["t"]
    counting = make_counting(n, list(range(config.marked_count)))
    nonzero = counting.eigenvalues[np.abs(counting.eigenvalues) > settings.SPECTRAL_TOL]
    payload = {
        "n": n,
        "avoided_crossing": asdict(truth),
        "avoided_crossing_dense_gap": make_grover_family(n, truth.tau).gap,
        "grover_half": {"gap": grover.gap, "predicted_gap": 2.0 / np.sqrt(N)},
        "counting": {
            "marked_count": config.marked_count,
            "nonzero_eigenvalues": [float(v) for v in nonzero],
            "predicted": counting.extras["predicted_eigenvalue"],
        },
        "search_reduction": {
            "marked_ground_state": search_reduction_probability(marked.ground_state, t),
            "grover_half_ground_state": search_reduction_probability(grover.ground_state, t),
        },
    }
    return payload, QueryLedger()


COMMANDS: Dict[str, Callable[[RunConfig], Artifact]] = {
    "sign-poly": cmd_sign_poly,
    "phase-factors": cmd_phase_factors,
    "reflector-sweep": cmd_reflector_sweep,
    "prepare": cmd_prepare,
    "estimate-energy": cmd_estimate_energy,
    "prepare-unknown": cmd_prepare_unknown,
    "low-energy": cmd_low_energy,
    "lowerbound-demo": cmd_lowerbound_demo,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps unset flags out of the namespace so config-file values survive
    s = argparse.SUPPRESS
    parser.add_argument("--config", default=s, help="Flat JSON file with RunConfig fields.")
    parser.add_argument("--log-json", action="store_true", default=s, help="Structured logs.")
    parser.add_argument("--family", choices=[f.value for f in Family], default=s)
    parser.add_argument("--n", type=int, default=s, help="System qubits.")
    parser.add_argument("--a", type=float, default=s, help="Single-qubit family parameter.")
    parser.add_argument("--tau", type=float, default=s, help="Grover family parameter.")
    parser.add_argument("--marked", type=int, nargs="+", default=s, help="Marked indices.")
    parser.add_argument("--marked-count", type=int, default=s)
    parser.add_argument("--delta-exp", type=float, default=s)
    parser.add_argument("--coupling", type=float, default=s)
    parser.add_argument("--transverse-field", type=float, default=s)
    parser.add_argument("--hamiltonian", default=s, help="Dense or Pauli-list JSON file.")
    parser.add_argument("--gamma", type=float, default=s, help="Overlap lower bound.")
    parser.add_argument("--delta-gap", type=float, default=s, help="Spectral gap lower bound.")
    parser.add_argument("--mu", type=float, default=s, help="Energy bound.")
    parser.add_argument("--h", type=float, default=s, help="Energy grid spacing.")
    parser.add_argument("--shift", type=float, default=s, help="Energy grid origin offset.")
    parser.add_argument("--eps", type=float, default=s)
    parser.add_argument("--vartheta", type=float, default=s, help="Search failure budget.")
    parser.add_argument("--delta", type=float, default=s, help="Sign-polynomial window.")
    parser.add_argument("--eps-prime", type=float, default=s)
    parser.add_argument("--resolution", type=float, default=s)
    parser.add_argument("--degree", type=int, default=s)
    parser.add_argument("--points", type=int, default=s)
    parser.add_argument("--ae-mode", choices=[m.value for m in AeMode], default=s)
    parser.add_argument("--schedule", dest="deterministic", action="store_false", default=s,
                        help="Use the exponential-guess amplification schedule.")
    parser.add_argument("--seed", type=int, default=s)
    parser.add_argument("--out", default=s)
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default=s)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_TITLE,
        description="QSP ground-state preparation and ground-energy estimation toolkit.",
    )
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common(subparsers.add_parser(name))
    return parser


def load_config(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, bool]:
    """Merge the config file and the flags; flags win."""
    args = vars(build_parser().parse_args(argv))
    log_json = bool(args.pop("log_json", settings.LOG_JSON))
    values: Dict[str, Any] = {}
    config_file = args.pop("config", None)
    if config_file:
        try:
            with open(config_file, "r") as f:
                values = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ContractViolation(f"cannot read config file {config_file}: {e}") from e
        if not isinstance(values, dict):
            raise ContractViolation(f"config file {config_file} must hold a JSON object")
    values.update(args)
    return RunConfig.model_validate(values), log_json


def _fail(status: RunStatus, error: Exception) -> int:
    payload = ErrorPayload(error=type(error).__name__, message=str(error))
    sys.stderr.write(payload.model_dump_json() + "\n")
    return EXIT_CODES[status]


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging(settings.LOG_LEVEL, settings.LOG_JSON)
    try:
        config, log_json = load_config(argv)
        if log_json:
            configure_logging(settings.LOG_LEVEL, True)
        logger.info(f"Running {config.command} with seed {config.seed}")
        payload, ledger = COMMANDS[config.command](config)
        write_artifact(config, payload, ledger)
        return EXIT_CODES[RunStatus.OK]
    except (ContractViolation, ValidationError) as e:
        logger.error(f"Precondition violated: {e}")
        return _fail(RunStatus.CONTRACT_VIOLATION, e)
    except NumericalFailure as e:
        logger.error(f"Numerical failure: {e}")
        return _fail(RunStatus.NUMERICAL_FAILURE, e)
    except QgspError as e:
        logger.error(f"Unclassified toolkit error: {e}")
        return _fail(RunStatus.NUMERICAL_FAILURE, e)
    except Exception as e:
        logger.error(f"Unexpected {type(e).__name__}: {e}", exc_info=True)
        return _fail(RunStatus.NUMERICAL_FAILURE, e)


if __name__ == "__main__":
    sys.exit(main())
