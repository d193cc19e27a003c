"""Binary search for the ground energy on a uniform grid.

Grid point ``x_k`` is probed with the raw circuit ``PROJ(x_k, h/(2α̃), γ/2)·(I ⊗ U_I)``,
whose flagged amplitude is at least ``3γ/4`` when ``λ_0 ≤ x_{k−1}`` and at most ``γ/4`` when
``λ_0 ≥ x_{k+1}``. Binary amplitude estimation turns it into a bit ``B_k`` and the search
narrows ``[L, U]`` from the pair ``(B_k, B_{k+1})``:

    (1, 1)  λ_0 < x_{k+1}             U ← k + 1
    (0, 0)  λ_0 > x_k                 L ← k
    (0, 1)  x_{k−1} < λ_0 < x_{k+2}   stop with (k − 1, k + 2)
    (1, 0)  x_k < λ_0 < x_{k+1}       stop with (k, k + 1)
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cli.models import AeMode
from modules.blockenc.encoding import BlockEncoding, QueryLedger
from modules.blockenc.reflector import make_projector
from modules.energysearch.estimator import AeConfig, AeOutcome, binary_amplitude_estimate
from modules.exceptions import ContractViolation, ConvergenceError
from modules.groundprep.amplification import FlaggedCircuit
from modules.groundprep.preparer import (
    PrepProblem,
    PrepResult,
    flagged_projection,
    prepare_with_bound,
    state_prep_cost,
)
from modules.hamlib.benchmarks import BenchmarkInstance
from modules.linalg.dense import ComplexMatrix, SeedLike, StateVector, as_generator

logger = logging.getLogger(__name__)

# (k, x_k) -> flagged amplitude
AmplitudeSource = Callable[[int, float], float]


@dataclass(frozen=True)
class EnergyGrid:
    """Points ``x_k = −α − s + k·h`` for ``k = 0..G`` with ``G = ⌈(2α + s)/h⌉``."""

    alpha: float
    h: float
    shift: float = 0.0

    def __post_init__(self) -> None:
        if self.h <= 0.0:
            raise ContractViolation(f"grid spacing must be positive, got {self.h}")
        if not 0.0 <= self.shift < self.h:
            raise ContractViolation(f"grid shift must lie in [0, h), got {self.shift}")
        if self.h >= 2.0 * self.alpha:
            raise ContractViolation(f"grid spacing {self.h} does not resolve [-{self.alpha}, "
                                    f"{self.alpha}]")

    @property
    def size(self) -> int:
        """``G``; the grid holds ``G + 1`` points."""
        return int(np.ceil((2.0 * self.alpha + self.shift) / self.h - 1e-12))

    def point(self, k: int) -> float:
        return -self.alpha - self.shift + k * self.h

    @property
    def points(self) -> np.ndarray:
        return -self.alpha - self.shift + self.h * np.arange(self.size + 1)

    def max_iterations(self) -> int:
        """Loop guard ``⌈log2 G⌉ + 2``."""
        return int(np.ceil(np.log2(max(self.size, 2)))) + 2


@dataclass
class TraceEntry:
    k: int
    b_k: int
    b_k1: int
    ambiguous: bool
    lower: int
    upper: int


@dataclass
class EnergyBracket:
    """Grid interval ``[x_L, x_U]`` holding ``λ_0`` with confidence ``1 − ϑ``."""

    lower: int
    upper: int
    grid: EnergyGrid
    vartheta: float
    iterations: int
    ledger: QueryLedger
    trace: List[TraceEntry] = field(default_factory=list)
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def x_lower(self) -> float:
        return self.grid.point(self.lower)

    @property
    def x_upper(self) -> float:
        return self.grid.point(self.upper)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.x_lower + self.x_upper)

    @property
    def width(self) -> float:
        return self.x_upper - self.x_lower

    @property
    def confidence(self) -> float:
        return 1.0 - self.vartheta

    @property
    def widths(self) -> List[int]:
        """``U − L`` before the first iteration and after each one."""
        return [self.grid.size] + [entry.upper - entry.lower for entry in self.trace]

    def contains(self, energy: float) -> bool:
        return self.x_lower < energy < self.x_upper

    def to_json(self) -> Dict[str, Any]:
        return {
            "bracket": [self.x_lower, self.x_upper],
            "indices": [self.lower, self.upper],
            "h": self.grid.h,
            "vartheta": self.vartheta,
            "iterations": self.iterations,
            "ledger": self.ledger.to_json(),
            "trace": [
                {"k": e.k, "b_k": e.b_k, "b_k1": e.b_k1, "ambiguous": e.ambiguous}
                for e in self.trace
            ],
            "params": self.params,
        }


def probe_circuit(
    be_H: BlockEncoding, state_prep: ComplexMatrix, grid: EnergyGrid, k: int, gamma: float
) -> FlaggedCircuit:
    """``PROJ(x_k, h/(2α̃), γ/2)·(I ⊗ U_I)`` with ``α̃ = α + |x_k|``."""
    x_k = grid.point(k)
    alpha_shifted = be_H.alpha + abs(x_k)
    projector = make_projector(be_H, x_k, grid.h / (2.0 * alpha_shifted), gamma / 2.0)
    return flagged_projection(projector, state_prep)


def _thresholds(gamma: float) -> Tuple[float, float]:
    return gamma / 4.0, 3.0 * gamma / 4.0


def probe_grid_point(
    be_H: BlockEncoding,
    state_prep: ComplexMatrix,
    k: int,
    grid: EnergyGrid,
    gamma: float,
    cfg: AeConfig,
    rng: SeedLike,
    ledger: Optional[QueryLedger] = None,
) -> int:
    """Bit ``B_k``: 1 signals ``λ_0 < x_{k+1}``, 0 signals ``λ_0 > x_{k−1}``."""
    if not 0 <= k <= grid.size:
        raise ContractViolation(f"grid index {k} outside [0, {grid.size}]")
    circuit = probe_circuit(be_H, state_prep, grid, k, gamma)
    gamma0, gamma1 = _thresholds(gamma)
    return binary_amplitude_estimate(circuit, gamma0, gamma1, cfg, rng, ledger).bit


class GroundEnergySearch:
    """Reusable ground-energy search over one grid.

    Probe circuits and their amplitudes are cached per grid index, so repeated runs with
    different seeds only pay for the sampling. ``amplitude_source`` replaces the circuits by
    a function ``(k, x_k) -> A_k``; the ledger then records only the ``U_I`` queries.
    """

    def __init__(
        self,
        encoding: BlockEncoding,
        state_prep: ComplexMatrix,
        gamma: float,
        h: float,
        vartheta: float,
        ae_mode: AeMode = AeMode.STATISTICAL_MODEL,
        shift: float = 0.0,
        amplitude_source: Optional[AmplitudeSource] = None,
        cfg: Optional[AeConfig] = None,
    ):
        if not 0.0 < gamma <= 1.0:
            raise ContractViolation(f"gamma must lie in (0, 1], got {gamma}")
        if not 0.0 < vartheta < 1.0:
            raise ContractViolation(f"vartheta must lie in (0, 1), got {vartheta}")
        self.encoding = encoding
        self.state_prep = state_prep
        self.gamma = gamma
        self.vartheta = vartheta
        self.grid = EnergyGrid(alpha=encoding.alpha, h=h, shift=shift)
        self.cfg = cfg or AeConfig.for_search(ae_mode, gamma, encoding.alpha, h, vartheta)
        if amplitude_source is not None and self.cfg.mode == AeMode.CIRCUIT_QPE:
            raise ContractViolation("circuit_qpe mode cannot run on an external amplitude source")
        self.amplitude_source = amplitude_source
        self._circuits: Dict[int, FlaggedCircuit] = {}
        self._amplitudes: Dict[int, float] = {}
        logger.info(
            f"Energy search on {self.grid.size + 1} grid points (h={h:.4g}), "
            f"AE mode {self.cfg.mode.value}: M={self.cfg.points}, r={self.cfg.repetitions}, "
            f"delta={self.cfg.delta:.3e}"
        )

    @classmethod
    def from_instance(cls, instance: BenchmarkInstance, gamma: float, h: float, vartheta: float,
                      **kwargs: Any) -> "GroundEnergySearch":
        return cls(instance.encoding, instance.state_prep, gamma, h, vartheta, **kwargs)

    def circuit(self, k: int) -> FlaggedCircuit:
        if k not in self._circuits:
            self._circuits[k] = probe_circuit(
                self.encoding, self.state_prep, self.grid, k, self.gamma
            )
        return self._circuits[k]

    def amplitude(self, k: int) -> float:
        if k not in self._amplitudes:
            if self.amplitude_source is not None:
                self._amplitudes[k] = float(self.amplitude_source(k, self.grid.point(k)))
            else:
                self._amplitudes[k] = self.circuit(k).amplitude
        return self._amplitudes[k]

    def probe(self, k: int, rng: np.random.Generator, ledger: QueryLedger) -> AeOutcome:
        gamma0, gamma1 = _thresholds(self.gamma)
        if self.amplitude_source is not None:
            return binary_amplitude_estimate(
                None, gamma0, gamma1, self.cfg, rng, ledger,
                amplitude=self.amplitude(k), cost=state_prep_cost(),
            )
        circuit = self.circuit(k) if self.cfg.mode == AeMode.CIRCUIT_QPE else None
        return binary_amplitude_estimate(
            circuit, gamma0, gamma1, self.cfg, rng, ledger,
            amplitude=self.amplitude(k), cost=self.circuit(k).cost,
        )

    def run(self, rng: SeedLike, ledger: Optional[QueryLedger] = None) -> EnergyBracket:
        """Run the binary search once.

        Returns:
            Indices ``L < U`` with ``U − L ≤ 3``

        Raises:
            ConvergenceError: If the loop guard ``⌈log2 G⌉ + 2`` is exceeded
        """
        rng = as_generator(rng)
        ledger = QueryLedger() if ledger is None else ledger
        lower, upper = 0, self.grid.size
        trace: List[TraceEntry] = []
        guard = self.grid.max_iterations()
        iterations = 0
        while upper - lower > 3:
            if iterations >= guard:
                logger.error(f"Binary search still at width {upper - lower} after {iterations} "
                             f"iterations")
                raise ConvergenceError("binary search did not contract", upper - lower, iterations)
            k = (lower + upper) // 2
            first = self.probe(k, rng, ledger)
            second = self.probe(k + 1, rng, ledger)
            iterations += 1
            pair = (first.bit, second.bit)
            if pair == (1, 1):
                upper = k + 1
            elif pair == (0, 0):
                lower = k
            elif pair == (0, 1):
                lower, upper = k - 1, k + 2
            else:
                lower, upper = k, k + 1
            ambiguous = first.ambiguous or second.ambiguous
            if ambiguous:
                logger.debug(f"Probe at k={k} inside the promise gap")
            trace.append(TraceEntry(k, first.bit, second.bit, ambiguous, lower, upper))
            logger.debug(f"k={k}: B=({first.bit}, {second.bit}) -> [{lower}, {upper}]")
            if pair in ((0, 1), (1, 0)):
                break
        bracket = EnergyBracket(
            lower=lower,
            upper=upper,
            grid=self.grid,
            vartheta=self.vartheta,
            iterations=iterations,
            ledger=ledger,
            trace=trace,
            params={
                "gamma": self.gamma,
                "alpha": self.grid.alpha,
                "shift": self.grid.shift,
                "ae_mode": self.cfg.mode.value,
                "evaluation_points": self.cfg.points,
                "repetitions": self.cfg.repetitions,
                "delta_ae": self.cfg.delta,
            },
        )
        logger.info(
            f"Ground energy in [{bracket.x_lower:.6g}, {bracket.x_upper:.6g}] after "
            f"{iterations} iterations"
        )
        return bracket


def locate_ground_energy(
    be_H: BlockEncoding,
    state_prep: ComplexMatrix,
    h: float,
    gamma: float,
    vartheta: float,
    rng: SeedLike,
    ae_mode: AeMode = AeMode.STATISTICAL_MODEL,
    shift: float = 0.0,
    amplitude_source: Optional[AmplitudeSource] = None,
) -> EnergyBracket:
    """Bracket ``λ_0`` to within ``3h`` with probability at least ``1 − ϑ``.

    Only the overlap promise ``|⟨φ_0|ψ_0⟩| ≥ γ`` is needed.
    """
    search = GroundEnergySearch(
        be_H, state_prep, gamma, h, vartheta,
        ae_mode=ae_mode, shift=shift, amplitude_source=amplitude_source,
    )
    return search.run(rng)


def prepare_without_bound(
    be_H: BlockEncoding,
    state_prep: ComplexMatrix,
    gamma: float,
    delta_gap: float,
    eps: float,
    vartheta: float,
    rng: SeedLike,
    ae_mode: AeMode = AeMode.STATISTICAL_MODEL,
    truth: Optional[BenchmarkInstance] = None,
    deterministic: bool = True,
    shift: float = 0.0,
    search: Optional[GroundEnergySearch] = None,
) -> PrepResult:
    """Locate ``λ_0`` with ``h = Δ/6`` and prepare the ground state above the bracket.

    The bracket has width at most ``Δ/2``, so ``μ = (x_L + x_U)/2 + Δ/2`` keeps ``λ_0`` and
    ``λ_1`` at least ``Δ/4`` away from ``μ``. ``shift`` moves the grid origin as in
    :class:`EnergyGrid`. Repeated runs can pass the same ``search`` to reuse its cached
    grid-point circuits; its grid spacing must be ``Δ/6``.
    """
    if delta_gap <= 0.0:
        raise ContractViolation(f"Delta must be positive, got {delta_gap}")
    rng = as_generator(rng)
    h = delta_gap / 6.0
    if search is None:
        search = GroundEnergySearch(
            be_H, state_prep, gamma, h, vartheta, ae_mode=ae_mode, shift=shift
        )
    elif abs(search.grid.h - h) > 1e-12 * h:
        raise ContractViolation(f"search grid spacing {search.grid.h} differs from Delta/6 = {h}")
    bracket = search.run(rng)
    mu = bracket.midpoint + delta_gap / 2.0
    logger.info(f"Preparing above bracket [{bracket.x_lower:.6g}, {bracket.x_upper:.6g}] "
                f"at mu={mu:.6g}")
    problem = PrepProblem(
        encoding=be_H, state_prep=state_prep, gamma=gamma, eps=eps,
        delta_gap=delta_gap, mu=mu, truth=truth,
    )
    result = prepare_with_bound(problem, rng, deterministic=deterministic)
    result.ledger.merge(bracket.ledger)
    result.params.update(
        {"h": h, "vartheta": vartheta, "bracket": [bracket.x_lower, bracket.x_upper]}
    )
    return result


def ensemble_fidelity(states: Sequence[StateVector], instance: BenchmarkInstance) -> float:
    """``⟨ψ_0|ρ|ψ_0⟩`` for the uniform mixture of the given runs' outputs."""
    if not states:
        raise ContractViolation("ensemble is empty")
    return float(np.mean([instance.fidelity(state) ** 2 for state in states]))


def mixed_state_floor(vartheta: float, eps: float) -> float:
    """``(1 − ϑ)(1 − ε)²``, the guaranteed ensemble fidelity."""
    return (1.0 - vartheta) * (1.0 - eps) ** 2
