"""
Pydantic models for the QIPA Separation Lab.

Domain values (graphs, Hamiltonians, spectra, states) are frozen after
validation. Array-valued models keep their numpy buffers read-only.
The request/response payloads of the HTTP surface live at the bottom.
"""

import math
from typing import Literal, Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Parameter vector theta of the hardware-efficient ansatz
ParameterVector = NDArray[np.float64]

OracleVariant = Literal["identity", "exp", "double_exp"]
EvolutionMode = Literal["varqite", "qipa2"]


def _normalize_pairs(value):
    """Order each (u, v, w) so u <= v and drop zero-weight entries."""
    normalized = []
    for entry in value:
        u, v, w = entry
        u, v = int(u), int(v)
        if u > v:
            u, v = v, u
        normalized.append((u, v, float(w)))
    return tuple(item for item in normalized if item[2] != 0.0)


def _check_pairs(pairs, num_nodes: int, what: str) -> None:
    seen = set()
    for u, v, w in pairs:
        if u == v:
            raise ValueError(f"self loop on node {u}")
        if u < 0 or v >= num_nodes:
            raise ValueError(f"{what} ({u}, {v}) outside 0..{num_nodes - 1}")
        if not math.isfinite(w) or w < 0:
            raise ValueError(f"{what} ({u}, {v}) has invalid weight {w}")
        if (u, v) in seen:
            raise ValueError(f"duplicate {what} ({u}, {v})")
        seen.add((u, v))


# ============================================================================
# Graphs and Hamiltonians
# ============================================================================


class WeightedGraph(BaseModel):
    """
    Undirected weighted graph on nodes ``0..num_nodes-1``.

    Edges are stored as ``(u, v, w)`` with ``u < v`` and ``w > 0``; a
    zero weight means "no edge" and is dropped during validation.
    """

    model_config = ConfigDict(frozen=True)

    num_nodes: int = Field(ge=1)
    edges: tuple[tuple[int, int, float], ...] = ()

    @field_validator("edges", mode="before")
    @classmethod
    def _normalize_edges(cls, value):
        return _normalize_pairs(value)

    @model_validator(mode="after")
    def _check_edges(self):
        _check_pairs(self.edges, self.num_nodes, "edge")
        return self

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)


class IsingHamiltonian(BaseModel):
    """
    Diagonal Hamiltonian ``alpha * sum w_ij Z_i Z_j`` on ``num_qubits`` qubits.

    ``terms`` keep the base coefficients; ``alpha`` is the upscale factor and
    ``offset`` the constant ``sum(w)/2`` dropped from the operator.
    """

    model_config = ConfigDict(frozen=True)

    num_qubits: int = Field(ge=1)
    terms: tuple[tuple[int, int, float], ...]
    alpha: float = Field(default=1.0, gt=0)
    offset: float = 0.0

    @field_validator("terms", mode="before")
    @classmethod
    def _normalize_terms(cls, value):
        return _normalize_pairs(value)

    @model_validator(mode="after")
    def _check_terms(self):
        _check_pairs(self.terms, self.num_qubits, "term")
        return self


class SpectrumSummary(BaseModel):
    """
    Exhaustive spectrum of a diagonal Hamiltonian.

    Energies refer to the minimization problem H. ``lambda1``/``lambda2`` and
    ``levels`` describe the maximization form ``-H + shift`` whose values are
    all >= alpha. ``levels`` are sorted by decreasing eigenvalue.
    """

    model_config = ConfigDict(frozen=True)

    num_qubits: int
    ground_energy: float
    ground_degeneracy: int = Field(ge=1)
    ground_states: tuple[str, ...]
    runner_up_energy: float
    absolute_gap: float = Field(gt=0)
    ratio: float = Field(gt=1)
    shift: float
    lambda1: float
    lambda2: float
    levels: tuple[tuple[float, int], ...]
    offset: float = 0.0


# ============================================================================
# Power iteration
# ============================================================================


class OracleFunction(BaseModel):
    """Strictly increasing oracle f applied to eigenvalues each QIPA step."""

    model_config = ConfigDict(frozen=True)

    variant: OracleVariant
    dt: float = Field(default=1.0, gt=0)

    @property
    def label(self) -> str:
        if self.variant == "identity":
            return "identity"
        return f"{self.variant}(dt={self.dt:g})"


class SpectralPopulation(BaseModel):
    """
    Probability mass per distinct eigenvalue level.

    Masses are kept as natural logs so repeated oracle steps never overflow.
    Levels are ordered by strictly decreasing eigenvalue; the solution level
    is the first one.
    """

    model_config = ConfigDict(frozen=True)

    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    log_probabilities: tuple[float, ...]
    solution_index: int = 0

    @model_validator(mode="after")
    def _check_levels(self):
        size = len(self.eigenvalues)
        if size == 0:
            raise ValueError("population needs at least one level")
        if len(self.multiplicities) != size or len(self.log_probabilities) != size:
            raise ValueError("eigenvalues, multiplicities and masses differ in length")
        if any(m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities must be >= 1")
        if any(a <= b for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise ValueError("eigenvalues must be strictly decreasing")
        if not 0 <= self.solution_index < size:
            raise ValueError("solution_index out of range")
        if any(math.isnan(lp) or lp > 1e-9 for lp in self.log_probabilities):
            raise ValueError("log probabilities must be <= 0")
        total = math.fsum(math.exp(lp) for lp in self.log_probabilities)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        return self

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(math.exp(lp) for lp in self.log_probabilities)

    @property
    def solution_probability(self) -> float:
        return math.exp(self.log_probabilities[self.solution_index])


class MajorityResult(BaseModel):
    """Outcome of running power iteration until the solution holds > 1/2."""

    iterations: Optional[int] = None
    status: Literal["reached", "budget_exceeded"]
    solution_probability: float
    oracle: str


class IterationBoundEstimate(BaseModel):
    """Leading-order iteration counts for varQITE and QIPA2."""

    model_config = ConfigDict(frozen=True)

    kappa_varqite: float
    kappa_qipa2: float

    @property
    def ratio(self) -> float:
        return self.kappa_varqite / self.kappa_qipa2


# ============================================================================
# Separation analysis
# ============================================================================


class SeparationConstants(BaseModel):
    """Constants c, d, k of the separation inequality system."""

    model_config = ConfigDict(frozen=True)

    c: float = Field(default=1.0, gt=0)
    d: float = Field(default=1.0, gt=0)
    k: float = Field(default=1.0, gt=0)


class ConditionReport(BaseModel):
    """Truth of each inequality and derived condition for one (n, lambda1, lambda2)."""

    model_config = ConfigDict(frozen=True)

    n: int
    lambda1: float
    lambda2: float
    ordering: bool
    ineq_varqite: bool
    ineq_qipa: bool
    cond_I: bool
    cond_II: bool
    cond_III: bool
    separated: bool
    kappa_varqite: Optional[float] = None
    kappa_qipa2: Optional[float] = None
    gap_floor: float
    lambda2_floor: float
    lambda1_floor: float

    @model_validator(mode="after")
    def _separated_is_conjunction(self):
        expected = (
            self.ordering
            and self.ineq_varqite
            and self.ineq_qipa
            and self.cond_I
            and self.cond_II
            and self.cond_III
        )
        if self.separated != expected:
            raise ValueError("separated must be the conjunction of all conditions")
        return self


class DivergenceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    lambda2_bound: float
    doubling_ratio: float


class DivergenceProbe(BaseModel):
    """Lower bound L(n) on lambda2 per n, with growth indicators."""

    model_config = ConfigDict(frozen=True)

    constants: SeparationConstants
    rows: tuple[DivergenceRow, ...]
    # First n from which L(n) is strictly increasing to the end of the scan
    monotone_from: Optional[int] = None


class SpectrumAnalysis(BaseModel):
    """Separation verdict before and after the recommended upscale."""

    n: int
    lambda1: float
    lambda2: float
    constants: SeparationConstants
    bounds: IterationBoundEstimate
    report: ConditionReport
    recommended_alpha: float
    report_after_upscale: ConditionReport
    bounds_after_upscale: IterationBoundEstimate


# ============================================================================
# States and observables
# ============================================================================


class AnsatzSpec(BaseModel):
    """
    Hardware-efficient ansatz: an RY layer, then ``layers`` blocks of
    ring CX entanglers followed by RY layers.
    """

    model_config = ConfigDict(frozen=True)

    num_qubits: int = Field(ge=1)
    layers: int = Field(default=2, ge=0)
    initial_state: Literal["plus", "zero"] = "plus"

    @property
    def num_parameters(self) -> int:
        return self.num_qubits * (self.layers + 1)


class StateVector(BaseModel):
    """Normalized amplitudes over the 2^n computational basis."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    num_qubits: int = Field(ge=1)
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex(cls, value):
        array = np.array(value, dtype=np.complex128)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_shape_and_norm(self):
        expected = 2**self.num_qubits
        if self.amplitudes.shape != (expected,):
            raise ValueError(
                f"expected {expected} amplitudes, got shape {self.amplitudes.shape}"
            )
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} differs from 1")
        return self

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class DiagonalObservable(BaseModel):
    """Real diagonal operator given by its values on the computational basis."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    num_qubits: int = Field(ge=1)
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_real(cls, value):
        array = np.array(value, dtype=np.float64)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_values(self):
        expected = 2**self.num_qubits
        if self.values.shape != (expected,):
            raise ValueError(
                f"expected {expected} diagonal values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("diagonal values must be finite")
        return self

    def scaled(self, alpha: float) -> "DiagonalObservable":
        return DiagonalObservable(
            num_qubits=self.num_qubits, values=alpha * self.values
        )


class McLachlanSystem(BaseModel):
    """Metric ``F`` (real symmetric PSD) and force vector ``C`` at one theta."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    F: np.ndarray
    C: np.ndarray

    @model_validator(mode="after")
    def _check_system(self):
        size = self.C.shape[0] if self.C.ndim == 1 else -1
        if self.F.shape != (size, size):
            raise ValueError(f"F shape {self.F.shape} does not match C {self.C.shape}")
        if size and not np.allclose(self.F, self.F.T, rtol=0.0, atol=1e-10):
            raise ValueError("F must be symmetric")
        if size and float(np.linalg.eigvalsh(self.F).min()) < -1e-9:
            raise ValueError("F must be positive semidefinite")
        return self


# ============================================================================
# Evolution and error analysis
# ============================================================================


class EvolutionConfig(BaseModel):
    """
    Settings for one variational imaginary-time run.

    ``qipa_orientation`` picks the QIPA2 generator form: ``"ground"`` maps
    the oracle onto the minimization problem, ``"raw"`` applies
    ``(exp(h*dt) - 1)/dt`` to H as written.
    """

    model_config = ConfigDict(frozen=True)

    delta_tau: float = Field(gt=0)
    delta_t: float = Field(default=0.01, gt=0)
    num_steps: int = Field(ge=0)
    regularization: float = Field(default=1e-8, ge=0)
    mode: EvolutionMode = "varqite"
    seed: int = Field(default=0, ge=0)
    init_noise: float = Field(default=0.01, ge=0)
    qipa_orientation: Literal["ground", "raw"] = "ground"


class TrajectoryRecord(BaseModel):
    """State of a run after ``step`` Euler steps, at time ``step * delta_tau``."""

    step: int
    time: float
    theta: tuple[float, ...]
    energy: float
    solution_prob: float
    step_error: float
    bures_cum: float
    bures_exact: float


class Trajectory(BaseModel):
    mode: EvolutionMode
    delta_tau: float
    ground_energy: float
    records: list[TrajectoryRecord] = []
    aborted: bool = False
    diagnostic: Optional[str] = None


class ErrorBudget(BaseModel):
    """
    Bures error floor of one QIPA2 step next to the varQITE error.

    The floor omits a term of order ``delta_tau ** 1.5``.
    """

    varqite_error: float = Field(ge=0)
    delta: float = Field(ge=0)
    delta_tau: float = Field(gt=0)
    qipa_floor: float = Field(ge=0)
    omitted_order: str = "delta_tau^1.5"


class VarianceScalingCheck(BaseModel):
    alpha: float
    scaled_variance: float
    expected_variance: float
    relative_error: float


class BlowupRow(BaseModel):
    """One alpha of the error blow-up scan."""

    alpha: float
    var: float
    delta: float
    qipa_floor: float
    dt_used: float
    eps_varqite: float
    # None when the value is exactly zero
    log_var: Optional[float] = None
    log_delta: Optional[float] = None


class TradeoffRow(BlowupRow):
    """Blow-up row joined with the oracle iterations-to-majority at that alpha."""

    iterations: Optional[int] = None
    status: Literal["reached", "budget_exceeded"]


class RunManifest(BaseModel):
    """Everything needed to re-run a CLI command and reproduce its outputs."""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    command: str
    arguments: list[str]
    inputs: dict[str, str] = {}
    seed: int
    config: dict[str, object] = {}
    tool_version: str
    outputs: list[str] = []


# ============================================================================
# HTTP payloads
# ============================================================================


class LevelSpectrum(BaseModel):
    """
    Spectrum given directly: either ``lambda1``/``lambda2`` with the rest
    degenerate, or explicit ``levels`` of (eigenvalue, multiplicity).
    """

    n: int = Field(ge=1, le=62)
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    levels: Optional[list[tuple[float, int]]] = None

    @model_validator(mode="after")
    def _one_form(self):
        has_pair = self.lambda1 is not None and self.lambda2 is not None
        if has_pair == (self.levels is not None):
            raise ValueError("give either lambda1 and lambda2, or levels")
        return self


class AnalyzeRequest(BaseModel):
    graph: Optional[WeightedGraph] = None
    spectrum: Optional[LevelSpectrum] = None
    alpha: float = Field(default=1.0, ge=1.0)
    constants: Optional[SeparationConstants] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.graph is None) == (self.spectrum is None):
            raise ValueError("give exactly one of graph or spectrum")
        return self


class AnalyzeResponse(BaseModel):
    spectrum: Optional[SpectrumSummary] = None
    analysis: SpectrumAnalysis


class PowerRequest(BaseModel):
    spectrum: LevelSpectrum
    oracle: OracleFunction = OracleFunction(variant="exp")
    max_iter: Optional[int] = Field(default=None, ge=0)


class PowerResponse(BaseModel):
    result: MajorityResult
    closed_form: Optional[int] = None
    bounds: Optional[IterationBoundEstimate] = None


class ConditionRequest(BaseModel):
    n: int = Field(ge=1)
    lambda1: float
    lambda2: float = Field(gt=0)
    constants: Optional[SeparationConstants] = None
