"""
Dense statevector simulation of the hardware-efficient RY ansatz.

Amplitudes are reshaped to ``[2] * n`` with axis ``i`` holding qubit ``i``,
which matches the bitstring convention of ``app.graph_ising``. Diagonal
observables act element-wise on the basis index.
"""

import logging
from typing import Callable, Iterable, Optional, Union

import numpy as np

from app.exceptions import InputError, NumericalError
from app.graph_ising import bitstring_index, check_bitstring, diagonal_values
from app.models import AnsatzSpec, DiagonalObservable, IsingHamiltonian, StateVector

logger = logging.getLogger(__name__)

# dRY(theta)/dtheta = G @ RY(theta) with G = -(i/2) Y
_RY_GENERATOR = np.array([[0.0, -0.5], [0.5, 0.0]], dtype=np.complex128)

Observable = Union[DiagonalObservable, IsingHamiltonian]


# ============================================================================
# Circuit primitives
# ============================================================================


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _apply_single_qubit(
    state: np.ndarray, matrix: np.ndarray, qubit: int, n: int
) -> np.ndarray:
    psi = state.reshape([2] * n)
    psi = np.tensordot(matrix, psi, axes=([1], [qubit]))
    return np.moveaxis(psi, 0, qubit).reshape(-1)


def _apply_cx(state: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    psi = state.reshape([2] * n)
    new = psi.copy()

    def idx(c, t):
        i = [slice(None)] * n
        i[control], i[target] = c, t
        return tuple(i)

    new[idx(1, 0)], new[idx(1, 1)] = psi[idx(1, 1)].copy(), psi[idx(1, 0)].copy()
    return new.reshape(-1)


def ring_pairs(n: int) -> list[tuple[int, int]]:
    """CX (control, target) pairs of one entangling ring."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return [(q, (q + 1) % n) for q in range(n)]


def _initial_amplitudes(spec: AnsatzSpec) -> np.ndarray:
    dim = 2**spec.num_qubits
    if spec.initial_state == "zero":
        psi = np.zeros(dim, dtype=np.complex128)
        psi[0] = 1.0
        return psi
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)


def _check_theta(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (spec.num_parameters,):
        raise InputError(
            f"ansatz takes {spec.num_parameters} parameters, got shape {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise InputError("parameters must be finite")
    return theta


def _run_circuit(
    spec: AnsatzSpec, theta: np.ndarray, derivative: Optional[int] = None
) -> np.ndarray:
    n = spec.num_qubits
    psi = _initial_amplitudes(spec)
    pairs = ring_pairs(n)
    for layer in range(spec.layers + 1):
        if layer > 0:
            for control, target in pairs:
                psi = _apply_cx(psi, control, target, n)
        for q in range(n):
            index = layer * n + q
            psi = _apply_single_qubit(psi, _ry(theta[index]), q, n)
            if index == derivative:
                psi = _apply_single_qubit(psi, _RY_GENERATOR, q, n)
    return psi


# ============================================================================
# States and derivatives
# ============================================================================


def prepare_ansatz_state(spec: AnsatzSpec, theta) -> StateVector:
    """
    Prepare ``|psi(theta)>``.

    Parameters are laid out layer by layer: ``theta[l * n + q]`` is the RY
    angle on qubit ``q`` in rotation layer ``l``.

    Example:
        >>> spec = AnsatzSpec(num_qubits=2, layers=0)
        >>> prepare_ansatz_state(spec, [0.0, 0.0]).amplitudes.real
        array([0.5, 0.5, 0.5, 0.5])
    """
    theta = _check_theta(spec, theta)
    psi = _run_circuit(spec, theta)
    # renormalize away accumulated rounding
    psi = psi / np.linalg.norm(psi)
    return StateVector(num_qubits=spec.num_qubits, amplitudes=psi)


def parameter_derivative_state(spec: AnsatzSpec, theta, index: int) -> np.ndarray:
    """``d|psi>/d theta_index``; unnormalized, orthogonal phase not removed."""
    theta = _check_theta(spec, theta)
    if not 0 <= index < spec.num_parameters:
        raise InputError(
            f"parameter index {index} outside 0..{spec.num_parameters - 1}"
        )
    return _run_circuit(spec, theta, derivative=index)


def parameter_derivative_states(spec: AnsatzSpec, theta) -> np.ndarray:
    """All derivative states stacked as rows, shape ``(P, 2^n)``."""
    theta = _check_theta(spec, theta)
    dim = 2**spec.num_qubits
    derivatives = np.empty((spec.num_parameters, dim), dtype=np.complex128)
    for index in range(spec.num_parameters):
        derivatives[index] = _run_circuit(spec, theta, derivative=index)
    return derivatives


def initial_parameters(spec: AnsatzSpec, seed: int, noise: float = 0.01) -> np.ndarray:
    """Zero angles plus seeded uniform noise in ``[-noise, noise]``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-noise, noise, size=spec.num_parameters)


def random_state(n: int, seed: int) -> StateVector:
    """Haar-like random state from seeded complex Gaussian amplitudes."""
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(num_qubits=n, amplitudes=psi / np.linalg.norm(psi))


def uniform_state(n: int) -> StateVector:
    return prepare_ansatz_state(AnsatzSpec(num_qubits=n, layers=0), np.zeros(n))


# ============================================================================
# Observables
# ============================================================================


def _values(observable: Observable) -> np.ndarray:
    if isinstance(observable, IsingHamiltonian):
        return diagonal_values(observable)
    return observable.values


def _num_qubits(observable: Observable) -> int:
    return observable.num_qubits


def diagonal_function_observable(
    observable: Observable, g: Optional[Callable[[np.ndarray], np.ndarray]] = None
) -> DiagonalObservable:
    """
    Diagonal of ``g(H)``, evaluated element-wise on the basis values.

    ``g`` must accept and return numpy arrays; it defaults to identity.

    Raises:
        NumericalError: If ``g`` produces a non-finite value; the message
            names the first offending basis index
    """
    values = _values(observable)
    if g is not None:
        with np.errstate(over="ignore", invalid="ignore"):
            values = np.asarray(g(values), dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NumericalError(
            f"g(H) is not finite at basis index {int(bad[0])} "
            f"(h={_values(observable)[bad[0]]})"
        )
    return DiagonalObservable(num_qubits=_num_qubits(observable), values=values)


def _check_dims(state: StateVector, observable: Observable) -> None:
    if state.num_qubits != _num_qubits(observable):
        raise InputError(
            f"state has {state.num_qubits} qubits, observable {_num_qubits(observable)}"
        )


def expectation(state: StateVector, observable: Observable) -> float:
    """``<psi|H|psi>`` for a diagonal H."""
    _check_dims(state, observable)
    return float(np.dot(state.probabilities, _values(observable)))


def variance(state: StateVector, observable: Observable) -> float:
    """``<H^2> - <H>^2``, evaluated as ``sum p (h - <h>)^2`` and never negative."""
    _check_dims(state, observable)
    probabilities = state.probabilities
    values = _values(observable)
    mean = float(np.dot(probabilities, values))
    return max(0.0, float(np.dot(probabilities, (values - mean) ** 2)))


def solution_probability(state: StateVector, targets: Iterable[str]) -> float:
    """Total probability of the target bitstrings."""
    n = state.num_qubits
    indices = sorted({bitstring_index(check_bitstring(t, n)) for t in targets})
    if not indices:
        raise InputError("target set is empty")
    return float(state.probabilities[indices].sum())


# ============================================================================
# Exact reference evolution and distances
# ============================================================================


def exact_imaginary_evolution(
    observable: Observable, state: StateVector, tau: float
) -> StateVector:
    """
    ``exp(-tau H)|psi> / ||exp(-tau H)|psi>||`` computed in log space.

    The largest weight on the support of ``psi`` is factored out before
    exponentiating so large ``tau * h`` never overflows.
    """
    if tau < 0:
        raise InputError(f"imaginary time must be >= 0, got {tau}")
    _check_dims(state, observable)
    if tau == 0:
        return state
    amplitudes = state.amplitudes
    support = np.abs(amplitudes) > 0
    log_weight = -tau * _values(observable)
    shifted = np.where(support, log_weight - log_weight[support].max(), 0.0)
    psi = amplitudes * np.exp(shifted)
    norm = np.linalg.norm(psi)
    if not np.isfinite(norm) or norm == 0:
        raise NumericalError("exact imaginary evolution lost all amplitude")
    return StateVector(num_qubits=state.num_qubits, amplitudes=psi / norm)


def _check_same_space(a: StateVector, b: StateVector) -> None:
    if a.num_qubits != b.num_qubits:
        raise InputError(f"states live on {a.num_qubits} and {b.num_qubits} qubits")


def bures_distance(a: StateVector, b: StateVector) -> float:
    """
    ``sqrt(2 (1 - |<a|b>|))`` in [0, sqrt(2)].

    Evaluated as the l2 distance after aligning the global phase of ``b``
    to ``a``, which is the same quantity for normalized states without the
    cancellation of ``1 - |<a|b>|`` near identical states.
    """
    _check_same_space(a, b)
    overlap = np.vdot(b.amplitudes, a.amplitudes)
    magnitude = abs(overlap)
    phase = overlap / magnitude if magnitude > 0 else 1.0
    distance = float(np.linalg.norm(a.amplitudes - phase * b.amplitudes))
    return min(distance, float(np.sqrt(2.0)))


def l2_distance(a: StateVector, b: StateVector) -> float:
    _check_same_space(a, b)
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))
