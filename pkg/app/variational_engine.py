"""
McLachlan variational imaginary-time evolution for varQITE and QIPA2.

Both modes integrate ``theta_dot`` from the linear system ``F theta_dot = -Re C``
with explicit Euler steps of size ``delta_tau``. varQITE evolves under H
itself; QIPA2 evolves under a diagonal generator built from the exponential
oracle ``exp(h * delta_t)``, which reduces to H as ``delta_t -> 0``.
"""

import logging
import math
from typing import Optional

import numpy as np
import scipy.linalg

from app.error_model import bures_accumulate
from app.exceptions import InputError, NumericalError
from app.models import (
    AnsatzSpec,
    DiagonalObservable,
    EvolutionConfig,
    McLachlanSystem,
    StateVector,
    Trajectory,
    TrajectoryRecord,
)
from app.statevector import (
    Observable,
    bures_distance,
    diagonal_function_observable,
    exact_imaginary_evolution,
    expectation,
    initial_parameters,
    parameter_derivative_states,
    prepare_ansatz_state,
    solution_probability,
    variance,
)

logger = logging.getLogger(__name__)

# Below this many ulps of the summed magnitudes the residual is rounding
_CANCELLATION_ULPS = 1e3
_INCONSISTENT_RESIDUAL = -1e-6


def _generator_values(generator: Observable) -> np.ndarray:
    return diagonal_function_observable(generator).values


def compute_mclachlan_system(
    spec: AnsatzSpec, theta, generator: Observable
) -> McLachlanSystem:
    """
    Build ``F_ij = Re(<d_i|d_j> - <d_i|psi><psi|d_j>)`` and ``C_i = <d_i|G|psi>``.

    Args:
        spec: Ansatz layout
        theta: Current parameters
        generator: Diagonal generator G (H for varQITE)

    Returns:
        McLachlanSystem: Symmetric PSD metric and force vector
    """
    if spec.num_qubits != generator.num_qubits:
        raise InputError(
            f"ansatz has {spec.num_qubits} qubits, generator {generator.num_qubits}"
        )
    psi = prepare_ansatz_state(spec, theta).amplitudes
    derivatives = parameter_derivative_states(spec, theta)
    g = _generator_values(generator)

    overlaps = derivatives.conj() @ psi
    gram = derivatives.conj() @ derivatives.T
    metric = np.real(gram - np.outer(overlaps, overlaps.conj()))
    metric = 0.5 * (metric + metric.T)
    force = derivatives.conj() @ (g * psi)
    return McLachlanSystem(F=metric, C=force)


def solve_parameter_velocities(
    system: McLachlanSystem, regularization: float = 1e-8
) -> np.ndarray:
    """
    Tikhonov-regularized least squares for ``F theta_dot = -Re C``.

    Solves ``(F^T F + lam I) theta_dot = F^T (-Re C)`` with
    ``lam = regularization * max(1, max diag F)``. Falls back to
    ``scipy.linalg.lstsq`` when the normal matrix is not positive definite.

    Raises:
        NumericalError: If F or C holds non-finite entries

    Example:
        >>> system = McLachlanSystem(F=np.array([[0.25]]), C=np.array([-0.5 + 0j]))
        >>> float(solve_parameter_velocities(system)[0])  # doctest: +ELLIPSIS
        1.99999...
    """
    if regularization < 0:
        raise InputError(f"regularization must be >= 0, got {regularization}")
    metric = system.F
    rhs = -np.real(system.C)
    if not (np.all(np.isfinite(metric)) and np.all(np.isfinite(rhs))):
        raise NumericalError("McLachlan system has non-finite entries")
    size = rhs.shape[0]
    if size == 0:
        return np.zeros(0)

    lam = regularization * max(1.0, float(np.max(np.diag(metric))))
    normal = metric.T @ metric + lam * np.eye(size)
    projected = metric.T @ rhs
    try:
        return scipy.linalg.solve(normal, projected, assume_a="pos")
    except (scipy.linalg.LinAlgError, ValueError):
        logger.debug("Normal matrix not positive definite, using lstsq (lam=%g)", lam)
        solution, *_ = scipy.linalg.lstsq(normal, projected)
        return solution


def step_error_norm(
    state: StateVector,
    generator: Observable,
    system: McLachlanSystem,
    theta_dot: np.ndarray,
) -> float:
    """
    Norm of the McLachlan residual for one step.

    ``||e||^2 = Var(G) + theta_dot^T F theta_dot + 2 theta_dot . Re C``.
    Residuals within rounding of zero (relative to the magnitude of the
    summed terms) are reported as exactly 0.

    Raises:
        NumericalError: If the squared residual is clearly negative, which
            means F and C do not belong to ``state``
    """
    theta_dot = np.asarray(theta_dot, dtype=np.float64)
    var = variance(state, generator)
    quadratic = float(theta_dot @ system.F @ theta_dot)
    cross = 2.0 * float(theta_dot @ np.real(system.C))
    squared = var + quadratic + cross

    g = _generator_values(generator)
    scale = float(np.dot(state.probabilities, g**2)) + abs(quadratic) + abs(cross)
    if squared < _INCONSISTENT_RESIDUAL * max(1.0, scale):
        raise NumericalError(
            f"negative squared residual {squared:.3e}; inconsistent McLachlan system"
        )
    if squared <= _CANCELLATION_ULPS * np.finfo(np.float64).eps * scale:
        return 0.0
    return math.sqrt(squared)


def evolution_generator(
    generator_source: Observable, config: EvolutionConfig
) -> DiagonalObservable:
    """
    Diagonal generator that the run evolves under.

    varQITE uses H. QIPA2 uses ``(1 - exp(-h dt)) / dt`` in the default
    ``"ground"`` orientation, or ``(exp(h dt) - 1) / dt`` for ``"raw"``.
    Both are monotone in h and tend to H as ``dt -> 0``.

    Raises:
        NumericalError: If the oracle exponent overflows; reduce ``delta_t``
            or shift H
    """
    h = diagonal_function_observable(generator_source)
    if config.mode == "varqite":
        return h
    dt = config.delta_t
    try:
        if config.qipa_orientation == "raw":
            return diagonal_function_observable(h, lambda v: np.expm1(v * dt) / dt)
        return diagonal_function_observable(h, lambda v: -np.expm1(-v * dt) / dt)
    except NumericalError as exc:
        raise NumericalError(
            f"QIPA2 generator overflows at delta_t={dt}; "
            f"reduce delta_t or pre-shift H ({exc})"
        ) from exc


def ground_targets(observable: Observable) -> list[str]:
    """Bitstrings of the minimum diagonal value."""
    values = _generator_values(observable)
    n = observable.num_qubits
    return [format(int(x), f"0{n}b") for x in np.flatnonzero(values == values.min())]


def run_evolution(
    hamiltonian: Observable,
    spec: AnsatzSpec,
    config: EvolutionConfig,
    theta0: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    Integrate the variational flow for ``config.num_steps`` Euler steps.

    Record ``k`` (1-based) holds the state after ``k`` steps at time
    ``k * delta_tau``: the energy against the original H, the probability
    of the ground set, the residual norm of step ``k``, the accumulated
    Bures bound ``delta_tau * sum(||e||)`` and the Bures distance to the
    exact imaginary-time evolution under the same generator.

    Args:
        hamiltonian: Problem Hamiltonian H
        spec: Ansatz layout
        config: Step sizes, mode, seed and regularization
        theta0: Starting parameters; seeded small noise when omitted

    Returns:
        Trajectory: ``aborted`` is set with a diagnostic if theta turns
            non-finite, keeping the records produced so far
    """
    energy_obs = diagonal_function_observable(hamiltonian)
    generator = evolution_generator(hamiltonian, config)
    targets = ground_targets(energy_obs)
    ground_energy = float(energy_obs.values.min())

    if theta0 is None:
        theta = initial_parameters(spec, config.seed, config.init_noise)
    else:
        theta = np.array(theta0, dtype=np.float64)
    state = prepare_ansatz_state(spec, theta)
    start = state

    trajectory = Trajectory(
        mode=config.mode, delta_tau=config.delta_tau, ground_energy=ground_energy
    )
    logger.info(
        "Running %s for %d steps (n=%d, P=%d, dtau=%g)",
        config.mode,
        config.num_steps,
        spec.num_qubits,
        spec.num_parameters,
        config.delta_tau,
    )

    residuals = []
    for step in range(1, config.num_steps + 1):
        system = compute_mclachlan_system(spec, theta, generator)
        theta_dot = solve_parameter_velocities(system, config.regularization)
        residual = step_error_norm(state, generator, system, theta_dot)
        candidate = theta + config.delta_tau * theta_dot
        if not np.all(np.isfinite(candidate)):
            trajectory.aborted = True
            trajectory.diagnostic = f"non-finite parameters at step {step}"
            logger.error("Aborting %s run: %s", config.mode, trajectory.diagnostic)
            break

        theta = candidate
        residuals.append(residual)
        state = prepare_ansatz_state(spec, theta)
        time = step * config.delta_tau
        reference = exact_imaginary_evolution(generator, start, time)
        trajectory.records.append(
            TrajectoryRecord(
                step=step,
                time=time,
                theta=tuple(theta.tolist()),
                energy=expectation(state, energy_obs),
                solution_prob=solution_probability(state, targets),
                step_error=residual,
                bures_cum=bures_accumulate(residuals, config.delta_tau),
                bures_exact=bures_distance(state, reference),
            )
        )

    if trajectory.records:
        last = trajectory.records[-1]
        logger.info(
            "%s finished: energy %.6g (ground %.6g), solution prob %.4f",
            config.mode,
            last.energy,
            ground_energy,
            last.solution_prob,
        )
    return trajectory


def steps_to_within(
    trajectory: Trajectory,
    fraction: float = 0.02,
    ground_energy: Optional[float] = None,
) -> Optional[int]:
    """First step whose energy is within ``fraction * |E0|`` of the ground energy."""
    if fraction < 0:
        raise InputError(f"fraction must be >= 0, got {fraction}")
    target = trajectory.ground_energy if ground_energy is None else ground_energy
    threshold = target + fraction * abs(target)
    for record in trajectory.records:
        if record.energy <= threshold:
            return record.step
    return None
