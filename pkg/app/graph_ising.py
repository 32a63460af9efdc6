"""
Weighted graphs, the MaxCut Ising encoding and exhaustive spectra.

Bitstrings are read left to right: character ``i`` is node (qubit) ``i``.
Basis index ``x`` therefore holds qubit ``i`` in bit ``n - 1 - i`` and the
spin of qubit ``i`` is ``1 - 2 * b_i``.
"""

import itertools
import json
import logging
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import ValidationError

from app.config import get_settings
from app.exceptions import EnumerationLimitError, InputError, NoGapError
from app.models import IsingHamiltonian, SpectrumSummary, WeightedGraph

logger = logging.getLogger(__name__)

MAX_GRAPH_ATTEMPTS = 100


# ============================================================================
# Graph input / output
# ============================================================================


def _graph_or_input_error(num_nodes: int, edges, line: Optional[int] = None):
    try:
        return WeightedGraph(num_nodes=num_nodes, edges=edges)
    except ValidationError as exc:
        detail = exc.errors()[0]["msg"]
        raise InputError(f"invalid graph: {detail}", line=line) from exc


def parse_graph_text(text: str) -> WeightedGraph:
    """
    Parse a graph from an edge list or a JSON document.

    The edge list has one ``u v w`` triple per line; blank lines and lines
    starting with ``#`` are skipped and the node count is the largest index
    plus one. JSON input is ``{"n": n, "edges": [[u, v, w], ...]}``, with
    ``"num_nodes"`` accepted in place of ``"n"``.

    Args:
        text: File contents

    Returns:
        WeightedGraph: Validated graph

    Raises:
        InputError: On malformed lines (with the 1-based line number),
            negative weights, self loops or duplicate edges

    Example:
        >>> parse_graph_text("0 1 1\\n1 2 1\\n0 2 1").num_nodes
        3
    """
    if text.lstrip().startswith("{"):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON graph: {exc.msg}", line=exc.lineno) from exc
        num_nodes = document.get("n", document.get("num_nodes"))
        if num_nodes is None or "edges" not in document:
            raise InputError("JSON graph needs 'n' and 'edges'")
        return _graph_or_input_error(num_nodes, document["edges"])

    edges = []
    seen = set()
    max_node = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise InputError(f"expected 'u v w', got {raw!r}", line=lineno)
        try:
            u, v, w = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError as exc:
            raise InputError(f"cannot parse {raw!r}", line=lineno) from exc
        if u < 0 or v < 0:
            raise InputError("node indices must be >= 0", line=lineno)
        if u == v:
            raise InputError(f"self loop on node {u}", line=lineno)
        if not np.isfinite(w) or w < 0:
            raise InputError(f"negative or non-finite weight {w}", line=lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InputError(f"duplicate edge {key}", line=lineno)
        seen.add(key)
        max_node = max(max_node, u, v)
        if w > 0:
            edges.append((u, v, w))

    if max_node < 0:
        raise InputError("graph has no edges")
    return _graph_or_input_error(max_node + 1, edges)


def load_graph(path: Union[str, Path]) -> WeightedGraph:
    """Read and parse a graph file (edge list or JSON)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read graph file {path}: {exc.strerror}") from exc
    graph = parse_graph_text(text)
    logger.debug(
        "Loaded graph %s: %d nodes, %d edges", path, graph.num_nodes, len(graph.edges)
    )
    return graph


def dump_graph(graph: WeightedGraph, fmt: Literal["text", "json"] = "text") -> str:
    """Serialize a graph; ``parse_graph_text`` reads both formats back."""
    if fmt == "json":
        document = {"n": graph.num_nodes, "edges": [list(e) for e in graph.edges]}
        return json.dumps(document, indent=2) + "\n"
    lines = [f"# {graph.num_nodes} nodes"]
    lines.extend(f"{u} {v} {w:g}" for u, v, w in graph.edges)
    return "\n".join(lines) + "\n"


def random_graph(
    n: int, max_weight: int, density: float, seed: int
) -> WeightedGraph:
    """
    Draw a seeded random graph with integer weights in ``1..max_weight``.

    Every pair ``u < v`` is visited in lexicographic order; the edge is kept
    with probability ``density`` and a weight is drawn from ``0..max_weight``
    (zero meaning no edge). Both draws happen for every pair, so the same
    seed always yields the same graph. An empty result is redrawn from the
    child stream ``[seed, attempt]``.

    Raises:
        InputError: If ``n < 2``, ``density`` is outside (0, 1],
            ``max_weight < 1`` or no edge appears after 100 attempts
    """
    if n < 2:
        raise InputError(f"random graphs need at least 2 nodes, got {n}")
    if not 0.0 < density <= 1.0:
        raise InputError(f"density must be in (0, 1], got {density}")
    if max_weight < 1:
        raise InputError(f"max_weight must be >= 1, got {max_weight}")
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")

    for attempt in range(MAX_GRAPH_ATTEMPTS):
        rng = np.random.default_rng(seed if attempt == 0 else [seed, attempt])
        edges = []
        for u, v in itertools.combinations(range(n), 2):
            keep = rng.random() < density
            weight = int(rng.integers(0, max_weight + 1))
            if keep and weight > 0:
                edges.append((u, v, float(weight)))
        if edges:
            return WeightedGraph(num_nodes=n, edges=edges)
        logger.info("Random graph attempt %d was empty, redrawing", attempt)
    raise InputError(
        f"no edges after {MAX_GRAPH_ATTEMPTS} attempts (n={n}, density={density})"
    )


def seven_node_demo_graph(seed: int = 7) -> WeightedGraph:
    """Seven-node complete graph with integer weights up to 11."""
    return random_graph(7, 11, 1.0, seed)


# ============================================================================
# Ising encoding
# ============================================================================


def build_maxcut_hamiltonian(graph: WeightedGraph) -> IsingHamiltonian:
    """
    Encode MaxCut as ``H = sum w_ij Z_i Z_j`` with ``offset = sum(w)/2``.

    Minimizing H maximizes the cut: ``cut(x) = offset - H(x)/2``.
    """
    if not graph.edges:
        raise InputError("cannot build a Hamiltonian for a graph without edges")
    return IsingHamiltonian(
        num_qubits=graph.num_nodes,
        terms=graph.edges,
        offset=graph.total_weight / 2.0,
    )


def upscale(hamiltonian: IsingHamiltonian, alpha: float) -> IsingHamiltonian:
    """Multiply every coefficient by ``alpha >= 1``; ``alpha == 1`` is a no-op."""
    if not np.isfinite(alpha) or alpha < 1.0:
        raise InputError(f"upscale factor must be >= 1, got {alpha}")
    if alpha == 1.0:
        return hamiltonian
    return hamiltonian.model_copy(update={"alpha": hamiltonian.alpha * alpha})


def check_bitstring(bits: str, n: int) -> str:
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise InputError(f"expected a {n}-character bitstring of 0/1, got {bits!r}")
    return bits


def bitstring_index(bits: str) -> int:
    return int(bits, 2)


def index_bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def cut_value(graph: WeightedGraph, partition: str) -> float:
    """Total weight of edges whose endpoints lie on different sides."""
    check_bitstring(partition, graph.num_nodes)
    return float(sum(w for u, v, w in graph.edges if partition[u] != partition[v]))


def diagonal_energy(hamiltonian: IsingHamiltonian, basis: str) -> float:
    """Energy of one computational basis state."""
    check_bitstring(basis, hamiltonian.num_qubits)
    spins = [1 - 2 * int(b) for b in basis]
    base = sum(w * spins[i] * spins[j] for i, j, w in hamiltonian.terms)
    return hamiltonian.alpha * float(base)


def _check_enumeration(n: int, guard: Optional[int]) -> None:
    limit = get_settings().enumeration_guard if guard is None else guard
    if n > limit:
        raise EnumerationLimitError(
            f"{n} qubits exceeds the enumeration guard of {limit}; "
            "raise QIPA_LAB_ENUMERATION_GUARD to force"
        )


def base_diagonal(hamiltonian: IsingHamiltonian) -> np.ndarray:
    """Diagonal of H at ``alpha = 1`` over all ``2^n`` basis states."""
    n = hamiltonian.num_qubits
    index = np.arange(2**n, dtype=np.int64)
    values = np.zeros(2**n, dtype=np.float64)
    for i, j, w in hamiltonian.terms:
        # Z_i Z_j is -1 exactly when the two bits differ
        differ = ((index >> (n - 1 - i)) ^ (index >> (n - 1 - j))) & 1
        values += w * (1.0 - 2.0 * differ)
    return values


def diagonal_values(hamiltonian: IsingHamiltonian) -> np.ndarray:
    return hamiltonian.alpha * base_diagonal(hamiltonian)


def brute_force_spectrum(
    hamiltonian: IsingHamiltonian, guard: Optional[int] = None
) -> SpectrumSummary:
    """
    Enumerate every basis energy of a diagonal Hamiltonian.

    The maximization form ``-H + shift`` uses
    ``shift = alpha * (1 + |max H_base|)`` so every maximization eigenvalue
    is at least ``alpha``. The ratio is taken
    from the base energies, which keeps it invariant under ``upscale``.

    Args:
        hamiltonian: Ising Hamiltonian on n qubits
        guard: Largest n to enumerate; defaults to the configured guard

    Returns:
        SpectrumSummary: Ground data, gap, ratio and full level table

    Raises:
        EnumerationLimitError: If n exceeds the guard
        NoGapError: If every basis state has the same energy

    Example:
        >>> edges = [(0, 1, 1), (1, 2, 1), (0, 2, 1)]
        >>> triangle = WeightedGraph(num_nodes=3, edges=edges)
        >>> summary = brute_force_spectrum(build_maxcut_hamiltonian(triangle))
        >>> summary.ground_energy, summary.ratio
        (-1.0, 5.0)
    """
    n = hamiltonian.num_qubits
    _check_enumeration(n, guard)
    base = base_diagonal(hamiltonian)
    energies, counts = np.unique(base, return_counts=True)
    if energies.size < 2:
        raise NoGapError("Hamiltonian has a single energy level; no gap to amplify")

    alpha = hamiltonian.alpha
    shift_base = 1.0 + abs(float(energies[-1]))
    # ascending energies give descending maximization eigenvalues
    max_levels = -energies + shift_base
    ground = np.flatnonzero(base == energies[0])

    summary = SpectrumSummary(
        num_qubits=n,
        ground_energy=alpha * float(energies[0]),
        ground_degeneracy=int(counts[0]),
        ground_states=tuple(index_bitstring(int(x), n) for x in ground),
        runner_up_energy=alpha * float(energies[1]),
        absolute_gap=alpha * float(energies[1] - energies[0]),
        ratio=float(max_levels[0] / max_levels[1]),
        shift=alpha * shift_base,
        lambda1=alpha * float(max_levels[0]),
        lambda2=alpha * float(max_levels[1]),
        levels=tuple(
            (alpha * float(lam), int(count)) for lam, count in zip(max_levels, counts)
        ),
        offset=alpha * hamiltonian.offset,
    )
    logger.debug(
        "Spectrum of %d qubits: %d levels, gap %.6g, ratio %.6g",
        n,
        energies.size,
        summary.absolute_gap,
        summary.ratio,
    )
    return summary


def brute_force_maxcut(
    graph: WeightedGraph, guard: Optional[int] = None
) -> tuple[float, list[str]]:
    """
    Maximum cut value and every optimal partition with node 0 on side ``0``.

    Example:
        >>> path = WeightedGraph(num_nodes=3, edges=[(0, 1, 1), (1, 2, 1)])
        >>> brute_force_maxcut(path)
        (2.0, ['010'])
    """
    hamiltonian = build_maxcut_hamiltonian(graph)
    n = graph.num_nodes
    _check_enumeration(n, guard)
    base = base_diagonal(hamiltonian)
    cuts = (graph.total_weight - base) / 2.0
    best = float(cuts.max())
    # canonical representatives have the leading bit clear
    optimal = np.flatnonzero(cuts[: 2 ** (n - 1)] == best)
    return best, [index_bitstring(int(x), n) for x in optimal]
