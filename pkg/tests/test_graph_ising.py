"""
Graph parsing, MaxCut encoding and exhaustive spectrum tests.
"""

import itertools
import json

import pytest

from app.exceptions import EnumerationLimitError, InputError, NoGapError
from app.graph_ising import (
    base_diagonal,
    brute_force_maxcut,
    brute_force_spectrum,
    build_maxcut_hamiltonian,
    cut_value,
    diagonal_energy,
    dump_graph,
    load_graph,
    parse_graph_text,
    random_graph,
    seven_node_demo_graph,
    upscale,
)
from app.models import IsingHamiltonian, WeightedGraph


def test_build_maxcut_hamiltonian_offset(triangle_graph):
    """Test that the offset is half the total weight."""
    hamiltonian = build_maxcut_hamiltonian(triangle_graph)

    assert hamiltonian.num_qubits == 3
    assert hamiltonian.offset == 1.5
    assert hamiltonian.alpha == 1.0
    assert len(hamiltonian.terms) == 3


def test_triangle_spectrum(triangle_hamiltonian):
    """Test ground energy, gap and ratio of the triangle."""
    summary = brute_force_spectrum(triangle_hamiltonian)

    assert summary.ground_energy == -1.0
    assert summary.ground_degeneracy == 6
    assert summary.runner_up_energy == 3.0
    assert summary.absolute_gap == 4.0
    assert summary.ratio == 5.0
    assert (summary.lambda1, summary.lambda2) == (5.0, 1.0)
    assert summary.levels == ((5.0, 6), (1.0, 2))


def test_triangle_ground_states(triangle_hamiltonian):
    """Test that every non-uniform assignment is a ground state."""
    summary = brute_force_spectrum(triangle_hamiltonian)

    assert summary.ground_states == ("001", "010", "011", "100", "101", "110")


def test_multiplicities_cover_basis(triangle_hamiltonian):
    """Test that level multiplicities sum to 2^n."""
    summary = brute_force_spectrum(triangle_hamiltonian)

    assert sum(m for _, m in summary.levels) == 8


def test_maxcut_triangle(triangle_graph):
    """Test the canonical optimal partitions of the triangle."""
    best, partitions = brute_force_maxcut(triangle_graph)

    assert best == 2.0
    assert partitions == ["001", "010", "011"]


def test_maxcut_path(path_graph):
    """Test the unique canonical optimum of the path."""
    assert brute_force_maxcut(path_graph) == (2.0, ["010"])


def test_maxcut_matches_ground_energy(triangle_graph, triangle_hamiltonian):
    """Test cut value = (total weight - ground energy) / 2."""
    best, partitions = brute_force_maxcut(triangle_graph)
    summary = brute_force_spectrum(triangle_hamiltonian)

    assert best == (triangle_graph.total_weight - summary.ground_energy) / 2
    for partition in partitions:
        assert cut_value(triangle_graph, partition) == best


def test_diagonal_energy_of_basis_states(triangle_hamiltonian):
    """Test single basis energies."""
    assert diagonal_energy(triangle_hamiltonian, "000") == 3.0
    assert diagonal_energy(triangle_hamiltonian, "011") == -1.0


def test_bitstring_character_is_qubit():
    """Test that character i of a bitstring is qubit i."""
    hamiltonian = IsingHamiltonian(num_qubits=3, terms=[(0, 1, 2.0)])
    values = base_diagonal(hamiltonian)

    # "100" has index 4 and flips only qubit 0
    assert values[4] == -2.0
    assert diagonal_energy(hamiltonian, "100") == -2.0
    # "001" has index 1 and leaves qubits 0 and 1 aligned
    assert values[1] == 2.0
    assert diagonal_energy(hamiltonian, "001") == 2.0


def test_upscale_scales_gap_keeps_ratio(triangle_hamiltonian):
    """Test that upscaling multiplies the gap and leaves ratio and ground set."""
    base = brute_force_spectrum(triangle_hamiltonian)
    scaled = brute_force_spectrum(upscale(triangle_hamiltonian, 2.0))

    assert scaled.absolute_gap == 8.0
    assert scaled.ground_energy == -2.0
    assert scaled.ratio == base.ratio
    assert scaled.ground_states == base.ground_states


def test_upscale_non_dyadic_alpha(triangle_hamiltonian):
    """Test gap(alpha H) = alpha gap(H) for a non power-of-two alpha."""
    base = brute_force_spectrum(triangle_hamiltonian)
    scaled = brute_force_spectrum(upscale(triangle_hamiltonian, 1.2))

    assert scaled.absolute_gap == pytest.approx(1.2 * base.absolute_gap, rel=1e-12)
    assert scaled.ratio == base.ratio


def test_upscale_identity_and_invalid(triangle_hamiltonian):
    """Test alpha = 1 is a no-op and alpha < 1 is rejected."""
    assert upscale(triangle_hamiltonian, 1.0) is triangle_hamiltonian
    with pytest.raises(InputError):
        upscale(triangle_hamiltonian, 0.5)


def test_degenerate_spectrum_has_no_gap():
    """Test that a constant diagonal raises NoGapError."""
    hamiltonian = IsingHamiltonian(num_qubits=2, terms=[])

    with pytest.raises(NoGapError):
        brute_force_spectrum(hamiltonian)


def test_enumeration_guard(triangle_hamiltonian):
    """Test that the guard refuses larger instances."""
    with pytest.raises(EnumerationLimitError, match="enumeration guard"):
        brute_force_spectrum(triangle_hamiltonian, guard=2)


def test_parse_edge_list():
    """Test parsing with comments and blank lines."""
    text = "# triangle\n0 1 1\n\n1 2 1\n0 2 1\n"
    graph = parse_graph_text(text)

    assert graph.num_nodes == 3
    assert graph.edges == ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0))


def test_parse_malformed_line_reports_line():
    """Test that a two-field line names line 1."""
    with pytest.raises(InputError, match="line 1") as excinfo:
        parse_graph_text("0 1\n1 2 1\n")

    assert excinfo.value.line == 1


def test_parse_rejects_negative_weight():
    """Test that a negative weight is rejected with its line."""
    with pytest.raises(InputError) as excinfo:
        parse_graph_text("0 1 1\n1 2 -3\n")

    assert excinfo.value.line == 2


def test_parse_rejects_duplicate_edge():
    """Test that (1, 0) duplicates (0, 1)."""
    with pytest.raises(InputError, match="duplicate"):
        parse_graph_text("0 1 1\n1 0 2\n")


def test_parse_drops_zero_weight():
    """Test that weight 0 means no edge."""
    graph = parse_graph_text("0 1 0\n1 2 1\n")

    assert graph.num_nodes == 3
    assert graph.edges == ((1, 2, 1.0),)


def test_json_graph_round_trip(path_graph):
    """Test that the JSON dump parses back to the same graph."""
    assert parse_graph_text(dump_graph(path_graph, fmt="json")) == path_graph


def test_json_graph_node_count_key():
    """Test the "n" key, the "num_nodes" alias and the key written by dump_graph."""
    graph = parse_graph_text('{"n": 3, "edges": [[0,1,1],[1,2,1]]}')

    assert graph.num_nodes == 3
    assert graph.edges == ((0, 1, 1.0), (1, 2, 1.0))
    assert parse_graph_text('{"num_nodes": 3, "edges": [[0,1,1],[1,2,1]]}') == graph
    assert json.loads(dump_graph(graph, fmt="json"))["n"] == 3
    with pytest.raises(InputError, match="'n'"):
        parse_graph_text('{"edges": [[0,1,1]]}')


def test_load_graph_from_file(tmp_path, triangle_graph):
    """Test reading a graph file written by dump_graph."""
    path = tmp_path / "triangle.txt"
    path.write_text(dump_graph(triangle_graph), encoding="utf-8")

    assert load_graph(path) == triangle_graph


def test_load_graph_missing_file(tmp_path):
    """Test that a missing file is an input error."""
    with pytest.raises(InputError):
        load_graph(tmp_path / "missing.txt")


def test_weighted_graph_validation():
    """Test that self loops and negative weights are rejected."""
    with pytest.raises(ValueError):
        WeightedGraph(num_nodes=2, edges=[(1, 1, 1.0)])
    with pytest.raises(ValueError):
        WeightedGraph(num_nodes=2, edges=[(0, 1, -1.0)])
    with pytest.raises(ValueError):
        WeightedGraph(num_nodes=2, edges=[(0, 2, 1.0)])


def test_random_graph_is_deterministic():
    """Test that the same seed yields the same graph."""
    assert random_graph(6, 5, 0.5, seed=3) == random_graph(6, 5, 0.5, seed=3)


def test_random_graph_weights():
    """Test integer weights within range on ordered pairs."""
    graph = random_graph(8, 4, 0.7, seed=11)

    assert graph.edges
    for u, v, w in graph.edges:
        assert 0 <= u < v < 8
        assert w == int(w)
        assert 1 <= w <= 4


def test_random_graph_rejects_bad_arguments():
    """Test argument validation."""
    with pytest.raises(InputError):
        random_graph(1, 3, 0.5, seed=0)
    with pytest.raises(InputError):
        random_graph(4, 3, 0.0, seed=0)
    with pytest.raises(InputError):
        random_graph(4, 0, 0.5, seed=0)


def test_seven_node_demo_graph():
    """Test the seven-node analogue instance."""
    graph = seven_node_demo_graph()

    assert graph.num_nodes == 7
    assert 0 < len(graph.edges) <= 21
    assert all(1 <= w <= 11 for _, _, w in graph.edges)
    assert graph == seven_node_demo_graph()


@pytest.mark.parametrize("seed", range(20))
def test_upscaling_laws_on_random_graphs(seed):
    """Test ground set, gap and ratio of alpha H on seeded random graphs."""
    n = 3 + seed % 6
    hamiltonian = build_maxcut_hamiltonian(random_graph(n, 11, 0.6, seed=seed))
    base = brute_force_spectrum(hamiltonian)

    for alpha in (1.2, 7.0, 1024.0):
        scaled = brute_force_spectrum(upscale(hamiltonian, alpha))
        assert scaled.ground_states == base.ground_states
        assert scaled.absolute_gap == pytest.approx(
            alpha * base.absolute_gap, rel=1e-12
        )
        assert scaled.ratio == pytest.approx(base.ratio, rel=1e-12)


@pytest.mark.parametrize("seed", [0, 5, 9])
def test_cut_energy_duality_and_flip_symmetry(seed):
    """Test cut = offset - H/2 and H(x) = H(not x) on every bitstring."""
    graph = random_graph(6, 7, 0.7, seed=seed)
    hamiltonian = build_maxcut_hamiltonian(graph)

    for bits in itertools.product("01", repeat=graph.num_nodes):
        partition = "".join(bits)
        flipped = "".join("1" if b == "0" else "0" for b in partition)
        energy = diagonal_energy(hamiltonian, partition)
        assert cut_value(graph, partition) == hamiltonian.offset - energy / 2
        assert diagonal_energy(hamiltonian, flipped) == energy
        assert cut_value(graph, flipped) == cut_value(graph, partition)
