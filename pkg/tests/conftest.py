"""
Pytest configuration and fixtures for the QIPA Separation Lab tests.

This module provides canonical graphs, their Hamiltonians and an HTTP
test client with isolated settings.
"""

import pytest
from fastapi.testclient import TestClient

from app.config import Settings, get_settings
from app.graph_ising import build_maxcut_hamiltonian
from app.main import app
from app.models import WeightedGraph


@pytest.fixture
def triangle_graph():
    """Unit-weight triangle: max cut 2, ground energy -1."""
    return WeightedGraph(num_nodes=3, edges=[(0, 1, 1), (1, 2, 1), (0, 2, 1)])


@pytest.fixture
def path_graph():
    """Unit-weight path 0-1-2: max cut 2 with the middle node alone."""
    return WeightedGraph(num_nodes=3, edges=[(0, 1, 1), (1, 2, 1)])


@pytest.fixture
def single_edge_graph():
    """Two nodes joined by one edge of weight 5."""
    return WeightedGraph(num_nodes=2, edges=[(0, 1, 5)])


@pytest.fixture
def triangle_hamiltonian(triangle_graph):
    return build_maxcut_hamiltonian(triangle_graph)


@pytest.fixture
def single_edge_hamiltonian(single_edge_graph):
    return build_maxcut_hamiltonian(single_edge_graph)


@pytest.fixture
def settings(tmp_path):
    """Settings with a temporary output directory."""
    return Settings(output_dir=tmp_path / "runs")


@pytest.fixture(scope="function")
def client(settings):
    """
    Create a test client with isolated settings.

    Args:
        settings: Settings fixture

    Yields:
        TestClient: FastAPI test client

    This fixture overrides the get_settings dependency.
    """
    app.dependency_overrides[get_settings] = lambda: settings
    with TestClient(app) as test_client:
        yield test_client
    app.dependency_overrides.clear()
