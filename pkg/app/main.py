"""
FastAPI application for the QIPA Separation Lab.

Exposes the separation analysis, the oracle power iteration and the
divergence probe over HTTP. The service is stateless: every request is
computed from its own body.
"""

import logging
from contextlib import asynccontextmanager, contextmanager
from typing import Optional

from fastapi import (
    Depends,
    FastAPI,
    File,
    HTTPException,
    Query,
    UploadFile,
    status,
)
from fastapi.middleware.cors import CORSMiddleware

from app import __version__
from app.config import Settings, get_settings
from app.exceptions import InputError, NumericalError
from app.graph_ising import (
    brute_force_spectrum,
    build_maxcut_hamiltonian,
    parse_graph_text,
    upscale,
)
from app.models import (
    AnalyzeRequest,
    AnalyzeResponse,
    ConditionReport,
    ConditionRequest,
    DivergenceProbe,
    PowerRequest,
    PowerResponse,
    SeparationConstants,
    WeightedGraph,
)
from app.power_iteration import (
    closed_form_majority_count,
    iterations_to_majority,
    kappa_bounds,
    levels_from_request,
)
from app.separation_analysis import (
    analyze_spectrum,
    check_inequality_system,
    divergence_probe,
)

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Lifespan context manager for application startup and shutdown.

    Logs the effective configuration on startup.
    """
    settings = get_settings()
    logger.info(
        "QIPA Separation Lab %s starting (enumeration guard %d, c=%g d=%g k=%g)",
        __version__,
        settings.enumeration_guard,
        settings.default_c,
        settings.default_d,
        settings.default_k,
    )
    yield


app = FastAPI(
    title="QIPA Separation Lab API",
    version=__version__,
    description=(
        "Exact desk-scale checks of when QIPA2 needs polynomially many "
        "iterations while varQITE needs exponentially many."
    ),
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=get_settings().cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@contextmanager
def lab_errors():
    """Translate lab errors into HTTP errors."""
    try:
        yield
    except InputError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc)
        ) from exc
    except NumericalError as exc:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc)
        ) from exc


def _constants(
    requested: Optional[SeparationConstants], settings: Settings
) -> SeparationConstants:
    if requested is not None:
        return requested
    return SeparationConstants(
        c=settings.default_c, d=settings.default_d, k=settings.default_k
    )


def _analyze_graph(
    graph: WeightedGraph, alpha: float, consts: SeparationConstants, settings: Settings
) -> AnalyzeResponse:
    hamiltonian = upscale(build_maxcut_hamiltonian(graph), alpha)
    summary = brute_force_spectrum(hamiltonian, guard=settings.enumeration_guard)
    analysis = analyze_spectrum(
        summary.num_qubits, summary.lambda1, summary.lambda2, consts
    )
    return AnalyzeResponse(spectrum=summary, analysis=analysis)


# Health check endpoint
@app.get("/health", tags=["health"])
async def health_check():
    """
    Health check endpoint.

    Example:
        >>> GET /health
        {"status": "ok"}
    """
    return {"status": "ok"}


@app.get("/", tags=["health"])
async def root():
    """API name, version and documentation links."""
    return {
        "name": "QIPA Separation Lab API",
        "version": __version__,
        "docs": "/docs",
        "health": "/health",
    }


# ==================== Analysis Endpoints ====================


@app.post("/api/analyze", response_model=AnalyzeResponse, tags=["analysis"])
def analyze(request: AnalyzeRequest, settings: Settings = Depends(get_settings)):
    """
    Separation report for a graph or a synthetic spectrum.

    Args:
        request: Graph or spectrum, upscale factor and optional constants
        settings: Lab settings (injected)

    Returns:
        AnalyzeResponse: Spectrum summary (graphs only) and the analysis
            before and after the recommended upscale

    Raises:
        HTTPException: 422 on invalid input or oversized graphs

    Example:
        >>> POST /api/analyze {"spectrum": {"n": 10, "lambda1": 1025, "lambda2": 1024}}
        {"spectrum": null, "analysis": {"report": {"separated": true, ...}, ...}}
    """
    consts = _constants(request.constants, settings)
    with lab_errors():
        if request.graph is not None:
            return _analyze_graph(request.graph, request.alpha, consts, settings)
        levels = sorted(levels_from_request(request.spectrum), reverse=True)
        if len(levels) < 2:
            raise InputError("spectrum needs at least two levels")
        analysis = analyze_spectrum(
            request.spectrum.n,
            request.alpha * levels[0][0],
            request.alpha * levels[1][0],
            consts,
        )
        return AnalyzeResponse(spectrum=None, analysis=analysis)


@app.post("/api/analyze/file", response_model=AnalyzeResponse, tags=["analysis"])
async def analyze_file(
    file: UploadFile = File(...),
    alpha: float = Query(default=1.0, ge=1.0),
    c: Optional[float] = Query(default=None, gt=0),
    d: Optional[float] = Query(default=None, gt=0),
    k: Optional[float] = Query(default=None, gt=0),
    settings: Settings = Depends(get_settings),
):
    """
    Separation report for an uploaded graph file (edge list or JSON).

    Raises:
        HTTPException: 422 with the offending line number on parse errors
    """
    raw = await file.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail="graph file must be UTF-8 text",
        ) from exc
    consts = SeparationConstants(
        c=settings.default_c if c is None else c,
        d=settings.default_d if d is None else d,
        k=settings.default_k if k is None else k,
    )
    with lab_errors():
        return _analyze_graph(parse_graph_text(text), alpha, consts, settings)


@app.post("/api/power", response_model=PowerResponse, tags=["power-iteration"])
def power(request: PowerRequest, settings: Settings = Depends(get_settings)):
    """
    Iterations-to-majority of the exact oracle power iteration.

    The closed form is reported for the degenerate-rest model only. A run
    that exhausts ``max_iter`` returns ``status == "budget_exceeded"``.
    """
    max_iter = settings.max_iter if request.max_iter is None else request.max_iter
    with lab_errors():
        levels = sorted(levels_from_request(request.spectrum), reverse=True)
        result = iterations_to_majority(levels, request.oracle, max_iter=max_iter)
        closed_form = None
        bounds = None
        if request.spectrum.levels is None:
            closed_form = closed_form_majority_count(
                request.spectrum.n,
                request.spectrum.lambda1,
                request.spectrum.lambda2,
                request.oracle,
            )
        if len(levels) >= 2 and levels[1][0] > 0:
            bounds = kappa_bounds(request.spectrum.n, levels[0][0], levels[1][0])
        return PowerResponse(result=result, closed_form=closed_form, bounds=bounds)


@app.post("/api/separation/check", response_model=ConditionReport, tags=["separation"])
def separation_check(
    request: ConditionRequest, settings: Settings = Depends(get_settings)
):
    """Evaluate the inequality system for one (n, lambda1, lambda2)."""
    with lab_errors():
        return check_inequality_system(
            request.n,
            request.lambda1,
            request.lambda2,
            _constants(request.constants, settings),
            rtol=settings.comparison_rtol,
        )


@app.get("/api/separation/probe", response_model=DivergenceProbe, tags=["separation"])
def separation_probe(
    n_start: int = 1,
    n_stop: int = 60,
    c: Optional[float] = Query(default=None, gt=0),
    d: Optional[float] = Query(default=None, gt=0),
    k: Optional[float] = Query(default=None, gt=0),
    settings: Settings = Depends(get_settings),
):
    """
    Lower bound on lambda2 for each n in ``[n_start, n_stop]``.

    Raises:
        HTTPException: 422 if the range is empty or starts below 1
    """
    if n_start < 1 or n_stop < n_start:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail="need 1 <= n_start <= n_stop",
        )
    if n_stop > 500:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail="n_stop must not exceed 500",
        )
    consts = SeparationConstants(
        c=settings.default_c if c is None else c,
        d=settings.default_d if d is None else d,
        k=settings.default_k if k is None else k,
    )
    with lab_errors():
        return divergence_probe(consts, range(n_start, n_stop + 1))
