"""
Run artifacts: JSON reports, CSV trajectories, SVG plots and manifests.

Every file is written to a temporary sibling and moved into place with
``os.replace`` so an interrupted run never leaves a half-written artifact.
Floats are written with ``repr`` and JSON keys are sorted, which keeps the
output byte-identical across re-runs with the same inputs.
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from app.models import BlowupRow, RunManifest, Trajectory  # noqa: E402

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TRAJECTORY_COLUMNS = (
    "step",
    "time",
    "energy",
    "solution_prob",
    "step_error",
    "bures_cum",
    "bures_exact",
)
SCAN_COLUMNS = ("alpha", "var", "delta", "qipa_floor", "dt_used")

# Fixed salt so SVG element ids do not change between runs
_SVG_HASH_SALT = "qipa-separation-lab"


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("Wrote %s (%d bytes)", path, len(text))
    return path


def _jsonable(value: Any) -> Any:
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json", by_alias=True)
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return value.as_posix()
    return value


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    """Write a JSON report carrying ``"schema": 1``."""
    document = {"schema": SCHEMA_VERSION, **_jsonable(payload)}
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    return atomic_write_text(path, text)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return atomic_write_text(path, buffer.getvalue())


def write_trajectory_csv(path: Path, trajectory: Trajectory) -> Path:
    rows = (
        [getattr(record, column) for column in TRAJECTORY_COLUMNS]
        for record in trajectory.records
    )
    return write_csv(path, TRAJECTORY_COLUMNS, rows)


def write_scan_csv(path: Path, rows: Sequence[BlowupRow]) -> Path:
    table = ([getattr(row, column) for column in SCAN_COLUMNS] for row in rows)
    return write_csv(path, SCAN_COLUMNS, table)


def write_line_plot_svg(
    path: Path,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    log_y: bool = False,
    timestamp: bool = True,
    reference: Optional[float] = None,
) -> Path:
    """
    Render named (x, y) series as an SVG line plot.

    Args:
        path: Output file
        series: Label -> (x values, y values); empty series are allowed
        title: Plot title
        xlabel: X axis label
        ylabel: Y axis label
        log_y: Use a logarithmic y axis
        timestamp: Embed the creation date; off for byte-identical output
        reference: Optional horizontal reference line (e.g. ground energy)
    """
    with plt.rc_context({"svg.hashsalt": _SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        labeled = False
        for label, (xs, ys) in series.items():
            if len(xs):
                ax.plot(list(xs), list(ys), linewidth=2, label=label)
                labeled = True
        if reference is not None:
            ax.axhline(
                reference, color="gray", linestyle="--", linewidth=1, label="ground"
            )
            labeled = True
        if log_y and labeled:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True)
        if labeled:
            ax.legend()
        fig.tight_layout()

        buffer = io.StringIO()
        metadata = None if timestamp else {"Date": None}
        fig.savefig(buffer, format="svg", metadata=metadata)
        plt.close(fig)
    return atomic_write_text(path, buffer.getvalue())


def plot_trajectories(
    path: Path, trajectories: Sequence[Trajectory], timestamp: bool = True
) -> Path:
    """Energy against imaginary time for each run, with the ground energy."""
    series = {
        t.mode: ([r.time for r in t.records], [r.energy for r in t.records])
        for t in trajectories
    }
    reference = trajectories[0].ground_energy if trajectories else None
    return write_line_plot_svg(
        path,
        series,
        title="Energy vs imaginary time",
        xlabel="imaginary time",
        ylabel="energy",
        timestamp=timestamp,
        reference=reference,
    )


def plot_blowup(path: Path, rows: Sequence[BlowupRow], timestamp: bool = True) -> Path:
    alphas = [r.alpha for r in rows]
    series = {
        "Var(alpha H)": (alphas, [r.var for r in rows]),
        "Delta": (alphas, [r.delta for r in rows]),
        "QIPA2 floor": (alphas, [r.qipa_floor for r in rows]),
    }
    return write_line_plot_svg(
        path,
        series,
        title="Error blow-up under upscaling",
        xlabel="alpha",
        ylabel="value",
        log_y=True,
        timestamp=timestamp,
    )


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    """Write ``manifest.json`` next to the outputs it lists."""
    document = manifest.model_dump(mode="json", by_alias=True)
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    return atomic_write_text(Path(out_dir) / "manifest.json", text)


def read_manifest(path: Path) -> RunManifest:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    return RunManifest.model_validate(document)
