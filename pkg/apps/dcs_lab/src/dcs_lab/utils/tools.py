"""Output helpers for the harness: seeds, CSV tables, plot scripts and measurement dumps."""

from __future__ import annotations

import csv
import hashlib
import pprint
from collections import defaultdict
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from dcs.analysis import RateBudget, rate_accounting
from dcs.errors import EmptyInputError, UnwritablePathError
from dcs.sensing import MeasurementSet, write_codes
from shared.logging import get_logger
from shared.types import Seed

from .state import CSV_HEADER, ExperimentConfig, ResultRow

logger = get_logger(__name__)

RATES_HEADER = ("m", "total_bits", "m_prime", "delta_m")

_PLOT_TEMPLATE = '''"""Mean MSE versus measurements per node, one curve per algorithm."""

import matplotlib.pyplot as plt

TITLE = {title!r}
SERIES = {series}


def main() -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for algorithm, points in SERIES.items():
        ax.semilogy(points["m"], points["mse"], marker="o", label=algorithm)
    ax.set_xlabel("measurements per node m")
    ax.set_ylabel("mean squared error")
    ax.set_title(TITLE)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig({image!r}, dpi=150)


if __name__ == "__main__":
    main()
'''


def trial_seed(base_seed: Seed, trial: int, m: int) -> Seed:
    """base_seed XOR a 64-bit hash of (trial, m); cells can run in any order or process."""
    digest = hashlib.blake2b(f"{trial}:{m}".encode(), digest_size=8).digest()
    return (base_seed ^ int.from_bytes(digest, "little")) & (2**64 - 1)


def sort_rows(rows: Iterable[ResultRow]) -> list[ResultRow]:
    """Canonical order: algorithm, then m, then trial."""
    return sorted(rows, key=lambda row: (row.algorithm, row.m, row.trial))


def _ensure_parent(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UnwritablePathError(f"cannot create directory for {path}: {exc}") from exc


def export_csv(rows: Sequence[ResultRow], path: str | Path, deterministic: bool = False) -> Path:
    """Write rows in canonical order; ``deterministic`` zeroes wall_time for diffing."""
    if not rows:
        raise EmptyInputError("no result rows to export")
    path = Path(path)
    _ensure_parent(path)
    try:
        with path.open("w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_HEADER, lineterminator="\n")
            writer.writeheader()
            for row in sort_rows(rows):
                record = row.model_dump()
                if deterministic:
                    record["wall_time"] = 0.0
                writer.writerow(record)
    except OSError as exc:
        raise UnwritablePathError(f"cannot write results to {path}: {exc}") from exc
    logger.info("Wrote results", path=str(path), rows=len(rows))
    return path


def aggregate_mse(rows: Iterable[ResultRow]) -> dict[str, dict[str, list[float]]]:
    """Mean MSE over trials per (algorithm, m), as {algorithm: {"m": [...], "mse": [...]}}."""
    grouped: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        grouped[row.algorithm][row.m].append(row.mse)
    return {
        algorithm: {
            "m": [float(m) for m in sorted(by_m)],
            "mse": [float(np.mean(by_m[m])) for m in sorted(by_m)],
        }
        for algorithm, by_m in sorted(grouped.items())
    }


def emit_plot_script(
    rows: Sequence[ResultRow], path: str | Path, title: str = "MSE vs. number of measurements"
) -> Path:
    """Write a standalone matplotlib script plotting log-scale mean MSE against m."""
    if not rows:
        raise EmptyInputError("no result rows to plot")
    path = Path(path)
    _ensure_parent(path)
    script = _PLOT_TEMPLATE.format(
        title=title,
        series=pprint.pformat(aggregate_mse(rows), sort_dicts=False),
        image=str(path.with_suffix(".png").name),
    )
    try:
        path.write_text(script)
    except OSError as exc:
        raise UnwritablePathError(f"cannot write plot script to {path}: {exc}") from exc
    logger.info("Wrote plot script", path=str(path))
    return path


def write_rates(config: ExperimentConfig, path: str | Path) -> Path | None:
    """Rate accounting per m for a config with a side-information budget."""
    if config.si_budget is None:
        return None
    if config.R == 0:
        logger.warning("Skipping rate table for unquantized measurements", name=config.name)
        return None
    path = Path(path)
    _ensure_parent(path)
    try:
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(RATES_HEADER)
            for m in sorted(set(config.m_values)):
                budget = RateBudget(
                    J=config.J, m=m, R=config.R, m1=config.si_budget.m1, R1=config.si_budget.R1
                )
                report = rate_accounting(budget)
                writer.writerow([m, report.total_bits, report.m_prime, report.delta_m])
    except OSError as exc:
        raise UnwritablePathError(f"cannot write rate table to {path}: {exc}") from exc
    logger.info("Wrote rate table", path=str(path))
    return path


def dump_measurements(
    directory: str | Path, prefix: str, measurements: MeasurementSet
) -> list[Path]:
    """Write quantized codes; node 1 gets its own file when it used a separate rate."""
    if not measurements.quantized or measurements.codes is None:
        raise EmptyInputError("only quantized measurement sets can be dumped")
    assert measurements.quantizer is not None
    directory = Path(directory)
    codes = measurements.codes
    if measurements.si_quantizer is None:
        return [write_codes(directory / f"{prefix}.dcsq", codes, measurements.quantizer)]
    return [
        write_codes(directory / f"{prefix}_si.dcsq", codes[:1], measurements.si_quantizer),
        write_codes(directory / f"{prefix}_nodes.dcsq", codes[1:], measurements.quantizer),
    ]
