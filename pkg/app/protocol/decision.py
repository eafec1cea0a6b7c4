"""
Decision protocol: coefficients CCE = MACE / MAP and CMC = MRMC / MAP,
performance s = CCE + CMC, and the system with the lowest s.
"""

from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from rich.console import Console
from rich.table import Table

from app.core.exceptions import IngestError, ProtocolError
from app.core.logging import get_logger
from app.evaluation.metrics import SYSTEM_KEYS, lambda_order
from app.schemas.evaluation import DecisionReport, ProtocolRow, SystemEvaluation, SystemId

logger = get_logger(__name__)

POOLED_LAMBDA = "ALL"
DECISION_HEADER = SYSTEM_KEYS + ["cce", "cmc", "s"]


def _coefficient(numerator: float, evaluation: SystemEvaluation, name: str) -> float:
    if evaluation.map_mean == 0:
        raise ProtocolError(
            "undefined coefficient (zero precision)",
            details={"coefficient": name, "map": evaluation.map_mean},
        )
    return numerator / evaluation.map_mean


def cce(evaluation: SystemEvaluation) -> float:
    """Coefficient of calibration error: MACE / MAP."""
    return _coefficient(evaluation.mace_mean, evaluation, "cce")


def cmc(evaluation: SystemEvaluation) -> float:
    """Coefficient of miscalibration: MRMC / MAP."""
    return _coefficient(evaluation.mrmc_mean, evaluation, "cmc")


def performance(cce_value: float, cmc_value: float) -> float:
    if cce_value < 0 or cmc_value < 0:
        raise ProtocolError("coefficients must be non-negative", details={"cce": cce_value, "cmc": cmc_value})
    return cce_value + cmc_value


def protocol_row(system: SystemId, evaluation: SystemEvaluation) -> ProtocolRow:
    return ProtocolRow(system=system, cce=cce(evaluation), cmc=cmc(evaluation))


def decide(rows: Sequence[ProtocolRow]) -> SystemId:
    """
    System with the lowest s; equal s goes to the lexicographically smallest label.

    Raises:
        ProtocolError: If there are no rows
    """
    if not rows:
        raise ProtocolError("no systems to decide between")
    best = min(rows, key=lambda row: (performance(row.cce, row.cmc), row.system.label))
    return best.system


def _system(record: dict, lambda_label: Optional[str]) -> SystemId:
    return SystemId(
        recommender=str(record["recommender"]),
        divergence=str(record["divergence"]).lower(),
        balance=str(record["balance"]).lower(),
        lambda_label=lambda_label,
    )


def build_rows(frame: pd.DataFrame, pool_lambdas: bool = False) -> tuple[list[ProtocolRow], list[str]]:
    """
    Protocol rows from a metrics or coefficient frame.

    A frame with ``map,mace,mrmc`` columns is averaged over repetitions (and,
    with ``pool_lambdas``, over the lambda axis too) before the coefficients
    are taken. A frame with ``cce,cmc`` columns is used as is.

    Returns:
        (rows, skipped labels); systems whose MAP mean is 0 are skipped
    """
    columns = set(frame.columns)
    if "lambda" not in columns:
        frame = frame.assign(**{"lambda": POOLED_LAMBDA})
    frame = frame.assign(**{"lambda": frame["lambda"].fillna(POOLED_LAMBDA).astype(str)})

    if {"cce", "cmc"} <= columns:
        rows = [
            ProtocolRow(_system(record, record["lambda"]), float(record["cce"]), float(record["cmc"]))
            for record in frame.to_dict("records")
        ]
        return rows, []
    if not {"map", "mace", "mrmc"} <= columns:
        raise IngestError("decision input needs map,mace,mrmc or cce,cmc columns", details={"columns": sorted(columns)})

    keys = ["recommender", "divergence", "balance"] if pool_lambdas else SYSTEM_KEYS
    means = frame.groupby(keys, sort=True, as_index=False)[["map", "mace", "mrmc"]].mean()
    rows, skipped = [], []
    for record in means.to_dict("records"):
        system = _system(record, POOLED_LAMBDA if pool_lambdas else record["lambda"])
        evaluation = SystemEvaluation(float(record["map"]), float(record["mace"]), float(record["mrmc"]))
        try:
            rows.append(protocol_row(system, evaluation))
        except ProtocolError:
            logger.warning(f"Skipping {system.label}: zero MAP")
            skipped.append(system.label)
    return rows, skipped


def decision_report(frame: pd.DataFrame, pool_lambdas: bool = False) -> DecisionReport:
    rows, skipped = build_rows(frame, pool_lambdas)
    winner = decide(rows)
    report = DecisionReport(rows=tuple(rows), winner=winner, skipped=tuple(skipped))
    logger.info(f"Decision over {len(rows)} systems: {winner.label} (s={report.winner_row.s:.4f})")
    return report


def decision_frame(report: DecisionReport) -> pd.DataFrame:
    frame = pd.DataFrame(
        [
            (
                row.system.recommender,
                row.system.divergence,
                row.system.balance,
                row.system.lambda_label or POOLED_LAMBDA,
                row.cce,
                row.cmc,
                row.s,
            )
            for row in report.rows
        ],
        columns=DECISION_HEADER,
    )
    order = frame["lambda"].map(lambda_order)
    return (
        frame.assign(_key=order)
        .sort_values(["recommender", "divergence", "balance", "_key"], kind="mergesort")
        .drop(columns="_key")
        .reset_index(drop=True)
    )


def write_decision(report: DecisionReport, out_dir: Path) -> tuple[Path, Path]:
    """Write ``decision.csv`` and the one-line ``winner.txt``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "decision.csv"
    decision_frame(report).to_csv(csv_path, index=False)
    winner_path = out_dir / "winner.txt"
    winner_path.write_text(f"{report.winner.label},{report.winner_row.s!r}\n", encoding="utf-8")
    return csv_path, winner_path


def render_decision_table(report: DecisionReport, console: Optional[Console] = None) -> Table:
    """
    Rich table of s values: one row per divergence x balance (x lambda), one
    column per recommender, winner highlighted.
    """
    recommenders = sorted({row.system.recommender for row in report.rows})
    table = Table(title="Protocol performance s = CCE + CMC")
    table.add_column("System", style="bold")
    for name in recommenders:
        table.add_column(name, justify="right")

    cells: dict[tuple[str, str, str], dict[str, ProtocolRow]] = {}
    for row in report.rows:
        key = (row.system.divergence, row.system.balance, row.system.lambda_label or POOLED_LAMBDA)
        cells.setdefault(key, {})[row.system.recommender] = row

    for key in sorted(cells, key=lambda k: (k[0], k[1], lambda_order(k[2]))):
        divergence, balance, label = key
        name = f"{divergence.upper()} {balance.upper()}"
        if label != POOLED_LAMBDA:
            name = f"{name} @{label}"
        values = []
        for recommender in recommenders:
            row = cells[key].get(recommender)
            if row is None:
                values.append("-")
            elif row.system == report.winner:
                values.append(f"[bold green]{row.s:.2f}[/bold green]")
            else:
                values.append(f"{row.s:.2f}")
        table.add_row(name, *values)

    (console or Console()).print(table)
    return table
