"""Trial grading and agent scoring.

Criteria are checked per trial workspace; attainment counts are aggregated
into a fulfillment matrix X (agents x criteria) which is min-max normalized,
weighted by entropy (criteria with more variability carry more information),
and ranked by relative closeness to the ideal/anti-ideal profiles (TOPSIS).
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .physics import grade_exponent


class TooFewAgents(Exception):
    pass


class DimensionMismatch(Exception):
    pass


@dataclass(frozen=True)
class Criterion:
    id: str
    kind: str  # file_exists | pattern_in_file | numeric_in_band | report_sections
    glob: str
    pattern: str = ""
    low: float = 0.0
    high: float = 0.0
    sections: tuple[str, ...] = ()
    exponent_model: str = ""  # "RW"/"SAW": delegate the band to grade_exponent

    def __post_init__(self):
        if not self.glob:
            raise ValueError("glob must be nonempty")
        if self.kind == "numeric_in_band" and not self.exponent_model:
            if self.low > self.high:
                raise ValueError("low must be <= high")


@dataclass(frozen=True)
class FulfillmentMatrix:
    x: np.ndarray  # (m agents, n criteria) nonneg int counts
    agent_ids: tuple[str, ...]
    criterion_ids: tuple[str, ...]

    def __post_init__(self):
        if self.x.shape != (len(self.agent_ids), len(self.criterion_ids)):
            raise DimensionMismatch("matrix shape does not match labels")


@dataclass(frozen=True)
class ScoreBundle:
    r: np.ndarray
    weights: np.ndarray
    v: np.ndarray
    ideal: np.ndarray
    anti_ideal: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    closeness: np.ndarray
    dropped_criteria: tuple[str, ...] = ()
    agent_ids: tuple[str, ...] = ()
    criterion_ids: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Criterion checking
# ---------------------------------------------------------------------------

def _matching_files(workspace: Path, pattern: str) -> list[Path]:
    return sorted(p for p in workspace.rglob(pattern) if p.is_file())


def _read(path: Path) -> str | None:
    try:
        return path.read_text(encoding="utf-8", errors="replace")
    except OSError:
        return None


def _has_section(content: str, name: str) -> bool:
    pattern = re.compile(
        r"^[#*\s\d.):>-]*" + re.escape(name) + r"\b", re.IGNORECASE | re.MULTILINE
    )
    return bool(pattern.search(content))


def check_criterion(criterion: Criterion, workspace: str | Path) -> bool:
    """Unreadable files count as unmet, never as errors."""
    workspace = Path(workspace)
    files = _matching_files(workspace, criterion.glob)
    if criterion.kind == "file_exists":
        return bool(files)
    if criterion.kind == "pattern_in_file":
        rx = re.compile(criterion.pattern, re.MULTILINE)
        return any(
            (text := _read(f)) is not None and rx.search(text) for f in files
        )
    if criterion.kind == "numeric_in_band":
        rx = re.compile(criterion.pattern)
        for f in files:
            text = _read(f)
            if text is None:
                continue
            m = rx.search(text)
            if not m:
                continue
            try:
                value = float(m.group(1) if m.groups() else m.group(0))
            except ValueError:
                continue
            if criterion.exponent_model:
                return grade_exponent(value, criterion.exponent_model)
            return criterion.low <= value <= criterion.high
        return False
    if criterion.kind == "report_sections":
        return any(
            (text := _read(f)) is not None
            and all(_has_section(text, name) for name in criterion.sections)
            for f in files
        )
    raise ValueError(f"unknown criterion kind {criterion.kind!r}")


NUMBER = r"([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"

# The default 7-criterion set used when no criteria file is configured.
DEFAULT_CRITERIA: tuple[Criterion, ...] = (
    Criterion("run_ok", "pattern_in_file", "mission_report.json",
              pattern=r'"programs_failed":\s*0'),
    Criterion("conformation_plot", "file_exists", "*conformation*.svg"),
    Criterion("fit_plot", "file_exists", "*fit*.svg"),
    Criterion("data_file", "file_exists", "*.csv"),
    Criterion("nu_in_band", "numeric_in_band", "report*.md",
              pattern=r"nu\s*=\s*" + NUMBER, exponent_model="RW"),
    Criterion("report_file", "file_exists", "report*.md"),
    Criterion("report_sections", "report_sections", "report*.md",
              sections=("Introduction", "Methods", "Results", "Conclusion")),
)


def load_criteria(path: str | Path) -> tuple[Criterion, ...]:
    """Criteria file: JSON list of objects mirroring the Criterion fields."""
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for rec in records:
        out.append(
            Criterion(
                id=rec["id"],
                kind=rec["kind"],
                glob=rec["glob"],
                pattern=rec.get("pattern", ""),
                low=rec.get("low", 0.0),
                high=rec.get("high", 0.0),
                sections=tuple(rec.get("sections", ())),
                exponent_model=rec.get("exponent_model", ""),
            )
        )
    return tuple(out)


def check_all(criteria: tuple[Criterion, ...], workspace: str | Path) -> tuple[bool, ...]:
    return tuple(check_criterion(c, workspace) for c in criteria)


# ---------------------------------------------------------------------------
# EWM + TOPSIS
# ---------------------------------------------------------------------------

def normalize_matrix(
    matrix: FulfillmentMatrix,
) -> tuple[np.ndarray, tuple[str, ...], tuple[str, ...]]:
    """Column-wise min-max normalization.

    Returns (R over retained columns, retained ids, dropped ids). Columns
    with max == min carry no information and would divide by zero; they are
    dropped and reported.
    """
    x = matrix.x.astype(float)
    m = x.shape[0]
    if m < 2:
        raise TooFewAgents("need at least 2 agents")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    keep = hi > lo
    retained = tuple(
        cid for cid, k in zip(matrix.criterion_ids, keep) if k
    )
    dropped = tuple(
        cid for cid, k in zip(matrix.criterion_ids, keep) if not k
    )
    r = (x[:, keep] - lo[keep]) / (hi[keep] - lo[keep])
    return r, retained, dropped


def entropy_weights(r: np.ndarray) -> np.ndarray:
    """Entropy-method weights over normalized columns.

    p_ij = r_ij / sum_i r_ij; e_j = -k sum_i p ln p with k = 1/ln m and
    0 ln 0 = 0; weights proportional to the disparities d_j = 1 - e_j.
    Falls back to uniform weights when every column has zero disparity.
    """
    m, n = r.shape
    if n == 0:
        return np.empty(0)
    col_sums = r.sum(axis=0)
    p = r / col_sums
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    k = 1.0 / np.log(m)
    e = -k * plogp.sum(axis=0)
    d = 1.0 - e
    d = np.where(d < 0, 0.0, d)  # clip tiny negative round-off
    total = d.sum()
    if total <= 0:
        return np.full(n, 1.0 / n)
    return d / total


def topsis_scores(
    r: np.ndarray,
    weights: np.ndarray,
    agent_ids: tuple[str, ...] = (),
    criterion_ids: tuple[str, ...] = (),
    dropped: tuple[str, ...] = (),
) -> ScoreBundle:
    """Relative closeness to the ideal profile.

    v = w * r columnwise; S+/S- are per-agent Euclidean distances to the
    columnwise max/min profiles; C* = S- / (S+ + S-), with the 0/0 case
    (no discriminating column at all) scored 0.5 by convention.
    """
    if r.ndim != 2 or weights.shape != (r.shape[1],):
        raise DimensionMismatch(f"r {r.shape} vs weights {weights.shape}")
    v = r * weights
    if v.shape[1] == 0:
        m = r.shape[0]
        half = np.full(m, 0.5)
        zero = np.zeros(m)
        empty = np.empty((m, 0))
        return ScoreBundle(r, weights, empty, np.empty(0), np.empty(0),
                           zero, zero, half, dropped, agent_ids, criterion_ids)
    ideal = v.max(axis=0)
    anti = v.min(axis=0)
    s_plus = np.sqrt(((v - ideal) ** 2).sum(axis=1))
    s_minus = np.sqrt(((v - anti) ** 2).sum(axis=1))
    denom = s_plus + s_minus
    closeness = np.where(denom > 0, s_minus / np.where(denom > 0, denom, 1.0), 0.5)
    return ScoreBundle(
        r, weights, v, ideal, anti, s_plus, s_minus, closeness,
        dropped, agent_ids, criterion_ids,
    )


def score_matrix(matrix: FulfillmentMatrix) -> ScoreBundle:
    """Full pipeline: normalize, weight by entropy, rank by TOPSIS."""
    r, retained, dropped = normalize_matrix(matrix)
    weights = entropy_weights(r)
    return topsis_scores(r, weights, matrix.agent_ids, retained, dropped)


# ---------------------------------------------------------------------------
# Matrix / score I/O
# ---------------------------------------------------------------------------

def write_fulfillment_csv(matrix: FulfillmentMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", *matrix.criterion_ids])
        for agent, row in zip(matrix.agent_ids, matrix.x):
            writer.writerow([agent, *(int(v) for v in row)])


def read_fulfillment_csv(paths: list[str | Path]) -> FulfillmentMatrix:
    """Merge one or more agent-rows-by-criteria CSVs; headers must agree."""
    agents: list[str] = []
    rows: list[list[int]] = []
    header: list[str] | None = None
    for path in paths:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            head = next(reader)
            if header is None:
                header = head
            elif head != header:
                raise DimensionMismatch(f"{path}: criteria header mismatch")
            for row in reader:
                agents.append(row[0])
                rows.append([int(v) for v in row[1:]])
    if header is None:
        raise DimensionMismatch("no input rows")
    return FulfillmentMatrix(
        np.array(rows, dtype=int), tuple(agents), tuple(header[1:])
    )


def write_scores(bundle: ScoreBundle, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "closeness", "s_plus", "s_minus"])
        order = np.argsort(-bundle.closeness)
        for i in order:
            writer.writerow(
                [
                    bundle.agent_ids[i] if bundle.agent_ids else str(i),
                    f"{bundle.closeness[i]:.12f}",
                    f"{bundle.s_plus[i]:.12f}",
                    f"{bundle.s_minus[i]:.12f}",
                ]
            )


def format_score_table(bundle: ScoreBundle) -> str:
    lines = [f"{'agent':<24}{'C*':>10}"]
    order = np.argsort(-bundle.closeness)
    for i in order:
        name = bundle.agent_ids[i] if bundle.agent_ids else str(i)
        lines.append(f"{name:<24}{bundle.closeness[i]:>10.4f}")
    if bundle.dropped_criteria:
        lines.append(f"dropped criteria (no variability): "
                     f"{', '.join(bundle.dropped_criteria)}")
    return "\n".join(lines)
