"""CSV emission and parsing for run records and summary tables."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping

from ..mdp import RunRecord

SCHEMA_VERSION = "runs/v1"
HEADER = ("episode", "seed", "scheme", "return", "steps", "success")


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def records_to_csv(records: Iterable[RunRecord], metadata: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    meta = "".join(f" {k}={v}" for k, v in (metadata or {}).items())
    buf.write(f"# schema={SCHEMA_VERSION}{meta}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([r.episode, r.seed, r.scheme, repr(float(r.ret)), r.steps, int(bool(r.success))])
    return buf.getvalue()


def emit_csv(records: Iterable[RunRecord], path: str | Path, metadata: Mapping[str, object] | None = None) -> Path:
    path = Path(path)
    _write(path, records_to_csv(records, metadata))
    return path


def parse_csv(text: str) -> list[RunRecord]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != HEADER:
        raise ValueError(f"unexpected CSV header {header!r}; expected {','.join(HEADER)}")
    out = []
    for row in reader:
        if not row:
            continue
        ep, seed, scheme, ret, steps, success = row
        out.append(RunRecord(int(ep), int(seed), scheme, float(ret), int(steps), success == "1"))
    return out


def read_csv(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    return parse_csv(text)


def emit_table(rows: list[Mapping[str, object]], columns: list[str], path: str | Path,
               comment: str | None = None) -> Path:
    """Write a small summary table (sweep results, success rates)."""
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    path = Path(path)
    _write(path, buf.getvalue())
    return path
