"""Read and write symmetric matrices as plain CSV.

Format: ``p`` lines of ``p`` comma-separated decimals.  Lines starting
with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .matrix import SymmetricMatrix

__all__ = ["MatrixFileError", "read_matrix_csv", "parse_matrix_csv", "write_matrix_csv", "format_matrix_csv"]


class MatrixFileError(ValueError):
    pass


def parse_matrix_csv(text: str, rtol: float = 1e-8, source: str = "<string>") -> SymmetricMatrix:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in stripped.split(",")])
        except ValueError as exc:
            raise MatrixFileError(f"{source}:{lineno}: not a list of numbers: {stripped!r}") from exc
    if not rows:
        raise MatrixFileError(f"{source}: no matrix rows found")
    p = len(rows)
    for i, row in enumerate(rows):
        if len(row) != p:
            raise MatrixFileError(f"{source}: row {i + 1} has {len(row)} values, expected {p} (matrix must be square)")
    a = np.array(rows)
    if not np.all(np.isfinite(a)):
        raise MatrixFileError(f"{source}: matrix entries must be finite")
    try:
        return SymmetricMatrix.from_array(a, rtol=rtol)
    except ValueError as exc:
        raise MatrixFileError(f"{source}: {exc}") from exc


def read_matrix_csv(path, rtol: float = 1e-8) -> SymmetricMatrix:
    path = Path(path)
    return parse_matrix_csv(path.read_text(encoding="utf-8"), rtol=rtol, source=str(path))


def format_matrix_csv(matrix, header: str | None = None) -> str:
    a = np.asarray(matrix, dtype=np.float64)
    lines = [f"# {header}"] if header else []
    lines += [",".join(format(float(x), ".17g") for x in row) for row in a]
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, matrix, header: str | None = None) -> None:
    Path(path).write_text(format_matrix_csv(matrix, header), encoding="utf-8")
