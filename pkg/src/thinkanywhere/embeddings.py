"""Semantic-aware initialization for dedicated trigger-token embeddings.

The opening trigger embedding is half the mean of the semantic subword
vectors ("think", "any", "where") and half an existing opening-delimiter
anchor; the closing trigger mirrors it with the closing anchor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

DEFAULT_SUBWORDS = ("think", "any", "where")
DEFAULT_OPEN_NAME = "<ta>"
DEFAULT_CLOSE_NAME = "</ta>"


class MissingSourceToken(Exception):
    pass


class DimensionMismatch(Exception):
    pass


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        for name in list(self.entries):
            self.entries[name] = self._coerce(name, self.entries[name])

    def _coerce(self, name: str, vec) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"token {name!r}: vector has shape {vec.shape}, "
                f"expected ({self.dim},)")
        return vec

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.entries[name]
        except KeyError:
            raise MissingSourceToken(f"token {name!r} not in table")

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def set(self, name: str, vec) -> None:
        self.entries[name] = self._coerce(name, vec)


@dataclass(frozen=True)
class AnchorNames:
    open: str = "<im_start>"
    close: str = "<im_end>"


def init_trigger_embeddings(table: EmbeddingTable,
                            anchors: AnchorNames = AnchorNames(),
                            subwords: Sequence[str] = DEFAULT_SUBWORDS
                            ) -> dict[str, np.ndarray]:
    """Compute the opening/closing trigger vectors from the table."""
    semantic = np.mean([table[w] for w in subwords], axis=0)
    return {
        "e_open": 0.5 * semantic + 0.5 * table[anchors.open],
        "e_close": 0.5 * semantic + 0.5 * table[anchors.close],
    }


def add_trigger_tokens(table: EmbeddingTable,
                       anchors: AnchorNames = AnchorNames(),
                       open_name: str = DEFAULT_OPEN_NAME,
                       close_name: str = DEFAULT_CLOSE_NAME,
                       subwords: Sequence[str] = DEFAULT_SUBWORDS
                       ) -> EmbeddingTable:
    """Append the two initialized trigger entries to the table in place."""
    vecs = init_trigger_embeddings(table, anchors, subwords)
    table.set(open_name, vecs["e_open"])
    table.set(close_name, vecs["e_close"])
    return table


@dataclass
class TableIssue:
    token: str
    problem: str


def verify_table(table: EmbeddingTable, expected_dim: Optional[int] = None,
                 required: Iterable[str] = ()) -> list[TableIssue]:
    """Report-style check: dimension mismatches, missing required entries,
    non-finite values.  Empty list means clean."""
    issues: list[TableIssue] = []
    if expected_dim is not None and table.dim != expected_dim:
        issues.append(TableIssue(
            "", f"table dim {table.dim} != expected {expected_dim}"))
    for name in required:
        if name not in table:
            issues.append(TableIssue(name, "missing required entry"))
    for name, vec in table.entries.items():
        if vec.shape != (table.dim,):
            issues.append(TableIssue(
                name, f"dim {vec.shape[0]} != table dim {table.dim}"))
        elif not np.all(np.isfinite(vec)):
            issues.append(TableIssue(name, "non-finite values"))
    return issues


def read_table(fp: TextIO) -> EmbeddingTable:
    """Read the textual table format: a "dim N" header, then one
    token-name TAB floats line per entry."""
    header = fp.readline().strip()
    if not header.startswith("dim "):
        raise ValueError(f"bad header {header!r}; expected 'dim N'")
    dim = int(header.split()[1])
    table = EmbeddingTable(dim=dim)
    for lineno, line in enumerate(fp, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            name, rest = line.split("\t", 1)
        except ValueError:
            raise ValueError(f"line {lineno}: missing TAB separator")
        table.set(name, [float(x) for x in rest.split()])
    return table


def write_table(table: EmbeddingTable, fp: TextIO) -> None:
    fp.write(f"dim {table.dim}\n")
    for name, vec in table.entries.items():
        fp.write(name + "\t" + " ".join(repr(float(x)) for x in vec) + "\n")
