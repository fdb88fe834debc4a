"""Cohort expression tables: parse, clean, impute, intersect, merge, label.

Input files are delimited text (tab or comma, autodetected from the header)
with one header row naming the genes, one row per sample, and the sample id
in the first column.  Missing values are written with an NA token.  The
processing order is fixed: per cohort drop constant genes, impute column
means, then across cohorts intersect gene sets and merge with one-vs-rest
labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .validation import check_matrix

NA_TOKENS = ("NA", "NaN", "")


@dataclass(frozen=True)
class ExpressionTable:
    """One cohort: samples x genes with a missing-value mask.

    `values` holds NaN wherever `mask` is True; observed entries are finite.
    """

    cohort_name: str
    sample_ids: tuple
    gene_names: tuple
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        n, g = len(self.sample_ids), len(self.gene_names)
        if self.values.shape != (n, g) or self.mask.shape != (n, g):
            raise ConfigError(
                f"table shapes disagree: {n} ids, {g} genes, values {self.values.shape}")

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def n_genes(self) -> int:
        return len(self.gene_names)


@dataclass(frozen=True)
class LabeledDataset:
    """Merged cohorts ready for training: complete features plus 0/1 labels."""

    features: np.ndarray
    labels: np.ndarray
    gene_names: tuple
    sample_ids: tuple
    cohorts: tuple
    positive_class: str

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def cohort_names(self) -> tuple:
        seen = []
        for c in self.cohorts:
            if c not in seen:
                seen.append(c)
        return tuple(seen)


def _detect_delimiter(header: str) -> str:
    if "\t" in header:
        return "\t"
    if "," in header:
        return ","
    raise DataError("cannot detect delimiter: header contains neither tab nor comma")


def parse_table(path, cohort_name: str | None = None, delimiter: str | None = None,
                na_tokens=NA_TOKENS) -> ExpressionTable:
    """Read one cohort file; NA tokens become masked slots.

    Errors carry 1-based line and column coordinates.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: empty file")
    if delimiter is None:
        delimiter = _detect_delimiter(lines[0])
    header = lines[0].split(delimiter)
    gene_names = tuple(h.strip() for h in header[1:])
    if not gene_names:
        raise DataError(f"{path}: header names no genes")
    _check_unique(gene_names, f"{path}: duplicate gene name")

    sample_ids = []
    rows = []
    mask_rows = []
    width = len(header)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(delimiter)
        if len(cells) != width:
            raise DataError(
                f"{path}: line {lineno} has {len(cells)} fields, header has {width}")
        sample_ids.append(cells[0].strip())
        values = np.empty(width - 1)
        missing = np.zeros(width - 1, dtype=bool)
        for j, cell in enumerate(cells[1:], start=2):
            token = cell.strip()
            if token in na_tokens:
                values[j - 2] = np.nan
                missing[j - 2] = True
                continue
            try:
                v = float(token)
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}, column {j}: "
                    f"not a number or NA token: {token!r}") from None
            if not np.isfinite(v):
                raise DataError(
                    f"{path}: line {lineno}, column {j}: non-finite value {token!r}")
            values[j - 2] = v
        rows.append(values)
        mask_rows.append(missing)
    if not rows:
        raise DataError(f"{path}: no data rows")
    _check_unique(sample_ids, f"{path}: duplicate sample id")
    return ExpressionTable(
        cohort_name=cohort_name if cohort_name is not None else path.stem,
        sample_ids=tuple(sample_ids),
        gene_names=gene_names,
        values=np.vstack(rows),
        mask=np.vstack(mask_rows),
    )


def write_table(table: ExpressionTable, path, delimiter: str = "\t",
                decimals: int | None = None):
    """Write a cohort file; `decimals` fixes the precision (default is the
    17-significant-digit form that round-trips float64 exactly)."""
    def fmt(v):
        return f"{v:.{decimals}f}" if decimals is not None else format(v, ".17g")

    lines = [delimiter.join(("sampleId",) + table.gene_names)]
    for i, sid in enumerate(table.sample_ids):
        cells = [sid]
        for j in range(table.n_genes):
            cells.append("NA" if table.mask[i, j] else fmt(table.values[i, j]))
        lines.append(delimiter.join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def drop_constant_features(table: ExpressionTable) -> ExpressionTable:
    """Remove genes whose observed values are all equal (or all missing)."""
    keep = []
    for j in range(table.n_genes):
        observed = table.values[~table.mask[:, j], j]
        if observed.size == 0:
            continue
        if np.all(observed == observed[0]):
            continue
        keep.append(j)
    keep = np.array(keep, dtype=np.int64)
    return replace(
        table,
        gene_names=tuple(table.gene_names[j] for j in keep),
        values=np.ascontiguousarray(table.values[:, keep]),
        mask=np.ascontiguousarray(table.mask[:, keep]),
    )


def impute_column_mean(table: ExpressionTable) -> ExpressionTable:
    """Fill each masked slot with the mean of its column's observed values."""
    if not table.mask.any():
        return table
    values = np.array(table.values)
    for j in range(table.n_genes):
        col_missing = table.mask[:, j]
        if not col_missing.any():
            continue
        observed = values[~col_missing, j]
        if observed.size == 0:
            raise DataError(
                f"gene {table.gene_names[j]!r} has no observed values; "
                "drop_constant_features must run first")
        values[col_missing, j] = observed.mean()
    return replace(table, values=values, mask=np.zeros_like(table.mask))


def intersect_and_merge(tables, positive_class: str) -> LabeledDataset:
    """Merge cleaned cohorts on their shared genes with one-vs-rest labels.

    The merged gene order follows the first table's order restricted to the
    intersection; rows keep the given table order.
    """
    tables = list(tables)
    if len(tables) < 2:
        raise ConfigError("merging requires at least two cohorts")
    names = [t.cohort_name for t in tables]
    _check_unique(names, "duplicate cohort name")
    if positive_class not in names:
        raise ConfigError(f"positive class {positive_class!r} is not a cohort "
                          f"(cohorts: {names})")
    for t in tables:
        if t.mask.any():
            raise DataError(f"cohort {t.cohort_name!r} still has missing values; "
                            "impute before merging")
    shared = set(tables[0].gene_names)
    for t in tables[1:]:
        shared &= set(t.gene_names)
    genes = tuple(g for g in tables[0].gene_names if g in shared)
    if not genes:
        raise DataError("cohorts share no genes; intersection is empty")

    blocks = []
    for t in tables:
        index = {g: j for j, g in enumerate(t.gene_names)}
        cols = np.array([index[g] for g in genes], dtype=np.int64)
        blocks.append(t.values[:, cols])
    features = check_matrix(np.vstack(blocks), "merged features")
    cohorts = tuple(t.cohort_name for t in tables for _ in t.sample_ids)
    sample_ids = tuple(sid for t in tables for sid in t.sample_ids)
    labels = np.array([1 if c == positive_class else 0 for c in cohorts],
                      dtype=np.int64)
    return LabeledDataset(features=features, labels=labels, gene_names=genes,
                          sample_ids=sample_ids, cohorts=cohorts,
                          positive_class=positive_class)


def relabel(ds: LabeledDataset, positive_class: str) -> LabeledDataset:
    """Same features, labels recomputed against another positive class."""
    if positive_class not in ds.cohort_names:
        raise ConfigError(f"positive class {positive_class!r} is not a cohort "
                          f"(cohorts: {list(ds.cohort_names)})")
    labels = np.array([1 if c == positive_class else 0 for c in ds.cohorts],
                      dtype=np.int64)
    return replace(ds, labels=labels, positive_class=positive_class)


def save_dataset(ds: LabeledDataset, features_path, labels_path, delimiter: str = "\t"):
    """Persist features in cohort-file layout plus a label sidecar CSV."""
    table = ExpressionTable(
        cohort_name="merged",
        sample_ids=ds.sample_ids,
        gene_names=ds.gene_names,
        values=ds.features,
        mask=np.zeros(ds.features.shape, dtype=bool),
    )
    write_table(table, features_path, delimiter=delimiter)
    with open(labels_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sampleId", "cohort", "label"])
        for sid, cohort, label in zip(ds.sample_ids, ds.cohorts, ds.labels):
            writer.writerow([sid, cohort, int(label)])


def load_dataset(features_path, labels_path, delimiter: str | None = None) -> LabeledDataset:
    table = parse_table(features_path, cohort_name="merged", delimiter=delimiter)
    if table.mask.any():
        raise DataError(f"{features_path}: merged features may not contain NA")
    ids, cohorts, labels = [], [], []
    with open(labels_path, newline="") as fh:
        for row in csv.DictReader(fh):
            ids.append(row["sampleId"])
            cohorts.append(row["cohort"])
            labels.append(int(row["label"]))
    if tuple(ids) != table.sample_ids:
        raise DataError(f"{labels_path} does not list the same samples as "
                        f"{features_path} (order included)")
    if any(v not in (0, 1) for v in labels):
        raise DataError(f"{labels_path}: labels must be 0 or 1")
    positives = {c for c, v in zip(cohorts, labels) if v == 1}
    if len(positives) > 1:
        raise DataError(f"{labels_path}: label 1 spans several cohorts {sorted(positives)}")
    positive_class = positives.pop() if positives else ""
    return LabeledDataset(
        features=table.values,
        labels=np.array(labels, dtype=np.int64),
        gene_names=table.gene_names,
        sample_ids=table.sample_ids,
        cohorts=tuple(cohorts),
        positive_class=positive_class,
    )


def _check_unique(items, message: str):
    seen = set()
    for item in items:
        if item in seen:
            raise DataError(f"{message}: {item!r}")
        seen.add(item)
