"""Synthetic cohort generator shaped like real expression exports.

Each cohort draws samples as a class mean plus Gaussian noise, then the
file-level warts are layered on: all-constant columns, NA-masked cells, and
a disjoint per-cohort subset of omitted genes so the merge step's
intersection logic is exercised.  Everything is a pure function of the
spec's seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ExpressionTable, write_table
from .errors import ConfigError
from .rng import RngStream
from .validation import check_fraction, check_positive_int

DEFAULT_COHORTS = ("thyroid", "skin", "stomach")


@dataclass(frozen=True)
class CohortSpec:
    name: str
    n_samples: int
    mean: np.ndarray  # class mean per informative gene


@dataclass(frozen=True)
class SynthSpec:
    cohorts: tuple
    n_features: int
    noise: float
    missing_rate: float
    constant_columns: int
    omit_per_cohort: int
    seed: int

    def __post_init__(self):
        check_positive_int(self.n_features, "n_features")
        check_fraction(self.missing_rate, "missing_rate")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.constant_columns < 0 or self.omit_per_cohort < 0:
            raise ConfigError("constant_columns and omit_per_cohort must be >= 0")
        if self.omit_per_cohort * len(self.cohorts) >= self.n_features:
            raise ConfigError("per-cohort omissions leave an empty gene intersection")
        for c in self.cohorts:
            if len(c.mean) != self.n_features:
                raise ConfigError(
                    f"cohort {c.name!r} mean has {len(c.mean)} entries, "
                    f"expected {self.n_features}")
            if c.n_samples < 5:
                raise ConfigError(
                    f"cohort {c.name!r} needs >= 5 samples for 5-fold CV, "
                    f"got {c.n_samples}")


def make_spec(seed: int, cohort_names=DEFAULT_COHORTS, samples_per_cohort: int = 200,
              n_features: int = 50, separation: float = 3.0, noise: float = 1.0,
              missing_rate: float = 0.02, constant_columns: int = 2,
              omit_per_cohort: int = 2) -> SynthSpec:
    """Default desk-scale spec; class means are drawn once from the seed."""
    if len(set(cohort_names)) != len(cohort_names):
        raise ConfigError(f"cohort names must be unique, got {list(cohort_names)}")
    means = RngStream(seed).derive("means").normal(
        len(cohort_names), n_features, 0.0, separation)
    cohorts = tuple(
        CohortSpec(name=name, n_samples=int(samples_per_cohort), mean=means[i])
        for i, name in enumerate(cohort_names))
    return SynthSpec(cohorts=cohorts, n_features=int(n_features), noise=float(noise),
                     missing_rate=float(missing_rate),
                     constant_columns=int(constant_columns),
                     omit_per_cohort=int(omit_per_cohort), seed=int(seed))


def gene_names(spec: SynthSpec) -> tuple:
    """Informative genes first, injected constant genes appended."""
    names = [f"SYN{j + 1:04d}_{1000 + j + 1}" for j in range(spec.n_features)]
    names += [f"FLAT{j + 1:04d}_{9000 + j + 1}" for j in range(spec.constant_columns)]
    return tuple(names)


def generate(spec: SynthSpec) -> list[ExpressionTable]:
    """One table per cohort, deterministic in the spec's seed."""
    master = RngStream(spec.seed)
    all_genes = gene_names(spec)

    # Disjoint blocks of a shared shuffle decide each cohort's omitted genes.
    omit_order = master.derive("omit").permutation(spec.n_features)
    omitted = {}
    for i, cohort in enumerate(spec.cohorts):
        start = i * spec.omit_per_cohort
        omitted[cohort.name] = set(omit_order[start:start + spec.omit_per_cohort])

    tables = []
    for cohort in spec.cohorts:
        noise_rng = master.derive("cohort", cohort.name)
        mask_rng = master.derive("mask", cohort.name)
        n = cohort.n_samples
        values = cohort.mean + noise_rng.normal(n, spec.n_features, 0.0, spec.noise)
        if spec.constant_columns:
            flat = np.tile(1.5 + 0.5 * np.arange(spec.constant_columns), (n, 1))
            values = np.hstack([values, flat])
        total = values.shape[1]
        if spec.missing_rate > 0:
            mask = mask_rng.bernoulli_mask(n, total, spec.missing_rate).astype(bool)
        else:
            mask = np.zeros((n, total), dtype=bool)
        values = np.round(values, 4)
        values[mask] = np.nan

        keep = [j for j in range(total) if j not in omitted[cohort.name]]
        tables.append(ExpressionTable(
            cohort_name=cohort.name,
            sample_ids=tuple(f"{cohort.name.upper()}-{i + 1:04d}" for i in range(n)),
            gene_names=tuple(all_genes[j] for j in keep),
            values=np.ascontiguousarray(values[:, keep]),
            mask=np.ascontiguousarray(mask[:, keep]),
        ))
    return tables


def generate_files(spec: SynthSpec, outdir, delimiter: str = "\t") -> list[Path]:
    """Write one cohort file per table; values carry 4 decimals like real
    exports."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for table in generate(spec):
        path = outdir / f"{table.cohort_name}.tsv"
        write_table(table, path, delimiter=delimiter, decimals=4)
        paths.append(path)
    return paths
