"""Cohort file parsing, cleaning, imputation, merging, persistence."""

import numpy as np
import pytest

from daept.data import (
    ExpressionTable,
    drop_constant_features,
    impute_column_mean,
    intersect_and_merge,
    load_dataset,
    parse_table,
    relabel,
    save_dataset,
    write_table,
)
from daept.errors import ConfigError, DataError

# A slice of a real thyroid expression cohort: gene symbols suffixed with
# entrez ids, TCGA sample barcodes, z-scored expression, NA for missing.
COHORT_SLICE = """\
sampleId\tUBE2Q2P2_100134869\tHMGB1P1_10357\tLOC155060_155060\tZZZ3_26009\tTPTEP1_387590\tAKR1C6P_389932
TCGA-4C-A93U-01\t-1.6687\tNA\tNA\t-0.9478\t-1.3739\tNA
TCGA-BJ-A0YZ-01\t-1.1437\tNA\tNA\t-0.4673\t-0.0166\tNA
TCGA-BJ-A0Z0-01\t-0.9194\tNA\tNA\t2.1918\t-1.5856\tNA
TCGA-BJ-A0Z2-01\t1.1382\tNA\tNA\t1.5512\t-1.5897\tNA
TCGA-BJ-A0Z3-01\t-0.3333\tNA\tNA\t0.4926\t-1.3379\tNA
"""


@pytest.fixture
def slice_path(tmp_path):
    p = tmp_path / "thyroid.tsv"
    p.write_text(COHORT_SLICE)
    return p


def make_table(name, genes, values, mask=None):
    values = np.asarray(values, dtype=np.float64)
    if mask is None:
        mask = np.isnan(values)
    return ExpressionTable(
        cohort_name=name,
        sample_ids=tuple(f"{name}-{i}" for i in range(values.shape[0])),
        gene_names=tuple(genes),
        values=values,
        mask=np.asarray(mask, dtype=bool),
    )


# --------------------------------------------------------------- parsing


def test_parse_realistic_cohort_slice(slice_path):
    t = parse_table(slice_path)
    assert t.cohort_name == "thyroid"
    assert t.n_samples == 5 and t.n_genes == 6
    assert t.sample_ids[0] == "TCGA-4C-A93U-01"
    assert t.gene_names[0] == "UBE2Q2P2_100134869"
    assert t.gene_names[-1] == "AKR1C6P_389932"
    assert t.values[0, 0] == -1.6687
    assert t.values[2, 3] == 2.1918
    assert t.values[4, 4] == -1.3379
    # three genes are missing on every sample of this slice
    assert t.mask[:, [1, 2, 5]].all()
    assert not t.mask[:, [0, 3, 4]].any()
    assert np.isnan(t.values[0, 1])


def test_cleaning_the_slice_keeps_only_observed_varying_genes(slice_path):
    t = impute_column_mean(drop_constant_features(parse_table(slice_path)))
    assert t.gene_names == ("UBE2Q2P2_100134869", "ZZZ3_26009", "TPTEP1_387590")
    assert not t.mask.any()
    assert np.isfinite(t.values).all()


def test_comma_files_are_autodetected(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("sampleId,G1,G2\ns1,1.5,2.5\ns2,3.5,NA\n")
    t = parse_table(p)
    assert t.gene_names == ("G1", "G2")
    assert t.values[0, 1] == 2.5
    assert t.mask[1, 1]


def test_all_na_tokens_are_masked(tmp_path):
    p = tmp_path / "na.tsv"
    p.write_text("sampleId\tG1\tG2\tG3\ns1\tNA\tNaN\t\ns2\t1\t2\t3\n")
    t = parse_table(p)
    assert t.mask[0].all()
    assert not t.mask[1].any()


def test_bad_cell_reports_one_based_line_and_column(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("sampleId\tG1\tG2\tG3\ns1\t1\t2\t3\ns2\t4\t5\toops\n")
    with pytest.raises(DataError) as exc:
        parse_table(p)
    assert "line 3" in str(exc.value)
    assert "column 4" in str(exc.value)
    assert "oops" in str(exc.value)


def test_ragged_row_and_structural_problems_are_data_errors(tmp_path):
    ragged = tmp_path / "r.tsv"
    ragged.write_text("sampleId\tG1\tG2\ns1\t1\n")
    with pytest.raises(DataError):
        parse_table(ragged)
    empty = tmp_path / "e.tsv"
    empty.write_text("")
    with pytest.raises(DataError):
        parse_table(empty)
    headeronly = tmp_path / "h.tsv"
    headeronly.write_text("sampleId\tG1\n")
    with pytest.raises(DataError):
        parse_table(headeronly)
    dupgene = tmp_path / "dg.tsv"
    dupgene.write_text("sampleId\tG1\tG1\ns1\t1\t2\n")
    with pytest.raises(DataError):
        parse_table(dupgene)
    dupsample = tmp_path / "ds.tsv"
    dupsample.write_text("sampleId\tG1\ns1\t1\ns1\t2\n")
    with pytest.raises(DataError):
        parse_table(dupsample)
    nonfinite = tmp_path / "nf.tsv"
    nonfinite.write_text("sampleId\tG1\ns1\tinf\n")
    with pytest.raises(DataError):
        parse_table(nonfinite)


def test_write_parse_round_trip_is_exact(tmp_path, slice_path):
    t = parse_table(slice_path)
    out = tmp_path / "again.tsv"
    write_table(t, out)
    back = parse_table(out, cohort_name=t.cohort_name)
    assert back.gene_names == t.gene_names
    assert back.sample_ids == t.sample_ids
    assert np.array_equal(back.mask, t.mask)
    assert np.array_equal(back.values[~back.mask], t.values[~t.mask])
    # one third in binary is not finite-decimal: still exact through 17g
    t2 = make_table("x", ("G1",), [[1 / 3], [2 / 7]])
    write_table(t2, out)
    assert np.array_equal(parse_table(out).values, t2.values)


def test_write_with_fixed_decimals(tmp_path):
    t = make_table("x", ("G1", "G2"), [[1.23456789, np.nan]])
    out = tmp_path / "f.tsv"
    write_table(t, out, decimals=4)
    assert out.read_text() == "sampleId\tG1\tG2\nx-0\t1.2346\tNA\n"


# -------------------------------------------------------------- cleaning


def test_drop_constant_features_cases():
    t = make_table("c", ("varies", "const", "const_with_na", "all_na"), [
        [1.0, 5.0, 2.0, np.nan],
        [2.0, 5.0, np.nan, np.nan],
        [3.0, 5.0, 2.0, np.nan],
    ])
    kept = drop_constant_features(t)
    assert kept.gene_names == ("varies",)
    assert np.array_equal(kept.values[:, 0], [1.0, 2.0, 3.0])


def test_impute_fills_with_observed_column_mean():
    t = make_table("c", ("G1", "G2"), [
        [1.0, 4.0],
        [np.nan, 6.0],
        [3.0, np.nan],
    ])
    filled = impute_column_mean(t)
    assert filled.values[1, 0] == 2.0  # mean of 1 and 3
    assert filled.values[2, 1] == 5.0  # mean of 4 and 6
    assert not filled.mask.any()
    # observed entries are untouched
    assert filled.values[0, 0] == 1.0 and filled.values[1, 1] == 6.0
    # the input table is not mutated
    assert np.isnan(t.values[1, 0])


def test_impute_without_prior_drop_is_an_error_on_all_na_column():
    t = make_table("c", ("G1",), [[np.nan], [np.nan]])
    with pytest.raises(DataError):
        impute_column_mean(t)


def test_impute_is_identity_when_complete():
    t = make_table("c", ("G1",), [[1.0], [2.0]])
    assert impute_column_mean(t) is t


# --------------------------------------------------------------- merging


def three_cohorts():
    a = make_table("alpha", ("A", "B", "C"), [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    b = make_table("beta", ("B", "C", "D"), [[7.0, 8.0, 9.0]])
    c = make_table("gamma", ("B", "C"), [[10.0, 11.0], [12.0, 13.0], [14.0, 15.0]])
    return a, b, c


def test_merge_keeps_shared_genes_in_first_table_order():
    ds = intersect_and_merge(three_cohorts(), positive_class="beta")
    assert ds.gene_names == ("B", "C")
    assert ds.features.shape == (6, 2)
    assert np.array_equal(ds.features, [
        [2.0, 3.0], [5.0, 6.0],     # alpha
        [7.0, 8.0],                 # beta
        [10.0, 11.0], [12.0, 13.0], [14.0, 15.0],  # gamma
    ])
    assert np.array_equal(ds.labels, [0, 0, 1, 0, 0, 0])
    assert ds.cohort_names == ("alpha", "beta", "gamma")
    assert ds.positive_class == "beta"


def test_merge_order_follows_first_cohort_not_alphabet():
    a = make_table("a", ("C", "B", "A"), [[1.0, 2.0, 3.0]])
    b = make_table("b", ("A", "B", "C"), [[4.0, 5.0, 6.0]])
    ds = intersect_and_merge([a, b], positive_class="a")
    assert ds.gene_names == ("C", "B", "A")
    assert np.array_equal(ds.features, [[1.0, 2.0, 3.0], [6.0, 5.0, 4.0]])


def test_merge_validation_errors():
    a, b, c = three_cohorts()
    with pytest.raises(ConfigError):
        intersect_and_merge([a], positive_class="alpha")
    with pytest.raises(ConfigError):
        intersect_and_merge([a, b], positive_class="delta")
    with pytest.raises(DataError):
        intersect_and_merge([a, make_table("d", ("X", "Y"), [[1.0, 2.0]])],
                            positive_class="alpha")
    holed = make_table("holed", ("B", "C"), [[np.nan, 1.0]])
    with pytest.raises(DataError):
        intersect_and_merge([a, holed], positive_class="alpha")
    with pytest.raises(DataError):
        intersect_and_merge([a, make_table("alpha", ("B", "C"), [[0.0, 1.0]])],
                            positive_class="alpha")


def test_relabel_switches_the_positive_cohort():
    ds = intersect_and_merge(three_cohorts(), positive_class="beta")
    flipped = relabel(ds, "gamma")
    assert np.array_equal(flipped.labels, [0, 0, 0, 1, 1, 1])
    assert flipped.positive_class == "gamma"
    assert np.array_equal(flipped.features, ds.features)
    with pytest.raises(ConfigError):
        relabel(ds, "delta")


def test_pipeline_conserves_observed_values():
    # the whole clean-impute-merge chain may never alter an observed entry
    rng = np.random.default_rng(1234)
    tables = []
    genes = tuple(f"G{j}" for j in range(12))
    for name in ("one", "two"):
        values = rng.normal(size=(9, 12))
        holes = rng.random((9, 12)) < 0.2
        holes[:, 0] = False
        values[holes] = np.nan
        values[:, 3] = 7.0  # constant, must be dropped
        tables.append(make_table(name, genes, values))
    cleaned = [impute_column_mean(drop_constant_features(t)) for t in tables]
    ds = intersect_and_merge(cleaned, positive_class="one")
    row = 0
    for t in tables:
        col_of = {g: j for j, g in enumerate(t.gene_names)}
        for i in range(t.n_samples):
            for g_out, g in enumerate(ds.gene_names):
                j = col_of[g]
                if not t.mask[i, j]:
                    assert ds.features[row + i, g_out] == t.values[i, j]
        row += t.n_samples


# ------------------------------------------------------------ persistence


def test_dataset_save_load_round_trip(tmp_path):
    ds = intersect_and_merge(three_cohorts(), positive_class="gamma")
    fpath, lpath = tmp_path / "features.tsv", tmp_path / "labels.csv"
    save_dataset(ds, fpath, lpath)
    back = load_dataset(fpath, lpath)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert back.gene_names == ds.gene_names
    assert back.sample_ids == ds.sample_ids
    assert back.cohorts == ds.cohorts
    assert back.positive_class == "gamma"


def test_load_dataset_rejects_inconsistent_sidecar(tmp_path):
    ds = intersect_and_merge(three_cohorts(), positive_class="beta")
    fpath, lpath = tmp_path / "features.tsv", tmp_path / "labels.csv"
    save_dataset(ds, fpath, lpath)

    lines = lpath.read_text().splitlines()
    # positives spanning two cohorts
    bad = [lines[0]] + [l.replace(",0", ",1", 1) for l in lines[1:]]
    lpath.write_text("\n".join(bad) + "\n")
    with pytest.raises(DataError):
        load_dataset(fpath, lpath)
    # sample set mismatch
    lpath.write_text("\n".join([lines[0]] + lines[2:]) + "\n")
    with pytest.raises(DataError):
        load_dataset(fpath, lpath)
    # label outside 0/1
    lpath.write_text("\n".join([lines[0]] + [lines[1].replace(",0", ",2")] + lines[2:]) + "\n")
    with pytest.raises(DataError):
        load_dataset(fpath, lpath)
