from fractions import Fraction

import pytest

from ompbleu.classify import (
    ABSENT_IN_GT,
    ClauseVocabulary,
    ConfusionCounts,
    aggregate,
    classification_report,
    clause_confusion,
    directive_entry,
    presence_set,
    truncate2,
)
from ompbleu.metrics import analyze

# printed classification rows: (tp, fp, fn, tn, precision, recall, f1)
TABLE_ROWS = [
    ("ompilot", 39, 13, 29, 1323, 75.00, 57.35, 65.00),
    ("o1-mini", 23, 39, 45, 1297, 37.09, 33.82, 35.38),
    ("o3-mini", 29, 42, 39, 1294, 40.84, 42.64, 41.72),
    ("qwen", 22, 55, 46, 1281, 28.57, 32.35, 30.34),
    ("deepseek", 5, 13, 63, 1323, 27.77, 7.35, 11.62),
    ("hpc-coder", 18, 21, 50, 1315, 46.15, 26.47, 33.64),
    ("starcoder2", 26, 23, 42, 1313, 53.06, 38.23, 44.44),
    ("codestral", 26, 52, 42, 1284, 33.33, 38.23, 35.61),
    ("ompgpt", 9, 26, 59, 1310, 25.71, 13.23, 17.47),
    ("icc", 3, 9, 65, 1327, 25.00, 4.41, 7.50),
    ("cetus", 9, 3, 59, 1333, 75.00, 13.23, 22.50),
]


def rational_oracle(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Exact-arithmetic precision/recall/F1, truncated to two decimals."""
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else Fraction(0)
    )

    def trunc(percent: Fraction) -> float:
        return float(Fraction(int(percent * 100), 100))

    return trunc(precision * 100), trunc(recall * 100), trunc(f1 * 100)


@pytest.mark.parametrize("row", TABLE_ROWS, ids=[r[0] for r in TABLE_ROWS])
def test_printed_rows_match_report_and_oracle(row):
    name, tp, fp, fn, tn, p, r, f = row
    report = classification_report(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
    assert (report.precision, report.recall, report.f1) == (p, r, f)
    assert rational_oracle(tp, fp, fn) == (p, r, f)


def test_row_sum_invariant_fifty_four():
    # 26 cases at 54 vocabulary entries each
    for _, tp, fp, fn, tn, *_ in TABLE_ROWS:
        assert tp + fp + fn + tn == 54 * 26 == 1404
    assert ClauseVocabulary.default().size == 54


def test_zero_everything_report():
    report = classification_report(ConfusionCounts())
    assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)
    assert report.diagnostics


def test_precision_zero_delivery_not_nan():
    report = classification_report(ConfusionCounts(tp=0, fp=0, fn=4, tn=50))
    assert report.precision == 0.0
    assert report.f1 == 0.0
    assert any("precision" in d for d in report.diagnostics)


def test_truncation_behavior():
    assert truncate2(13.2352941) == 13.23
    assert truncate2(37.0967741) == 37.09
    assert truncate2(75.0) == 75.00


# -- confusion extraction ---------------------------------------------------


def _dirs(code: str):
    return list(analyze(code).directives)


def test_presence_partition_counts():
    vocab = ClauseVocabulary.default()
    gt = _dirs("#pragma omp parallel for reduction(+:s)\nfor (int i=0;i<3;i++) ;\n")
    gen = _dirs(
        "#pragma omp parallel for reduction(+:s) private(i)\nfor (int i=0;i<3;i++) ;\n"
    )
    counts = clause_confusion(gt, gen, vocab)
    total = ConfusionCounts()
    for kind, c in counts.items():
        assert c.total == 1
        total = total + c
    # omp parallel for + reduction are TP; private is FP; the rest TN
    assert total.tp == 2
    assert total.fp == 1
    assert total.fn == 0
    assert total.tn == vocab.size - 3
    assert total.total == vocab.size


def test_identical_sides_have_no_errors():
    gt = _dirs("#pragma omp parallel for collapse(2) reduction(+:s)\nfor(int i=0;i<3;i++){for(int j=0;j<3;j++) s+=1;}\n")
    counts = clause_confusion(gt, gt)
    agg = ConfusionCounts()
    for c in counts.values():
        agg = agg + c
    assert agg.fp == agg.fn == 0


def test_case19_shape_missing_critical():
    # reference uses parallel + for + critical as separate constructs; the
    # candidate merges them and invents a reduction
    gt = _dirs(
        "#pragma omp parallel\n{\n#pragma omp for\nfor (int i=0;i<3;i++) {\n"
        "#pragma omp critical\n{ s += i; }\n}\n}\n"
    )
    gen = _dirs(
        "#pragma omp parallel for reduction(+:s)\nfor (int i=0;i<3;i++) s += i;\n"
    )
    assert presence_set(gt) == {"parallel", "omp for", "critical"}
    assert presence_set(gen) == {"omp parallel for", "reduction"}
    counts = clause_confusion(gt, gen)
    assert counts["critical"].fn == 1
    assert counts["parallel"].fn == 1
    assert counts["omp for"].fn == 1
    assert counts["omp parallel for"].fp == 1
    assert counts["reduction"].fp == 1


def test_directive_entry_naming():
    d = _dirs("#pragma omp parallel for\nfor (int i=0;i<3;i++) ;\n")[0]
    assert directive_entry(d) == "omp parallel for"
    d = _dirs("#pragma omp for\nfor (int i=0;i<3;i++) ;\n")[0]
    assert directive_entry(d) == "omp for"
    d = _dirs("#pragma omp parallel\n{ }\n")[0]
    assert directive_entry(d) == "parallel"
    d = _dirs("#pragma omp atomic write\nx = 1;\n")[0]
    assert directive_entry(d) == "atomic"
    assert "write" in presence_set([d])


def test_swapping_sides_swaps_fp_fn():
    gt = _dirs("#pragma omp parallel for private(i)\nfor (i=0;i<3;i++) ;\n")
    gen = _dirs("#pragma omp parallel for collapse(1)\nfor (int i=0;i<3;i++) ;\n")
    fwd = clause_confusion(gt, gen)
    rev = clause_confusion(gen, gt)
    for kind in fwd:
        assert fwd[kind].tp == rev[kind].tp
        assert fwd[kind].tn == rev[kind].tn
        assert fwd[kind].fp == rev[kind].fn
        assert fwd[kind].fn == rev[kind].fp


def test_out_of_vocab_goes_to_unknown_bucket():
    vocab = ClauseVocabulary(kinds=("parallel", "private"))
    gt = _dirs("#pragma omp parallel shared(x)\n{ }\n")
    gen = _dirs("#pragma omp parallel\n{ }\n")
    diags = []
    counts = clause_confusion(gt, gen, vocab, diags)
    assert counts["unknown"].fn == 1  # the shared clause
    assert counts["unknown"].tn == 0  # never accrues true negatives
    assert diags
    in_vocab_total = sum(c.total for k, c in counts.items() if k != "unknown")
    assert in_vocab_total == vocab.size


def test_aggregate_is_order_insensitive():
    gt = _dirs("#pragma omp parallel for private(i)\nfor (i=0;i<3;i++) ;\n")
    gen = _dirs("#pragma omp parallel for\nfor (int i=0;i<3;i++) ;\n")
    a = clause_confusion(gt, gen)
    b = clause_confusion(gen, gt)
    one = aggregate([a, b])
    other = aggregate([b, a])
    assert {k: vars(v) for k, v in one.items()} == {k: vars(v) for k, v in other.items()}


def test_per_clause_f1_absent_marker():
    gt = _dirs("#pragma omp parallel for reduction(+:s)\nfor (int i=0;i<3;i++) ;\n")
    gen = _dirs("#pragma omp parallel for private(i)\nfor (int i=0;i<3;i++) ;\n")
    report = classification_report(clause_confusion(gt, gen))
    assert report.per_clause_f1["reduction"] == 0.0  # present in GT, missed
    assert report.per_clause_f1["schedule"] == ABSENT_IN_GT
    assert report.per_clause_f1["omp parallel for"] == 1.0


def test_vocabulary_file_roundtrip(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("# comment\nparallel\nprivate\n\nreduction\n")
    vocab = ClauseVocabulary.load(path)
    assert vocab.kinds == ("parallel", "private", "reduction")
    assert vocab.size == 3


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValueError):
        ClauseVocabulary(kinds=("parallel", "parallel"))
