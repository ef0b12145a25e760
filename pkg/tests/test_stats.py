import io
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as scipy_stats

from gsnprobe.errors import DataFormatError, UsageError
from gsnprobe.stats import (FrequencyTable, ParsedSentence, dependency_lengths,
                            ingest_conllu, label_frequency_comparison,
                            length_cdf, midranks, production_ratio,
                            spearman_rank_correlation, zipf_table)

from conftest import DATA_DIR


class TestFrequencyTable:
    def test_counts_and_ranks(self):
        t = FrequencyTable({"x": 30, "y": 20, "z": 10})
        assert t.total == 60
        assert t.ranks() == {"x": 1.0, "y": 2.0, "z": 3.0}

    def test_midrank_ties(self):
        t = FrequencyTable({"a": 5, "b": 5, "c": 1})
        assert t.ranks() == {"a": 1.5, "b": 1.5, "c": 3.0}

    def test_zero_count_rejected(self):
        with pytest.raises(UsageError):
            FrequencyTable({"a": 0})


class TestSpearman:
    def test_identical_tables(self):
        t = FrequencyTable({"x": 30, "y": 20, "z": 10})
        assert spearman_rank_correlation(t, t) == pytest.approx(1.0, abs=1e-12)

    def test_closed_form_single_swap(self):
        # ranks (1,2,3) vs (2,1,3): rho = 1 - 6*2/(3*8) = 0.5
        a = FrequencyTable({"x": 30, "y": 20, "z": 10})
        b = FrequencyTable({"x": 20, "y": 30, "z": 10})
        assert spearman_rank_correlation(a, b) == pytest.approx(0.5, abs=1e-12)

    def test_exact_reversal(self):
        a = FrequencyTable({"x": 30, "y": 20, "z": 10})
        b = FrequencyTable({"x": 10, "y": 20, "z": 30})
        assert spearman_rank_correlation(a, b) == pytest.approx(-1.0, abs=1e-12)

    def test_undefined_below_three_shared(self):
        a = FrequencyTable({"x": 3, "y": 2})
        b = FrequencyTable({"x": 2, "q": 5})
        assert spearman_rank_correlation(a, b) is None

    def test_min_count_restricts_both_tables(self):
        a = FrequencyTable({"x": 30, "y": 20, "z": 10, "w": 1})
        b = FrequencyTable({"x": 10, "y": 20, "z": 30, "w": 100})
        assert spearman_rank_correlation(a, b, min_count=2) == pytest.approx(-1.0)

    def test_matches_scipy_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            labels = [f"l{i}" for i in range(12)]
            a = FrequencyTable({l: int(c) for l, c in zip(labels, rng.integers(1, 6, 12))})
            b = FrequencyTable({l: int(c) for l, c in zip(labels, rng.integers(1, 6, 12))})
            ours = spearman_rank_correlation(a, b)
            ca = [a.counts[l] for l in sorted(labels)]
            cb = [b.counts[l] for l in sorted(labels)]
            reference = scipy_stats.spearmanr(ca, cb).statistic
            if ours is None:
                assert math.isnan(reference)
            else:
                # scipy ranks ascending, ours descend; rho is invariant
                assert ours == pytest.approx(reference, abs=1e-12)

    @given(st.integers(2, 5))
    @settings(max_examples=20, deadline=None)
    def test_invariant_under_monotone_transform(self, power):
        a = FrequencyTable({"x": 40, "y": 17, "z": 9, "w": 3})
        b = FrequencyTable({"x": 5, "y": 11, "z": 2, "w": 30})
        transformed = FrequencyTable({l: c ** power for l, c in a.counts.items()})
        assert spearman_rank_correlation(a, b) == pytest.approx(
            spearman_rank_correlation(transformed, b), abs=1e-12)


class TestZipfTable:
    def test_disjoint_tables_warn_empty(self):
        a = FrequencyTable({"x": 1})
        b = FrequencyTable({"y": 1})
        with pytest.warns(UserWarning):
            assert zipf_table(a, b) == []

    def test_identical_tables_equal_ranks(self):
        t = FrequencyTable({"x": 30, "y": 20, "z": 10})
        for row in zipf_table(t, t):
            assert row.rank_a == row.rank_b
            assert row.freq_a == row.freq_b

    def test_ranks_recomputed_on_shared_subset(self):
        a = FrequencyTable({"x": 30, "y": 20, "only_a": 100})
        b = FrequencyTable({"x": 5, "y": 9})
        rows = {r.label: r for r in zipf_table(a, b)}
        assert set(rows) == {"x", "y"}
        assert rows["x"].rank_a == 1.0 and rows["y"].rank_a == 2.0
        # full-table relative frequency, not subset-renormalized
        assert rows["x"].freq_a == pytest.approx(30 / 150)


class TestProductionRatio:
    def test_identical_tables_all_zero(self):
        t = FrequencyTable({"x": 3, "y": 7})
        assert all(v == 0.0 for _, v in production_ratio(t, t))

    def test_label_only_in_a_large_but_finite(self):
        a = FrequencyTable({"x": 9, "only": 1})
        b = FrequencyTable({"x": 10})
        values = dict(production_ratio(a, b, smoothing=1e-9))
        assert values["only"] > 10
        assert math.isfinite(values["only"])

    def test_hand_ratio_without_smoothing(self):
        a = FrequencyTable({"x": 9, "y": 1})
        b = FrequencyTable({"x": 1, "y": 9})
        values = dict(production_ratio(a, b, smoothing=0.0))
        assert values["x"] == pytest.approx(math.log(9.0), abs=1e-12)
        assert values["y"] == pytest.approx(-math.log(9.0), abs=1e-12)

    def test_antisymmetric_on_shared_labels(self):
        a = FrequencyTable({"x": 4, "y": 6, "z": 2})
        b = FrequencyTable({"x": 1, "y": 2, "z": 9})
        forward = dict(production_ratio(a, b, smoothing=0.0))
        backward = dict(production_ratio(b, a, smoothing=0.0))
        for label in ("x", "y", "z"):
            assert forward[label] == pytest.approx(-backward[label], abs=1e-12)


class TestIngestConllu:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.conllu"
        path.write_text("")
        assert ingest_conllu(path) == []

    def test_two_token_sentence(self):
        text = "1\ta\t_\tX\t_\t_\t2\tdep\t_\t_\n2\tb\t_\tY\t_\t_\t0\troot\t_\t_\n\n"
        sentences = ingest_conllu(io.StringIO(text).readlines())
        assert len(sentences) == 1
        s = sentences[0]
        assert s.heads == (2, 0)
        assert s.upos == ("X", "Y")

    def test_fixture_pos_counts_match_hand_count(self):
        sentences = ingest_conllu(os.path.join(DATA_DIR, "fixture.conllu"))
        assert len(sentences) == 3
        counts = FrequencyTable.from_tokens(t for s in sentences for t in s.upos)
        assert counts.counts == {"DET": 1, "NOUN": 3, "VERB": 3, "PUNCT": 3,
                                 "PRON": 1, "ADJ": 1}

    def test_multiword_ranges_skipped(self):
        sentences = ingest_conllu(os.path.join(DATA_DIR, "fixture.conllu"))
        assert sentences[1].forms == ("She", "reads", "old", "books", ".")

    def test_malformed_column_count_names_line(self, tmp_path):
        path = tmp_path / "bad.conllu"
        path.write_text("1\ta\tb\n")
        with pytest.raises(DataFormatError) as err:
            ingest_conllu(path)
        assert "line 1" in str(err.value)

    def test_cyclic_heads_rejected_with_warning(self):
        lines = ["1\ta\t_\tX\t_\t_\t2\tdep\t_\t_\n",
                 "2\tb\t_\tX\t_\t_\t1\tdep\t_\t_\n",
                 "3\tr\t_\tX\t_\t_\t0\troot\t_\t_\n",
                 "\n",
                 "1\tc\t_\tZ\t_\t_\t0\troot\t_\t_\n"]
        with pytest.warns(UserWarning, match="cyclic"):
            sentences = ingest_conllu(lines)
        assert len(sentences) == 1 and sentences[0].upos == ("Z",)

    def test_multiple_roots_rejected(self):
        lines = ["1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n",
                 "2\tb\t_\tX\t_\t_\t0\troot\t_\t_\n"]
        with pytest.warns(UserWarning):
            assert ingest_conllu(lines) == []


class TestDependencyLengths:
    def test_adjacent_pair(self):
        s = ParsedSentence(("a", "b"), ("X", "Y"), (2, 0), ("dep", "root"))
        assert dependency_lengths(s).distances == (1,)

    def test_three_token_example(self):
        # arcs head 1 -> token 2 and head 1 -> token 3: distances 1 and 2
        s = ParsedSentence(("a", "b", "c"), ("X", "Y", "Z"), (0, 1, 1),
                           ("root", "dep", "dep"))
        result = dependency_lengths(s)
        assert sorted(result.distances) == [1, 2]
        assert result.mean == pytest.approx(1.5)

    def test_single_token_undefined_mean(self):
        s = ParsedSentence(("a",), ("X",), (0,), ("root",))
        result = dependency_lengths(s)
        assert result.distances == () and result.mean is None

    def test_invariant_under_label_relabeling(self):
        s1 = ParsedSentence(("a", "b", "c"), ("X", "Y", "Z"), (2, 0, 2),
                            ("one", "two", "three"))
        s2 = ParsedSentence(("a", "b", "c"), ("N", "V", "A"), (2, 0, 2),
                            ("foo", "bar", "baz"))
        assert dependency_lengths(s1).distances == dependency_lengths(s2).distances

    def test_cdf_laws(self):
        cdf = length_cdf([1, 1, 2, 5, 3, 3, 3])
        fracs = [f for _, f in cdf]
        assert fracs == sorted(fracs)
        assert fracs[-1] == pytest.approx(1.0)
        assert length_cdf([]) == []


class TestLabelFrequencyComparison:
    @staticmethod
    def sent(tags):
        n = len(tags)
        heads = (0,) + tuple(1 for _ in range(n - 1))
        return ParsedSentence(tuple("w" * (i + 1) for i in range(n)), tuple(tags),
                              heads, tuple("dep" for _ in range(n)))

    def test_identical_sets_zero_difference(self):
        parses = [self.sent(["NOUN", "VERB"]), self.sent(["NOUN", "ADJ", "X"])]
        rows = label_frequency_comparison(parses, parses, kind="pos")
        assert all(r.difference == 0.0 for r in rows)

    def test_planted_noun_excess(self):
        a = [self.sent(["NOUN", "NOUN", "VERB", "X"])]
        b = [self.sent(["NOUN", "VERB", "X", "X"])]
        rows = {r.label: r for r in label_frequency_comparison(a, b, kind="pos")}
        assert rows["NOUN"].difference == pytest.approx(0.5 - 0.25)

    def test_frequencies_sum_to_one(self):
        a = [self.sent(["NOUN", "VERB"]), self.sent(["ADJ"])]
        b = [self.sent(["X", "X", "NOUN"])]
        rows = label_frequency_comparison(a, b, kind="pos")
        assert sum(r.rel_a for r in rows) == pytest.approx(1.0, abs=1e-9)
        assert sum(r.rel_b for r in rows) == pytest.approx(1.0, abs=1e-9)

    def test_dep_kind_and_errors(self):
        a = [self.sent(["NOUN"])]
        rows = label_frequency_comparison(a, a, kind="dep")
        assert rows and rows[0].label == "dep"
        with pytest.raises(UsageError):
            label_frequency_comparison(a, a, kind="lemma")
        with pytest.raises(UsageError):
            label_frequency_comparison([], a, kind="pos")


class TestMidranks:
    def test_average_positions(self):
        assert midranks({"a": 9, "b": 9, "c": 9}) == {"a": 2.0, "b": 2.0, "c": 2.0}
