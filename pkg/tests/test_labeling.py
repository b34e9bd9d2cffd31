import pytest
from hypothesis import given, strategies as st

from episilver.corpus import NormalizedDocument
from episilver.errors import (
    BalanceError,
    ConfigError,
    DataError,
    DuplicateTextError,
    InsufficientNegativesError,
    PatternError,
)
from episilver.labeling import (
    EpidemicClass,
    LabeledExample,
    LabelRule,
    SilverDataset,
    assign_label,
    build_silver_dataset,
    compile_ruleset,
    default_ruleset,
    load_ruleset,
    match_classes,
    parse_ruleset_text,
    read_dataset_tsv,
    sample_negatives,
    write_dataset_tsv,
)
from helpers import adversarial_strings, brute_match_classes

EC = EpidemicClass


class TestRulesetCompilation:
    def test_default_ruleset_shape(self):
        rs = default_ruleset()
        assert len(rs.rules) == 11
        priorities = [r.priority for r in rs.rules]
        assert len(set(priorities)) == len(priorities)
        by_key = {(r.target, r.case_sensitive): r.priority for r in rs.rules}
        assert by_key[(EC.SWINE_FLU, False)] < by_key[(EC.FLU, False)]
        assert (EC.HIV_AIDS, True) in by_key  # the uppercase-only rule

    def test_non_compiling_pattern(self):
        with pytest.raises(PatternError, match="cholera"):
            compile_ruleset([LabelRule(EC.CHOLERA, "([", False, 0)])

    def test_duplicate_priorities(self):
        rules = [
            LabelRule(EC.CHOLERA, r"\bcholera\b", False, 1),
            LabelRule(EC.EBOLA, r"\bebola\b", False, 1),
        ]
        with pytest.raises(ConfigError):
            compile_ruleset(rules)

    def test_empty_ruleset(self):
        with pytest.raises(ConfigError):
            compile_ruleset([])

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "rules.tsv"
        path.write_text(
            "# comment line\n"
            "mers\t0\t0\t\\bmers\\b\n"
            "hiv_aids\t1\t1\t\\bAIDS\\b\n",
            encoding="utf-8",
        )
        rs = load_ruleset(path)
        assert len(rs.rules) == 2
        assert match_classes(rs, "MERS update") == {EC.MERS}
        assert match_classes(rs, "aids") == set()

    @pytest.mark.parametrize("text", [
        "mers\t0\t0\n",                    # missing field
        "mers\tx\t0\t\\bmers\\b\n",        # bad case flag
        "mers\t0\tz\t\\bmers\\b\n",        # bad priority
        "plague\t0\t0\t\\bplague\\b\n",    # unknown class
    ])
    def test_file_format_errors(self, text):
        with pytest.raises(ConfigError):
            parse_ruleset_text(text)


class TestMatching:
    def test_direct_keyword(self):
        assert match_classes(default_ruleset(), "Cholera outbreak in Haiti") == {EC.CHOLERA}

    def test_aids_case_law(self):
        rs = default_ruleset()
        assert match_classes(rs, "she aids the team") == set()
        assert match_classes(rs, "AIDS awareness") == {EC.HIV_AIDS}

    def test_word_boundary_blocks_embedding(self):
        assert match_classes(default_ruleset(), "farmers market") == set()

    def test_flu_not_matched_inside_influenza(self):
        assert match_classes(default_ruleset(), "influenza") == {EC.INFLUENZA}

    def test_hashtag_forms(self):
        rs = default_ruleset()
        assert match_classes(rs, "watch #ebola now") == {EC.EBOLA}
        assert match_classes(rs, "#SwineFlu") == {EC.SWINE_FLU}

    @given(st.sampled_from(["cholera", "ebola", "h1n1", "mers", "sars",
                            "influenza", "flu", "hiv", "swineflu",
                            "yellowfever"]),
           st.lists(st.booleans(), min_size=12, max_size=12))
    def test_case_insensitive_rules_fire_on_any_casing(self, keyword, mask):
        cased = "".join(
            c.upper() if flag else c for c, flag in zip(keyword, mask)
        )
        matches = match_classes(default_ruleset(), f"about {cased} today")
        assert matches == brute_match_classes(f"about {cased} today")
        assert len(matches) == 1

    @given(st.lists(st.booleans(), min_size=4, max_size=4))
    def test_aids_only_exact_uppercase(self, mask):
        cased = "".join(
            c.upper() if flag else c.lower() for c, flag in zip("aids", mask)
        )
        matches = match_classes(default_ruleset(), f"note {cased} here")
        assert (matches == {EC.HIV_AIDS}) == (cased == "AIDS")

    def test_oracle_equivalence_1000_strings(self):
        rs = default_ruleset()
        for text in adversarial_strings(seed=97, count=1000):
            assert match_classes(rs, text) == brute_match_classes(text), text


class TestAssignLabel:
    def test_priority_resolves_swine_flu(self):
        assert assign_label(default_ruleset(), "Swine flu cases rising",
                            "priority") == EC.SWINE_FLU

    def test_exclude_drops_multi_match(self):
        assert assign_label(default_ruleset(), "ebola and cholera in the news",
                            "exclude") is None

    def test_no_match(self):
        assert assign_label(default_ruleset(), "no health terms here") is None

    def test_unknown_policy(self):
        with pytest.raises(ConfigError):
            assign_label(default_ruleset(), "flu", "vote")

    def test_single_class_via_two_rules(self):
        # hiv and AIDS both map to hiv_aids: one distinct class, no exclusion
        assert assign_label(default_ruleset(), "HIV and AIDS research") == EC.HIV_AIDS

    @given(st.text(alphabet=st.sampled_from(list("abceflorsuv #AIDS")), max_size=40))
    def test_label_is_drawn_from_match_set(self, text):
        rs = default_ruleset()
        matches = match_classes(rs, text)
        for policy in ("exclude", "priority"):
            label = assign_label(rs, text, policy)
            if label is not None:
                assert label in matches
        assert (assign_label(rs, text, "priority") is None) == (not matches)
        assert (assign_label(rs, text, "exclude") is None) == (len(matches) != 1)


def _doc_stream(texts):
    return [NormalizedDocument(id=str(i), text=t) for i, t in enumerate(texts)]


class TestSampleNegatives:
    def test_deterministic(self):
        docs = _doc_stream([f"plain doc {i}" for i in range(100)])
        rs = default_ruleset()
        first = sample_negatives(docs, rs, 10, seed=7)
        second = sample_negatives(docs, rs, 10, seed=7)
        assert first == second
        assert sample_negatives(docs, rs, 10, seed=8) != first

    def test_zero_sample(self):
        assert sample_negatives(_doc_stream(["a doc"]), default_ruleset(), 0, 1) == []

    def test_insufficiency_reports_shortfall(self):
        docs = _doc_stream([f"plain {i}" for i in range(5)])
        with pytest.raises(InsufficientNegativesError) as exc:
            sample_negatives(docs, default_ruleset(), 10, 0)
        assert exc.value.shortfall == 5

    def test_epidemic_docs_never_sampled(self):
        texts = [f"plain {i}" for i in range(20)] + ["flu alert", "ebola watch"]
        out = sample_negatives(_doc_stream(texts), default_ruleset(), 20, 3)
        rs = default_ruleset()
        assert len(out) == 20
        for ex in out:
            assert ex.label is EC.NON_EPIDEMIC
            assert match_classes(rs, ex.text) == set()


def _examples(cls, texts):
    return [LabeledExample(id=f"{cls.label}{i}", text=t, label=cls)
            for i, t in enumerate(texts)]


class TestSilverDataset:
    def test_published_counts_balance(self):
        counts = {EC.CHOLERA: 18_375, EC.EBOLA: 441_035, EC.MERS: 8_993,
                  EC.SWINE_FLU: 76_784, EC.NON_EPIDEMIC: 545_187}
        ds = SilverDataset.from_counts(counts)
        assert ds.total == 1_090_374

    def test_off_by_one_rejected(self):
        counts = {EC.CHOLERA: 18_375, EC.EBOLA: 441_035, EC.MERS: 8_993,
                  EC.SWINE_FLU: 76_784, EC.NON_EPIDEMIC: 545_186}
        with pytest.raises(BalanceError):
            SilverDataset.from_counts(counts)

    def test_build_and_counts(self):
        positives = {
            EC.CHOLERA: _examples(EC.CHOLERA, ["c one", "c two"]),
            EC.MERS: _examples(EC.MERS, ["m one"]),
        }
        negatives = _examples(EC.NON_EPIDEMIC, ["n1", "n2", "n3"])
        ds = build_silver_dataset(positives, negatives, seed=5)
        assert ds.total == 6 and ds.seed == 5
        assert ds.class_counts == {EC.CHOLERA: 2, EC.MERS: 1, EC.NON_EPIDEMIC: 3}
        assert len({ex.text for ex in ds.examples}) == 6

    def test_empty_dataset_is_valid(self):
        ds = build_silver_dataset({}, [])
        assert ds.total == 0 and ds.examples == ()

    def test_unbalanced_build_rejected(self):
        positives = {EC.CHOLERA: _examples(EC.CHOLERA, ["a", "b"])}
        with pytest.raises(BalanceError):
            build_silver_dataset(positives, _examples(EC.NON_EPIDEMIC, ["n"]))

    def test_duplicate_text_across_classes_rejected(self):
        positives = {
            EC.CHOLERA: _examples(EC.CHOLERA, ["same text"]),
            EC.MERS: _examples(EC.MERS, ["same text"]),
        }
        negatives = _examples(EC.NON_EPIDEMIC, ["n1", "n2"])
        with pytest.raises(DuplicateTextError):
            build_silver_dataset(positives, negatives)

    def test_mislabeled_examples_rejected(self):
        bad = {EC.CHOLERA: _examples(EC.MERS, ["m"])}
        with pytest.raises(DataError):
            build_silver_dataset(bad, _examples(EC.NON_EPIDEMIC, ["n"]))
        with pytest.raises(ConfigError):
            build_silver_dataset(
                {EC.NON_EPIDEMIC: _examples(EC.NON_EPIDEMIC, ["n"])},
                _examples(EC.NON_EPIDEMIC, ["x"]),
            )

    def test_tsv_round_trip(self, tmp_path):
        positives = {EC.EBOLA: _examples(EC.EBOLA, ["e doc"])}
        ds = build_silver_dataset(positives, _examples(EC.NON_EPIDEMIC, ["n doc"]))
        path = tmp_path / "ds.tsv"
        write_dataset_tsv(ds, path)
        assert read_dataset_tsv(path) == list(ds.examples)
