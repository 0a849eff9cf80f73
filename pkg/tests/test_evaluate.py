import itertools
import json

import pytest
from hypothesis import assume, given, strategies as st

from lemmadisamb.analysis import CandidateSet
from lemmadisamb.corpus import Sentence, Token
from lemmadisamb.errors import AlignmentError, ExtractionError, ParseError
from lemmadisamb.evaluate import (
    ABSENT,
    FST_GAP,
    HALLUCINATION,
    NEAR_SYNONYM,
    UNCLASSIFIED,
    AnnotationError,
    ErrorCategory,
    ExtractedAnswer,
    align,
    annotate,
    classify_automatic,
    default_table,
    extract_lemmas,
    load_confusables,
    normalize_lemma,
    parse_confusables,
    score,
)
from lemmadisamb.textutil import is_punct


def sent(sid, *pairs):
    return Sentence(sid, tuple(Token(s, g, "", i) for i, (s, g) in enumerate(pairs, 1)))


def answer(*lemmas):
    return ExtractedAnswer(tuple(lemmas), "trailing_json", (0, 0))


# -- extraction


def test_extract_table1_answer():
    text = 'Päärna has one option...\n{"lemmas": ["päärnaž", "mõõnnâd", "mååusat", "."]}'
    got = extract_lemmas(text)
    assert got.lemmas == ("päärnaž", "mõõnnâd", "mååusat", ".")
    assert got.extraction_method == "trailing_json"
    start, end = got.raw_span
    assert json.loads(text[start:end]) == {"lemmas": list(got.lemmas)}


def test_extract_fenced():
    got = extract_lemmas('```json\n{"lemmas": ["a"]}\n```')
    assert got.lemmas == ("a",)
    assert got.extraction_method == "fenced_json"


def test_extract_failure():
    with pytest.raises(ExtractionError):
        extract_lemmas("no json here")


def test_extraction_fixtures(fixtures):
    cases = json.loads((fixtures / "extraction_cases.json").read_text(encoding="utf-8"))
    assert len(cases) >= 20
    for case in cases:
        if case["expected"] is None:
            with pytest.raises(ExtractionError):
                extract_lemmas(case["text"])
        else:
            got = extract_lemmas(case["text"])
            assert list(got.lemmas) == case["expected"], case["name"]
            assert got.extraction_method == case["method"], case["name"]


lemma_text = st.text(st.characters(blacklist_categories=("Cc", "Cs")), min_size=0, max_size=10)


@given(st.lists(lemma_text, min_size=1, max_size=8), st.text(max_size=40))
def test_extract_roundtrip(lemmas, prefix):
    serialized = json.dumps({"lemmas": lemmas}, ensure_ascii=False)
    assert list(extract_lemmas(serialized).lemmas) == lemmas
    assume("{" not in prefix)
    assert list(extract_lemmas(prefix + "\n" + serialized).lemmas) == lemmas


# -- normalization


def test_prime_variants_equal():
    a, b = "mõʹnne", "mõ′nne"
    assert normalize_lemma(a) == normalize_lemma(b)
    # oracle: apply the table entries directly, character by character
    table = default_table().mapping
    direct = lambda s: "".join(table.get(ord(c), c) for c in s)
    assert direct(a) == direct(b) == "mõ'nne"


def test_canonical_equivalence_and_identity():
    assert normalize_lemma("å") == normalize_lemma("å")
    assert normalize_lemma("abc") == "abc"


def test_cyrillic_homoglyphs():
    assert normalize_lemma("ра") == normalize_lemma("pa")  # Cyrillic ра vs Latin pa
    assert normalize_lemma("ӓ") == normalize_lemma("ä")  # precomposed Cyrillic a-diaeresis
    assert normalize_lemma("омбоце") != normalize_lemma("омбоцеде")


def test_apostrophe_family_complete():
    reps = {normalize_lemma(chr(c)) for c in (0x27, 0x2019, 0x2B9, 0x2032, 0x2BC)}
    assert reps == {"'"}


def test_confusable_file_format(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_text("# version: 7\nU+2019\tU+0027\n02B9\t0027 # inline\n", encoding="utf-8")
    t = load_confusables(p)
    assert t.version == "7"
    assert normalize_lemma("a’ʹ", t) == "a''"
    with pytest.raises(ParseError):
        parse_confusables("U+0041\n")
    with pytest.raises(ParseError):
        parse_confusables("U+0041\tU+0042\nU+0042\tU+0043\n")


def test_packaged_table_is_versioned():
    assert default_table().version


def _classes():
    groups = {}
    for src, rep in default_table().mapping.items():
        groups.setdefault(rep, {rep}).add(chr(src))
    return [sorted(g) for g in groups.values()]


@given(st.text(max_size=6), st.text(max_size=6), st.sampled_from(_classes()), st.data())
def test_leniency_soundness(left, right, cls, data):
    """Replacing a character by a confusable sibling never changes a match outcome."""
    a, b = data.draw(st.sampled_from(cls)), data.draw(st.sampled_from(cls))
    gold = data.draw(st.sampled_from([left + a + right, left + right, right + a]))
    pred, swapped = left + a + right, left + b + right
    assert (normalize_lemma(gold) == normalize_lemma(pred)) == (normalize_lemma(gold) == normalize_lemma(swapped))


# -- alignment


def brute_force_alignments(tokens, predicted):
    """All ways to omit only punctuation tokens so the rest pair up positionally."""
    n_skip = len(tokens) - len(predicted)
    found = []
    if n_skip < 0:
        return found
    for skip in itertools.combinations(range(len(tokens)), n_skip):
        if all(is_punct(tokens[i].surface) for i in skip):
            it = iter(predicted)
            found.append([ABSENT if i in skip else next(it) for i in range(len(tokens))])
    return found


def test_align_examples():
    s = sent("a", ("w1", "l1"), (".", "."), ("w2", "l2"))
    assert brute_force_alignments(s.tokens, ["l1", "l2"]) == [["l1", ABSENT, "l2"]]
    assert align(s.tokens, ["l1", "l2"]) == ["l1", ABSENT, "l2"]
    four = sent("b", ("a", "a"), ("b", "b"), ("c", "c"), ("d", "d"))
    assert align(four.tokens, ["1", "2", "3", "4"]) == ["1", "2", "3", "4"]
    with pytest.raises(AlignmentError):
        align(sent("c", ("a", "a"), ("b", "b"), ("c", "c")).tokens, list("12345"))
    with pytest.raises(AlignmentError):
        align(s.tokens, ["l1"])


def test_align_keeps_present_punct():
    s = sent("p", ("w1", "l1"), (",", ","), ("w2", "l2"), (".", "."))
    assert align(s.tokens, ["l1", ",", "l2"]) == ["l1", ",", "l2", ABSENT]
    assert align(s.tokens, ["l1", "l2", "."]) == ["l1", ABSENT, "l2", "."]


@given(st.lists(st.sampled_from(["w", ".", ","]), min_size=1, max_size=7), st.data())
def test_align_agrees_with_brute_force_when_unique(shape, data):
    tokens = [Token(s, s, "", i) for i, s in enumerate(shape, 1)]
    keep = data.draw(st.lists(st.booleans(), min_size=len(tokens), max_size=len(tokens)))
    predicted = [f"p{i}" for i, (t, k) in enumerate(zip(tokens, keep)) if k or not is_punct(t.surface)]
    options = brute_force_alignments(tokens, predicted)
    assert options
    got = align(tokens, predicted)
    assert got in options
    # greedy picks the earliest omissions
    assert got == options[0]


# -- scoring


def test_sentence_accuracy_half():
    sents = [sent(f"s{i}", ("a", "a"), ("b", "b")) for i in range(4)]
    answers = [answer("a", "b"), answer("a", "x"), answer("a", "b"), "extraction: none"]
    report = score(sents, answers)
    assert report.sentences_correct == 2
    assert report.sentence_accuracy == 0.5
    assert report.tokens_total == 8 and report.tokens_correct == 5
    assert report.failures == 1


def test_gold_echo_is_perfect():
    sents = [sent("s", ("Päärna", "päärnaž"), ("mõʹnne", "mõõnnâd"), (".", "."))]
    report = score(sents, [answer("päärnaž", "mõõnnâd", ".")])
    assert report.sentence_accuracy == 1.0 and report.word_accuracy == 1.0
    assert report.strict_sentence_accuracy == 1.0 and report.lenient_matches == 0


def test_empty_report():
    report = score([], [])
    assert report.sentence_accuracy == 0.0 and report.word_accuracy == 0.0


def test_lenient_flags():
    sents = [sent("s", ("mõʹnne", "mõʹnn'jed"), ("x", "x"), (".", "."))]
    report = score(sents, [answer("mõ′nn'jed", "x")])
    r = report.sentences[0]
    assert r.sentence_correct and not r.strict_correct
    assert [t.lenient for t in r.per_token] == [True, False, True]
    assert report.lenient_matches == 2
    assert report.strict_sentence_accuracy == 0.0 <= report.sentence_accuracy == 1.0


def test_alignment_failure_scores_incorrect():
    report = score([sent("s", ("a", "a"))], [answer("a", "b")])
    assert not report.sentences[0].sentence_correct
    assert report.sentences[0].failure.startswith("alignment")


def test_repeated_word_counted_per_occurrence():
    s = sent("s", ("kuu", "kuu"), ("ja", "ja"), ("kuu", "kuu"))
    cands = [CandidateSet("kuu", ("kuu", "kuuhi")), CandidateSet("ja", ("ja",)), CandidateSet("kuu", ("kuu", "kuuhi"))]
    report = score([s], [answer("kuuhi", "ja", "kuuhi")], [cands])
    assert report.tokens_correct == 1
    assert report.error_histogram == {"unclassified:automatic": 2}


@given(st.lists(st.sampled_from(["kuu", "ja", "mõʹnne", ".", ",", "!"]), min_size=1, max_size=8))
def test_dropping_punct_predictions_keeps_correct(surfaces):
    s = sent("d", *[(w, w.upper() if not is_punct(w) else w) for w in surfaces])
    preds = [t.gold_lemma for t in s.tokens if not is_punct(t.surface)]
    assume(preds)
    assert score([s], [answer(*preds)]).sentences[0].sentence_correct


# -- classification


def test_hallucination_fixture():
    s = sent("h", ("Päärna", "päärnaž"))
    cands = [CandidateSet("Päärna", ("päärnaž",))]
    result = score([s], [answer("pärarnaž")], [cands]).sentences[0]
    assert classify_automatic(s, cands, result) == {ErrorCategory(HALLUCINATION)}
    assert result.error_tags == {ErrorCategory(HALLUCINATION)}


def test_fst_gap_fixture():
    s = sent("g", ("Ǩeârdd", "ǩeʹrdded"))
    cands = [CandidateSet("Ǩeârdd", ("ǩiõrddâd",))]
    result = score([s], [answer("ǩiõrddâd")], [cands]).sentences[0]
    assert classify_automatic(s, cands, result) == {ErrorCategory(FST_GAP)}


def test_residual_unclassified():
    s = sent("u", ("Tiâr", "tiârrâd"))
    cands = [CandidateSet("Tiâr", ("tiârr", "tiârrâd"))]
    result = score([s], [answer("tiârr")], [cands]).sentences[0]
    assert classify_automatic(s, cands, result) == {ErrorCategory(UNCLASSIFIED)}


@given(st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.sampled_from(["a", "b", "c"])), min_size=1, max_size=5), st.data())
def test_no_hallucination_when_drawn_from_candidates(pairs, data):
    s = sent("q", *[(f"w{i}", g) for i, (g, _) in enumerate(pairs)])
    cands = [CandidateSet(f"w{i}", (g, alt)) for i, (g, alt) in enumerate(pairs)]
    preds = [data.draw(st.sampled_from(list(c.lemmas))) for c in cands]
    result = score([s], [answer(*preds)], [cands]).sentences[0]
    assert ErrorCategory(HALLUCINATION) not in classify_automatic(s, cands, result)


def test_manual_categories_not_automatic():
    with pytest.raises(ValueError):
        ErrorCategory(NEAR_SYNONYM, "automatic")
    assert str(ErrorCategory(NEAR_SYNONYM, "manual")) == "near_synonym:manual"


# -- annotation


def _one_mismatch():
    s = sent("n", ("ǩeäčč", "ǩiõččâd"), (".", "."))
    cands = [CandidateSet("ǩeäčč", ("ǩiččâd", "ǩiõččâd")), CandidateSet(".", (".",))]
    return score([s], [answer("ǩiččâd", ".")], [cands])


def test_annotate_near_synonym_shifts_histogram():
    report = _one_mismatch()
    assert report.error_histogram == {"unclassified:automatic": 1}
    updated = annotate(report.sentences[0], 1, NEAR_SYNONYM, "katsoa vs selata")
    report = report.with_result(updated)
    assert report.error_histogram == {"near_synonym:manual": 1}
    assert updated.token(1).note == "katsoa vs selata"


def test_annotate_errors():
    result = _one_mismatch().sentences[0]
    with pytest.raises(AnnotationError):
        annotate(result, 2, NEAR_SYNONYM, "")  # matched token
    with pytest.raises(AnnotationError):
        annotate(result, 1, HALLUCINATION, "")  # prediction is a candidate
    with pytest.raises(AnnotationError):
        annotate(result, 1, UNCLASSIFIED, "")
    with pytest.raises(AnnotationError):
        annotate(result, 9, NEAR_SYNONYM, "")


def test_report_json_roundtrip():
    report = _one_mismatch()
    report = report.with_result(annotate(report.sentences[0], 1, NEAR_SYNONYM, "n"))
    again = type(report).from_dict(json.loads(report.to_json()))
    assert again.to_json() == report.to_json()
