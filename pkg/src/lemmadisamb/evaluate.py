"""Answer extraction, lenient alignment, scoring and error classification."""

from dataclasses import dataclass, replace
from importlib import resources
import json
import re
import unicodedata

from .errors import AlignmentError, ExtractionError, ParseError
from .textutil import is_punct, nfc

# error categories
HALLUCINATION = "hallucination"
FST_GAP = "fst_gap"
DERIVATIONAL_FORM = "derivational_form"
NEAR_SYNONYM = "near_synonym"
LACK_OF_CONTEXT = "lack_of_context"
POS_TRANSFER_FAILURE = "pos_transfer_failure"
MORPHOSYNTAX = "morphosyntax"
UNCLASSIFIED = "unclassified"

AUTOMATIC_CATEGORIES = (HALLUCINATION, FST_GAP)
MANUAL_CATEGORIES = (DERIVATIONAL_FORM, NEAR_SYNONYM, LACK_OF_CONTEXT, POS_TRANSFER_FAILURE, MORPHOSYNTAX)
CATEGORIES = AUTOMATIC_CATEGORIES + MANUAL_CATEGORIES + (UNCLASSIFIED,)


@dataclass(frozen=True, order=True)
class ErrorCategory:
    name: str
    provenance: str = "automatic"

    def __post_init__(self):
        if self.name not in CATEGORIES:
            raise ValueError(f"unknown error category {self.name!r}")
        if self.provenance not in ("automatic", "manual"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.provenance == "automatic" and self.name in MANUAL_CATEGORIES:
            raise ValueError(f"{self.name} can only be assigned manually")

    def __str__(self):
        return f"{self.name}:{self.provenance}"

    @classmethod
    def parse(cls, text):
        name, _, provenance = text.partition(":")
        return cls(name, provenance or "automatic")


# -- confusables --------------------------------------------------------------


@dataclass(frozen=True)
class ConfusableTable:
    mapping: dict
    version: str = ""

    def translate(self, text):
        return text.translate(self.mapping)


def _codepoint(field_text, lineno, path):
    t = field_text.strip().upper()
    if t.startswith("U+"):
        t = t[2:]
    try:
        return int(t, 16)
    except ValueError:
        raise ParseError(f"bad codepoint {field_text!r}", lineno, path) from None


def parse_confusables(text, path="<confusables>"):
    mapping = {}
    version = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("#"):
            m = re.match(r"#\s*version:\s*(\S+)", line)
            if m:
                version = m.group(1)
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ParseError("expected codepoint<TAB>representative", lineno, path)
        mapping[_codepoint(cols[0], lineno, path)] = chr(_codepoint(cols[1], lineno, path))
    for src, rep in mapping.items():
        if ord(rep) in mapping:
            raise ParseError(f"representative U+{ord(rep):04X} of U+{src:04X} is itself mapped", None, path)
    return ConfusableTable(mapping, version)


def load_confusables(path=None):
    """Load a confusable table; the packaged one when ``path`` is None."""
    if path is None:
        text = resources.files("lemmadisamb").joinpath("data/confusables.tsv").read_text(encoding="utf-8")
        return parse_confusables(text, "confusables.tsv")
    with open(path, encoding="utf-8") as f:
        return parse_confusables(f.read(), path)


_default_table = None


def default_table():
    global _default_table
    if _default_table is None:
        _default_table = load_confusables()
    return _default_table


def normalize_lemma(text, table=None):
    """Canonical form for lenient comparison.

    Decomposes, folds every confusable character to its class representative,
    then recomposes.
    """
    table = table or default_table()
    return unicodedata.normalize("NFC", table.translate(unicodedata.normalize("NFD", text)))


# -- extraction ---------------------------------------------------------------


@dataclass(frozen=True)
class ExtractedAnswer:
    lemmas: tuple
    extraction_method: str
    raw_span: tuple


_FENCE = re.compile(r"```[^\n`]*\n?(.*?)```", re.S)
_decoder = json.JSONDecoder()


def _lemma_list(obj):
    if not isinstance(obj, dict) or "lemmas" not in obj:
        return None
    lemmas = obj["lemmas"]
    if not isinstance(lemmas, list) or not lemmas or not all(isinstance(x, str) for x in lemmas):
        return None
    return tuple(lemmas)


def extract_lemmas(raw_text):
    """Find the last JSON object with a ``"lemmas"`` list of strings in ``raw_text``.

    Raises ExtractionError when there is none.
    """
    fences = [m.span(1) for m in _FENCE.finditer(raw_text)]
    # Fence markers contain no braces, so decoding from every "{" in the raw
    # text sees exactly what a fence-stripped copy would, with true offsets.
    best = None
    for start in (m.start() for m in re.finditer(r"\{", raw_text)):
        try:
            obj, end = _decoder.raw_decode(raw_text, start)
        except json.JSONDecodeError:
            continue
        lemmas = _lemma_list(obj)
        if lemmas is None:
            continue
        if best is None or end > best[2] or (end == best[2] and start < best[1]):
            best = (lemmas, start, end)
    if best is None:
        raise ExtractionError("no JSON object with a non-empty \"lemmas\" string list")
    lemmas, start, end = best
    fenced = any(a <= start and end <= b for a, b in fences)
    return ExtractedAnswer(lemmas, "fenced_json" if fenced else "trailing_json", (start, end))


# -- alignment ----------------------------------------------------------------

ABSENT = None


def align(tokens, predicted, table=None):
    """Pair each token with a predicted lemma.

    Returns a list with one entry per token: the predicted lemma, or ABSENT
    for a punctuation token the answer left out. Raises AlignmentError when
    the answer is longer than the sentence or omits more than punctuation.
    """
    tokens = list(tokens)
    predicted = list(predicted)
    skips = len(tokens) - len(predicted)
    if skips < 0:
        raise AlignmentError(f"{len(predicted)} lemmas for {len(tokens)} tokens")
    out = []
    j = 0
    for tok in tokens:
        if skips and is_punct(tok.surface):
            keeps = j < len(predicted) and normalize_lemma(predicted[j], table) == normalize_lemma(tok.surface, table)
            if not keeps:
                out.append(ABSENT)
                skips -= 1
                continue
        if j >= len(predicted):
            raise AlignmentError("answer ran out of lemmas")
        out.append(predicted[j])
        j += 1
    if skips:
        raise AlignmentError(f"{len(predicted)} lemmas for {len(tokens)} tokens; only punctuation may be omitted")
    return out


# -- scoring ------------------------------------------------------------------


@dataclass(frozen=True)
class TokenResult:
    index: int
    surface: str
    gold: str
    predicted: str  # None means ABSENT
    match: bool
    lenient: bool = False  # matched only thanks to confusables or punctuation omission
    candidates: tuple = ()
    tags: tuple = ()
    note: str = ""

    def to_dict(self):
        return {
            "index": self.index,
            "surface": self.surface,
            "gold": self.gold,
            "predicted": self.predicted,
            "match": self.match,
            "lenient": self.lenient,
            "candidates": list(self.candidates),
            "tags": [str(t) for t in self.tags],
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["index"],
            d["surface"],
            d["gold"],
            d["predicted"],
            d["match"],
            d.get("lenient", False),
            tuple(d.get("candidates", ())),
            tuple(ErrorCategory.parse(t) for t in d.get("tags", ())),
            d.get("note", ""),
        )


@dataclass(frozen=True)
class SentenceResult:
    sentence_id: str
    per_token: tuple
    failure: str = None

    @property
    def sentence_correct(self):
        return self.failure is None and all(t.match for t in self.per_token)

    @property
    def strict_correct(self):
        return self.sentence_correct and not any(t.lenient for t in self.per_token)

    @property
    def error_tags(self):
        return {tag for t in self.per_token for tag in t.tags}

    def token(self, index):
        for t in self.per_token:
            if t.index == index:
                return t
        raise KeyError(f"{self.sentence_id} has no token {index}")

    def to_dict(self):
        return {
            "sentence_id": self.sentence_id,
            "sentence_correct": self.sentence_correct,
            "strict_correct": self.strict_correct,
            "failure": self.failure,
            "error_tags": sorted(str(t) for t in self.error_tags),
            "tokens": [t.to_dict() for t in self.per_token],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["sentence_id"], tuple(TokenResult.from_dict(t) for t in d["tokens"]), d.get("failure"))


def _auto_tags(gold, predicted, cands, table=None):
    norm = {normalize_lemma(c, table) for c in cands}
    tags = []
    if predicted is not ABSENT and normalize_lemma(predicted, table) not in norm:
        tags.append(ErrorCategory(HALLUCINATION))
    if normalize_lemma(gold, table) not in norm:
        tags.append(ErrorCategory(FST_GAP))
    return tags or [ErrorCategory(UNCLASSIFIED)]


def classify_automatic(sentence, cands, result, table=None):
    """Error categories detectable without linguistic judgment."""
    found = set()
    by_index = {t.index: t for t in result.per_token}
    for tok, cs in zip(sentence.tokens, cands):
        tr = by_index.get(tok.index)
        if tr is None or tr.match:
            continue
        found.update(_auto_tags(tok.gold_lemma, tr.predicted, tuple(cs), table))
    return found


def score_sentence(sentence, answer, cands=None, table=None):
    """SentenceResult for one sentence; ``answer`` is an ExtractedAnswer or a failure reason."""
    cand_tuples = [tuple(c) for c in cands] if cands is not None else [()] * len(sentence.tokens)
    failure = None
    aligned = None
    if isinstance(answer, ExtractedAnswer):
        try:
            aligned = align(sentence.tokens, answer.lemmas, table)
        except AlignmentError as exc:
            failure = f"alignment: {exc}"
    else:
        failure = str(answer)
    rows = []
    for k, tok in enumerate(sentence.tokens):
        ct = cand_tuples[k]
        if aligned is None:
            rows.append(TokenResult(tok.index, tok.surface, tok.gold_lemma, ABSENT, False, candidates=ct))
            continue
        pred = aligned[k]
        if pred is ABSENT:
            rows.append(TokenResult(tok.index, tok.surface, tok.gold_lemma, ABSENT, True, True, ct))
            continue
        strict = nfc(pred) == nfc(tok.gold_lemma)
        match = strict or normalize_lemma(pred, table) == normalize_lemma(tok.gold_lemma, table)
        tags = ()
        if not match and cands is not None:
            tags = tuple(_auto_tags(tok.gold_lemma, pred, ct, table))
        rows.append(TokenResult(tok.index, tok.surface, tok.gold_lemma, pred, match, match and not strict, ct, tags))
    return SentenceResult(sentence.id, tuple(rows), failure)


@dataclass(frozen=True)
class EvaluationReport:
    sentences: tuple
    cost_usd: float = 0.0
    confusable_version: str = ""

    @property
    def sentences_total(self):
        return len(self.sentences)

    @property
    def sentences_correct(self):
        return sum(r.sentence_correct for r in self.sentences)

    @property
    def strict_sentences_correct(self):
        return sum(r.strict_correct for r in self.sentences)

    @property
    def sentence_accuracy(self):
        return self.sentences_correct / self.sentences_total if self.sentences_total else 0.0

    @property
    def strict_sentence_accuracy(self):
        return self.strict_sentences_correct / self.sentences_total if self.sentences_total else 0.0

    @property
    def tokens_total(self):
        return sum(len(r.per_token) for r in self.sentences)

    @property
    def tokens_correct(self):
        return sum(t.match for r in self.sentences for t in r.per_token)

    @property
    def word_accuracy(self):
        return self.tokens_correct / self.tokens_total if self.tokens_total else 0.0

    @property
    def strict_word_accuracy(self):
        if not self.tokens_total:
            return 0.0
        return sum(t.match and not t.lenient for r in self.sentences for t in r.per_token) / self.tokens_total

    @property
    def lenient_matches(self):
        return sum(t.lenient for r in self.sentences for t in r.per_token)

    @property
    def failures(self):
        return sum(r.failure is not None for r in self.sentences)

    @property
    def error_histogram(self):
        hist = {}
        for r in self.sentences:
            for t in r.per_token:
                for tag in t.tags:
                    hist[str(tag)] = hist.get(str(tag), 0) + 1
        return dict(sorted(hist.items()))

    def result(self, sentence_id):
        for r in self.sentences:
            if r.sentence_id == sentence_id:
                return r
        raise KeyError(f"no sentence {sentence_id!r} in report")

    def with_result(self, new):
        return replace(
            self, sentences=tuple(new if r.sentence_id == new.sentence_id else r for r in self.sentences)
        )

    def to_dict(self):
        return {
            "sentences_total": self.sentences_total,
            "sentences_correct": self.sentences_correct,
            "sentence_accuracy": self.sentence_accuracy,
            "strict_sentences_correct": self.strict_sentences_correct,
            "strict_sentence_accuracy": self.strict_sentence_accuracy,
            "tokens_total": self.tokens_total,
            "tokens_correct": self.tokens_correct,
            "word_accuracy": self.word_accuracy,
            "strict_word_accuracy": self.strict_word_accuracy,
            "lenient_matches": self.lenient_matches,
            "failures": self.failures,
            "error_histogram": self.error_histogram,
            "cost_usd": self.cost_usd,
            "confusable_table_version": self.confusable_version,
            "sentences": [r.to_dict() for r in self.sentences],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(SentenceResult.from_dict(s) for s in d["sentences"]),
            d.get("cost_usd", 0.0),
            d.get("confusable_table_version", ""),
        )


def score(sentences, answers, candidate_sets=None, cost_usd=0.0, table=None):
    """Score one answer per sentence.

    ``answers[i]`` is an ExtractedAnswer or a failure reason string.
    ``candidate_sets[i]``, when given, holds the per-token candidate sets and
    enables automatic error classification.
    """
    sentences = list(sentences)
    answers = list(answers)
    if len(answers) != len(sentences):
        raise ValueError(f"{len(answers)} answers for {len(sentences)} sentences")
    table = table or default_table()
    results = []
    for k, s in enumerate(sentences):
        cands = candidate_sets[k] if candidate_sets is not None else None
        results.append(score_sentence(s, answers[k], cands, table))
    return EvaluationReport(tuple(results), cost_usd, table.version)


def answer_for(raw_text, error=None):
    """ExtractedAnswer for a model response, or the failure reason."""
    if error:
        return f"response: {error}"
    try:
        return extract_lemmas(raw_text)
    except ExtractionError as exc:
        return f"extraction: {exc}"


# -- manual annotation ----------------------------------------------------------


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Annotation:
    sentence_id: str
    token_index: int
    category: str
    note: str = ""

    def to_json(self):
        return json.dumps(
            {"sentence_id": self.sentence_id, "token_index": self.token_index, "category": self.category, "note": self.note},
            ensure_ascii=False,
            sort_keys=True,
        )


def annotate(result, token_index, category, note="", table=None):
    """Attach a manual error category to a mismatched token."""
    if category not in CATEGORIES or category == UNCLASSIFIED:
        raise AnnotationError(f"cannot annotate with category {category!r}")
    try:
        tok = result.token(token_index)
    except KeyError as exc:
        raise AnnotationError(str(exc)) from None
    if tok.match:
        raise AnnotationError(f"token {token_index} of {result.sentence_id} is already correct")
    if category in AUTOMATIC_CATEGORIES:
        holds = {c.name for c in _auto_tags(tok.gold, tok.predicted, tok.candidates, table)}
        if category not in holds:
            raise AnnotationError(f"token {token_index} of {result.sentence_id} is not a {category}")
    tags = [t for t in tok.tags if t.name != UNCLASSIFIED and t.name != category]
    tags.append(ErrorCategory(category, "manual"))
    new_tok = replace(tok, tags=tuple(sorted(tags)), note=note)
    return replace(result, per_token=tuple(new_tok if t.index == token_index else t for t in result.per_token))


def load_annotations(path):
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                out.append(Annotation(d["sentence_id"], int(d["token_index"]), d["category"], d.get("note", "")))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad annotation record: {exc}", lineno, path) from None
    return out


def apply_annotations(report, annotations, table=None):
    for a in annotations:
        report = report.with_result(annotate(report.result(a.sentence_id), a.token_index, a.category, a.note, table))
    return report
