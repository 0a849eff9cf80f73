"""Corpus filtering and prompt construction."""

from dataclasses import dataclass
import json

from .analysis import candidate_table
from .corpus import sentence_surface
from .dictionary import translations
from .textutil import is_punct

KEPT = "kept"
NO_AMBIGUITY = "no_ambiguity"
UNANALYZED_TOKEN = "unanalyzed_token"
UNTRANSLATED_LEMMA = "untranslated_lemma"
MISSING_GOLD = "missing_gold"

PROMPT_TEMPLATE = """\
Your task is to disambiguate a sentence in {language}. You will be given the sentence,
a table that has all of the words of the sentence in separate rows and a comma separated
list of possible lemmas. You will need to pick the correct lemma for each word so that
every word will have only one lemma. To help you understand {language} you will
also get a second table that gives you translations of the words in {language2}.

Sentence:
{sentence}

Table of lemmas:

{table1}
{language} - {language2} vocabulary:

{table2}
Please write out the steps of your decision process and provide a list of lemmas
in JSON format at the very end of your answer.
Example: {{"lemmas": ["lemma 1", "lemma 2", "lemma 3"]}}"""


@dataclass(frozen=True)
class FilterVerdict:
    sentence_id: str
    kept: bool
    reason: str
    detail: str = ""  # offending surface, lemma or token index

    def to_json(self):
        reason = self.reason if not self.detail else f"{self.reason}({self.detail})"
        return json.dumps(
            {"sentence_id": self.sentence_id, "kept": self.kept, "reason": reason}, ensure_ascii=False
        )


def judge(sentence, cands, dictionary):
    """Verdict for one sentence given its per-token candidate sets."""
    sid = sentence.id
    for tok, cs in zip(sentence.tokens, cands):
        if not cs.lemmas:
            return FilterVerdict(sid, False, UNANALYZED_TOKEN, tok.surface)
    for tok, cs in zip(sentence.tokens, cands):
        if is_punct(tok.surface):
            continue
        for lemma in cs.lemmas:
            if not translations(dictionary, lemma):
                return FilterVerdict(sid, False, UNTRANSLATED_LEMMA, lemma)
    if not any(len(cs.lemmas) >= 2 for cs in cands):
        return FilterVerdict(sid, False, NO_AMBIGUITY)
    for tok in sentence.tokens:
        if not tok.gold_lemma:
            return FilterVerdict(sid, False, MISSING_GOLD, str(tok.index))
    return FilterVerdict(sid, True, KEPT)


def filter_corpus(sentences, analyzer, dictionary):
    """Keep sentences that are ambiguous, fully analyzed, fully translated and scorable.

    Returns ``(kept, verdicts)`` with one verdict per input sentence.
    """
    sentences = list(sentences)
    analyzer.prefetch([t.surface for s in sentences for t in s.tokens])
    kept, verdicts = [], []
    for s in sentences:
        verdict = judge(s, candidate_table(analyzer, s), dictionary)
        verdicts.append(verdict)
        if verdict.kept:
            kept.append(s)
    return kept, verdicts


def _center(text, width):
    pad = width - len(text)
    return " " * ((pad + 1) // 2) + text + " " * (pad // 2)


def render_grid(headers, rows):
    """ASCII grid table with centered cells, as used inside the prompt."""
    headers = list(headers)
    for row in rows:
        if len(row) != len(headers):
            raise ValueError(f"row has {len(row)} cells, expected {len(headers)}: {row!r}")
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]
    outer = "+" + "-" * (sum(widths) + len(widths) - 1) + "+"
    inner = "+" + "+".join("-" * w for w in widths) + "+"

    def line(cells):
        return "|" + "|".join(_center(c, w) for c, w in zip(cells, widths)) + "|"

    out = [outer, line(headers)]
    for row in rows:
        out.append(inner)
        out.append(line(row))
    out.append(outer)
    return "\n".join(out) + "\n"


def render_pipe(headers, rows):
    """Markdown pipe table."""
    headers = list(headers)
    for row in rows:
        if len(row) != len(headers):
            raise ValueError(f"row has {len(row)} cells, expected {len(headers)}: {row!r}")
    out = ["| " + " | ".join(headers) + " |", "|" + "|".join(" --- " for _ in headers) + "|"]
    out += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(out) + "\n"


RENDERERS = {"grid": render_grid, "pipe": render_pipe}


@dataclass(frozen=True)
class PromptBundle:
    sentence_id: str
    prompt_text: str
    word_rows: tuple
    vocab_rows: tuple
    language_name: str
    majority_language_name: str


def build_prompt(sentence, analyzer, dictionary, language, language2, table_style="grid"):
    render = RENDERERS[table_style]
    cands = candidate_table(analyzer, sentence)
    word_rows = tuple((tok.surface, cs.lemmas) for tok, cs in zip(sentence.tokens, cands))
    vocab_rows = []
    seen = set()
    for _, lemmas in word_rows:
        for lemma in lemmas:
            if lemma not in seen:
                seen.add(lemma)
                vocab_rows.append((lemma, ", ".join(translations(dictionary, lemma))))
    table1 = render(["Word", "Lemmas"], [[w, ", ".join(ls)] for w, ls in word_rows])
    table2 = render([language, language2], [list(r) for r in vocab_rows])
    text = PROMPT_TEMPLATE.format(
        language=language,
        language2=language2,
        sentence=sentence_surface(sentence),
        table1=table1,
        table2=table2,
    )
    return PromptBundle(sentence.id, text, word_rows, tuple(vocab_rows), language, language2)
