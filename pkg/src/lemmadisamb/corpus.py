"""CoNLL-U ingestion: sentences with surface forms and gold lemmas."""

from dataclasses import dataclass, field, replace
import io
import os

from .errors import ParseError

ID, FORM, LEMMA, UPOS = range(4)
N_COLUMNS = 10


@dataclass(frozen=True)
class Token:
    surface: str
    gold_lemma: str
    upos: str
    index: int


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple
    source_language: str = ""
    # original block lines, kept so filtered subsets can be written back verbatim
    lines: tuple = field(default=(), compare=False, repr=False)

    @property
    def gold_lemmas(self):
        return [t.gold_lemma for t in self.tokens]

    @property
    def surfaces(self):
        return [t.surface for t in self.tokens]


def _finish_block(block, ordinal, filename, source_language):
    """Build a Sentence from ``[(lineno, line), ...]``; None if there are no word rows."""
    sent_id = None
    tokens = []
    for lineno, line in block:
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep and key.strip() == "sent_id":
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise ParseError(f"expected {N_COLUMNS} tab-separated columns, got {len(cols)}", lineno, filename)
        tid = cols[ID]
        if "-" in tid or "." in tid:
            continue  # multiword range or empty node
        try:
            index = int(tid)
        except ValueError:
            raise ParseError(f"bad token id {tid!r}", lineno, filename) from None
        if index != len(tokens) + 1:
            raise ParseError(f"token id {index} out of sequence", lineno, filename)
        if not cols[FORM]:
            raise ParseError("empty FORM column", lineno, filename)
        lemma = "" if cols[LEMMA] == "_" else cols[LEMMA]
        upos = "" if cols[UPOS] == "_" else cols[UPOS]
        tokens.append(Token(cols[FORM], lemma, upos, index))
    if not tokens:
        return None
    if not sent_id:
        sent_id = f"{filename}:{ordinal}"
    return Sentence(sent_id, tuple(tokens), source_language, tuple(line for _, line in block))


def parse_conllu(stream, filename="<stream>", source_language=""):
    """Parse CoNLL-U text (a string or text stream) into a list of sentences."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    sentences = []
    block = []
    ordinal = 0
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if line.strip():
            block.append((lineno, line))
            continue
        if block:
            ordinal += 1
            s = _finish_block(block, ordinal, filename, source_language)
            if s is not None:
                sentences.append(s)
            block = []
    if block:
        ordinal += 1
        s = _finish_block(block, ordinal, filename, source_language)
        if s is not None:
            sentences.append(s)
    return _dedupe_ids(sentences)


def read_conllu(path, source_language=""):
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f, os.path.basename(os.fspath(path)), source_language)


def _dedupe_ids(sentences):
    seen = {}
    out = []
    for s in sentences:
        if s.id in seen:
            n = seen[s.id] + 1
            while f"{s.id}#{n}" in seen:
                n += 1
            seen[s.id] = n
            new_id = f"{s.id}#{n}"
            seen[new_id] = 1
            s = replace(s, id=new_id)
        else:
            seen[s.id] = 1
        out.append(s)
    return out


def concat_splits(train, test):
    """Train followed by test; colliding ids get a ``#n`` suffix."""
    return _dedupe_ids(list(train) + list(test))


def sentence_surface(s):
    return " ".join(t.surface for t in s.tokens)


def format_block(s):
    """CoNLL-U block for ``s`` with its (possibly synthesized) id as ``# sent_id``."""
    lines = [line for line in s.lines if not _is_sent_id(line)]
    if not lines:
        lines = [
            "\t".join([str(t.index), t.surface, t.gold_lemma or "_", t.upos or "_"] + ["_"] * 6)
            for t in s.tokens
        ]
    return "\n".join([f"# sent_id = {s.id}"] + lines) + "\n\n"


def _is_sent_id(line):
    if not line.startswith("#"):
        return False
    key, sep, _ = line[1:].partition("=")
    return bool(sep) and key.strip() == "sent_id"
