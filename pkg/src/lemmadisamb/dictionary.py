"""Bilingual lemma dictionary: ``lemma<TAB>translation1;translation2``."""

from dataclasses import dataclass, field

from .errors import ParseError
from .textutil import nfc


@dataclass
class DictionaryIndex:
    entries: dict = field(default_factory=dict)
    source_language: str = ""
    target_language: str = ""

    def add(self, lemma, items):
        bucket = self.entries.setdefault(nfc(lemma), [])
        for item in items:
            item = item.strip()
            if item and item not in bucket:
                bucket.append(item)

    def __getitem__(self, lemma):
        return translations(self, lemma)


def load_dictionary(path, source_language="", target_language=""):
    index = DictionaryIndex(source_language=source_language, target_language=target_language)
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            if "\t" not in line:
                raise ParseError("expected lemma<TAB>translations", lineno, path)
            lemma, _, rest = line.partition("\t")
            index.add(lemma, rest.split(";"))
    return index


def translations(d, lemma):
    return list(d.entries.get(nfc(lemma), ()))
