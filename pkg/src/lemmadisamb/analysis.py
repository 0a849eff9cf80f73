"""Candidate lemma generation behind a pluggable analyzer interface.

Two real backends are provided: a lexicon file (``surface<TAB>lemma1,lemma2``)
and an adapter for an external analyzer process speaking a line protocol.
Punctuation-only surfaces always get themselves as their single candidate.
"""

from dataclasses import dataclass
import logging
import subprocess
import threading

from .errors import BackendError, ParseError
from .textutil import is_punct, nfc

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSet:
    surface: str
    lemmas: tuple = ()

    def __post_init__(self):
        keys, kept = set(), []
        for lemma in self.lemmas:
            if lemma and nfc(lemma) not in keys:
                keys.add(nfc(lemma))
                kept.append(lemma)
        object.__setattr__(self, "lemmas", tuple(kept))

    def __len__(self):
        return len(self.lemmas)

    def __iter__(self):
        return iter(self.lemmas)

    def __contains__(self, lemma):
        return nfc(lemma) in {nfc(x) for x in self.lemmas}


class AnalyzerBackend:
    kind = None

    def lookup(self, surface):
        """Lemmas for ``surface`` or None when the analyzer has no entry."""
        raise NotImplementedError

    def prefetch(self, surfaces):
        pass


class IdentityPunctAnalyzer(AnalyzerBackend):
    """Knows no words; only the punctuation identity rule applies."""

    kind = "identity_punct"

    def lookup(self, surface):
        return None


class LexiconAnalyzer(AnalyzerBackend):
    kind = "lexicon_file"

    def __init__(self, entries=None, warnings=None):
        self.entries = {nfc(k): tuple(v) for k, v in (entries or {}).items()}
        self.warnings = list(warnings or [])

    def lookup(self, surface):
        return self.entries.get(nfc(surface))


def load_lexicon(path):
    entries = {}
    warnings = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            if "\t" not in line:
                raise ParseError("expected surface<TAB>lemmas", lineno, path)
            surface, _, rest = line.partition("\t")
            surface = nfc(surface)
            lemmas = [x.strip() for x in rest.split(",") if x.strip()]
            if surface in entries:
                msg = f"{path} line {lineno}: duplicate surface {surface!r}, later line wins"
                warnings.append(msg)
                log.warning(msg)
            entries[surface] = lemmas
    return LexiconAnalyzer(entries, warnings)


def _lowered_first(surface):
    return surface[:1].lower() + surface[1:]


def candidates(backend, surface):
    if is_punct(surface):
        return CandidateSet(surface, (surface,))
    found = backend.lookup(surface)
    if not found:
        lowered = _lowered_first(surface)
        if lowered != surface:
            found = backend.lookup(lowered)
            if found:
                log.info("lowercase fallback: %r analyzed as %r", surface, lowered)
    return CandidateSet(surface, tuple(found or ()))


def candidate_table(backend, sentence):
    """Per-token candidate sets for a sentence, in token order."""
    backend.prefetch([t.surface for t in sentence.tokens])
    return [candidates(backend, t.surface) for t in sentence.tokens]


class ExternalAnalyzer(AnalyzerBackend):
    """Adapter around an analyzer subprocess.

    The process reads one surface per line on stdin and writes
    ``surface<TAB>lemma`` lines (one per candidate) on stdout. Each batch is a
    fresh process run; results are cached so repeated lookups are pure.
    """

    kind = "external_process"

    def __init__(self, command, argv=(), timeout=None):
        self.command = command
        self.argv = list(argv)
        self.timeout = timeout
        self.calls = 0
        self._cache = {}
        self._lock = threading.Lock()

    def _run(self, surfaces):
        self.calls += 1
        try:
            proc = subprocess.run(
                [self.command, *self.argv],
                input="".join(s + "\n" for s in surfaces),
                capture_output=True,
                text=True,
                encoding="utf-8",
                timeout=self.timeout,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise BackendError(f"analyzer {self.command!r} could not run: {exc}") from exc
        if proc.returncode != 0:
            raise BackendError(
                f"analyzer {self.command!r} exited with status {proc.returncode}", stderr=proc.stderr
            )
        wanted = set(surfaces)
        results = {s: [] for s in surfaces}
        for n, line in enumerate(proc.stdout.splitlines(), 1):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 2 or cols[0] not in wanted:
                raise BackendError(f"analyzer protocol violation on output line {n}: {line!r}", stderr=proc.stderr)
            if cols[1]:
                results[cols[0]].append(cols[1])
        return results

    def prefetch(self, surfaces):
        batch = []
        for s in surfaces:
            for variant in (s, _lowered_first(s)):
                if variant and "\n" not in variant and variant not in batch:
                    batch.append(variant)
        with self._lock:
            missing = [s for s in batch if s not in self._cache]
            if missing:
                self._cache.update(self._run(missing))

    def lookup(self, surface):
        with self._lock:
            if surface not in self._cache:
                self._cache.update(self._run([surface]))
            return self._cache[surface] or None


def attach_external(command, argv=(), timeout=None):
    return ExternalAnalyzer(command, argv, timeout)
