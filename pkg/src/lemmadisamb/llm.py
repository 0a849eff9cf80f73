"""Per-sentence chat-completion dispatch with transcripts and cost accounting.

Three backends share one interface: ``LiveBackend`` posts to an HTTP
chat-completions endpoint, ``ReplayBackend`` answers from a recorded
transcript keyed by prompt hash, and ``MockBackend`` returns scripted text.
Every call goes through :func:`complete`, which appends a record to the
active :class:`Transcript`.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import hashlib
import json
import logging
import os
import threading
import time

import httpx

from .errors import BackendError, CredentialError, NetworkError, ReplayMissError

log = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-4o"
DEFAULT_TEMPERATURE = 1.0
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
API_KEY_ENV = "LLM_API_KEY"
RETRY_STATUSES = {429, 500, 502, 503, 504}


def prompt_sha256(prompt_text):
    text = prompt_text.replace("\r\n", "\n").replace("\r", "\n")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRequest:
    sentence_id: str
    messages: tuple
    model_name: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE

    @classmethod
    def for_prompt(cls, sentence_id, prompt_text, model_name=DEFAULT_MODEL, temperature=DEFAULT_TEMPERATURE):
        return cls(sentence_id, (("user", prompt_text),), model_name, temperature)

    @property
    def prompt_text(self):
        return self.messages[-1][1]

    def payload(self):
        return {
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": [{"role": role, "content": content} for role, content in self.messages],
        }


@dataclass(frozen=True)
class Pricing:
    """USD per 1000 tokens."""

    price_in: float = None
    price_out: float = None

    @property
    def configured(self):
        return self.price_in is not None and self.price_out is not None

    def cost(self, prompt_tokens, completion_tokens):
        if not self.configured:
            return 0.0
        return (prompt_tokens * self.price_in + completion_tokens * self.price_out) / 1000.0


@dataclass(frozen=True)
class ModelResponse:
    sentence_id: str
    raw_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cost_usd: float = 0.0
    backend: str = "mock"
    priced: bool = False
    truncated: bool = False
    error: str = None
    error_kind: str = None

    @property
    def ok(self):
        return self.error is None

    def to_dict(self):
        return {
            "sentence_id": self.sentence_id,
            "raw_text": self.raw_text,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "cost_usd": self.cost_usd,
            "backend": self.backend,
            "priced": self.priced,
            "truncated": self.truncated,
            "error": self.error,
            "error_kind": self.error_kind,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


class Transcript:
    """Append-only log of (request, response) records, optionally mirrored to JSON lines."""

    def __init__(self, path=None, records=None):
        self.path = path
        self.records = list(records or [])
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path, writable=True):
        records = []
        if os.path.exists(path):
            with open(path, encoding="utf-8") as f:
                for lineno, line in enumerate(f, 1):
                    if line.strip():
                        try:
                            records.append(json.loads(line))
                        except json.JSONDecodeError as exc:
                            raise BackendError(f"{path}:{lineno}: bad transcript record: {exc}") from exc
        return cls(path if writable else None, records)

    def __len__(self):
        return len(self.records)

    def append(self, req, resp):
        record = {
            "sentence_id": req.sentence_id,
            "prompt_sha256": prompt_sha256(req.prompt_text),
            "backend": resp.backend,
            "request": req.payload(),
            "response": {
                "text": resp.raw_text,
                "prompt_tokens": resp.prompt_tokens,
                "completion_tokens": resp.completion_tokens,
                "truncated": resp.truncated,
            },
            "error": resp.error,
        }
        with self._lock:
            self.records.append(record)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def responses(self, pricing=Pricing()):
        """Successful records as ModelResponses priced with ``pricing``."""
        out = []
        for rec in self.records:
            if rec.get("error"):
                continue
            r = rec["response"]
            out.append(
                ModelResponse(
                    rec["sentence_id"],
                    r["text"],
                    r["prompt_tokens"],
                    r["completion_tokens"],
                    pricing.cost(r["prompt_tokens"], r["completion_tokens"]),
                    rec.get("backend", "replay"),
                    pricing.configured,
                    r.get("truncated", False),
                )
            )
        return out


# A backend's send() returns (text, prompt_tokens, completion_tokens, truncated).


class LiveBackend:
    name = "live"

    def __init__(
        self,
        endpoint=DEFAULT_ENDPOINT,
        api_key=None,
        max_retries=3,
        backoff=1.0,
        timeout=120.0,
        client=None,
        sleep=time.sleep,
    ):
        api_key = api_key or os.environ.get(API_KEY_ENV, "").strip()
        if not api_key:
            raise CredentialError(f"missing credential: set {API_KEY_ENV}")
        self.endpoint = endpoint
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff = backoff
        self.sleep = sleep
        self.client = client or httpx.Client(timeout=timeout)

    def _delay(self, attempt, response=None):
        if response is not None:
            retry_after = response.headers.get("retry-after")
            if retry_after:
                try:
                    return max(0.0, float(retry_after))
                except ValueError:
                    pass
        return self.backoff * 2**attempt

    def send(self, req):
        headers = {"Authorization": f"Bearer {self.api_key}", "Content-Type": "application/json"}
        problem = None
        for attempt in range(self.max_retries + 1):
            last = attempt == self.max_retries
            try:
                resp = self.client.post(self.endpoint, json=req.payload(), headers=headers)
            except httpx.TransportError as exc:
                problem = f"transport error: {exc}"
                if last:
                    break
                log.warning("%s: %s (attempt %d)", req.sentence_id, problem, attempt + 1)
                self.sleep(self._delay(attempt))
                continue
            if resp.status_code in RETRY_STATUSES:
                problem = f"HTTP {resp.status_code}"
                if last:
                    break
                log.warning("%s: %s (attempt %d)", req.sentence_id, problem, attempt + 1)
                self.sleep(self._delay(attempt, resp))
                continue
            if resp.status_code >= 400:
                raise NetworkError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
                choice = data["choices"][0]
                text = choice["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"unexpected response body: {exc}") from exc
            usage = data.get("usage") or {}
            return (
                text,
                int(usage.get("prompt_tokens", 0)),
                int(usage.get("completion_tokens", 0)),
                choice.get("finish_reason") == "length",
            )
        raise NetworkError(f"{problem} after {self.max_retries + 1} attempts")


class ReplayBackend:
    name = "replay"

    def __init__(self, transcript):
        self.index = {}
        for rec in transcript.records:
            if not rec.get("error"):
                self.index[rec["prompt_sha256"]] = rec["response"]

    @classmethod
    def from_file(cls, path):
        return cls(Transcript.load(path, writable=False))

    def send(self, req):
        key = prompt_sha256(req.prompt_text)
        try:
            r = self.index[key]
        except KeyError:
            raise ReplayMissError(f"no recorded response for prompt {key[:12]} ({req.sentence_id})") from None
        return r["text"], r["prompt_tokens"], r["completion_tokens"], r.get("truncated", False)


class MockBackend:
    """Scripted answers: a mapping from sentence id to text, or a callable on the request."""

    name = "mock"

    def __init__(self, answers):
        self.answers = answers

    def send(self, req):
        if callable(self.answers):
            text = self.answers(req)
        else:
            try:
                text = self.answers[req.sentence_id]
            except KeyError:
                raise BackendError(f"mock has no answer for {req.sentence_id}") from None
        if isinstance(text, Exception):
            raise text
        return text, len(req.prompt_text.split()), len(text.split()), False


def _error_kind(exc):
    if isinstance(exc, NetworkError):
        return "network"
    if isinstance(exc, ReplayMissError):
        return "replay_miss"
    return "backend"


def complete(backend, req, transcript=None, pricing=Pricing()):
    try:
        text, p_tok, c_tok, truncated = backend.send(req)
    except BackendError as exc:
        kind = _error_kind(exc)
        if transcript is not None:
            failed = ModelResponse(req.sentence_id, "", backend=backend.name, error=str(exc), error_kind=kind)
            transcript.append(req, failed)
        raise
    resp = ModelResponse(
        req.sentence_id,
        text,
        p_tok,
        c_tok,
        pricing.cost(p_tok, c_tok),
        backend.name,
        pricing.configured,
        truncated,
    )
    if transcript is not None:
        transcript.append(req, resp)
    return resp


def run_corpus(
    backend,
    prompts,
    parallelism=1,
    model_name=DEFAULT_MODEL,
    temperature=DEFAULT_TEMPERATURE,
    transcript=None,
    pricing=Pricing(),
):
    """One independent request per prompt; results come back in input order.

    A failing sentence yields a ModelResponse with ``error`` set instead of
    aborting the run.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    prompts = list(prompts)

    def one(bundle):
        req = CompletionRequest.for_prompt(bundle.sentence_id, bundle.prompt_text, model_name, temperature)
        try:
            return complete(backend, req, transcript, pricing)
        except BackendError as exc:
            log.error("%s: %s", bundle.sentence_id, exc)
            kind = _error_kind(exc)
            return ModelResponse(bundle.sentence_id, "", backend=backend.name, error=str(exc), error_kind=kind)

    if parallelism == 1:
        return [one(b) for b in prompts]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, prompts))


def total_cost(responses):
    return sum(r.cost_usd for r in responses)


def _answer_text(lemmas):
    return "Decision steps omitted.\n\n" + json.dumps({"lemmas": list(lemmas)}, ensure_ascii=False)


def oracle_answers(sentences):
    """Mock answers that repeat the gold lemmas."""
    return {s.id: _answer_text(s.gold_lemmas) for s in sentences}


def adversarial_answers(sentences, analyzer):
    """Mock answers that pick a non-gold candidate for every ambiguous token."""
    from .analysis import candidate_table
    from .evaluate import normalize_lemma

    out = {}
    for s in sentences:
        lemmas = []
        for tok, cs in zip(s.tokens, candidate_table(analyzer, s)):
            choice = tok.gold_lemma
            if len(cs.lemmas) >= 2:
                gold = normalize_lemma(tok.gold_lemma)
                wrong = [c for c in cs.lemmas if normalize_lemma(c) != gold]
                if wrong:
                    choice = wrong[0]
            lemmas.append(choice)
        out[s.id] = _answer_text(lemmas)
    return out
