"""Run configuration: one INI file, paths relative to the file's directory."""

import configparser
from dataclasses import dataclass, field
import os

from .errors import ConfigError
from .llm import DEFAULT_ENDPOINT, DEFAULT_MODEL, DEFAULT_TEMPERATURE, Pricing


@dataclass
class RunConfig:
    language_name: str
    majority_language_name: str
    language_code: str = ""
    train: str = None
    test: str = None
    lexicon: str = None
    dictionary: str = None
    work_dir: str = "work"
    transcript: str = None
    report: str = None
    annotations: str = None
    confusables: str = None
    analyzer: str = "lexicon"
    analyzer_command: str = None
    analyzer_args: list = field(default_factory=list)
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    price_in: float = None
    price_out: float = None
    retries: int = 3
    backoff: float = 1.0
    parallelism: int = 1
    mock_file: str = None
    table_style: str = "grid"

    @property
    def pricing(self):
        return Pricing(self.price_in, self.price_out)

    @property
    def kept_path(self):
        return os.path.join(self.work_dir, "kept.conllu")

    @property
    def verdicts_path(self):
        return os.path.join(self.work_dir, "verdicts.jsonl")

    @property
    def responses_path(self):
        return os.path.join(self.work_dir, "responses.jsonl")

    def require(self, *names):
        """Check that the named input paths are set and exist."""
        for name in names:
            path = getattr(self, name)
            if not path:
                raise ConfigError(f"config is missing path '{name}'")
            if not os.path.exists(path):
                raise ConfigError(f"{name} file not found: {path}")


def _float(section, key, default):
    raw = section.get(key, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None


def _int(section, key, default):
    raw = section.get(key, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def load_config(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"bad config {path}: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))

    def section(name):
        return parser[name] if parser.has_section(name) else {}

    def resolve(value):
        value = (value or "").strip()
        if not value:
            return None
        return value if os.path.isabs(value) else os.path.join(base, value)

    lang, paths, analyzer, llm, prompt = (section(n) for n in ("language", "paths", "analyzer", "llm", "prompt"))
    if not lang.get("name") or not lang.get("majority_name"):
        raise ConfigError("[language] needs 'name' and 'majority_name'")
    work_dir = resolve(paths.get("work_dir")) or os.path.join(base, "work")
    cfg = RunConfig(
        language_name=lang["name"].strip(),
        majority_language_name=lang["majority_name"].strip(),
        language_code=lang.get("code", "").strip(),
        train=resolve(paths.get("train")),
        test=resolve(paths.get("test")),
        lexicon=resolve(paths.get("lexicon")),
        dictionary=resolve(paths.get("dictionary")),
        work_dir=work_dir,
        transcript=resolve(paths.get("transcript")) or os.path.join(work_dir, "transcript.jsonl"),
        report=resolve(paths.get("report")) or os.path.join(work_dir, "report.json"),
        annotations=resolve(paths.get("annotations")) or os.path.join(work_dir, "annotations.jsonl"),
        confusables=resolve(paths.get("confusables")),
        analyzer=analyzer.get("kind", "lexicon").strip(),
        analyzer_command=analyzer.get("command", "").strip() or None,
        analyzer_args=analyzer.get("args", "").split(),
        endpoint=llm.get("endpoint", "").strip() or DEFAULT_ENDPOINT,
        model=llm.get("model", "").strip() or DEFAULT_MODEL,
        temperature=_float(llm, "temperature", DEFAULT_TEMPERATURE),
        price_in=_float(llm, "price_in", None),
        price_out=_float(llm, "price_out", None),
        retries=_int(llm, "retries", 3),
        backoff=_float(llm, "backoff", 1.0),
        parallelism=_int(llm, "parallelism", 1),
        mock_file=resolve(llm.get("mock_file")),
        table_style=prompt.get("table_style", "grid").strip(),
    )
    if cfg.analyzer not in ("lexicon", "external"):
        raise ConfigError(f"analyzer kind must be lexicon or external, got {cfg.analyzer!r}")
    if cfg.analyzer == "external" and not cfg.analyzer_command:
        raise ConfigError("external analyzer needs [analyzer] command")
    if cfg.table_style not in ("grid", "pipe"):
        raise ConfigError(f"table_style must be grid or pipe, got {cfg.table_style!r}")
    if cfg.parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    return cfg
