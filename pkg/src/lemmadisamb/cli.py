"""Command line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 network error.
"""

import argparse
import json
import logging
import os
import sys

from . import analysis, corpus, dictionary, evaluate, llm, pipeline
from .config import load_config
from .errors import BackendError, ConfigError, CredentialError, LemmaDisambError, NetworkError, ParseError

log = logging.getLogger("lemmadisamb")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NETWORK = 0, 1, 2, 3


class DataError(LemmaDisambError):
    pass


def _analyzer(cfg):
    if cfg.analyzer == "external":
        return analysis.attach_external(cfg.analyzer_command, cfg.analyzer_args)
    cfg.require("lexicon")
    return analysis.load_lexicon(cfg.lexicon)


def _dictionary(cfg):
    cfg.require("dictionary")
    return dictionary.load_dictionary(cfg.dictionary, cfg.language_name, cfg.majority_language_name)


def _kept(cfg):
    if not os.path.exists(cfg.kept_path):
        raise DataError(f"prepared corpus not found: {cfg.kept_path} (run 'prepare' first)")
    return corpus.read_conllu(cfg.kept_path, cfg.language_code)


def _write_lines(path, lines):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def cmd_prepare(cfg, args):
    cfg.require("train")
    if cfg.test:
        cfg.require("test")
    analyzer = _analyzer(cfg)
    dic = _dictionary(cfg)
    train = corpus.read_conllu(cfg.train, cfg.language_code)
    test = corpus.read_conllu(cfg.test, cfg.language_code) if cfg.test else []
    sentences = corpus.concat_splits(train, test)
    kept, verdicts = pipeline.filter_corpus(sentences, analyzer, dic)
    os.makedirs(cfg.work_dir, exist_ok=True)
    with open(cfg.kept_path, "w", encoding="utf-8") as f:
        for s in kept:
            f.write(corpus.format_block(s))
    _write_lines(cfg.verdicts_path, [v.to_json() for v in verdicts])
    print(f"kept {len(kept)} / removed {len(verdicts) - len(kept)}")
    return EXIT_OK


def _mock_answers(cfg, args, sentences):
    if args.mock_strategy == "oracle":
        return llm.oracle_answers(sentences)
    if args.mock_strategy == "adversarial":
        return llm.adversarial_answers(sentences, _analyzer(cfg))
    path = args.mock_file or cfg.mock_file
    if not path:
        raise ConfigError("mock backend needs --mock-file, --mock-strategy or [llm] mock_file")
    try:
        with open(path, encoding="utf-8") as f:
            answers = json.load(f)
    except OSError as exc:
        raise DataError(f"cannot read mock file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(answers, dict):
        raise DataError(f"{path}: expected an object mapping sentence ids to answers")
    return answers


def cmd_run(cfg, args):
    sentences = _kept(cfg)
    if args.backend == "live":
        backend = llm.LiveBackend(cfg.endpoint, max_retries=cfg.retries, backoff=cfg.backoff)
        transcript = llm.Transcript.load(cfg.transcript)
    elif args.backend == "replay":
        if not os.path.exists(cfg.transcript):
            raise DataError(f"transcript not found: {cfg.transcript}")
        backend = llm.ReplayBackend.from_file(cfg.transcript)
        transcript = llm.Transcript()  # replay never rewrites the recording
    else:
        backend = llm.MockBackend(_mock_answers(cfg, args, sentences))
        transcript = llm.Transcript.load(cfg.transcript)

    analyzer = _analyzer(cfg)
    dic = _dictionary(cfg)
    prompts = [
        pipeline.build_prompt(s, analyzer, dic, cfg.language_name, cfg.majority_language_name, cfg.table_style)
        for s in sentences
    ]
    responses = llm.run_corpus(
        backend,
        prompts,
        args.parallelism or cfg.parallelism,
        cfg.model,
        cfg.temperature,
        transcript,
        cfg.pricing,
    )
    _write_lines(cfg.responses_path, [json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) for r in responses])
    failed = [r for r in responses if not r.ok]
    print(f"{len(responses)} responses, {len(failed)} failed, cost ${llm.total_cost(responses):.6f}")
    if any(r.error_kind == "network" for r in failed):
        return EXIT_NETWORK
    if failed:
        return EXIT_DATA
    return EXIT_OK


def _responses(cfg):
    if not os.path.exists(cfg.responses_path):
        raise DataError(f"responses not found: {cfg.responses_path} (run 'run' first)")
    out = {}
    with open(cfg.responses_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                r = llm.ModelResponse.from_dict(json.loads(line))
                out[r.sentence_id] = r
    return out


def build_report(cfg):
    sentences = _kept(cfg)
    responses = _responses(cfg)
    analyzer = _analyzer(cfg)
    table = evaluate.load_confusables(cfg.confusables)
    answers = []
    for s in sentences:
        r = responses.get(s.id)
        answers.append("response: missing" if r is None else evaluate.answer_for(r.raw_text, r.error))
    cands = [analysis.candidate_table(analyzer, s) for s in sentences]
    cost = llm.total_cost(responses.values())
    report = evaluate.score(sentences, answers, cands, cost, table)
    if os.path.exists(cfg.annotations):
        report = evaluate.apply_annotations(report, evaluate.load_annotations(cfg.annotations), table)
    return report


def cmd_score(cfg, args):
    report = build_report(cfg)
    os.makedirs(os.path.dirname(cfg.report) or ".", exist_ok=True)
    with open(cfg.report, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    print(f"sentence accuracy: {100 * report.sentence_accuracy:.1f}% -> {cfg.report}")
    return EXIT_OK


def _load_report(cfg):
    if not os.path.exists(cfg.report):
        raise DataError(f"report not found: {cfg.report} (run 'score' first)")
    with open(cfg.report, encoding="utf-8") as f:
        return json.load(f)


def format_summary(d):
    lines = [
        f"sentences: {d['sentences_total']}",
        f"sentence accuracy: {100 * d['sentence_accuracy']:.1f}% ({d['sentences_correct']}/{d['sentences_total']})",
        f"strict sentence accuracy: {100 * d['strict_sentence_accuracy']:.1f}%"
        f" ({d['strict_sentences_correct']}/{d['sentences_total']})",
        f"word accuracy: {100 * d['word_accuracy']:.1f}% ({d['tokens_correct']}/{d['tokens_total']})",
        f"strict word accuracy: {100 * d['strict_word_accuracy']:.1f}%",
        f"lenient matches: {d['lenient_matches']}",
        f"failures: {d['failures']}",
        "error histogram:",
    ]
    hist = d["error_histogram"]
    if hist:
        width = max(len(k) for k in hist)
        lines += [f"  {k.ljust(width)}  {v}" for k, v in hist.items()]
    else:
        lines.append("  (none)")
    lines.append(f"total cost: ${d['cost_usd']:.6f}")
    return "\n".join(lines)


def cmd_report(cfg, args):
    print(format_summary(_load_report(cfg)))
    return EXIT_OK


def cmd_annotate(cfg, args):
    table = evaluate.load_confusables(cfg.confusables)
    report = evaluate.EvaluationReport.from_dict(_load_report(cfg))
    try:
        result = report.result(args.sentence_id)
    except KeyError as exc:
        raise DataError(str(exc.args[0])) from None
    updated = evaluate.annotate(result, args.token_index, args.category, args.note, table)
    report = report.with_result(updated)
    with open(cfg.report, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    with open(cfg.annotations, "a", encoding="utf-8") as f:
        f.write(evaluate.Annotation(args.sentence_id, args.token_index, args.category, args.note).to_json() + "\n")
    print(f"{args.sentence_id} token {args.token_index}: {args.category}")
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="lemmadisamb", description="Dictionary-augmented LLM lemma disambiguation")
    p.add_argument("-c", "--config", default="lemmadisamb.ini", help="run configuration (INI)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("prepare", help="filter the treebank into the disambiguation corpus").set_defaults(func=cmd_prepare)

    run = sub.add_parser("run", help="prompt the model once per sentence")
    run.add_argument("--backend", choices=("live", "replay", "mock"), required=True)
    run.add_argument("--mock-file", help="JSON object mapping sentence ids to answer text")
    run.add_argument("--mock-strategy", choices=("oracle", "adversarial"), help="built-in mock answers")
    run.add_argument("--parallelism", type=int, help="in-flight requests (overrides config)")
    run.set_defaults(func=cmd_run)

    sub.add_parser("score", help="score responses into the report file").set_defaults(func=cmd_score)
    sub.add_parser("report", help="print the report summary").set_defaults(func=cmd_report)

    ann = sub.add_parser("annotate", help="tag a mismatched token with an error category")
    ann.add_argument("sentence_id")
    ann.add_argument("token_index", type=int)
    ann.add_argument("category", choices=evaluate.MANUAL_CATEGORIES + evaluate.AUTOMATIC_CATEGORIES)
    ann.add_argument("note")
    ann.set_defaults(func=cmd_annotate)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "parallelism", None) is not None and args.parallelism < 1:
        print("error: --parallelism must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except (ConfigError, CredentialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NetworkError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (DataError, ParseError, BackendError, evaluate.AnnotationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
