"""Command-line interface: one subcommand per pipeline stage.

Option values are merged from three sources, later ones winning: a
``key = value`` config file given by ``--config`` (or ``GECFORGE_CONFIG``),
environment variables ``GECFORGE_<KEY>`` and command-line flags.  Keys are
flag names with dashes or underscores, e.g. ``min-count = 4`` or
``GECFORGE_MIN_COUNT=4``.  Multi-valued options take comma-separated lists
outside the command line.

Exit status: 0 on success, 1 on invalid input or usage, 2 on I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from typing import IO, Any, Callable, Iterator, Sequence

from . import __version__
from .align import classify_edit, extract_edits
from .corpus import AnnotatedPair, ValidationError, apply_edits, read_m2_file, tokenize, write_m2
from .copymix import selftest
from .evalstats import edit_density, permutation_test, score_m2, sentence_densities
from .lexicon import DEFAULT_PRIORITY, MorphLexicon, build_lexicon, default_lexicon
from .lm import LmError, NGramLm, extract_capital_words, train_lm
from .noise import EditDictionary, NoisingConfig, build_dictionary, generate_corpus
from .postprocess import PostprocessConfig, category_filter_search, drop_categories, lm_select_edits, strip_unk_edits
from .spellcheck import SpellConfig, Vocab, correct
from .subword import BpeError, BpeModel, bpe_apply, bpe_learn, bpe_revert

log = logging.getLogger("gecforge")

ENV_PREFIX = "GECFORGE_"
EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable[[str], Any] = str
    default: Any = None
    required: bool = False
    multiple: bool = False
    flag: bool = False
    choices: tuple[str, ...] | None = None
    help: str = ""

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


COMMON = (
    Opt("workers", int, 1, help="worker processes"),
    Opt("seed", int, 0, help="random seed"),
    Opt("log-level", str, "WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR")),
)

LEXICON = Opt("lexicon", help="lexicon JSON (default: the shipped lexicon)")

COMMANDS: dict[str, tuple[str, tuple[Opt, ...]]] = {
    "extract-edits": (
        "align source/target sentence pairs into an M2 file",
        (
            Opt("src", required=True, help="source sentences, one per line"),
            Opt("tgt", required=True, help="corrected sentences, one per line"),
            Opt("out", required=True),
            Opt("tokenize", flag=True, help="run the tokenizer instead of splitting on spaces"),
            Opt("classify", flag=True, help="attach rule-based categories"),
            LEXICON,
        ),
    ),
    "build-dict": (
        "build the noise dictionary from M2 files",
        (
            Opt("m2", required=True, multiple=True),
            Opt("min-count", int, 4),
            Opt("out", required=True),
        ),
    ),
    "noise": (
        "write noised<TAB>clean pairs for a clean corpus",
        (
            Opt("corpus", required=True),
            Opt("dict", required=True),
            LEXICON,
            Opt("out", required=True),
            Opt("reps", int, 1),
            Opt("mode", default="realistic", choices=("realistic", "random")),
            Opt("token-prob", float, 0.9),
            Opt("type-prob", float, 0.1),
            Opt("random-prob", float, 0.1),
            Opt("vocab", help="word list for random mode (default: corpus words)"),
        ),
    ),
    "train-lm": (
        "train the trigram LM, optionally writing vocabulary and capital-word lists",
        (
            Opt("corpus", required=True),
            Opt("out", required=True),
            Opt("lambdas", _floats, (0.1, 0.3, 0.6), help="comma-separated unigram,bigram,trigram weights"),
            Opt("alpha", float, 0.5),
            Opt("vocab-out"),
            Opt("capitals-out"),
            Opt("capital-ratio", float, 99.0),
            Opt("capital-min", int, 10),
            Opt("capital-rule", default="ratio", choices=("ratio", "difference")),
            LEXICON,
        ),
    ),
    "score": (
        "print one natural-log LM score per input line",
        (Opt("lm", required=True), Opt("in", required=True), Opt("out", default="-")),
    ),
    "spellcheck": (
        "context-aware spelling correction",
        (
            Opt("lm", required=True),
            Opt("vocab", required=True),
            Opt("capitals"),
            Opt("in", required=True),
            Opt("out", required=True),
            Opt("emit-m2"),
            Opt("max-distance", int, 2),
            Opt("max-candidates", int, 10),
            Opt("lm-weight", float, 1.0),
        ),
    ),
    "bpe-learn": (
        "learn BPE merges",
        (Opt("corpus", required=True), Opt("vocab-size", int, 32000), Opt("out", required=True)),
    ),
    "bpe-apply": (
        "segment text with a BPE model, or undo segmentation with --revert",
        (Opt("model", required=True), Opt("in", required=True), Opt("out", required=True), Opt("revert", flag=True)),
    ),
    "score-m2": (
        "span-based P/R/F0.5 of a hypothesis M2 file",
        (Opt("hyp", required=True), Opt("ref", required=True), Opt("json")),
    ),
    "stats": (
        "edit density per M2 file and permutation tests against the first",
        (
            Opt("m2", required=True, multiple=True),
            Opt("perm-rounds", int, 10000),
            Opt("annotators", default="first", choices=("first", "mean")),
            Opt("json"),
        ),
    ),
    "postprocess": (
        "drop <unk>-related edits, LM-select edits and drop filtered categories",
        (
            Opt("src", required=True),
            Opt("hyp", required=True),
            Opt("lm", required=True),
            Opt("out", required=True),
            Opt("max-remove", int, 7),
            Opt("exhaustive-limit", int, 12),
            Opt("unk", default="<unk>"),
            Opt("drop", help="JSON from tune-categories"),
            Opt("emit-m2"),
            LEXICON,
        ),
    ),
    "tune-categories": (
        "search for error categories to drop on a development set",
        (
            Opt("hyp", required=True),
            Opt("ref", required=True),
            Opt("max-cats", int, 3),
            Opt("rounds", int, 200),
            Opt("out", required=True),
        ),
    ),
    "copymix-selftest": (
        "invariant and gradient checks of the copy-mixture kernel",
        (Opt("trials", int, 1000), Opt("grad-trials", int), Opt("json")),
    ),
    "pipeline": (
        "spellcheck, optional external corrector, post-processing",
        (
            Opt("in", required=True),
            Opt("out", required=True),
            Opt("lm", required=True),
            Opt("vocab", required=True),
            Opt("capitals"),
            Opt("corrector", help="shell command reading and writing one sentence per line"),
            Opt("max-remove", int, 7),
            Opt("exhaustive-limit", int, 12),
            Opt("drop"),
            LEXICON,
        ),
    ),
    "lexicon-build": (
        "compile noun/verb/preposition tables into lexicon JSON",
        (
            Opt("nouns", required=True),
            Opt("verbs", required=True),
            Opt("preps", required=True),
            Opt("priority", default=",".join(DEFAULT_PRIORITY)),
            Opt("out", required=True),
        ),
    ),
}


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gecforge", description="GEC corpus synthesis and correction toolkit")
    parser.add_argument("--version", action="version", version=f"gecforge {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, (desc, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=desc, description=desc)
        p.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
        for opt in opts + COMMON:
            flag = "--" + opt.name
            extra = " (required)" if opt.required else ""
            if opt.flag:
                p.add_argument(flag, action="store_const", const=True, default=argparse.SUPPRESS, help=opt.help)
            elif opt.multiple:
                p.add_argument(flag, action="append", default=argparse.SUPPRESS, help=opt.help + extra)
            else:
                p.add_argument(flag, default=argparse.SUPPRESS, help=opt.help + extra, metavar=opt.dest.upper())
    return parser


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip().replace("_", "-").lower()] = value.strip()
    return out


def _convert(opt: Opt, raw: Any, source: str) -> Any:
    try:
        if opt.flag:
            return raw if isinstance(raw, bool) else _bool(raw)
        if opt.multiple:
            items = raw if isinstance(raw, list) else [x.strip() for x in raw.split(",") if x.strip()]
            return [opt.type(x) for x in items]
        value = opt.type(raw)
    except ValueError as exc:
        raise ValidationError(f"--{opt.name} ({source}): {exc}") from None
    if opt.choices and value not in opt.choices:
        raise ValidationError(f"--{opt.name} must be one of {', '.join(opt.choices)}, got {value!r}")
    return value


def resolve_options(command: str, ns: argparse.Namespace, environ=os.environ) -> argparse.Namespace:
    """Merge config file < environment < flags, apply defaults and check required options."""
    opts = COMMANDS[command][1] + COMMON
    config_path = getattr(ns, "config", None) or environ.get(ENV_PREFIX + "CONFIG")
    file_values = read_config_file(config_path) if config_path else {}
    merged = argparse.Namespace(command=command)
    for opt in opts:
        value, source = opt.default, "default"
        if opt.name in file_values:
            value, source = _convert(opt, file_values[opt.name], "config file"), "config"
        env_key = ENV_PREFIX + opt.dest.upper()
        if env_key in environ:
            value, source = _convert(opt, environ[env_key], env_key), "env"
        if hasattr(ns, opt.dest):
            value, source = _convert(opt, getattr(ns, opt.dest), "flag"), "flag"
        if opt.flag and value is None:
            value = False
        if value is None and opt.required:
            raise ValidationError(f"missing required option --{opt.name}")
        log.debug("option %s = %r from %s", opt.name, value, source)
        setattr(merged, opt.dest, value)
    if merged.workers < 1:
        raise ValidationError("--workers must be at least 1")
    return merged


# ---------------------------------------------------------------------------
# I/O helpers


@contextlib.contextmanager
def atomic_output(path: str, binary: bool = False) -> Iterator[IO]:
    """Write to a temporary file next to ``path`` and rename it into place on success."""
    if path == "-":
        if binary:
            yield sys.stdout.buffer
        else:
            yield sys.stdout
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".gecforge-", dir=directory)
    try:
        with os.fdopen(fd, "wb" if binary else "w", encoding=None if binary else "utf-8", newline=None if binary else "") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return [line.rstrip("\r\n") for line in sys.stdin]
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\r\n") for line in fh]


def _iter_lines(path: str) -> Iterator[str]:
    if path == "-":
        yield from sys.stdin
        return
    with open(path, encoding="utf-8") as fh:
        yield from fh


def _lexicon(args) -> MorphLexicon:
    return MorphLexicon.load(args.lexicon) if args.lexicon else default_lexicon()


def _capitals(path: str | None) -> frozenset[str]:
    return frozenset(w for w in _read_lines(path) if w) if path else frozenset()


def _drop_list(path: str | None) -> list[str]:
    if not path:
        return []
    with open(path, encoding="utf-8") as fh:
        return list(json.load(fh)["drop"])


def _write_json(path: str, data: Any) -> None:
    with atomic_output(path) as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_extract_edits(args) -> None:
    src, tgt = _read_lines(args.src), _read_lines(args.tgt)
    if len(src) != len(tgt):
        raise ValidationError(f"{args.src} has {len(src)} lines but {args.tgt} has {len(tgt)}")
    split = tokenize if args.tokenize else str.split
    lex = _lexicon(args) if args.classify else None
    pairs = []
    for s_line, t_line in zip(src, tgt):
        s, t = tuple(split(s_line)), tuple(split(t_line))
        edits = extract_edits(s, t)
        if lex is not None:
            edits = [e.with_category(classify_edit(s, e, lex)) for e in edits]
        pairs.append(AnnotatedPair(s, ((0, tuple(edits)),)))
    with atomic_output(args.out, binary=True) as fh:
        write_m2(pairs, fh)


def cmd_build_dict(args) -> None:
    pairs = [p for path in args.m2 for p in read_m2_file(path)]
    d = build_dictionary(pairs, args.min_count)
    log.info("dictionary: %d entries from %d sentences", len(d), len(pairs))
    with atomic_output(args.out) as fh:
        fh.write(d.dumps())


def cmd_noise(args) -> None:
    config = NoisingConfig(
        min_count=1,
        token_error_prob=args.token_prob,
        type_error_prob=args.type_prob,
        seed=args.seed,
        mode=args.mode,
        random_op_prob=args.random_prob,
    )
    vocab = None
    if args.mode == "random":
        if args.vocab:
            vocab = sorted({w.split("\t")[0] for w in _read_lines(args.vocab) if w})
        else:
            vocab = sorted({tok for line in _iter_lines(args.corpus) for tok in line.split()})
    dictionary = EditDictionary.load(args.dict)
    with atomic_output(args.out) as fh:
        n = generate_corpus(
            _iter_lines(args.corpus), fh, dictionary, _lexicon(args), config, args.reps, args.workers, vocab
        )
    log.info("noised %d lines x %d repetitions", n, args.reps)


def cmd_train_lm(args) -> None:
    sentences = [line.split() for line in _read_lines(args.corpus)]
    lm = train_lm(sentences, args.lambdas, args.alpha)
    with atomic_output(args.out) as fh:
        fh.write(lm.dumps())
    if args.vocab_out:
        extra = _lexicon(args).known_words
        with atomic_output(args.vocab_out) as fh:
            fh.write(Vocab.from_sentences(sentences, extra).dumps())
    if args.capitals_out:
        caps = extract_capital_words(sentences, args.capital_ratio, args.capital_min, args.capital_rule)
        with atomic_output(args.capitals_out) as fh:
            fh.write("".join(w + "\n" for w in sorted(caps)))


def cmd_score(args) -> None:
    lm = NGramLm.load(args.lm)
    with atomic_output(args.out) as fh:
        for line in _read_lines(args.in_):
            fh.write(f"{lm.score(line.split())!r}\n")


def _spell_config(args) -> SpellConfig:
    return SpellConfig(args.max_distance, args.max_candidates, args.lm_weight)


def cmd_spellcheck(args) -> None:
    lm, vocab, caps = NGramLm.load(args.lm), Vocab.load(args.vocab), _capitals(args.capitals)
    config = _spell_config(args)
    outputs, pairs = [], []
    for line in _read_lines(args.in_):
        src = tuple(line.split())
        fixed, edits = correct(src, lm, vocab, caps, config)
        outputs.append(" ".join(fixed))
        pairs.append(AnnotatedPair(src, ((0, tuple(edits)),)))
    with atomic_output(args.out) as fh:
        fh.write("".join(o + "\n" for o in outputs))
    if args.emit_m2:
        with atomic_output(args.emit_m2, binary=True) as fh:
            write_m2(pairs, fh)


def cmd_bpe_learn(args) -> None:
    model = bpe_learn(_iter_lines(args.corpus), args.vocab_size)
    log.info("learned %d merges", len(model.merges))
    with atomic_output(args.out) as fh:
        fh.write(model.dumps())


def cmd_bpe_apply(args) -> None:
    model = BpeModel.load(args.model)
    with atomic_output(args.out) as fh:
        for line in _iter_lines(args.in_):
            toks = line.split()
            out = bpe_revert(model, toks) if args.revert else bpe_apply(model, toks)
            fh.write(" ".join(out) + "\n")


def cmd_score_m2(args) -> None:
    report = score_m2(read_m2_file(args.hyp), read_m2_file(args.ref))
    print(report.format_table())
    if args.json:
        _write_json(args.json, report.to_json())


def cmd_stats(args) -> None:
    groups = [(path, read_m2_file(path)) for path in args.m2]
    rows = []
    base = sentence_densities(groups[0][1], args.annotators)
    for i, (path, pairs) in enumerate(groups):
        dens = sentence_densities(pairs, args.annotators)
        row = {"file": path, "sentences": len(pairs), "density": edit_density(pairs, args.annotators)}
        if i > 0:
            row["p_value"] = permutation_test(base, dens, args.perm_rounds, args.seed)
        rows.append(row)
        p = f"{row['p_value']:.4f}" if "p_value" in row else "n/a"
        print(f"{path}\t{len(pairs)}\t{row['density']:.4f}\t{p}")
    if args.json:
        _write_json(args.json, rows)


def _postprocess_line(src, hyp, lm, lex, drop, config, unk) -> tuple[list, tuple]:
    edits = strip_unk_edits(src, extract_edits(src, hyp), unk)
    edits = lm_select_edits(src, edits, lm, config)
    if drop:
        edits = [e.with_category(classify_edit(src, e, lex)) for e in edits]
        edits = drop_categories([edits], drop)[0]
    return edits, apply_edits(src, edits)


def cmd_postprocess(args) -> None:
    src_lines, hyp_lines = _read_lines(args.src), _read_lines(args.hyp)
    if len(src_lines) != len(hyp_lines):
        raise ValidationError(f"{args.src} has {len(src_lines)} lines but {args.hyp} has {len(hyp_lines)}")
    lm, lex, drop = NGramLm.load(args.lm), _lexicon(args), _drop_list(args.drop)
    config = PostprocessConfig(args.max_remove, exhaustive_edit_limit=max(args.exhaustive_limit, args.max_remove))
    outputs, pairs = [], []
    for s_line, h_line in zip(src_lines, hyp_lines):
        src = tuple(s_line.split())
        edits, out = _postprocess_line(src, tuple(h_line.split()), lm, lex, drop, config, args.unk)
        outputs.append(" ".join(out))
        pairs.append(AnnotatedPair(src, ((0, tuple(edits)),)))
    with atomic_output(args.out) as fh:
        fh.write("".join(o + "\n" for o in outputs))
    if args.emit_m2:
        with atomic_output(args.emit_m2, binary=True) as fh:
            write_m2(pairs, fh)


def cmd_tune_categories(args) -> None:
    hyp, ref = read_m2_file(args.hyp), read_m2_file(args.ref)
    if len(hyp) != len(ref):
        raise ValidationError(f"{len(hyp)} hypothesis blocks but {len(ref)} reference blocks")
    config = PostprocessConfig(max_categories_removed=args.max_cats, search_rounds=args.rounds, seed=args.seed)
    subset, report = category_filter_search([h.edits() for h in hyp], ref, None, config)
    print(f"drop {list(subset)} -> F0.5 {report.f_half:.4f}")
    _write_json(args.out, {"drop": list(subset), "report": report.to_json()})


def cmd_copymix_selftest(args) -> None:
    result = selftest(args.seed, args.trials, args.grad_trials)
    ok = result["max_sum_error"] <= 1e-12 and 0 < result["alpha_min"] and result["alpha_max"] < 1
    ok = ok and result["max_grad_rel_error"] < 1e-4
    result["passed"] = ok
    print(json.dumps(result, sort_keys=True))
    if args.json:
        _write_json(args.json, result)
    if not ok:
        raise ValidationError("copy-mixture self-test failed")


def _run_corrector(command: str, lines: Sequence[str]) -> list[str]:
    proc = subprocess.run(
        shlex.split(command),
        input="".join(line + "\n" for line in lines),
        capture_output=True,
        text=True,
        encoding="utf-8",
    )
    if proc.returncode != 0:
        raise ValidationError(f"corrector exited with status {proc.returncode}: {proc.stderr.strip()[:200]}")
    out = proc.stdout.splitlines()
    if len(out) != len(lines):
        raise ValidationError(f"corrector returned {len(out)} lines for {len(lines)} inputs")
    return out


def cmd_pipeline(args) -> None:
    lm, vocab, caps = NGramLm.load(args.lm), Vocab.load(args.vocab), _capitals(args.capitals)
    lex, drop = _lexicon(args), _drop_list(args.drop)
    spell = SpellConfig()
    post = PostprocessConfig(args.max_remove, exhaustive_edit_limit=max(args.exhaustive_limit, args.max_remove))
    checked = [" ".join(correct(tuple(line.split()), lm, vocab, caps, spell)[0]) for line in _read_lines(args.in_)]
    corrected = _run_corrector(args.corrector, checked) if args.corrector else checked
    outputs = []
    for s_line, h_line in zip(checked, corrected):
        _, out = _postprocess_line(tuple(s_line.split()), tuple(h_line.split()), lm, lex, drop, post, "<unk>")
        outputs.append(" ".join(out))
    with atomic_output(args.out) as fh:
        fh.write("".join(o + "\n" for o in outputs))


def cmd_lexicon_build(args) -> None:
    priority = tuple(x.strip().upper() for x in args.priority.split(","))
    lex = build_lexicon(_read_lines(args.nouns), _read_lines(args.verbs), _read_lines(args.preps), priority)
    with atomic_output(args.out) as fh:
        json.dump(lex.to_json(), fh, indent=1, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_INVALID
        args = resolve_options(ns.command, ns)
        # "in" is a keyword; expose it as in_
        args.in_ = getattr(args, "in", None)
        logging.basicConfig(level=args.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
        HANDLERS[ns.command](args)
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, LmError, BpeError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"gecforge: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"gecforge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
