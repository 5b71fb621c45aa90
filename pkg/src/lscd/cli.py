"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .align import LinearMap, Method, SelfLearningConfig, align_pair
from .corpus import load_targets
from .errors import ConfigError, LscdError, NumericError
from .evaluation import evaluate_dirs
from .lsc import (
    read_scores,
    score_targets,
    threshold_binary,
    threshold_global,
    threshold_nearest_neighbors,
    write_scores,
    write_task1,
    write_task2,
)
from .sgns import SgnsConfig, train
from .space import load_space, save_space

log = logging.getLogger("lscd")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_sgns_args(p, defaults=True):
    d = SgnsConfig()
    g = p.add_argument_group("skip-gram training")
    sup = argparse.SUPPRESS
    g.add_argument("--dim", type=int, default=d.dim if defaults else sup)
    g.add_argument("--epochs", type=int, default=d.epochs if defaults else sup)
    g.add_argument("--negatives", type=int, default=d.negatives if defaults else sup)
    g.add_argument("--window", type=int, default=d.window if defaults else sup)
    g.add_argument("--min-count", type=int, default=d.min_count if defaults else sup)
    g.add_argument("--initial-lr", type=float, default=d.initial_lr if defaults else sup)
    g.add_argument("--final-lr", type=float, default=d.final_lr if defaults else sup)
    g.add_argument("--subsample", dest="subsample_t", type=float, default=d.subsample_t if defaults else sup)
    g.add_argument("--workers", type=int, default=d.workers if defaults else sup)
    g.add_argument("--shuffle", action="store_true", default=d.shuffle if defaults else sup)


_SGNS_KEYS = ("dim", "epochs", "negatives", "window", "min_count", "initial_lr", "final_lr", "subsample_t", "workers", "shuffle")


def _sgns_from_args(args, base=None):
    cfg = base or SgnsConfig()
    for key in _SGNS_KEYS:
        if hasattr(args, key):
            setattr(cfg, key, getattr(args, key))
    return cfg


def cmd_train(args):
    from .pipeline import read_corpus_input

    corpus = read_corpus_input(args.corpus)
    cfg = _sgns_from_args(args)
    cfg.seed = args.seed
    space = train(corpus, cfg)
    save_space(space, args.output, binary=not args.text)
    print(f"{args.output}: {len(space)} words x {space.dim} dims")


PAIR_FILES = ("source.emb", "target.emb", "map.txt")


def cmd_align(args):
    source = load_space(args.source)
    target = load_space(args.target)
    targets = load_targets(args.targets) if args.targets else None
    pair = align_pair(
        source, target, args.method,
        pipeline.DIRECTIONS[args.direction],
        exclude=targets.words if targets else (),
        reg=args.reg,
        self_learning=SelfLearningConfig(vocab_cutoff=args.vocab_cutoff or None),
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    save_space(pair.source_aligned, out / "source.emb")
    save_space(pair.target_aligned, out / "target.emb")
    pair.map.save(out / "map.txt")
    if pair.dictionary is not None:
        pair.dictionary.save(out / "dictionary.tsv")
    if args.targets:
        shutil.copyfile(args.targets, out / "targets.txt")
    print(f"{out}: {pair.map.method.value} map, direction {pair.map.direction.value}")


def _load_pair(directory):
    from .align import AlignedPair

    d = Path(directory)
    for name in PAIR_FILES:
        if not (d / name).exists():
            raise ConfigError(f"{d} is not an aligned-pair directory (missing {name})")
    return AlignedPair(load_space(d / "source.emb"), load_space(d / "target.emb"), LinearMap.load(d / "map.txt"))


def _pair_targets(directory, explicit=None):
    path = Path(explicit) if explicit else Path(directory) / "targets.txt"
    if not path.exists():
        raise ConfigError(f"no target list given and {path} does not exist")
    return load_targets(path)


def cmd_score(args):
    pair = _load_pair(args.pair)
    targets = _pair_targets(args.pair, args.targets)
    scores = score_targets(pair, targets.words)
    write_scores(args.output, scores)
    if args.task2:
        Path(args.task2).parent.mkdir(parents=True, exist_ok=True)
        write_task2(args.task2, scores)
    for s in scores:
        print(f"{s.word}\t{s.cosine:.6f}\t{s.degree:.6f}" + ("\tmissing" if s.missing else ""))


def _parse_assignment(text):
    lang, sep, value = text.partition("=")
    if not sep or not lang or not value:
        raise UsageError(f"expected LANG=PATH, got {text!r}")
    return lang, value


def cmd_classify(args):
    inputs = dict(_parse_assignment(a) for a in args.inputs)
    out = Path(args.output) / "task1"
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    if args.rule == "nn":
        for lang, d in inputs.items():
            pair = _load_pair(d)
            targets = _pair_targets(d)
            rule, verdicts, _ = threshold_nearest_neighbors(pair, targets.words, args.k)
            results[lang] = (rule, verdicts)
    else:
        per_lang = {}
        for lang, src in inputs.items():
            if Path(src).is_dir():
                per_lang[lang] = score_targets(_load_pair(src), _pair_targets(src).words)
            else:
                per_lang[lang] = read_scores(src)
        if args.rule == "bin":
            results = {lang: threshold_binary(s, args.statistic) for lang, s in per_lang.items()}
        else:
            rule, verdicts = threshold_global(per_lang, args.statistic, args.pooling)
            results = {lang: (rule, v) for lang, v in verdicts.items()}
    for lang, (rule, verdicts) in results.items():
        write_task1(out / f"{lang}.txt", verdicts)
        changed = sum(v.changed for v in verdicts)
        print(f"{lang}: threshold {rule.value:.6f} ({rule.kind.value}), {changed}/{len(verdicts)} changed")


def cmd_evaluate(args):
    report = evaluate_dirs(args.answers, args.gold, args.languages or None)
    print(report.to_text())
    if args.output:
        report.write(args.output)


def _run_config(args) -> pipeline.RunConfig:
    if getattr(args, "manifest", None):
        return pipeline.config_from_manifest(args.manifest, output=args.output)
    cfg = pipeline.RunConfig()
    if args.config:
        cfg = pipeline.load_config(args.config, cfg)
    if args.preset:
        pipeline.apply_preset(cfg, args.preset)
    for key in ("method", "direction", "threshold", "statistic", "seed", "reg", "nn_k", "pooling", "output"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if args.vocab_cutoff is not None:
        cfg.vocab_cutoff = args.vocab_cutoff or None
    cfg.sgns = _sgns_from_args(args, cfg.sgns)
    if args.data_root:
        cfg.languages.update(pipeline.semeval_languages(args.data_root))
    for text in args.lang or []:
        lang, value = _parse_assignment(text)
        parts = value.split(",")
        if len(parts) != 3:
            raise UsageError(f"--lang expects LANG=EARLIER,LATER,TARGETS, got {text!r}")
        cfg.languages[lang] = pipeline.LanguageInput(*parts)
    return cfg


def cmd_run(args):
    cfg = _run_config(args)
    manifest = pipeline.run_pipeline(cfg)
    print(f"wrote {len(manifest['outputs'])} files to {cfg.output}")
    if args.gold:
        report = pipeline.evaluate_run(cfg.output, args.gold, list(cfg.languages))
        report.write(cfg.output)
        print(report.to_text())


def cmd_sweep(args):
    cfg = _run_config(args)
    try:
        dims = [int(d) for d in args.dims.split(",") if d.strip()]
    except ValueError:
        raise UsageError(f"--dims must be comma-separated integers, got {args.dims!r}") from None
    rows = pipeline.sweep_dimensions(cfg.validate(), dims, args.gold)
    print(pipeline.sweep_table(rows))
    print("expected optimum region for ranking: dims 100-175")


def _add_run_args(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--preset", choices=sorted(pipeline.PRESETS))
    p.add_argument("--lang", action="append", metavar="LANG=EARLIER,LATER,TARGETS",
                   help="a language's corpora (file or directory) and target list; repeatable")
    p.add_argument("--data-root", help="directory laid out like the SemEval-2020 task 1 release")
    p.add_argument("--method", choices=[m.value for m in Method], default=None)
    p.add_argument("--direction", choices=sorted(pipeline.DIRECTIONS), default=None)
    p.add_argument("--threshold", choices=pipeline.THRESHOLDS, default=None)
    p.add_argument("--statistic", choices=("mean", "median"), default=None)
    p.add_argument("--pooling", choices=("pooled", "mean_of_means"), default=None)
    p.add_argument("--reg", type=float, default=None)
    p.add_argument("--nn-k", type=int, default=None)
    p.add_argument("--vocab-cutoff", type=int, default=None, help="self-learning vocabulary size (0 = all)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None)
    _add_sgns_args(p, defaults=False)


def build_parser():
    parser = Parser(prog="lscd", description="Lexical semantic change detection with aligned embedding spaces")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("train", help="train a skip-gram space on one corpus")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--text", action="store_true", help="write the word2vec text format")
    p.add_argument("--seed", type=int, default=1)
    _add_sgns_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("align", help="map the earlier space and the later space into one space")
    p.add_argument("source", help="space of the earlier corpus")
    p.add_argument("target", help="space of the later corpus")
    p.add_argument("-o", "--output", required=True, help="aligned-pair directory")
    p.add_argument("--method", choices=[m.value for m in Method], default="cca")
    p.add_argument("--direction", choices=sorted(pipeline.DIRECTIONS), default="forward")
    p.add_argument("--targets", help="target words, excluded from the seed dictionary")
    p.add_argument("--reg", type=float, default=1e-8)
    p.add_argument("--vocab-cutoff", type=int, default=20000)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("score", help="cosine and degree of change for each target")
    p.add_argument("pair", help="aligned-pair directory")
    p.add_argument("--targets")
    p.add_argument("-o", "--output", required=True, help="scores TSV")
    p.add_argument("--task2", help="also write a ranking answer file")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("classify", help="binary verdicts from scores or aligned pairs")
    p.add_argument("inputs", nargs="+", metavar="LANG=PATH", help="scores TSV or aligned-pair directory")
    p.add_argument("--rule", choices=pipeline.THRESHOLDS, default="bin")
    p.add_argument("--statistic", choices=("mean", "median"), default="mean")
    p.add_argument("--pooling", choices=("pooled", "mean_of_means"), default="pooled")
    p.add_argument("-k", type=int, default=100, help="neighbours for the nn rule")
    p.add_argument("-o", "--output", required=True, help="answer directory")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score answer files against gold files")
    p.add_argument("answers", help="answer directory with task1/ and task2/")
    p.add_argument("gold", help="gold directory with task1/ and task2/")
    p.add_argument("--languages", nargs="*")
    p.add_argument("-o", "--output", help="write report.txt and report.json here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline for one or more languages")
    _add_run_args(p)
    p.add_argument("--manifest", help="re-run exactly from a previous run's manifest.json")
    p.add_argument("--gold", help="evaluate the answers against this gold directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat the pipeline over embedding sizes")
    _add_run_args(p)
    p.add_argument("--dims", required=True, help="comma-separated sizes, e.g. 25,50,100,150")
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"lscd: error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"lscd: error: {exc}", file=sys.stderr)
        return 1
    except LscdError as exc:
        print(f"lscd: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"lscd: numeric error: {exc}", file=sys.stderr)
        return NumericError.exit_code
    except OSError as exc:
        print(f"lscd: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
