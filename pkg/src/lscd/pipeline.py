"""End-to-end runs: train, align, score and classify every language.

A run writes, under its output directory::

    spaces/<lang>.c1.emb  spaces/<lang>.c2.emb
    maps/<lang>.map.txt   dictionaries/<lang>.tsv
    scores/<lang>.tsv
    answer/task1/<lang>.txt  answer/task2/<lang>.txt
    manifest.json

Outputs are assembled in a temporary sibling directory and renamed into
place only when every stage has succeeded.
"""

from __future__ import annotations

import contextlib
import dataclasses
import hashlib
import json
import logging
import os
import shutil
import tempfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .align import Direction, Method, SelfLearningConfig, align_pair
from .corpus import Corpus, TargetSet, load_corpus, load_targets, missing_targets
from .errors import ConfigError, LscdError
from .evaluation import EvalReport
from .lsc import (
    score_targets,
    threshold_binary,
    threshold_global,
    threshold_nearest_neighbors,
    write_scores,
    write_task1,
    write_task2,
)
from .sgns import SgnsConfig, train
from .space import save_space

log = logging.getLogger(__name__)

THRESHOLDS = ("bin", "gl", "nn")
DIRECTIONS = {"forward": Direction.S_TO_T, "reversed": Direction.T_TO_S}

PRESETS = {
    "cca-nn": dict(method="cca", direction="forward", threshold="nn", statistic="mean"),
    "cca-nn-r": dict(method="cca", direction="reversed", threshold="nn", statistic="mean"),
    "cca-bin": dict(method="cca", direction="forward", threshold="bin", statistic="mean"),
    "cca-bin-r": dict(method="cca", direction="reversed", threshold="bin", statistic="mean"),
    "ort-bin": dict(method="orthogonal", direction="forward", threshold="bin", statistic="median"),
    "ort-gl": dict(method="orthogonal", direction="forward", threshold="gl", statistic="median"),
    "uns-bin": dict(method="unsupervised", direction="forward", threshold="bin", statistic="median"),
    "uns-gl": dict(method="unsupervised", direction="forward", threshold="gl", statistic="median"),
}


@dataclass
class LanguageInput:
    earlier: str
    later: str
    targets: str


@dataclass
class RunConfig:
    languages: dict[str, LanguageInput] = field(default_factory=dict)
    sgns: SgnsConfig = field(default_factory=SgnsConfig)
    method: str = "cca"
    direction: str = "forward"
    threshold: str = "bin"
    statistic: str = "mean"
    output: str = "out"
    seed: int = 1
    reg: float = 1e-8
    nn_k: int = 100
    pooling: str = "pooled"
    missing_changed: bool = True
    vocab_cutoff: int | None = 20000
    preset: str | None = None

    def validate(self):
        Method(self.method)
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {sorted(DIRECTIONS)}, got {self.direction!r}")
        if self.threshold not in THRESHOLDS:
            raise ConfigError(f"threshold must be one of {THRESHOLDS}, got {self.threshold!r}")
        if self.statistic not in ("mean", "median"):
            raise ConfigError(f"statistic must be mean or median, got {self.statistic!r}")
        if self.pooling not in ("pooled", "mean_of_means"):
            raise ConfigError(f"pooling must be pooled or mean_of_means, got {self.pooling!r}")
        if not self.languages:
            raise ConfigError("no languages configured")
        self.sgns.validate()
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        d = dict(d)
        langs = {k: LanguageInput(**v) for k, v in d.pop("languages", {}).items()}
        sgns = SgnsConfig(**d.pop("sgns", {}))
        return cls(languages=langs, sgns=sgns, **d)


def preset_config(name: str, **overrides) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    cfg = RunConfig(preset=name, **PRESETS[name])
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


def apply_preset(cfg: RunConfig, name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    for k, v in PRESETS[name].items():
        setattr(cfg, k, v)
    cfg.preset = name
    return cfg


# Flat "key = value" configuration files.

_COERCE = {
    "seed": int, "reg": float, "nn_k": int, "missing_changed": lambda s: s.lower() in ("1", "true", "yes"),
    "vocab_cutoff": lambda s: None if s.lower() in ("none", "0", "") else int(s),
}


def _coerce_sgns(key, value):
    ftype = {f.name: f.type for f in dataclasses.fields(SgnsConfig)}[key]
    if ftype in ("bool", bool):
        return value.lower() in ("1", "true", "yes")
    if ftype in ("int", int):
        return int(value)
    return float(value)


def parse_config_text(text: str, cfg: RunConfig | None = None) -> RunConfig:
    """Read the flat configuration format.

    Keys are ``preset``, the top-level RunConfig fields, ``sgns.<field>``
    and ``language.<label>.{earlier,later,targets}``; ``#`` starts a
    comment. A ``preset`` line is applied before the other keys so that
    explicit keys override it.
    """
    cfg = cfg or RunConfig()
    items = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {i}: expected 'key = value'")
        items.append((i, key.strip(), value.strip()))
    for _, key, value in items:
        if key == "preset":
            apply_preset(cfg, value)
    langs = {}
    sgns_fields = {f.name for f in dataclasses.fields(SgnsConfig)}
    top_fields = {f.name for f in dataclasses.fields(RunConfig)} - {"languages", "sgns", "preset"}
    for i, key, value in items:
        if key == "preset":
            continue
        parts = key.split(".")
        if parts[0] == "sgns" and len(parts) == 2 and parts[1] in sgns_fields:
            setattr(cfg.sgns, parts[1], _coerce_sgns(parts[1], value))
        elif parts[0] == "language" and len(parts) == 3 and parts[2] in ("earlier", "later", "targets"):
            langs.setdefault(parts[1], {})[parts[2]] = value
        elif len(parts) == 1 and key in top_fields:
            setattr(cfg, key, _COERCE.get(key, str)(value))
        else:
            raise ConfigError(f"config line {i}: unknown key {key!r}")
    for label, entry in langs.items():
        missing = {"earlier", "later", "targets"} - set(entry)
        if missing:
            raise ConfigError(f"language {label!r} lacks {', '.join(sorted(missing))}")
        cfg.languages[label] = LanguageInput(**entry)
    return cfg


def load_config(path, cfg: RunConfig | None = None) -> RunConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), cfg)


class StageError(LscdError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        super().__init__(f"stage {stage!r} failed: {cause}")


@contextlib.contextmanager
def stage(name):
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except (LscdError, OSError, ValueError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _corpus_files(path) -> list[Path]:
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file() and (p.suffix in (".txt", ".gz")))
        if not files:
            raise ConfigError(f"no .txt or .gz corpus files in {path}")
        return files
    return [path]


def read_corpus_input(path, label="") -> Corpus:
    """A corpus file, or a directory whose .txt/.gz files are concatenated
    in name order."""
    sentences = []
    for f in _corpus_files(path):
        sentences.extend(load_corpus(f).sentences)
    return Corpus(sentences, label or str(path))


def derived_seed(seed: int, language: str, period: int) -> int:
    return zlib.crc32(f"{seed}:{language}:{period}".encode()) % (2**31 - 1) + 1


def semeval_languages(root) -> dict[str, LanguageInput]:
    """Discover the task 1 data layout: ``<root>/<dir>/{corpus1,corpus2}/lemma``
    and ``targets.txt``; language labels come from the directory names."""
    names = {"eng": "english", "ger": "german", "lat": "latin", "swe": "swedish"}
    root = Path(root)
    found = {}
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        if not (d / "targets.txt").exists():
            continue
        code = d.name.rsplit("_", 1)[-1]
        label = names.get(code, d.name)
        found[label] = LanguageInput(
            str(d / "corpus1" / "lemma"), str(d / "corpus2" / "lemma"), str(d / "targets.txt")
        )
    if not found:
        raise ConfigError(f"no language directories with targets.txt under {root}")
    return found


def semeval_gold(root) -> dict:
    """Gold data from the task release's ``<dir>/truth/{binary,graded}.txt``,
    keyed by language label."""
    from .evaluation import GoldData, _label, read_tsv

    gold = {}
    for label, spec in semeval_languages(root).items():
        truth = Path(spec.targets).parent / "truth"
        if (truth / "binary.txt").exists() or (truth / "graded.txt").exists():
            gold[label] = GoldData(
                read_tsv(truth / "binary.txt", _label) if (truth / "binary.txt").exists() else {},
                read_tsv(truth / "graded.txt", float) if (truth / "graded.txt").exists() else {},
            )
    return gold


@dataclass
class LanguageRun:
    targets: TargetSet
    pair: object
    scores: list
    verdicts: list | None = None
    nn_sizes: list | None = None


def _train_language(label, spec, cfg: RunConfig, workdir: Path):
    with stage(f"{label}:load"):
        c1 = read_corpus_input(spec.earlier, "C1")
        c2 = read_corpus_input(spec.later, "C2")
        targets = load_targets(spec.targets)
    spaces = []
    for period, corpus in ((1, c1), (2, c2)):
        with stage(f"{label}:train-c{period}"):
            sgns = dataclasses.replace(cfg.sgns, seed=derived_seed(cfg.seed, label, period))
            space = train(corpus, sgns)
            missing_targets(targets, space.vocab)
            save_space(space, workdir / "spaces" / f"{label}.c{period}.emb")
            spaces.append(space)
    return targets, spaces[0], spaces[1]


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every configured language and promote the outputs.

    Returns the manifest dictionary.
    """
    cfg.validate()
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.tmp-", dir=out.parent))
    try:
        for sub in ("spaces", "maps", "dictionaries", "scores", "answer/task1", "answer/task2"):
            (tmp / sub).mkdir(parents=True, exist_ok=True)
        runs = {}
        for label, spec in cfg.languages.items():
            targets, s1, s2 = _train_language(label, spec, cfg, tmp)
            with stage(f"{label}:align"):
                pair = align_pair(
                    s1, s2, cfg.method, DIRECTIONS[cfg.direction], exclude=targets.words, reg=cfg.reg,
                    self_learning=SelfLearningConfig(vocab_cutoff=cfg.vocab_cutoff),
                )
                pair.map.save(tmp / "maps" / f"{label}.map.txt")
                if pair.dictionary is not None:
                    pair.dictionary.save(tmp / "dictionaries" / f"{label}.tsv")
            with stage(f"{label}:score"):
                scores = score_targets(pair, targets.words)
            runs[label] = LanguageRun(targets, pair, scores)
        with stage("classify"):
            _classify(runs, cfg)
        for label, run in runs.items():
            with stage(f"{label}:write"):
                scores = run.scores
                if run.nn_sizes is not None:
                    scores = [dataclasses.replace(s, nn_intersection=n) for s, n in zip(scores, run.nn_sizes)]
                write_scores(tmp / "scores" / f"{label}.tsv", scores)
                write_task1(tmp / "answer" / "task1" / f"{label}.txt", run.verdicts)
                write_task2(tmp / "answer" / "task2" / f"{label}.txt", run.scores)
        manifest = _manifest(cfg, tmp)
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        _promote(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return manifest


def _classify(runs, cfg: RunConfig):
    if cfg.threshold == "bin":
        for run in runs.values():
            _, run.verdicts = threshold_binary(run.scores, cfg.statistic, cfg.missing_changed)
    elif cfg.threshold == "gl":
        _, verdicts = threshold_global(
            {k: r.scores for k, r in runs.items()}, cfg.statistic, cfg.pooling, cfg.missing_changed
        )
        for label, run in runs.items():
            run.verdicts = verdicts[label]
    else:
        for run in runs.values():
            _, run.verdicts, run.nn_sizes = threshold_nearest_neighbors(
                run.pair, run.targets.words, cfg.nn_k, cfg.missing_changed
            )


def _manifest(cfg: RunConfig, outdir: Path) -> dict:
    inputs = {}
    for label, spec in cfg.languages.items():
        for role in ("earlier", "later", "targets"):
            for f in _corpus_files(getattr(spec, role)):
                inputs[str(f)] = sha256_file(f)
    outputs = {
        str(p.relative_to(outdir)): sha256_file(p)
        for p in sorted(outdir.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    return {
        "tool": "lscd",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "inputs": inputs,
        "outputs": outputs,
    }


def _promote(tmp: Path, out: Path):
    if out.exists():
        old = out.with_name(f".{out.name}.old-{os.getpid()}")
        os.replace(out, old)
        os.replace(tmp, out)
        shutil.rmtree(old, ignore_errors=True)
    else:
        os.replace(tmp, out)


def config_from_manifest(path, output=None, check_inputs=True) -> RunConfig:
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = RunConfig.from_dict(manifest["config"])
    if output is not None:
        cfg.output = str(output)
    if check_inputs:
        for f, digest in manifest.get("inputs", {}).items():
            if not Path(f).exists() or sha256_file(f) != digest:
                raise ConfigError(f"input {f} is missing or changed since the manifest was written")
    return cfg


def evaluate_run(outdir, gold_dir, languages) -> EvalReport:
    from .evaluation import evaluate_dirs

    return evaluate_dirs(Path(outdir) / "answer", gold_dir, languages)


def sweep_dimensions(cfg: RunConfig, dims, gold_dir) -> list[dict]:
    """Run the pipeline once per embedding size and evaluate each run.

    Returns one row per (dim, language) with keys dim, language,
    accuracy, spearman and error; a failed dimension yields rows whose
    error field holds the message and the sweep goes on.
    """
    if not dims:
        raise ConfigError("no dimensions to sweep")
    base = Path(cfg.output)
    rows = []
    for dim in dims:
        run_cfg = dataclasses.replace(cfg, sgns=dataclasses.replace(cfg.sgns, dim=int(dim)), output=str(base / f"dim-{dim}"))
        try:
            run_pipeline(run_cfg)
            report = evaluate_run(run_cfg.output, gold_dir, list(cfg.languages))
        except LscdError as exc:
            log.error("dimension %s failed: %s", dim, exc)
            for lang in cfg.languages:
                rows.append(dict(dim=int(dim), language=lang, accuracy=None, spearman=None, error=str(exc)))
            continue
        for lang, res in report.per_language.items():
            rows.append(dict(dim=int(dim), language=lang, accuracy=res.accuracy, spearman=res.spearman, error=None))
    write_sweep(rows, base)
    return rows


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def write_sweep(rows, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "sweep.tsv", "w", encoding="utf-8") as fh:
        fh.write("dim\tlanguage\taccuracy\tspearman\tstatus\n")
        for r in rows:
            status = "ok" if r["error"] is None else "FAILED: " + r["error"].replace("\t", " ").replace("\n", " ")
            fh.write(f"{r['dim']}\t{r['language']}\t{_fmt(r['accuracy'])}\t{_fmt(r['spearman'])}\t{status}\n")
    series = outdir / "series"
    series.mkdir(exist_ok=True)
    for lang in dict.fromkeys(r["language"] for r in rows):
        with open(series / f"{lang}.tsv", "w", encoding="utf-8") as fh:
            fh.write("dim\tspearman\n")
            for r in rows:
                if r["language"] == lang and r["spearman"] is not None:
                    fh.write(f"{r['dim']}\t{r['spearman']:.6f}\n")


def sweep_table(rows) -> str:
    langs = list(dict.fromkeys(r["language"] for r in rows))
    dims = list(dict.fromkeys(r["dim"] for r in rows))
    cell = {(r["dim"], r["language"]): r for r in rows}
    lines = ["dim".ljust(6) + "".join(l[:10].rjust(11) for l in langs) + "avg".rjust(11)]
    for d in dims:
        vals = []
        row = str(d).ljust(6)
        for l in langs:
            r = cell.get((d, l))
            if r is None or r["error"] is not None:
                row += "FAILED".rjust(11)
            elif r["spearman"] is None:
                row += "-".rjust(11)
            else:
                vals.append(r["spearman"])
                row += f"{r['spearman']:.3f}".rjust(11)
        row += (f"{sum(vals) / len(vals):.3f}" if vals else "-").rjust(11)
        lines.append(row)
    return "\n".join(lines)
