"""Scoring answers against gold data."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import CoverageError, DataError, FormatError, UndefinedCorrelationError


@dataclass
class GoldData:
    binary: dict[str, int] = field(default_factory=dict)
    graded: dict[str, float] = field(default_factory=dict)


def read_tsv(path, cast):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"{path}: expected 'word<TAB>value'", row=i)
            try:
                out[parts[0]] = cast(parts[1])
            except ValueError:
                raise FormatError(f"{path}: bad value {parts[1]!r}", row=i) from None
    return out


def _label(value):
    v = int(value)
    if v not in (0, 1):
        raise ValueError(value)
    return v


def load_gold(root, language) -> GoldData:
    """Read ``root/task1/<language>.txt`` and ``root/task2/<language>.txt``;
    either may be absent."""
    root = Path(root)
    t1 = root / "task1" / f"{language}.txt"
    t2 = root / "task2" / f"{language}.txt"
    if not t1.exists() and not t2.exists():
        raise CoverageError(f"no gold files for language {language!r} under {root}")
    return GoldData(
        read_tsv(t1, _label) if t1.exists() else {},
        read_tsv(t2, float) if t2.exists() else {},
    )


def _as_labels(pred):
    if isinstance(pred, Mapping):
        return {w: int(v) for w, v in pred.items()}
    return {v.word: int(v.changed) for v in pred}


def accuracy(pred, gold: Mapping[str, int] | GoldData) -> float:
    """Fraction of gold words whose predicted label matches.

    ``pred`` is a word->label mapping or a sequence of verdicts.
    """
    if isinstance(gold, GoldData):
        gold = gold.binary
    labels = _as_labels(pred)
    if not gold:
        raise DataError("empty gold label set")
    for w in gold:
        if w not in labels:
            raise CoverageError(f"no prediction for gold word {w!r}")
    return sum(labels[w] == int(g) for w, g in gold.items()) / len(gold)


def average_ranks(values) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(pred_scores: Mapping[str, float], gold_scores: Mapping[str, float]) -> float:
    """Spearman's rho as the Pearson correlation of average ranks.

    Raises UndefinedCorrelationError when either ranking is constant.
    """
    if set(pred_scores) != set(gold_scores):
        missing = sorted(set(gold_scores) - set(pred_scores)) or sorted(set(pred_scores) - set(gold_scores))
        raise CoverageError(f"score key sets differ, e.g. {missing[0]!r}")
    if len(gold_scores) < 2:
        raise UndefinedCorrelationError("Spearman needs at least two words")
    words = list(gold_scores)
    rp = average_ranks([pred_scores[w] for w in words])
    rg = average_ranks([gold_scores[w] for w in words])
    rp -= rp.mean()
    rg -= rg.mean()
    denom = math.sqrt(float(rp @ rp) * float(rg @ rg))
    if denom == 0:
        raise UndefinedCorrelationError("a ranking has zero variance")
    return float(np.clip((rp @ rg) / denom, -1.0, 1.0))


def optimal_threshold(gold_graded: Mapping[str, float], gold_binary: Mapping[str, int]) -> tuple[float, float]:
    """Best cut of the rule ``degree > t -> changed`` against the labels.

    Candidates are -inf, the midpoints between consecutive distinct
    scores, and +inf; among equally accurate cuts the smallest wins.
    """
    words = list(gold_binary)
    if len(words) < 2:
        raise DataError("optimal threshold needs at least two words")
    for w in words:
        if w not in gold_graded:
            raise CoverageError(f"no graded score for {w!r}")
    x = np.array([gold_graded[w] for w in words], dtype=np.float64)
    y = np.array([int(gold_binary[w]) for w in words])
    distinct = np.unique(x)
    cuts = np.concatenate(([-np.inf], (distinct[:-1] + distinct[1:]) / 2, [np.inf]))
    best_t, best_acc = None, -1.0
    for t in cuts:
        acc = float(np.mean((x > t).astype(int) == y))
        if acc > best_acc:
            best_t, best_acc = float(t), acc
    return best_t, best_acc


@dataclass
class LanguageResult:
    accuracy: float | None = None
    spearman: float | None = None
    n: int = 0
    threshold: dict | None = None


@dataclass
class EvalReport:
    per_language: dict[str, LanguageResult]

    @property
    def averages(self) -> dict[str, float | None]:
        out = {}
        for key in ("accuracy", "spearman"):
            vals = [getattr(r, key) for r in self.per_language.values() if getattr(r, key) is not None]
            out[key] = float(np.mean(vals)) if vals else None
        return out

    def to_dict(self):
        return {
            "languages": {
                lang: {"accuracy": r.accuracy, "spearman": r.spearman, "n": r.n, "threshold": r.threshold}
                for lang, r in self.per_language.items()
            },
            "average": self.averages,
        }

    def to_text(self) -> str:
        def fmt(v):
            return "-" if v is None else f"{v:.3f}"

        lines = [f"{'language':<12}{'n':>5}{'accuracy':>10}{'spearman':>10}{'opt_t':>9}{'opt_acc':>9}"]
        for lang, r in self.per_language.items():
            t = r.threshold or {}
            lines.append(
                f"{lang:<12}{r.n:>5}{fmt(r.accuracy):>10}{fmt(r.spearman):>10}"
                f"{fmt(t.get('t')):>9}{fmt(t.get('accuracy')):>9}"
            )
        avg = self.averages
        lines.append(f"{'Avg':<12}{'':>5}{fmt(avg['accuracy']):>10}{fmt(avg['spearman']):>10}")
        return "\n".join(lines)

    def write(self, directory, stem="report"):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{stem}.txt").write_text(self.to_text() + "\n", encoding="utf-8")
        (directory / f"{stem}.json").write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def evaluate_language(gold: GoldData, binary_pred=None, graded_pred=None, with_optimal=False) -> LanguageResult:
    res = LanguageResult(n=max(len(gold.binary), len(gold.graded)))
    if binary_pred is not None and gold.binary:
        res.accuracy = accuracy(binary_pred, gold.binary)
    if graded_pred is not None and gold.graded:
        preds = {w: graded_pred[w] for w in gold.graded if w in graded_pred}
        if len(preds) != len(gold.graded):
            missing = next(w for w in gold.graded if w not in graded_pred)
            raise CoverageError(f"no graded prediction for gold word {missing!r}")
        try:
            res.spearman = spearman(preds, gold.graded)
        except UndefinedCorrelationError:
            res.spearman = None
    if with_optimal and gold.binary and gold.graded:
        t, acc = optimal_threshold(gold.graded, gold.binary)
        res.threshold = {"t": t, "accuracy": acc}
    return res


def build_report(per_language: Mapping[str, LanguageResult]) -> EvalReport:
    if not per_language:
        raise DataError("a report needs at least one language")
    return EvalReport(dict(per_language))


def evaluate_dirs(answer_dir, gold_dir, languages=None, with_optimal=True) -> EvalReport:
    """Score ``answer/task{1,2}/<lang>.txt`` files against the gold
    directory with the same layout."""
    answer_dir, gold_dir = Path(answer_dir), Path(gold_dir)
    if languages is None:
        found = {p.stem for sub in ("task1", "task2") for p in (answer_dir / sub).glob("*.txt")}
        languages = sorted(found)
    results = {}
    for lang in languages:
        gold = load_gold(gold_dir, lang)
        t1 = answer_dir / "task1" / f"{lang}.txt"
        t2 = answer_dir / "task2" / f"{lang}.txt"
        results[lang] = evaluate_language(
            gold,
            read_tsv(t1, _label) if t1.exists() else None,
            read_tsv(t2, float) if t2.exists() else None,
            with_optimal,
        )
    return build_report(results)
