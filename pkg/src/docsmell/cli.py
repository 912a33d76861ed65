"""Command-line entry point: ``docsmell <subcommand> ...``.

Exit status is 0 on success, 1 on data or model errors and 2 on usage
errors. All randomness derives from ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from docsmell import __version__
from docsmell.corpus import (
    SMELLS,
    Corpus,
    label_distribution,
    load_corpus,
    parse_javadoc_html,
    parse_jsonl,
    write_jsonl,
)
from docsmell.errors import DocSmellError, UnlabeledCorpus
from docsmell.evaluation import (
    EvalReport,
    cohen_kappa,
    cross_validate,
    iterative_stratified_folds,
    label_metrics,
    permutation_importance,
    phi_matrix,
    reports_csv,
    reports_markdown,
)
from docsmell.metrics import METRIC_NAMES, Lexicon, compute_metrics, default_lexicon, metrics_csv
from docsmell.pipeline import FeatureSpec, FittedModel, ModelSpec, fit_model, fit_on_corpus
from docsmell.rules import SELECTORS

FORMATS = ("json", "csv", "md")


class CliError(Exception):
    """Data/model problem reported with exit status 1."""


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _lexicon(args) -> Lexicon:
    if getattr(args, "lexicon", None):
        return Lexicon.load(args.lexicon)
    return default_lexicon()


def _load(path: str) -> Corpus:
    try:
        return load_corpus(path)
    except DocSmellError as exc:
        raise CliError(f"{path}: {exc}") from None


def _info(msg: str, to_stdout: bool) -> None:
    print(msg, file=sys.stdout if to_stdout else sys.stderr)


# --------------------------------------------------------------------------
# ingest


def cmd_ingest(args) -> int:
    if args.jsonl:
        corpus = _load(args.jsonl)
    else:
        root = Path(args.javadoc_dir)
        if not root.is_dir():
            raise CliError(f"{root}: not a directory")
        units = []
        for path in sorted(p for p in root.rglob("*") if p.suffix.lower() in (".html", ".htm")):
            rel = path.relative_to(root).as_posix()
            try:
                units.extend(parse_javadoc_html(path.read_text(encoding="utf-8"), rel))
            except DocSmellError as exc:
                raise CliError(f"{path}: {exc}") from None
        corpus = Corpus(units)
    _emit(write_jsonl(corpus), args.out)
    _info(f"{len(corpus)} units", bool(args.out and args.out != "-"))
    return 0


# --------------------------------------------------------------------------
# metrics


def cmd_metrics(args) -> int:
    corpus = _load(args.corpus)
    lexicon = _lexicon(args)
    vectors = [compute_metrics(u, lexicon) for u in corpus.units]
    ids = [u.id for u in corpus.units]
    if args.format == "csv":
        text = metrics_csv(ids, vectors)
    elif args.format == "md":
        rows = ["| id | " + " | ".join(METRIC_NAMES) + " |", "|" + "---|" * (len(METRIC_NAMES) + 1)]
        rows += ["| " + " | ".join(map(str, (uid,) + v.as_tuple())) + " |" for uid, v in zip(ids, vectors)]
        text = "\n".join(rows) + "\n"
    else:
        text = "".join(json.dumps({"id": uid, **v.as_dict()}) + "\n" for uid, v in zip(ids, vectors))
    _emit(text, args.out)
    return 0


# --------------------------------------------------------------------------
# train / detect


def _model_spec(args, kind: str | None = None, selector: str | None = None, **overrides) -> ModelSpec:
    return ModelSpec(
        kind=kind or args.model,
        selector=selector or getattr(args, "selector", "p90"),
        lam=overrides.get("lam", args.lam),
        epochs=args.epochs,
        knn_k=overrides.get("knn_k", args.knn_k if isinstance(args.knn_k, int) else args.knn_k[0]),
        smoothing=args.smoothing,
        random_chain=args.random_chain,
    )


def _feature_spec(args, kind: str | None = None) -> FeatureSpec:
    return FeatureSpec(kind or args.features, args.min_df, args.max_features or None)


def cmd_train(args) -> int:
    corpus = _load(args.corpus)
    try:
        fitted = fit_on_corpus(_model_spec(args), corpus, _feature_spec(args), args.seed, _lexicon(args))
    except DocSmellError as exc:
        raise CliError(str(exc)) from None
    fitted.meta = {"seed": args.seed, "trained_on": len(corpus)}
    text = json.dumps(fitted.to_json()) + "\n"
    _emit(text, args.out)
    _info(f"trained {fitted.spec.name} on {len(corpus)} units", bool(args.out and args.out != "-"))
    return 0


def cmd_detect(args) -> int:
    corpus = _load(args.corpus)
    lexicon = _lexicon(args)
    if args.model_file:
        try:
            fitted = FittedModel.load(args.model_file)
        except (OSError, KeyError, ValueError) as exc:
            raise CliError(f"cannot load model {args.model_file}: {exc}") from None
    else:
        source = _load(args.train) if args.train else corpus
        fitted = fit_on_corpus(ModelSpec("rules", selector=args.rules), source, lexicon=lexicon)
    metrics = [compute_metrics(u, lexicon) for u in corpus.units]
    pred = fitted.predict(corpus.units, metrics)
    scores = fitted.scores(corpus.units, metrics)
    lines = []
    for i, unit in enumerate(corpus.units):
        rec = {"id": unit.id, "labels": {name: bool(pred[i, l]) for l, name in enumerate(SMELLS)}}
        if scores is not None:
            rec["scores"] = {name: float(scores[i, l]) for l, name in enumerate(SMELLS)}
        lines.append(json.dumps(rec) + "\n")
    _emit("".join(lines), args.out)

    to_stdout = bool(args.out and args.out != "-")
    counts = pred.sum(axis=0)
    _info(f"{len(corpus)} units; " + ", ".join(f"{n}={int(c)}" for n, c in zip(SMELLS, counts)), to_stdout)
    if corpus.labeled:
        Y = corpus.label_matrix()
        for l, name in enumerate(SMELLS):
            s = label_metrics(Y[:, l], pred[:, l])
            _info(f"{name}: P={s.precision:.3f} R={s.recall:.3f} F1={s.f1:.3f}", to_stdout)
    return 0


# --------------------------------------------------------------------------
# crossval


def _importance(corpus, metrics, spec: ModelSpec, features: FeatureSpec, k: int, seed: int, repeats: int) -> dict:
    """Permutation importance of each rule-metric column, averaged over CV folds."""
    Y = corpus.label_matrix()
    folds = iterative_stratified_folds(Y, k, seed)
    drops: dict[str, list] = {name: [] for name in METRIC_NAMES}
    for fold in range(k):
        train, test = folds.train_indices(fold), folds.test_indices(fold)
        fitted = fit_model(
            spec, [corpus.units[i] for i in train], [metrics[i] for i in train], Y[train], features, seed + fold
        )
        X_test = fitted.features([corpus.units[i] for i in test], [metrics[i] for i in test])
        for col, name in enumerate(METRIC_NAMES):
            res = permutation_importance(fitted.model, X_test, Y[test], col, repeats, seed + fold)
            drops[name].append([res.overall] + [res.per_smell[s] for s in SMELLS])
    out = {}
    for name, rows in drops.items():
        mean = np.mean(rows, axis=0)
        out[name] = {"overall": float(mean[0]), **{s: float(v) for s, v in zip(SMELLS, mean[1:])}}
    return out


def cmd_crossval(args) -> int:
    corpus = _load(args.corpus)
    if not corpus.labeled:
        raise CliError(f"{args.corpus}: {UnlabeledCorpus()}")
    lexicon = _lexicon(args)
    metrics = [compute_metrics(u, lexicon) for u in corpus.units]

    models = list(args.model)
    if "all" in models:
        models = ["rules", "ovr", "cc", "lps", "mlknn"]
    feature_kinds = ["rules", "bow"] if args.features == "all" else [args.features]
    selectors = SELECTORS if args.selectors == "all" else [s.strip() for s in args.selectors.split(",")]

    specs: list[tuple[ModelSpec, FeatureSpec]] = []
    for kind in models:
        if kind == "rules":
            specs += [(_model_spec(args, "rules", sel), _feature_spec(args, "rules")) for sel in selectors]
            continue
        for fk in feature_kinds:
            if kind == "mlknn":
                specs += [(_model_spec(args, kind, knn_k=kk), _feature_spec(args, fk)) for kk in args.knn_k]
            else:
                specs += [(_model_spec(args, kind, lam=lam), _feature_spec(args, fk)) for lam in args.lams]

    reports: list[EvalReport] = []
    importance = {}
    for spec, fspec in specs:
        try:
            rep = cross_validate(corpus, fspec, spec, args.k, args.seed, lexicon, metrics)
        except DocSmellError as exc:
            raise CliError(str(exc)) from None
        if spec.kind in ("ovr", "cc", "lps") and len(args.lams) > 1:
            rep.model = f"{rep.model} (lambda={spec.lam:g})"
        reports.append(rep)
        if args.importance and spec.kind != "rules" and fspec.kind in ("rules", "both"):
            importance[f"{rep.model} / {rep.features}"] = _importance(
                corpus, metrics, spec, fspec, args.k, args.seed, args.repeats
            )

    payload = {"reports": [r.to_json() for r in reports]}
    if importance:
        payload["importance"] = importance
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(_dumps(payload), encoding="utf-8")
        (out / "report.md").write_text(reports_markdown(reports), encoding="utf-8")
        print(f"wrote {len(reports)} reports to {out}")
    elif args.format == "md":
        _emit(reports_markdown(reports), args.out)
    elif args.format == "csv":
        _emit(reports_csv(reports), args.out)
    else:
        _emit(_dumps(payload), args.out)
    return 0


# --------------------------------------------------------------------------
# stats / report


def _kappa(path_a: str, path_b: str) -> dict[str, float]:
    a, b = _load(path_a), _load(path_b)
    if not (a.labeled and b.labeled):
        raise CliError("kappa needs two labeled corpora")
    b_by_id = {u.id: lab for u, lab in zip(b.units, b.labels)}
    missing = [u.id for u in a.units if u.id not in b_by_id]
    if missing or len(a) != len(b):
        raise CliError(f"label files cover different units (e.g. {missing[:1] or '?'})")
    A = a.label_matrix()
    B = np.array([b_by_id[u.id].as_tuple() for u in a.units], dtype=bool)
    return {name: cohen_kappa(A[:, l], B[:, l]) for l, name in enumerate(SMELLS)}


def _phi_csv(phi) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(SMELLS))
    for name, row in zip(SMELLS, phi):
        writer.writerow([name] + ["" if v is None else f"{v:.6f}" for v in row])
    return buf.getvalue()


def cmd_stats(args) -> int:
    result = {}
    phi = None
    if args.corpus:
        corpus = _load(args.corpus)
        if not corpus.labeled:
            raise CliError(f"{args.corpus}: {UnlabeledCorpus()}")
        result["distribution"] = label_distribution(corpus).as_dict()
        if len(corpus) >= 2:
            phi = phi_matrix(corpus.label_matrix())
            result["phi"] = {name: dict(zip(SMELLS, row)) for name, row in zip(SMELLS, phi)}
    if args.kappa:
        result["kappa"] = _kappa(*args.kappa)
    if not result:
        raise CliError("nothing to do: give --corpus and/or --kappa")

    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if "distribution" in result:
            (out / "distribution.json").write_text(_dumps(result["distribution"]), encoding="utf-8")
        if phi is not None:
            (out / "phi.csv").write_text(_phi_csv(phi), encoding="utf-8")
        if "kappa" in result:
            (out / "kappa.json").write_text(_dumps(result["kappa"]), encoding="utf-8")
        print(f"wrote statistics to {out}")
    elif args.format == "csv" and phi is not None:
        _emit(_phi_csv(phi), args.out)
    else:
        _emit(_dumps(result), args.out)
    return 0


def cmd_report(args) -> int:
    try:
        payload = json.loads(Path(args.input).read_text(encoding="utf-8"))
        reports = [EvalReport.from_json(r) for r in payload["reports"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{args.input}: not a crossval report ({exc})") from None
    if args.format == "csv":
        text = reports_csv(reports)
    elif args.format == "json":
        text = _dumps({"reports": [r.to_json() for r in reports]})
    else:
        text = reports_markdown(reports)
        for name, rows in payload.get("importance", {}).items():
            text += f"\nPermutation importance ({name}): decrease in F1\n\n"
            text += "| Feature | Overall | " + " | ".join(SMELLS) + " |\n|" + "---|" * (len(SMELLS) + 2) + "\n"
            for feat, d in rows.items():
                text += f"| {feat} | {d['overall']:.3f} | " + " | ".join(f"{d[s]:.3f}" for s in SMELLS) + " |\n"
    _emit(text, args.out)
    return 0


# --------------------------------------------------------------------------
# parser


def _add_model_flags(p: argparse.ArgumentParser, multi: bool = False) -> None:
    p.add_argument("--lam", type=float, default=1e-3, help="L2 regularization of the linear learner")
    p.add_argument("--epochs", type=int, default=20)
    if multi:
        p.add_argument("--knn-k", type=int, nargs="+", default=[10], help="ML-kNN neighborhood sizes to sweep")
    else:
        p.add_argument("--knn-k", type=int, default=10)
    p.add_argument("--smoothing", type=float, default=1.0, help="ML-kNN Laplace smoothing")
    p.add_argument("--random-chain", action="store_true", help="seeded random classifier-chain order")
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--max-features", type=int, default=5000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--lexicon", help="common-word list (overrides $DOCSMELL_LEXICON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docsmell", description="Detect API documentation smells.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a canonical JSONL corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--jsonl")
    src.add_argument("--javadoc-dir")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("metrics", help="compute the six rule metrics per unit")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("train", help="fit a model on a labeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", choices=("rules", "ovr", "cc", "lps", "mlknn"), default="ovr")
    p.add_argument("--features", choices=("rules", "bow", "both"), default="rules")
    p.add_argument("--selector", default="p90", help="threshold selector for --model rules")
    _add_model_flags(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="label units with a rule selector or a trained model")
    p.add_argument("--corpus", required=True)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--rules", metavar="SELECTOR", choices=SELECTORS + ("avg",))
    how.add_argument("--model", dest="model_file", metavar="FILE")
    p.add_argument("--train", help="corpus to fit rule thresholds on (default: --corpus)")
    p.add_argument("--lexicon")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("crossval", help="k-fold iterative stratified cross-validation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", nargs="+", choices=("rules", "ovr", "cc", "lps", "mlknn", "all"), default=["all"])
    p.add_argument("--features", choices=("rules", "bow", "both", "all"), default="all")
    p.add_argument("--selectors", default="all", help="'all' or comma list of average,p25,p50,p75,p90")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--lams", type=float, nargs="+", default=None, help="lambda values to sweep")
    p.add_argument("--importance", action="store_true", help="permutation importance of rule features")
    p.add_argument("--repeats", type=int, default=10)
    _add_model_flags(p, multi=True)
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", default="-")
    p.add_argument("--out-dir", help="write report.json and report.md here")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("stats", help="label distribution, phi correlation, Cohen's kappa")
    p.add_argument("--corpus")
    p.add_argument("--kappa", nargs=2, metavar=("A", "B"))
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", default="-")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="render a crossval JSON report")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=FORMATS, default="md")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "lams", "unset") is None:
        args.lams = [args.lam]
    if getattr(args, "rules", None) == "avg":
        args.rules = "average"
    try:
        return args.func(args)
    except CliError as exc:
        print(f"docsmell: {exc}", file=sys.stderr)
        return 1
    except (DocSmellError, OSError) as exc:
        print(f"docsmell: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
