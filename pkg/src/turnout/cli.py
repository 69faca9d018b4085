"""Command-line entry point: ``turnout {train,eval,synth,schema}``.

Exit codes: 0 success, 1 usage/config/I-O error, 2 data or schema
validation error, 3 numerical failure during training.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, metrics, network
from ._backend import BACKEND
from .dataset import DataError, dedupe, dumps_csv, encode, load_csv, split
from .schema import FeatureSchema, SchemaError, default_schema, default_schema_text, read_schema
from .synth import RULES, synthesize
from .training import NumericalError, TrainConfig, evaluate, history_csv, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class StageError(Exception):
    """A pipeline failure tagged with the stage it happened in and an exit code."""

    def __init__(self, stage: str, exc: BaseException, code: int):
        self.stage, self.code = stage, code
        super().__init__(f"{stage}: {exc}")


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, etype, exc, tb):
        if exc is None or isinstance(exc, StageError):
            return False
        if isinstance(exc, (DataError, SchemaError)):
            code = EXIT_DATA
        elif isinstance(exc, NumericalError):
            code = EXIT_NUMERIC
        elif isinstance(exc, (ValueError, OSError)):
            code = EXIT_USAGE
        else:
            return False
        raise StageError(self.name, exc, code) from exc


@dataclass(frozen=True)
class SynthSpec:
    n: int
    seed: int
    rule: str
    noise: float

    @classmethod
    def parse(cls, text: str) -> "SynthSpec":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"--synth expects n,seed,rule,noise; got {text!r}")
        spec = cls(int(parts[0]), int(parts[1]), parts[2], float(parts[3]))
        if spec.n < 1:
            raise ValueError(f"synthetic record count must be >= 1, got {spec.n}")
        if spec.rule not in RULES:
            raise ValueError(f"unknown rule {spec.rule!r}; choose from {sorted(RULES)}")
        if not 0.0 <= spec.noise < 1.0:
            raise ValueError(f"noise must lie in [0, 1), got {spec.noise}")
        return spec


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a training run. ``out`` is where, not what."""

    data: str | None = None
    synth: SynthSpec | None = None
    schema: str | None = None
    split: tuple[float, float, float] = (0.70, 0.15, 0.15)
    split_seed: int = 0
    hidden: int = 10
    init_seed: int = 0
    lr: float = 0.05
    max_epochs: int = 1000
    max_fail: int = 6
    target_mse: float = 0.0
    bins: int = 20
    out: str = field(default="run", compare=False)

    def __post_init__(self):
        if (self.data is None) == (self.synth is None):
            raise ValueError("exactly one of --data or --synth is required")
        if self.hidden < 1:
            raise ValueError(f"--hidden must be >= 1, got {self.hidden}")
        if self.bins < 1:
            raise ValueError(f"--bins must be >= 1, got {self.bins}")

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.lr, self.max_epochs, self.max_fail, self.init_seed, self.target_mse)

    def resolved(self) -> dict:
        """Config echo for the report; excludes the output directory."""
        d = asdict(self)
        d.pop("out")
        d["split"] = list(self.split)
        return d

    @classmethod
    def from_resolved(cls, doc: dict, out: str) -> "RunConfig":
        doc = dict(doc.get("config", doc))
        known = {f.name for f in fields(cls)} - {"out"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        if doc.get("synth") is not None:
            doc["synth"] = SynthSpec(**doc["synth"])
            SynthSpec.parse(",".join(str(v) for v in asdict(doc["synth"]).values()))
        if "split" in doc:
            doc["split"] = tuple(doc["split"])
        return cls(**doc, out=out)


def _load_schema(path) -> FeatureSchema:
    return read_schema(path) if path else default_schema()


def _write(out: Path, name: str, text: str) -> str:
    (out / name).write_text(text, encoding="utf-8")
    return name


def _dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _score_artifacts(model, x, t, labels, out: Path | None, prefix: str = ""):
    """Confusion matrix, accuracy and per-class ROC for one subset; optionally written."""
    outs = network.outputs(model, x)
    truths = np.argmax(t, axis=1)
    cm = metrics.confusion(truths, np.argmax(outs, axis=1), len(labels))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", metrics.RocWarning)
        curves = metrics.multi_roc(outs, truths, len(labels))
    summary = {
        "confusion": cm.counts.tolist(),
        "accuracy": metrics.accuracy(cm),
        "roc_auc": {labels[c.class_index]: c.auc for c in curves},
        "roc_skipped": [labels[c] for c in range(len(labels)) if c not in {cv.class_index for cv in curves}],
    }
    files = {}
    if out is not None:
        files["confusion"] = _write(out, f"{prefix}confusion.csv", metrics.confusion_csv(cm, labels))
        for c in curves:
            files[f"roc_class{c.class_index + 1}"] = _write(
                out, f"{prefix}roc_class{c.class_index + 1}.csv", metrics.roc_csv(c)
            )
    return summary, files


def cmd_train(config: RunConfig) -> dict:
    """Run load, dedupe, encode, split, init, train, evaluate; write artifacts; return the report."""
    with _Stage("schema"):
        schema = _load_schema(config.schema)
    with _Stage("load"):
        if config.data is not None:
            with open(config.data, "rb") as fh:
                raw = load_csv(fh, schema)
        else:
            s = config.synth
            raw = synthesize(s.n, s.seed, s.rule, s.noise, schema)
    with _Stage("dedupe"):
        data = dedupe(raw)
    with _Stage("encode"):
        enc = encode(data)
    with _Stage("split"):
        parts = split(len(enc), config.split, config.split_seed)
    with _Stage("init"):
        initial = network.init(schema.n_features, config.hidden, schema.n_classes, config.init_seed)
    with _Stage("train"):
        result = train(initial, enc, parts, config.train_config())

    out = Path(config.out)
    labels = list(schema.target.labels)
    with _Stage("evaluate"):
        subsets = {"train": parts.train, "validation": parts.validation, "test": parts.test}
        scores = {}
        errors = {}
        for name, idx in subsets.items():
            if not idx:
                continue
            mse, acc = evaluate(result.model, enc, idx)
            scores[name] = {"mse": mse, "accuracy": acc}
            x, t = enc.subset(idx)
            errors[name] = (t - network.outputs(result.model, x)).ravel()
        hist = metrics.error_histogram(errors, config.bins)

    with _Stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        artifacts = {
            "model": _write(out, "model.json", network.dumps_model(result.model, {
                "init_seed": config.init_seed,
                "split_seed": config.split_seed,
                "synth": asdict(config.synth) if config.synth else None,
                "data": config.data,
                "best_epoch": result.best_epoch,
            })),
            "history": _write(out, "history.csv", history_csv(result.history)),
            "error_histogram": _write(out, "error_histogram.csv", metrics.histogram_csv(hist)),
        }
        test_summary = None
        if parts.test:
            x, t = enc.subset(parts.test)
            test_summary, files = _score_artifacts(result.model, x, t, labels, out)
            artifacts.update(files)
        best = result.best
        report = {
            "tool": f"turnout {__version__}",
            "backend": BACKEND,
            "config": config.resolved(),
            "dataset": {
                "records_loaded": len(raw),
                "duplicates_removed": len(raw) - len(data),
                "records": len(data),
                "features": schema.n_features,
                "class_counts": dict(zip(labels, data.class_counts())),
                "split_sizes": dict(zip(("train", "validation", "test"), parts.sizes)),
            },
            "training": {
                "best_epoch": result.best_epoch,
                "stop_epoch": result.stop_epoch,
                "stop_reason": result.stop_reason,
                "best_train_mse": best.train_mse,
                "best_validation_mse": best.validation_mse,
                "best_test_mse": best.test_mse,
            },
            "evaluation": scores,
            "test": test_summary,
            "artifacts": artifacts,
        }
        _write(out, "report.json", _dumps_json(report))
    return report


def cmd_eval(model_path, data_path, schema_path=None, out=None) -> dict:
    """Score a saved model on every record of a data file (no split)."""
    with _Stage("schema"):
        schema = _load_schema(schema_path)
    with _Stage("model"):
        model = network.loads_model(Path(model_path).read_text(encoding="utf-8"))
    with _Stage("load"):
        if model.n_inputs != schema.n_features or model.n_classes != schema.n_classes:
            raise DataError(
                f"shape mismatch: model has {model.n_inputs} inputs / {model.n_classes} outputs, "
                f"schema has {schema.n_features} features / {schema.n_classes} classes"
            )
        with open(data_path, "rb") as fh:
            data = load_csv(fh, schema)
    with _Stage("encode"):
        enc = encode(data)
    outdir = Path(out) if out else None
    with _Stage("write"):
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
        summary, files = _score_artifacts(model, enc.inputs, enc.targets, list(schema.target.labels), outdir)
        mse, _ = evaluate(model, enc, range(len(enc)))
        report = {
            "tool": f"turnout {__version__}",
            "backend": BACKEND,
            "model": str(model_path),
            "data": str(data_path),
            "records": len(data),
            "mse": mse,
            **summary,
            "artifacts": files,
        }
        if outdir is not None:
            _write(outdir, "eval_report.json", _dumps_json(report))
    return report


def cmd_synth(n, seed, rule, noise, out_path, schema_path=None) -> str:
    with _Stage("synth"):
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n}")
        schema = _load_schema(schema_path)
        data = synthesize(n, seed, rule, noise, schema)
    with _Stage("write"):
        Path(out_path).write_text(dumps_csv(data), encoding="utf-8")
    return str(out_path)


def cmd_schema_dump() -> str:
    return default_schema_text()


def cmd_schema_validate(path) -> str:
    with _Stage("schema"):
        schema = read_schema(path)
    return f"ok: {schema.n_features} features, {schema.n_classes} target classes"


# -- argument parsing -----------------------------------------------------


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except ``None`` (those options say what omission means)."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fractions(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated fractions, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected three fractions: train,validation,test")
    return vals


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = _Parser(prog="turnout", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = RunConfig.__dataclass_fields__
    p = sub.add_parser("train", help="train and evaluate a network, writing all artifacts", formatter_class=fmt)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="CSV data file")
    src.add_argument("--synth", metavar="N,SEED,RULE,NOISE",
                     help=f"synthesize data instead; rules: {', '.join(sorted(RULES))}")
    src.add_argument("--config", metavar="JSON", help="rerun from a report.json / resolved config")
    p.add_argument("--schema", help="schema YAML; the embedded survey schema when omitted")
    p.add_argument("--split", type=_fractions, default=",".join(f"{v:.2f}" for v in d["split"].default),
                   help="train,validation,test fractions")
    p.add_argument("--split-seed", type=int, default=d["split_seed"].default, help="seed of the row permutation")
    p.add_argument("--hidden", type=int, default=d["hidden"].default, help="hidden units")
    p.add_argument("--init-seed", type=int, default=d["init_seed"].default, help="seed of the initial weights")
    p.add_argument("--lr", type=float, default=d["lr"].default, help="learning rate")
    p.add_argument("--max-epochs", type=int, default=d["max_epochs"].default, help="epoch cap")
    p.add_argument("--max-fail", type=int, default=d["max_fail"].default,
                   help="consecutive non-improving validation epochs before stopping")
    p.add_argument("--target-mse", type=float, default=d["target_mse"].default, help="train MSE goal (0 = off)")
    p.add_argument("--bins", type=int, default=d["bins"].default, help="error histogram bins")
    p.add_argument("--out", default=d["out"].default, help="output directory")

    p = sub.add_parser("eval", help="score a saved model on a data file", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model.json written by train")
    p.add_argument("--data", required=True, help="CSV data file")
    p.add_argument("--schema", help="schema YAML; the embedded survey schema when omitted")
    p.add_argument("--out", help="directory for eval artifacts (optional)")

    p = sub.add_parser("synth", help="write a synthetic CSV with a planted rule", formatter_class=fmt)
    p.add_argument("--n", type=int, default=100, help="record count")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--rule", choices=sorted(RULES), default="trust", help="planted labelling rule")
    p.add_argument("--noise", type=float, default=0.05, help="label flip probability")
    p.add_argument("--schema", help="schema YAML; the embedded survey schema when omitted")
    p.add_argument("--out", required=True, help="CSV path to write")

    p = sub.add_parser("schema", help="dump the embedded schema or validate a schema file", formatter_class=fmt)
    ssub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ssub.add_parser("dump", help="print the embedded schema")
    v = ssub.add_parser("validate", help="check a schema file")
    v.add_argument("path")
    return parser


def _run_config(args) -> RunConfig:
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        return RunConfig.from_resolved(doc, out=args.out)
    return RunConfig(
        data=args.data,
        synth=SynthSpec.parse(args.synth) if args.synth else None,
        schema=args.schema,
        split=args.split,
        split_seed=args.split_seed,
        hidden=args.hidden,
        init_seed=args.init_seed,
        lr=args.lr,
        max_epochs=args.max_epochs,
        max_fail=args.max_fail,
        target_mse=args.target_mse,
        bins=args.bins,
        out=args.out,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            try:
                config = _run_config(args)
                config.train_config()
            except (ValueError, TypeError, OSError) as exc:
                print(f"turnout: config: {exc}", file=sys.stderr)
                return EXIT_USAGE
            report = cmd_train(config)
            t = report["test"]
            acc = f"{t['accuracy']:.4f}" if t else "n/a"
            print(f"stopped at epoch {report['training']['stop_epoch']} "
                  f"({report['training']['stop_reason']}), best epoch {report['training']['best_epoch']}, "
                  f"test accuracy {acc}; artifacts in {config.out}")
        elif args.command == "eval":
            report = cmd_eval(args.model, args.data, args.schema, args.out)
            print(_dumps_json(report), end="")
        elif args.command == "synth":
            if args.n < 1:
                print(f"turnout: usage: --n must be >= 1, got {args.n}", file=sys.stderr)
                return EXIT_USAGE
            cmd_synth(args.n, args.seed, args.rule, args.noise, args.out, args.schema)
        elif args.command == "schema":
            if args.action == "dump":
                print(cmd_schema_dump(), end="")
            else:
                print(cmd_schema_validate(args.path))
    except StageError as exc:
        print(f"turnout: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
