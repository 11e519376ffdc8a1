"""Command-line front door: train, attack, eval, repro, inspect.

stdout carries the report, stderr carries diagnostics.  Exit codes are
stable: 0 success, 2 bad arguments or config values, 3 data or
checkpoint format problems (including dimension mismatches), 4 numeric
failure (non-finite loss during training).

Option precedence is flags over a config file over built-in defaults.
A config file is plain text, one ``key = value`` per line, keys named
after the long flags with ``-`` or ``_`` interchangeable.  The seed
falls back to the QSHIELD_SEED environment variable when neither a
flag nor a config entry supplies one.

The data pipeline is a pure function of the source, the split
fraction, and the seed: load (or synthesize), stratified split,
standardize on train-side statistics.  Checkpoints store no
standardization state, so evaluation commands recompute the identical
pipeline from the same flags.  Attack budgets (eps) are distances in
the standardized feature space.
"""

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import attacks, data, nn

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

MODEL_KINDS = ("classical", "hybrid1", "hybrid2")

SYNTH_DEFAULTS = {"sep": 3.0, "dim": 8, "classes": 2, "n": 100}


class UsageError(Exception):
    """Bad flag, config, or spec values; reported on stderr, exit 2."""


# ------------------------------------------------------------- converters

def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _fraction(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a fraction in (0, 1), got {text}")
    return value


def _bool_flag(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _model_kind(text):
    if text not in MODEL_KINDS:
        raise argparse.ArgumentTypeError(
            f"unknown model {text!r}; valid models: {', '.join(MODEL_KINDS)}"
        )
    return text


def _method_list(text):
    methods = tuple(part.strip() for part in text.split(",") if part.strip())
    if not methods:
        raise argparse.ArgumentTypeError("empty method list")
    for method in methods:
        if method not in attacks.METHODS:
            raise argparse.ArgumentTypeError(
                f"unknown method {method!r}; valid methods: {', '.join(attacks.METHODS)}"
            )
    return methods


def _eps_list(text):
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {part!r}")
        if not np.isfinite(value) or value < 0:
            raise argparse.ArgumentTypeError(f"eps must be non-negative, got {part}")
        values.append(value)
    if not values:
        raise argparse.ArgumentTypeError("empty eps list")
    return tuple(values)


def _path_list(text):
    paths = tuple(part.strip() for part in text.split(",") if part.strip())
    if not paths:
        raise argparse.ArgumentTypeError("empty path list")
    return paths


def _synth_spec(text):
    """Parse ``sep=3,dim=8,classes=2,n=100`` with defaults for missing keys."""
    spec = dict(SYNTH_DEFAULTS)
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise argparse.ArgumentTypeError(
                f"synth spec entries look like key=value, got {part!r}"
            )
        key, value = part.split("=", 1)
        key = key.strip()
        if key not in SYNTH_DEFAULTS:
            raise argparse.ArgumentTypeError(
                f"unknown synth key {key!r}; valid keys: sep, dim, classes, n"
            )
        try:
            spec[key] = float(value) if key == "sep" else int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad synth value for {key}: {value!r}")
    if spec["sep"] < 0:
        raise argparse.ArgumentTypeError("synth sep must be non-negative")
    if spec["classes"] < 2:
        raise argparse.ArgumentTypeError("synth classes must be at least 2")
    if spec["n"] < 1:
        raise argparse.ArgumentTypeError("synth n (samples per class) must be positive")
    if spec["dim"] < spec["classes"] - 1:
        raise argparse.ArgumentTypeError(
            f"synth dim must be at least classes - 1 ({spec['dim']} < {spec['classes'] - 1})"
        )
    return spec


# --------------------------------------------------- config file resolution

def _read_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _resolve_options(args, table):
    """Fill unset options from the config file, then from defaults."""
    config = _read_config(args.config) if args.config else {}
    unknown = sorted(set(config) - set(table))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for dest, (convert, default) in table.items():
        if getattr(args, dest) is not None:
            continue
        if dest in config:
            try:
                setattr(args, dest, convert(config[dest]))
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {dest}: {exc}")
        else:
            setattr(args, dest, default)


def _fill_seed(args):
    if args.seed is None:
        raw = os.environ.get("QSHIELD_SEED")
        if raw is None:
            args.seed = 0
        else:
            try:
                args.seed = int(raw)
            except ValueError:
                raise UsageError(f"QSHIELD_SEED must be an integer, got {raw!r}")
    if args.seed < 0:
        raise UsageError(f"seed must be non-negative, got {args.seed}")


# ------------------------------------------------------------ data pipeline

def _load_source(args):
    if args.data is not None and args.synth is not None:
        raise UsageError("give either --data or --synth, not both")
    if args.data is None and args.synth is None:
        raise UsageError("a data source is required: --data FILE or --synth SPEC")
    if args.data is not None:
        return data.load_features(args.data)
    spec = args.synth
    return data.synth_gaussian(
        n_per_class=spec["n"],
        feature_dim=spec["dim"],
        n_classes=spec["classes"],
        class_separation=spec["sep"],
        seed=args.seed,
    )


def _prepare_sets(source, train_fraction, seed):
    train_set, test_set = data.split(
        source, data.SplitSpec(train_fraction, seed=seed)
    )
    train_set, test_set, _ = data.standardize(train_set, test_set)
    return train_set, test_set


# ------------------------------------------------------------ grid reports

def _grid_rows(models, test_set, methods, eps_values, seed, overrides=None):
    """Accuracy rows in (method, eps) declaration order."""
    overrides = overrides or {}
    rows = []
    for method in methods:
        for eps in eps_values:
            accs = []
            for model in models:
                config = attacks.AttackConfig(
                    method=method, eps=eps, seed=seed, **overrides
                )
                accs.append(100.0 * attacks.evaluate_under_attack(model, test_set, config))
            rows.append((method, eps, accs))
    return rows


def _render_table(rows, names):
    header = ["attack", "eps"] + list(names)
    body = []
    for method, eps, accs in rows:
        label = "without_attack" if method == "none" else method
        top = max(accs)
        cells = [
            f"{acc:.2f}" + ("*" if acc >= top - 1e-9 else "")
            for acc in accs
        ]
        body.append([label, f"{eps:g}"] + cells)
    widths = [
        max(len(header[i]), max(len(row[i]) for row in body))
        for i in range(len(header))
    ]
    lines = ["  ".join(header[i].ljust(widths[i]) for i in range(len(header))).rstrip()]
    for row in body:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(row))).rstrip())
    return "\n".join(lines)


def _write_csv(path, rows, names, n_test, seed):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["method", "eps", "model", "accuracy_percent", "n_test", "seed"])
        for method, eps, accs in rows:
            for name, acc in zip(names, accs):
                writer.writerow(
                    [method, f"{eps:.10g}", name, f"{acc:.10g}", n_test, seed]
                )


# -------------------------------------------------------------- subcommands

def _cmd_train(args):
    if args.model is None:
        raise UsageError("--model is required (classical, hybrid1, or hybrid2)")
    if args.model != "classical" and not 2 <= args.qubits <= 12:
        raise UsageError(
            f"--qubits must be between 2 and 12 for hybrid models, got {args.qubits}"
        )
    if args.width is not None and args.model != "classical" and args.width != args.qubits:
        raise UsageError(
            f"--width must equal --qubits for hybrid models ({args.width} != {args.qubits})"
        )
    source = _load_source(args)
    train_set, test_set = _prepare_sets(source, args.split, args.seed)
    rng = np.random.default_rng(args.seed)
    model = nn.build_model(
        args.model,
        train_set.feature_dim,
        train_set.n_classes,
        n_qubits=args.qubits,
        n_layers=args.layers,
        width=args.width,
        rng=rng,
    )
    config = nn.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed, lr=args.lr
    )
    model, trace = nn.train(model, train_set, config)
    for entry in trace:
        print(
            f"epoch {entry['epoch'] + 1}/{args.epochs} "
            f"loss {entry['loss']:.6f} accuracy {100 * entry['accuracy']:.2f}"
        )
    if trace:
        final = trace[-1]["accuracy"]
    else:
        final = nn.accuracy(model, train_set.features, train_set.labels)
    print(f"final train accuracy {100 * final:.2f}")
    print(f"test accuracy {100 * nn.accuracy(model, test_set.features, test_set.labels):.2f}")
    out = args.out if args.out else f"{args.model}.qhm"
    nn.save_checkpoint(model, out)
    print(f"checkpoint written to {out}")
    return 0


def _load_models(paths):
    models = []
    names = []
    for path in paths:
        models.append(nn.load_checkpoint(path))
        stem = Path(path).stem
        name = stem
        k = 2
        while name in names:
            name = f"{stem}_{k}"
            k += 1
        names.append(name)
    return models, names


def _check_feature_dims(models, names, test_set):
    for name, model in zip(names, models):
        if model.feature_dim != test_set.feature_dim:
            raise ValueError(
                f"checkpoint {name} expects {model.feature_dim} features, "
                f"data has {test_set.feature_dim}"
            )


def _attack_overrides(args):
    return {
        "n_iter": args.n_iter,
        "step_size": args.step_size,
        "sparsity_quantile": args.sparsity_quantile,
        "spsa_samples": args.spsa_samples,
        "spsa_delta": args.spsa_delta,
    }


def _cmd_attack(args):
    if args.models is None:
        raise UsageError("--models is required (comma-separated checkpoint paths)")
    source = _load_source(args)
    _, test_set = _prepare_sets(source, args.split, args.seed)
    models, names = _load_models(args.models)
    _check_feature_dims(models, names, test_set)
    rows = _grid_rows(
        models, test_set, args.methods, args.eps, args.seed, _attack_overrides(args)
    )
    print(_render_table(rows, names))
    if args.csv:
        _write_csv(args.csv, rows, names, test_set.n_samples, args.seed)
        print(f"csv written to {args.csv}")
    return 0


def _cmd_eval(args):
    if args.model is None:
        raise UsageError("--model is required (a checkpoint path)")
    source = _load_source(args)
    _, test_set = _prepare_sets(source, args.split, args.seed)
    models, names = _load_models((args.model,))
    _check_feature_dims(models, names, test_set)
    acc = 100.0 * nn.accuracy(models[0], test_set.features, test_set.labels)
    print(f"accuracy_percent {acc:.10g} n_test {test_set.n_samples}")
    return 0


def _cmd_inspect(args):
    info = nn.checkpoint_header(args.checkpoint)
    for key in (
        "head_kind", "feature_dim", "width", "n_classes",
        "n_qubits", "n_layers", "n_params",
    ):
        print(f"{key} {info[key]}")
    return 0


def _train_kinds(train_set, epochs, seed):
    models = []
    for kind in MODEL_KINDS:
        rng = np.random.default_rng(seed)
        model = nn.build_model(kind, train_set.feature_dim, train_set.n_classes, rng=rng)
        config = nn.TrainConfig(epochs=epochs, seed=seed)
        model, _ = nn.train(model, train_set, config)
        models.append(model)
    return models


def _repro_grid(source, train_fraction, epochs, seed, eps_values):
    train_set, test_set = _prepare_sets(source, train_fraction, seed)
    models = _train_kinds(train_set, epochs, seed)
    rows = _grid_rows(models, test_set, attacks.METHODS, eps_values, seed)
    return rows, test_set.n_samples


def _hybrid_led(rows):
    """Count attack cells where a hybrid column reaches the row maximum."""
    wins = 0
    total = 0
    for method, _, accs in rows:
        if method == "none":
            continue
        total += 1
        classical, rest = accs[0], accs[1:]
        if max(rest) >= classical - 1e-12:
            wins += 1
    return wins, total


def _cmd_repro(args):
    if args.data is None and args.synth is None:
        args.synth = dict(SYNTH_DEFAULTS)
    if args.multiclass and args.synth is None:
        raise UsageError("--multiclass needs a --synth source")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = _load_source(args)

    for fraction, tag, title in ((0.8, "8020", "80/20 split"), (0.4, "4060", "40/60 split")):
        rows, n_test = _repro_grid(source, fraction, args.epochs, args.seed, args.eps)
        print(f"binary models, {title}")
        print(_render_table(rows, MODEL_KINDS))
        csv_path = out_dir / f"grid_{tag}.csv"
        _write_csv(csv_path, rows, MODEL_KINDS, n_test, args.seed)
        print(f"csv written to {csv_path}")
        print()

    if args.multiclass:
        spec = dict(args.synth)
        spec["classes"] = max(3, spec["classes"])
        multi = data.synth_gaussian(
            n_per_class=spec["n"],
            feature_dim=spec["dim"],
            n_classes=spec["classes"],
            class_separation=spec["sep"],
            seed=args.seed,
        )
        rows, n_test = _repro_grid(multi, 0.8, args.epochs, args.seed, args.eps)
        print(f"multiclass models ({spec['classes']} classes), 80/20 split")
        print(_render_table(rows, MODEL_KINDS))
        csv_path = out_dir / "grid_8020_multiclass.csv"
        _write_csv(csv_path, rows, MODEL_KINDS, n_test, args.seed)
        print(f"csv written to {csv_path}")
        print()

    if args.trend_seeds > 0:
        print(f"trend: hybrid-vs-classical ranking under attack across {args.trend_seeds} seeds")
        wins_total = 0
        cells_total = 0
        for k in range(args.trend_seeds):
            seed = args.seed + k
            if args.synth is not None:
                spec = args.synth
                seed_source = data.synth_gaussian(
                    n_per_class=spec["n"],
                    feature_dim=spec["dim"],
                    n_classes=spec["classes"],
                    class_separation=spec["sep"],
                    seed=seed,
                )
            else:
                seed_source = source
            rows, _ = _repro_grid(seed_source, 0.8, args.epochs, seed, args.eps)
            wins, total = _hybrid_led(rows)
            wins_total += wins
            cells_total += total
            print(f"seed {seed}: hybrid best in {wins}/{total} attack cells")
        share = 100.0 * wins_total / cells_total
        print(f"overall: hybrid best in {wins_total}/{cells_total} attack cells ({share:.1f}%)")
        print("note: reported for qualitative comparison, not asserted")
    return 0


# ------------------------------------------------------------------ parser

def _add_option(parser, table, flag, dest, convert, default, help_text, metavar=None):
    table[dest] = (convert, default)
    shown = default if default is not None else "unset"
    parser.add_argument(
        flag, dest=dest, type=convert, default=None, metavar=metavar,
        help=f"{help_text} (default: {shown})",
    )
    return parser


def _add_flag(parser, table, flag, dest, default, help_text):
    table[dest] = (_bool_flag, default)
    parser.add_argument(
        flag, dest=dest, action="store_true", default=None, help=help_text
    )


def _add_source_options(parser, table):
    _add_option(parser, table, "--data", "data", str, None,
                "feature file in the binary feature format", metavar="FILE")
    _add_option(parser, table, "--synth", "synth", _synth_spec, None,
                "synthetic source, e.g. sep=10,dim=8,classes=2,n=200 (n is per class)",
                metavar="SPEC")
    _add_option(parser, table, "--split", "split", _fraction, 0.8,
                "train fraction for the stratified split", metavar="FRAC")


def _add_seed_option(parser, table):
    _add_option(parser, table, "--seed", "seed", _non_negative_int, None,
                "seed for data, init, training, and attacks; falls back to "
                "QSHIELD_SEED, then 0", metavar="N")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qshield",
        description="Train hybrid classical-quantum classifiers and evaluate "
                    "them under adversarial attacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = {}
    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_option(p, t, "--model", "model", _model_kind, None,
                "model kind: classical, hybrid1, or hybrid2", metavar="KIND")
    _add_source_options(p, t)
    _add_option(p, t, "--qubits", "qubits", _positive_int, 4,
                "circuit width; also the classical hidden width default", metavar="N")
    _add_option(p, t, "--layers", "layers", _non_negative_int, 6,
                "variational block count", metavar="N")
    _add_option(p, t, "--width", "width", _positive_int, None,
                "classical hidden width override", metavar="N")
    _add_option(p, t, "--lr", "lr", _positive_float, 0.004,
                "Adam learning rate", metavar="F")
    _add_option(p, t, "--epochs", "epochs", _non_negative_int, 30,
                "training epochs", metavar="N")
    _add_option(p, t, "--batch-size", "batch_size", _positive_int, 4,
                "mini-batch size", metavar="N")
    _add_seed_option(p, t)
    _add_option(p, t, "--out", "out", str, None,
                "checkpoint path (default: <model>.qhm)", metavar="FILE")
    p.add_argument("--config", default=None, metavar="FILE",
                   help="config file with key = value lines; flags win")
    p.set_defaults(func=_cmd_train, table=t)

    t = {}
    p = sub.add_parser("attack", help="evaluate checkpoints under an attack grid")
    _add_option(p, t, "--models", "models", _path_list, None,
                "comma-separated checkpoint paths", metavar="FILES")
    _add_source_options(p, t)
    _add_option(p, t, "--methods", "methods", _method_list, attacks.METHODS,
                "comma-separated attack methods", metavar="LIST")
    _add_option(p, t, "--eps", "eps", _eps_list, (0.05, 1.0),
                "comma-separated attack budgets", metavar="LIST")
    _add_option(p, t, "--n-iter", "n_iter", _positive_int, None,
                "iteration count override for iterative attacks", metavar="N")
    _add_option(p, t, "--step-size", "step_size", _positive_float, None,
                "step size override for iterative attacks", metavar="F")
    _add_option(p, t, "--sparsity-quantile", "sparsity_quantile", _fraction, None,
                "kept-gradient quantile for the sparse attack", metavar="Q")
    _add_option(p, t, "--spsa-samples", "spsa_samples", _positive_int, None,
                "perturbation pairs per SPSA step", metavar="N")
    _add_option(p, t, "--spsa-delta", "spsa_delta", _positive_float, None,
                "SPSA probe radius", metavar="F")
    _add_seed_option(p, t)
    _add_option(p, t, "--csv", "csv", str, None,
                "also write the grid as CSV", metavar="FILE")
    p.add_argument("--config", default=None, metavar="FILE",
                   help="config file with key = value lines; flags win")
    p.set_defaults(func=_cmd_attack, table=t)

    t = {}
    p = sub.add_parser("eval", help="clean accuracy of a checkpoint on the test split")
    _add_option(p, t, "--model", "model", str, None,
                "checkpoint path", metavar="FILE")
    _add_source_options(p, t)
    _add_seed_option(p, t)
    p.add_argument("--config", default=None, metavar="FILE",
                   help="config file with key = value lines; flags win")
    p.set_defaults(func=_cmd_eval, table=t)

    t = {}
    p = sub.add_parser("repro", help="train all models on both splits and "
                                     "emit the full attack grids")
    _add_option(p, t, "--data", "data", str, None,
                "feature file in the binary feature format", metavar="FILE")
    _add_option(p, t, "--synth", "synth", _synth_spec, None,
                "synthetic source (default: sep=3,dim=8,classes=2,n=100)",
                metavar="SPEC")
    _add_option(p, t, "--epochs", "epochs", _non_negative_int, 30,
                "training epochs per model", metavar="N")
    _add_option(p, t, "--eps", "eps", _eps_list, (0.05, 1.0),
                "comma-separated attack budgets", metavar="LIST")
    _add_option(p, t, "--out-dir", "out_dir", str, "repro_out",
                "directory for the CSV grids", metavar="DIR")
    _add_option(p, t, "--trend-seeds", "trend_seeds", _non_negative_int, 5,
                "seeds for the hybrid-vs-classical trend note; 0 disables",
                metavar="N")
    _add_flag(p, t, "--multiclass", "multiclass", False,
              "also run a multiclass grid on the 80/20 split")
    _add_seed_option(p, t)
    p.add_argument("--config", default=None, metavar="FILE",
                   help="config file with key = value lines; flags win")
    p.set_defaults(func=_cmd_repro, table=t)

    p = sub.add_parser("inspect", help="print a checkpoint header")
    p.add_argument("checkpoint", help="checkpoint path")
    p.set_defaults(func=_cmd_inspect, table=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code in (0, None):
            return 0
        return code if isinstance(code, int) else EXIT_USAGE
    try:
        if args.table is not None:
            _resolve_options(args, args.table)
            if "seed" in args.table:
                _fill_seed(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except nn.NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (data.FeatureFormatError, nn.CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main_entry():
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    main_entry()
