"""Command line interface.

Subcommands: ``gen-synth`` (write synthetic dataset files), ``train``,
``predict``, ``eval``, ``cv`` and ``bench`` (repeated experiment runs with
aggregated metrics). ``--seed`` is mandatory wherever randomness is
involved so every artifact is reproducible.

Exit codes: 0 success, 2 configuration or validation problems, 3 file
format problems, 4 numerical or domain failures, 1 anything unexpected.
"""

import argparse
import json
import sys
from dataclasses import replace

from . import __version__
from .baselines import DEFAULT_TAU, euclidean_rslvq_train, mdrm_train
from .exceptions import (
    ConfigurationError,
    DomainError,
    FileFormatError,
    NumericalError,
    ValidationError,
)
from .harness import (
    METHODS,
    ExperimentConfig,
    _predict_any,
    history_table,
    run_cv,
    run_experiment,
)
from .metrics import MetricsReport
from .plrsq import TrainConfig, train
from .serialization import (
    atomic_write_text,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)
from .synthetic import SynthSpec, gen_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4


def _add_train_flags(parser):
    parser.add_argument("--sigma-sq-opt", type=float, required=True,
                        help="mixture scale (initial value when annealing)")
    parser.add_argument("--prototypes-per-class", type=int, default=1)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--beta0", type=float, default=0.99)
    parser.add_argument("--anneal-exponent", type=float, default=1.1)
    parser.add_argument("--anneal-stop-offset", type=float, default=0.4)
    parser.add_argument("--lr-numerator-divisor", type=float, default=100.0)
    parser.add_argument("--lr-decay-base", type=float, default=0.01)
    parser.add_argument("--init-perturb-scale", type=float, default=0.01)
    parser.add_argument("--constant-beta", action="store_true",
                        help="keep the cooling factor fixed at beta0")
    parser.add_argument("--tau", type=float, default=DEFAULT_TAU,
                        help="eigenvalue floor of the SPD projection (rslvq)")


def _train_config(args, seed):
    return TrainConfig(
        sigma_sq_opt=args.sigma_sq_opt,
        prototypes_per_class=args.prototypes_per_class,
        epochs=args.epochs,
        beta0=args.beta0,
        anneal_exponent=args.anneal_exponent,
        anneal_stop_offset=args.anneal_stop_offset,
        lr_numerator_divisor=args.lr_numerator_divisor,
        lr_decay_base=args.lr_decay_base,
        init_perturb_scale=args.init_perturb_scale,
        constant_beta=args.constant_beta,
        rng_seed=seed,
    )


def _cmd_gen_synth(args):
    spec = SynthSpec.by_name(args.name, seed=args.seed,
                             instances_per_class=args.instances_per_class)
    train_ds, validation_ds, test_ds = gen_dataset(spec)
    save_dataset(args.out_train, train_ds)
    save_dataset(args.out_validation, validation_ds)
    save_dataset(args.out_test, test_ds)
    print(f"wrote {args.out_train}, {args.out_validation}, {args.out_test} "
          f"({len(train_ds)} samples each, n={train_ds.dim}, C={train_ds.num_classes})")
    return EXIT_OK


def _cmd_train(args):
    data = load_dataset(args.data)
    eval_data = load_dataset(args.test_data) if args.test_data else None
    history = None
    config = None
    if args.method == "mdrm":
        model = mdrm_train(data)
    else:
        config = replace(_train_config(args, args.seed),
                         anneal=args.method != "plrsq-const")
        if args.method == "rslvq-euclidean":
            model, history = euclidean_rslvq_train(data, config, tau=args.tau,
                                                   eval_data=eval_data)
        else:
            model, history = train(data, config, eval_data=eval_data)
    save_model(args.out, model, seed=args.seed, config=config)
    if history is not None and args.history:
        atomic_write_text(args.history, history_table(history))
    print(f"wrote model to {args.out}")
    return EXIT_OK


def _cmd_predict(args):
    model = load_model(args.model)
    data = load_dataset(args.data)
    predictions = _predict_any(model, data.matrices)
    lines = [str(int(p)) for p in predictions]
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
        print(f"wrote {len(lines)} predictions to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_eval(args):
    model = load_model(args.model)
    data = load_dataset(args.data)
    predictions = _predict_any(model, data.matrices)
    report = MetricsReport(method=type(model).__name__, num_classes=data.num_classes)
    report.add_run(data.labels, predictions)
    print(f"accuracy {report.accuracy:.4f}  kappa {report.kappa:.4f}")
    print("confusion (rows=true):")
    for row in report.confusion:
        print("  " + " ".join(f"{v:6d}" for v in row))
    if args.report:
        atomic_write_text(args.report, json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def _parse_grid(text, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise ConfigurationError(f"bad grid value: {err}") from err


def _cmd_cv(args):
    data = load_dataset(args.data)
    base = TrainConfig(
        sigma_sq_opt=1.0,
        lr_numerator_divisor=args.lr_numerator_divisor,
        lr_decay_base=args.lr_decay_base,
        init_perturb_scale=args.init_perturb_scale,
    )
    best, table = run_cv(
        data,
        sigma_sq_grid=_parse_grid(args.sigma_sq_grid, float),
        xi_grid=_parse_grid(args.xi_grid, int),
        epochs_grid=_parse_grid(args.epochs_grid, int),
        folds=args.folds,
        seed=args.seed,
        method=args.method,
        base_config=base,
        tau=args.tau,
    )
    header = "sigma_sq xi epochs mean_accuracy std_accuracy"
    lines = [header] + [
        f"{r['sigma_sq']:g} {r['xi']} {r['epochs']} "
        f"{r['mean_accuracy']:.6f} {r['std_accuracy']:.6f}"
        for r in table
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"best: sigma_sq={best['sigma_sq']:g} xi={best['xi']} "
          f"epochs={best['epochs']} accuracy={best['mean_accuracy']:.4f}")
    return EXIT_OK


def _cmd_bench(args):
    config = ExperimentConfig(
        method=args.method,
        train=_train_config(args, seed=0),
        repetitions=args.repetitions,
        seed=args.seed,
        synth_name=args.synth,
        instances_per_class=args.instances_per_class,
        train_path=args.train_data,
        test_path=args.test_data,
        out_dir=args.out_dir,
        tau=args.tau,
        workers=args.workers,
    )
    report = run_experiment(config)
    print(f"{args.method}: accuracy {report.accuracy:.4f} "
          f"(+- {report.accuracy_std:.4f} over {report.runs} runs), "
          f"kappa {report.kappa:.4f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spdlvq",
        description="Prototype-based classification of SPD matrices",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic dataset")
    p.add_argument("--name", required=True, help="SynI or SynII")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--instances-per-class", type=int, default=250)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-validation", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("train", help="train a model on a dataset file")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--data", required=True)
    p.add_argument("--test-data", help="optional dataset for per-epoch test error")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--history", help="per-epoch history output path")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict labels with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="write predictions here instead of stdout")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="write a JSON metrics report here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("cv", help="cross-validated hyperparameter search")
    p.add_argument("--method", default="plrsq-an", choices=[m for m in METHODS if m != "mdrm"])
    p.add_argument("--data", required=True)
    p.add_argument("--sigma-sq-grid", required=True, help="comma separated values")
    p.add_argument("--xi-grid", default="1", help="comma separated prototype counts")
    p.add_argument("--epochs-grid", default="100", help="comma separated epoch counts")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="write the full result table here")
    p.add_argument("--lr-numerator-divisor", type=float, default=100.0)
    p.add_argument("--lr-decay-base", type=float, default=0.01)
    p.add_argument("--init-perturb-scale", type=float, default=0.01)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("bench", help="repeated experiment with aggregated metrics")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--synth", help="SynI or SynII (regenerated per repetition)")
    p.add_argument("--train-data", help="training dataset file (fixed-data mode)")
    p.add_argument("--test-data", help="test dataset file (fixed-data mode)")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--instances-per-class", type=int, default=250)
    p.add_argument("--out-dir", help="directory for history files and metrics.json")
    p.add_argument("--workers", type=int, default=1)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FORMAT
    except (DomainError, NumericalError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
