"""Command line entry point: fit one exported dataset end to end."""
import argparse
import sys
from pathlib import Path

from .data import load_dataset
from .evaluate import evaluate, export_predictions
from .train import DinnConfig, TrainingDivergence, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dinn-estimator",
        description="Fit a disease-informed network to an exported "
                    "trajectory dataset and recover its parameters.")
    sub = parser.add_subparsers(dest="command", required=True)
    fit = sub.add_parser("fit", help="train on one dataset")
    fit.add_argument("--data", required=True, metavar="CSV",
                     help="trajectory dataset (sidecar JSON found next to it)")
    fit.add_argument("--sidecar", metavar="JSON", help="explicit sidecar path")
    fit.add_argument("--out", default="out", metavar="DIR")
    fit.add_argument("--epochs", type=int, default=None)
    fit.add_argument("--lbfgs-iters", type=int, default=None)
    fit.add_argument("--collocation", type=int, default=None)
    fit.add_argument("--lambda-balance", type=float, default=None)
    fit.add_argument("--lr", type=float, default=None)
    fit.add_argument("--hidden", metavar="W1,W2,...",
                     help="hidden layer widths, comma separated")
    fit.add_argument("--parameter-set", choices=("core", "extended"))
    fit.add_argument("--burn-in", type=int, default=None)
    fit.add_argument("--restarts", type=int, default=None)
    fit.add_argument("--seed", type=int, default=None)
    return parser


def _config_from_args(args: argparse.Namespace) -> DinnConfig:
    overrides = {}
    for attr, key in (("epochs", "epochs"), ("lbfgs_iters", "lbfgs_iters"),
                      ("collocation", "collocation"),
                      ("lambda_balance", "lambda_balance"), ("lr", "lr"),
                      ("parameter_set", "parameter_set"),
                      ("burn_in", "burn_in"), ("restarts", "restarts"),
                      ("seed", "seed")):
        value = getattr(args, attr)
        if value is not None:
            overrides[key] = value
    if args.hidden is not None:
        try:
            overrides["hidden"] = tuple(int(w) for w in args.hidden.split(","))
        except ValueError as err:
            raise ValueError(f"--hidden: {err}") from err
    return DinnConfig(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        dataset = load_dataset(args.data, args.sidecar)
    except (ValueError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = train(dataset, cfg)
    except TrainingDivergence as err:
        print(f"training diverged: {err}", file=sys.stderr)
        return EXIT_NUMERICAL

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    metrics = evaluate(result, dataset, true_params=dataset.params)
    metrics.to_json(outdir / "metrics.json")
    export_predictions(result, dataset, outdir / "predictions.csv")
    print(f"wrote {outdir / 'metrics.json'}")
    print(f"wrote {outdir / 'predictions.csv'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
