"""Command-line entry point: generate data, train, predict, score with DTW.

Commands mirror the workflow end to end:

    pournet synth     --n 200 --seed 0 --noise 0.01 --out data.jsonl
    pournet train     --data data.jsonl --cell gru --head tanh \
                      --out-model model.npz --out-losses losses.csv
    pournet predict   --model model.npz --data test.jsonl --out preds/
    pournet eval-dtw  --model model.npz --data test.jsonl --out dtw/
    pournet gradcheck --seed 7
    pournet dtw       --a curve1.txt --b curve2.txt --exact
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import load_dataset, save_dataset
from .dtw import dtw_exact, export_alignment, fastdtw, score_testset
from .gradcheck import check_network_gradients
from .network import CellKind, NetworkConfig, load_checkpoint, save_checkpoint
from .synth import SynthParams, generate_dataset
from .training import (TrainConfig, evaluate_model, export_loss_curve,
                       export_prediction, predict, train)

CELLS = ("lstm", "gru")
HEADS = ("sigmoid", "linear", "tanh")


class UsageError(ValueError):
    """Flag combination argparse cannot express; maps to exit code 2."""


def _ensure_parent(path) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return str(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pournet",
        description="Learn and evaluate pouring weight-curve predictors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic pouring dataset")
    p.add_argument("--n", type=int, default=200,
                   help="number of sequences (default: 200)")
    p.add_argument("--seed", type=int, default=0,
                   help="generator seed (default: 0)")
    p.add_argument("--noise", type=float, default=0.01,
                   help="observation noise stddev in lbf (default: 0.01)")
    p.add_argument("--t-min", type=int, default=20,
                   help="shortest sequence length (default: 20)")
    p.add_argument("--t-max", type=int, default=50,
                   help="longest sequence length (default: 50)")
    p.add_argument("--out", required=True, help="output dataset file")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train one variant or all six")
    p.add_argument("--data", required=True, help="training dataset file")
    p.add_argument("--cell", choices=CELLS, help="recurrent cell kind")
    p.add_argument("--head", choices=HEADS, help="output activation")
    p.add_argument("--epochs", type=int, default=150,
                   help="training epochs (default: 150)")
    p.add_argument("--lr", type=float, default=0.01,
                   help="Adam learning rate (default: 0.01)")
    p.add_argument("--batch-size", type=int, default=32,
                   help="mini-batch size (default: 32)")
    p.add_argument("--seed", type=int, default=0,
                   help="split/init/shuffle seed (default: 0)")
    p.add_argument("--out-model", required=True,
                   help="checkpoint path (prefix with --all-variants)")
    p.add_argument("--out-losses", required=True,
                   help="loss-curve CSV path (prefix with --all-variants)")
    p.add_argument("--all-variants", action="store_true",
                   help="train every cell/head combination sequentially")
    p.add_argument("--unmasked-loss", action="store_true",
                   help="let padded timesteps count toward the loss")
    p.add_argument("--keep-best-val", action="store_true",
                   help="return the best-validation epoch instead of the last")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="emit per-sequence prediction files")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="dataset file to predict")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval-dtw", help="score predictions with FastDTW")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="dataset file to score")
    p.add_argument("--radius", type=int, default=1,
                   help="FastDTW window radius (default: 1)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_eval_dtw)

    p = sub.add_parser("gradcheck",
                       help="verify BPTT against finite differences")
    p.add_argument("--seed", type=int, default=0,
                   help="batch/init seed (default: 0)")
    p.add_argument("--eps", type=float, default=1e-5,
                   help="finite-difference step (default: 1e-5)")
    p.add_argument("--tol", type=float, default=1e-4,
                   help="max relative error allowed (default: 1e-4)")
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("dtw", help="distance between two curve files")
    p.add_argument("--a", required=True, help="text file, one number per line")
    p.add_argument("--b", required=True, help="text file, one number per line")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true",
                       help="full dynamic program instead of FastDTW")
    group.add_argument("--radius", type=int, default=1,
                       help="FastDTW window radius (default: 1)")
    p.set_defaults(func=_cmd_dtw)
    return parser


def _cmd_synth(args) -> int:
    params = SynthParams(num_sequences=args.n, seed=args.seed,
                         noise_std=args.noise,
                         length_range=(args.t_min, args.t_max))
    seqs = generate_dataset(params)
    save_dataset(seqs, _ensure_parent(args.out))
    print(f"wrote {len(seqs)} sequences to {args.out}")
    return 0


def _variant_paths(base: str, suffix: str, cell: str, head: str) -> str:
    return f"{base}_{cell}_{head}{suffix}"


def _cmd_train(args) -> int:
    if args.all_variants:
        variants = [(c, h) for c in CELLS for h in HEADS]
    else:
        if not (args.cell and args.head):
            raise UsageError("--cell and --head are required "
                             "unless --all-variants is set")
        variants = [(args.cell, args.head)]
    dataset = load_dataset(args.data)
    for cell, head in variants:
        net = NetworkConfig(cell_kind=CellKind(cell), output_activation=head)
        config = TrainConfig(network=net, epochs=args.epochs, lr=args.lr,
                             batch_size=args.batch_size, seed=args.seed,
                             masked_loss=not args.unmasked_loss,
                             keep_best_validation=args.keep_best_val,
                             data_path=args.data)
        params, norm, report = train(dataset, config)
        if args.all_variants:
            model_path = _variant_paths(args.out_model, ".npz", cell, head)
            losses_path = _variant_paths(args.out_losses, ".csv", cell, head)
        else:
            model_path, losses_path = args.out_model, args.out_losses
        save_checkpoint(_ensure_parent(model_path), params, net, norm)
        export_loss_curve(report, _ensure_parent(losses_path))
        print(f"{cell}-{head}: train {report.train_losses[-1]:.6g} "
              f"val {report.val_losses[-1]:.6g} "
              f"test {report.final_test_loss:.6g} -> {model_path}")
    return 0


def _cmd_predict(args) -> int:
    params, net, norm = load_checkpoint(args.model)
    seqs = load_dataset(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for seq in seqs:
        curve = predict(params, net, norm, seq)
        export_prediction(seq, curve, out_dir / f"pred_{seq.id}.csv")
    print(f"wrote {len(seqs)} prediction files to {out_dir}")
    return 0


def _cmd_eval_dtw(args) -> int:
    params, net, norm = load_checkpoint(args.model)
    seqs = load_dataset(args.data)
    pairs = evaluate_model(params, net, norm, seqs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for seq, (pred_curve, actual_curve) in zip(seqs, pairs):
        result = fastdtw(pred_curve, actual_curve, args.radius)
        export_alignment(result, pred_curve, actual_curve,
                         out_dir / f"align_{seq.id}.csv")
    score = score_testset(pairs, args.radius)
    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("id,distance\n")
        for seq, distance in zip(seqs, score.distances):
            fh.write(f"{seq.id},{distance!r}\n")
        fh.write(f"mean,{score.mean!r}\n")
        fh.write(f"median,{score.median!r}\n")
        fh.write(f"min,{score.min!r}\n")
        fh.write(f"max,{score.max!r}\n")
    print(f"scored {len(pairs)} sequences: mean {score.mean:.6g} "
          f"median {score.median:.6g} -> {summary_path}")
    return 0


def _cmd_gradcheck(args) -> int:
    worst = 0.0
    for cell in CELLS:
        for head in HEADS:
            err = check_network_gradients(CellKind(cell), head,
                                          seed=args.seed, epsilon=args.eps)
            print(f"{cell}-{head}: max relative error {err:.3e}")
            worst = max(worst, err)
    if worst > args.tol:
        print(f"error: gradient check failed, {worst:.3e} > {args.tol:.3e}",
              file=sys.stderr)
        return 1
    print(f"gradient check passed at tolerance {args.tol:g}")
    return 0


def _read_curve(path: str):
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path} line {lineno}: not a number: {line!r}")
    return values


def _cmd_dtw(args) -> int:
    a = _read_curve(args.a)
    b = _read_curve(args.b)
    result = dtw_exact(a, b) if args.exact else fastdtw(a, b, args.radius)
    print(repr(result.distance))
    return 0


def run(argv) -> int:
    """Parse and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and usage errors
        return 0 if exc.code is None else int(exc.code)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
