"""Command-line entry point: ``tsk-cvh {train,predict,experiment,dump-rules,make-synthetic}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from .coop import HIDDEN_VIEW_NAME, CoopConfig, CoopModel
from .dataset import accuracy, load_multiview_csv, write_multiview_csv
from .harness import (BASELINES, ExperimentConfig, emit_report, load_config,
                      select_hyperparameters)
from .pipeline import HiddenConfig, fit_cvh, predict_cvh
from .synthetic import GENERATORS
from .tsk import dump_rules

log = logging.getLogger("tsk_cvh")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _baselines(text):
    if text.strip().lower() == "none":
        return ()
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--schema", required=required, help="JSON schema: view -> columns, plus 'label'")
    p.add_argument("--delimiter", default=",", help="field delimiter (default ',')")


def _add_grid_args(p):
    g = p.add_argument_group("grids (comma-separated; override the config file)")
    g.add_argument("--rule-grid", type=_ints, help="rule counts (default 10,12,...,20)")
    g.add_argument("--hidden-fractions", type=_floats,
                   help="hidden dims as fractions of the smallest view dim (default 0.1,...,0.9)")
    g.add_argument("--lambda1-grid", type=_floats, help="default 1e-3,...,1e3")
    g.add_argument("--lambda2-grid", type=_floats, help="default 1e-3,...,1e3")
    g.add_argument("--lambda3-grid", type=_floats, help="default 1e-3,...,1e3")
    g.add_argument("--beta-grid", type=_floats, help="graph weights (default 1e-3,1e-2,1e-1,1)")
    g.add_argument("--inner-folds", type=int, help="inner CV folds (default 3)")
    g.add_argument("--epsilon", type=int, help="neighbors per sample in the view graphs (default 5)")
    g.add_argument("--h", type=float, help="antecedent spread scale (default 1.0)")
    g.add_argument("--hidden-rules", type=int, help="hidden-view rule count (default: same as visible)")


def _grid_overrides(args) -> dict:
    keys = {"rule_grid": "rule_grid", "hidden_fractions": "hidden_fractions",
            "lambda1_grid": "lambda1_grid", "lambda2_grid": "lambda2_grid",
            "lambda3_grid": "lambda3_grid", "beta_grid": "beta_grid",
            "inner_folds": "inner_folds", "epsilon": "epsilon", "h": "h",
            "hidden_rules": "hidden_rules"}
    return {k: getattr(args, a) for k, a in keys.items() if getattr(args, a, None) is not None}


def _experiment_config(args) -> ExperimentConfig:
    over = _grid_overrides(args)
    over["seed"] = args.seed
    for key in ("folds", "jobs"):
        if getattr(args, key) is not None:
            over[key] = getattr(args, key)
    if args.baselines is not None:
        over["baselines"] = args.baselines
    if args.data is not None:
        over["data_path"] = args.data
    if args.schema is not None:
        over["schema_path"] = args.schema
    if args.out is not None:
        over["output_dir"] = args.out
    if args.config:
        return load_config(args.config, **over)
    return ExperimentConfig(**over)


# --------------------------------------------------------------------------
# subcommands

def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    if not (cfg.data_path and cfg.schema_path):
        raise ValueError("experiment needs --data and --schema (or data_path/schema_path in --config)")
    from .harness import run_experiment
    data = load_multiview_csv(cfg.data_path, cfg.schema_path, delimiter=args.delimiter)
    report = run_experiment(cfg, data)
    out = cfg.output_dir or "results"
    written = emit_report(report, out, delimiter=args.delimiter)
    for method, cols in report.summary.items():
        if "integration" in cols:
            c = cols["integration"]
            print(f"{method}: {c['mean']:.4f} +- {c['std']:.4f}")
    print(f"wrote {len(written)} files to {out}")
    return 0


def cmd_train(args) -> int:
    data = load_multiview_csv(args.data, args.schema, delimiter=args.delimiter)
    if args.tune:
        over = _grid_overrides(args)
        cfg = load_config(args.config, seed=args.seed, **over) if args.config \
            else ExperimentConfig(seed=args.seed, **over)
        sel = select_hyperparameters(data, cfg, args.seed)
        log.info("selected rules=%d lambdas=(%g, %g, %g) rank=%d beta=%g", sel.rules,
                 sel.lambda1, sel.lambda2, sel.lambda3, sel.hidden_rank, sel.beta)
        rules, lams = sel.rules, (sel.lambda1, sel.lambda2, sel.lambda3)
        rank, beta = (None if args.no_hidden else sel.hidden_rank), sel.beta
        h, eps, hidden_rules = cfg.h, cfg.epsilon, cfg.hidden_rules
    else:
        rules, lams = args.rules, (args.lambda1, args.lambda2, args.lambda3)
        beta, h, hidden_rules = args.beta, args.h or 1.0, args.hidden_rules
        eps = args.epsilon or 5
        if args.no_hidden:
            rank = None
        elif args.hidden_dim is not None:
            rank = args.hidden_dim
        else:
            rank = max(1, math.ceil(round(args.hidden_fraction * min(data.dims), 9)))
    coop = CoopConfig(lambda1=lams[0], lambda2=lams[1], lambda3=lams[2], rules=rules,
                      hidden_rules=hidden_rules, h=h, max_outer_iter=args.max_outer_iter,
                      seed=args.seed)
    hidden = None if rank is None else HiddenConfig(rank, beta=beta, epsilon=eps)
    model = fit_cvh(data, coop, hidden)
    model.save(args.out)
    print(f"train accuracy {model.meta['train_accuracy']:.4f}; "
          f"weights {dict(zip(model.view_names, (round(float(w), 4) for w in model.weights)))}")
    print(f"model written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = CoopModel.load(args.model)
    data = load_multiview_csv(args.data, args.schema, delimiter=args.delimiter,
                              require_label=False)
    pred = predict_cvh(model, data)
    header = ["row", "predicted"] + [f"score_{c}" for c in model.class_list]
    rows = [[i + 1, lab] + [repr(float(v)) for v in pred.scores[i]]
            for i, lab in enumerate(pred.labels)]
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, delimiter=args.delimiter, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    if data.labels is not None:
        print(f"accuracy {accuracy(pred.labels, data.labels):.6f}", file=sys.stderr)
    return 0


def rule_texts(model: CoopModel, precision: int = 6) -> dict:
    """Rule dump text per view name (hidden view last)."""
    names = list(model.view_names) or [f"view{k + 1}" for k in range(len(model.rule_bases))]
    feats = [list(f) for f in model.feature_names[:model.n_visible]]
    if model.has_hidden:
        if len(names) == model.n_visible:
            names.append(HIDDEN_VIEW_NAME)
        feats.append([f"h{j + 1}" for j in range(model.rule_bases[-1].antecedents.n_inputs)])
    while len(feats) < len(model.rule_bases):
        feats.append(None)
    return {name: dump_rules(rb, f or None, name, precision)
            for name, rb, f in zip(names, model.rule_bases, feats)}


def cmd_dump_rules(args) -> int:
    texts = rule_texts(CoopModel.load(args.model), args.precision)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in texts.items():
            (out / f"{name}.txt").write_text(text, encoding="utf-8")
        print(f"wrote {len(texts)} rule files to {out}")
    else:
        sys.stdout.write("\n".join(texts.values()))
    return 0


def cmd_make_synthetic(args) -> int:
    data = GENERATORS[args.kind](n=args.n, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_multiview_csv(data, out / "data.csv", out / "schema.json")
    print(f"wrote {data.n_samples} rows to {out / 'data.csv'} and {out / 'schema.json'}")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsk-cvh", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment", help="nested cross-validation with baselines")
    _add_data_args(p, required=False)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, required=True, help="master seed (required)")
    p.add_argument("--folds", type=int, help="outer CV folds (default 5)")
    p.add_argument("--baselines", type=_baselines,
                   help=f"comma-separated subset of {','.join(BASELINES)}, or 'none' (default all)")
    p.add_argument("--out", help="output directory (default ./results)")
    p.add_argument("--jobs", type=int, help="parallel fold workers (default 1)")
    _add_grid_args(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("train", help="fit one model and save it as JSON")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--seed", type=int, default=0, help="default 0")
    p.add_argument("--rules", type=int, default=10, help="rules per visible view (default 10)")
    p.add_argument("--lambda1", type=float, default=1.0, help="entropy weight (default 1)")
    p.add_argument("--lambda2", type=float, default=1.0, help="ridge weight (default 1)")
    p.add_argument("--lambda3", type=float, default=1.0, help="cooperation weight (default 1)")
    p.add_argument("--beta", type=float, default=0.01, help="graph weight (default 0.01)")
    p.add_argument("--max-outer-iter", type=int, default=50, help="default 50")
    hid = p.add_mutually_exclusive_group()
    hid.add_argument("--no-hidden", action="store_true", help="visible views only")
    hid.add_argument("--hidden-dim", type=int, help="hidden dimension")
    hid.add_argument("--hidden-fraction", type=float, default=0.5,
                     help="hidden dim as a fraction of the smallest view dim (default 0.5)")
    p.add_argument("--tune", action="store_true",
                   help="select rules, lambdas, hidden dim and beta by inner CV first")
    p.add_argument("--config", help="JSON file with grids for --tune")
    _add_grid_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--out", help="predictions CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("dump-rules", help="print the fuzzy rules of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", help="write one <view>.txt per view instead of printing")
    p.add_argument("--precision", type=int, default=6, help="significant digits (default 6)")
    p.set_defaults(func=cmd_dump_rules)

    p = sub.add_parser("make-synthetic", help="write a seeded synthetic dataset")
    p.add_argument("--kind", choices=sorted(GENERATORS), default="latent")
    p.add_argument("--n", type=int, default=200, help="rows (default 200)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_make_synthetic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
