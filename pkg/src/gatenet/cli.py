"""Command-line entry point.

Each subcommand writes its outputs plus ``manifest.json`` (arguments,
config snapshot, seed, version, timings) into the output directory.
``gatenet --replay out/manifest.json`` reruns a recorded command.

Exit codes: 0 success, 2 usage, 3 configuration, 4 I/O, 5 numerical or
training failure.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .config import load_config
from .exceptions import (ConfigError, GateError, ModelFileError, NumericalError,
                         StructuralError)

logger = logging.getLogger("gatenet")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so ``main`` controls the exit status."""

    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser():
    parser = _Parser(prog="gatenet", description=__doc__.split("\n")[0])
    parser.add_argument("--replay", metavar="MANIFEST",
                        help="rerun the command recorded in a manifest")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML run config (default: $GATENET_CONFIG)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="random seed (overrides config)")
        return p

    p = command("simulate", "write the four-family corpus")
    p.add_argument("--per-family", type=int)
    p.add_argument("--n-nodes", type=int)
    p.add_argument("--case", type=int, choices=(1, 2))

    p = command("train", "fit GATE or reGATE")
    p.add_argument("--mode", choices=("gate", "regate"), default="gate")
    p.add_argument("--corpus")
    p.add_argument("--distance")
    p.add_argument("--epochs", type=int)

    for name, help_text in (("embed", "posterior mean codes"),
                            ("predict", "trait predictions")):
        p = command(name, help_text)
        p.add_argument("--model", required=True)
        p.add_argument("--corpus")

    p = command("generate", "draw graphs from the prior or from p(A | y)")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--y", type=float, help="condition on this trait value")

    p = command("ppc", "posterior predictive check")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus")
    p.add_argument("--n-draws", type=int)

    p = command("band", "summary bands over a trait grid")
    p.add_argument("--model", required=True)
    p.add_argument("--n-per-y", type=int)

    p = command("diff", "top-k mean edge differences")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", help="traits for the default 10%%/90%% quantiles")
    p.add_argument("--y-low", type=float)
    p.add_argument("--y-high", type=float)
    p.add_argument("--k", type=int)

    p = command("eval", "cross-validated method comparison")
    p.add_argument("--case", type=int, choices=(1, 2))
    p.add_argument("--methods", nargs="+")
    return parser


# -- helpers -------------------------------------------------------------------

def _config(args):
    cfg = load_config(args.config)
    if args.out:
        cfg.output = args.out
    if args.seed is not None:
        cfg.data.seed = args.seed
        cfg.optim.random_state = args.seed
    return cfg


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                             for x in row])


def _corpus(cfg, path):
    from .synth import read_corpus, simulate_corpus

    path = path or cfg.data.corpus
    if path:
        return read_corpus(path)
    d = cfg.data
    return simulate_corpus(per_family=d.per_family, n_nodes=d.n_nodes, seed=d.seed,
                           case=d.trait_case, n_ones=d.n_ones, noise_sd=d.noise_sd)


def _load(path):
    from .persistence import load_model

    return load_model(path)


def _require_supervised(model, command):
    from .regate import ReGATE

    if not isinstance(model, ReGATE):
        raise StructuralError(f"{command} needs a model trained with --mode regate")


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(args, cfg, out):
    from .synth import simulate_corpus, write_corpus

    d = cfg.data
    corpus = simulate_corpus(
        per_family=args.per_family or d.per_family, n_nodes=args.n_nodes or d.n_nodes,
        seed=d.seed, case=args.case or d.trait_case, n_ones=d.n_ones,
        noise_sd=d.noise_sd)
    write_corpus(corpus, out)
    return {"n_graphs": len(corpus.graphs)}


def cmd_train(args, cfg, out):
    from .gate import GATE
    from .graphs import read_distance_csv
    from .persistence import save_model
    from .regate import ReGATE

    corpus = _corpus(cfg, args.corpus)
    supervised = args.mode == "regate"
    params = cfg.estimator_params(supervised)
    if args.epochs is not None:
        params["n_epochs"] = args.epochs
    distance_path = args.distance or cfg.data.distance
    distance = read_distance_csv(distance_path) if distance_path else None
    if supervised:
        model = ReGATE(**params).fit(corpus.graphs, corpus.traits, distance=distance)
    else:
        model = GATE(**params).fit(corpus.graphs, distance=distance)
    save_model(model, os.path.join(out, "model.gate"))
    _write_rows(os.path.join(out, "loss.csv"), ["epoch", "loss"],
                enumerate(model.loss_curve_))
    return {"final_loss": model.loss_curve_[-1] if model.loss_curve_ else None}


def cmd_embed(args, cfg, out):
    from .plotting import scatter

    model = _load(args.model)
    corpus = _corpus(cfg, args.corpus)
    codes = model.transform(corpus.graphs)
    k = codes.shape[1]
    _write_rows(os.path.join(out, "codes.csv"),
                ["sample_id", "family"] + [f"z{j}" for j in range(k)],
                ([f"g{i:04d}", corpus.families[i], *codes[i]] for i in range(len(codes))))
    # 2-D principal-component view of the codes
    centered = codes - codes.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    pcs = centered @ vt[:2].T
    if pcs.shape[1] == 1:
        pcs = np.hstack([pcs, np.zeros_like(pcs)])
    scatter(pcs[:, 0], pcs[:, 1], os.path.join(out, "codes_pca"), xlabel="PC1",
            ylabel="PC2", labels=corpus.families)
    return {"n_codes": len(codes)}


def cmd_predict(args, cfg, out):
    from .evaluation import mse
    from .plotting import scatter

    model = _load(args.model)
    _require_supervised(model, "predict")
    corpus = _corpus(cfg, args.corpus)
    pred = model.predict(corpus.graphs)
    _write_rows(os.path.join(out, "predictions.csv"), ["sample_id", "predicted", "actual"],
                ((f"g{i:04d}", pred[i], corpus.traits[i]) for i in range(len(pred))))
    scatter(corpus.traits, pred, os.path.join(out, "predicted_vs_true"), xlabel="true",
            ylabel="predicted", diagonal=True)
    return {"mse": mse(pred, corpus.traits)}


def cmd_generate(args, cfg, out):
    from .graphs import write_graph_csv

    model = _load(args.model)
    seed = cfg.optim.random_state
    if args.y is None:
        graphs = model.sample(args.n, random_state=seed)
    else:
        _require_supervised(model, "generate --y")
        graphs = model.conditional_sample(args.y, args.n, random_state=seed)
    for i, g in enumerate(graphs):
        write_graph_csv(g, os.path.join(out, f"gen{i:04d}.csv"))
    return {"n_graphs": len(graphs)}


def cmd_ppc(args, cfg, out):
    from .inference import posterior_predictive_check
    from .plotting import violin_pair

    model = _load(args.model)
    corpus = _corpus(cfg, args.corpus)
    pairs = posterior_predictive_check(
        model, corpus.graphs, n_draws=args.n_draws or cfg.inference.n_draws,
        random_state=cfg.optim.random_state, binarize=cfg.inference.binarize)
    rows, info = [], {}
    for measure, (obs, gen) in pairs.items():
        lo, hi = gen.quantile([0.025, 0.975])
        info[measure] = {"observed_median": obs.median(), "generated_lower": float(lo),
                         "generated_upper": float(hi), "dropped": gen.n_dropped}
        rows += [(measure, "observed", v) for v in obs.samples]
        rows += [(measure, "generated", v) for v in gen.samples]
        violin_pair(obs.samples, gen.samples, os.path.join(out, f"ppc_{measure}"),
                    ylabel=measure)
    _write_rows(os.path.join(out, "ppc.csv"), ["measure", "source", "value"], rows)
    return info


def cmd_band(args, cfg, out):
    from .inference import conditional_band, write_band_csv
    from .plotting import line_with_band

    model = _load(args.model)
    _require_supervised(model, "band")
    inf = cfg.inference
    bands = conditional_band(model, inf.y_grid, n_per_y=args.n_per_y or inf.n_per_y,
                             quantiles=tuple(inf.quantiles),
                             random_state=cfg.optim.random_state,
                             binarize=inf.binarize)
    write_band_csv(bands, os.path.join(out, "band.csv"))
    for measure, b in bands.items():
        line_with_band(b.y_grid, b.mean, b.lower, b.upper,
                       os.path.join(out, f"band_{measure}"), ylabel=measure)
    return {"flagged": {m: int(b.flagged.sum()) for m, b in bands.items()}}


def cmd_diff(args, cfg, out):
    from .inference import mean_difference_topk, write_edge_delta_csv

    model = _load(args.model)
    _require_supervised(model, "diff")
    inf = cfg.inference
    y_low = args.y_low if args.y_low is not None else inf.y_low
    y_high = args.y_high if args.y_high is not None else inf.y_high
    if y_low is None or y_high is None:
        traits = _corpus(cfg, args.corpus).traits
        q_low, q_high = np.quantile(traits, [0.1, 0.9])
        y_low = float(q_low) if y_low is None else y_low
        y_high = float(q_high) if y_high is None else y_high
    if not y_low < y_high:
        raise StructuralError("need y_low < y_high")
    pos, neg = mean_difference_topk(model, y_low, y_high, n=inf.n_diff,
                                    k=args.k or inf.top_k,
                                    random_state=cfg.optim.random_state)
    write_edge_delta_csv(pos, neg, os.path.join(out, "edge_delta.csv"))
    return {"y_low": y_low, "y_high": y_high, "n_positive": len(pos),
            "n_negative": len(neg)}


def cmd_eval(args, cfg, out):
    from .evaluation import StudyConfig, run_simulation_study
    from .plotting import scatter

    d, e = cfg.data, cfg.eval
    model = cfg.estimator_params(True)
    model.pop("edge_freq_threshold")
    study = StudyConfig(per_family=d.per_family, n_nodes=d.n_nodes,
                        trait_case=args.case or d.trait_case, corpus_seed=d.seed,
                        n_folds=e.n_folds, fold_seed=e.fold_seed,
                        edge_freq_threshold=d.edge_freq_threshold,
                        pca_components=e.pca_components,
                        methods=tuple(args.methods or e.methods), model=model)
    report = run_simulation_study(study)
    report.write_csv(os.path.join(out, "eval_report.csv"))
    for method, pred in report.predictions.items():
        scatter(report.actual, pred, os.path.join(out, f"predicted_vs_true_{method}"),
                xlabel="true", ylabel="predicted", diagonal=True)
    return {m: {k: float(v) for k, v in agg.items() if k != "seconds"}
            for m, agg in report.summary().items()}


COMMANDS = {
    "simulate": cmd_simulate, "train": cmd_train, "embed": cmd_embed,
    "predict": cmd_predict, "generate": cmd_generate, "ppc": cmd_ppc,
    "band": cmd_band, "diff": cmd_diff, "eval": cmd_eval,
}


def _run(argv):
    args = build_parser().parse_args(argv)
    if args.replay:
        try:
            with open(args.replay) as fh:
                recorded = json.load(fh)["argv"]
        except (OSError, ValueError, KeyError) as exc:
            raise ModelFileError(f"cannot replay {args.replay}: {exc}") from exc
        return _run(recorded)
    if args.command is None:
        raise _UsageError("a subcommand is required")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(args)
    out = cfg.output
    os.makedirs(out, exist_ok=True)
    start = time.perf_counter()
    result = COMMANDS[args.command](args, cfg, out)
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "version": __version__,
        "seed": cfg.optim.random_state,
        "config": cfg.to_dict(),
        "result": result,
        "seconds": time.perf_counter() - start,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return EXIT_OK


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _run(argv)
    except _UsageError as exc:
        print(f"gatenet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"gatenet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelFileError, OSError) as exc:
        print(f"gatenet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"gatenet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except StructuralError as exc:
        print(f"gatenet: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GateError as exc:
        print(f"gatenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
