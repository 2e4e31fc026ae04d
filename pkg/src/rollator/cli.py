"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Every command accepts ``--config FILE.json`` whose keys are option names
(dashes or underscores); options given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .core.io import (
    load_csv,
    read_feature_csv,
    read_labels_csv,
    write_feature_csv,
    write_labels_csv,
    write_raw_csv,
)
from .core.types import LabelSet
from .errors import DataError, NumericalError
from .evaluation import (
    DEFAULT_WINDOW,
    DEFAULT_WINDOWS,
    FAMILIES,
    PROTOCOLS,
    Recipe,
    evaluate_many,
    featurize,
    fit_recipe,
    loocv,
    predict_labels,
    write_crossval,
    write_evaluation,
)
from .features import MODES

log = logging.getLogger("rollator")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
LABEL_SETS = ("exp1", "exp2", "exp2-no-trs")
RECIPE_DEFAULTS = Recipe()


def label_set_from(name: str) -> LabelSet:
    """A named set or a comma-separated list of behaviour codes."""
    if name == "exp1":
        return LabelSet.experiment1()
    if name == "exp2":
        return LabelSet.experiment2()
    if name == "exp2-no-trs":
        return LabelSet.experiment2(include_transfers=False)
    return LabelSet([c.strip() for c in name.split(",") if c.strip()])


def _windows(text: str) -> tuple:
    try:
        out = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError("windows must be non-negative integers")
    return out


def participant_of(path: Path) -> str:
    """``p03_run1.csv`` and ``p03.csv`` both belong to participant ``p03``."""
    return path.stem.split("_")[0]


def _add_labels(p):
    p.add_argument("--labels", default="exp2",
                   help=f"label set: one of {', '.join(LABEL_SETS)} or comma-separated codes")


def _add_recipe(p, with_mode: bool):
    d = RECIPE_DEFAULTS
    p.add_argument("--model", choices=FAMILIES, default=d.family, help="model family")
    if with_mode:
        p.add_argument("--mode", choices=MODES, default=d.mode, help="feature set")
        p.add_argument("--ticks-per-meter", type=float, default=d.ticks_per_meter,
                       help="wheel-encoder calibration constant")
    g = p.add_argument_group("HMM options")
    g.add_argument("--D", type=int, default=d.D, help="equal-frequency bins per feature")
    g.add_argument("--transitions", choices=("learned", "persistence"), default=d.transitions,
                   help="hmm-ml transition model")
    g.add_argument("--tau", type=float, default=d.tau, help="persistence parameter")
    g.add_argument("--prior", choices=("learned", "uniform", "initial"), default=d.prior,
                   help="hmm-ml initial distribution")
    g.add_argument("--pseudocount", type=float, default=d.pseudocount,
                   help="additive smoothing for hmm-ml counts (epsilon)")
    g.add_argument("--states", type=int, default=d.num_states,
                   help="latent states L for hmm-em / hmm-gibbs; None means one per label")
    g.add_argument("--restarts", type=int, default=d.restarts, help="EM random restarts R")
    g.add_argument("--em-iters", type=int, default=d.em_iters, help="EM iterations per restart")
    g.add_argument("--em-tol", type=float, default=d.em_tol,
                   help="EM log-likelihood improvement threshold")
    g.add_argument("--em-smoothing", type=float, default=d.em_smoothing,
                   help="uniform mixing weight applied to EM tables")
    g.add_argument("--sweeps", type=int, default=d.sweeps, help="Gibbs sweeps")
    g.add_argument("--burn-in", type=int, default=d.burn_in, help="Gibbs burn-in sweeps")
    c = p.add_argument_group("CRF options")
    c.add_argument("--sigma2", type=float, default=d.sigma2, help="Gaussian prior variance")
    c.add_argument("--crf-iters", type=int, default=d.crf_iters,
                   help="conjugate-gradient iterations")
    c.add_argument("--overlap-cutoff", type=float, default=d.overlap_cutoff,
                   help="histogram overlap above which a threshold falls back to the mean")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def recipe_from(args) -> Recipe:
    return Recipe(family=args.model, mode=getattr(args, "mode", RECIPE_DEFAULTS.mode),
                  D=args.D, transitions=args.transitions, tau=args.tau, prior=args.prior,
                  pseudocount=args.pseudocount, num_states=args.states, restarts=args.restarts,
                  em_iters=args.em_iters, em_tol=args.em_tol, em_smoothing=args.em_smoothing,
                  sweeps=args.sweeps, burn_in=args.burn_in, sigma2=args.sigma2,
                  crf_iters=args.crf_iters, overlap_cutoff=args.overlap_cutoff,
                  ticks_per_meter=getattr(args, "ticks_per_meter",
                                          RECIPE_DEFAULTS.ticks_per_meter))


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="rollator", formatter_class=fmt,
                                     description="Behaviour recognition for instrumented walkers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=fmt)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON file of option defaults; command-line flags win")
        p.add_argument("-v", "--verbose", action="store_true", default=False,
                       help="log progress to stderr")
        return p

    p = command("featurize", "Raw sensor CSVs to feature CSVs.")
    p.add_argument("inputs", nargs="+", type=Path, help="raw CSV files")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--mode", choices=MODES, default=RECIPE_DEFAULTS.mode, help="feature set")
    p.add_argument("--ticks-per-meter", type=float, default=RECIPE_DEFAULTS.ticks_per_meter,
                   help="wheel-encoder calibration constant")
    p.add_argument("--calibrate-from", nargs="+", type=Path, default=None,
                   help="raw CSVs whose load range calibrates NL features "
                        "(default: each participant's own inputs)")

    p = command("train", "Fit a model on feature CSVs.")
    p.add_argument("inputs", nargs="+", type=Path,
                   help="feature CSVs, labeled unless the model is hmm-em or hmm-gibbs")
    p.add_argument("--out", type=Path, required=True, help="model JSON path")
    p.add_argument("--trace", type=Path, default=None, help="optional training-trace CSV")
    _add_labels(p)
    _add_recipe(p, with_mode=False)

    p = command("predict", "Label feature CSVs with a trained model.")
    p.add_argument("inputs", nargs="+", type=Path, help="feature CSVs")
    p.add_argument("--model-file", type=Path, required=True, help="model JSON")
    p.add_argument("--out", type=Path, required=True,
                   help="prediction CSV path (one input) or directory (several)")

    p = command("evaluate", "Score predicted labels against ground truth.")
    p.add_argument("--actual", nargs="+", type=Path, required=True,
                   help="CSVs with a ground-truth 'label' column")
    p.add_argument("--predicted", nargs="+", type=Path, required=True,
                   help="prediction CSVs, in the same order")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW,
                   help="window for metrics.json and confusion.csv")
    p.add_argument("--windows", type=_windows, default=DEFAULT_WINDOWS,
                   help="comma-separated window grid for window_sweep.csv")
    _add_labels(p)

    p = command("simulate", "Generate labeled raw CSVs from course scripts.")
    p.add_argument("--script", type=Path, default=None,
                   help="course script JSON (default: built-in course)")
    p.add_argument("--course", choices=("exp1", "exp2"), default="exp2", help="built-in course")
    p.add_argument("--participants", type=int, default=6, help="participants for built-in course")
    p.add_argument("--runs", type=int, default=1, help="runs per participant")
    p.add_argument("--noise", type=float, default=1.0, help="noise level")
    p.add_argument("--emissions", type=Path, default=None,
                   help="emission table JSON (default: bundled table)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = command("crossval", "Leave-one-participant-out cross-validation on raw CSVs.")
    p.add_argument("data_dir", type=Path,
                   help="directory of labeled raw CSVs named <participant>[_<run>].csv")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--protocol", choices=PROTOCOLS, default="exp2", help="fold protocol")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="reporting window")
    p.add_argument("--windows", type=_windows, default=DEFAULT_WINDOWS,
                   help="comma-separated window grid")
    p.add_argument("--workers", type=int, default=1, help="folds run in parallel")
    _add_labels(p)
    _add_recipe(p, with_mode=True)
    return parser


def _apply_config(parser, argv):
    """Parse ``argv``, first installing any ``--config`` file as subcommand defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub.choices), None)
    if known.config is None or command is None:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(known.config.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read config {known.config}: {e}") from None
    if not isinstance(cfg, dict):
        raise DataError("config must be a JSON object")
    subparser = sub.choices[command]
    actions = {a.dest: a for a in subparser._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - set(actions) - {"config"})
    if unknown:
        parser.error(f"unknown config keys for {command}: {', '.join(unknown)}")
    for key, value in cfg.items():
        action = actions[key]
        action.required = False
        if isinstance(value, list) and action.dest == "windows":
            value = tuple(int(x) for x in value)
        elif action.type is Path:
            value = [Path(x) for x in value] if isinstance(value, list) else Path(value)
        if action.nargs == "+" and not action.option_strings:
            action.nargs = "*"  # positional list supplied by the config
        cfg[key] = value
    subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def _cmd_featurize(args):
    raws = [load_csv(p, participant_id=participant_of(p)) for p in args.inputs]
    recipe = Recipe(mode=args.mode, ticks_per_meter=args.ticks_per_meter)
    calib = None
    if args.calibrate_from:
        cal = [load_csv(p, participant_id=participant_of(p)) for p in args.calibrate_from]
        calib = {r.participant_id: cal for r in raws}
    for path, feat in zip(args.inputs, featurize(raws, recipe, calib)):
        write_feature_csv(feat, args.out / path.name)
        log.info("wrote %s", args.out / path.name)


def _cmd_train(args):
    from .core.persist import save_model, write_crf_trace, write_em_trace, write_gibbs_trace

    recipe = recipe_from(args)
    label_set = label_set_from(args.labels)
    data = [read_feature_csv(p, participant_of(p)) for p in args.inputs]
    out = fit_recipe(recipe, data, label_set, args.seed)
    save_model(out.model, args.out)
    log.info("wrote %s", args.out)
    if args.trace is not None:
        if out.trace_kind is None:
            raise DataError(f"{recipe.family} training is closed-form and has no trace")
        writer = {"em": write_em_trace, "gibbs": write_gibbs_trace, "crf": write_crf_trace}
        writer[out.trace_kind](out.trace, args.trace)


def _cmd_predict(args):
    from .core.persist import load_model

    model = load_model(args.model_file)
    many = len(args.inputs) > 1
    for p in args.inputs:
        labels = predict_labels(model, read_feature_csv(p, participant_of(p)))
        out = args.out / p.name if many else args.out
        write_labels_csv(labels, out)
        log.info("wrote %s", out)


def _cmd_evaluate(args):
    if len(args.actual) != len(args.predicted):
        raise DataError("--actual and --predicted need the same number of files")
    label_set = label_set_from(args.labels)
    actual = [read_labels_csv(p) for p in args.actual]
    predicted = [read_labels_csv(p) for p in args.predicted]
    windows = tuple(sorted(set(args.windows) | {args.window}))
    reports = evaluate_many(actual, predicted, label_set, windows)
    write_evaluation(reports, args.window, args.out)
    r = reports[args.window]
    print(f"window {args.window}: accuracy {100 * r.accuracy:.2f}%  "
          f"precision (CPT/AT) {r.transitions.cpt_over_at:.3f}  "
          f"recall (CPT/PT) {r.transitions.cpt_over_pt:.3f}")


def _cmd_simulate(args):
    from .simgen import CourseScript, load_emission_table, simulate_course, simulate_participants

    table = load_emission_table(args.emissions)
    if args.script is not None:
        try:
            obj = json.loads(args.script.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"cannot read script {args.script}: {e}") from None
        script = CourseScript.from_json(obj)
        raw = simulate_course(script, table)
        write_raw_csv(raw, args.out / f"{raw.participant_id}.csv")
        return
    if args.participants < 1 or args.runs < 1:
        raise DataError("need at least one participant and one run")
    if args.emissions is not None:
        raise DataError("--emissions applies to --script runs only")
    raws = simulate_participants(args.participants, args.course, args.runs, args.seed, args.noise)
    counts: dict = {}
    for r in raws:
        i = counts.get(r.participant_id, 0)
        counts[r.participant_id] = i + 1
        path = args.out / f"{r.participant_id}_run{i}.csv"
        write_raw_csv(r, path)
        log.info("wrote %s", path)


def _cmd_crossval(args):
    paths = sorted(args.data_dir.glob("*.csv"))
    if not paths:
        raise DataError(f"no CSV files in {args.data_dir}")
    label_set = label_set_from(args.labels)
    raws = [load_csv(p, label_set=label_set, participant_id=participant_of(p)) for p in paths]
    result = loocv(raws, label_set, recipe_from(args), args.protocol, args.windows, args.window,
                   args.seed, args.workers)
    write_crossval(result, args.out)
    for f in result.folds:
        print(f"fold {f.fold.participant}: accuracy "
              f"{100 * f.reports[result.window].accuracy:.2f}% over {f.ticks} ticks")
    print(f"pooled accuracy at window {result.window}: {100 * result.pooled().accuracy:.2f}%")


COMMANDS = {"featurize": _cmd_featurize, "train": _cmd_train, "predict": _cmd_predict,
            "evaluate": _cmd_evaluate, "simulate": _cmd_simulate, "crossval": _cmd_crossval}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except DataError as e:
        print(f"rollator: error: {e}", file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            COMMANDS[args.command](args)
    except DataError as e:
        print(f"rollator: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"rollator: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"rollator: error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
