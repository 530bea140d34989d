"""pauseseg command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Failures print one ``pauseseg: error: <kind>: <message>`` line on stderr.
"""

import argparse
import json
import logging
import sys

from pauseseg.alignment import DEFAULT_FRAME_OFFSET_MS, parse_alignment_file, write_rejections
from pauseseg.evalkit import evaluate, format_report, report_json
from pauseseg.mining import (
    DEFAULT_ALPHA_GRID, DEFAULT_MIN_GRID, MiningConfig, format_sweep_tsv, mine_corpus,
    read_partial_file, sweep_thresholds, two_phase_sweep, write_partial_file,
)
from pauseseg.synth import SynthSpec, generate, write_synth
from pauseseg.tagger import (
    STRATEGIES, CrfModel, TrainConfig, complete, complete_then_train, read_segmented, tag_corpus,
    train, write_segmented,
)

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3

log = logging.getLogger("pauseseg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _read_texts(path):
    """Raw sentences, one per line; ASCII spaces are dropped so a segmented
    file can be re-tagged directly."""
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n").replace(" ", "") for line in f if line.strip()]


def _load_alignments(args):
    sents, rejected = parse_alignment_file(args.alignments, strict=not args.no_strict,
                                           default_offset=args.frame_offset)
    if args.rejections:
        write_rejections(rejected, args.rejections)
    if rejected:
        print(f"rejected\t{len(rejected)}", file=sys.stderr)
    return sents


def _train_config(args):
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, patience=args.patience,
                       max_epochs=args.max_epochs, l2=args.l2, seed=args.seed,
                       optimizer=args.optimizer)


def cmd_mine(args):
    sents = _load_alignments(args)
    partials, stats = mine_corpus(sents, MiningConfig(args.min, args.alpha))
    write_partial_file(partials, args.output)
    print(f"sentences\t{stats.sentences}\tpauses\t{stats.boundaries}")


def cmd_sweep(args):
    sents = _load_alignments(args)
    gold_words = read_segmented(args.gold)
    if len(gold_words) != len(sents):
        raise ValueError(f"{len(sents)} alignments but {len(gold_words)} gold sentences")
    gold = {s.id: w for s, w in zip(sents, gold_words)}
    if args.two_phase:
        p1, p2, best_min, best_alpha = two_phase_sweep(sents, gold, args.min_grid, args.alpha_grid)
        text = format_sweep_tsv(p1) + "\n" + format_sweep_tsv(p2)
        print(f"best_min\t{best_min:g}\tbest_alpha\t{best_alpha:g}", file=sys.stderr)
    else:
        text = format_sweep_tsv(sweep_thresholds(sents, gold, args.min_grid, args.alpha_grid))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_synth(args):
    params = {}
    if args.spec:
        with open(args.spec, encoding="utf-8") as f:
            params = json.load(f)
    params["seed"] = args.seed
    if args.noise is not None:
        params["noise"] = args.noise
    spec = SynthSpec.from_dict(params)
    data = generate(spec)
    paths = write_synth(data, spec, args.outdir)
    for k in sorted(paths):
        print(f"{k}\t{paths[k]}")


def cmd_train(args):
    cfg = _train_config(args)
    base = read_segmented(args.base)
    dev = read_segmented(args.dev) if args.dev else None
    needs_partial = args.strategy != "base-only"
    if needs_partial and not args.partial:
        raise UsageError(f"--partial is required for strategy {args.strategy}")
    partial = read_partial_file(args.partial) if needs_partial else []

    if args.strategy == "base-only":
        model = train(base, cfg, dev)
    elif args.strategy == "directly-train":
        model = train(base, cfg, dev, partial=partial)
    else:
        res = complete_then_train(base, partial, cfg, dev,
                                  constrained=args.strategy == "complete-then-train")
        model = res.model
        if args.completed:
            write_segmented(res.completed, args.completed)
        if args.basic_model:
            res.basic.save(args.basic_model)
    model.config["strategy"] = args.strategy
    model.save(args.model)
    hist = model.history
    print(f"epochs\t{hist.epochs_run}\tbest_epoch\t{hist.best_epoch}")


def cmd_complete(args):
    model = CrfModel.load(args.model)
    partial = read_partial_file(args.partial)
    write_segmented(complete(model, partial, constrained=not args.no_constraint), args.output)


def cmd_tag(args):
    model = CrfModel.load(args.model)
    out = tag_corpus(model, _read_texts(args.input))
    if args.output:
        write_segmented(out, args.output)
    else:
        for words in out:
            print(" ".join(words))


def cmd_eval(args):
    gold = read_segmented(args.gold)
    pred = read_segmented(args.pred)
    vocab = {w for s in read_segmented(args.train_vocab) for w in s} if args.train_vocab else set()
    report = evaluate(gold, pred, vocab)
    print(format_report(report))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            f.write(report_json(report) + "\n")


def build_parser():
    p = _Parser(prog="pauseseg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def alignment_args(sp):
        sp.add_argument("alignments", help="alignment JSONL file")
        sp.add_argument("--frame-offset", type=float, default=DEFAULT_FRAME_OFFSET_MS,
                        help="ms per frame for records without frame_offset_ms (OFS)")
        sp.add_argument("--no-strict", action="store_true",
                        help="keep records whose spans overlap")
        sp.add_argument("--rejections", help="write rejected records to this TSV")

    sp = sub.add_parser("mine", help="mine pause boundaries into partial annotations")
    alignment_args(sp)
    sp.add_argument("--min", type=float, default=50.0, help="MIN pause in ms")
    sp.add_argument("--alpha", type=float, default=0.30, help="ratio to mean char duration")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_mine)

    sp = sub.add_parser("sweep", help="boundary P/R/F1 over a threshold grid")
    alignment_args(sp)
    sp.add_argument("--gold", required=True, help="segmented corpus, line-aligned with alignments")
    sp.add_argument("--min-grid", type=_grid, default=list(DEFAULT_MIN_GRID))
    sp.add_argument("--alpha-grid", type=_grid, default=list(DEFAULT_ALPHA_GRID))
    sp.add_argument("--two-phase", action="store_true",
                    help="fix alpha=0 to choose MIN, then sweep alpha at that MIN")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("synth", help="generate a synthetic two-domain benchmark")
    sp.add_argument("outdir")
    sp.add_argument("--spec", help="JSON file of generator parameters")
    sp.add_argument("--noise", type=float, help="chance of a long pause inside a word")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="train a segmenter")
    sp.add_argument("--base", required=True, help="segmented training corpus")
    sp.add_argument("--partial", help="partial-annotation JSONL from `mine`")
    sp.add_argument("--dev", help="segmented dev corpus for early stopping")
    sp.add_argument("--model", required=True, help="output model file")
    sp.add_argument("--strategy", choices=STRATEGIES, default="complete-then-train")
    sp.add_argument("--completed", help="write the completed partial corpus here")
    sp.add_argument("--basic-model", help="write the step-one model here")
    d = TrainConfig()
    sp.add_argument("--lr", type=float, default=d.learning_rate)
    sp.add_argument("--batch-size", type=int, default=d.batch_size)
    sp.add_argument("--patience", type=int, default=d.patience)
    sp.add_argument("--max-epochs", type=int, default=d.max_epochs)
    sp.add_argument("--l2", type=float, default=d.l2)
    sp.add_argument("--optimizer", choices=("adam", "lbfgs"), default=d.optimizer)
    sp.add_argument("--seed", type=int, default=d.seed)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("complete", help="complete partial annotations with a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--partial", required=True)
    sp.add_argument("--no-constraint", action="store_true",
                    help="ignore mined boundaries (ablation)")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_complete)

    sp = sub.add_parser("tag", help="segment raw text, one sentence per line")
    sp.add_argument("--model", required=True)
    sp.add_argument("input")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_tag)

    sp = sub.add_parser("eval", help="score a segmentation against gold")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--train-vocab", help="segmented corpus whose words count as in-vocabulary")
    sp.add_argument("--json", help="also write the report as JSON")
    sp.set_defaults(func=cmd_eval)
    return p


def _fail(code, kind, msg):
    msg = " ".join(str(msg).split())
    print(f"pauseseg: error: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(EXIT_DATA, type(exc).__name__, exc)
    except Exception as exc:  # noqa: BLE001
        return _fail(EXIT_INTERNAL, type(exc).__name__, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
