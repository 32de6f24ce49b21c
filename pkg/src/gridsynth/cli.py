"""Command-line entry points: spec generation, evaluation, training, serving."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import dsl, evaluation
from .listeners import LISTENER_IDS, make_listener
from .neural import ListenerNet, TrainConfig, train
from .space import box_space


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gridsynth")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-specs", help="generate machine-speaker trials as JSONL")
    p.add_argument("--speaker", choices=["literal", "pragmatic"], required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-len", type=int, default=15)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="run listeners over trials, emit accuracy curves CSV")
    p.add_argument("--trials", required=True)
    p.add_argument("--listeners", default="J0,J1,F0,F1")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--model", default=None, help="checkpoint for N0/N1")
    p.add_argument("--out", required=True)

    p = sub.add_parser("marginals", help="joint-vs-factored tables for two nonterminals")
    p.add_argument("--spec", required=True, help="JSON file with utterances (and optional target)")
    p.add_argument("--pair", default="Left,Right")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the neural literal listener")
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--pool-size", type=int, default=10_000)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--min-len", type=int, default=2)
    p.add_argument("--max-len", type=int, default=25)
    p.add_argument("--out", required=True)

    p = sub.add_parser("enumerate", help="print program-space statistics")
    p.add_argument("--stats", action="store_true")

    p = sub.add_parser("serve", help="run the reference-game HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--model", default=None)
    p.add_argument("--journal", default=None)

    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


def _gen_specs(args) -> int:
    space = box_space()
    trials = evaluation.generate_trials(space, args.n, args.speaker, args.seed, args.max_len)
    evaluation.write_trials(args.out, trials)
    print(f"wrote {len(trials)} trials to {args.out}")
    return 0


def _eval(args) -> int:
    ids = [x.strip() for x in args.listeners.split(",") if x.strip()]
    for lid in ids:
        if lid not in LISTENER_IDS:
            print(f"unknown listener {lid!r}; expected one of {LISTENER_IDS}", file=sys.stderr)
            return 2
    trials = evaluation.ingest_trials(args.trials)
    net = ListenerNet.load(args.model) if args.model else None
    listeners = [make_listener(lid, net=net, budget=args.budget) for lid in ids]
    points = evaluation.run_matrix(trials, listeners)
    evaluation.curves_to_csv(points, args.out)
    print(f"wrote {len(points)} curve points to {args.out}")
    return 0


def _marginals(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        spec = dsl.spec_from_json(raw["utterances"])
        target = dsl.program_from_json(raw["target"]) if raw.get("target") else None
    else:
        spec, target = dsl.spec_from_json(raw), None
    pair = tuple(x.strip() for x in args.pair.split(","))
    if len(pair) != 2:
        print("--pair must name two nonterminals, e.g. Left,Right", file=sys.stderr)
        return 2
    report = evaluation.marginal_report(box_space(), spec, pair, target)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(f"wrote tables for {pair} to {args.out}")
    return 0


def _train(args) -> int:
    cfg = TrainConfig(
        batch_size=args.batch_size,
        spec_len_range=(args.min_len, args.max_len),
        steps=args.steps,
        pool_size=args.pool_size,
        learning_rate=args.lr,
        seed=args.seed,
    )
    net, history = train(box_space(), cfg, log_every=max(1, args.steps // 20))
    net.save(args.out, cfg)
    print(f"final loss {history[-200:].mean():.4f}; saved checkpoint to {args.out}")
    return 0


def _enumerate(args) -> int:
    space = box_space()
    print(f"programs: {space.n_programs}")
    print(f"utterance alphabet: {space.n_utterances}")
    areas = space.consistency.sum(axis=0)
    print(f"occupied cells per program: min {areas.min()} max {areas.max()} mean {areas.mean():.2f}")
    counts = space.choice_counts(np.ones(space.n_programs, dtype=bool))
    for name, c in zip(space.nonterminals, counts):
        print(f"  {name}: {c.tolist()}")
    return 0


def _serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_path=args.model, journal_path=args.journal)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "gen-specs": _gen_specs,
    "eval": _eval,
    "marginals": _marginals,
    "train": _train,
    "enumerate": _enumerate,
    "serve": _serve,
}


if __name__ == "__main__":
    sys.exit(main())
