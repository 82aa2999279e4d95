"""Command-line entry points: ``toy``, ``adult``, ``embed``, ``gradcheck`` and ``replay``.

Every command writes its metrics JSON and a run manifest next to it.  The
manifest records the fully resolved options, so ``replay`` can rerun the
command and compare the metrics byte for byte.

Exit codes: 0 success, 1 check failure, 2 input error, 3 divergence.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .data import (
    AdultCodec, MissingWordError, ToyConfig, analogy_examples, complete_analogy,
    compute_bias_subspace, encode_features, generate_toy, load_adult, load_analogies,
    load_embeddings, load_pairs, planted_gender_vocabulary,
)
from .data.adult import AdultFormatError
from .data.embeddings import DEFAULT_PAIRS, EmbeddingFormatError
from .fairness import confusion_by_group, empirical_entropy, format_confusion_table
from .grad_engine import DivergenceError, ScheduleSpec
from .gradcheck import PAIRINGS, TOLERANCE, run_gradcheck
from .numerics import RankError, SeededRng
from .trainer import (
    FairnessMode, TrainConfig, adult_config, adversary_holdout_loss, embedding_config, evaluate,
    fit, toy_config,
)

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3
OUTPUT_DIR_ENV = "ADVDEBIAS_OUTPUT_DIR"
TEST_SEED_OFFSET = 1_000_003

logger = logging.getLogger("advdebias")


class InputError(Exception):
    """Bad flags, config or input files (exit code 2)."""


# ---------------------------------------------------------------------------
# option handling
# ---------------------------------------------------------------------------

# training knobs shared by the three experiment commands; None means "use the
# experiment's built-in default"
TRAIN_DEFAULTS = {
    "seed": 0, "debias": "both", "steps": None, "batch_size": None, "predictor_lr": None,
    "adversary_lr": None, "alpha0": None, "eta_mode": None, "t0": None, "loss_blowup_limit": None,
    "out": "metrics.json", "report": None, "log": None, "config": None,
}
DEFAULTS = {
    "toy": {**TRAIN_DEFAULTS, "n": 10_000, "test_n": 10_000, "mode": "parity", "target_y": None},
    "adult": {**TRAIN_DEFAULTS, "train_path": None, "test_path": None, "mode": "odds",
              "target_y": None, "label_bias": None},
    "embed": {**TRAIN_DEFAULTS, "embeddings": None, "analogies": None, "pairs": None, "k": 1,
              "query": [], "synthetic": False, "fixture_seed": 0, "max_vocab": None,
              "test_fraction": 0.2},
    "gradcheck": {"model": "all", "seed": 0, "trials": 20, "out": "gradcheck.json", "config": None},
    "replay": {"manifest": None, "out": None, "config": None},
}


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with option values (same keys as the flags)")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--debias", choices=["on", "off", "both"], default=S)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--batch-size", type=int, default=S)
    p.add_argument("--predictor-lr", type=float, default=S)
    p.add_argument("--adversary-lr", type=float, default=S)
    p.add_argument("--alpha0", type=float, default=S)
    p.add_argument("--eta-mode", choices=["constant", "inverse_t"], default=S)
    p.add_argument("--t0", type=int, default=S)
    p.add_argument("--loss-blowup-limit", type=float, default=S, help="abort when a loss exceeds this")
    p.add_argument("--out", default=S, help="metrics JSON path")
    p.add_argument("--report", default=S, help="text report path")
    p.add_argument("--log", default=S, help="NDJSON training log path")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="advdebias", description="Adversarial debiasing experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy", help="synthetic protected-bit leakage experiment")
    _add_train_flags(p)
    p.add_argument("--n", type=int, default=S, help="training sample count")
    p.add_argument("--test-n", type=int, default=S)
    p.add_argument("--mode", choices=["parity", "odds", "opportunity"], default=S)
    p.add_argument("--target-y", type=int, choices=[0, 1], default=S)

    p = sub.add_parser("adult", help="UCI Adult income experiment")
    _add_train_flags(p)
    p.add_argument("--train-path", default=S)
    p.add_argument("--test-path", default=S)
    p.add_argument("--mode", choices=["parity", "odds", "opportunity"], default=S)
    p.add_argument("--target-y", type=int, choices=[0, 1], default=S)
    p.add_argument("--label-bias", choices=["on", "off"], default=S,
                   help="extra label weight in the odds adversary")

    p = sub.add_parser("embed", help="word-embedding analogy experiment")
    _add_train_flags(p)
    p.add_argument("--embeddings", default=S, help="text embedding file")
    p.add_argument("--analogies", default=S, help="analogy file (': section' headers)")
    p.add_argument("--pairs", default=S, help="file of 'male female' word pairs")
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--query", action="append", default=S, metavar="A:B:C")
    p.add_argument("--synthetic", action="store_true", default=S,
                   help="use the built-in planted-gender vocabulary instead of files")
    p.add_argument("--fixture-seed", type=int, default=S)
    p.add_argument("--max-vocab", type=int, default=S)
    p.add_argument("--test-fraction", type=float, default=S)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--config", default=S)
    p.add_argument("--model", default=S, help="one of: all, " + ", ".join(PAIRINGS))
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--out", default=S)

    p = sub.add_parser("replay", help="rerun a manifest and compare metrics byte for byte")
    p.add_argument("manifest")
    p.add_argument("--out", default=S, help="where to write the replayed metrics")
    return parser


def resolve_options(command: str, flags: dict) -> dict:
    """Built-in defaults, then the JSON config file, then explicit flags."""
    opts = dict(DEFAULTS[command])
    config_path = flags.get("config")
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError(f"config {config_path} must hold a JSON object")
        for key, value in cfg.items():
            key = key.replace("-", "_")
            if key not in opts:
                raise InputError(f"unknown config key {key!r} for {command}")
            opts[key] = value
    opts.update({k: v for k, v in flags.items() if k != "command"})
    return opts


def output_path(path) -> Path:
    """Relative output paths land under ``$ADVDEBIAS_OUTPUT_DIR`` when it is set."""
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def manifest_path(metrics_path: Path) -> Path:
    return metrics_path.with_name(metrics_path.name + ".manifest.json")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_outputs(command: str, opts: dict, metrics, out: Path, datasets: dict,
                  started: str, wall_time_s: float) -> None:
    text = dump_json(metrics)
    out.write_text(text, encoding="utf-8")
    manifest = {
        "command": command,
        "options": {k: v for k, v in opts.items() if k != "config"},
        "seed": opts.get("seed"),
        "datasets": datasets,
        "artifact_version": __version__,
        "started_at": started,
        "finished_at": _utc_now(),
        "wall_time_s": wall_time_s,
        "metrics_path": str(out),
        "metrics_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
    }
    manifest_path(out).write_text(dump_json(manifest), encoding="utf-8")


# ---------------------------------------------------------------------------
# training helpers
# ---------------------------------------------------------------------------

def _debias_flags(choice: str) -> list[bool]:
    return {"on": [True], "off": [False], "both": [False, True]}[choice]


def train_config(base: TrainConfig, opts: dict, debias: bool) -> TrainConfig:
    sched = base.schedule
    sched = ScheduleSpec(
        alpha0=sched.alpha0 if opts.get("alpha0") is None else opts["alpha0"],
        eta_mode=sched.eta_mode if opts.get("eta_mode") is None else opts["eta_mode"],
        t0=sched.t0 if opts.get("t0") is None else opts["t0"],
    )
    changes = {"schedule": sched, "debias": debias, "seed": opts["seed"]}
    for key in ("steps", "batch_size", "predictor_lr", "adversary_lr", "loss_blowup_limit"):
        if opts.get(key) is not None:
            changes[key] = opts[key]
    if opts.get("mode") is not None:
        changes["mode"] = FairnessMode.parse(opts["mode"], opts.get("target_y"))
    try:
        return TrainConfig.from_dict({**base.to_dict(), **changes})
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _log_path(opts: dict, debias: bool, several: bool) -> Path | None:
    if not opts.get("log"):
        return None
    p = Path(opts["log"])
    if several:
        p = p.with_name(f"{p.stem}.{'on' if debias else 'off'}{p.suffix}")
    return output_path(p)


def _fit_logged(cfg: TrainConfig, train, opts: dict, several: bool):
    log_to = _log_path(opts, cfg.debias, several)
    try:
        models, log = fit(cfg, train)
    except DivergenceError as exc:
        target = log_to or output_path(str(opts["out"]) + f".{'on' if cfg.debias else 'off'}.divergence.ndjson")
        if exc.log is not None:
            exc.log.write(target)
        exc.log_path = target
        raise
    if log_to is not None:
        log.write(log_to)
    return models, log


def _run_record(command: str, cfg: TrainConfig, report) -> dict:
    rec = {"command": command, "seed": cfg.seed, "debias": cfg.debias, "mode": cfg.mode.kind,
           "target_y": cfg.mode.target_y, "steps": cfg.steps, "wall_time_s": None}
    rec.update(report.to_dict())
    return rec


def _classification_runs(command, base, opts, train, test):
    runs, confusions = [], []
    flags = _debias_flags(opts["debias"])
    for debias in flags:
        cfg = train_config(base, opts, debias)
        models, _ = _fit_logged(cfg, train, opts, len(flags) > 1)
        report = evaluate(models, test)
        rec = _run_record(command, cfg, report)
        if models.adversary is not None:
            rec["adversary_holdout_loss"] = adversary_holdout_loss(models, test, cfg.mode)
        ent = empirical_entropy(test.z, test.y)
        rec["entropy_z"], rec["entropy_z_given_y"] = ent.h_z, ent.h_z_given_y
        runs.append((rec, models))
        confusions.append(confusion_by_group(models.predictor.forward(test.X), test.y, test.z))
    return runs, confusions


def _single_confusion(conf, title, names=("Female", "Male")) -> str:
    lines = [title]
    for g, name in zip((0, 1), names):
        c = conf[g]
        lines.append(f"{name:<10}{'Pred 0':>10}{'Pred 1':>10}")
        lines.append(f"{'True 0':<10}{c.tn:>10}{c.fp:>10}")
        lines.append(f"{'True 1':<10}{c.fn:>10}{c.tp:>10}")
    return "\n".join(lines)


def _rates_lines(rec) -> list[str]:
    tag = "with debiasing" if rec["debias"] else "without debiasing"
    g = rec["groups"]
    return [f"{tag}: accuracy {rec['accuracy']:.4f}",
            f"  FPR female {g['0']['fpr']:.4f}  male {g['1']['fpr']:.4f}  (p = {rec['p_value_y0']:.3f})",
            f"  FNR female {g['0']['fnr']:.4f}  male {g['1']['fnr']:.4f}  (p = {rec['p_value_y1']:.3f})",
            f"  demographic parity gap {rec['dp_gap']:.4f}"]


def _metrics_payload(records):
    return records[0] if len(records) == 1 else records


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_toy(opts: dict) -> tuple[object, dict]:
    if opts["n"] < 1 or opts["test_n"] < 1:
        raise InputError("--n and --test-n must be positive")
    train = generate_toy(ToyConfig(opts["n"], opts["seed"]))
    test = generate_toy(ToyConfig(opts["test_n"], opts["seed"] + TEST_SEED_OFFSET))
    runs, _ = _classification_runs("toy", toy_config(), opts, train, test)
    records, lines = [], []
    for rec, models in runs:
        w_r, w_u = models.predictor.w1
        rec["coefficients"] = {"w_r": float(w_r), "w_u": float(w_u), "b": models.predictor.b}
        records.append(rec)
        tag = "with debiasing" if rec["debias"] else "without debiasing"
        lines.append(f"{tag}: yhat = sigmoid({w_u:.3f} u {w_r:+.3f} r {models.predictor.b:+.3f})"
                     f"   parity gap {rec['dp_gap']:.4f}   accuracy {rec['accuracy']:.4f}")
    return _metrics_payload(records), {"report": "\n".join(lines) + "\n", "datasets": {}}


def cmd_adult(opts: dict):
    if not opts.get("train_path") or not opts.get("test_path"):
        raise InputError("adult needs --train-path and --test-path")
    train_recs, test_recs = load_adult(opts["train_path"], opts["test_path"])
    codec = AdultCodec().fit(train_recs)
    train, test = encode_features(train_recs, codec), encode_features(test_recs, codec)
    base = adult_config()
    if opts.get("label_bias") is not None:
        base.odds_label_bias = opts["label_bias"] in ("on", True)
    runs, confusions = _classification_runs("adult", base, opts, train, test)
    records = [rec for rec, _ in runs]
    if len(confusions) == 2:
        table = format_confusion_table(confusions[0], confusions[1])
    else:
        table = _single_confusion(confusions[0], "With Debiasing" if records[0]["debias"] else "Without Debiasing")
    lines = [table, ""]
    for rec in records:
        lines += _rates_lines(rec)
    datasets = {"train": str(opts["train_path"]), "test": str(opts["test_path"])}
    return _metrics_payload(records), {"report": "\n".join(lines) + "\n", "datasets": datasets}


def _parse_query(q: str) -> tuple[str, str, str]:
    parts = q.split(":")
    if len(parts) != 3 or not all(parts):
        raise InputError(f"--query expects a:b:c, got {q!r}")
    return tuple(parts)


def _embedding_data(opts: dict):
    if opts.get("synthetic"):
        sv = planted_gender_vocabulary(seed=opts["fixture_seed"])
        return sv.table, sv.analogies, list(sv.pairs), {"embeddings": f"synthetic:{opts['fixture_seed']}"}
    if not opts.get("embeddings"):
        raise InputError("embed needs --embeddings (or --synthetic)")
    if not opts.get("analogies"):
        raise InputError("embed needs --analogies with --embeddings")
    table = load_embeddings(opts["embeddings"], opts.get("max_vocab"))
    items, dropped = load_analogies(opts["analogies"], table)
    if dropped:
        logger.info("dropped %d analogies with out-of-vocabulary words", dropped)
    pairs = load_pairs(opts["pairs"]) if opts.get("pairs") else list(DEFAULT_PAIRS)
    datasets = {"embeddings": str(opts["embeddings"]), "analogies": str(opts["analogies"])}
    if opts.get("pairs"):
        datasets["pairs"] = str(opts["pairs"])
    return table, items, pairs, datasets


def format_query_table(query, columns: dict[str, list]) -> str:
    """Neighbour lists side by side, one column per model."""
    a, b, c = query
    names = list(columns)
    width = max(24, max(len(n) for n in names) + 2)
    lines = [f"{a} : {b} :: {c} : ?",
             "".join(f"{n:<{width}}" for n in names).rstrip(),
             "".join(f"{'neighbor':<14}{'sim':<{width - 14}}" for _ in names).rstrip()]
    depth = max(len(v) for v in columns.values())
    for i in range(depth):
        row = ""
        for n in names:
            if i < len(columns[n]):
                word, sim = columns[n][i]
                row += f"{word:<14}{sim:<{width - 14}.4f}"
            else:
                row += " " * width
        lines.append(row.rstrip())
    return "\n".join(lines)


def cmd_embed(opts: dict):
    if opts["k"] < 1:
        raise InputError("--k must be positive")
    if not 0.0 < opts["test_fraction"] < 1.0:
        raise InputError("--test-fraction must lie in (0, 1)")
    queries = [_parse_query(q) for q in opts.get("query") or []]
    table, items, pairs, datasets = _embedding_data(opts)
    table.require([w for q in queries for w in q])
    sub = compute_bias_subspace(table, pairs, opts["k"])
    if not items:
        raise InputError("no usable analogies")
    examples = analogy_examples(table, items, sub)
    perm = SeededRng(opts["seed"]).spawn(7).permutation(len(examples))
    n_test = max(1, int(round(opts["test_fraction"] * len(examples))))
    test, train = examples[perm[:n_test]], examples[perm[n_test:]]
    if len(train) == 0:
        raise InputError("not enough analogies to hold out a test split")

    flags = _debias_flags(opts["debias"])
    records, trained = [], []
    for debias in flags:
        cfg = train_config(embedding_config(), opts, debias)
        models, _ = _fit_logged(cfg, train, opts, len(flags) > 1)
        stats = evaluate(models, test, bias_direction=sub.g)
        rec = {"command": "embed", "seed": cfg.seed, "debias": debias, "mode": cfg.mode.kind,
               "steps": cfg.steps, "wall_time_s": None, "k": opts["k"],
               "heldout_loss": stats["heldout_loss"], "w_norm": stats["w_norm"],
               "w_dot_g": stats["w_dot_g"], "queries": {}}
        records.append(rec)
        trained.append(models)

    blocks = []
    for q in queries:
        key = ":".join(q)
        columns = {"Biased": complete_analogy(table, *q, top_n=9)}
        for rec, models in zip(records, trained):
            ranked = complete_analogy(table, *q, transform=models.predictor, top_n=9)
            rec["queries"][key] = [[w, s] for w, s in ranked]
            columns["Debiased" if rec["debias"] else "Transform (no adversary)"] = ranked
        blocks.append(format_query_table(q, columns))
    lines = [f"{'with' if r['debias'] else 'without'} debiasing: w.g = {r['w_dot_g']:.4f}  "
             f"|w| = {r['w_norm']:.4f}  held-out loss = {r['heldout_loss']:.4f}" for r in records]
    report = "\n".join(lines + [""] + [b + "\n" for b in blocks])
    return _metrics_payload(records), {"report": report + "\n", "datasets": datasets}


def cmd_gradcheck(opts: dict):
    try:
        results = run_gradcheck(opts["model"], opts["seed"], opts["trials"])
    except KeyError:
        raise InputError(f"unknown model {opts['model']!r}; choose all or one of {', '.join(PAIRINGS)}")
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    lines = [f"{r.name:<20} trials={r.trials:<4} worst relative error {r.worst:.3e}  "
             f"{'ok' if r.passed else 'FAIL'}" for r in results]
    metrics = {"command": "gradcheck", "seed": opts["seed"], "tolerance": TOLERANCE,
               "results": {r.name: {"trials": r.trials, "worst": r.worst, "passed": r.passed}
                           for r in results},
               "passed": all(r.passed for r in results)}
    return metrics, {"report": "\n".join(lines) + "\n", "datasets": {}}


COMMANDS = {"toy": cmd_toy, "adult": cmd_adult, "embed": cmd_embed, "gradcheck": cmd_gradcheck}


def execute(command: str, opts: dict) -> int:
    out = output_path(opts["out"])
    started, t0 = _utc_now(), time.perf_counter()
    metrics, extra = COMMANDS[command](opts)
    write_outputs(command, opts, metrics, out, extra["datasets"], started, time.perf_counter() - t0)
    sys.stdout.write(extra["report"])
    if opts.get("report"):
        output_path(opts["report"]).write_text(extra["report"], encoding="utf-8")
    if command == "gradcheck" and not metrics["passed"]:
        return EXIT_CHECK
    return EXIT_OK


def cmd_replay(opts: dict) -> int:
    try:
        manifest = json.loads(Path(opts["manifest"]).read_text(encoding="utf-8"))
        command, recorded = manifest["command"], manifest["options"]
        expected = manifest["metrics_sha256"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise InputError(f"cannot read manifest {opts['manifest']}: {exc}") from exc
    if command not in COMMANDS:
        raise InputError(f"manifest names unknown command {command!r}")
    replay_opts = {**DEFAULTS[command], **recorded, "report": None, "log": None}
    if opts.get("out"):
        replay_opts["out"] = opts["out"]
        code = execute(command, replay_opts)
        produced = output_path(replay_opts["out"]).read_bytes()
    else:
        with tempfile.TemporaryDirectory() as tmp:
            replay_opts["out"] = str(Path(tmp) / "replay.json")
            code = execute(command, replay_opts)
            produced = Path(replay_opts["out"]).read_bytes()
    same = hashlib.sha256(produced).hexdigest() == expected
    print(f"replay of {command}: metrics {'identical' if same else 'DIFFER'}")
    if not same:
        return EXIT_CHECK
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        opts = resolve_options(command, args)
        if command == "replay":
            return cmd_replay(opts)
        return execute(command, opts)
    except DivergenceError as exc:
        where = getattr(exc, "log_path", None)
        print(f"error: training diverged: {exc}" + (f" (log: {where})" if where else ""), file=sys.stderr)
        return EXIT_DIVERGED
    except MissingWordError as exc:
        print(f"error: missing words: {', '.join(exc.words)}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, FileNotFoundError, AdultFormatError, EmbeddingFormatError, RankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
