"""Command-line entry point: ``fakespeech <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import queue
import sys
import threading
import time
from pathlib import Path

import numpy as np

from . import audio_io, dsp, evaluation, stats
from .dataset import (LABEL_NAMES, DatasetError, LabeledDataset, parse_label,
                      read_dataset, write_rows)
from .models import (SWEEP_PARAM, Family, InvalidHyperparameter, ModelError, ModelSpec, fit,
                     hyperparameter_ranges, load, save)

log = logging.getLogger("fakespeech")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def format_table(header, rows, floatfmt="{:.4f}") -> str:
    cells = [[floatfmt.format(v) if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in cells)) if cells else len(str(h))
              for i, h in enumerate(header)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths)),
             "  ".join("-" * w for w in widths)]
    for r in cells:
        lines.append("  ".join(c.rjust(w) if _numeric(c) else c.ljust(w)
                               for c, w in zip(r, widths)))
    return "\n".join(lines)


def _numeric(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---- extract ---------------------------------------------------------------

def _collect_inputs(paths, label, manifest):
    items = []
    if manifest:
        base = Path(manifest).parent
        with open(manifest, newline="") as f:
            for rec in csv.DictReader(f):
                # relative entries are resolved against the manifest's directory
                items.append((base / rec["path"], rec["label"]))
    for p in map(Path, paths):
        files = sorted(p.rglob("*.wav")) + sorted(p.rglob("*.WAV")) if p.is_dir() else [p]
        for fp in files:
            items.append((fp, label))
    out = []
    for fp, lab in items:
        if lab is None:
            raise UsageError(f"no label for {fp}; pass --label or --manifest")
        if str(lab).lower() == "auto":
            lab = fp.parent.name
        try:
            out.append((fp, parse_label(lab)))
        except ValueError as e:
            raise UsageError(f"{fp}: {e}") from None
    return out


def cmd_extract(args) -> int:
    inputs = _collect_inputs(args.inputs, args.label, args.manifest)
    if not inputs:
        raise UsageError("no input files")
    ok = failed = rows = 0
    with open(args.output, "w", newline="") as out:
        write_rows(out, [], [], header=True)
        for path, label in inputs:
            try:
                clip = audio_io.load_wav(path)
                feats = dsp.features_from_clip(clip)
            except (OSError, audio_io.AudioError) as e:
                log.error("%s: %s", path, e)
                failed += 1
                continue
            ok += 1
            if feats.shape[0] == 0:
                log.warning("%s: %.2f s is shorter than one window; no rows", path, clip.duration)
            write_rows(out, feats, [label] * feats.shape[0])
            rows += feats.shape[0]
    log.info("extracted %d rows from %d file(s); %d failed", rows, ok, failed)
    return EXIT_DATA if ok == 0 else EXIT_OK


# ---- stats -----------------------------------------------------------------

def _load_dataset(path) -> LabeledDataset:
    try:
        return read_dataset(path)
    except OSError as e:
        raise DataError(str(e)) from None


def cmd_stats(args) -> int:
    ds = _load_dataset(args.dataset)
    ds.require_both_classes()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = ds.feature_names

    summary = stats.class_summary(ds)
    stats.write_summary_csv(out / "summary.csv", summary)
    tests = stats.t_tests(ds)
    stats.write_ttests_csv(out / "ttests.csv", names, tests)
    ranking = stats.rank_features(ds)
    stats.write_ranking_csv(out / "ranking.csv", ranking)

    feature = args.rule_feature
    if feature not in names:
        raise UsageError(f"unknown feature {feature!r}")
    rule = stats.single_rule(ds, names.index(feature), args.folds, args.seed)
    text = render_single_rule(rule)
    (out / "single_rule.txt").write_text(text + "\n")

    n_sig = sum(t.significant for t in tests)
    print(format_table(["feature", "t", "p", "sig"],
                       [[n, t.t_statistic, f"{t.p_value:.2E}", "Y" if t.significant else "N"]
                        for n, t in zip(names, tests)], "{:.3f}"))
    print(f"\n{n_sig} of {len(tests)} features significant at p < {stats.ALPHA}\n")
    print(text)
    return EXIT_OK


def render_single_rule(res: stats.SingleRuleResult) -> str:
    rep = res.report
    direction = ">" if res.rule.direction > 0 else "<"
    lines = [f"single-rule classifier on {res.feature} ({rep.k}-fold CV)",
             f"rule on all rows: FAKE if {res.feature} {direction} {res.rule.threshold:.4f}",
             f"mean accuracy {rep.mean('accuracy'):.4f} (std {rep.std('accuracy'):.4f})",
             f"mean MCC {rep.mean('mcc'):.4f}, mean ROC AUC {rep.mean('roc_auc'):.4f}", ""]
    rows = []
    for cls in ("REAL", "FAKE"):
        m = res.pooled[cls]
        rows.append([cls, m["precision"], m["recall"], m["f1"], m["support"]])
    total = sum(r[4] for r in rows)
    rows.append(["weighted", *(sum(r[i] * r[4] for r in rows) / total for i in (1, 2, 3)), total])
    lines.append(format_table(["class", "precision", "recall", "f1", "support"], rows, "{:.3f}"))
    return "\n".join(lines)


# ---- train / sweep / bench ---------------------------------------------------

def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"hyperparameter {pair!r} must look like name=value")
        k, v = pair.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            raise UsageError(f"hyperparameter {k} has non-numeric value {v!r}") from None
    return out


def _spec(family, params) -> ModelSpec:
    try:
        return ModelSpec(family, params)
    except InvalidHyperparameter as e:
        try:
            ranges = hyperparameter_ranges(Family(family))
            detail = ", ".join(f"{k} in {v}" for k, v in ranges.items())
            raise UsageError(f"{e} (valid: {detail})") from None
        except ValueError:
            raise UsageError(str(e)) from None


def _metrics_table(report: evaluation.CVReport) -> str:
    rows = [[m, report.mean(m), report.std(m)] for m in evaluation.METRIC_NAMES]
    return format_table(["metric", "mean", "std"], rows)


def cmd_train(args) -> int:
    spec = _spec(args.family, _parse_params(args.set))
    ds = _load_dataset(args.dataset)
    ds.require_both_classes()
    if args.balance:
        ds = evaluation.balance(ds, args.seed)
    try:
        report = evaluation.kfold_cv(ds, spec, args.folds, args.seed)
    except evaluation.TooFewRows as e:
        raise DataError(str(e)) from None
    print(f"{spec.label()} {args.folds}-fold CV on {len(ds)} rows (seed {args.seed})")
    print(_metrics_table(report))
    if args.folds_csv:
        evaluation.write_folds_csv(args.folds_csv, report)
    if args.model_out:
        model = fit(spec, ds, args.seed)
        save(model, args.model_out)
        log.info("wrote %s", args.model_out)
    return EXIT_OK


def parse_grid(text: str) -> list[int]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, *rest = (int(v) for v in text.split(":"))
            step = rest[0] if rest else 1
            if step <= 0:
                raise UsageError("grid step must be positive")
            grid = list(range(start, stop + 1, step))
        else:
            grid = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None
    if not grid:
        raise UsageError(f"grid {text!r} is empty")
    return grid


def cmd_sweep(args) -> int:
    family = Family(args.family)
    if family not in SWEEP_PARAM and not args.param:
        raise UsageError(f"{family.value} has no default sweep parameter; pass --param")
    grid = parse_grid(args.grid)
    param = args.param or SWEEP_PARAM[family]
    base = _parse_params(args.set)
    for v in grid:
        _spec(family, {**base, param: v})
    ds = _load_dataset(args.dataset)
    ds.require_both_classes()
    if args.balance:
        ds = evaluation.balance(ds, args.seed)

    def progress(value, rep):
        log.info("%s=%s accuracy %.4f", param, value, rep.mean("accuracy"))

    results = evaluation.sweep(ds, family, grid, args.folds, args.seed, base, param,
                               latency_n=args.latency_n, progress=progress)
    evaluation.write_sweep_csv(args.output, results, param)
    best = max(results, key=lambda r: r[1].mean("accuracy"))
    print(f"best {param}={best[0]} accuracy {best[1].mean('accuracy'):.4f}")
    return EXIT_OK


def _load_model(path):
    try:
        return load(path)
    except OSError as e:
        raise DataError(f"unreadable model {path}: {e}") from None


def cmd_bench(args) -> int:
    model = _load_model(args.model)
    ds = _load_dataset(args.dataset)
    rep = evaluation.bench_latency(model, ds, args.n, args.warmup, args.seed)
    print(f"model      {model.spec.label()}")
    print(f"samples    {rep.n_samples} (warmup {rep.warmup}, seed {args.seed})")
    print(f"mean_ms    {rep.mean_ms:.6f}")
    print(f"min_ms     {rep.min_ms:.6f}")
    print(f"max_ms     {rep.max_ms:.6f}")
    print(f"real_time_factor {rep.real_time_factor:.3e}  (vs 1 s windows)")
    return EXIT_OK


# ---- stream ----------------------------------------------------------------

_EOF = object()


def _window_source(args):
    """Yield ``(rate, window_samples)`` for each complete 1-second window."""
    if args.input == "-":
        rate, stream = args.rate, sys.stdin.buffer
        frame = args.bits // 8 * args.channels
        is_float = args.bits == 32 and args.float

        def blocks():
            leftover = b""
            while True:
                buf = stream.read(frame * 4096)
                if not buf:
                    return
                buf = leftover + buf
                cut = len(buf) - len(buf) % frame
                leftover = buf[cut:]
                yield audio_io.decode_pcm(buf[:cut], args.bits, args.channels, is_float)
    else:
        f = open(args.input, "rb")
        if not f.read(1):
            f.close()
            return
        f.seek(0)
        gen = audio_io.iter_wav_blocks(f, 4096)
        first = next(gen, None)
        if first is None:
            f.close()
            return
        rate = first[0].sample_rate_hz

        def blocks():
            try:
                yield first[1]
                for _, b in gen:
                    yield b
            finally:
                f.close()

    pending, have = [], 0
    for block in blocks():
        pending.append(block)
        have += block.size
        while have >= rate:
            buf = np.concatenate(pending)
            yield rate, buf[:rate]
            pending, have = [buf[rate:]], buf.size - rate


def cmd_stream(args) -> int:
    if args.input == "-" and not (args.rate and args.bits):
        raise UsageError("raw PCM on standard input needs --rate and --bits")
    if args.float and args.bits != 32:
        raise UsageError("--float requires --bits 32")
    try:
        model = _load_model(args.model)
    except ModelError as e:
        raise DataError(f"unreadable model {args.model}: {e}") from None
    # pay one-off compilation and cache loading before the first window arrives
    model.predict(np.zeros(len(model.standardizer.mean)))
    dsp.extract_features(audio_io.AudioClip(np.zeros(audio_io.CANONICAL_RATE),
                                            audio_io.CANONICAL_RATE))
    # bounded hand-off: the decoder blocks while a window awaits classification
    handoff: queue.Queue = queue.Queue(maxsize=1)

    def decode():
        try:
            for item in _window_source(args):
                handoff.put(item)
            handoff.put(_EOF)
        except BaseException as e:  # surfaced on the consumer side
            handoff.put(e)

    worker = threading.Thread(target=decode, daemon=True)
    worker.start()
    out = sys.stdout
    table = args.format == "table"
    if table:
        out.write(f"{'window':>6}  {'start_s':>8}  {'label':<5}  {'score':>8}  {'infer_ms':>9}\n")
    index = 0
    while True:
        item = handoff.get()
        if item is _EOF:
            break
        if isinstance(item, BaseException):
            record = {"error": f"{type(item).__name__}: {item}", "window_index": index}
            out.write(json.dumps(record) + "\n")
            out.flush()
            return EXIT_DATA
        rate, samples = item
        t0 = time.perf_counter_ns()
        feats = dsp.extract_features(audio_io.AudioClip(samples, rate))
        t1 = time.perf_counter_ns()
        label, score = model.predict(feats)
        t2 = time.perf_counter_ns()
        event = {
            "window_index": index,
            "start_seconds": float(index),
            "label": LABEL_NAMES[label],
            "score": score,
            "inference_ms": max(t2 - t1, 1) / 1e6,
            "processing_ms": max(t2 - t0, 1) / 1e6,
        }
        if table:
            out.write(f"{index:>6}  {index:>8.1f}  {event['label']:<5}  {score:>8.4f}  "
                      f"{event['inference_ms']:>9.4f}\n")
        else:
            out.write(json.dumps(event) + "\n")
        out.flush()
        index += 1
    worker.join()
    return EXIT_OK


# ---- report ----------------------------------------------------------------

def cmd_report(args) -> int:
    paths = []
    for p in map(Path, args.paths):
        paths.extend(sorted(p.glob("*.csv")) + sorted(p.glob("*.txt")) if p.is_dir() else [p])
    if not paths:
        raise UsageError("nothing to report")
    for p in paths:
        try:
            if p.suffix == ".csv":
                with open(p, newline="") as f:
                    rows = list(csv.reader(f))
                body = format_table(rows[0], [[_maybe_float(c) for c in r] for r in rows[1:]],
                                    args.floatfmt) if rows else "(empty)"
            else:
                body = p.read_text().rstrip()
        except OSError as e:
            raise DataError(str(e)) from None
        print(f"== {p}\n{body}\n")
    return EXIT_OK


def _maybe_float(s):
    if "E" in s:
        return s
    for kind in (int, float):
        try:
            return kind(s)
        except ValueError:
            pass
    return s


# ---- wiring ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fakespeech", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, folds=True):
        sp.add_argument("--seed", type=int, default=42)
        if folds:
            sp.add_argument("--folds", type=int, default=10)

    families = [f.value for f in Family]

    sp = sub.add_parser("extract", help="WAV files -> feature CSV")
    sp.add_argument("inputs", nargs="*", help="WAV files or directories (searched recursively)")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--label", help="REAL, FAKE, or 'auto' to use each file's parent directory name")
    sp.add_argument("--manifest", help="CSV with columns path,label")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("stats", help="class summaries, t-tests, rankings, single-rule baseline")
    sp.add_argument("dataset")
    sp.add_argument("--out-dir", default="reports")
    sp.add_argument("--rule-feature", default="mfcc_2")
    common(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("train", help="cross-validate a model and save one fitted on all rows")
    sp.add_argument("dataset")
    sp.add_argument("--family", required=True, choices=families)
    sp.add_argument("--set", action="append", metavar="NAME=VALUE", help="hyperparameter")
    sp.add_argument("--model-out")
    sp.add_argument("--folds-csv")
    sp.add_argument("--balance", action=argparse.BooleanOptionalAction, default=True)
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("sweep", help="cross-validate over a hyperparameter grid")
    sp.add_argument("dataset")
    sp.add_argument("--family", required=True, choices=families)
    sp.add_argument("--grid", required=True, help="start:stop:step (inclusive) or a,b,c")
    sp.add_argument("--param", help="hyperparameter to sweep (default: rounds/trees/k)")
    sp.add_argument("--set", action="append", metavar="NAME=VALUE")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--latency-n", type=int, default=1000)
    sp.add_argument("--balance", action=argparse.BooleanOptionalAction, default=True)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bench", help="single-row inference latency")
    sp.add_argument("model")
    sp.add_argument("dataset")
    sp.add_argument("-n", "--n", type=int, default=1000)
    sp.add_argument("--warmup", type=int, default=100)
    common(sp, folds=False)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("stream", help="classify each second of a WAV file or raw PCM stdin")
    sp.add_argument("model")
    sp.add_argument("input", help="WAV path, or - for raw little-endian PCM on stdin")
    sp.add_argument("--rate", type=int)
    sp.add_argument("--bits", type=int, choices=(16, 24, 32))
    sp.add_argument("--channels", type=int, default=1, choices=(1, 2))
    sp.add_argument("--float", action="store_true", help="raw samples are 32-bit float")
    sp.add_argument("--format", choices=("jsonl", "table"), default="jsonl")
    sp.set_defaults(func=cmd_stream)

    sp = sub.add_parser("report", help="print report CSV/text files as aligned tables")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--floatfmt", default="{:.4f}")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"fakespeech: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DatasetError, audio_io.AudioError, ModelError,
            stats.InsufficientData, evaluation.EvaluationError) as e:
        print(f"fakespeech: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        # downstream reader went away; silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
