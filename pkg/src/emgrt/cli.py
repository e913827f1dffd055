"""Command-line client for the classification service.

Every subcommand is a thin wrapper over one HTTP endpoint. Without
``--server`` the service runs in-process (same request/response surface,
no network); with it, requests go to a running ``emgrt serve`` instance.

Exit codes: 0 success, 2 configuration/usage errors, 1 runtime errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import httpx

from .config import load_config_file
from .errors import ConfigError, DataFormatError, EmgrtError
from .features import FEATURE_NAMES

PROG = "emgrt"

# Built-in defaults, applied after config-file values. One entry per dest.
DEFAULTS = {
    "window_len": 400,
    "step": 200,
    "levels": 2,
    "myop_threshold": 0.02,
    "wamp_threshold": 0.02,
    "ialv_offset": 1e-6,
    "arch": "brnn",
    "input_mode": "same",
    "learning_rate": 1e-2,
    "epochs": 200,
    "batch_size": 32,
    "momentum": 0.9,
    "seed": 0,
    "hidden1": 32,
    "hidden2": 32,
    "init_scale": None,
    "lengths": [100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600],
    "per_class_length": None,
    "signal_length": 600.0,
    "iterations": 200,
    "recording_index": 0,
    "classes": 4,
    "channels": 2,
    "trials": 14,
    "train_trials": 10,
    "duration": 1.0,
    "rate": 4000.0,
    "threads": 1,
    "host": "127.0.0.1",
    "port": 8321,
    "input": "-",
    "loss_curve": None,
    "out": None,
}


class ServiceError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _lengths_arg(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Real-time EMG classification: synthesize, extract, train, "
        "sweep, benchmark, predict, serve.",
    )
    parser.add_argument("--server", help="URL of a running service; default runs in-process")
    parser.add_argument("--config", help="key-value config file; flags override it")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def opt(p, flag, **kw):
        # All defaults stay None so config-file values can slot in underneath.
        kw.setdefault("default", None)
        p.add_argument(flag, **kw)

    def add_windowing(p):
        opt(p, "--window-len", type=int, help="window length in samples (default 400)")
        opt(p, "--step", type=int, help="window step in samples (default 200)")
        opt(p, "--levels", type=int, help="wavelet decomposition levels (default 2)")
        opt(p, "--myop-threshold", type=float, help="MYOP amplitude threshold (default 0.02)")
        opt(p, "--wamp-threshold", type=float, help="WAMP difference threshold (default 0.02)")
        opt(p, "--ialv-offset", type=float, help="IALV log offset (default 1e-6)")

    p = sub.add_parser("synth", help="write a synthetic dataset and manifest")
    opt(p, "--out", help="output directory (required)")
    opt(p, "--classes", type=int, help="number of classes (default 4)")
    opt(p, "--channels", type=int, help="channels per recording (default 2)")
    opt(p, "--trials", type=int, help="trials per class (default 14)")
    opt(p, "--train-trials", type=int, help="trials assigned to the train split (default 10)")
    opt(p, "--duration", type=float, help="recording length in seconds (default 1.0)")
    opt(p, "--rate", type=float, help="sample rate in Hz (default 4000)")
    opt(p, "--seed", type=int, help="generator seed (default 0)")

    p = sub.add_parser("extract", help="write per-recording feature CSVs")
    opt(p, "--manifest", help="dataset manifest path (required)")
    opt(p, "--out", help="output directory (required)")
    opt(p, "--split", choices=["train", "test"], help="restrict to one split")
    opt(p, "--threads", type=int, help="worker threads (default 1)")
    add_windowing(p)

    p = sub.add_parser("train", help="train a stack and save the model file")
    opt(p, "--manifest", help="dataset manifest path (required)")
    opt(p, "--model", help="output model path (required)")
    opt(p, "--arch", choices=["rnn", "brnn"], help="stack architecture (default brnn)")
    opt(p, "--input-mode", choices=["same", "sequential"], help="input regime (default same)")
    opt(p, "--learning-rate", type=float, help="default 0.01")
    opt(p, "--epochs", type=int, help="default 200")
    opt(p, "--batch-size", type=int, help="default 32")
    opt(p, "--momentum", type=float, help="default 0.9")
    opt(p, "--seed", type=int, help="default 0")
    opt(p, "--hidden1", type=int, help="first hidden width (default 32)")
    opt(p, "--hidden2", type=int, help="second hidden width (default 32)")
    opt(p, "--init-scale", type=float, help="uniform init scale (default 1/sqrt(fan_in))")
    opt(p, "--loss-curve", help="also write the loss curve CSV here")
    add_windowing(p)

    p = sub.add_parser("sweep", help="accuracy vs signal length over the test split")
    opt(p, "--manifest", help="dataset manifest path (required)")
    p.add_argument(
        "--model",
        action="append",
        default=None,
        help="model file; repeat for several structures (required)",
    )
    opt(p, "--lengths", type=_lengths_arg, help="comma-separated ms (default 100..600)")
    opt(p, "--per-class-length", type=int, help="per-class/confusion length (default max)")
    opt(p, "--out", help="output prefix for CSV/JSON reports")
    opt(p, "--threads", type=int, help="worker threads (default 1)")

    p = sub.add_parser("bench", help="latency benchmark on one test recording")
    opt(p, "--model", help="model file (required)")
    opt(p, "--manifest", help="dataset manifest path (required)")
    opt(p, "--recording-index", type=int, help="test-split recording to use (default 0)")
    opt(p, "--iterations", type=int, help="benchmark repetitions (default 200)")
    opt(p, "--signal-length", type=float, help="segment length in ms (default 600)")
    opt(p, "--out", help="output prefix for the JSON/CSV report")

    p = sub.add_parser("predict", help="stream samples, emit voted decisions")
    opt(p, "--model", help="model file (required)")
    opt(p, "--input", help="recording file or - for stdin (default -)")
    opt(p, "--signal-length", type=float, help="decision segment in ms (default 600)")
    opt(p, "--rate", type=float, help="override sample rate (default: model metadata)")

    p = sub.add_parser("serve", help="run the HTTP service")
    opt(p, "--host", help="bind host (default 127.0.0.1)")
    opt(p, "--port", type=int, help="bind port (default 8321)")

    return parser


# Commands whose effective default differs from the shared table.
COMMAND_DEFAULT_OVERRIDES = {
    "predict": {"rate": None},  # None = take the rate from model metadata
}


def _merge(args: argparse.Namespace, config: dict) -> argparse.Namespace:
    """Fill unset flags from config values, then built-in defaults."""
    overrides = COMMAND_DEFAULT_OVERRIDES.get(args.command, {})
    for dest, value in vars(args).items():
        if value is not None or dest in ("command", "server", "config", "split"):
            continue
        if dest in config:
            setattr(args, dest, config[dest])
        elif dest in overrides:
            setattr(args, dest, overrides[dest])
        elif dest in DEFAULTS:
            setattr(args, dest, DEFAULTS[dest])
    if args.server is None:
        args.server = config.get("server")
    return args


def _require(parser: argparse.ArgumentParser, args: argparse.Namespace, *dests: str) -> None:
    for dest in dests:
        if getattr(args, dest, None) in (None, []):
            parser.error(f"{args.command}: --{dest.replace('_', '-')} is required")


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # starlette is mid-transition from httpx to httpx2; its fallback to
        # the httpx we ship with works fine and need not alarm CLI users.
        warnings.filterwarnings("ignore", message="Using `httpx` with `starlette")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _call(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code < 400:
        return resp.json()
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = resp.text
    if isinstance(detail, dict) and "category" in detail:
        raise ServiceError(detail["category"], detail["message"])
    if resp.status_code == 422:
        raise ServiceError("config", f"invalid request: {detail}")
    raise ServiceError("runtime", f"HTTP {resp.status_code}: {detail}")


def _windowing_payload(args) -> dict:
    return {"window_len": args.window_len, "step": args.step}


def _features_payload(args) -> dict:
    return {
        "levels": args.levels,
        "myop_threshold": args.myop_threshold,
        "wamp_threshold": args.wamp_threshold,
        "ialv_offset": args.ialv_offset,
    }


def cmd_synth(client, args, parser) -> int:
    _require(parser, args, "out")
    out = _call(
        client,
        "/synth",
        {
            "out_dir": args.out,
            "num_classes": args.classes,
            "channels": args.channels,
            "trials_per_class": args.trials,
            "train_trials": args.train_trials,
            "duration_s": args.duration,
            "sample_rate": args.rate,
            "seed": args.seed,
        },
    )
    print(f"wrote {out['recordings']} recordings ({out['train_recordings']} train, "
          f"{out['test_recordings']} test)")
    print(f"manifest: {out['manifest_path']}")
    return 0


def cmd_extract(client, args, parser) -> int:
    _require(parser, args, "manifest", "out")
    out = _call(
        client,
        "/extract",
        {
            "manifest_path": args.manifest,
            "out_dir": args.out,
            "windowing": _windowing_payload(args),
            "features": _features_payload(args),
            "split": args.split,
            "threads": args.threads,
        },
    )
    print(f"wrote {len(out['files'])} feature files, {out['windows']} windows, "
          f"{out['features_per_window']} features per window")
    return 0


def cmd_train(client, args, parser) -> int:
    _require(parser, args, "manifest", "model")
    out = _call(
        client,
        "/train",
        {
            "manifest_path": args.manifest,
            "model_path": args.model,
            "arch": args.arch,
            "input_mode": args.input_mode,
            "windowing": _windowing_payload(args),
            "features": _features_payload(args),
            "training": {
                "learning_rate": args.learning_rate,
                "epochs": args.epochs,
                "batch_size": args.batch_size,
                "momentum": args.momentum,
                "seed": args.seed,
                "hidden1": args.hidden1,
                "hidden2": args.hidden2,
                "init_scale": args.init_scale,
            },
            "loss_curve_path": args.loss_curve,
        },
    )
    print(f"trained {out['arch']}/{out['input_mode']} on {out['examples']} examples "
          f"({out['feature_dim']} features, {out['num_classes']} classes)")
    print(f"final loss {out['final_loss']:.6f}")
    print(f"model: {out['model_path']}")
    return 0


def cmd_sweep(client, args, parser) -> int:
    _require(parser, args, "manifest", "model")
    models = args.model if isinstance(args.model, list) else [args.model]
    out = _call(
        client,
        "/sweep",
        {
            "manifest_path": args.manifest,
            "model_paths": models,
            "lengths_ms": args.lengths,
            "per_class_length_ms": args.per_class_length,
            "out_prefix": args.out,
            "threads": args.threads,
        },
    )
    print(out["table"])
    for path in out["files"]:
        print(f"wrote {path}")
    return 0


def cmd_bench(client, args, parser) -> int:
    _require(parser, args, "model", "manifest")
    out = _call(
        client,
        "/bench",
        {
            "model_path": args.model,
            "manifest_path": args.manifest,
            "recording_index": args.recording_index,
            "iterations": args.iterations,
            "signal_length_ms": args.signal_length,
            "out_prefix": args.out,
        },
    )
    for stage in ("feature_extraction_ms", "classification_ms"):
        s = out[stage]
        print(f"{stage}: mean {s['mean_ms']:.4f}  p50 {s['p50_ms']:.4f}  p95 {s['p95_ms']:.4f}")
    for path in out["files"]:
        print(f"wrote {path}")
    return 0


def _stream_rows(fh, path_label: str):
    """Yield one float row per non-empty line; errors carry the sample offset."""
    width = None
    n = 0
    for line in fh:
        tokens = line.replace(",", " ").split()
        if not tokens:
            continue
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise DataFormatError(
                f"{path_label}: sample {n}: expected {width} columns, found {len(tokens)}"
            )
        try:
            row = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise DataFormatError(f"{path_label}: sample {n}: non-numeric token") from exc
        n += 1
        yield row


def cmd_predict(client, args, parser) -> int:
    _require(parser, args, "model")
    info = _call(client, "/model/info", {"model_path": args.model})
    meta = info["metadata"]
    try:
        step = int(meta["step"])
        window_len = int(meta["window_len"])
        levels = int(meta["levels"])
    except KeyError as exc:
        raise ConfigError(f"model metadata is missing pipeline key {exc}") from None
    rate = args.rate if args.rate is not None else meta.get("sample_rate")
    if not rate or rate <= 0:
        raise ConfigError("sample rate unknown: pass --rate or train with rate metadata")
    channels = info["feature_dim"] // (len(FEATURE_NAMES) * (levels + 1))
    signal_samples = int(round(args.signal_length / 1000.0 * rate))
    if signal_samples < window_len:
        raise ConfigError(
            f"--signal-length {args.signal_length:g} ms is {signal_samples} samples, "
            f"shorter than one {window_len}-sample window"
        )

    if args.input == "-":
        fh = sys.stdin
        label = "<stdin>"
    else:
        if not Path(args.input).is_file():
            raise ConfigError(f"input file not found: {args.input}")
        fh = open(args.input, encoding="utf-8")
        label = args.input
    buffer: list[list[float]] = []
    seen = 0
    next_decision = signal_samples
    emitted = 0
    try:
        for row in _stream_rows(fh, label):
            if len(row) != channels:
                raise DataFormatError(
                    f"{label}: sample {seen}: model expects {channels} channels, row has {len(row)}"
                )
            buffer.append(row)
            seen += 1
            if len(buffer) > signal_samples:
                del buffer[: len(buffer) - signal_samples]
            if seen == next_decision:
                out = _call(
                    client,
                    "/predict",
                    {"model_path": args.model, "samples": buffer, "sample_rate": rate},
                )
                print(f"{seen},{out['label']}", flush=True)
                emitted += 1
                next_decision += step
    finally:
        if fh is not sys.stdin:
            fh.close()
    if emitted == 0:
        raise DataFormatError(
            f"{label}: stream ended after {seen} samples; "
            f"the first decision needs {signal_samples}"
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "predict": cmd_predict,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        config = load_config_file(args.config) if args.config else {}
        args = _merge(args, config)
        if args.command == "serve":
            return cmd_serve(args)
        with _client(args.server) as client:
            return _COMMANDS[args.command](client, args, parser)
    except ServiceError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2 if exc.category == "config" else 1
    except ConfigError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except EmgrtError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"{PROG}: error: cannot reach the service: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
