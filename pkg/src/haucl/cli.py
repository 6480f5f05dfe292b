"""Command line entry point: ``haucl {train,eval,gradcheck,synth}``.

Exit codes: 0 success, 1 gradient check failure, 2 configuration error,
3 data or checkpoint error, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from typing import Sequence

from . import __version__
from .config import PRESETS, RunConfig, load_config
from .data import Dataset, generate_synthetic, load_dataset, save_dataset
from .errors import (
    CheckpointError,
    DataError,
    DimensionError,
    DivergenceError,
    EmptyDialogueError,
    ParameterError,
)
from .gradcheck import TINY, run_gradcheck
from .hypergraph import MODALITIES
from .tensor import corrupt_gradient
from .train import check_compatible, evaluate, load_model, save_model, train

EXIT_OK = 0
EXIT_GRADCHECK = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

GRADCHECK_TOL = 1e-3

# fields that fix parameter shapes; eval refuses a checkpoint that disagrees
ARCH_FIELDS = ("d", "d_z", "d_h", "d_gru", "layers")

log = logging.getLogger("haucl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _bool_flag(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    """One ``--flag`` per RunConfig field. Unset flags stay ``None``."""
    p.add_argument("--config", help="JSON config file (may name a 'preset')")
    p.add_argument("--preset", choices=sorted(PRESETS), help="hyperparameter preset")
    g = p.add_argument_group("run configuration")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        kind = str(f.type)
        if kind == "bool":
            g.add_argument(flag, dest=f.name, nargs="?", const=True, default=None, type=_bool_flag, metavar="BOOL")
        elif kind.startswith("int"):
            g.add_argument(flag, dest=f.name, type=int, default=None)
        elif kind == "float":
            g.add_argument(flag, dest=f.name, type=float, default=None)
        else:
            g.add_argument(flag, dest=f.name, default=None)


def _resolve_config(args, base: dict | None = None) -> RunConfig:
    values = dict(base or {})
    if args.preset:
        values.update(PRESETS[args.preset])
    if args.config:
        values.update(load_config(args.config))
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        return RunConfig.from_dict(values)
    except TypeError as exc:
        raise ParameterError(f"invalid configuration: {exc}") from exc


def _overrides(args) -> dict:
    """Config values the user set explicitly (file or flags)."""
    values = load_config(args.config) if args.config else {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return values


def _dataset(path) -> Dataset:
    if not path:
        raise ParameterError("no dataset given (use --data)")
    return load_dataset(path)


# -- subcommands ------------------------------------------------------------

def cmd_train(args) -> int:
    config = _resolve_config(args)
    dataset = _dataset(config.data)
    start = time.perf_counter()
    model, _ = train(config, dataset, emit=lambda line: print(line, flush=True))
    log.info("trained %d epochs in %.1fs", config.epochs, time.perf_counter() - start)
    if config.checkpoint:
        save_model(model, config.checkpoint)
        log.info("wrote checkpoint %s", config.checkpoint)
    return EXIT_OK


def cmd_eval(args) -> int:
    requested = _overrides(args)
    checkpoint = requested.get("checkpoint")
    if not checkpoint:
        raise ParameterError("no checkpoint given (use --checkpoint)")
    model = load_model(checkpoint)
    saved = model.config.to_dict()
    for name in ARCH_FIELDS:
        if name in requested and requested[name] != saved[name]:
            raise DataError(f"checkpoint {checkpoint} has {name}={saved[name]}, requested {name}={requested[name]}")
    dataset = _dataset(requested.get("data"))
    check_compatible(model, dataset)
    m = evaluate(model, dataset)
    print(f"acc={m['acc']:.4f} wf1={m['wf1']:.4f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    config = _resolve_config(args, base=TINY)
    if args.corrupt_op:
        with corrupt_gradient(args.corrupt_op, args.corrupt_factor):
            report = run_gradcheck(config, num_utterances=args.utterances)
    else:
        report = run_gradcheck(config, num_utterances=args.utterances)
    if args.verbose:
        for r in report.ops:
            print(f"op={r.name} rel_err={r.max_rel_err:.3e}")
        for r in report.params:
            print(f"param={r.name} rel_err={r.max_rel_err:.3e}")
    worst = report.worst()
    failures = report.failures(GRADCHECK_TOL)
    for r in failures:
        kind = "op" if r in report.ops else "param"
        print(f"FAIL {kind}={r.name} rel_err={r.max_rel_err:.3e}")
    status = "fail" if failures else "ok"
    print(f"worst={worst.name} rel_err={worst.max_rel_err:.3e} tol={GRADCHECK_TOL:g} status={status}")
    return EXIT_GRADCHECK if failures else EXIT_OK


def cmd_synth(args) -> int:
    dims = {m: args.dim for m in MODALITIES}
    for m, v in zip(MODALITIES, (args.dim_t, args.dim_a, args.dim_v)):
        if v is not None:
            dims[m] = v
    ds = generate_synthetic(
        classes=args.classes,
        num_speakers=args.speakers,
        num_dialogues=args.dialogues,
        len_range=(args.min_len, args.max_len),
        dims=dims,
        inertia=args.inertia,
        seed=args.seed,
        speaker_scale=args.speaker_scale,
    )
    save_dataset(ds, args.out)
    n_utt = sum(len(d) for d in ds.dialogues)
    print(
        f"dialogues={len(ds)} utterances={n_utt} classes={ds.classes} speakers={ds.num_speakers} "
        f"dims={dims['t']},{dims['a']},{dims['v']} path={args.out}"
    )
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="haucl", description="Hypergraph multimodal emotion recognition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of every gradient")
    _add_config_flags(p)
    p.add_argument("--utterances", type=int, default=4, help="dialogue length of the probe (default 4)")
    p.add_argument("--corrupt-op", help=argparse.SUPPRESS)
    p.add_argument("--corrupt-factor", type=float, default=1.5, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=6)
    p.add_argument("--speakers", type=int, default=2)
    p.add_argument("--dialogues", type=int, default=20)
    p.add_argument("--min-len", type=int, default=8)
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--dim", type=int, default=16, help="feature width for every modality")
    p.add_argument("--dim-t", type=int)
    p.add_argument("--dim-a", type=int)
    p.add_argument("--dim-v", type=int)
    p.add_argument("--inertia", type=float, default=0.7)
    p.add_argument("--speaker-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"haucl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"haucl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, CheckpointError, DimensionError, EmptyDialogueError, IndexError) as exc:
        print(f"haucl: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"haucl: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
