"""``tlbscope`` command line.

Exit codes: 0 success, 2 usage/config/I-O error, 3 analysis failure.  Each
command that writes files also writes ``<first output>.manifest.json``;
``tlbscope replay`` re-runs a manifest and reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, formats, placement, recover, render
from .model import MachineConfig, default_a100, validate
from .units import parse_size, parse_size_list


class UsageError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _write(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


def load_config(path) -> MachineConfig:
    if path is None:
        return default_a100()
    try:
        config = MachineConfig.from_json(_read(path))
    except (ValueError, TypeError) as e:
        raise UsageError(f"invalid config {path}: {e}") from None
    problems = validate(config)
    if problems:
        raise UsageError(f"invalid config {path}: " + "; ".join(problems))
    return config


def _size(text):
    try:
        return parse_size(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _sizes(text):
    try:
        return parse_size_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _seed(text):
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _load_topology(path) -> recover.Topology:
    try:
        return recover.Topology.from_json(_read(path))
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"invalid topology {path}: {e}") from None


def _load_matrix(path) -> np.ndarray:
    try:
        labels, values = formats.read_matrix_csv(_read(path))
        return formats.in_label_order(labels, values)
    except ValueError as e:
        raise UsageError(f"{path}: {e}") from None


def cmd_sweep(args):
    config = load_config(args.config)
    groups = _load_topology(args.topology) if args.topology else None
    sizes = args.sizes if args.sizes is not None else experiments.DEFAULT_SWEEP_SIZES
    try:
        curve = experiments.sweep(config, sizes, args.mode, args.seed, groups=groups,
                                  workers=args.threads)
    except (ValueError, KeyError) as e:
        raise UsageError(str(e)) from None
    text = formats.sweep_csv(curve)
    if args.out:
        _write(args.out, text)
        return [args.out]
    sys.stdout.write(text)
    return []


def cmd_probe(args):
    config = load_config(args.config)
    probe = experiments.probe_pairs(config, workers=args.threads)
    _write(args.out, formats.matrix_csv(probe.pairs / 1e9))
    _write(args.solo, formats.solo_csv(probe.solo / 1e9))
    return [args.out, args.solo]


def cmd_recover(args):
    pairs = _load_matrix(args.matrix)
    try:
        solo = formats.read_solo_csv(_read(args.solo))
    except ValueError as e:
        raise UsageError(f"{args.solo}: {e}") from None
    probe = experiments.ProbeData(solo=solo, pairs=pairs)
    bad = probe.problems()
    if bad:
        raise UsageError("inconsistent probe files: " + "; ".join(bad))
    topo, grouping = recover.recover_topology(probe, args.delta)
    _write(args.out, topo.to_json())
    text = recover.report(grouping)
    if args.report:
        _write(args.report, text)
        return [args.out, args.report]
    sys.stdout.write(text)
    return [args.out]


def cmd_reorder(args):
    matrix = _load_matrix(args.matrix)
    topo = _load_topology(args.topology)
    try:
        out = recover.reorder(matrix, topo)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _write(args.out, formats.matrix_csv(out, labels=topo.order))
    return [args.out]


def cmd_plan(args):
    topo = _load_topology(args.topology)
    try:
        pp = placement.plan(topo, args.memory, args.reach, page_size=args.page_size)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _write(args.out, pp.to_json())
    return [args.out]


def cmd_render(args):
    try:
        _, values = formats.read_matrix_csv(_read(args.matrix))
    except ValueError as e:
        raise UsageError(f"{args.matrix}: {e}") from None
    _write(args.out, render.heatmap_svg(values, cell=args.cell))
    return [args.out]


def cmd_replay(args):
    try:
        manifest = json.loads(_read(args.manifest))
        argv = manifest["argv"]
    except (ValueError, KeyError) as e:
        raise UsageError(f"invalid manifest {args.manifest}: {e}") from None
    return main(argv)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tlbscope",
                                description="Simulated GPU TLB/resource-group probing toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="machine config JSON (default: built-in A100)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $TLBSCOPE_THREADS or 1)")

    sp = sub.add_parser("sweep", help="throughput against region size")
    common(sp)
    sp.add_argument("--mode", choices=experiments.MODES, default="global")
    sp.add_argument("--sizes", type=_sizes, default=None, help="e.g. 40GiB,80GiB")
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--topology", help="recovered topology JSON for group-aligned mode")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("probe", help="solo and SM-pair throughput")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--solo", required=True)
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("recover", help="recover TPCs and resource groups")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--solo", required=True)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("reorder", help="permute a matrix into group order")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--topology", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_reorder)

    sp = sub.add_parser("plan", help="assign groups to reach-sized memory chunks")
    sp.add_argument("--topology", required=True)
    sp.add_argument("--memory", type=_size, required=True)
    sp.add_argument("--reach", type=_size, required=True)
    sp.add_argument("--page-size", type=_size, default=parse_size("2MiB"))
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("render", help="render a matrix CSV")
    sp.add_argument("kind", choices=["heatmap"])
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--cell", type=int, default=8, help="cell size in pixels")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    sp.add_argument("manifest")
    sp.set_defaults(func=cmd_replay)
    return p


def _manifest(args, argv, outputs) -> str:
    doc = {
        "command": args.command,
        "argv": list(argv),
        "config": getattr(args, "config", None),
        "seed": getattr(args, "seed", None),
        "outputs": list(outputs),
        "version": __version__,
    }
    return json.dumps(doc, indent=2) + "\n"


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "replay":
            return args.func(args)
        outputs = args.func(args)
        if outputs:
            _write(outputs[0] + ".manifest.json", _manifest(args, argv, outputs))
    except UsageError as e:
        print(f"tlbscope: {e}", file=sys.stderr)
        return 2
    except recover.RecoveryError as e:
        print(f"tlbscope: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
