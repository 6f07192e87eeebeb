"""``qclif`` command line.

Exit codes: 0 success, 1 usage, 2 config, 3 io, 4 numeric (overflow or mode mismatch).
Errors go to stderr as ``error[<category>]: <message>``.
"""
from __future__ import annotations

import argparse
import sys

from . import harness
from .errors import QclifError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
_CATEGORY_EXIT = {"config": EXIT_CONFIG, "io": EXIT_IO, "numeric": EXIT_NUMERIC}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error[usage]: {message}\n")
        sys.exit(EXIT_USAGE)


def _bits_list(text: str) -> list[int]:
    try:
        return [int(b) for b in text.split(",") if b.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qclif", description="Bit-exact qCLIF recurrent spiking layer model.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the layer and write raster + report")
    s.add_argument("--config", required=True)
    s.add_argument("--stimulus", help="stimulus event stream (text or binary); Poisson if omitted")
    s.add_argument("--context", help="context event stream; Poisson if omitted")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=("functional", "datapath"))
    s.add_argument("--bits", type=int, help="override weight width")
    s.add_argument("--trace", action="store_true", help="datapath mode: also write trace.csv")

    c = sub.add_parser("compare", help="diff functional and datapath rasters")
    c.add_argument("--config", required=True)
    c.add_argument("--stimulus")
    c.add_argument("--context")
    c.add_argument("--seed", type=int)
    c.add_argument("--out", help="CSV of differing (cycle, neuron) cells")

    w = sub.add_parser("sweep", help="accuracy vs quantization width on the synthetic task")
    w.add_argument("--config", required=True)
    w.add_argument("--bits", type=_bits_list, default=[16, 8, 4, 2])
    w.add_argument("--trials", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--out", help="sweep CSV")

    b = sub.add_parser("bench", help="functional-mode throughput")
    b.add_argument("--config", required=True)
    b.add_argument("--cycles", type=int)
    b.add_argument("--out", help="JSON report")

    t = sub.add_parser("stats", help="activity and weight histograms as CSV")
    t.add_argument("--raster", required=True)
    t.add_argument("--config", help="also histogram this config's weights")
    t.add_argument("--bins", type=int, default=32)
    t.add_argument("--out", required=True, help="output directory")
    return p


def _run(args) -> int:
    if args.command == "simulate":
        report = harness.cmd_simulate(args.config, args.stimulus, args.context, args.out,
                                      seed=args.seed, mode=args.mode, bits=args.bits, trace=args.trace)
        print(report.summary())
    elif args.command == "compare":
        result = harness.cmd_compare(args.config, args.stimulus, args.context, args.out, seed=args.seed)
        print(f"{result.cycles} cycles x {result.neurons} neurons: {len(result.mismatches)} mismatching cells")
        if not result.identical:
            sys.stderr.write("error[numeric]: functional and datapath rasters differ\n")
            return EXIT_NUMERIC
    elif args.command == "sweep":
        rows = harness.cmd_sweep(args.config, args.bits, args.trials, args.out, seed=args.seed)
        for r in rows:
            flag = "  (degraded)" if r["degraded"] else ""
            print(f"{r['precision']:>8}: accuracy {r['accuracy']:.3f}{flag}")
    elif args.command == "bench":
        r = harness.cmd_bench(args.config, args.cycles, args.out)
        print(f"{r.neurons} neurons, {r.synapses} synapses: {r.layer_steps_per_s:.0f} layer-steps/s, "
              f"{r.synaptic_ops_per_s:.3g} synaptic-ops/s")
    elif args.command == "stats":
        res = harness.cmd_stats(args.raster, args.out, args.config, args.bins)
        print(f"{res.activity.total_spikes} spikes, sparsity {res.activity.sparsity:.4f}; "
              f"wrote {len(res.files)} CSV files")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except QclifError as exc:
        sys.stderr.write(f"error[{exc.category}]: {exc}\n")
        return _CATEGORY_EXIT.get(exc.category, EXIT_NUMERIC)
    except OSError as exc:
        sys.stderr.write(f"error[io]: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
