"""Command-line entry point: ``facereid {synth,run,eval,sweep,bench}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
import argparse
import sys
from pathlib import Path

from . import kernels
from .config import engine_config_from, load_config
from .engine import Engine
from .errors import ConfigError, DimensionMismatch, EmptyMatrix, MissingTruth, ReIDError
from .evaluation import (
    METRIC_COLUMNS, SWEEP_PARAMS, accumulate, metrics, metrics_row, order_columns,
    pooled_metrics, sweep, truth_of, write_ccm_csv, write_rows_csv,
)
from .io import (
    StreamFormatError, load_checkpoint, read_assignments, read_stream,
    save_checkpoint, write_assignments, write_stream,
)
from .simgen import SimConfig, generate_stream

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _engine_config(path):
    values = load_config(path) if path else {}
    return values, engine_config_from(values)


def cmd_synth(args):
    values = load_config(args.config)
    try:
        cfg = SimConfig.from_values(values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    batches = generate_stream(cfg)
    write_stream(args.out, batches, cfg.dim)
    return EXIT_OK


def default_checkpoint_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".gallery.jsonl")


def cmd_run(args):
    values, cfg = _engine_config(args.config)
    dim, batches = read_stream(args.stream)
    if "dim" in values and values["dim"] != dim:
        raise DimensionMismatch(f"stream dim {dim} != config dim {values['dim']}")
    gallery = load_checkpoint(args.gallery, cfg.gallery_config()) if args.gallery else None
    engine = Engine(cfg, gallery=gallery)
    engine.gallery.dim = engine.gallery.dim or dim
    if engine.gallery.dim != dim:
        raise DimensionMismatch(f"stream dim {dim} != gallery dim {engine.gallery.dim}")
    assigned = engine.run(batches)
    write_assignments(args.out, assigned)
    save_checkpoint(args.checkpoint or default_checkpoint_path(args.out), engine.gallery)
    return EXIT_OK


def cmd_eval(args):
    if len(args.pairs) % 2:
        raise ConfigError("eval takes ASSIGNMENTS STREAM pairs")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ccms, rows = [], []
    for k in range(0, len(args.pairs), 2):
        fold = k // 2 + 1
        assigned = read_assignments(args.pairs[k])
        _, batches = read_stream(args.pairs[k + 1])
        table = accumulate(assigned, truth_of(batches))
        ccm = order_columns(table)
        ccms.append(ccm)
        with open(out_dir / f"ccm_{fold}.csv", "w", encoding="utf-8", newline="") as fh:
            write_ccm_csv(ccm, fh)
        m = metrics(ccm) if table.total else None
        rows.append({"fold": fold, **metrics_row(m), "ghost_leaks": table.ghost_leaks})
    pooled = pooled_metrics(ccms)
    rows.append({"fold": "pooled", **metrics_row(pooled),
                 "ghost_leaks": sum(r["ghost_leaks"] for r in rows)})
    with open(out_dir / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
        write_rows_csv(rows, fh, ["fold", *METRIC_COLUMNS, "ghost_leaks"])
    print(f"accuracy={pooled.accuracy:.6f} far={pooled.far:.6f} "
          f"frr={pooled.frr:.6f} uar={pooled.uar:.6f}")
    return EXIT_OK


def parse_grid(spec):
    """``"t_d=1.0,1.2;t_n=3"`` -> ``{"t_d": [1.0, 1.2], "t_n": [3]}``."""
    grid = {}
    for part in spec.replace(";", " ").split():
        if "=" not in part:
            raise ConfigError(f"bad grid entry {part!r}")
        key, values = part.split("=", 1)
        if key not in SWEEP_PARAMS:
            raise ConfigError(f"cannot sweep {key!r}; allowed: {', '.join(SWEEP_PARAMS)}")
        conv = float if key == "t_d" else int
        try:
            grid[key] = [conv(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad values for {key}: {values!r}") from None
    if not grid or any(not v for v in grid.values()):
        raise ConfigError("sweep grid is empty")
    return grid


def cmd_sweep(args):
    grid = parse_grid(args.grid)
    _, cfg = _engine_config(args.config)
    _, batches = read_stream(args.stream)
    gallery = load_checkpoint(args.gallery, cfg.gallery_config()) if args.gallery else None
    rows = sweep(batches, grid, cfg, gallery=gallery, frozen=args.frozen)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_rows_csv(rows, fh, [*grid, *METRIC_COLUMNS, "matched"])
    return EXIT_OK


def cmd_bench(args):
    from .bench import BENCH_COLUMNS, run_bench

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if args.backend == "both":
        backends = kernels.available_backends()
    else:
        backends = (args.backend or kernels.BACKEND,)
    rows = run_bench(sizes, args.dim, args.repetitions, backends, args.seed)
    cols = list(BENCH_COLUMNS)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_rows_csv(rows, fh, cols)
    else:
        write_rows_csv(rows, sys.stdout, cols)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="facereid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic descriptor stream")
    s.add_argument("config")
    s.add_argument("out")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("run", help="assign identities to a descriptor stream")
    r.add_argument("stream")
    r.add_argument("config")
    r.add_argument("out")
    r.add_argument("--checkpoint", help="gallery checkpoint output "
                   "(default: <out stem>.gallery.jsonl)")
    r.add_argument("--gallery", help="start from this gallery checkpoint")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="CCM evaluation of one or more runs")
    e.add_argument("pairs", nargs="+", metavar="ASSIGNMENTS STREAM")
    e.add_argument("--out-dir", default=".")
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="grid sweep over t_d / t_n / s1")
    w.add_argument("stream")
    w.add_argument("grid", help='e.g. "t_d=1.0,1.2,1.4;t_n=3"')
    w.add_argument("out")
    w.add_argument("--config")
    w.add_argument("--gallery", help="seed each run with this checkpoint")
    w.add_argument("--frozen", action="store_true", help="never modify the gallery")
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bench", help="per-probe match latency vs gallery size")
    b.add_argument("--sizes", default="0,300,600,1200")
    b.add_argument("--dim", type=int, default=4096)
    b.add_argument("--repetitions", type=int, default=100)
    b.add_argument("--backend", choices=("numba", "numpy", "both"))
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingTruth, DimensionMismatch, StreamFormatError, EmptyMatrix,
            ReIDError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
