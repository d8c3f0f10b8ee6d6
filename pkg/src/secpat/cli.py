"""Command line: ``secpat phantom validate|rasterize | simulate | reconstruct | compare``.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numeric failure.
Values from ``--config`` take precedence over flags.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, RunConfig
from .geometry import PhantomSupportError, UnsupportedDomainError, check_support, load_phantom
from .io import FormatError, read_image, read_measurement, write_image, write_measurement, write_pgm
from .metrics import GridMismatchError, compare
from .pipeline import default_grid, reconstruct, reference_image, run_simulation
from .specfun import MathieuRangeError

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("secpat")

# flag name -> RunConfig field
_FLAGS = {
    "domain": str,
    "mode": str,
    "method": str,
    "n_sensors": int,
    "n_t": int,
    "t_max": float,
    "half_width": float,
    "K": int,
    "omega_max": float,
    "n_omega": int,
    "n_modes": int,
    "guard": float,
    "lam_max": float,
    "grid_n": int,
}


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON RunConfig; its values override flags")
    for name, typ in _FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    p.add_argument("--grid-bbox", dest="grid_bbox", type=float, nargs=4, metavar=("X0", "X1", "Y0", "Y1"))


def _config(args, stage: str = "reconstruct") -> RunConfig:
    flags = {k: getattr(args, k, None) for k in list(_FLAGS) + ["grid_bbox", "phantom", "measurement", "output"]}
    cfg = RunConfig().merged(flags)
    if getattr(args, "config", None):
        loaded = RunConfig.load(args.config).to_dict()
        defaults = RunConfig().to_dict()
        cfg = cfg.merged({k: v for k, v in loaded.items() if v != defaults[k]})
    return cfg.validate(stage)


def cmd_phantom_validate(args) -> int:
    ph = load_phantom(args.phantom)
    if args.domain:
        from .geometry import ConvexDomain

        check_support(ph, ConvexDomain.parse(args.domain))
    print(f"disks={len(ph)}")
    print(f"digest={ph.digest()}")
    if ph.disks:
        print("bbox=" + ",".join(f"{v:.17g}" for v in ph.bounding_box(0.0)))
    return EXIT_OK


def cmd_phantom_rasterize(args) -> int:
    cfg = RunConfig(domain=args.domain, grid_n=args.grid_n, grid_bbox=args.grid_bbox)
    ph = load_phantom(args.phantom)
    grid = default_grid(cfg, ph)
    write_image(args.output, reference_image(ph, grid))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args, "simulate")
    if not cfg.phantom or not cfg.output:
        raise ConfigError("simulate needs --phantom and --output")
    data = run_simulation(cfg, load_phantom(cfg.phantom))
    write_measurement(cfg.output, data)
    log.info("wrote %s (%d sensors x %d samples)", cfg.output, data.layout.n_sensors, data.layout.n_t)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    if not cfg.measurement or not cfg.output:
        raise ConfigError("reconstruct needs --measurement and --output")
    data = read_measurement(cfg.measurement)
    if args.mode is None and cfg.mode == RunConfig().mode:
        # the mode is a property of the file unless stated otherwise
        cfg = cfg.merged({"mode": data.mode}).validate()
    phantom = load_phantom(cfg.phantom) if cfg.phantom else None
    stats = {}
    img = reconstruct(cfg, data, default_grid(cfg, phantom), stats)
    if "guard_dropped" in stats:
        print(f"guard_dropped={stats['guard_dropped']} guard_total={stats['guard_total']}")
    out = cfg.output[:-4] if cfg.output.endswith(".csv") else cfg.output
    write_image(out + ".csv", img)
    write_pgm(out + ".pgm", img)
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = read_image(args.image_a), read_image(args.image_b)
    for line in compare(a, b, dilation=args.dilation).lines():
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secpat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ph = sub.add_parser("phantom", help="phantom utilities")
    phs = ph.add_subparsers(dest="action", required=True)
    pv = phs.add_parser("validate", help="parse a phantom file and check it against a domain")
    pv.add_argument("phantom")
    pv.add_argument("--domain")
    pv.set_defaults(func=cmd_phantom_validate)
    pr = phs.add_parser("rasterize", help="sample a phantom on the default reconstruction grid")
    pr.add_argument("phantom")
    pr.add_argument("--domain", default="disk:1.0")
    pr.add_argument("--grid-n", dest="grid_n", type=int, default=256)
    pr.add_argument("--grid-bbox", dest="grid_bbox", type=float, nargs=4, metavar=("X0", "X1", "Y0", "Y1"))
    pr.add_argument("--output", "-o", required=True)
    pr.set_defaults(func=cmd_phantom_rasterize)

    sim = sub.add_parser("simulate", help="write exact measurement data for a phantom")
    _add_run_flags(sim)
    sim.add_argument("--phantom")
    sim.add_argument("--output", "-o")
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="invert a measurement file")
    _add_run_flags(rec)
    rec.add_argument("--measurement", "-m")
    rec.add_argument("--phantom", help="only used to size half-space images")
    rec.add_argument("--output", "-o", help="output prefix; .csv and .pgm are appended")
    rec.set_defaults(func=cmd_reconstruct)

    cmp_ = sub.add_parser("compare", help="metrics of image B against reference image A")
    cmp_.add_argument("image_a")
    cmp_.add_argument("image_b")
    cmp_.add_argument("--dilation", type=int, default=4)
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnsupportedDomainError, PhantomSupportError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, OverflowError, MathieuRangeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
