"""Command-line entry point: ``nyusim {sweep,drops,validate,dump}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import ChannelCondition, Scenario, Stream, link_rng, params_for
from .harness import (PSD_HEADER, SUBPATH_HEADER, ConfigError, DropConfig, drops_csv, psd_rows,
                      realization_rows, run_drops, simulate_drop, sweep, sweep_csv, write_csv)
from .validation import REPORT_HEADER, distribution_report, draw_step_samples, report_rows

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("nyusim")

# flag dest -> DropConfig key
_OVERRIDES = ("scenario", "frequency_ghz", "rf_bandwidth_hz", "drops", "d_min", "d_max", "h_bs",
              "h_ue", "ue_speed", "seed", "condition", "o2i_mode", "foliage_loss_per_meter",
              "foliage_depth", "atmospheric", "shadowing", "tx_power_dbm", "n_subbands",
              "workers", "output")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file; flags override its keys")
    p.add_argument("--scenario", choices=[s.value for s in Scenario])
    p.add_argument("--frequency", dest="frequency_ghz", type=float, help="carrier [GHz]")
    p.add_argument("--rf-bandwidth", dest="rf_bandwidth_hz", type=float, help="[Hz]")
    p.add_argument("--drops", type=int)
    p.add_argument("--d-min", type=float)
    p.add_argument("--d-max", type=float)
    p.add_argument("--h-bs", type=float)
    p.add_argument("--h-ue", type=float)
    p.add_argument("--ue-speed", type=float, help="[m/s]")
    p.add_argument("--seed", type=int)
    p.add_argument("--condition", choices=[c.value for c in ChannelCondition],
                   help="force the channel condition")
    p.add_argument("--o2i", dest="o2i_mode", choices=["None", "LowLoss", "HighLoss"])
    p.add_argument("--foliage-loss", dest="foliage_loss_per_meter", type=float, help="[dB/m]")
    p.add_argument("--foliage-depth", type=float, help="[m]")
    p.add_argument("--atmosphere", dest="atmospheric", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--shadowing", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--tx-power", dest="tx_power_dbm", type=float, help="[dBm]")
    p.add_argument("--subbands", dest="n_subbands", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("-o", "--output", help="output CSV path (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nyusim", description="Drop-based statistical channel simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="mean path loss vs distance")
    _common(p)
    p.add_argument("--distances", type=float, nargs="+",
                   default=[1, 2, 5, 10, 20, 50, 100, 200, 500])

    p = sub.add_parser("drops", help="Monte Carlo drops")
    _common(p)

    p = sub.add_parser("validate", help="goodness-of-fit report of the small-scale draws")
    _common(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--alpha", type=float, default=0.01)

    p = sub.add_parser("dump", help="per-subpath dump of one drop")
    _common(p)
    p.add_argument("--drop-id", type=int, default=0)
    p.add_argument("--psd-output", help="also write the beamformed PSD table here")
    p.add_argument("--time", type=float, default=0.0, help="PSD sample time [s]")
    return parser


def load_config(args: argparse.Namespace) -> DropConfig:
    cfg = DropConfig.from_yaml(args.config) if args.config else DropConfig()
    overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
    try:
        return cfg.replace(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(cfg: DropConfig, args) -> None:
    _emit(sweep_csv(sweep(cfg, args.distances)), cfg.output)


def cmd_drops(cfg: DropConfig, args) -> None:
    _emit(drops_csv(run_drops(cfg)), cfg.output)


def cmd_validate(cfg: DropConfig, args) -> None:
    conditions = [cfg.condition] if cfg.condition else list(ChannelCondition)
    rows = []
    for i, cond in enumerate(conditions):
        params = params_for(cfg.scenario, cond, cfg.frequency_ghz)
        rng = link_rng(cfg.seed, 0, i, Stream.SMALL_SCALE)
        results = distribution_report(draw_step_samples(params, args.samples, rng), params)
        rows.extend(report_rows(results, params, args.alpha))
    failed = sum(1 for r in rows if not r[-1])
    log.info("%d of %d fits below alpha=%g", failed, len(rows), args.alpha)
    _emit(write_csv(rows, REPORT_HEADER), cfg.output)


def cmd_dump(cfg: DropConfig, args) -> None:
    _, real = simulate_drop(cfg, args.drop_id)
    _emit(write_csv(realization_rows(real), SUBPATH_HEADER), cfg.output)
    if args.psd_output:
        write_csv(psd_rows(cfg, real, args.time), PSD_HEADER, args.psd_output)


COMMANDS = {"sweep": cmd_sweep, "drops": cmd_drops, "validate": cmd_validate, "dump": cmd_dump}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        log.error("runtime error: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
