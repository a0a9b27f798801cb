import argparse
import logging
import sys

from src.config import ExperimentConfig, apply_overrides, load_config
from src.errors import MlbError
from src.experiment import ExperimentRunner
from src.strategies import CENTRALIZED, CONTROLLERS, TWO_LAYER


def build_parser():
    parser = argparse.ArgumentParser(description="UDN Mobility Load Balancing Experiment")
    parser.add_argument("--controller", choices=CONTROLLERS, help="MLB controller (default: nomlb)")
    parser.add_argument("--mode", choices=[TWO_LAYER, CENTRALIZED], help="DRL architecture (default: two-layer)")
    parser.add_argument("--seeds", type=int, help="Number of seeds (default: 5)")
    parser.add_argument("--first-seed", type=int, help="First seed (default: 0)")
    parser.add_argument("--steps", type=int, help="Time steps per seed (default: 4000)")
    parser.add_argument("--stage-length", type=int, help="Steps between re-clusterings (default: 10000)")
    parser.add_argument("--cbr", type=float, dest="cbr_kbps", help="Per-user CBR demand in kbps (default: 112)")
    parser.add_argument("--n-sbs", type=int, help="Number of SBSs (default: 12)")
    parser.add_argument("--n-users", type=int, help="Number of users (default: 200)")
    parser.add_argument("--out", type=str, help="Output directory (default: results)")
    parser.add_argument("--scenario", type=str, dest="scenario_path", help="Replay a saved scenario.txt layout")
    parser.add_argument("--jobs", type=int, help="Seeds run in parallel processes (default: 1)")
    parser.add_argument("--threaded", action="store_true", default=None,
                        help="Run DRL workers on threads (not bit-reproducible)")
    parser.add_argument("--config", type=str, help="key=value config file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    return parser


def resolve_config(args):
    config = ExperimentConfig()
    if args.config:
        config = load_config(args.config, config)
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "verbose")}
    return apply_overrides(config, **overrides).validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")

    try:
        config = resolve_config(args)
        print(f"🛠️  Initializing {config.controller} ({config.mode}) over {config.seeds} seed(s)...")
        print(f"    Scenario: {config.n_sbs} SBSs, {config.n_users} users, CBR {config.cbr_kbps:g} kbps")
        print(f"    Output:   {config.out}")
        ExperimentRunner(config).run()
    except KeyboardInterrupt:
        print("\n🛑 Experiment stopped by user.")
        return 130
    except MlbError as e:
        print(f"\n❌ Error during experiment: {e}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
