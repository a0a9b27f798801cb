import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from src.config import ExperimentConfig, apply_overrides, load_config
from src.errors import MlbError
from src.experiment import ExperimentRunner, build_scenario
from src.metrics import normalized_gain
from src.reporter import CsvReporter
from src.safeguard import LEDGER_COLUMNS, SafeguardRunner
from src.strategies import CENTRALIZED, CONTROLLERS, TWO_LAYER, DrlStrategy

logger = logging.getLogger(__name__)

SWEEP_CBR_KBPS = (48, 64, 80, 96, 112)
SCALABILITY_SBS = (3, 9)
SCALABILITY_SEEDS = 3


def _rewards(runner, seed):
    return pd.read_csv(os.path.join(runner.seed_dir(seed), "steps.csv"))["reward"].to_numpy()


def _run(config, progress):
    runner = ExperimentRunner(config, progress)
    return runner, runner.run()


def run_compare(config, progress=True):
    """Every controller on the same seeds; gain is measured against noMLB per seed."""
    runners = {}
    for controller in ("nomlb", *[c for c in CONTROLLERS if c != "nomlb"]):
        runners[controller], _ = _run(replace(config, controller=controller), progress)

    base = runners["nomlb"]
    rows = []
    for controller, runner in runners.items():
        frame = pd.DataFrame(runner.rows)
        gains = [normalized_gain(_rewards(runner, s), _rewards(base, s)) for s in config.seed_list]
        rows.append({
            "controller": controller,
            "mean_reward": frame["mean_reward"].mean(),
            "mean_max_load": frame["mean_max_load"].mean(),
            "hfr": frame["hfr"].mean(),
            "load_std": frame["load_std"].mean(),
            "gain_vs_nomlb": float(np.mean(gains)),
        })
        logger.info(f"📊 [Compare] {controller:14} reward={rows[-1]['mean_reward']:.4f} "
                    f"gain={rows[-1]['gain_vs_nomlb']:+.2%}")
    out = pd.DataFrame(rows)
    out.to_csv(os.path.join(config.out, "compare.csv"), index=False)
    return out


def run_sweep(config, progress=True):
    """HFR and load std-dev per controller over the CBR sweep (seed means)."""
    rows = []
    for cbr in SWEEP_CBR_KBPS:
        for controller in CONTROLLERS:
            cfg = replace(config, controller=controller, cbr_kbps=float(cbr),
                          out=os.path.join(config.out, "sweep", f"cbr_{cbr}"))
            _, seed_rows = _run(cfg, progress)
            frame = pd.DataFrame(seed_rows)
            rows.append({"cbr_kbps": cbr, "controller": controller, "hfr": frame["hfr"].mean(),
                         "load_std": frame["load_std"].mean(), "mean_max_load": frame["mean_max_load"].mean()})
            logger.info(f"📈 [Sweep] {cbr:>3} kbps {controller:14} HFR={rows[-1]['hfr']:.2%}")
    out = pd.DataFrame(rows)
    out.to_csv(os.path.join(config.out, "sweep.csv"), index=False)
    return out


def run_scalability(config, progress=True):
    """Two-layer vs centralized DRL gain over noMLB for a small and a larger network."""
    rows = []
    for n_sbs in SCALABILITY_SBS:
        users = max(1, round(config.n_users * n_sbs / 12))
        base_cfg = replace(config, n_sbs=n_sbs, n_users=users, seeds=min(config.seeds, SCALABILITY_SEEDS),
                           out=os.path.join(config.out, "scalability", f"sbs_{n_sbs}"))
        base, _ = _run(replace(base_cfg, controller="nomlb"), progress)
        for mode in (TWO_LAYER, CENTRALIZED):
            runner, _ = _run(replace(base_cfg, controller="drl-mbp", mode=mode), progress)
            for seed in base_cfg.seed_list:
                gain = normalized_gain(_rewards(runner, seed), _rewards(base, seed))
                rows.append({"n_sbs": n_sbs, "mode": mode, "seed": seed, "gain_vs_nomlb": gain})
    out = pd.DataFrame(rows)
    out.to_csv(os.path.join(config.out, "scalability.csv"), index=False)
    return out


def run_safeguard(config, progress=True, ablation=False):
    """Staged online/offline run; with `ablation` also the run that adopts every offline policy."""
    scenario = build_scenario(config, config.first_seed)
    ledgers = {}
    variants = [("safeguard", True)] + ([("no_safeguard", False)] if ablation else [])
    for name, enabled in variants:
        reporter = CsvReporter(os.path.join(config.out, name))
        strategy = DrlStrategy(multi_behavior=config.controller != "drl-sbp", mode=config.mode,
                               settings=config.training_settings())
        runner = SafeguardRunner(scenario, strategy, n_stages=config.n_stages, stage_length=config.stage_length,
                                 eval_horizon=config.eval_horizon or None, enabled=enabled,
                                 checkpoint_dir=reporter.path("checkpoints"), progress=progress)
        ledger = runner.run()
        reporter.write_ledger(ledger, LEDGER_COLUMNS)
        reporter.write_steps(runner.online_metrics.to_frame(), "online_steps.csv")
        reporter.write_steps(runner.offline_metrics.to_frame(), "offline_steps.csv")
        ledgers[name] = ledger
    return ledgers


SUITES = {
    "COMPARE": run_compare,
    "SWEEP": run_sweep,
    "SCALABILITY": run_scalability,
    "SAFEGUARD": run_safeguard,
}


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument('--mode', type=str, default='COMPARE', choices=list(SUITES))
    parser.add_argument('--config', type=str, help='key=value config file')
    parser.add_argument('--controller', choices=CONTROLLERS, help='DRL variant for the SAFEGUARD suite')
    parser.add_argument('--seeds', type=int)
    parser.add_argument('--steps', type=int)
    parser.add_argument('--out', type=str)
    parser.add_argument('--ablation', action='store_true', help='SAFEGUARD: also run without the safeguard')
    parser.add_argument('-v', '--verbose', action='store_true')
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")

    print(f"🚀 Starting MLB workbench in {args.mode} mode.")
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        config = apply_overrides(config, controller=args.controller, seeds=args.seeds,
                                 steps=args.steps, out=args.out).validate()
        os.makedirs(config.out, exist_ok=True)
        if args.mode == "SAFEGUARD":
            run_safeguard(config, ablation=args.ablation)
        else:
            SUITES[args.mode](config)
    except KeyboardInterrupt:
        print("\n🛑 Stopped by user.")
        return 130
    except MlbError as e:
        print(f"\n❌ Error in {args.mode} suite: {e}")
        return 2
    print("✅ Done.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
