from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
import logging
import os

import numpy as np
from tqdm import tqdm

from .clustering import LoadDrivenClusterer, LoadHistory
from .env.scenario import ScenarioLoader, generate_scenario
from .env.simulator import UdnEnvironment
from .metrics import MetricsSeries, moving_average, summarize
from .reporter import CsvReporter, format_summary
from .strategies import DrlStrategy, build_strategy

logger = logging.getLogger(__name__)


def build_scenario(config, seed):
    """Generated layout for `seed`, or the snapshot file with its mobility seed replaced."""
    if config.scenario_path:
        scenario = ScenarioLoader().load(config.scenario_path)
        return replace(scenario, seed=seed)
    return generate_scenario(seed, n_sbs=config.n_sbs, n_users=config.n_users,
                             area_side=config.area_side, demand=config.demand)


def run_name(config):
    if config.controller.startswith("drl"):
        return f"{config.controller}-{config.mode}"
    return config.controller


class ExperimentRunner:
    """Runs one controller over every configured seed; each seed writes its own directory."""

    def __init__(self, config, progress=True):
        self.config = config.validate()
        self.progress = progress
        self.out_dir = os.path.join(config.out, run_name(config))
        self.rows = []

    def seed_dir(self, seed):
        return os.path.join(self.out_dir, f"seed_{seed}")

    def run_seed(self, seed):
        cfg = self.config
        reporter = CsvReporter(self.seed_dir(seed))
        scenario = build_scenario(cfg, seed)
        ScenarioLoader().save(scenario, reporter.path("scenario.txt"))

        env = UdnEnvironment(scenario, replica=0)
        strategy = build_strategy(cfg.controller, cfg.mode, cfg.training_settings())
        clusterer = LoadDrivenClusterer()
        positions = scenario.sbs_positions

        logger.info(f"🚀 [Experiment] {strategy.name} seed {seed}: {scenario.n_sbs} SBSs, "
                    f"{scenario.n_users} users, {cfg.cbr_kbps:g} kbps, {cfg.steps} steps")
        assignment = clusterer.cluster(positions, LoadHistory(env.loads[None, :]))
        stages = [(0, assignment)]
        strategy.on_recluster(env, assignment)

        series, stage_loads, stage = MetricsSeries(), [], 0
        try:
            for t in tqdm(range(cfg.steps), desc=f"{strategy.name} seed {seed}", disable=not self.progress):
                cio = strategy.act(env)
                _, r, m = env.step(cio)
                strategy.observe(env, r, m)
                series.record(m)
                stage_loads.append(m.loads)

                if (t + 1) % cfg.stage_length == 0 and t + 1 < cfg.steps:
                    self._save_checkpoint(strategy, reporter, stage)
                    stage += 1
                    history = LoadHistory(np.vstack(stage_loads), stage_start=t + 1)
                    assignment = clusterer.cluster(positions, history)
                    strategy.on_recluster(env, assignment)
                    stages.append((stage, assignment))
                    stage_loads = []
            self._save_checkpoint(strategy, reporter, stage)
        finally:
            strategy.close()

        frame = series.to_frame()
        reporter.write_steps(frame)
        reporter.write_clustering(stages)
        if isinstance(strategy, DrlStrategy):
            for worker in strategy.trainer.workers:
                reporter.write_training(strategy.training_frame(worker.worker_id), worker.worker_id)

        row = {"controller": cfg.controller, "mode": cfg.mode, "seed": seed, **summarize(frame),
               "final_ma_reward": float(moving_average(frame["reward"], cfg.ma_window)[-1])}
        reporter.write_summary([row])
        logger.info("\n" + format_summary(row))
        return row

    def _save_checkpoint(self, strategy, reporter, stage):
        if isinstance(strategy, DrlStrategy):
            strategy.checkpoint(f"stage{stage}").save(reporter.path(os.path.join("checkpoints", f"stage_{stage}")))

    def run(self):
        seeds = self.config.seed_list
        if self.config.jobs > 1 and len(seeds) > 1:
            rows = []
            with ProcessPoolExecutor(max_workers=self.config.jobs) as ex:
                futures = {ex.submit(_run_seed_job, self.config, seed): seed for seed in seeds}
                for f in as_completed(futures):
                    rows.append(f.result())
            rows.sort(key=lambda row: row["seed"])
        else:
            rows = [self.run_seed(seed) for seed in seeds]
        self.rows = rows
        CsvReporter(self.out_dir).write_summary(rows)
        logger.info(f"✅ [Experiment] {len(rows)} seed(s) written to {self.out_dir}")
        return rows


def _run_seed_job(config, seed):
    return ExperimentRunner(config, progress=False).run_seed(seed)


def run_experiment(config, progress=True):
    return ExperimentRunner(config, progress).run()
