"""CSV outputs of a run. Column order is fixed so files from different controllers line up."""
import logging
import os

import pandas as pd

from .metrics import STEP_COLUMNS

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["controller", "mode", "seed", "steps", "mean_reward", "final_ma_reward",
                   "mean_max_load", "hfr", "load_std", "ho_success", "ho_fail"]
CLUSTER_COLUMNS = ["stage", "sbs_id", "cluster_index"]
CH_COLUMNS = ["stage", "H", "ch_score", "selected"]


class CsvReporter:
    def __init__(self, out_dir):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def _write(self, frame, name, columns=None):
        if columns is not None:
            frame = frame.reindex(columns=columns)
        frame.to_csv(self.path(name), index=False)
        logger.debug(f"📝 [Report] {self.path(name)} ({len(frame)} rows)")
        return self.path(name)

    def write_steps(self, frame, name="steps.csv"):
        return self._write(frame, name, STEP_COLUMNS)

    def write_summary(self, rows, name="summary.csv"):
        return self._write(pd.DataFrame(rows), name, SUMMARY_COLUMNS)

    def write_ledger(self, rows, columns, name="stage_ledger.csv"):
        return self._write(pd.DataFrame(rows), name, columns)

    def write_training(self, frame, worker_id):
        return self._write(frame, f"training_w{worker_id}.csv")

    def write_clustering(self, stages):
        """`stages` is a list of (stage index, ClusterAssignment)."""
        members, scores = [], []
        for stage, assignment in stages:
            for sbs_id, h in enumerate(assignment.membership):
                members.append({"stage": stage, "sbs_id": sbs_id, "cluster_index": int(h)})
            for H, score in sorted(assignment.candidate_scores.items()):
                scores.append({"stage": stage, "H": H, "ch_score": score, "selected": H == assignment.H})
        self._write(pd.DataFrame(members), "clustering.csv", CLUSTER_COLUMNS)
        self._write(pd.DataFrame(scores), "clustering_scores.csv", CH_COLUMNS)


def format_summary(row):
    """Console block for one finished run."""
    lines = [
        "=" * 50,
        f"🏁 RUN COMPLETE: {row['controller']} ({row['mode']}) seed {row['seed']}",
        "-" * 20,
        f"Steps:            {row['steps']}",
        f"Mean Reward:      {row['mean_reward']:.4f}",
        f"Final MA Reward:  {row['final_ma_reward']:.4f}",
        f"Mean Max Load:    {row['mean_max_load']:.2%}",
        f"HFR:              {row['hfr']:.2%} ({row['ho_fail']} blocked / {row['ho_success']} ok)",
        f"Load Std-Dev:     {row['load_std']:.4f}",
        "=" * 50,
    ]
    return "\n".join(lines)
