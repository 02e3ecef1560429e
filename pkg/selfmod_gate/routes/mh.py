"""`selfmod-gate mh`: representational-axis trajectories for every accept policy"""
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from config.loader import build_experiment_config, resolve_settings
from config.settings import EXIT_OK, OUTPUT_DIR
from handlers.mh_trajectory import (
    MhConfig,
    Trajectory,
    aggregate_seeds,
    check_trajectory,
    oracle_inequality_report,
    policy_ordering,
    run_mh,
    summarize_policies,
    sweep_min_test_risk,
)
from services.gates import DECISION_HEADER, Policy, decision_row, gate_thresholds
from services.synthdata import generate_split
from utils.helpers import command, gather_in_executor, log
from utils.output import RunManifest, plot_series, prepare_output_dir, write_csv, write_lines

RUN_HEADER = (
    "step", "proposed_degree", "accepted", "reason", "train_loss", "val_loss", "test_loss",
    "current_test_loss", "capacity", "eps_v", "tau", "observed_drop", "utility",
)
AGGREGATE_HEADER = ("policy", "step", "mean", "stderr", "n_runs")


def _run_job(cfg: MhConfig, seed: int) -> Tuple[Trajectory, List[str]]:
    """One (policy, seed) run plus its audit lines"""
    trajectory = run_mh(cfg, seed)
    lines = []
    if cfg.policy in (Policy.TWO_GATE, Policy.DEST_VAL):
        split = generate_split(cfg.synth.model_copy(update={"seed": seed}))
        K, _, _ = gate_thresholds(cfg.gate_cfg, cfg.synth.n_train)
        r_star = sweep_min_test_risk(split, max(K - 1, 0), cfg.train_cfg)
        check = check_trajectory(trajectory, split, cfg, r_star=r_star)
        lines.append(f"[{cfg.policy.value} seed={seed}] " + " ".join(f"{k}={v}" for k, v in check.model_dump(mode="json").items()))
        if cfg.policy is Policy.TWO_GATE:
            oracle = oracle_inequality_report(trajectory, split, cfg, r_star=r_star)
            lines.append(f"[{cfg.policy.value} seed={seed}] oracle " + " ".join(f"{k}={v}" for k, v in oracle.model_dump().items()))
    return trajectory, lines


def _decision_rows(trajectory: Trajectory):
    for r in trajectory.records:
        yield decision_row(r.decision, r.step, r.proposed_degree, r.capacity, r.train_loss, r.val_loss)


def _run_rows(trajectory: Trajectory):
    for r in trajectory.records:
        d = r.decision
        yield (r.step, r.proposed_degree, r.accepted, d.reason, r.train_loss, r.val_loss, r.test_loss,
               r.current_test_loss, r.capacity, d.eps_v, d.tau, d.observed_drop, r.utility)


@command
async def cmd_mh(config_path: Optional[Path] = None, overrides: Optional[Dict[str, object]] = None,
                 out_dir: Path = OUTPUT_DIR, plot: bool = False) -> int:
    """Run every configured policy over the seed list and write per-run, aggregate and audit outputs"""
    settings = resolve_settings("mh", config_path, overrides)
    configs: Dict[Policy, MhConfig] = build_experiment_config("mh", settings)
    seeds = settings.seed_list
    directory = prepare_output_dir(out_dir, "mh")
    manifest = RunManifest.start("mh", settings.model_dump(mode="json"), seeds, directory)
    manifest.write(directory)

    log(f"🧪 mh: {len(configs)} policies x {len(seeds)} seeds, max degree {settings.max_degree}")
    jobs = [(configs[policy], seed) for policy in sorted(configs, key=lambda p: p.value) for seed in seeds]
    results = await gather_in_executor(_run_job, jobs)
    results.sort(key=lambda pair: (pair[0].policy.value, pair[0].seed))
    trajectories = [trajectory for trajectory, _ in results]

    for trajectory in trajectories:
        write_csv(directory / f"mh_{trajectory.policy.value}_seed{trajectory.seed}.csv", RUN_HEADER, _run_rows(trajectory))
        write_csv(directory / f"mh_{trajectory.policy.value}_seed{trajectory.seed}_decisions.csv", DECISION_HEADER,
                  _decision_rows(trajectory))

    curves = {}
    aggregate_rows = []
    for policy in sorted(configs, key=lambda p: p.value):
        curve = aggregate_seeds([t for t in trajectories if t.policy is policy])
        curves[policy.value] = (curve.steps.tolist(), curve.mean.tolist(), curve.stderr.tolist())
        aggregate_rows.extend((policy.value, int(s), float(m), float(e), curve.n_runs)
                              for s, m, e in zip(curve.steps, curve.mean, curve.stderr))
    write_csv(directory / "mh_aggregate.csv", AGGREGATE_HEADER, aggregate_rows)

    summary = summarize_policies(trajectories)
    report = [f"policy {name} " + " ".join(f"{k}={v!r}" for k, v in stats.items()) for name, stats in summary.items()]
    ordering = policy_ordering(trajectories)
    if ordering is not None:
        verdict = "PASS" if ordering.passed else "FAIL"
        report.append(f"policy_ordering {verdict} {ordering.better.value}={ordering.mean_better!r} "
                      f"{ordering.worse.value}={ordering.mean_worse!r} min_gap={ordering.min_gap!r}")
    gated = [r.decision for t in trajectories if t.policy is Policy.TWO_GATE for r in t.records]
    if gated:
        report.append(f"margin two_gate required_drop={gated[0].required_drop!r} "
                      f"max_observed_drop={max(d.observed_drop for d in gated)!r}")
    for _, lines in results:
        report.extend(lines)
    write_lines(directory / "mh_checks.txt", report)
    log("📊 " + ", ".join(f"{name}: {stats['mean_final_test_loss']:.3f}" for name, stats in summary.items()))

    if plot:
        plot_series(directory / "mh_current_test_loss.svg", curves, "step", "test 0-1 loss of current hypothesis",
                    "Current test loss by accept policy")
    manifest.finish().write(directory)
    return EXIT_OK
