"""`selfmod-gate ma`: step-mass-capped vs unconstrained SGD"""
from pathlib import Path
from typing import Dict, List, Optional

from config.loader import build_experiment_config, resolve_settings
from config.settings import EXIT_OK, OUTPUT_DIR
from handlers.ma_stepmass import (
    GapPoint,
    MaConfig,
    aggregate_gaps,
    gap_envelope_check,
    gap_ordering,
    resolve_budget,
    sgd_run,
)
from utils.helpers import command, gather_in_executor, log
from utils.output import RunManifest, plot_series, prepare_output_dir, write_csv, write_lines

VARIANTS = ("capped", "uncapped")
RUN_HEADER = ("t", "step_mass", "train01", "test01", "train_logistic", "test_logistic", "gap01")
AGGREGATE_HEADER = ("variant", "step_mass", "mean_gap", "stderr", "n")


def _run_job(cfg: MaConfig, variant: str, seed: int) -> List[GapPoint]:
    points = sgd_run(cfg, variant == "capped", seed)
    last = points[-1]
    log(f"✓ ma {variant} seed={seed}: t={last.t} M={last.step_mass:.4f} gap={last.gap:.4f}")
    return points


@command
async def cmd_ma(config_path: Optional[Path] = None, overrides: Optional[Dict[str, object]] = None,
                 out_dir: Path = OUTPUT_DIR, plot: bool = False) -> int:
    """Run capped and uncapped SGD over the seed list; write gap curves and the stability report"""
    settings = resolve_settings("ma", config_path, overrides)
    cfg: MaConfig = build_experiment_config("ma", settings)
    directory = prepare_output_dir(out_dir, "ma")
    manifest = RunManifest.start("ma", settings.model_dump(mode="json"), cfg.seeds, directory)
    manifest.write(directory)

    m = cfg.synth.n_train
    budget = resolve_budget(cfg, m)
    log(f"🧪 ma: {len(cfg.seeds)} seeds, budget {budget}, eta0 {cfg.eta0}, T {cfg.t_max}")
    jobs = [(cfg, variant, seed) for variant in VARIANTS for seed in cfg.seeds]
    results = await gather_in_executor(_run_job, jobs)
    runs: Dict[str, Dict[int, List[GapPoint]]] = {variant: {} for variant in VARIANTS}
    for (_, variant, seed), points in zip(jobs, results):
        runs[variant][seed] = points

    report = []
    aggregate_rows = []
    curves = {}
    for variant in VARIANTS:
        for seed in sorted(runs[variant]):
            write_csv(directory / f"ma_{variant}_seed{seed}.csv", RUN_HEADER,
                      ((p.t, p.step_mass, p.train_loss, p.test_loss, p.train_logistic, p.test_logistic, p.gap)
                       for p in runs[variant][seed]))
        variant_runs = [runs[variant][seed] for seed in sorted(runs[variant])]
        buckets = aggregate_gaps(variant_runs)
        aggregate_rows.extend((variant, b.step_mass, b.mean_gap, b.stderr, b.n) for b in buckets)
        curves[variant] = ([b.step_mass for b in buckets], [b.mean_gap for b in buckets], [b.stderr for b in buckets])
        if len(buckets) >= 2:
            envelope = gap_envelope_check([p for run in variant_runs for p in run], m)
            report.append(f"envelope {variant} " + " ".join(f"{k}={v!r}" for k, v in envelope.model_dump().items()))

    halts = [run[-1].step_mass for run in runs["capped"].values()]
    halted_on_budget = all(abs(mass - budget) <= cfg.eta0 for mass in halts)
    report.append(f"halting budget={budget!r} eta0={cfg.eta0!r} min_mass={min(halts)!r} "
                  f"max_mass={max(halts)!r} within_eta0={halted_on_budget}")
    ordering = gap_ordering([runs["capped"][s] for s in sorted(runs["capped"])],
                            [runs["uncapped"][s] for s in sorted(runs["uncapped"])])
    verdict = "PASS" if ordering.separated else "FAIL"
    report.append(f"gap_ordering {verdict} " + " ".join(f"{k}={v!r}" for k, v in ordering.model_dump().items()))
    write_csv(directory / "ma_aggregate.csv", AGGREGATE_HEADER, aggregate_rows)
    write_lines(directory / "ma_checks.txt", report)
    log(f"📊 final gap capped {ordering.mean_capped:.4f} vs uncapped {ordering.mean_uncapped:.4f}")

    if plot:
        plot_series(directory / "ma_gap_vs_step_mass.svg", curves, "cumulative step-mass",
                    "generalization gap (test - train 0-1)", "Gap vs step-mass")
    manifest.finish().write(directory)
    return EXIT_OK
