"""`selfmod-gate substrate`: ERM vs finite-state threshold learning, optional collision search"""
from pathlib import Path
from typing import Dict, Optional

from config.loader import resolve_settings
from config.settings import EXIT_OK, OUTPUT_DIR
from services.substrate import find_state_collision, run_substrate_experiment, verify_witness, write_witness
from utils.helpers import command, log
from utils.output import RunManifest, plot_series, prepare_output_dir, write_csv, write_lines

RISK_HEADER = ("m", "learner", "mean_risk", "stderr")


@command
async def cmd_substrate(config_path: Optional[Path] = None, overrides: Optional[Dict[str, object]] = None,
                        out_dir: Path = OUTPUT_DIR, plot: bool = False) -> int:
    settings = resolve_settings("substrate", config_path, overrides)
    seeds = settings.seed_list
    directory = prepare_output_dir(out_dir, "substrate")
    manifest = RunManifest.start("substrate", settings.model_dump(mode="json"), seeds, directory)
    manifest.write(directory)

    log(f"🧪 substrate: N={settings.N} D={settings.D} sizes={settings.size_list} seeds={len(seeds)}")
    rows = run_substrate_experiment(settings.N, settings.size_list, settings.D, seeds, settings.targets_per_seed)
    rows.sort(key=lambda r: (r.learner, r.m))
    write_csv(directory / "substrate_risk.csv", RISK_HEADER, ((r.m, r.learner, r.mean_risk, r.stderr) for r in rows))

    report = []
    for learner in ("erm", "fsl"):
        curve = [r for r in rows if r.learner == learner]
        first, last = curve[0].mean_risk, curve[-1].mean_risk
        ratio = last / first if first > 0 else 0.0
        report.append(f"{learner} m={curve[0].m}->{curve[-1].m} risk={first!r}->{last!r} ratio={ratio!r}")

    if settings.find_collision:
        m = settings.collision_m or settings.N + 1
        search = find_state_collision(settings.N, m, settings.collision_D, budget=settings.collision_budget,
                                      seed=settings.base_seed)
        report.append(f"collision N={settings.N} m={m} D={settings.collision_D} found={search.witness is not None} "
                      f"sequences_checked={search.sequences_checked} exhaustive={search.exhaustive}")
        if search.witness is not None:
            write_witness(search.witness, directory / "substrate_witness.txt")
            report.append(f"witness_verified={verify_witness(search.witness, settings.N, settings.collision_D)}")
    write_lines(directory / "substrate_checks.txt", report)

    if plot:
        series = {learner: ([r.m for r in rows if r.learner == learner],
                            [r.mean_risk for r in rows if r.learner == learner],
                            [r.stderr for r in rows if r.learner == learner])
                  for learner in ("erm", "fsl")}
        plot_series(directory / "substrate_risk.svg", series, "sample size m", "mean risk",
                    f"Threshold learning, N={settings.N} states, D={settings.D}")
    manifest.finish().write(directory)
    return EXIT_OK
