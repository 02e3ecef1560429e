"""`selfmod-gate oracle`: VC brute force, capacity-proxy soundness and deviation probes"""
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from config.loader import resolve_settings
from config.settings import EXIT_OK, EXIT_SOUNDNESS, OUTPUT_DIR
from services.hypothesis import capacity
from services.oracle import deviation_probe, full_class, sign_class_on_grid, threshold_class, vc_bruteforce
from utils.helpers import command, log
from utils.output import RunManifest, prepare_output_dir, write_csv, write_lines

SUITES = ("vc", "proxy", "deviation")
GRID = tuple(np.linspace(-1.0, 1.0, 8).tolist())
PROXY_DEGREES = (0, 1, 2)
PROBE_DEGREES = (0, 1, 2)


def vc_suite(settings) -> List[tuple]:
    """(fixture, points, expected, measured, passed)"""
    fixtures = [
        ("thresholds", 10, 1, vc_bruteforce(threshold_class(range(1, 11)))),
        ("all_labelings", 4, 4, vc_bruteforce(full_class(4))),
    ]
    for degree in range(4):
        measured = vc_bruteforce(sign_class_on_grid(degree, GRID, settings.sign_draws, settings.base_seed))
        fixtures.append((f"poly_sign_degree{degree}", len(GRID), degree + 1, measured))
    return [(name, n, expected, measured, expected == measured) for name, n, expected, measured in fixtures]


def proxy_suite(settings) -> List[tuple]:
    """(degree, vc, proxy, passed): brute-force VC never exceeds the parameter-count proxy"""
    rows = []
    for degree in PROXY_DEGREES:
        vc = vc_bruteforce(sign_class_on_grid(degree, GRID, settings.sign_draws, settings.base_seed))
        proxy = capacity(degree).value
        rows.append((degree, vc, proxy, vc <= proxy))
    return rows


def deviation_suite(settings) -> List[tuple]:
    """Probe rows; only the degree-0 Hoeffding comparison is a pass/fail assertion"""
    rows = []
    for degree in PROBE_DEGREES:
        report = deviation_probe(
            degree=degree,
            K=capacity(degree).value,
            n=settings.probe_n,
            delta=settings.delta,
            trials=settings.probe_trials,
            c0=settings.c0,
            net_size=settings.probe_net,
            test_size=settings.probe_test_size,
            seed=settings.base_seed,
        )
        passed = report.hoeffding is None or report.quantile <= report.hoeffding
        rows.append((degree, report.K, report.n, report.delta, report.trials, report.net_size,
                     report.quantile, report.bound, report.holds, report.hoeffding, passed))
    return rows


@command
async def cmd_oracle(config_path: Optional[Path] = None, overrides: Optional[Dict[str, object]] = None,
                     out_dir: Path = OUTPUT_DIR, plot: bool = False) -> int:
    """Run the requested suite; exit 1 when any soundness assertion fails"""
    settings = resolve_settings("oracle", config_path, overrides)
    suites = SUITES if settings.suite == "all" else (settings.suite,)
    directory = prepare_output_dir(out_dir, "oracle")
    manifest = RunManifest.start("oracle", settings.model_dump(mode="json"), [settings.base_seed], directory)
    manifest.write(directory)

    failures = 0
    report = []
    if "vc" in suites:
        rows = vc_suite(settings)
        write_csv(directory / "oracle_vc.csv", ("fixture", "points", "expected", "measured", "passed"), rows)
        failures += sum(1 for row in rows if not row[-1])
        report.extend(f"vc {name} expected={expected} measured={measured}" for name, _, expected, measured, _ in rows)
    if "proxy" in suites:
        rows = proxy_suite(settings)
        write_csv(directory / "oracle_proxy.csv", ("degree", "vc", "proxy", "passed"), rows)
        failures += sum(1 for row in rows if not row[-1])
        report.extend(f"proxy degree={d} vc={vc} proxy={p} passed={ok}" for d, vc, p, ok in rows)
    if "deviation" in suites:
        rows = deviation_suite(settings)
        write_csv(directory / "oracle_deviation.csv",
                  ("degree", "K", "n", "delta", "trials", "net_size", "quantile", "c0_bound", "c0_bound_holds",
                   "hoeffding", "passed"), rows)
        failures += sum(1 for row in rows if not row[-1])
        report.extend(f"deviation degree={row[0]} quantile={row[6]!r} c0_bound={row[7]!r} hoeffding={row[9]!r}"
                      for row in rows)

    report.append(f"failures={failures}")
    write_lines(directory / "oracle_checks.txt", report)
    manifest.finish().write(directory)
    if failures:
        log(f"✗ oracle: {failures} soundness assertions failed")
        return EXIT_SOUNDNESS
    log(f"✓ oracle: {', '.join(suites)} passed")
    return EXIT_OK
