"""Output directory handling: stale-file cleanup, CSVs, run manifests, reports and plots"""
import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from config.settings import TOOL_VERSION
from utils.helpers import fmt, log

STALE_PATTERNS = ("*.csv", "*.txt", "*.svg", "manifest.json")


def prepare_output_dir(out_dir: Path, experiment: str) -> Path:
    """Create <out>/<experiment>/ and remove result files left by a previous run"""
    directory = Path(out_dir) / experiment
    directory.mkdir(parents=True, exist_ok=True)
    removed = 0
    for pattern in STALE_PATTERNS:
        for stale in directory.glob(pattern):
            try:
                stale.unlink()
                removed += 1
            except OSError as e:
                log(f"⚠️  could not remove {stale}: {e}")
    if removed:
        log(f"🧹 removed {removed} stale files from {directory}")
    return directory


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """UTF-8, LF, header row first; cells through utils.helpers.fmt"""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(cell) for cell in row])
    log(f"💾 {path}")
    return Path(path)


def write_lines(path: Path, lines: Iterable[str]) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(f"{line}\n")
    log(f"💾 {path}")
    return Path(path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest(BaseModel):
    experiment: str
    config: Dict[str, object]
    seeds: List[int]
    output_dir: str
    tool_version: str = TOOL_VERSION
    started_at: str
    finished_at: Optional[str] = None

    @classmethod
    def start(cls, experiment: str, config: Dict[str, object], seeds: Sequence[int], output_dir: Path) -> "RunManifest":
        return cls(experiment=experiment, config=config, seeds=list(seeds), output_dir=str(output_dir), started_at=_now())

    def finish(self) -> "RunManifest":
        return self.model_copy(update={"finished_at": _now()})

    def write(self, directory: Path) -> Path:
        path = Path(directory) / "manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.model_dump(mode="json"), handle, indent=2, sort_keys=True)
            handle.write("\n")
        return path


def read_manifest(path: Path) -> RunManifest:
    with open(path, encoding="utf-8") as handle:
        return RunManifest.model_validate(json.load(handle))


def plot_series(path: Path, series: Dict[str, Tuple[Sequence[float], Sequence[float], Optional[Sequence[float]]]],
                xlabel: str, ylabel: str, title: str) -> Path:
    """Line plot of (x, y, optional stderr band) per label, saved as SVG"""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "selfmod-gate"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label in sorted(series):
        x, y, band = series[label]
        ax.plot(x, y, label=label, linewidth=1.5)
        if band is not None:
            lower = [a - b for a, b in zip(y, band)]
            upper = [a + b for a, b in zip(y, band)]
            ax.fill_between(x, lower, upper, alpha=0.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    log(f"💾 {path}")
    return Path(path)
