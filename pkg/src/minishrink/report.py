"""Run reports: archive CSV rows and the JSON summary."""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .devices import Device, Measurement, device_count, fits, nda
from .evaluation import percentage_change
from .feature_model import FeatureModel
from .search.problem import Archive


def _num(x: float) -> str:
    return repr(float(x))


@dataclass
class RunReport:
    app: str
    algorithm: str
    seed: int
    archive: Archive
    baseline: Measurement
    devices: Sequence[Device]
    model: FeatureModel
    evaluator: str = "simulated"
    params: dict = field(default_factory=dict)
    wall_time_s: float | None = None

    @property
    def evaluations_used(self) -> int:
        return self.archive.evaluations_used

    def rows(self) -> list[dict]:
        out = []
        for rec in self.archive.records:
            m, o = rec.measurement, rec.objectives
            row = {
                "bitstring": rec.config.bitstring,
                "flipped": ";".join(str(i) for i in self.model.flipped_ids(rec.config)),
                "udr": o.udr,
                "cs_kb": m.code_size_kb,
                "mu_kb": m.memory_kb,
                "et_s": m.time_s,
            }
            for d in self.devices:
                row[f"fit:{d.name}"] = int(fits(m, d))
            out.append(row)
        return out

    def summary(self) -> dict:
        """Median percentage changes against the baseline, plus device counts.

        Always recomputed from the archive rows.
        """
        measurements = [r.measurement for r in self.archive.records]
        before = device_count([self.baseline], self.devices)
        after = device_count(measurements, self.devices)

        def med(attr: str):
            if not measurements or not self.baseline.feasible:
                return None
            base = getattr(self.baseline, attr)
            return statistics.median(percentage_change(getattr(m, attr), base) for m in measurements)

        return {
            "median_delta_cs": med("code_size_kb"),
            "median_delta_mu": med("memory_kb"),
            "median_delta_et": med("time_s"),
            "devices_before": before,
            "devices_after": after,
            "nda": nda(before, after),
        }

    def archive_csv(self) -> str:
        buf = io.StringIO()
        fieldnames = ["bitstring", "flipped", "udr", "cs_kb", "mu_kb", "et_s"] + [
            f"fit:{d.name}" for d in self.devices
        ]
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: (_num(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self, include_timing: bool = False) -> dict:
        b = self.baseline
        baseline = {"cs_kb": b.code_size_kb, "mu_kb": b.memory_kb, "et_s": b.time_s} if b.feasible else None
        data = {
            "app": self.app,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "evaluator": self.evaluator,
            "objectives": list(self.archive.objectives),
            "params": self.params,
            "evaluations_used": self.evaluations_used,
            "archive_size": len(self.archive),
            "baseline": baseline,
            "summary": self.summary(),
            "stats": self.archive.stats,
        }
        if include_timing and self.wall_time_s is not None:
            data["wall_time_s"] = self.wall_time_s
        return data

    def write(self, out_dir, include_timing: bool = False) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / "report.json"
        archive_path = out / "archive.csv"
        report_path.write_text(json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n")
        archive_path.write_text(self.archive_csv())
        return report_path, archive_path
