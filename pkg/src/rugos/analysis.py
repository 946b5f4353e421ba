"""Field statistics and multi-cloud comparison reports."""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .core import MetricVariant, RoughnessField
from .exceptions import MismatchedRadii, MismatchedVariant, NoDefinedValues

N_BINS = 64
FIXED_CLOCK = "1970-01-01T00:00:00+00:00"


@dataclass(frozen=True)
class FieldStats:
    mean: float
    std: float
    min: float
    max: float
    defined_count: int
    undefined_count: int
    histogram: tuple = ()

    def to_dict(self):
        return {
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "defined": self.defined_count,
            "undefined": self.undefined_count,
            "histogram": list(self.histogram),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            mean=float(d["mean"]),
            std=float(d["std"]),
            min=float(d["min"]),
            max=float(d["max"]),
            defined_count=int(d["defined"]),
            undefined_count=int(d["undefined"]),
            histogram=tuple(int(c) for c in d.get("histogram", ())),
        )


def field_stats(field, bins=N_BINS):
    """Mean, population std, extrema and histogram over the defined values."""
    values = field.values if isinstance(field, RoughnessField) else np.asarray(field, float)
    defined = values[~np.isnan(values)]
    if defined.size == 0:
        raise NoDefinedValues("field has no defined values")
    n = defined.size
    lo = float(defined.min())
    hi = float(defined.max())
    mean = min(max(math.fsum(defined) / n, lo), hi)
    std = math.sqrt(math.fsum((defined - mean) ** 2) / n)
    counts, _ = np.histogram(defined, bins=bins, range=(lo, hi) if hi > lo else None)
    return FieldStats(
        mean=mean,
        std=std,
        min=lo,
        max=hi,
        defined_count=int(n),
        undefined_count=int(values.size - n),
        histogram=tuple(int(c) for c in counts),
    )


def radius_key(radius):
    return f"r{float(radius):g}"


@dataclass(frozen=True)
class ComparisonReport:
    """Per-cloud, per-radius statistics plus descending-mean rankings."""

    radii: tuple
    metric_variant: MetricVariant
    entries: dict  # cloud name -> {radius: FieldStats}
    rankings: dict  # radius -> [cloud names]
    config: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def mean_range(self, name):
        means = [self.entries[name][r].mean for r in self.radii]
        return min(means), max(means)

    def to_dict(self):
        return {
            "metric_variant": self.metric_variant.value,
            "radii": list(self.radii),
            "clouds": {
                name: {radius_key(r): s.to_dict() for r, s in per.items()}
                for name, per in self.entries.items()
            },
            "rankings": {radius_key(r): list(v) for r, v in self.rankings.items()},
            "config": self.config,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d):
        radii = tuple(float(r) for r in d["radii"])
        keys = {radius_key(r): r for r in radii}
        entries = {
            name: {keys[k]: FieldStats.from_dict(s) for k, s in per.items()}
            for name, per in d["clouds"].items()
        }
        rankings = {keys[k]: list(v) for k, v in d["rankings"].items()}
        return cls(
            radii=radii,
            metric_variant=MetricVariant.parse(d["metric_variant"]),
            entries=entries,
            rankings=rankings,
            config=d.get("config", {}),
            provenance=d.get("provenance", {}),
        )


def timestamp(fixed_clock=False):
    if fixed_clock:
        return FIXED_CLOCK
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def compare_clouds(clouds, *, config=None, inputs=None, fixed_clock=False):
    """Build a :class:`ComparisonReport`.

    ``clouds`` maps a cloud name to its roughness fields (or is a sequence of
    ``(name, fields)`` pairs). Every cloud must carry the same radii and the
    same metric variant. Rankings order names by descending mean, ties by
    name.
    """
    items = list(clouds.items()) if isinstance(clouds, dict) else list(clouds)
    if not items:
        raise MismatchedRadii("no clouds to compare")
    names = [n for n, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("cloud names must be unique")

    radii = None
    variant = None
    entries = {}
    for name, fields in items:
        fields = sorted(fields, key=lambda f: f.radius)
        these = tuple(f.radius for f in fields)
        if not these:
            raise MismatchedRadii(f"cloud {name!r} carries no roughness fields")
        if radii is None:
            radii = these
        elif these != radii:
            raise MismatchedRadii(f"cloud {name!r} has radii {these}, expected {radii}")
        for f in fields:
            if variant is None:
                variant = f.metric_variant
            elif f.metric_variant is not variant:
                raise MismatchedVariant(
                    f"cloud {name!r} uses {f.metric_variant.value}, expected {variant.value}"
                )
        entries[name] = {f.radius: field_stats(f) for f in fields}

    rankings = {
        r: sorted(names, key=lambda n: (-entries[n][r].mean, n)) for r in radii
    }
    provenance = {
        "inputs": dict(inputs or {}),
        "tool": "rugos",
        "version": __version__,
        "timestamp": timestamp(fixed_clock),
    }
    return ComparisonReport(
        radii=radii,
        metric_variant=variant,
        entries=entries,
        rankings=rankings,
        config=dict(config or {}),
        provenance=provenance,
    )


JSON = "json"
CSV = "csv"
MARKDOWN = "md"


def _fmt(x):
    return f"{x:.4f}"


def _range_label(radii):
    return f"{float(radii[0]):g}–{float(radii[-1]):g}"


_VARIANT_LABELS = {
    MetricVariant.MAD_EQ1: "mean absolute deviation",
    MetricVariant.POINT_TO_PLANE: "point-to-plane distance",
}


def render_markdown(report):
    radii = report.radii
    order = report.rankings[radii[-1]]
    lines = [
        f"Roughness comparison ({_VARIANT_LABELS[report.metric_variant]}, "
        f"min neighbors {report.config.get('min_neighbors', 'n/a')})",
        "",
        f"| Tool | Mean ({_range_label(radii)} model units) | Undefined points |",
        "|---|---|---|",
    ]
    for name in order:
        lo, hi = report.mean_range(name)
        undefined = ", ".join(
            f"{report.entries[name][r].undefined_count}" for r in radii
        )
        lines.append(f"| {name} | {_fmt(lo)}–{_fmt(hi)} | {undefined} |")
    lines += ["", "| Radius | " + " | ".join(order) + " | Ranking |",
              "|---|" + "---|" * (len(order) + 1)]
    for r in radii:
        means = " | ".join(_fmt(report.entries[n][r].mean) for n in order)
        lines.append(f"| {float(r):g} | {means} | {' > '.join(report.rankings[r])} |")
    return "\n".join(lines) + "\n"


def render_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cloud", "radius", "mean", "std", "min", "max", "defined", "undefined", "rank"])
    for name, per in report.entries.items():
        for r in report.radii:
            s = per[r]
            rank = report.rankings[r].index(name) + 1
            w.writerow([name, repr(float(r)), repr(s.mean), repr(s.std), repr(s.min),
                        repr(s.max), s.defined_count, s.undefined_count, rank])
    return buf.getvalue()


def render_report(report, format=JSON):
    """Render as ``"json"`` (canonical), ``"csv"`` or ``"md"``."""
    fmt = str(format).lower()
    if fmt == JSON:
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == CSV:
        return render_csv(report)
    if fmt in (MARKDOWN, "markdown"):
        return render_markdown(report)
    raise ValueError(f"unknown report format {format!r}")


def parse_report(text):
    return ComparisonReport.from_dict(json.loads(text))
