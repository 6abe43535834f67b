"""Dataset-level and per-annotator statistics over replayed store state.

All computations are pure functions of an immutable ``StoreState``
snapshot, so they are safe to call concurrently and repeat. JSON
renderings use a fixed key order: the orders documented on each
``to_json`` below, with open maps (category counts) sorted by key and
the area / source maps emitted in their semantic order (small, medium,
large; google, baidu, flickr, other).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .coco import CategoryDef
from .errors import ValidationError, Violation
from .geometry import AreaClass, classify_area, polygon_area
from .storage import StoreState, Verdict
from .urlmeta import SourceTag, classify_source

log = logging.getLogger(__name__)

AREA_ORDER = (AreaClass.SMALL, AreaClass.MEDIUM, AreaClass.LARGE)
SOURCE_ORDER = (SourceTag.GOOGLE, SourceTag.BAIDU, SourceTag.FLICKR, SourceTag.OTHER)


@dataclass(frozen=True)
class AnnotatorStats:
    """One reviewer-facing row: volume submitted, volume kept, rejection rate."""

    annotator_id: str
    submitted_images: int
    approved_images: int
    dq_rate: float

    def __post_init__(self):
        if self.submitted_images < 0 or self.approved_images < 0:
            raise ValueError("image counts must be non-negative")
        if not (0.0 <= self.dq_rate <= 100.0):
            raise ValueError(f"dq_rate {self.dq_rate} outside [0, 100]")

    def to_json(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "submitted_images": self.submitted_images,
            "approved_images": self.approved_images,
            "dq_rate": self.dq_rate,
        }


@dataclass(frozen=True)
class AnnotatorFooter:
    sum_approved: int
    mean_approved: float
    mean_dq: float

    def to_json(self) -> dict:
        return {
            "sum_approved": self.sum_approved,
            "mean_approved": self.mean_approved,
            "mean_dq": self.mean_dq,
        }


def summarize_annotators(rows: Sequence[AnnotatorStats]) -> AnnotatorFooter:
    """Footer sums and unweighted means over annotator rows (zeros when empty)."""
    if not rows:
        return AnnotatorFooter(sum_approved=0, mean_approved=0.0, mean_dq=0.0)
    total = sum(r.approved_images for r in rows)
    return AnnotatorFooter(
        sum_approved=total,
        mean_approved=total / len(rows),
        mean_dq=sum(r.dq_rate for r in rows) / len(rows),
    )


def compute_annotator_stats(state: StoreState) -> tuple[list[AnnotatorStats], AnnotatorFooter]:
    """Per-annotator rows (sorted by annotator id) plus the footer line.

    An image counts as submitted once per annotator who sent it, no matter
    how many times; approved/disqualified follow the image's effective
    QC verdict.
    """
    images_by_annotator: dict[str, dict[str, None]] = {}
    for rec in state.submissions:
        images_by_annotator.setdefault(rec.annotator_id, {})[rec.image_ref] = None

    rows = []
    for annotator_id in sorted(images_by_annotator):
        refs = images_by_annotator[annotator_id]
        approved = disqualified = 0
        for ref in refs:
            verdict = state.effective_verdict(ref)
            if verdict is Verdict.APPROVED:
                approved += 1
            elif verdict is Verdict.DISQUALIFIED:
                disqualified += 1
        submitted = len(refs)
        rows.append(
            AnnotatorStats(
                annotator_id=annotator_id,
                submitted_images=submitted,
                approved_images=approved,
                dq_rate=100.0 * disqualified / submitted if submitted else 0.0,
            )
        )
    return rows, summarize_annotators(rows)


@dataclass(frozen=True)
class DatasetStats:
    total_images: int
    total_instances: int
    instances_by_category: Mapping[str, int]
    instances_by_area: Mapping[AreaClass, int]
    images_by_source: Mapping[SourceTag, int]

    def to_json(self) -> dict:
        return {
            "total_images": self.total_images,
            "total_instances": self.total_instances,
            "instances_by_category": {k: self.instances_by_category[k] for k in sorted(self.instances_by_category)},
            "instances_by_area": {cls.value: self.instances_by_area.get(cls, 0) for cls in AREA_ORDER},
            "images_by_source": {tag.value: self.images_by_source.get(tag, 0) for tag in SOURCE_ORDER},
        }


def compute_dataset_stats(
    state: StoreState, categories: Sequence[CategoryDef], approved_only: bool
) -> DatasetStats:
    """Image/instance counts binned by category, area class, and URL source.

    With approved_only, images whose effective verdict is not Approved
    (including pending ones) are excluded entirely. An image's source is
    classified from the page URL of its first submission; instances come
    from every draft of every submission of that image.
    """
    by_category: dict[str, int] = {cat.name: 0 for cat in categories}
    by_area: dict[AreaClass, int] = {cls: 0 for cls in AREA_ORDER}
    by_source: dict[SourceTag, int] = {tag: 0 for tag in SOURCE_ORDER}

    total_images = 0
    total_instances = 0
    for ref in state.image_refs():
        if approved_only and state.effective_verdict(ref) is not Verdict.APPROVED:
            continue
        records = state.by_image[ref]
        total_images += 1
        by_source[classify_source(records[0].page_url)] += 1
        for rec in records:
            for draft in rec.drafts:
                total_instances += 1
                if draft.category_name not in by_category:
                    log.warning("instance with unconfigured category %r counted", draft.category_name)
                by_category[draft.category_name] = by_category.get(draft.category_name, 0) + 1
                by_area[classify_area(polygon_area(draft.polygon))] += 1

    return DatasetStats(
        total_images=total_images,
        total_instances=total_instances,
        instances_by_category=by_category,
        instances_by_area=by_area,
        images_by_source=by_source,
    )


@dataclass(frozen=True)
class SurveyResponse:
    """One annotator's optional self-report scores, each 0-5 when present."""

    annotator_id: str
    annotation_expertise: Optional[float] = None
    easy_setup: Optional[float] = None
    overall_experience: Optional[float] = None


SURVEY_FIELDS = ("annotation_expertise", "easy_setup", "overall_experience")


@dataclass(frozen=True)
class SurveySummary:
    mean_annotation_expertise: Optional[float]
    mean_easy_setup: Optional[float]
    mean_overall_experience: Optional[float]
    respondents: Mapping[str, int]

    def to_json(self) -> dict:
        return {
            "mean_annotation_expertise": self.mean_annotation_expertise,
            "mean_easy_setup": self.mean_easy_setup,
            "mean_overall_experience": self.mean_overall_experience,
            "respondents": {k: self.respondents[k] for k in sorted(self.respondents)},
        }


def compute_survey_summary(responses: Sequence[SurveyResponse]) -> SurveySummary:
    """Means over respondents only; absent scores are never coerced to zero."""
    violations = []
    for resp in responses:
        for name in SURVEY_FIELDS:
            score = getattr(resp, name)
            if score is None:
                continue
            if not math.isfinite(score) or not (0.0 <= score <= 5.0):
                violations.append(
                    Violation("survey-score-out-of-range", f"{resp.annotator_id}: {name} = {score} outside [0, 5]")
                )
    if violations:
        raise ValidationError(violations)

    means: dict[str, Optional[float]] = {}
    counts: dict[str, int] = {}
    for name in SURVEY_FIELDS:
        present = [getattr(r, name) for r in responses if getattr(r, name) is not None]
        counts[name] = len(present)
        means[name] = sum(present) / len(present) if present else None
    return SurveySummary(
        mean_annotation_expertise=means["annotation_expertise"],
        mean_easy_setup=means["easy_setup"],
        mean_overall_experience=means["overall_experience"],
        respondents=counts,
    )


# ---------------------------------------------------------------------------
# Plain-text rendering for operators


def _row(label: str, value, indent: int = 0) -> str:
    return f"{' ' * indent}{label:<{30 - indent}}{value:>10}"


def render_dataset_table(stats: DatasetStats) -> str:
    lines = [
        _row("Total collected images", stats.total_images),
        _row("Total annotated instances", stats.total_instances),
        "Annotated instances",
    ]
    for name in sorted(stats.instances_by_category):
        lines.append(_row(name, stats.instances_by_category[name], indent=2))
    lines.append("Instances by area class")
    for cls in AREA_ORDER:
        lines.append(_row(cls.value, stats.instances_by_area.get(cls, 0), indent=2))
    lines.append("Images by source")
    for tag in SOURCE_ORDER:
        lines.append(_row(tag.value, stats.images_by_source.get(tag, 0), indent=2))
    return "\n".join(lines)


def render_annotator_table(rows: Sequence[AnnotatorStats], footer: AnnotatorFooter) -> str:
    lines = [f"{'Annotator':<24}{'Submitted':>10}{'Approved':>10}{'DQ %':>8}"]
    for r in rows:
        lines.append(f"{r.annotator_id:<24}{r.submitted_images:>10}{r.approved_images:>10}{r.dq_rate:>8.2f}")
    lines.append(_row("Sum approved", footer.sum_approved))
    lines.append(_row("Mean approved", f"{footer.mean_approved:.2f}"))
    lines.append(_row("Mean DQ %", f"{footer.mean_dq:.2f}"))
    return "\n".join(lines)
