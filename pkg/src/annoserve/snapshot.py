"""Deterministic COCO export of a replayed store.

Image order is (captured_at, image_ref); ids count up from 1 in that
order. Annotations follow image order, then submission ledger order,
then draft position, also numbered from 1. Everything in the output is
a pure function of store state + category config + package version, so
a fixed store serializes to byte-identical JSON in any process.
"""

from __future__ import annotations

import logging
from typing import Sequence

from . import __version__
from .canonical import parse_rfc3339
from .coco import CategoryDef, CocoAnnotation, CocoDataset, CocoImage
from .errors import ConfigError
from .geometry import flatten, polygon_area, polygon_bbox
from .storage import StoreState, Verdict, blob_relpath

log = logging.getLogger(__name__)

SNAPSHOT_DESCRIPTION = "viewport annotation snapshot"


def build_snapshot(
    state: StoreState,
    categories: Sequence[CategoryDef],
    approved_only: bool,
    description: str = SNAPSHOT_DESCRIPTION,
) -> CocoDataset:
    """Assemble the COCO dataset for the given state; raises ConfigError on
    drafts whose category is not configured (possible only with a log
    written under a different category config)."""
    category_ids = {cat.name: cat.id for cat in categories}

    refs = []
    for ref in state.image_refs():
        if approved_only and state.effective_verdict(ref) is not Verdict.APPROVED:
            continue
        first = state.by_image[ref][0]
        refs.append((parse_rfc3339(first.captured_at), ref))
    refs.sort()

    images = []
    annotations = []
    latest_received = None
    ann_id = 1
    for image_id, (_, ref) in enumerate(refs, start=1):
        records = state.by_image[ref]
        first = records[0]
        images.append(
            CocoImage(
                id=image_id,
                file_name=blob_relpath(ref).name,
                width=first.image_width,
                height=first.image_height,
                source_url=first.page_url,
                captured_at=first.captured_at,
                annotator_id=first.annotator_id,
                geo=first.geo,
            )
        )
        for rec in records:
            received = (parse_rfc3339(rec.received_at), rec.received_at)
            if latest_received is None or received > latest_received:
                latest_received = received
            for draft in rec.drafts:
                if draft.category_name not in category_ids:
                    raise ConfigError(f"stored draft uses unconfigured category {draft.category_name!r}")
                annotations.append(
                    CocoAnnotation(
                        id=ann_id,
                        image_id=image_id,
                        category_id=category_ids[draft.category_name],
                        segmentation=[flatten(draft.polygon)],
                        area=polygon_area(draft.polygon),
                        bbox=polygon_bbox(draft.polygon),
                        iscrowd=0,
                        attributes=draft.attributes,
                    )
                )
                ann_id += 1

    info = {"description": description, "version": __version__}
    if latest_received is not None:
        info["date_created"] = latest_received[1]
    return CocoDataset(
        info=info,
        licenses=(),
        images=images,
        annotations=annotations,
        categories=categories,
    )
