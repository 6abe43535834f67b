"""Shared test utilities and independent oracles.

The oracles here deliberately avoid the library's own code paths:
areas come from counting pixel centers inside the polygon by even-odd
ray casting (no shoelace anywhere), expected rectangle values from
plain arithmetic, and PNG fixtures from Pillow directly.
"""

from __future__ import annotations

import base64
import hashlib
import io
import math
import random

import numpy as np
from PIL import Image

from annoserve.coco import CategoryDef, CocoAnnotation, CocoDataset, CocoImage
from annoserve.urlmeta import GeoMetadata


def png_bytes(width: int = 64, height: int = 48, seed: int = 0) -> bytes:
    """Deterministic PNG whose pixels (and hash) depend on the seed."""
    im = Image.new("RGB", (width, height), ((seed * 37) % 256, (seed * 101) % 256, (seed * 11) % 256))
    im.putpixel((seed % width, (seed * 7) % height), (255, 255, 255))
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def png_b64(width: int = 64, height: int = 48, seed: int = 0) -> str:
    return base64.b64encode(png_bytes(width, height, seed)).decode("ascii")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def raster_area(vertices, pad: int = 2) -> float:
    """Pixel-center counting area oracle, independent of the shoelace path.

    Counts pixel centers (x + 0.5, y + 0.5) inside the polygon over a
    padded bounding grid, deciding insideness by even-odd ray casting.
    """
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    x0, x1 = math.floor(min(xs)) - pad, math.ceil(max(xs)) + pad
    y0, y1 = math.floor(min(ys)) - pad, math.ceil(max(ys)) + pad
    gx, gy = np.meshgrid(np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5)
    px, py = gx.ravel(), gy.ravel()
    inside = np.zeros(px.shape, dtype=bool)
    ring = np.asarray(vertices, dtype=float)
    j = len(ring) - 1
    for i in range(len(ring)):
        xi, yi = ring[i]
        xj, yj = ring[j]
        straddles = (yi > py) != (yj > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing = px < (xj - xi) * (py - yi) / (yj - yi) + xi
        inside ^= straddles & crossing
        j = i
    return float(np.count_nonzero(inside))


def star_polygon(rng: random.Random, cx: float, cy: float, n: int, rmin: float, rmax: float):
    """Simple (non-self-intersecting) polygon: random radii at increasing angles.

    Angular gaps are drawn from [0.5, 1.0] and rescaled to sum to a full
    turn, which keeps every gap (including the wrap-around one) under pi;
    edges then stay inside disjoint wedges and cannot cross.
    """
    gaps = [rng.uniform(0.5, 1.0) for _ in range(n)]
    total = sum(gaps)
    start = rng.uniform(0.0, 2.0 * math.pi)
    angles = []
    acc = 0.0
    for g in gaps:
        angles.append(start + 2.0 * math.pi * acc / total)
        acc += g
    return [
        (cx + rng.uniform(rmin, rmax) * math.cos(a), cy + rng.uniform(rmin, rmax) * math.sin(a))
        for a in angles
    ]


def submission_payload(
    *,
    annotator_id: str = "ann1",
    captured_at: str = "2026-08-01T12:00:00Z",
    page_url: str = "https://example.org/somewhere",
    width: int = 64,
    height: int = 48,
    dpr: float = 1.0,
    seed: int = 0,
    annotations=None,
):
    """A valid submission payload; callers override pieces to break it."""
    if annotations is None:
        annotations = [
            {
                "category_name": "directed",
                "polygon": [[4, 4], [20, 4], [20, 20], [4, 20]],
                "attributes": {},
            }
        ]
    png_w = round(width * dpr)
    png_h = round(height * dpr)
    return {
        "annotator_id": annotator_id,
        "captured_at": captured_at,
        "page_url": page_url,
        "viewport": {"width": width, "height": height, "device_pixel_ratio": dpr},
        "image": png_b64(png_w, png_h, seed),
        "annotations": annotations,
    }


def rect_annotation(ann_id, image_id, category_id, x, y, w, h, **kw):
    seg = [float(v) for v in (x, y, x + w, y, x + w, y + h, x, y + h)]
    return CocoAnnotation(
        id=ann_id,
        image_id=image_id,
        category_id=category_id,
        segmentation=(seg,),
        area=float(w * h),
        bbox=(float(x), float(y), float(w), float(h)),
        **kw,
    )


CAT_POOL = (
    ("directed", "camera"),
    ("round", "camera"),
    ("dome", "camera"),
    ("lamp", "street"),
)


def random_dataset(rng: random.Random) -> CocoDataset:
    # exported datasets carry no UI category fields, so none are drawn here
    n_cats = rng.randint(1, len(CAT_POOL))
    cats = tuple(
        CategoryDef(i + 1, name, sup) for i, (name, sup) in enumerate(rng.sample(CAT_POOL, n_cats))
    )
    images = []
    for i in range(1, rng.randint(1, 6) + 1):
        extra = {"license": rng.randint(1, 4)} if rng.random() < 0.3 else {}
        images.append(
            CocoImage(
                id=i,
                file_name=f"{rng.getrandbits(64):016x}.png",
                width=rng.randint(50, 1600),
                height=rng.randint(50, 1600),
                source_url=f"https://maps.example/{i}",
                captured_at=f"2026-01-0{rng.randint(1, 9)}T12:00:00Z",
                annotator_id=f"ann-{rng.randint(1, 8)}",
                geo=GeoMetadata(
                    latitude=rng.uniform(-90, 90),
                    longitude=rng.uniform(-180, 180),
                    heading=rng.uniform(0, 359.9),
                    pitch=rng.uniform(0, 180),
                    fov=rng.uniform(1, 180),
                )
                if rng.random() < 0.5
                else None,
                extra=extra,
            )
        )
    annotations = []
    for i in range(1, rng.randint(1, 12) + 1):
        x, y = rng.uniform(0, 500), rng.uniform(0, 500)
        w, h = rng.uniform(1, 300), rng.uniform(1, 300)
        annotations.append(
            rect_annotation(
                i,
                rng.choice(images).id,
                rng.choice(cats).id,
                x,
                y,
                w,
                h,
                attributes={"model": rng.choice(["visible", "hidden"])} if rng.random() < 0.5 else {},
            )
        )
    extra = {"fold": rng.choice(["train", "val"])} if rng.random() < 0.4 else {}
    return CocoDataset(
        info={"description": "fixture", "version": str(rng.randint(1, 9))},
        images=tuple(images),
        annotations=tuple(annotations),
        categories=cats,
        extra=extra,
    )
