"""COCO-compatible dataset model: canonical serialization, parsing, validation, merge.

Exported files are byte-deterministic. Key order is fixed per record type:

- dataset: info, licenses, images, annotations, categories, then unknown
  top-level keys sorted alphabetically
- image: id, file_name, width, height, source_url, captured_at,
  annotator_id, geo (omitted when absent), then extras sorted
- annotation: id, image_id, category_id, segmentation, area, bbox,
  iscrowd, attributes, then extras sorted
- category on export: id, name, supercategory (display colors and
  shortcut keys belong to the category config file, not the dataset)
- geo: latitude, longitude, heading, pitch, fov, provider

Open maps (info, attributes, extras) are sorted by key. Integers are
emitted without a decimal point, reals with their shortest round-trip
representation; geometry values are always reals.

Unknown keys found while parsing are kept in per-object ``extra`` maps
and re-emitted, so foreign COCO files survive a round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

from .canonical import canonical_bytes, sort_map
from .errors import (
    ConfigError,
    DatasetParseError,
    MergeConflictError,
    SchemaError,
    ValidationError,
    Violation,
    errors_only,
)
from .urlmeta import GeoMetadata

_HEX_COLOR_DIGITS = set("0123456789abcdefABCDEF")


@dataclass(frozen=True)
class CategoryDef:
    """Object category identity plus its UI binding (color, shortcut key)."""

    id: int
    name: str
    supercategory: str = ""
    display_color: str = ""
    shortcut_key: Optional[str] = None


@dataclass(frozen=True)
class CocoImage:
    id: int
    file_name: str
    width: int
    height: int
    source_url: str = ""
    captured_at: str = ""
    annotator_id: str = ""
    geo: Optional[GeoMetadata] = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "extra", dict(self.extra))


@dataclass(frozen=True)
class CocoAnnotation:
    id: int
    image_id: int
    category_id: int
    segmentation: Sequence[Sequence[float]]
    area: float
    bbox: Sequence[float]
    iscrowd: int = 0
    attributes: Mapping[str, str] = field(default_factory=dict)
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "segmentation", tuple(tuple(float(v) for v in poly) for poly in self.segmentation)
        )
        object.__setattr__(self, "area", float(self.area))
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        object.__setattr__(self, "attributes", dict(self.attributes))
        object.__setattr__(self, "extra", dict(self.extra))


@dataclass(frozen=True)
class CocoDataset:
    info: Mapping[str, Any] = field(default_factory=dict)
    licenses: Sequence[Any] = ()
    images: Sequence[CocoImage] = ()
    annotations: Sequence[CocoAnnotation] = ()
    categories: Sequence[CategoryDef] = ()
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "info", dict(self.info))
        object.__setattr__(self, "licenses", tuple(self.licenses))
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "annotations", tuple(self.annotations))
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "extra", dict(self.extra))


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_finite(value: float) -> bool:
    return value == value and value not in (float("inf"), float("-inf"))


# ---------------------------------------------------------------------------
# Validation


def validate_dataset(ds: CocoDataset) -> list[Violation]:
    """Return one violation per broken invariant; empty list means valid."""
    out: list[Violation] = []

    seen_cat_ids: set[int] = set()
    seen_cat_names: set[str] = set()
    seen_shortcuts: set[str] = set()
    for cat in ds.categories:
        if not isinstance(cat.id, int) or cat.id <= 0:
            out.append(Violation("bad-category-id", f"category id {cat.id!r} is not a positive integer"))
        elif cat.id in seen_cat_ids:
            out.append(Violation("duplicate-category-id", f"duplicate category id {cat.id}"))
        else:
            seen_cat_ids.add(cat.id)
        if not cat.name:
            out.append(Violation("empty-category-name", f"category {cat.id} has an empty name"))
        elif cat.name in seen_cat_names:
            out.append(Violation("duplicate-category-name", f"duplicate category name {cat.name!r}"))
        else:
            seen_cat_names.add(cat.name)
        if cat.display_color and not _valid_color(cat.display_color):
            out.append(
                Violation(
                    "bad-category-color",
                    f"category {cat.name!r} color {cat.display_color!r} is not 6 hex digits",
                )
            )
        if cat.shortcut_key is not None:
            if len(cat.shortcut_key) != 1 or not cat.shortcut_key.isprintable():
                out.append(
                    Violation(
                        "bad-shortcut-key",
                        f"category {cat.name!r} shortcut {cat.shortcut_key!r} is not one printable character",
                    )
                )
            elif cat.shortcut_key in seen_shortcuts:
                out.append(
                    Violation("duplicate-shortcut-key", f"duplicate shortcut key {cat.shortcut_key!r}")
                )
            else:
                seen_shortcuts.add(cat.shortcut_key)

    seen_image_ids: set[int] = set()
    for im in ds.images:
        if not isinstance(im.id, int) or im.id <= 0:
            out.append(Violation("bad-image-id", f"image id {im.id!r} is not a positive integer"))
        elif im.id in seen_image_ids:
            out.append(Violation("duplicate-image-id", f"duplicate image id {im.id}"))
        else:
            seen_image_ids.add(im.id)
        if not isinstance(im.width, int) or not isinstance(im.height, int) or im.width < 1 or im.height < 1:
            out.append(
                Violation("bad-image-dims", f"image {im.id} has non-positive dimensions {im.width}x{im.height}")
            )
        if not im.file_name:
            out.append(Violation("empty-file-name", f"image {im.id} has an empty file_name"))

    seen_ann_ids: set[int] = set()
    for ann in ds.annotations:
        if not isinstance(ann.id, int) or ann.id <= 0:
            out.append(Violation("bad-annotation-id", f"annotation id {ann.id!r} is not a positive integer"))
        elif ann.id in seen_ann_ids:
            out.append(Violation("duplicate-annotation-id", f"duplicate annotation id {ann.id}"))
        else:
            seen_ann_ids.add(ann.id)
        if ann.image_id not in seen_image_ids:
            out.append(
                Violation(
                    "missing-image-ref",
                    f"annotation {ann.id} references missing image {ann.image_id}",
                )
            )
        if ann.category_id not in seen_cat_ids:
            out.append(
                Violation(
                    "missing-category-ref",
                    f"annotation {ann.id} references missing category {ann.category_id}",
                )
            )
        if not ann.segmentation:
            out.append(Violation("empty-segmentation", f"annotation {ann.id} has no polygons"))
        for j, poly in enumerate(ann.segmentation):
            if len(poly) % 2 != 0:
                out.append(
                    Violation(
                        "segmentation-odd-length",
                        f"annotation {ann.id} polygon {j} has odd length {len(poly)}",
                    )
                )
            elif len(poly) < 6:
                out.append(
                    Violation(
                        "segmentation-too-short",
                        f"annotation {ann.id} polygon {j} too short ({len(poly)} numbers, need >= 6)",
                    )
                )
            if not all(_is_finite(v) for v in poly):
                out.append(
                    Violation("segmentation-not-finite", f"annotation {ann.id} polygon {j} has non-finite values")
                )
        if not _is_finite(ann.area) or ann.area <= 0:
            out.append(Violation("nonpositive-area", f"annotation {ann.id} area {ann.area} is not > 0"))
        if len(ann.bbox) != 4 or not all(_is_finite(v) for v in ann.bbox):
            out.append(Violation("bad-bbox", f"annotation {ann.id} bbox {list(ann.bbox)} is malformed"))
        else:
            bx, by, bw, bh = ann.bbox
            if bw <= 0 or bh <= 0:
                out.append(
                    Violation("bad-bbox", f"annotation {ann.id} bbox has non-positive size {bw}x{bh}")
                )
            else:
                eps = 1e-9 * max(1.0, abs(bx) + bw, abs(by) + bh)
                for j, poly in enumerate(ann.segmentation):
                    xs, ys = poly[0::2], poly[1::2]
                    if any(x < bx - eps or x > bx + bw + eps for x in xs) or any(
                        y < by - eps or y > by + bh + eps for y in ys
                    ):
                        out.append(
                            Violation(
                                "bbox-excludes-vertex",
                                f"annotation {ann.id} bbox does not contain every vertex of polygon {j}",
                            )
                        )
                        break
        if ann.iscrowd != 0:
            out.append(Violation("bad-iscrowd", f"annotation {ann.id} iscrowd must be 0"))

    return out


def _valid_color(color: str) -> bool:
    return len(color) == 6 and all(c in _HEX_COLOR_DIGITS for c in color)


# ---------------------------------------------------------------------------
# Serialization


def _geo_json(geo: GeoMetadata) -> dict:
    return geo.to_json()


def _image_json(im: CocoImage) -> dict:
    doc: dict[str, Any] = {
        "id": im.id,
        "file_name": im.file_name,
        "width": im.width,
        "height": im.height,
        "source_url": im.source_url,
        "captured_at": im.captured_at,
        "annotator_id": im.annotator_id,
    }
    if im.geo is not None:
        doc["geo"] = _geo_json(im.geo)
    for key in sorted(im.extra):
        doc[key] = sort_map(im.extra[key])
    return doc


def _annotation_json(ann: CocoAnnotation) -> dict:
    doc: dict[str, Any] = {
        "id": ann.id,
        "image_id": ann.image_id,
        "category_id": ann.category_id,
        "segmentation": [list(poly) for poly in ann.segmentation],
        "area": ann.area,
        "bbox": list(ann.bbox),
        "iscrowd": ann.iscrowd,
        "attributes": sort_map(dict(ann.attributes)),
    }
    for key in sorted(ann.extra):
        doc[key] = sort_map(ann.extra[key])
    return doc


def _category_export_json(cat: CategoryDef) -> dict:
    return {"id": cat.id, "name": cat.name, "supercategory": cat.supercategory}


def serialize_dataset(ds: CocoDataset) -> bytes:
    """Canonical UTF-8 JSON bytes; raises ValidationError listing every violation."""
    errs = errors_only(validate_dataset(ds))
    if errs:
        raise ValidationError(errs)
    doc: dict[str, Any] = {
        "info": sort_map(dict(ds.info)),
        "licenses": [sort_map(entry) for entry in ds.licenses],
        "images": [_image_json(im) for im in ds.images],
        "annotations": [_annotation_json(ann) for ann in ds.annotations],
        "categories": [_category_export_json(cat) for cat in ds.categories],
    }
    for key in sorted(ds.extra):
        doc[key] = sort_map(ds.extra[key])
    return canonical_bytes(doc)


# ---------------------------------------------------------------------------
# Parsing


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{where} is missing required key {key!r}", key=key)
    return obj[key]


def _as_int(value: Any, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaError(f"{what} must be an integer, got {value!r}")
    return value


def _as_str(value: Any, what: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{what} must be a string, got {value!r}")
    return value


def _as_float(value: Any, what: str) -> float:
    if not _is_number(value):
        raise SchemaError(f"{what} must be a number, got {value!r}")
    return float(value)


_IMAGE_KEYS = {"id", "file_name", "width", "height", "source_url", "captured_at", "annotator_id", "geo"}
_ANN_KEYS = {"id", "image_id", "category_id", "segmentation", "area", "bbox", "iscrowd", "attributes"}
_CAT_KEYS = {"id", "name", "supercategory", "display_color", "shortcut_key"}
_TOP_KEYS = {"info", "licenses", "images", "annotations", "categories"}


def _parse_geo(data: Any, where: str) -> GeoMetadata:
    if not isinstance(data, dict):
        raise SchemaError(f"{where} geo must be an object")
    for key in ("latitude", "longitude", "heading", "pitch", "fov", "provider"):
        _require(data, key, f"{where} geo")
    return GeoMetadata(
        latitude=_as_float(data["latitude"], f"{where} geo latitude"),
        longitude=_as_float(data["longitude"], f"{where} geo longitude"),
        heading=_as_float(data["heading"], f"{where} geo heading"),
        pitch=_as_float(data["pitch"], f"{where} geo pitch"),
        fov=_as_float(data["fov"], f"{where} geo fov"),
        provider=_as_str(data["provider"], f"{where} geo provider"),
    )


def _parse_image(data: Any, index: int) -> CocoImage:
    where = f"images[{index}]"
    if not isinstance(data, dict):
        raise SchemaError(f"{where} must be an object")
    geo = _parse_geo(data["geo"], where) if data.get("geo") is not None else None
    return CocoImage(
        id=_as_int(_require(data, "id", where), f"{where} id"),
        file_name=_as_str(_require(data, "file_name", where), f"{where} file_name"),
        width=_as_int(_require(data, "width", where), f"{where} width"),
        height=_as_int(_require(data, "height", where), f"{where} height"),
        source_url=_as_str(data.get("source_url", ""), f"{where} source_url"),
        captured_at=_as_str(data.get("captured_at", ""), f"{where} captured_at"),
        annotator_id=_as_str(data.get("annotator_id", ""), f"{where} annotator_id"),
        geo=geo,
        extra={k: v for k, v in data.items() if k not in _IMAGE_KEYS},
    )


def _parse_annotation(data: Any, index: int) -> CocoAnnotation:
    where = f"annotations[{index}]"
    if not isinstance(data, dict):
        raise SchemaError(f"{where} must be an object")
    seg = _require(data, "segmentation", where)
    if not isinstance(seg, list) or not all(isinstance(poly, list) for poly in seg):
        raise SchemaError(f"{where} segmentation must be a list of number lists")
    polygons = []
    for j, poly in enumerate(seg):
        polygons.append(tuple(_as_float(v, f"{where} segmentation[{j}]") for v in poly))
    bbox = _require(data, "bbox", where)
    if not isinstance(bbox, list):
        raise SchemaError(f"{where} bbox must be a list")
    attributes = data.get("attributes", {})
    if not isinstance(attributes, dict):
        raise SchemaError(f"{where} attributes must be an object")
    for k, v in attributes.items():
        _as_str(v, f"{where} attributes[{k!r}]")
    return CocoAnnotation(
        id=_as_int(_require(data, "id", where), f"{where} id"),
        image_id=_as_int(_require(data, "image_id", where), f"{where} image_id"),
        category_id=_as_int(_require(data, "category_id", where), f"{where} category_id"),
        segmentation=tuple(polygons),
        area=_as_float(_require(data, "area", where), f"{where} area"),
        bbox=tuple(_as_float(v, f"{where} bbox") for v in bbox),
        iscrowd=_as_int(data.get("iscrowd", 0), f"{where} iscrowd"),
        attributes=dict(attributes),
        extra={k: v for k, v in data.items() if k not in _ANN_KEYS},
    )


def _parse_category(data: Any, index: int, with_ui_fields: bool) -> CategoryDef:
    where = f"categories[{index}]"
    if not isinstance(data, dict):
        raise SchemaError(f"{where} must be an object")
    shortcut = data.get("shortcut_key")
    if shortcut is not None:
        shortcut = _as_str(shortcut, f"{where} shortcut_key")
    return CategoryDef(
        id=_as_int(_require(data, "id", where), f"{where} id"),
        name=_as_str(_require(data, "name", where), f"{where} name"),
        supercategory=_as_str(data.get("supercategory", ""), f"{where} supercategory"),
        display_color=_as_str(data.get("display_color", ""), f"{where} display_color") if with_ui_fields else "",
        shortcut_key=shortcut if with_ui_fields else None,
    )


def parse_dataset(data: bytes | str) -> CocoDataset:
    """Parse canonical or foreign COCO JSON into the typed model.

    Raises DatasetParseError (malformed JSON, with byte offset),
    SchemaError (missing/ill-typed keys) or ValidationError (invariants).
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DatasetParseError(f"not UTF-8: {exc.reason}", exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise DatasetParseError(exc.msg, offset) from exc
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    for key in ("info", "licenses", "images", "annotations", "categories"):
        _require(doc, key, "dataset")
    info = doc["info"]
    if not isinstance(info, dict):
        raise SchemaError("info must be an object")
    if not isinstance(doc["licenses"], list):
        raise SchemaError("licenses must be a list")
    for key, expected in (("images", "images"), ("annotations", "annotations"), ("categories", "categories")):
        if not isinstance(doc[key], list):
            raise SchemaError(f"{expected} must be a list")

    ds = CocoDataset(
        info=dict(info),
        licenses=tuple(doc["licenses"]),
        images=tuple(_parse_image(im, i) for i, im in enumerate(doc["images"])),
        annotations=tuple(_parse_annotation(a, i) for i, a in enumerate(doc["annotations"])),
        categories=tuple(_parse_category(c, i, with_ui_fields=True) for i, c in enumerate(doc["categories"])),
        extra={k: v for k, v in doc.items() if k not in _TOP_KEYS},
    )
    errs = errors_only(validate_dataset(ds))
    if errs:
        raise ValidationError(errs)
    return ds


# ---------------------------------------------------------------------------
# Merge


def _ann_content_key(ann: CocoAnnotation, image_file: str, category_name: str):
    return (
        image_file,
        category_name,
        ann.segmentation,
        ann.area,
        ann.bbox,
        tuple(sorted(ann.attributes.items())),
    )


def merge_datasets(a: CocoDataset, b: CocoDataset) -> CocoDataset:
    """Union two valid datasets.

    Categories unify by name (conflicting supercategories are an error;
    UI fields keep the first dataset's values). Ids from the second
    dataset are renumbered past the first's maxima. Images with the same
    content-derived file_name collapse to one entry carrying annotations
    from both sides.
    """
    for ds in (a, b):
        errs = errors_only(validate_dataset(ds))
        if errs:
            raise ValidationError(errs)

    categories = list(a.categories)
    cat_by_name = {c.name: c for c in categories}
    next_cat_id = max((c.id for c in categories), default=0) + 1
    cat_id_map: dict[int, int] = {}
    for cat in b.categories:
        existing = cat_by_name.get(cat.name)
        if existing is not None:
            if existing.supercategory != cat.supercategory:
                raise MergeConflictError(
                    f"category {cat.name!r} has conflicting supercategories "
                    f"{existing.supercategory!r} vs {cat.supercategory!r}"
                )
            cat_id_map[cat.id] = existing.id
        else:
            renumbered = replace(cat, id=next_cat_id)
            categories.append(renumbered)
            cat_by_name[cat.name] = renumbered
            cat_id_map[cat.id] = next_cat_id
            next_cat_id += 1

    images = list(a.images)
    image_by_file = {im.file_name: im for im in images}
    next_image_id = max((im.id for im in images), default=0) + 1
    image_id_map: dict[int, int] = {}
    for im in b.images:
        existing = image_by_file.get(im.file_name)
        if existing is not None:
            image_id_map[im.id] = existing.id
        else:
            renumbered = replace(im, id=next_image_id)
            images.append(renumbered)
            image_by_file[im.file_name] = renumbered
            image_id_map[im.id] = next_image_id
            next_image_id += 1

    annotations = list(a.annotations)
    next_ann_id = max((ann.id for ann in annotations), default=0) + 1
    for ann in b.annotations:
        annotations.append(
            replace(
                ann,
                id=next_ann_id,
                image_id=image_id_map[ann.image_id],
                category_id=cat_id_map[ann.category_id],
            )
        )
        next_ann_id += 1

    merged = CocoDataset(
        info=dict(a.info) if a.info else dict(b.info),
        licenses=tuple(a.licenses) + tuple(l for l in b.licenses if l not in a.licenses),
        images=tuple(images),
        annotations=tuple(annotations),
        categories=tuple(categories),
        extra={**dict(b.extra), **dict(a.extra)},
    )
    errs = errors_only(validate_dataset(merged))
    if errs:
        raise ValidationError(errs)
    return merged


# ---------------------------------------------------------------------------
# Category configuration file


def category_config_json(cat: CategoryDef) -> dict:
    doc: dict[str, Any] = {
        "id": cat.id,
        "name": cat.name,
        "supercategory": cat.supercategory,
        "display_color": cat.display_color,
    }
    if cat.shortcut_key is not None:
        doc["shortcut_key"] = cat.shortcut_key
    return doc


def serialize_categories(categories: Sequence[CategoryDef]) -> bytes:
    return canonical_bytes([category_config_json(c) for c in categories])


def load_categories(data: bytes | str) -> tuple[CategoryDef, ...]:
    """Parse the category config (the single source of category truth).

    Stricter than dataset parsing: UI fields are mandatory here, and any
    invariant break is a hard configuration error.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"category config is not valid JSON: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise ConfigError("category config must be a JSON list")
    try:
        categories = tuple(_parse_category(entry, i, with_ui_fields=True) for i, entry in enumerate(doc))
    except SchemaError as exc:
        raise ConfigError(str(exc)) from exc

    probe = CocoDataset(categories=categories)
    problems = [v for v in validate_dataset(probe) if v.severity == "error"]
    for cat in categories:
        if not cat.display_color:
            problems.append(
                Violation("bad-category-color", f"category {cat.name!r} needs a 6-hex-digit display_color")
            )
    if problems:
        raise ConfigError("; ".join(v.message for v in problems))
    return categories
