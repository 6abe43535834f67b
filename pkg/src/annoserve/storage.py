"""Durable append-only persistence: content-addressed blobs plus NDJSON logs.

Layout under the data directory:

    blobs/<first-2-hex>/<sha256>.png    image bytes exactly as received
    submissions.ndjson                  one canonical-JSON record per line
    qc.ndjson                           one canonical-JSON QC event per line

Log lines are only ever appended. Replay is deterministic; a partial
trailing line (torn write) is dropped with a warning, anything corrupt
before that is a fatal integrity error. All writes go through one
in-process lock; readers receive an immutable state snapshot that is
swapped atomically after each append.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from PIL import Image, UnidentifiedImageError

from .canonical import canonical_bytes, parse_rfc3339, rfc3339_now, sort_map
from .errors import ConfigError, IntegrityError, InvalidImageError, NotFoundError
from .geometry import Polygon
from .urlmeta import GeoMetadata

log = logging.getLogger(__name__)

SUBMISSIONS_LOG = "submissions.ndjson"
QC_LOG = "qc.ndjson"
BLOBS_DIR = "blobs"


class Verdict(str, Enum):
    APPROVED = "approved"
    DISQUALIFIED = "disqualified"


@dataclass(frozen=True)
class AnnotationDraft:
    """One drawn polygon with its category and free-text attributes."""

    category_name: str
    polygon: Polygon
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.polygon.vertices) < 3:
            raise ValueError("draft polygon needs at least 3 vertices")
        object.__setattr__(self, "attributes", dict(self.attributes))

    def to_json(self) -> dict:
        return {
            "category_name": self.category_name,
            "polygon": self.polygon.to_pairs(),
            "attributes": sort_map(dict(self.attributes)),
        }

    @classmethod
    def from_json(cls, data: dict) -> "AnnotationDraft":
        return cls(
            category_name=str(data["category_name"]),
            polygon=Polygon.from_pairs(data["polygon"]),
            attributes={str(k): str(v) for k, v in data.get("attributes", {}).items()},
        )


def compute_submission_id(
    annotator_id: str, captured_at: str, image_ref: str, drafts: Sequence[AnnotationDraft]
) -> str:
    """Content hash identifying a submission; retries hash to the same id."""
    payload = canonical_bytes(
        [annotator_id, captured_at, image_ref, [d.to_json() for d in drafts]]
    )
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class SubmissionRecord:
    submission_id: str
    annotator_id: str
    captured_at: str
    page_url: str
    image_ref: str
    image_width: int
    image_height: int
    drafts: tuple[AnnotationDraft, ...]
    received_at: str
    geo: Optional[GeoMetadata] = None

    def __post_init__(self):
        object.__setattr__(self, "drafts", tuple(self.drafts))
        if not self.drafts:
            raise ValueError("submission must carry at least one draft")
        if not self.annotator_id:
            raise ValueError("annotator_id must be non-empty")
        parse_rfc3339(self.captured_at)
        parse_rfc3339(self.received_at)

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "submission_id": self.submission_id,
            "annotator_id": self.annotator_id,
            "captured_at": self.captured_at,
            "page_url": self.page_url,
            "image_ref": self.image_ref,
            "image_width": self.image_width,
            "image_height": self.image_height,
        }
        if self.geo is not None:
            doc["geo"] = self.geo.to_json()
        doc["drafts"] = [d.to_json() for d in self.drafts]
        doc["received_at"] = self.received_at
        return doc

    @classmethod
    def from_json(cls, data: dict) -> "SubmissionRecord":
        return cls(
            submission_id=str(data["submission_id"]),
            annotator_id=str(data["annotator_id"]),
            captured_at=str(data["captured_at"]),
            page_url=str(data["page_url"]),
            image_ref=str(data["image_ref"]),
            image_width=int(data["image_width"]),
            image_height=int(data["image_height"]),
            drafts=tuple(AnnotationDraft.from_json(d) for d in data["drafts"]),
            received_at=str(data["received_at"]),
            geo=GeoMetadata.from_json(data["geo"]) if data.get("geo") is not None else None,
        )


def make_submission(
    *,
    annotator_id: str,
    captured_at: str,
    page_url: str,
    image_ref: str,
    image_width: int,
    image_height: int,
    drafts: Sequence[AnnotationDraft],
    geo: Optional[GeoMetadata] = None,
    received_at: Optional[str] = None,
) -> SubmissionRecord:
    """Build a record with its content-derived submission id filled in."""
    drafts = tuple(drafts)
    return SubmissionRecord(
        submission_id=compute_submission_id(annotator_id, captured_at, image_ref, drafts),
        annotator_id=annotator_id,
        captured_at=captured_at,
        page_url=page_url,
        image_ref=image_ref,
        image_width=image_width,
        image_height=image_height,
        drafts=drafts,
        received_at=received_at if received_at is not None else rfc3339_now(),
        geo=geo,
    )


@dataclass(frozen=True)
class QcEvent:
    image_ref: str
    verdict: Verdict
    reviewer: str
    at: str
    reason: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "verdict", Verdict(self.verdict))
        if self.verdict is Verdict.DISQUALIFIED and not self.reason:
            raise ValueError("disqualification requires a reason")
        parse_rfc3339(self.at)

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"image_ref": self.image_ref, "verdict": self.verdict.value}
        if self.reason is not None:
            doc["reason"] = self.reason
        doc["reviewer"] = self.reviewer
        doc["at"] = self.at
        return doc

    @classmethod
    def from_json(cls, data: dict) -> "QcEvent":
        return cls(
            image_ref=str(data["image_ref"]),
            verdict=Verdict(data["verdict"]),
            reviewer=str(data["reviewer"]),
            at=str(data["at"]),
            reason=str(data["reason"]) if data.get("reason") is not None else None,
        )


@dataclass(frozen=True)
class Receipt:
    submission_id: str
    duplicate: bool


@dataclass(frozen=True)
class _VerdictEntry:
    at: datetime
    seq: int
    event: QcEvent


@dataclass(frozen=True)
class StoreState:
    """Immutable snapshot of everything replayed from disk."""

    submissions: tuple[SubmissionRecord, ...] = ()
    submission_ids: frozenset[str] = frozenset()
    by_image: Mapping[str, tuple[SubmissionRecord, ...]] = field(default_factory=dict)
    qc_events: tuple[QcEvent, ...] = ()
    _verdicts: Mapping[str, _VerdictEntry] = field(default_factory=dict)

    def effective_qc(self, image_ref: str) -> Optional[QcEvent]:
        entry = self._verdicts.get(image_ref)
        return entry.event if entry is not None else None

    def effective_verdict(self, image_ref: str) -> Optional[Verdict]:
        event = self.effective_qc(image_ref)
        return event.verdict if event is not None else None

    def image_refs(self) -> tuple[str, ...]:
        return tuple(self.by_image.keys())

    def with_submission(self, rec: SubmissionRecord) -> "StoreState":
        by_image = dict(self.by_image)
        by_image[rec.image_ref] = by_image.get(rec.image_ref, ()) + (rec,)
        return StoreState(
            submissions=self.submissions + (rec,),
            submission_ids=self.submission_ids | {rec.submission_id},
            by_image=by_image,
            qc_events=self.qc_events,
            _verdicts=self._verdicts,
        )

    def with_qc(self, ev: QcEvent) -> "StoreState":
        verdicts = dict(self._verdicts)
        _apply_qc(verdicts, ev, seq=len(self.qc_events))
        return StoreState(
            submissions=self.submissions,
            submission_ids=self.submission_ids,
            by_image=self.by_image,
            qc_events=self.qc_events + (ev,),
            _verdicts=verdicts,
        )


def _apply_qc(verdicts: dict[str, _VerdictEntry], ev: QcEvent, seq: int) -> None:
    """Last write wins by timestamp; ledger order breaks ties."""
    entry = _VerdictEntry(at=parse_rfc3339(ev.at), seq=seq, event=ev)
    current = verdicts.get(ev.image_ref)
    if current is None or (entry.at, entry.seq) >= (current.at, current.seq):
        verdicts[ev.image_ref] = entry


def blob_relpath(image_ref: str) -> Path:
    return Path(BLOBS_DIR) / image_ref[:2] / f"{image_ref}.png"


def png_dimensions(data: bytes) -> tuple[int, int]:
    """Width and height of a PNG byte string; rejects anything else."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format != "PNG":
                raise InvalidImageError(f"expected PNG, got {im.format or 'unknown format'}")
            width, height = im.size
            im.verify()
    except InvalidImageError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise InvalidImageError(f"not a decodable PNG: {exc}") from exc
    if width < 1 or height < 1:
        raise InvalidImageError(f"PNG has non-positive dimensions {width}x{height}")
    return width, height


def _read_log(path: Path, repair: bool) -> list[tuple[int, bytes]]:
    """Complete LF-terminated lines of a log, numbered from 1.

    A torn trailing line (no final LF) is dropped with a warning; with
    repair the file is also truncated back to the last complete line so
    future appends start on a clean boundary.
    """
    if not path.exists():
        return []
    data = path.read_bytes()
    if not data:
        return []
    parts = data.split(b"\n")
    tail = parts[-1]
    if tail != b"":
        log.warning("%s ends with a partial line (%d bytes); dropping it", path, len(tail))
        if repair:
            os.truncate(path, len(data) - len(tail))
    return list(enumerate(parts[:-1], start=1))


class Store:
    """Single-writer store over one data directory.

    Appends are serialized through an in-process lock and become visible
    by swapping an immutable ``StoreState``; readers never block writers.
    """

    def __init__(self, data_dir: Path, state: StoreState, writable: bool):
        self.data_dir = Path(data_dir)
        self._state = state
        self._lock = threading.Lock()
        self._writable = writable
        self._sub_file = None
        self._qc_file = None
        if writable:
            self._sub_file = open(self.data_dir / SUBMISSIONS_LOG, "ab")
            self._qc_file = open(self.data_dir / QC_LOG, "ab")

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def open(cls, data_dir: str | Path, writable: bool = True) -> "Store":
        """Replay the directory into memory; raises IntegrityError on corruption."""
        data_dir = Path(data_dir)
        if not data_dir.is_dir():
            raise ConfigError(f"data directory does not exist: {data_dir}")
        (data_dir / BLOBS_DIR).mkdir(exist_ok=True)
        state = cls._replay(data_dir, repair=writable)
        return cls(data_dir, state, writable)

    def close(self) -> None:
        for handle in (self._sub_file, self._qc_file):
            if handle is not None:
                handle.close()
        self._sub_file = self._qc_file = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- replay -------------------------------------------------------------

    @classmethod
    def _replay(cls, data_dir: Path, repair: bool) -> StoreState:
        submissions: list[SubmissionRecord] = []
        seen: set[str] = set()
        by_image: dict[str, tuple[SubmissionRecord, ...]] = {}
        qc_events: list[QcEvent] = []
        verdicts: dict[str, _VerdictEntry] = {}

        sub_path = data_dir / SUBMISSIONS_LOG
        for n, line in _read_log(sub_path, repair):
            try:
                rec = SubmissionRecord.from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise IntegrityError(f"{sub_path}:{n}: corrupt submission line: {exc}") from exc
            expected = compute_submission_id(
                rec.annotator_id, rec.captured_at, rec.image_ref, rec.drafts
            )
            if rec.submission_id != expected:
                raise IntegrityError(
                    f"{sub_path}:{n}: submission id {rec.submission_id} does not match content"
                )
            if not (data_dir / blob_relpath(rec.image_ref)).exists():
                raise IntegrityError(
                    f"{sub_path}:{n}: submission references missing blob {rec.image_ref}"
                )
            if rec.submission_id in seen:
                log.warning("%s:%d: duplicate submission %s ignored", sub_path, n, rec.submission_id)
                continue
            seen.add(rec.submission_id)
            submissions.append(rec)
            by_image[rec.image_ref] = by_image.get(rec.image_ref, ()) + (rec,)

        qc_path = data_dir / QC_LOG
        for n, line in _read_log(qc_path, repair):
            try:
                event = QcEvent.from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise IntegrityError(f"{qc_path}:{n}: corrupt QC line: {exc}") from exc
            if event.image_ref not in by_image:
                # A QC append always follows its submission in time, but the
                # two logs are separate files; after a crash the QC log may
                # have outlived the submission line. Skip, don't fail.
                log.warning("%s:%d: QC event for unknown image %s ignored", qc_path, n, event.image_ref)
                continue
            _apply_qc(verdicts, event, seq=len(qc_events))
            qc_events.append(event)

        return StoreState(
            submissions=tuple(submissions),
            submission_ids=frozenset(seen),
            by_image=by_image,
            qc_events=tuple(qc_events),
            _verdicts=verdicts,
        )

    # -- reads --------------------------------------------------------------

    @property
    def state(self) -> StoreState:
        return self._state

    def blob_path(self, image_ref: str) -> Path:
        return self.data_dir / blob_relpath(image_ref)

    def has_blob(self, image_ref: str) -> bool:
        return self.blob_path(image_ref).exists()

    def get_blob(self, image_ref: str) -> bytes:
        path = self.blob_path(image_ref)
        if not path.exists():
            raise NotFoundError(f"no blob stored under {image_ref}")
        return path.read_bytes()

    # -- writes -------------------------------------------------------------

    def _require_writable(self) -> None:
        if not self._writable or self._sub_file is None:
            raise RuntimeError("store opened read-only")

    def put_blob(self, data: bytes) -> str:
        """Store PNG bytes under their SHA-256; idempotent for equal bytes."""
        self._require_writable()
        png_dimensions(data)
        digest = hashlib.sha256(data).hexdigest()
        path = self.blob_path(digest)
        if path.exists():
            return digest
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return digest

    def append_submission(self, rec: SubmissionRecord) -> Receipt:
        """Append one record; identical resubmission is a no-op duplicate."""
        self._require_writable()
        expected = compute_submission_id(rec.annotator_id, rec.captured_at, rec.image_ref, rec.drafts)
        if rec.submission_id != expected:
            raise IntegrityError(f"submission id {rec.submission_id} does not match content")
        if not self.has_blob(rec.image_ref):
            raise IntegrityError(f"submission references missing blob {rec.image_ref}")
        with self._lock:
            if rec.submission_id in self._state.submission_ids:
                return Receipt(rec.submission_id, duplicate=True)
            self._sub_file.write(canonical_bytes(rec.to_json()) + b"\n")
            self._sub_file.flush()
            self._state = self._state.with_submission(rec)
            return Receipt(rec.submission_id, duplicate=False)

    def append_qc(self, ev: QcEvent) -> Verdict:
        """Append a QC event and return the image's new effective verdict."""
        self._require_writable()
        with self._lock:
            if ev.image_ref not in self._state.by_image:
                raise NotFoundError(f"no submission stores image {ev.image_ref}")
            self._qc_file.write(canonical_bytes(ev.to_json()) + b"\n")
            self._qc_file.flush()
            self._state = self._state.with_qc(ev)
            return self._state.effective_verdict(ev.image_ref)
