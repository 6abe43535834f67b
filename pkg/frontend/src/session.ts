// One annotation session: the frozen viewport capture plus every polygon
// drawn over it. Click coordinates arrive in CSS pixels and are stored in
// captured-image pixel space (multiplied by the device pixel ratio), which
// is the space the server validates against.

import type { DraftAnnotation } from "./types.js";

export interface CompletedDraft {
  categoryName: string;
  /** [x, y] pairs in captured-image pixels. */
  vertices: [number, number][];
  attributes: Record<string, string>;
}

export interface SessionInit {
  imageDataUrl: string;
  pageUrl: string;
  capturedAt: string;
  /** CSS pixel size of the viewport at capture time. */
  viewportWidth: number;
  viewportHeight: number;
  devicePixelRatio: number;
  activeCategory: string;
}

export type CloseResult = { ok: true; draft: CompletedDraft } | { ok: false; reason: string };

export class DraftSession {
  readonly imageDataUrl: string;
  readonly pageUrl: string;
  readonly capturedAt: string;
  readonly viewportWidth: number;
  readonly viewportHeight: number;
  readonly devicePixelRatio: number;

  private activeCategoryName: string;
  // the open polygon keeps the category it was started under; switching
  // categories mid-drawing only affects the next polygon
  private open: { categoryName: string; vertices: [number, number][] } | null = null;
  private completed: CompletedDraft[] = [];

  constructor(init: SessionInit) {
    if (init.activeCategory === "") {
      throw new Error("a session needs an active category");
    }
    this.imageDataUrl = init.imageDataUrl;
    this.pageUrl = init.pageUrl;
    this.capturedAt = init.capturedAt;
    this.viewportWidth = init.viewportWidth;
    this.viewportHeight = init.viewportHeight;
    this.devicePixelRatio = init.devicePixelRatio;
    this.activeCategoryName = init.activeCategory;
  }

  /** Captured-image width in physical pixels, as the server computes it. */
  get imageWidth(): number {
    return Math.round(this.viewportWidth * this.devicePixelRatio);
  }

  get imageHeight(): number {
    return Math.round(this.viewportHeight * this.devicePixelRatio);
  }

  get activeCategory(): string {
    return this.activeCategoryName;
  }

  setActiveCategory(name: string): void {
    this.activeCategoryName = name;
  }

  get drafts(): readonly CompletedDraft[] {
    return this.completed;
  }

  get openVertices(): readonly [number, number][] {
    return this.open ? this.open.vertices : [];
  }

  get openCategory(): string | null {
    return this.open ? this.open.categoryName : null;
  }

  /** Add a vertex from a click at CSS position (clientX, clientY). */
  addVertex(clientX: number, clientY: number): [number, number] {
    const x = clamp(clientX * this.devicePixelRatio, 0, this.imageWidth);
    const y = clamp(clientY * this.devicePixelRatio, 0, this.imageHeight);
    if (this.open === null) {
      this.open = { categoryName: this.activeCategoryName, vertices: [] };
    }
    this.open.vertices.push([x, y]);
    return [x, y];
  }

  /** Backspace: drop the most recent vertex; false when there is none. */
  removeLastVertex(): boolean {
    if (this.open === null || this.open.vertices.length === 0) {
      return false;
    }
    this.open.vertices.pop();
    if (this.open.vertices.length === 0) {
      this.open = null;
    }
    return true;
  }

  /** Enter or double-click: commit the open polygon as a draft. */
  closePolygon(): CloseResult {
    if (this.open === null) {
      return { ok: false, reason: "no polygon in progress" };
    }
    if (this.open.vertices.length < 3) {
      // stays open so the annotator can keep clicking
      return { ok: false, reason: `a polygon needs at least 3 vertices, this one has ${this.open.vertices.length}` };
    }
    const draft: CompletedDraft = {
      categoryName: this.open.categoryName,
      vertices: this.open.vertices,
      attributes: {},
    };
    this.completed.push(draft);
    this.open = null;
    return { ok: true, draft };
  }

  setAttributes(draftIndex: number, attributes: Record<string, string>): void {
    const draft = this.completed[draftIndex];
    if (draft === undefined) {
      throw new Error(`no draft at index ${draftIndex}`);
    }
    draft.attributes = { ...attributes };
  }

  /** True when closing the overlay would lose work. */
  get hasUncommittedWork(): boolean {
    return this.completed.length > 0 || this.open !== null;
  }

  toAnnotations(): DraftAnnotation[] {
    return this.completed.map((draft) => ({
      category_name: draft.categoryName,
      polygon: draft.vertices.map(([x, y]) => [x, y] as [number, number]),
      attributes: { ...draft.attributes },
    }));
  }
}

function clamp(value: number, low: number, high: number): number {
  return Math.min(Math.max(value, low), high);
}
