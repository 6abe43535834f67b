// Full-page drawing surface shown over the captured tab. The SVG layer
// uses a viewBox in image pixels, so polygons stored at device resolution
// render back onto the exact client positions they were clicked at.

import type { CategoryDef } from "./types.js";
import type { Shortcuts } from "./settings.js";
import type { DraftSession } from "./session.js";
import { Palette } from "./palette.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface OverlayCallbacks {
  onSubmit: () => void;
  onCancel: () => void;
}

export class Overlay {
  readonly session: DraftSession;
  readonly palette: Palette;

  private readonly doc: Document;
  private readonly shortcuts: Shortcuts;
  private readonly callbacks: OverlayCallbacks;
  private readonly colorByName = new Map<string, string>();
  private readonly keydownHandler = (event: KeyboardEvent) => this.handleKeydown(event);

  private root: HTMLElement;
  private svg: SVGSVGElement;
  private statusLine: HTMLElement;
  private submitButton: HTMLButtonElement;
  private busy = false;
  private mounted = false;

  constructor(
    doc: Document,
    session: DraftSession,
    categories: CategoryDef[],
    shortcuts: Shortcuts,
    callbacks: OverlayCallbacks,
    options: { staleCategories?: boolean } = {}
  ) {
    this.doc = doc;
    this.session = session;
    this.shortcuts = shortcuts;
    this.callbacks = callbacks;
    for (const category of categories) {
      this.colorByName.set(category.name, `#${category.display_color}`);
    }

    this.root = doc.createElement("div");
    this.root.className = "anno-overlay";
    this.root.style.cssText = "position:fixed;inset:0;z-index:2147483646;background:#111;";

    const capture = doc.createElement("img");
    capture.className = "anno-capture";
    capture.src = session.imageDataUrl;
    capture.style.cssText = "position:absolute;inset:0;width:100%;height:100%;";
    capture.draggable = false;
    this.root.appendChild(capture);

    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("class", "anno-draw");
    this.svg.setAttribute("viewBox", `0 0 ${session.imageWidth} ${session.imageHeight}`);
    this.svg.setAttribute("preserveAspectRatio", "none");
    this.svg.setAttribute("style", "position:absolute;inset:0;width:100%;height:100%;cursor:crosshair;");
    this.svg.addEventListener("click", (event) => this.handleClick(event as MouseEvent));
    this.svg.addEventListener("dblclick", (event) => this.handleDoubleClick(event as MouseEvent));
    this.root.appendChild(this.svg);

    const toolbar = doc.createElement("div");
    toolbar.className = "anno-toolbar";
    toolbar.style.cssText =
      "position:absolute;left:0;right:0;bottom:0;display:flex;align-items:center;gap:8px;" +
      "padding:8px;background:rgba(20,20,20,0.92);color:#eee;font:13px sans-serif;";

    // the status line must exist before the palette renders: rendering
    // auto-selects the first category, which reports through setStatus
    this.statusLine = doc.createElement("div");
    this.statusLine.className = "anno-status";
    this.statusLine.style.cssText = "flex:1;min-width:0;";

    const paletteHost = doc.createElement("div");
    this.palette = new Palette(paletteHost, (name) => {
      this.session.setActiveCategory(name);
      this.setStatus(`category: ${name}`);
    });
    this.palette.render(categories, { stale: options.staleCategories });
    toolbar.appendChild(paletteHost);
    toolbar.appendChild(this.statusLine);

    this.submitButton = doc.createElement("button");
    this.submitButton.className = "anno-submit";
    this.submitButton.textContent = "Submit";
    this.submitButton.title = `submit all drafts (${shortcuts.submit})`;
    this.submitButton.addEventListener("click", () => this.requestSubmit());
    toolbar.appendChild(this.submitButton);

    const cancelButton = doc.createElement("button");
    cancelButton.className = "anno-cancel";
    cancelButton.textContent = "Cancel";
    cancelButton.title = `discard the session (${shortcuts.cancel})`;
    cancelButton.addEventListener("click", () => this.callbacks.onCancel());
    toolbar.appendChild(cancelButton);

    this.root.appendChild(toolbar);
    this.setStatus(`click to add vertices, ${shortcuts.close} or double-click to close a polygon`);
  }

  mount(): void {
    if (this.mounted) {
      return;
    }
    this.doc.body.appendChild(this.root);
    this.doc.addEventListener("keydown", this.keydownHandler, true);
    this.mounted = true;
    this.redraw();
  }

  unmount(): void {
    if (!this.mounted) {
      return;
    }
    this.doc.removeEventListener("keydown", this.keydownHandler, true);
    this.root.remove();
    this.mounted = false;
  }

  get isMounted(): boolean {
    return this.mounted;
  }

  setStatus(text: string, isError = false): void {
    this.statusLine.textContent = text;
    this.statusLine.style.color = isError ? "#ff8a80" : "#eee";
  }

  /** While busy (a submit is in flight) the submit paths are inert. */
  setBusy(busy: boolean): void {
    this.busy = busy;
    this.submitButton.disabled = busy;
  }

  handleClick(event: MouseEvent): void {
    if (this.busy) {
      return;
    }
    this.session.addVertex(event.clientX, event.clientY);
    this.redraw();
  }

  handleDoubleClick(event: MouseEvent): void {
    if (this.busy) {
      return;
    }
    event.preventDefault();
    // The double-click already delivered two click events at the same
    // spot; drop the echo vertex before closing.
    const open = this.session.openVertices;
    const last = open[open.length - 1];
    const prev = open[open.length - 2];
    if (last !== undefined && prev !== undefined && last[0] === prev[0] && last[1] === prev[1]) {
      this.session.removeLastVertex();
    }
    this.tryClose();
  }

  handleKeydown(event: KeyboardEvent): void {
    const key = event.key;
    if (key === this.shortcuts.cancel) {
      event.preventDefault();
      event.stopPropagation();
      this.callbacks.onCancel();
      return;
    }
    if (this.palette.handleKey(key)) {
      event.preventDefault();
      event.stopPropagation();
      return;
    }
    if (key === "Backspace") {
      event.preventDefault();
      event.stopPropagation();
      if (this.session.removeLastVertex()) {
        this.redraw();
      }
      return;
    }
    if (key === this.shortcuts.close) {
      event.preventDefault();
      event.stopPropagation();
      this.tryClose();
      return;
    }
    if (key.toLowerCase() === this.shortcuts.submit.toLowerCase() && key.length === 1) {
      event.preventDefault();
      event.stopPropagation();
      this.requestSubmit();
    }
  }

  tryClose(): void {
    const result = this.session.closePolygon();
    if (result.ok) {
      this.setStatus(`closed ${result.draft.vertices.length}-vertex ${result.draft.categoryName}`);
    } else {
      this.setStatus(result.reason, true);
    }
    this.redraw();
  }

  private requestSubmit(): void {
    if (this.busy) {
      return;
    }
    this.callbacks.onSubmit();
  }

  redraw(): void {
    while (this.svg.firstChild !== null) {
      this.svg.removeChild(this.svg.firstChild);
    }

    for (const draft of this.session.drafts) {
      const color = this.colorByName.get(draft.categoryName) ?? "#00e676";
      const polygon = this.doc.createElementNS(SVG_NS, "polygon");
      polygon.setAttribute("points", draft.vertices.map(([x, y]) => `${x},${y}`).join(" "));
      polygon.setAttribute("fill", color);
      polygon.setAttribute("fill-opacity", "0.25");
      polygon.setAttribute("stroke", color);
      polygon.setAttribute("stroke-width", String(2 * this.session.devicePixelRatio));
      this.svg.appendChild(polygon);
    }

    const open = this.session.openVertices;
    if (open.length > 0) {
      const color = this.colorByName.get(this.session.openCategory ?? "") ?? "#00e676";
      const line = this.doc.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", open.map(([x, y]) => `${x},${y}`).join(" "));
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", color);
      line.setAttribute("stroke-width", String(2 * this.session.devicePixelRatio));
      line.setAttribute("stroke-dasharray", "6 4");
      this.svg.appendChild(line);
      for (const [x, y] of open) {
        const dot = this.doc.createElementNS(SVG_NS, "circle");
        dot.setAttribute("cx", String(x));
        dot.setAttribute("cy", String(y));
        dot.setAttribute("r", String(3 * this.session.devicePixelRatio));
        dot.setAttribute("fill", color);
        this.svg.appendChild(dot);
      }
    }
  }
}
