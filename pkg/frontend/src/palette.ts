// The category palette: one swatch per configured category, in config
// order, each in its configured display color. Digits 1..9 select
// categories in that same order, so the palette is also the keymap.

import type { CategoryDef } from "./types.js";

export class Palette {
  private readonly root: HTMLElement;
  private readonly onSelect: (categoryName: string) => void;
  private categories: CategoryDef[] = [];
  private activeName: string | null = null;

  constructor(root: HTMLElement, onSelect: (categoryName: string) => void) {
    this.root = root;
    this.onSelect = onSelect;
    this.root.classList.add("anno-palette");
  }

  render(categories: CategoryDef[], options: { stale?: boolean } = {}): void {
    this.categories = categories;
    this.root.textContent = "";

    for (const [index, category] of categories.entries()) {
      const button = this.root.ownerDocument.createElement("button");
      button.className = "anno-cat";
      button.dataset.category = category.name;

      const swatch = this.root.ownerDocument.createElement("span");
      swatch.className = "anno-swatch";
      swatch.style.backgroundColor = `#${category.display_color}`;
      button.appendChild(swatch);

      const label = this.root.ownerDocument.createElement("span");
      label.className = "anno-label";
      label.textContent = category.name;
      button.appendChild(label);

      if (index < 9) {
        const key = this.root.ownerDocument.createElement("kbd");
        key.className = "anno-key";
        key.textContent = String(index + 1);
        button.appendChild(key);
      }

      button.addEventListener("click", () => this.select(category.name));
      this.root.appendChild(button);
    }

    if (options.stale) {
      const badge = this.root.ownerDocument.createElement("span");
      badge.className = "anno-stale";
      badge.textContent = "offline list";
      badge.title = "category server unreachable, showing the last known list";
      this.root.appendChild(badge);
    }

    const first = categories[0];
    if (first !== undefined && (this.activeName === null || !categories.some((c) => c.name === this.activeName))) {
      this.select(first.name);
    } else if (this.activeName !== null) {
      this.highlight(this.activeName);
    }
  }

  /** The category a digit key addresses, by config order; null otherwise. */
  categoryForKey(key: string): string | null {
    if (!/^[1-9]$/.test(key)) {
      return null;
    }
    const category = this.categories[Number(key) - 1];
    return category === undefined ? null : category.name;
  }

  /** Returns true when the key selected a category (unknown keys no-op). */
  handleKey(key: string): boolean {
    const name = this.categoryForKey(key);
    if (name === null) {
      return false;
    }
    this.select(name);
    return true;
  }

  get active(): string | null {
    return this.activeName;
  }

  select(categoryName: string): void {
    this.activeName = categoryName;
    this.highlight(categoryName);
    this.onSelect(categoryName);
  }

  private highlight(categoryName: string): void {
    for (const button of Array.from(this.root.querySelectorAll<HTMLButtonElement>(".anno-cat"))) {
      button.classList.toggle("anno-active", button.dataset.category === categoryName);
    }
  }
}
