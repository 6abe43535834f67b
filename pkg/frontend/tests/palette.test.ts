// @vitest-environment happy-dom

// Release-gate coverage for the palette: it must show exactly the
// configured categories, in config order, in their configured colors, and
// digit keys must select them in that same order.

import { describe, expect, it } from "vitest";
import { Palette } from "../src/palette.js";
import { THREE_CATEGORIES } from "./helpers.js";

function hexToRgbString(hex: string): string {
  const r = parseInt(hex.slice(0, 2), 16);
  const g = parseInt(hex.slice(2, 4), 16);
  const b = parseInt(hex.slice(4, 6), 16);
  return `rgb(${r}, ${g}, ${b})`;
}

function setup() {
  const selected: string[] = [];
  const root = document.createElement("div");
  document.body.appendChild(root);
  const palette = new Palette(root, (name) => selected.push(name));
  return { root, palette, selected };
}

describe("Palette", () => {
  it("shows exactly the configured categories, in config order", () => {
    const { root, palette } = setup();
    palette.render(THREE_CATEGORIES);
    const labels = Array.from(root.querySelectorAll(".anno-cat .anno-label")).map((el) => el.textContent);
    expect(labels).toEqual(["directed", "round", "dome"]);
    // nothing invented: no extra buttons beyond the configured list
    expect(root.querySelectorAll(".anno-cat")).toHaveLength(THREE_CATEGORIES.length);
  });

  it("paints each swatch in the configured display color", () => {
    const { root, palette } = setup();
    palette.render(THREE_CATEGORIES);
    const swatches = Array.from(root.querySelectorAll<HTMLElement>(".anno-cat .anno-swatch"));
    expect(swatches).toHaveLength(3);
    for (const [i, category] of THREE_CATEGORIES.entries()) {
      const got = swatches[i]?.style.backgroundColor.toLowerCase() ?? "";
      // style engines may echo the hex back or normalize to rgb()
      expect([`#${category.display_color}`, hexToRgbString(category.display_color)]).toContain(got);
    }
  });

  it("selects the first category automatically", () => {
    const { palette, selected } = setup();
    palette.render(THREE_CATEGORIES);
    expect(selected).toEqual(["directed"]);
    expect(palette.active).toBe("directed");
  });

  it("maps digit keys to categories in config order", () => {
    const { palette, selected } = setup();
    palette.render(THREE_CATEGORIES);
    expect(palette.handleKey("2")).toBe(true);
    expect(palette.active).toBe("round");
    expect(palette.handleKey("3")).toBe(true);
    expect(palette.active).toBe("dome");
    expect(palette.handleKey("1")).toBe(true);
    expect(palette.active).toBe("directed");
    expect(selected).toEqual(["directed", "round", "dome", "directed"]);
  });

  it("ignores digits past the end of the list and non-digits", () => {
    const { palette } = setup();
    palette.render(THREE_CATEGORIES);
    palette.handleKey("2");
    expect(palette.handleKey("4")).toBe(false);
    expect(palette.handleKey("0")).toBe(false);
    expect(palette.handleKey("s")).toBe(false);
    expect(palette.active).toBe("round");
  });

  it("shows digit hints only for the first nine categories", () => {
    const { root, palette } = setup();
    const many = Array.from({ length: 11 }, (_, i) => ({
      id: i + 1,
      name: `cat-${i + 1}`,
      supercategory: "test",
      display_color: "112233",
    }));
    palette.render(many);
    const keys = Array.from(root.querySelectorAll(".anno-key")).map((el) => el.textContent);
    expect(keys).toEqual(["1", "2", "3", "4", "5", "6", "7", "8", "9"]);
    expect(palette.categoryForKey("9")).toBe("cat-9");
  });

  it("selects on click and moves the highlight", () => {
    const { root, palette, selected } = setup();
    palette.render(THREE_CATEGORIES);
    const buttons = Array.from(root.querySelectorAll<HTMLButtonElement>(".anno-cat"));
    buttons[1]?.click();
    expect(palette.active).toBe("round");
    expect(selected[selected.length - 1]).toBe("round");
    expect(buttons[1]?.classList.contains("anno-active")).toBe(true);
    expect(buttons[0]?.classList.contains("anno-active")).toBe(false);
  });

  it("marks the list stale only when asked to", () => {
    const { root, palette } = setup();
    palette.render(THREE_CATEGORIES, { stale: true });
    expect(root.querySelector(".anno-stale")).not.toBeNull();
    palette.render(THREE_CATEGORIES);
    expect(root.querySelector(".anno-stale")).toBeNull();
  });
});
