// Shared test fixtures: a minimal PNG encoder (so tests do not depend on a
// canvas), an in-memory chrome.storage stand-in, and a category list in
// the exact shape the server serves.

import { deflateSync } from "node:zlib";
import { request as httpRequest } from "node:http";
import type { CategoryDef } from "../src/types.js";

/**
 * fetch over node's http module. The DOM test environment's own fetch
 * insists on logging every transport error to the console; this one just
 * rejects, which is what the tests assert on.
 */
export const nodeFetch = ((input: string | URL, init?: RequestInit): Promise<Response> =>
  new Promise((resolve, reject) => {
    const url = new URL(String(input));
    const req = httpRequest(
      url,
      { method: init?.method ?? "GET", headers: (init?.headers as Record<string, string>) ?? {} },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (chunk: Buffer) => chunks.push(chunk));
        res.on("end", () => {
          resolve(new Response(Buffer.concat(chunks).toString("utf-8"), { status: res.statusCode ?? 500 }));
        });
      }
    );
    req.on("error", reject);
    if (typeof init?.body === "string") {
      req.write(init.body);
    }
    req.end();
  })) as typeof fetch;

const CRC_TABLE = new Uint32Array(256);
for (let n = 0; n < 256; n++) {
  let c = n;
  for (let k = 0; k < 8; k++) {
    c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
  }
  CRC_TABLE[n] = c >>> 0;
}

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = (CRC_TABLE[(c ^ byte) & 0xff] ?? 0) ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "ascii");
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(crc32(Buffer.concat([head.subarray(4), Buffer.from(data)])), 0);
  return Buffer.concat([head, Buffer.from(data), tail]);
}

/** Encode a solid-color truecolor PNG (8-bit RGB, no interlace). */
export function encodePng(width: number, height: number, rgb: [number, number, number]): Buffer {
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor
  // bytes 10..12 stay zero: deflate, adaptive filters, no interlace

  const stride = width * 3 + 1; // one filter byte per scanline
  const raw = Buffer.alloc(stride * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const at = y * stride + 1 + x * 3;
      raw[at] = rgb[0];
      raw[at + 1] = rgb[1];
      raw[at + 2] = rgb[2];
    }
  }

  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

export function pngDataUrl(width: number, height: number, rgb: [number, number, number]): string {
  return `data:image/png;base64,${encodePng(width, height, rgb).toString("base64")}`;
}

/** Install a chrome global backed by a Map; call restore() when done. */
export function fakeChrome(): { data: Map<string, unknown>; restore: () => void } {
  const data = new Map<string, unknown>();
  const fake = {
    storage: {
      local: {
        async get(keys: string | string[] | null): Promise<Record<string, unknown>> {
          const wanted = keys === null ? [...data.keys()] : Array.isArray(keys) ? keys : [keys];
          const out: Record<string, unknown> = {};
          for (const key of wanted) {
            if (data.has(key)) {
              out[key] = structuredClone(data.get(key));
            }
          }
          return out;
        },
        async set(items: Record<string, unknown>): Promise<void> {
          for (const [key, value] of Object.entries(items)) {
            data.set(key, structuredClone(value));
          }
        },
      },
    },
    runtime: {
      getURL: (path: string) => `chrome-extension://fake-id/${path}`,
    },
  };
  const holder = globalThis as Record<string, unknown>;
  const previous = holder["chrome"];
  holder["chrome"] = fake;
  return {
    data,
    restore: () => {
      holder["chrome"] = previous;
    },
  };
}

/** Category config exactly as the server's /api/v1/categories serves it. */
export const THREE_CATEGORIES: CategoryDef[] = [
  { id: 1, name: "directed", supercategory: "camera", display_color: "e6194b", shortcut_key: "1" },
  { id: 2, name: "round", supercategory: "camera", display_color: "3cb44b", shortcut_key: "2" },
  { id: 3, name: "dome", supercategory: "camera", display_color: "4363d8", shortcut_key: "3" },
];
