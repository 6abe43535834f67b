// HTTP client for the annotation server. Knows the three calls the
// extension makes (categories, submit, health) and nothing else. Failed
// submissions never touch the session; retrying is the caller's choice and
// the drafts stay where they are.

import type { CategoryDef, SubmissionPayload, SubmissionReceipt, Violation } from "./types.js";
import type { Settings } from "./settings.js";
import type { DraftSession } from "./session.js";

export interface CategoriesResult {
  categories: CategoryDef[];
  /** True when the server was unreachable and a cached list is shown. */
  stale: boolean;
}

export type SubmitResult =
  | { kind: "created"; receipt: SubmissionReceipt }
  | { kind: "duplicate"; receipt: SubmissionReceipt }
  | { kind: "rejected"; violations: Violation[] }
  | { kind: "unauthorized" }
  | { kind: "network-error"; message: string };

const CATEGORY_CACHE_KEY = "annoserve-category-cache";

export function payloadFromSession(session: DraftSession, settings: Settings): SubmissionPayload {
  const comma = session.imageDataUrl.indexOf(",");
  return {
    annotator_id: settings.annotatorId,
    captured_at: session.capturedAt,
    page_url: session.pageUrl,
    viewport: {
      width: session.viewportWidth,
      height: session.viewportHeight,
      device_pixel_ratio: session.devicePixelRatio,
    },
    image: comma >= 0 ? session.imageDataUrl.slice(comma + 1) : session.imageDataUrl,
    annotations: session.toAnnotations(),
  };
}

export class ApiClient {
  private readonly settings: Settings;
  private readonly fetchFn: typeof fetch;
  private lastKnown: CategoryDef[] | null = null;

  constructor(settings: Settings, fetchFn: typeof fetch = fetch) {
    this.settings = settings;
    this.fetchFn = fetchFn;
  }

  private url(path: string): string {
    return new URL(path, this.settings.serverBaseUrl).toString();
  }

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) {
      headers["Content-Type"] = "application/json";
    }
    if (this.settings.authToken) {
      headers["Authorization"] = `Bearer ${this.settings.authToken}`;
    }
    return headers;
  }

  /**
   * Fetch the configured categories; on network failure fall back to the
   * last list this profile ever saw, marked stale. Throws only when there
   * is nothing to fall back to.
   */
  async fetchCategories(): Promise<CategoriesResult> {
    try {
      const response = await this.fetchFn(this.url("/api/v1/categories"), { headers: this.headers(false) });
      if (!response.ok) {
        throw new Error(`categories request failed with ${response.status}`);
      }
      const categories = (await response.json()) as CategoryDef[];
      this.lastKnown = categories;
      await chrome.storage.local.set({ [CATEGORY_CACHE_KEY]: categories });
      return { categories, stale: false };
    } catch (error) {
      const cached = this.lastKnown ?? (await this.readCache());
      if (cached !== null) {
        return { categories: cached, stale: true };
      }
      throw error;
    }
  }

  private async readCache(): Promise<CategoryDef[] | null> {
    const found = await chrome.storage.local.get(CATEGORY_CACHE_KEY);
    const cached = found[CATEGORY_CACHE_KEY];
    return Array.isArray(cached) ? (cached as CategoryDef[]) : null;
  }

  async submit(session: DraftSession): Promise<SubmitResult> {
    const payload = payloadFromSession(session, this.settings);
    let response: Response;
    try {
      response = await this.fetchFn(this.url("/api/v1/annotations"), {
        method: "POST",
        headers: this.headers(true),
        body: JSON.stringify(payload),
      });
    } catch (error) {
      return { kind: "network-error", message: error instanceof Error ? error.message : String(error) };
    }

    if (response.status === 401) {
      return { kind: "unauthorized" };
    }
    if (response.status === 400) {
      const body = (await response.json()) as { violations?: Violation[] };
      return { kind: "rejected", violations: body.violations ?? [] };
    }
    if (response.status === 200 || response.status === 201) {
      const receipt = (await response.json()) as SubmissionReceipt;
      return receipt.duplicate ? { kind: "duplicate", receipt } : { kind: "created", receipt };
    }
    return { kind: "network-error", message: `unexpected status ${response.status}` };
  }

  /**
   * Submit with exponential backoff on network errors. Server verdicts
   * (created, duplicate, rejected, unauthorized) return immediately; only
   * transport failures are worth retrying.
   */
  async submitWithRetry(
    session: DraftSession,
    options: { attempts?: number; baseDelayMs?: number; sleep?: (ms: number) => Promise<void> } = {}
  ): Promise<SubmitResult> {
    const attempts = options.attempts ?? 3;
    const baseDelay = options.baseDelayMs ?? 500;
    const sleep = options.sleep ?? ((ms: number) => new Promise((resolve) => setTimeout(resolve, ms)));

    let last: SubmitResult = { kind: "network-error", message: "no attempt made" };
    for (let i = 0; i < attempts; i++) {
      last = await this.submit(session);
      if (last.kind !== "network-error") {
        return last;
      }
      if (i + 1 < attempts) {
        await sleep(baseDelay * 2 ** i);
      }
    }
    return last;
  }
}
