// Content-script entry: receives "begin-session" with a captured PNG from
// the background worker, builds the draft session for this tab, and drives
// submission. At most one session exists per tab; starting a new one over
// uncommitted work asks first.

import { loadSettings, type Settings } from "./settings.js";
import { ApiClient } from "./api.js";
import { DraftSession } from "./session.js";
import { Overlay } from "./overlay.js";

let current: Overlay | null = null;

function toast(text: string): void {
  const div = document.createElement("div");
  div.className = "anno-toast";
  div.textContent = text;
  div.style.cssText =
    "position:fixed;left:50%;bottom:24px;transform:translateX(-50%);z-index:2147483647;" +
    "padding:8px 14px;background:rgba(20,20,20,0.92);color:#eee;font:13px sans-serif;border-radius:4px;";
  document.body.appendChild(div);
  setTimeout(() => div.remove(), 5000);
}

function describeError(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

function teardown(): void {
  if (current !== null) {
    current.unmount();
    current = null;
  }
}

function submitCurrent(overlay: Overlay, client: ApiClient, settings: Settings): void {
  if (settings.annotatorId.trim() === "") {
    overlay.setStatus("set an annotator id in the extension options before submitting", true);
    return;
  }
  if (overlay.session.openVertices.length > 0) {
    overlay.setStatus(`close the open polygon first (${settings.shortcuts.close} closes, Backspace edits)`, true);
    return;
  }
  if (overlay.session.drafts.length === 0) {
    overlay.setStatus("nothing to submit yet", true);
    return;
  }

  overlay.setBusy(true);
  overlay.setStatus("submitting...");
  void client.submitWithRetry(overlay.session).then((result) => {
    overlay.setBusy(false);
    switch (result.kind) {
      case "created":
        teardown();
        toast(`submitted ${overlay.session.drafts.length} annotation(s)`);
        break;
      case "duplicate":
        teardown();
        toast("this capture was already on record; nothing new stored");
        break;
      case "rejected":
        overlay.setStatus(
          `server rejected the submission: ${result.violations.map((v) => v.message).join("; ") || "no detail"}`,
          true
        );
        break;
      case "unauthorized":
        overlay.setStatus("the server refused the auth token, check the extension options", true);
        break;
      case "network-error":
        overlay.setStatus(
          `could not reach the server (${result.message}); drafts are kept, press ${settings.shortcuts.submit} to retry`,
          true
        );
        break;
    }
  });
}

async function beginSession(imageDataUrl: string): Promise<void> {
  if (current !== null) {
    if (current.session.hasUncommittedWork) {
      const replace = window.confirm("Start a new annotation session? Unsubmitted polygons will be lost.");
      if (!replace) {
        return;
      }
    }
    teardown();
  }

  const settings = await loadSettings();
  const client = new ApiClient(settings);

  let categories;
  try {
    categories = await client.fetchCategories();
  } catch (error) {
    toast(`cannot start: category list unavailable (${describeError(error)})`);
    return;
  }
  const first = categories.categories[0];
  if (first === undefined) {
    toast("cannot start: the server has no categories configured");
    return;
  }

  const session = new DraftSession({
    imageDataUrl,
    pageUrl: window.location.href,
    capturedAt: new Date().toISOString(),
    viewportWidth: window.innerWidth,
    viewportHeight: window.innerHeight,
    devicePixelRatio: window.devicePixelRatio,
    activeCategory: first.name,
  });

  const overlay: Overlay = new Overlay(
    document,
    session,
    categories.categories,
    settings.shortcuts,
    {
      onSubmit: () => submitCurrent(overlay, client, settings),
      onCancel: () => {
        if (overlay.session.hasUncommittedWork && !window.confirm("Discard the unsubmitted polygons?")) {
          return;
        }
        teardown();
      },
    },
    { staleCategories: categories.stale }
  );
  overlay.mount();
  current = overlay;
}

chrome.runtime.onMessage.addListener((message, _sender, sendResponse) => {
  const msg = message as { type?: string; imageDataUrl?: string };
  if (msg.type === "begin-session" && typeof msg.imageDataUrl === "string") {
    void beginSession(msg.imageDataUrl);
    sendResponse({ ok: true });
  }
});
