// Extension settings: server endpoint, annotator identity, and keyboard
// shortcut overrides. Persisted in extension-local storage so they survive
// browser restarts. Digits are reserved for category selection and cannot
// be bound to actions.

export interface Shortcuts {
  /** Close the open polygon (also triggered by double-click). */
  close: string;
  /** Submit every completed draft. */
  submit: string;
  /** Discard the session. */
  cancel: string;
}

export interface Settings {
  serverBaseUrl: string;
  annotatorId: string;
  authToken: string | null;
  shortcuts: Shortcuts;
}

export const DEFAULT_SETTINGS: Settings = {
  serverBaseUrl: "http://127.0.0.1:8008",
  annotatorId: "",
  authToken: null,
  shortcuts: { close: "Enter", submit: "s", cancel: "Escape" },
};

const STORAGE_KEY = "annoserve-settings";

/** Human-readable problems; an empty list means the settings are usable. */
export function validateSettings(settings: Settings): string[] {
  const problems: string[] = [];

  let url: URL | null = null;
  try {
    url = new URL(settings.serverBaseUrl);
  } catch {
    problems.push(`server URL is not a valid URL: ${settings.serverBaseUrl}`);
  }
  if (url && url.protocol !== "http:" && url.protocol !== "https:") {
    problems.push(`server URL must be http or https, got ${url.protocol.replace(/:$/, "")}`);
  }

  const seen = new Map<string, string>();
  for (const [action, key] of Object.entries(settings.shortcuts)) {
    if (typeof key !== "string" || key.length === 0) {
      problems.push(`shortcut for ${action} is empty`);
      continue;
    }
    if (/^[1-9]$/.test(key)) {
      problems.push(`shortcut for ${action} uses digit ${key}, which selects categories`);
    }
    const holder = seen.get(key.toLowerCase());
    if (holder !== undefined) {
      problems.push(`shortcut ${key} is assigned to both ${holder} and ${action}`);
    }
    seen.set(key.toLowerCase(), action);
  }

  return problems;
}

function mergeOverDefaults(stored: unknown): Settings {
  if (typeof stored !== "object" || stored === null) {
    return structuredClone(DEFAULT_SETTINGS);
  }
  const doc = stored as Partial<Settings>;
  return {
    serverBaseUrl: typeof doc.serverBaseUrl === "string" ? doc.serverBaseUrl : DEFAULT_SETTINGS.serverBaseUrl,
    annotatorId: typeof doc.annotatorId === "string" ? doc.annotatorId : DEFAULT_SETTINGS.annotatorId,
    authToken: typeof doc.authToken === "string" && doc.authToken !== "" ? doc.authToken : null,
    shortcuts: { ...DEFAULT_SETTINGS.shortcuts, ...(doc.shortcuts ?? {}) },
  };
}

export async function loadSettings(): Promise<Settings> {
  const found = await chrome.storage.local.get(STORAGE_KEY);
  return mergeOverDefaults(found[STORAGE_KEY]);
}

/** Rejects invalid settings instead of persisting them. */
export async function saveSettings(settings: Settings): Promise<void> {
  const problems = validateSettings(settings);
  if (problems.length > 0) {
    throw new Error(problems.join("; "));
  }
  await chrome.storage.local.set({ [STORAGE_KEY]: settings });
}
