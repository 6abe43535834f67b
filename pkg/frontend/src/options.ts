// Options page logic: a plain form over the stored settings. Validation
// problems render inline and invalid settings are never persisted.

import { loadSettings, saveSettings, validateSettings, type Settings } from "./settings.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`options page is missing element #${id}`);
  }
  return node as T;
}

function fillForm(settings: Settings): void {
  el<HTMLInputElement>("server-url").value = settings.serverBaseUrl;
  el<HTMLInputElement>("annotator-id").value = settings.annotatorId;
  el<HTMLInputElement>("auth-token").value = settings.authToken ?? "";
  el<HTMLInputElement>("key-close").value = settings.shortcuts.close;
  el<HTMLInputElement>("key-submit").value = settings.shortcuts.submit;
  el<HTMLInputElement>("key-cancel").value = settings.shortcuts.cancel;
}

function readForm(): Settings {
  const token = el<HTMLInputElement>("auth-token").value.trim();
  return {
    serverBaseUrl: el<HTMLInputElement>("server-url").value.trim(),
    annotatorId: el<HTMLInputElement>("annotator-id").value.trim(),
    authToken: token === "" ? null : token,
    shortcuts: {
      close: el<HTMLInputElement>("key-close").value,
      submit: el<HTMLInputElement>("key-submit").value,
      cancel: el<HTMLInputElement>("key-cancel").value,
    },
  };
}

function showProblems(problems: string[]): void {
  const list = el<HTMLUListElement>("problems");
  list.textContent = "";
  for (const problem of problems) {
    const item = document.createElement("li");
    item.textContent = problem;
    list.appendChild(item);
  }
}

async function init(): Promise<void> {
  fillForm(await loadSettings());
  el<HTMLFormElement>("settings-form").addEventListener("submit", (event) => {
    event.preventDefault();
    el("saved-note").hidden = true;
    const settings = readForm();
    const problems = validateSettings(settings);
    showProblems(problems);
    if (problems.length > 0) {
      return;
    }
    void saveSettings(settings).then(() => {
      el("saved-note").hidden = false;
    });
  });
}

void init();
