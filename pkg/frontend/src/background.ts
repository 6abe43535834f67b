// Background service worker: owns the tab-capture permission. The toolbar
// button or the keyboard command snapshots the visible tab and hands the
// PNG to the content script in that tab.

async function startCapture(tab?: chrome.tabs.Tab): Promise<void> {
  let target = tab;
  if (target === undefined || target.id === undefined) {
    const active = await chrome.tabs.query({ active: true, currentWindow: true });
    target = active[0];
  }
  if (target === undefined || target.id === undefined) {
    return;
  }
  const imageDataUrl = await chrome.tabs.captureVisibleTab({ format: "png" });
  try {
    await chrome.tabs.sendMessage(target.id, { type: "begin-session", imageDataUrl });
  } catch {
    // Pages the content script cannot run on (browser UI, stores) land
    // here; there is nobody to deliver the capture to.
  }
}

chrome.action.onClicked.addListener((tab) => {
  void startCapture(tab);
});

chrome.commands.onCommand.addListener((command, tab) => {
  if (command === "activate-capture") {
    void startCapture(tab);
  }
});
