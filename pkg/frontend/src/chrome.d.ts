// Minimal ambient typings for the slice of the cross-browser extension API
// this extension actually uses (promise-flavored, manifest v3). Kept local
// so the build does not depend on a full vendor typings package.

declare namespace chrome {
  namespace storage {
    interface StorageArea {
      get(keys: string | string[] | null): Promise<Record<string, unknown>>;
      set(items: Record<string, unknown>): Promise<void>;
    }
    const local: StorageArea;
  }

  namespace runtime {
    function getURL(path: string): string;
    const onMessage: {
      addListener(
        callback: (message: unknown, sender: unknown, sendResponse: (response?: unknown) => void) => void
      ): void;
    };
  }

  namespace tabs {
    interface Tab {
      id?: number;
    }
    function captureVisibleTab(options: { format: "png" }): Promise<string>;
    function sendMessage(tabId: number, message: unknown): Promise<unknown>;
    function query(queryInfo: { active: boolean; currentWindow: boolean }): Promise<Tab[]>;
  }

  namespace action {
    const onClicked: {
      addListener(callback: (tab: tabs.Tab) => void): void;
    };
  }

  namespace commands {
    const onCommand: {
      addListener(callback: (command: string, tab?: tabs.Tab) => void): void;
    };
  }
}
