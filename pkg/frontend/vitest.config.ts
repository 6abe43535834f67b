import { defineConfig } from "vitest/config";

// DOM-needing test files opt in per file with `// @vitest-environment
// happy-dom`; everything else runs plain node. The long timeout covers the
// end-to-end test, which boots the real annotation server.
export default defineConfig({
  test: {
    environment: "node",
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
