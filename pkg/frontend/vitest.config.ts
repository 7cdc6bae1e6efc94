import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // The walkthrough test boots a real server; give it room.
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
