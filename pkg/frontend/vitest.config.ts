import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the live suite drives a few hundred HTTP round trips against a
    // freshly built corpus, so hooks and tests get generous ceilings
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
