import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 60_000,
    hookTimeout: 120_000,
    // the integration suite talks to one spawned service; keep files serial
    fileParallelism: false,
  },
});
