import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    testTimeout: 90000,
    hookTimeout: 30000,
    // the round-trip suite owns a real child process and a TCP port
    fileParallelism: false,
  },
});
