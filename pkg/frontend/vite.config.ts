/// <reference types="vitest/config" />
import { defineConfig } from "vite";

export default defineConfig({
  build: {
    outDir: "dist",
    // single-file-ish bundle; the service mounts dist/ as static files
    chunkSizeWarningLimit: 1500,
  },
  server: {
    // dev mode proxies API calls to a locally running `voxcompose serve`
    proxy: { "/sessions": "http://127.0.0.1:8000" },
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
