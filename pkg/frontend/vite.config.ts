import { defineConfig } from 'vitest/config';

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // Forward API calls to a locally running `charm serve`.
      '/sessions': 'http://127.0.0.1:8765',
      '/jobs': 'http://127.0.0.1:8765',
      '/versions': 'http://127.0.0.1:8765',
      '/modifiers': 'http://127.0.0.1:8765',
      '/healthz': 'http://127.0.0.1:8765',
    },
  },
  test: {
    environment: 'happy-dom',
    include: ['tests/**/*.test.ts'],
  },
});
