/** Typed client for the /v1 HTTP and stream API.
 *
 * All reads go through the schema guards in types.ts, so a drifting server
 * fails loudly instead of rendering garbage. The stream reader keeps a single
 * connection and resumes after drops with ?since=<last seq seen>.
 */

import {
  AlertsPage,
  EmergingTopic,
  FeedPage,
  Guidance,
  Health,
  Product,
  ProductFilter,
  Snapshot,
  StreamEvent,
  Surface,
  Tracked,
  WatchTopic,
  WatchTopicDetail,
  parseAlertsPage,
  parseEmergingPage,
  parseFeedPage,
  parseGuidance,
  parseHealth,
  parseProduct,
  parseProductsPage,
  parseSnapshot,
  parseStreamEvent,
  parseSurface,
  parseTracked,
  parseWatchTopic,
  parseWatchTopicDetail,
  parseWatchTopicsPage,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly serverMessage: string,
    method: string,
    path: string
  ) {
    super(`${method} ${path} -> ${status}: ${serverMessage}`);
    this.name = "ApiError";
  }
}

async function errorFrom(res: Response, method: string, path: string): Promise<ApiError> {
  let message = res.statusText || `HTTP ${res.status}`;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, message, method, path);
}

export interface NewWatchTopic {
  label: string;
  terms: { term: string; weight?: number }[];
  origin?: string;
}

export interface NewProduct {
  name: string;
  filters: ProductFilter[];
}

export class ApiClient {
  private readonly base: string;

  constructor(baseUrl: string, private readonly fetchFn: FetchLike = fetch) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  private url(path: string, params?: Record<string, string | number | undefined>): string {
    const query = Object.entries(params ?? {})
      .filter(([, v]) => v !== undefined)
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
      .join("&");
    return `${this.base}/v1${path}${query ? `?${query}` : ""}`;
  }

  private async request(method: string, path: string, url: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(url, init);
    if (!res.ok) throw await errorFrom(res, method, path);
    if (res.status === 204) return undefined;
    return res.json();
  }

  async health(): Promise<Health> {
    return parseHealth(await this.request("GET", "/healthz", this.url("/healthz")));
  }

  async surface(windowStart?: number): Promise<Surface> {
    const url = this.url("/surface", { window_start: windowStart });
    return parseSurface(await this.request("GET", "/surface", url));
  }

  async snapshot(windowStart?: number): Promise<Snapshot> {
    const url = this.url("/snapshot", { window_start: windowStart });
    return parseSnapshot(await this.request("GET", "/snapshot", url));
  }

  async alerts(sinceSeq = 0): Promise<AlertsPage> {
    const url = this.url("/alerts", { since_seq: sinceSeq });
    return parseAlertsPage(await this.request("GET", "/alerts", url));
  }

  async emerging(): Promise<EmergingTopic[]> {
    return parseEmergingPage(
      await this.request("GET", "/topics/emerging", this.url("/topics/emerging"))
    );
  }

  async watchTopics(): Promise<WatchTopic[]> {
    return parseWatchTopicsPage(
      await this.request("GET", "/watch-topics", this.url("/watch-topics"))
    );
  }

  async watchTopicDetail(id: string): Promise<WatchTopicDetail> {
    const url = this.url(`/watch-topics/${encodeURIComponent(id)}`);
    return parseWatchTopicDetail(await this.request("GET", "/watch-topics/{id}", url));
  }

  async createWatchTopic(body: NewWatchTopic): Promise<WatchTopic> {
    return parseWatchTopic(
      await this.request("POST", "/watch-topics", this.url("/watch-topics"), body)
    );
  }

  async deleteWatchTopic(id: string): Promise<void> {
    const url = this.url(`/watch-topics/${encodeURIComponent(id)}`);
    await this.request("DELETE", "/watch-topics/{id}", url);
  }

  async products(): Promise<Product[]> {
    return parseProductsPage(await this.request("GET", "/products", this.url("/products")));
  }

  async createProduct(body: NewProduct): Promise<Product> {
    return parseProduct(await this.request("POST", "/products", this.url("/products"), body));
  }

  async productFeed(id: string, since = 0): Promise<FeedPage> {
    const url = this.url(`/products/${encodeURIComponent(id)}/feed`, { since });
    return parseFeedPage(await this.request("GET", "/products/{id}/feed", url));
  }

  async guidance(lat: number, lon: number, radiusM: number, sectors: number): Promise<Guidance> {
    const url = this.url("/guidance", { lat, lon, radius_m: radiusM, sectors });
    return parseGuidance(await this.request("GET", "/guidance", url));
  }

  async tracked(): Promise<Tracked> {
    return parseTracked(await this.request("GET", "/tracked-users", this.url("/tracked-users")));
  }

  async putTracked(tracked: string[]): Promise<Tracked> {
    return parseTracked(
      await this.request("PUT", "/tracked-users", this.url("/tracked-users"), { tracked })
    );
  }

  streamUrl(since: number): string {
    return this.url("/stream", { since });
  }
}

export interface StreamOptions {
  since?: number;
  fetchFn?: FetchLike;
  onEvent: (ev: StreamEvent) => void;
  onStatus?: (status: "connected" | "retrying") => void;
  retryDelayMs?: number;
  /** Injectable for tests; defaults to a real timer. */
  sleep?: (ms: number) => Promise<void>;
}

export interface StreamHandle {
  stop: () => void;
  done: Promise<void>;
  lastSeq: () => number;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Split server-sent event frames out of a byte stream; yields complete frames. */
export class SseFrameParser {
  private buffer = "";
  private readonly decoder = new TextDecoder();

  push(chunk: Uint8Array): { id: string | null; event: string | null; data: string }[] {
    this.buffer += this.decoder.decode(chunk, { stream: true });
    const frames: { id: string | null; event: string | null; data: string }[] = [];
    let cut: number;
    while ((cut = this.buffer.indexOf("\n\n")) >= 0) {
      const raw = this.buffer.slice(0, cut);
      this.buffer = this.buffer.slice(cut + 2);
      let id: string | null = null;
      let event: string | null = null;
      const data: string[] = [];
      for (const line of raw.split("\n")) {
        if (line.startsWith(":")) continue; // comment frame (keepalive, lag notice)
        if (line.startsWith("id:")) id = line.slice(3).trim();
        else if (line.startsWith("event:")) event = line.slice(6).trim();
        else if (line.startsWith("data:")) data.push(line.slice(5).trim());
      }
      if (id !== null || event !== null || data.length) {
        frames.push({ id, event, data: data.join("\n") });
      }
    }
    return frames;
  }
}

/**
 * Open the single live stream connection. Runs until stop() is called;
 * reconnects after any drop, resuming from the last seq seen so no event is
 * skipped and none is delivered twice.
 */
export function openStream(baseUrl: string, opts: StreamOptions): StreamHandle {
  const client = new ApiClient(baseUrl, opts.fetchFn);
  const fetchFn = opts.fetchFn ?? fetch;
  const sleep = opts.sleep ?? defaultSleep;
  const retryDelay = opts.retryDelayMs ?? 2000;
  let cursor = opts.since ?? 0;
  let stopped = false;
  let controller: AbortController | null = null;

  const done = (async () => {
    while (!stopped) {
      controller = new AbortController();
      try {
        const res = await fetchFn(client.streamUrl(cursor), {
          signal: controller.signal,
        });
        if (!res.ok || !res.body) throw await errorFrom(res, "GET", "/stream");
        opts.onStatus?.("connected");
        const parser = new SseFrameParser();
        const reader = res.body.getReader();
        for (;;) {
          // Never re-read once stopped: aborting a body that already ended
          // leaves the next read() pending forever on some runtimes.
          if (stopped) break;
          const { done: eof, value } = await reader.read();
          if (eof || stopped) break;
          for (const frame of parser.push(value)) {
            if (stopped) break;
            if (frame.data === "") continue;
            const ev = parseStreamEvent({
              seq: Number(frame.id),
              kind: frame.event,
              payload: JSON.parse(frame.data),
            });
            cursor = ev.seq;
            opts.onEvent(ev);
          }
        }
        await reader.cancel().catch(() => undefined);
      } catch (err) {
        if (stopped) break;
      }
      if (stopped) break;
      opts.onStatus?.("retrying");
      await sleep(retryDelay);
    }
  })();

  return {
    stop: () => {
      stopped = true;
      controller?.abort();
    },
    done,
    lastSeq: () => cursor,
  };
}
