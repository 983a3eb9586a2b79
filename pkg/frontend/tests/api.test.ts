/** Client contract tests against the fixture server: every endpoint wrapper,
 * error mapping, schema guarding, and the stream's reconnect-and-resume.
 */

import { afterAll, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { ApiClient, ApiError, openStream, SseFrameParser } from "../src/api.js";
import { parseSnapshot, parseSurface, SchemaError, StreamEvent } from "../src/types.js";
import { FIXTURES, FixtureServer } from "./fixture_server.js";

let server: FixtureServer;
let base: string;
let client: ApiClient;

beforeAll(async () => {
  server = new FixtureServer();
  base = await server.start();
  client = new ApiClient(base);
});

afterAll(async () => {
  await server.stop();
});

beforeEach(() => {
  server.requests.length = 0;
  server.watchTopics = [];
  server.streamDropAfter = 0;
  server.streamLeadingComment = false;
  server.empty = false;
});

describe("query endpoints", () => {
  it("fetches health verbatim", async () => {
    const health = await client.health();
    expect(health).toEqual(FIXTURES.health);
  });

  it("fetches the latest surface", async () => {
    const surface = await client.surface();
    expect(surface.window_start).toBe(FIXTURES.surface.window_start);
    expect(surface.grid.nx).toBe(64);
    expect(surface.heights).toHaveLength(64);
  });

  it("pins a surface to a requested window", async () => {
    const ws = FIXTURES.surfaceGathering.window_start as number;
    const surface = await client.surface(ws);
    expect(surface.window_start).toBe(ws);
    const sent = server.requests.find((r) => r.path === "/v1/surface");
    expect(sent?.query.window_start).toBe(String(ws));
  });

  it("fetches the snapshot with alerts and communities", async () => {
    const snapshot = await client.snapshot();
    expect(snapshot.window).toEqual(FIXTURES.snapshot.window);
    expect(snapshot.alerts).toHaveLength(FIXTURES.snapshot.alerts.length);
    expect(snapshot.communities.length).toBeGreaterThan(0);
  });

  it("fetches alerts, emerging, products, guidance, tracked", async () => {
    const alerts = await client.alerts(0);
    expect(alerts.alerts.map((a) => a.payload.kind)).toEqual(
      FIXTURES.alerts.alerts.map((a: { payload: { kind: string } }) => a.payload.kind)
    );
    expect(alerts.alerts.filter((a) => a.payload.kind === "gathering")).toHaveLength(3);
    const emerging = await client.emerging();
    expect(emerging.map((t) => t.topic)).toEqual(["arts", "entertainment"]);
    const products = await client.products();
    expect(products.map((p) => p.id)).toContain("prod-violence");
    const guidance = await client.guidance(41.9, 12.5, 1500, 8);
    expect(guidance.sectors).toHaveLength(8);
    const tracked = await client.tracked();
    expect(tracked.tracked).toEqual([]);
  });

  it("slices product feeds by since", async () => {
    const whole = await client.productFeed("prod-violence", 0);
    expect(whole.events).toHaveLength(FIXTURES.feedViolence.events.length);
    const mid = whole.events[100].seq;
    const rest = await client.productFeed("prod-violence", mid);
    expect(rest.events).toHaveLength(whole.events.length - 101);
    expect(rest.events.every((e) => e.seq > mid)).toBe(true);
    const nothing = await client.productFeed("prod-violence", whole.latest_seq);
    expect(nothing.events).toHaveLength(0);
  });

  it("maps 404 bodies onto ApiError", async () => {
    await expect(client.productFeed("prod-missing", 0)).rejects.toMatchObject({
      name: "ApiError",
      status: 404,
      serverMessage: "not found",
    });
  });
});

describe("watch topic mutations", () => {
  it("creates, lists, reads, deletes", async () => {
    const created = await client.createWatchTopic({
      label: "roadblocks",
      terms: [{ term: "roadblock" }],
    });
    expect(created.label).toBe("roadblocks");
    expect(created.origin).toBe("operator");
    const listed = await client.watchTopics();
    expect(listed.map((t) => t.id)).toContain(created.id);
    const detail = await client.watchTopicDetail(created.id);
    expect(detail.matches).toEqual([]);
    await client.deleteWatchTopic(created.id);
    expect(await client.watchTopics()).toHaveLength(0);
  });

  it("surfaces 409 conflicts with the server's message", async () => {
    await client.createWatchTopic({ label: "arts", terms: [{ term: "arts" }] });
    let caught: unknown;
    try {
      await client.createWatchTopic({ label: "arts", terms: [{ term: "arts" }] });
    } catch (err) {
      caught = err;
    }
    expect(caught).toBeInstanceOf(ApiError);
    expect((caught as ApiError).status).toBe(409);
    expect((caught as ApiError).serverMessage).toBe(
      FIXTURES.watchTopicConflict.error
    );
  });
});

describe("schema guards", () => {
  it("rejects a snapshot missing its surface", () => {
    const broken = JSON.parse(JSON.stringify(FIXTURES.snapshot));
    delete broken.surface;
    expect(() => parseSnapshot(broken)).toThrow(SchemaError);
  });

  it("rejects non-numeric heights", () => {
    const broken = JSON.parse(JSON.stringify(FIXTURES.surface));
    broken.heights[0][0] = "tall";
    expect(() => parseSurface(broken)).toThrow(SchemaError);
  });

  it("rejects unknown alert kinds", () => {
    const broken = JSON.parse(JSON.stringify(FIXTURES.snapshot));
    broken.alerts[0].kind = "stampede";
    expect(() => parseSnapshot(broken)).toThrow(/unknown alert kind/);
  });
});

describe("sse frame parser", () => {
  const enc = new TextEncoder();

  it("parses frames split across chunks", () => {
    const parser = new SseFrameParser();
    const whole = 'id: 7\nevent: message\ndata: {"id":"m1"}\n\nid: 8\nevent: alert\ndata: {}\n\n';
    const first = parser.push(enc.encode(whole.slice(0, 25)));
    const rest = parser.push(enc.encode(whole.slice(25)));
    const frames = [...first, ...rest];
    expect(frames).toHaveLength(2);
    expect(frames[0]).toEqual({ id: "7", event: "message", data: '{"id":"m1"}' });
    expect(frames[1].id).toBe("8");
  });

  it("ignores comment frames", () => {
    const parser = new SseFrameParser();
    const frames = parser.push(enc.encode(": lagged beyond buffer, disconnecting\n\n"));
    expect(frames).toHaveLength(0);
  });
});

describe("stream", () => {
  function collect(
    sinceStart: number,
    stopAfter: number
  ): { events: StreamEvent[]; handle: ReturnType<typeof openStream> } {
    const events: StreamEvent[] = [];
    const handle = openStream(base, {
      since: sinceStart,
      retryDelayMs: 5,
      onEvent: (ev) => {
        events.push(ev);
        if (events.length >= stopAfter) handle.stop();
      },
    });
    return { events, handle };
  }

  it("replays the tail with strictly increasing seq", async () => {
    const total = FIXTURES.streamTail.length;
    const { events, handle } = collect(0, total);
    await handle.done;
    expect(events).toHaveLength(total);
    expect(events.map((e) => e.seq)).toEqual(FIXTURES.streamTail.map((e) => e.seq));
    for (let i = 1; i < events.length; i++) {
      expect(events[i].seq).toBeGreaterThan(events[i - 1].seq);
    }
  });

  it("resumes from since, skipping consumed events", async () => {
    const mid = FIXTURES.streamTail[9].seq;
    const expected = FIXTURES.streamTail.filter((e) => e.seq > mid).length;
    const { events, handle } = collect(mid, expected);
    await handle.done;
    expect(events[0].seq).toBe(mid + 1);
    expect(events).toHaveLength(expected);
  });

  it("reconnects after a drop and resumes with the last seq seen", async () => {
    server.streamDropAfter = 10;
    const total = FIXTURES.streamTail.length;
    const { events, handle } = collect(0, total);
    await handle.done;
    expect(events).toHaveLength(total);
    const ids = events.map((e) => e.seq);
    expect(new Set(ids).size).toBe(total); // exactly once across reconnects
    const streamRequests = server.requests.filter((r) => r.path === "/v1/stream");
    expect(streamRequests.length).toBeGreaterThanOrEqual(3);
    expect(streamRequests[1].query.since).toBe(String(events[9].seq));
  });

  it("tolerates leading comment frames", async () => {
    server.streamLeadingComment = true;
    const { events, handle } = collect(0, 5);
    await handle.done;
    expect(events).toHaveLength(5);
    expect(events[0].seq).toBe(FIXTURES.streamTail[0].seq);
  });
});
