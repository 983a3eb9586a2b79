/** Wire types for the /v1 API, plus runtime guards.
 *
 * Every parse function validates the exact shape the service serializes and
 * throws SchemaError on drift. The console renders values from these objects
 * verbatim; it never derives its own statistics from them.
 */

export type Bbox = [number, number, number, number];

export interface Grid {
  bbox: Bbox;
  nx: number;
  ny: number;
}

export interface Surface {
  window_start: number | null;
  window_s: number;
  grid: Grid;
  heights: number[][];
}

export type AlertKind = "burst" | "gathering";

export interface Alert {
  kind: AlertKind;
  ix: number;
  iy: number;
  window_start: number;
  window_s: number;
  observed: number;
  baseline: number;
  ratio: number;
  seq?: number;
}

/** /v1/alerts returns journal events whose payloads are the alerts. */
export interface AlertEvent {
  seq: number;
  kind: "alert";
  payload: Alert;
}

export interface AlertsPage {
  alerts: AlertEvent[];
  latest_seq: number;
}

export interface EmergingTopic {
  topic: string;
  ratio: number;
  count: number;
}

export interface Community {
  members: string[];
  internal_weight: number;
}

export interface Snapshot {
  window: { start: number; duration: number } | null;
  surface: { grid: Grid; heights: number[][] };
  alerts: Alert[];
  emerging: EmergingTopic[];
  communities: Community[];
}

export interface WatchTerm {
  term: string;
  weight: number;
}

export interface WatchTopic {
  id: string;
  label: string;
  origin: string;
  created_ts: number;
  terms: WatchTerm[];
}

export interface TopicMatch {
  id: string;
  ts: number;
  lat: number | null;
  lon: number | null;
}

export interface WatchTopicDetail extends WatchTopic {
  matches: TopicMatch[];
}

export interface ProductFilter {
  categories?: string[];
  topics?: string[];
  bbox?: Bbox;
  emotion?: string;
}

export interface Product {
  id: string;
  name: string;
  visibility: string;
  filters: ProductFilter[];
}

export interface MessagePayload {
  id: string;
  source: string;
  author: string;
  ts: number;
  text: string;
  lat: number | null;
  lon: number | null;
  topics: string[];
  categories: string[];
  emotion: { primary: string; intensity: number };
}

export type StreamEventKind = "message" | "alert" | "surface" | "emerging";

export interface StreamEvent {
  seq: number;
  kind: StreamEventKind;
  payload: Record<string, unknown>;
}

export interface FeedPage {
  events: StreamEvent[];
  latest_seq: number;
}

export type SectorColor = "red" | "green" | "neutral";

export interface GuidanceSector {
  color: SectorColor;
  danger_count: number;
  positive_count: number;
}

export interface Guidance {
  center: { lat: number; lon: number };
  radius_m: number;
  sectors: GuidanceSector[];
}

export interface Tracked {
  tracked: string[];
  positions: Record<string, { lat: number; lon: number; ts?: number }>;
}

export interface Health {
  status: string;
  applied: number;
  seq: number;
}

/** Plutchik's eight primaries in the service's fixed order. */
export const EMOTIONS = [
  "joy",
  "trust",
  "fear",
  "surprise",
  "sadness",
  "disgust",
  "anger",
  "anticipation",
] as const;

export const NEUTRAL = "neutral";

export const EMOTION_COLORS: Record<string, string> = {
  joy: "#f5c518",
  trust: "#8bc34a",
  fear: "#1b7a43",
  surprise: "#29b6f6",
  sadness: "#3f51b5",
  disgust: "#8e44ad",
  anger: "#e53935",
  anticipation: "#fb8c00",
  [NEUTRAL]: "#9e9e9e",
};

export class SchemaError extends Error {
  constructor(path: string, detail: string) {
    super(`schema mismatch at ${path}: ${detail}`);
    this.name = "SchemaError";
  }
}

function asObject(v: unknown, path: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new SchemaError(path, "expected object");
  }
  return v as Record<string, unknown>;
}

function asArray(v: unknown, path: string): unknown[] {
  if (!Array.isArray(v)) throw new SchemaError(path, "expected array");
  return v;
}

function asNumber(v: unknown, path: string): number {
  if (typeof v !== "number" || Number.isNaN(v)) {
    throw new SchemaError(path, "expected number");
  }
  return v;
}

function asNumberOrNull(v: unknown, path: string): number | null {
  return v === null || v === undefined ? null : asNumber(v, path);
}

function asString(v: unknown, path: string): string {
  if (typeof v !== "string") throw new SchemaError(path, "expected string");
  return v;
}

function asStrings(v: unknown, path: string): string[] {
  return asArray(v, path).map((x, i) => asString(x, `${path}[${i}]`));
}

function parseGrid(v: unknown, path: string): Grid {
  const o = asObject(v, path);
  const bbox = asArray(o.bbox, `${path}.bbox`);
  if (bbox.length !== 4) throw new SchemaError(`${path}.bbox`, "expected 4 numbers");
  return {
    bbox: bbox.map((x, i) => asNumber(x, `${path}.bbox[${i}]`)) as Bbox,
    nx: asNumber(o.nx, `${path}.nx`),
    ny: asNumber(o.ny, `${path}.ny`),
  };
}

function parseHeights(v: unknown, path: string): number[][] {
  return asArray(v, path).map((row, iy) =>
    asArray(row, `${path}[${iy}]`).map((h, ix) => asNumber(h, `${path}[${iy}][${ix}]`))
  );
}

export function parseSurface(v: unknown): Surface {
  const o = asObject(v, "surface");
  return {
    window_start: asNumberOrNull(o.window_start, "surface.window_start"),
    window_s: asNumber(o.window_s, "surface.window_s"),
    grid: parseGrid(o.grid, "surface.grid"),
    heights: parseHeights(o.heights, "surface.heights"),
  };
}

function parseAlert(v: unknown, path: string): Alert {
  const o = asObject(v, path);
  const kind = asString(o.kind, `${path}.kind`);
  if (kind !== "burst" && kind !== "gathering") {
    throw new SchemaError(`${path}.kind`, `unknown alert kind ${kind}`);
  }
  const alert: Alert = {
    kind,
    ix: asNumber(o.ix, `${path}.ix`),
    iy: asNumber(o.iy, `${path}.iy`),
    window_start: asNumber(o.window_start, `${path}.window_start`),
    window_s: asNumber(o.window_s, `${path}.window_s`),
    observed: asNumber(o.observed, `${path}.observed`),
    baseline: asNumber(o.baseline, `${path}.baseline`),
    ratio: asNumber(o.ratio, `${path}.ratio`),
  };
  if (o.seq !== undefined) alert.seq = asNumber(o.seq, `${path}.seq`);
  return alert;
}

export function parseAlertsPage(v: unknown): AlertsPage {
  const o = asObject(v, "alerts page");
  return {
    alerts: asArray(o.alerts, "alerts").map((a, i) => {
      const ev = asObject(a, `alerts[${i}]`);
      const kind = asString(ev.kind, `alerts[${i}].kind`);
      if (kind !== "alert") throw new SchemaError(`alerts[${i}].kind`, "expected alert event");
      return {
        seq: asNumber(ev.seq, `alerts[${i}].seq`),
        kind,
        payload: parseAlert(ev.payload, `alerts[${i}].payload`),
      };
    }),
    latest_seq: asNumber(o.latest_seq, "latest_seq"),
  };
}

function parseEmergingTopic(v: unknown, path: string): EmergingTopic {
  const o = asObject(v, path);
  return {
    topic: asString(o.topic, `${path}.topic`),
    ratio: asNumber(o.ratio, `${path}.ratio`),
    count: asNumber(o.count, `${path}.count`),
  };
}

export function parseEmergingPage(v: unknown): EmergingTopic[] {
  const o = asObject(v, "emerging page");
  return asArray(o.topics, "topics").map((t, i) => parseEmergingTopic(t, `topics[${i}]`));
}

export function parseSnapshot(v: unknown): Snapshot {
  const o = asObject(v, "snapshot");
  let window: Snapshot["window"] = null;
  if (o.window !== null && o.window !== undefined) {
    const w = asObject(o.window, "snapshot.window");
    window = {
      start: asNumber(w.start, "snapshot.window.start"),
      duration: asNumber(w.duration, "snapshot.window.duration"),
    };
  }
  const surface = asObject(o.surface, "snapshot.surface");
  return {
    window,
    surface: {
      grid: parseGrid(surface.grid, "snapshot.surface.grid"),
      heights: parseHeights(surface.heights, "snapshot.surface.heights"),
    },
    alerts: asArray(o.alerts, "snapshot.alerts").map((a, i) =>
      parseAlert(a, `snapshot.alerts[${i}]`)
    ),
    emerging: asArray(o.emerging, "snapshot.emerging").map((t, i) =>
      parseEmergingTopic(t, `snapshot.emerging[${i}]`)
    ),
    communities: asArray(o.communities, "snapshot.communities").map((c, i) => {
      const co = asObject(c, `snapshot.communities[${i}]`);
      return {
        members: asStrings(co.members, `snapshot.communities[${i}].members`),
        internal_weight: asNumber(
          co.internal_weight,
          `snapshot.communities[${i}].internal_weight`
        ),
      };
    }),
  };
}

function parseWatchTerm(v: unknown, path: string): WatchTerm {
  const o = asObject(v, path);
  return {
    term: asString(o.term, `${path}.term`),
    weight: asNumber(o.weight, `${path}.weight`),
  };
}

export function parseWatchTopic(v: unknown, path = "watch topic"): WatchTopic {
  const o = asObject(v, path);
  return {
    id: asString(o.id, `${path}.id`),
    label: asString(o.label, `${path}.label`),
    origin: asString(o.origin, `${path}.origin`),
    created_ts: asNumber(o.created_ts, `${path}.created_ts`),
    terms: asArray(o.terms, `${path}.terms`).map((t, i) =>
      parseWatchTerm(t, `${path}.terms[${i}]`)
    ),
  };
}

export function parseWatchTopicsPage(v: unknown): WatchTopic[] {
  const o = asObject(v, "watch topics page");
  return asArray(o.watch_topics, "watch_topics").map((t, i) =>
    parseWatchTopic(t, `watch_topics[${i}]`)
  );
}

export function parseWatchTopicDetail(v: unknown): WatchTopicDetail {
  const topic = parseWatchTopic(v, "watch topic");
  const o = asObject(v, "watch topic");
  const matches = asArray(o.matches, "matches").map((m, i) => {
    const mo = asObject(m, `matches[${i}]`);
    return {
      id: asString(mo.id, `matches[${i}].id`),
      ts: asNumber(mo.ts, `matches[${i}].ts`),
      lat: asNumberOrNull(mo.lat, `matches[${i}].lat`),
      lon: asNumberOrNull(mo.lon, `matches[${i}].lon`),
    };
  });
  return { ...topic, matches };
}

function parseFilter(v: unknown, path: string): ProductFilter {
  const o = asObject(v, path);
  const f: ProductFilter = {};
  if (o.categories !== undefined) f.categories = asStrings(o.categories, `${path}.categories`);
  if (o.topics !== undefined) f.topics = asStrings(o.topics, `${path}.topics`);
  if (o.emotion !== undefined) f.emotion = asString(o.emotion, `${path}.emotion`);
  if (o.bbox !== undefined) {
    const bbox = asArray(o.bbox, `${path}.bbox`);
    if (bbox.length !== 4) throw new SchemaError(`${path}.bbox`, "expected 4 numbers");
    f.bbox = bbox.map((x, i) => asNumber(x, `${path}.bbox[${i}]`)) as Bbox;
  }
  return f;
}

export function parseProduct(v: unknown, path = "product"): Product {
  const o = asObject(v, path);
  return {
    id: asString(o.id, `${path}.id`),
    name: asString(o.name, `${path}.name`),
    visibility: asString(o.visibility, `${path}.visibility`),
    filters: asArray(o.filters, `${path}.filters`).map((f, i) =>
      parseFilter(f, `${path}.filters[${i}]`)
    ),
  };
}

export function parseProductsPage(v: unknown): Product[] {
  const o = asObject(v, "products page");
  return asArray(o.products, "products").map((p, i) => parseProduct(p, `products[${i}]`));
}

const STREAM_KINDS: readonly string[] = ["message", "alert", "surface", "emerging"];

export function parseStreamEvent(v: unknown, path = "event"): StreamEvent {
  const o = asObject(v, path);
  const kind = asString(o.kind, `${path}.kind`);
  if (!STREAM_KINDS.includes(kind)) {
    throw new SchemaError(`${path}.kind`, `unknown event kind ${kind}`);
  }
  return {
    seq: asNumber(o.seq, `${path}.seq`),
    kind: kind as StreamEventKind,
    payload: asObject(o.payload, `${path}.payload`),
  };
}

export function parseFeedPage(v: unknown): FeedPage {
  const o = asObject(v, "feed page");
  return {
    events: asArray(o.events, "events").map((e, i) => parseStreamEvent(e, `events[${i}]`)),
    latest_seq: asNumber(o.latest_seq, "latest_seq"),
  };
}

/** Narrow a stream/feed payload to the message fields the map needs. */
export function parseMessagePayload(v: unknown, path = "message"): MessagePayload {
  const o = asObject(v, path);
  const emotion = asObject(o.emotion, `${path}.emotion`);
  return {
    id: asString(o.id, `${path}.id`),
    source: asString(o.source, `${path}.source`),
    author: asString(o.author, `${path}.author`),
    ts: asNumber(o.ts, `${path}.ts`),
    text: asString(o.text, `${path}.text`),
    lat: asNumberOrNull(o.lat, `${path}.lat`),
    lon: asNumberOrNull(o.lon, `${path}.lon`),
    topics: asStrings(o.topics, `${path}.topics`),
    categories: asStrings(o.categories, `${path}.categories`),
    emotion: {
      primary: asString(emotion.primary, `${path}.emotion.primary`),
      intensity: asNumber(emotion.intensity, `${path}.emotion.intensity`),
    },
  };
}

export function parseGuidance(v: unknown): Guidance {
  const o = asObject(v, "guidance");
  const center = asObject(o.center, "guidance.center");
  return {
    center: {
      lat: asNumber(center.lat, "guidance.center.lat"),
      lon: asNumber(center.lon, "guidance.center.lon"),
    },
    radius_m: asNumber(o.radius_m, "guidance.radius_m"),
    sectors: asArray(o.sectors, "guidance.sectors").map((s, i) => {
      const so = asObject(s, `guidance.sectors[${i}]`);
      const color = asString(so.color, `guidance.sectors[${i}].color`);
      if (color !== "red" && color !== "green" && color !== "neutral") {
        throw new SchemaError(`guidance.sectors[${i}].color`, `unknown color ${color}`);
      }
      return {
        color,
        danger_count: asNumber(so.danger_count, `guidance.sectors[${i}].danger_count`),
        positive_count: asNumber(so.positive_count, `guidance.sectors[${i}].positive_count`),
      };
    }),
  };
}

export function parseTracked(v: unknown): Tracked {
  const o = asObject(v, "tracked");
  const positions: Tracked["positions"] = {};
  for (const [user, pos] of Object.entries(asObject(o.positions, "positions"))) {
    const po = asObject(pos, `positions.${user}`);
    positions[user] = {
      lat: asNumber(po.lat, `positions.${user}.lat`),
      lon: asNumber(po.lon, `positions.${user}.lon`),
      ...(po.ts !== undefined ? { ts: asNumber(po.ts, `positions.${user}.ts`) } : {}),
    };
  }
  return { tracked: asStrings(o.tracked, "tracked"), positions };
}

export function parseHealth(v: unknown): Health {
  const o = asObject(v, "health");
  return {
    status: asString(o.status, "health.status"),
    applied: asNumber(o.applied, "health.applied"),
    seq: asNumber(o.seq, "health.seq"),
  };
}
