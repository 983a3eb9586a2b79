/** Console view state.
 *
 * Holds exactly what the service last returned plus presentation choices
 * (selected window, layer toggles, viewport). Map layers draw from the last
 * fetched snapshot; the message layer draws from the bounded live buffer the
 * stream fills. Nothing in here computes analytics.
 */

import {
  Bbox,
  EmergingTopic,
  Guidance,
  Health,
  MessagePayload,
  Product,
  Snapshot,
  StreamEvent,
  Surface,
  TopicMatch,
  Tracked,
  WatchTopic,
  parseMessagePayload,
} from "./types.js";

export interface Viewport {
  minLat: number;
  minLon: number;
  maxLat: number;
  maxLon: number;
}

export interface LayerToggles {
  surface: boolean;
  alerts: boolean;
  messages: boolean;
  emotions: boolean;
}

/** Live messages kept for the map layer; older ones scroll off. */
export const RECENT_MESSAGE_LIMIT = 200;

export interface ViewState {
  selectedWindow: number | null; // null follows the latest window
  layers: LayerToggles;
  selectedProduct: string | null;
  viewport: Viewport | null; // null until the first grid arrives
  snapshot: Snapshot | null;
  surface: Surface | null;
  emerging: EmergingTopic[];
  watchTopics: WatchTopic[];
  watchLayers: Record<string, TopicMatch[]>; // topic id -> service-provided matches
  products: Product[];
  feed: { productId: string; events: StreamEvent[]; latestSeq: number } | null;
  recentMessages: MessagePayload[];
  guidance: Guidance | null;
  tracked: Tracked | null;
  health: Health | null;
  lastSeq: number; // stream resume cursor
  snapshotStale: boolean; // a stream event invalidated the fetched snapshot
  banner: string | null; // service-unreachable notice
  promoteError: string | null; // inline conflict message in the emerging panel
  composeError: string | null;
}

export function initialViewState(): ViewState {
  return {
    selectedWindow: null,
    layers: { surface: true, alerts: true, messages: true, emotions: true },
    selectedProduct: null,
    viewport: null,
    snapshot: null,
    surface: null,
    emerging: [],
    watchTopics: [],
    watchLayers: {},
    products: [],
    feed: null,
    recentMessages: [],
    guidance: null,
    tracked: null,
    health: null,
    lastSeq: 0,
    snapshotStale: false,
    banner: null,
    promoteError: null,
    composeError: null,
  };
}

export function viewportFromBbox(bbox: Bbox): Viewport {
  return { minLat: bbox[0], minLon: bbox[1], maxLat: bbox[2], maxLon: bbox[3] };
}

/**
 * Keep the viewport inside the instance bbox: shrink it if it is larger than
 * the instance, then shift it back inside without resizing.
 */
export function clampViewport(vp: Viewport, bbox: Bbox): Viewport {
  const [minLat, minLon, maxLat, maxLon] = bbox;
  let height = Math.min(vp.maxLat - vp.minLat, maxLat - minLat);
  let width = Math.min(vp.maxLon - vp.minLon, maxLon - minLon);
  height = Math.max(height, 0);
  width = Math.max(width, 0);
  let south = vp.minLat;
  let west = vp.minLon;
  if (south < minLat) south = minLat;
  if (south + height > maxLat) south = maxLat - height;
  if (west < minLon) west = minLon;
  if (west + width > maxLon) west = maxLon - width;
  return { minLat: south, minLon: west, maxLat: south + height, maxLon: west + width };
}

export function toggleLayer(state: ViewState, layer: keyof LayerToggles): void {
  state.layers[layer] = !state.layers[layer];
}

/**
 * Fold one stream event into the state. Message payloads feed the live map
 * buffer; alert, surface, and emerging events mark the fetched snapshot stale
 * so the controller refetches it (layers render fetched data only).
 */
export function applyStreamEvent(state: ViewState, ev: StreamEvent): void {
  if (ev.seq > state.lastSeq) state.lastSeq = ev.seq;
  if (ev.kind === "message") {
    state.recentMessages.push(parseMessagePayload(ev.payload, `event ${ev.seq}`));
    if (state.recentMessages.length > RECENT_MESSAGE_LIMIT) {
      state.recentMessages.splice(0, state.recentMessages.length - RECENT_MESSAGE_LIMIT);
    }
  } else {
    state.snapshotStale = true;
  }
}
