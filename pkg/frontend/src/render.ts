/** Pure renderers: service payloads in, HTML/SVG strings out.
 *
 * Every number these functions print is copied verbatim from a service
 * response (String(n) on the parsed value, no arithmetic). The only math here
 * is geometry: placing cells, markers, and wedges on screen.
 */

import { Viewport } from "./state.js";
import {
  Alert,
  Community,
  EMOTIONS,
  EMOTION_COLORS,
  EmergingTopic,
  Grid,
  Guidance,
  Health,
  MessagePayload,
  NEUTRAL,
  Product,
  StreamEvent,
  TopicMatch,
  Tracked,
  WatchTopic,
} from "./types.js";

export const MAP_WIDTH = 640;
export const MAP_HEIGHT = 640;

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(s: string): string {
  return s.replace(/[&<>"']/g, (c) => ESCAPES[c]);
}

/** Verbatim numeric display; rendering never reformats service numbers. */
function num(n: number): string {
  return String(n);
}

interface Projection {
  x: (lon: number) => number;
  y: (lat: number) => number;
}

function projection(vp: Viewport, width: number, height: number): Projection {
  const lonSpan = vp.maxLon - vp.minLon || 1;
  const latSpan = vp.maxLat - vp.minLat || 1;
  return {
    x: (lon) => ((lon - vp.minLon) / lonSpan) * width,
    y: (lat) => height - ((lat - vp.minLat) / latSpan) * height, // north up
  };
}

function cellCenter(grid: Grid, ix: number, iy: number): { lat: number; lon: number } {
  const [minLat, minLon, maxLat, maxLon] = grid.bbox;
  return {
    lat: minLat + ((iy + 0.5) * (maxLat - minLat)) / grid.ny,
    lon: minLon + ((ix + 0.5) * (maxLon - minLon)) / grid.nx,
  };
}

/**
 * Heat surface as one SVG rect per occupied cell. Opacity scales with the
 * tallest cell in view so the ramp fills the range; the height itself is
 * carried verbatim in data-count.
 */
export function renderSurfaceLayer(
  grid: Grid,
  heights: number[][],
  vp: Viewport,
  width = MAP_WIDTH,
  height = MAP_HEIGHT
): string {
  const proj = projection(vp, width, height);
  let max = 0;
  for (const row of heights) for (const h of row) if (h > max) max = h;
  const cellW = ((grid.bbox[3] - grid.bbox[1]) / grid.nx / (vp.maxLon - vp.minLon)) * width;
  const cellH = ((grid.bbox[2] - grid.bbox[0]) / grid.ny / (vp.maxLat - vp.minLat)) * height;
  const rects: string[] = [];
  heights.forEach((row, iy) => {
    row.forEach((count, ix) => {
      if (count <= 0) return;
      const c = cellCenter(grid, ix, iy);
      const opacity = (0.15 + 0.85 * (count / max)).toFixed(3);
      rects.push(
        `<rect class="cell" data-ix="${ix}" data-iy="${iy}" data-count="${num(count)}" ` +
          `x="${(proj.x(c.lon) - cellW / 2).toFixed(1)}" y="${(proj.y(c.lat) - cellH / 2).toFixed(1)}" ` +
          `width="${cellW.toFixed(1)}" height="${cellH.toFixed(1)}" ` +
          `fill="#d84315" fill-opacity="${opacity}"/>`
      );
    });
  });
  return `<g class="layer-surface">${rects.join("")}</g>`;
}

/** One marker per alert at its cell center; gatherings and bursts differ by class. */
export function renderAlertMarkers(
  alerts: Alert[],
  grid: Grid,
  vp: Viewport,
  width = MAP_WIDTH,
  height = MAP_HEIGHT
): string {
  const proj = projection(vp, width, height);
  const markers = alerts.map((a) => {
    const c = cellCenter(grid, a.ix, a.iy);
    const x = proj.x(c.lon).toFixed(1);
    const y = proj.y(c.lat).toFixed(1);
    const title =
      `${a.kind}: observed ${num(a.observed)}, baseline ${num(a.baseline)}, ` +
      `ratio ${num(a.ratio)}, window ${num(a.window_start)}`;
    const common =
      `class="alert-marker alert-${a.kind}" data-kind="${a.kind}" ` +
      `data-ix="${num(a.ix)}" data-iy="${num(a.iy)}" data-window-start="${num(a.window_start)}"`;
    if (a.kind === "gathering") {
      return (
        `<circle ${common} cx="${x}" cy="${y}" r="9" fill="none" ` +
        `stroke="#c62828" stroke-width="3"><title>${escapeHtml(title)}</title></circle>`
      );
    }
    return (
      `<path ${common} d="M ${x} ${y} m 0 -8 l 7 8 l -7 8 l -7 -8 z" ` +
      `fill="#ef6c00"><title>${escapeHtml(title)}</title></path>`
    );
  });
  return `<g class="layer-alerts">${markers.join("")}</g>`;
}

/** Live message dots, colored by the emotion the service assigned. */
export function renderMessageLayer(
  messages: MessagePayload[],
  vp: Viewport,
  emotionColors: boolean,
  width = MAP_WIDTH,
  height = MAP_HEIGHT
): string {
  const proj = projection(vp, width, height);
  const dots: string[] = [];
  for (const m of messages) {
    if (m.lat === null || m.lon === null) continue; // nothing to place
    const color = emotionColors
      ? (EMOTION_COLORS[m.emotion.primary] ?? EMOTION_COLORS[NEUTRAL])
      : EMOTION_COLORS[NEUTRAL];
    dots.push(
      `<circle class="msg-dot" data-id="${escapeHtml(m.id)}" data-emotion="${escapeHtml(m.emotion.primary)}" ` +
        `cx="${proj.x(m.lon).toFixed(1)}" cy="${proj.y(m.lat).toFixed(1)}" r="3" ` +
        `fill="${color}"><title>${escapeHtml(m.text)}</title></circle>`
    );
  }
  return `<g class="layer-messages">${dots.join("")}</g>`;
}

/** Markers for one watch topic's matching messages (located matches only). */
export function renderWatchLayer(
  topicId: string,
  matches: TopicMatch[],
  vp: Viewport,
  width = MAP_WIDTH,
  height = MAP_HEIGHT
): string {
  const proj = projection(vp, width, height);
  const marks: string[] = [];
  for (const m of matches) {
    if (m.lat === null || m.lon === null) continue;
    marks.push(
      `<rect class="watch-mark" data-id="${escapeHtml(m.id)}" ` +
        `x="${(proj.x(m.lon) - 3).toFixed(1)}" y="${(proj.y(m.lat) - 3).toFixed(1)}" ` +
        `width="6" height="6" fill="#00838f"/>`
    );
  }
  return `<g class="layer-watch" data-topic="${escapeHtml(topicId)}">${marks.join("")}</g>`;
}

/** The fixed emotion key: Plutchik's eight primaries plus the neutral fallback. */
export function renderEmotionLegend(): string {
  const entries = [...EMOTIONS, NEUTRAL].map(
    (e) =>
      `<li class="legend-entry" data-emotion="${e}">` +
      `<span class="swatch" style="background:${EMOTION_COLORS[e]}"></span>${e}</li>`
  );
  return `<ul class="emotion-legend">${entries.join("")}</ul>`;
}

export function renderEmergingPanel(topics: EmergingTopic[], promoteError: string | null): string {
  const rows = topics.map(
    (t) =>
      `<tr data-topic="${escapeHtml(t.topic)}"><td>${escapeHtml(t.topic)}</td>` +
      `<td>${num(t.ratio)}</td><td>${num(t.count)}</td>` +
      `<td><button class="promote" data-topic="${escapeHtml(t.topic)}">promote</button></td></tr>`
  );
  const error = promoteError
    ? `<p class="inline-error promote-error">${escapeHtml(promoteError)}</p>`
    : "";
  const body = rows.length
    ? `<table><thead><tr><th>topic</th><th>ratio</th><th>count</th><th></th></tr></thead>` +
      `<tbody>${rows.join("")}</tbody></table>`
    : `<p class="empty">no emerging topics</p>`;
  return `<section class="emerging-panel">${body}${error}</section>`;
}

export function renderWatchList(topics: WatchTopic[]): string {
  const rows = topics.map(
    (t) =>
      `<li data-id="${escapeHtml(t.id)}"><span class="label">${escapeHtml(t.label)}</span> ` +
      `<span class="origin">${escapeHtml(t.origin)}</span> ` +
      `<button class="drop-topic" data-id="${escapeHtml(t.id)}">remove</button></li>`
  );
  return `<ul class="watch-list">${rows.join("")}</ul>`;
}

export function renderProductsPanel(
  products: Product[],
  selectedProduct: string | null,
  composeFilterCount: number,
  composeError: string | null
): string {
  const rows = products.map((p) => {
    const selected = p.id === selectedProduct ? ' class="selected"' : "";
    return (
      `<li${selected} data-id="${escapeHtml(p.id)}">` +
      `<button class="pick-product" data-id="${escapeHtml(p.id)}">${escapeHtml(p.name)}</button>` +
      ` <span class="visibility">${escapeHtml(p.visibility)}</span></li>`
    );
  });
  // Submit stays disabled until at least one filter is selected.
  const disabled = composeFilterCount > 0 ? "" : " disabled";
  const error = composeError ? `<p class="inline-error">${escapeHtml(composeError)}</p>` : "";
  return (
    `<section class="products-panel"><ul class="product-list">${rows.join("")}</ul>` +
    `<form class="compose"><input name="name" placeholder="product name"/>` +
    `<button type="submit" class="compose-submit"${disabled}>create</button></form>${error}</section>`
  );
}

export function renderFeedPreview(
  feed: { productId: string; events: StreamEvent[]; latestSeq: number } | null,
  tail = 20
): string {
  if (!feed) return `<section class="feed-preview empty">no product selected</section>`;
  const rows = feed.events.slice(-tail).map((ev) => {
    const p = ev.payload as Record<string, unknown>;
    const id = typeof p.id === "string" ? p.id : "";
    const text = typeof p.text === "string" ? p.text : "";
    const ts = typeof p.ts === "number" ? num(p.ts) : "";
    return (
      `<li data-seq="${num(ev.seq)}"><code>${escapeHtml(id)}</code> ` +
      `<time>${ts}</time> ${escapeHtml(text)}</li>`
    );
  });
  return (
    `<section class="feed-preview" data-product="${escapeHtml(feed.productId)}" ` +
    `data-latest-seq="${num(feed.latestSeq)}"><ul>${rows.join("")}</ul></section>`
  );
}

/** Sector guidance as a compass rose; wedge colors come straight off the wire. */
export function renderGuidanceRose(guidance: Guidance | null, size = 180): string {
  if (!guidance) return `<section class="guidance empty">no guidance loaded</section>`;
  const cx = size / 2;
  const cy = size / 2;
  const r = size / 2 - 6;
  const n = guidance.sectors.length;
  const fills: Record<string, string> = { red: "#c62828", green: "#2e7d32", neutral: "#b0bec5" };
  const wedges = guidance.sectors.map((s, i) => {
    // Sector 0 faces north; bearings grow clockwise.
    const a0 = ((i * 360) / n - 90) * (Math.PI / 180);
    const a1 = (((i + 1) * 360) / n - 90) * (Math.PI / 180);
    const x0 = (cx + r * Math.cos(a0)).toFixed(2);
    const y0 = (cy + r * Math.sin(a0)).toFixed(2);
    const x1 = (cx + r * Math.cos(a1)).toFixed(2);
    const y1 = (cy + r * Math.sin(a1)).toFixed(2);
    const title = `${s.color}: danger ${num(s.danger_count)}, positive ${num(s.positive_count)}`;
    return (
      `<path class="sector sector-${s.color}" data-color="${s.color}" data-index="${i}" ` +
      `data-danger-count="${num(s.danger_count)}" data-positive-count="${num(s.positive_count)}" ` +
      `d="M ${cx} ${cy} L ${x0} ${y0} A ${r} ${r} 0 0 1 ${x1} ${y1} Z" ` +
      `fill="${fills[s.color]}" stroke="#fff"><title>${escapeHtml(title)}</title></path>`
    );
  });
  return (
    `<svg class="guidance-rose" viewBox="0 0 ${size} ${size}" ` +
    `data-center-lat="${num(guidance.center.lat)}" data-center-lon="${num(guidance.center.lon)}" ` +
    `data-radius-m="${num(guidance.radius_m)}">${wedges.join("")}</svg>`
  );
}

/** Communities drawn as rings of members; positions are layout, weight is data. */
export function renderCommunities(communities: Community[], size = 180): string {
  const groups = communities.map((c, gi) => {
    const cx = size / 2;
    const cy = size / 2;
    const r = size / 2 - 24;
    const nodes = c.members.map((member, i) => {
      const angle = (2 * Math.PI * i) / c.members.length - Math.PI / 2;
      const x = (cx + r * Math.cos(angle)).toFixed(2);
      const y = (cy + r * Math.sin(angle)).toFixed(2);
      return (
        `<g class="member" data-author="${escapeHtml(member)}">` +
        `<circle cx="${x}" cy="${y}" r="5" fill="#5c6bc0"/>` +
        `<text x="${x}" y="${y}" dy="-8" text-anchor="middle">${escapeHtml(member)}</text></g>`
      );
    });
    return (
      `<svg class="community" data-index="${gi}" data-weight="${num(c.internal_weight)}" ` +
      `viewBox="0 0 ${size} ${size}">${nodes.join("")}` +
      `<text class="weight" x="${cx}" y="${cy}" text-anchor="middle">weight ${num(c.internal_weight)}</text></svg>`
    );
  });
  return `<section class="communities">${groups.join("")}</section>`;
}

export function renderTrackedPanel(tracked: Tracked | null): string {
  if (!tracked || tracked.tracked.length === 0) {
    return `<section class="tracked empty">no tracked users</section>`;
  }
  const rows = tracked.tracked.map((user) => {
    const pos = tracked.positions[user];
    const where = pos ? `<span class="pos">${num(pos.lat)}, ${num(pos.lon)}</span>` : "";
    return `<li data-user="${escapeHtml(user)}">${escapeHtml(user)} ${where}</li>`;
  });
  return `<section class="tracked"><ul>${rows.join("")}</ul></section>`;
}

export function renderBanner(banner: string | null): string {
  return banner
    ? `<div class="banner error" role="alert">${escapeHtml(banner)}</div>`
    : `<div class="banner hidden"></div>`;
}

export function renderHealth(health: Health | null): string {
  if (!health) return `<span class="health unknown">status unknown</span>`;
  return (
    `<span class="health" data-status="${escapeHtml(health.status)}">` +
    `${escapeHtml(health.status)} · applied ${num(health.applied)} · seq ${num(health.seq)}</span>`
  );
}

/** Window picker options come from window starts the service reported. */
export function renderWindowPicker(
  windowStarts: number[],
  selected: number | null
): string {
  const options = [
    `<option value=""${selected === null ? " selected" : ""}>latest</option>`,
    ...windowStarts.map(
      (ws) =>
        `<option value="${num(ws)}"${selected === ws ? " selected" : ""}>${num(ws)}</option>`
    ),
  ];
  return `<select class="window-picker">${options.join("")}</select>`;
}
