/** Rendering contract over the captured fixtures: the map draws the snapshot
 * as delivered, the legend lists all nine emotion keys, and every number a
 * person can read in the output exists in a service response.
 */

import { describe, expect, it } from "vitest";

import {
  renderAlertMarkers,
  renderCommunities,
  renderEmergingPanel,
  renderEmotionLegend,
  renderFeedPreview,
  renderGuidanceRose,
  renderHealth,
  renderMessageLayer,
  renderSurfaceLayer,
  renderTrackedPanel,
  renderWatchLayer,
  renderWatchList,
  renderWindowPicker,
} from "../src/render.js";
import { viewportFromBbox } from "../src/state.js";
import {
  parseEmergingPage,
  parseGuidance,
  parseHealth,
  parseMessagePayload,
  parseSnapshot,
  parseSurface,
  parseTracked,
  parseWatchTopicDetail,
  EMOTIONS,
  EMOTION_COLORS,
} from "../src/types.js";
import { collectNumbers, FIXTURES, visibleNumbers, visibleText } from "./fixture_server.js";

const snapshot = parseSnapshot(FIXTURES.snapshot);
const viewport = viewportFromBbox(snapshot.surface.grid.bbox);

function countMatches(html: string, pattern: RegExp): number {
  return (html.match(pattern) ?? []).length;
}

describe("alert markers", () => {
  const html = renderAlertMarkers(snapshot.alerts, snapshot.surface.grid, viewport);

  it("draws one marker per alert in the snapshot", () => {
    expect(countMatches(html, /class="alert-marker/g)).toBe(snapshot.alerts.length);
  });

  it("draws exactly three gathering markers at the gathering cells", () => {
    expect(countMatches(html, /data-kind="gathering"/g)).toBe(3);
    const expected = snapshot.alerts
      .filter((a) => a.kind === "gathering")
      .map((a) => `data-ix="${a.ix}" data-iy="${a.iy}" data-window-start="${a.window_start}"`);
    expect(expected).toHaveLength(3);
    for (const cell of expected) {
      const gatheringMarker = new RegExp(`data-kind="gathering" ${cell}`);
      expect(html).toMatch(gatheringMarker);
    }
  });

  it("distinguishes burst markers by class", () => {
    const bursts = snapshot.alerts.filter((a) => a.kind === "burst").length;
    expect(countMatches(html, /alert-burst/g)).toBe(bursts);
  });

  it("places markers inside the canvas", () => {
    for (const m of html.matchAll(/cx="([\d.]+)" cy="([\d.]+)"/g)) {
      expect(Number(m[1])).toBeGreaterThanOrEqual(0);
      expect(Number(m[1])).toBeLessThanOrEqual(640);
      expect(Number(m[2])).toBeGreaterThanOrEqual(0);
      expect(Number(m[2])).toBeLessThanOrEqual(640);
    }
  });
});

describe("heat surface", () => {
  it("draws one cell per nonzero height, counts carried verbatim", () => {
    const surface = parseSurface(FIXTURES.surface);
    const html = renderSurfaceLayer(surface.grid, surface.heights, viewport);
    const nonzero = surface.heights.flat().filter((h) => h > 0).length;
    expect(countMatches(html, /<rect class="cell"/g)).toBe(nonzero);
    for (const m of html.matchAll(/data-count="(\d+)"/g)) {
      expect(surface.heights.flat()).toContain(Number(m[1]));
    }
  });

  it("renders the empty state with no cells and no markers", () => {
    const empty = parseSnapshot(FIXTURES.emptySnapshot);
    const vp = viewportFromBbox(empty.surface.grid.bbox);
    const surfaceHtml = renderSurfaceLayer(empty.surface.grid, empty.surface.heights, vp);
    expect(countMatches(surfaceHtml, /<rect/g)).toBe(0);
    const markersHtml = renderAlertMarkers(empty.alerts, empty.surface.grid, vp);
    expect(countMatches(markersHtml, /alert-marker/g)).toBe(0);
  });
});

describe("emotion legend", () => {
  const html = renderEmotionLegend();

  it("lists the eight primaries plus neutral, in order", () => {
    const entries = [...html.matchAll(/data-emotion="([a-z]+)"/g)].map((m) => m[1]);
    expect(entries).toEqual([...EMOTIONS, "neutral"]);
    expect(entries).toHaveLength(9);
  });

  it("gives every entry its palette swatch", () => {
    for (const e of [...EMOTIONS, "neutral"]) {
      expect(html).toContain(`background:${EMOTION_COLORS[e]}`);
    }
  });
});

describe("message layer", () => {
  const messages = FIXTURES.streamTail
    .filter((e) => e.kind === "message")
    .map((e) => parseMessagePayload(e.payload));

  it("colors dots by the emotion the service assigned", () => {
    const html = renderMessageLayer(messages, viewport, true);
    const located = messages.filter((m) => m.lat !== null && m.lon !== null);
    expect(countMatches(html, /msg-dot/g)).toBe(located.length);
    for (const m of located) {
      expect(html).toContain(`data-emotion="${m.emotion.primary}"`);
    }
  });

  it("skips unlocated messages", () => {
    const unlocated = messages.map((m) => ({ ...m, lat: null, lon: null }));
    const html = renderMessageLayer(unlocated, viewport, true);
    expect(countMatches(html, /msg-dot/g)).toBe(0);
  });

  it("falls back to neutral color when the emotion layer is off", () => {
    const html = renderMessageLayer(messages, viewport, false);
    for (const m of html.matchAll(/fill="(#[0-9a-f]{6})"/g)) {
      expect(m[1]).toBe(EMOTION_COLORS.neutral);
    }
  });
});

describe("panels", () => {
  it("emerging panel shows ratio and count verbatim with promote buttons", () => {
    const topics = parseEmergingPage(FIXTURES.emerging);
    const html = renderEmergingPanel(topics, null);
    for (const t of topics) {
      expect(html).toContain(`data-topic="${t.topic}"`);
      expect(visibleText(html)).toContain(String(t.ratio));
      expect(visibleText(html)).toContain(String(t.count));
    }
    expect(countMatches(html, /class="promote"/g)).toBe(topics.length);
    expect(html).not.toContain("inline-error");
  });

  it("emerging panel shows the inline conflict message", () => {
    const topics = parseEmergingPage(FIXTURES.emerging);
    const html = renderEmergingPanel(topics, FIXTURES.watchTopicConflict.error as string);
    expect(html).toContain("promote-error");
    expect(visibleText(html)).toContain("already exists");
  });

  it("watch layer draws only located matches", () => {
    const detail = parseWatchTopicDetail(FIXTURES.watchTopicLayer);
    const html = renderWatchLayer(detail.id, detail.matches, viewport);
    const located = detail.matches.filter((m) => m.lat !== null).length;
    expect(located).toBeGreaterThan(0);
    expect(countMatches(html, /watch-mark/g)).toBe(located);
  });

  it("guidance rose paints one wedge per sector in the served colors", () => {
    const guidance = parseGuidance(FIXTURES.guidance);
    const html = renderGuidanceRose(guidance);
    expect(countMatches(html, /class="sector /g)).toBe(guidance.sectors.length);
    const served = guidance.sectors.map((s) => s.color);
    const drawn = [...html.matchAll(/data-color="(\w+)"/g)].map((m) => m[1]);
    expect(drawn).toEqual(served);
    for (const s of guidance.sectors) {
      if (s.color === "red") {
        expect(html).toContain(`data-danger-count="${s.danger_count}"`);
      }
    }
  });

  it("communities render every member on the ring with the served weight", () => {
    const html = renderCommunities(snapshot.communities);
    const members = snapshot.communities[0].members;
    expect(countMatches(html, /class="member"/g)).toBe(members.length);
    for (const m of members) expect(html).toContain(`data-author="${m}"`);
    expect(visibleText(html)).toContain(
      `weight ${snapshot.communities[0].internal_weight}`
    );
  });

  it("window picker lists served window starts only", () => {
    const starts = [...new Set(snapshot.alerts.map((a) => a.window_start))].sort(
      (a, b) => a - b
    );
    const html = renderWindowPicker(starts, starts[0]);
    expect(countMatches(html, /<option/g)).toBe(starts.length + 1); // plus "latest"
    expect(html).toContain(`value="${starts[0]}" selected`);
  });
});

describe("no client-side analytics", () => {
  it("every visible number in every panel exists in a service response", () => {
    const sources = collectNumbers([
      FIXTURES.snapshot,
      FIXTURES.surface,
      FIXTURES.emerging,
      FIXTURES.guidance,
      FIXTURES.health,
      FIXTURES.watchTopicLayer,
      FIXTURES.feedViolence,
      FIXTURES.streamTail,
      FIXTURES.watchTopicConflict,
    ]);
    const surface = parseSurface(FIXTURES.surface);
    const guidance = parseGuidance(FIXTURES.guidance);
    const detail = parseWatchTopicDetail(FIXTURES.watchTopicLayer);
    const messages = FIXTURES.streamTail
      .filter((e) => e.kind === "message")
      .map((e) => parseMessagePayload(e.payload));
    const feed = {
      productId: "prod-violence",
      events: FIXTURES.feedViolence.events,
      latestSeq: FIXTURES.feedViolence.latest_seq as number,
    };
    const panels = [
      renderSurfaceLayer(surface.grid, surface.heights, viewport),
      renderAlertMarkers(snapshot.alerts, snapshot.surface.grid, viewport),
      renderMessageLayer(messages, viewport, true),
      renderWatchLayer(detail.id, detail.matches, viewport),
      renderEmotionLegend(),
      renderEmergingPanel(parseEmergingPage(FIXTURES.emerging), null),
      renderWatchList([detail]),
      renderFeedPreview(feed),
      renderGuidanceRose(guidance),
      renderCommunities(snapshot.communities),
      renderTrackedPanel(parseTracked(FIXTURES.tracked)),
      renderHealth(parseHealth(FIXTURES.health)),
      renderWindowPicker(
        [...new Set(snapshot.alerts.map((a) => a.window_start))],
        null
      ),
    ];
    let checked = 0;
    for (const html of panels) {
      for (const token of visibleNumbers(html)) {
        expect(
          sources.has(token),
          `rendered number ${token} has no service source`
        ).toBe(true);
        checked += 1;
      }
    }
    expect(checked).toBeGreaterThan(50); // the sweep saw real content
  });
});
