/** Console controller: fetch, mutate, and render without touching the DOM.
 *
 * main.ts injects the rendered strings into the page; the contract tests
 * drive this class directly against a fixture server. All data flows through
 * the ApiClient, so anything on screen traces back to a service response.
 */

import { ApiClient, ApiError, openStream, StreamHandle } from "./api.js";
import {
  applyStreamEvent,
  clampViewport,
  initialViewState,
  viewportFromBbox,
  ViewState,
} from "./state.js";
import {
  renderAlertMarkers,
  renderBanner,
  renderCommunities,
  renderEmergingPanel,
  renderEmotionLegend,
  renderFeedPreview,
  renderGuidanceRose,
  renderHealth,
  renderMessageLayer,
  renderProductsPanel,
  renderSurfaceLayer,
  renderTrackedPanel,
  renderWatchLayer,
  renderWatchList,
  renderWindowPicker,
  MAP_HEIGHT,
  MAP_WIDTH,
} from "./render.js";
import { ProductFilter } from "./types.js";

export const UNREACHABLE_BANNER = "service unreachable, retrying";

export interface Panels {
  banner: string;
  health: string;
  map: string;
  legend: string;
  windowPicker: string;
  emerging: string;
  watchList: string;
  products: string;
  feed: string;
  guidance: string;
  communities: string;
  tracked: string;
}

export class Console {
  readonly state: ViewState = initialViewState();
  private stream: StreamHandle | null = null;
  composeFilters: ProductFilter[] = [];

  constructor(private readonly client: ApiClient) {}

  /** Fetch every panel's data; on failure raise the banner and keep going. */
  async refreshAll(): Promise<void> {
    try {
      const [snapshot, surface, emerging, watchTopics, products, tracked, health] =
        await Promise.all([
          this.client.snapshot(this.state.selectedWindow ?? undefined),
          this.client.surface(this.state.selectedWindow ?? undefined),
          this.client.emerging(),
          this.client.watchTopics(),
          this.client.products(),
          this.client.tracked(),
          this.client.health(),
        ]);
      const s = this.state;
      s.snapshot = snapshot;
      s.surface = surface;
      s.emerging = emerging;
      s.watchTopics = watchTopics;
      s.products = products;
      s.tracked = tracked;
      s.health = health;
      s.snapshotStale = false;
      s.banner = null;
      const bbox = snapshot.surface.grid.bbox;
      s.viewport = s.viewport
        ? clampViewport(s.viewport, bbox)
        : viewportFromBbox(bbox);
    } catch (err) {
      if (err instanceof ApiError) throw err; // the service answered; surface the real error
      this.state.banner = UNREACHABLE_BANNER;
    }
  }

  /** Refetch the snapshot after stream events invalidated it. */
  async refreshSnapshotIfStale(): Promise<void> {
    if (!this.state.snapshotStale) return;
    try {
      this.state.snapshot = await this.client.snapshot(
        this.state.selectedWindow ?? undefined
      );
      this.state.surface = await this.client.surface(
        this.state.selectedWindow ?? undefined
      );
      this.state.snapshotStale = false;
      this.state.banner = null;
    } catch (err) {
      if (err instanceof ApiError) throw err;
      this.state.banner = UNREACHABLE_BANNER;
    }
  }

  async selectWindow(windowStart: number | null): Promise<void> {
    this.state.selectedWindow = windowStart;
    this.state.surface = await this.client.surface(windowStart ?? undefined);
    this.state.snapshot = await this.client.snapshot(windowStart ?? undefined);
  }

  /**
   * Promote an emerging topic to a watch topic. On conflict the panel shows
   * the server's message inline and no layer is added.
   */
  async promote(topic: string): Promise<void> {
    this.state.promoteError = null;
    try {
      const created = await this.client.createWatchTopic({
        label: topic,
        terms: [{ term: topic }],
        origin: "promoted-from-emerging",
      });
      const detail = await this.client.watchTopicDetail(created.id);
      this.state.watchLayers[created.id] = detail.matches;
      this.state.watchTopics = await this.client.watchTopics();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.promoteError = err.serverMessage;
        return;
      }
      throw err;
    }
  }

  async removeTopic(id: string): Promise<void> {
    await this.client.deleteWatchTopic(id);
    delete this.state.watchLayers[id];
    this.state.watchTopics = await this.client.watchTopics();
  }

  /** Create a product; submitting without filters never reaches the wire. */
  async compose(name: string, filters: ProductFilter[]): Promise<void> {
    this.state.composeError = null;
    if (filters.length === 0) {
      this.state.composeError = "select at least one filter";
      return;
    }
    try {
      const product = await this.client.createProduct({ name, filters });
      this.state.products = await this.client.products();
      await this.selectProduct(product.id);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.composeError = err.serverMessage;
        return;
      }
      throw err;
    }
  }

  async selectProduct(id: string): Promise<void> {
    const page = await this.client.productFeed(id, 0);
    this.state.selectedProduct = id;
    this.state.feed = { productId: id, events: page.events, latestSeq: page.latest_seq };
  }

  /** Pull anything new onto the selected product's feed preview. */
  async tailFeed(): Promise<void> {
    const feed = this.state.feed;
    if (!feed) return;
    const page = await this.client.productFeed(feed.productId, feed.latestSeq);
    feed.events.push(...page.events);
    feed.latestSeq = page.latest_seq;
  }

  async loadGuidance(lat: number, lon: number, radiusM: number, sectors: number): Promise<void> {
    this.state.guidance = await this.client.guidance(lat, lon, radiusM, sectors);
  }

  /** Open the single stream connection; resumes from the last seq seen. */
  startStream(baseUrl: string, opts: { retryDelayMs?: number } = {}): StreamHandle {
    if (this.stream) return this.stream;
    this.stream = openStream(baseUrl, {
      since: this.state.lastSeq,
      retryDelayMs: opts.retryDelayMs,
      onEvent: (ev) => applyStreamEvent(this.state, ev),
      onStatus: (status) => {
        this.state.banner = status === "connected" ? null : UNREACHABLE_BANNER;
      },
    });
    return this.stream;
  }

  stopStream(): void {
    this.stream?.stop();
    this.stream = null;
  }

  /** Window starts the service has mentioned so far (snapshot plus alerts). */
  knownWindows(): number[] {
    const out = new Set<number>();
    const snap = this.state.snapshot;
    if (snap?.window) out.add(snap.window.start);
    for (const a of snap?.alerts ?? []) out.add(a.window_start);
    return [...out].sort((a, b) => a - b);
  }

  render(): Panels {
    const s = this.state;
    const layers: string[] = [];
    if (s.snapshot && s.viewport) {
      const grid = s.snapshot.surface.grid;
      if (s.layers.surface) {
        layers.push(renderSurfaceLayer(grid, s.snapshot.surface.heights, s.viewport));
      }
      for (const [topicId, matches] of Object.entries(s.watchLayers)) {
        layers.push(renderWatchLayer(topicId, matches, s.viewport));
      }
      if (s.layers.messages) {
        layers.push(renderMessageLayer(s.recentMessages, s.viewport, s.layers.emotions));
      }
      if (s.layers.alerts) {
        layers.push(renderAlertMarkers(s.snapshot.alerts, grid, s.viewport));
      }
    }
    const map =
      `<svg class="map" viewBox="0 0 ${MAP_WIDTH} ${MAP_HEIGHT}">` + layers.join("") + `</svg>`;
    return {
      banner: renderBanner(s.banner),
      health: renderHealth(s.health),
      map,
      legend: renderEmotionLegend(),
      windowPicker: renderWindowPicker(this.knownWindows(), s.selectedWindow),
      emerging: renderEmergingPanel(s.emerging, s.promoteError),
      watchList: renderWatchList(s.watchTopics),
      products: renderProductsPanel(
        s.products,
        s.selectedProduct,
        this.composeFilters.length,
        s.composeError
      ),
      feed: renderFeedPreview(s.feed),
      guidance: renderGuidanceRose(s.guidance),
      communities: renderCommunities(s.snapshot?.communities ?? []),
      tracked: renderTrackedPanel(s.tracked),
    };
  }
}
