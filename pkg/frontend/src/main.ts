/** Browser entry point: mounts the console onto the page and wires events.
 *
 * Everything interesting lives in controller.ts; this file is DOM glue. The
 * service base URL comes from ?service=, defaulting to the page origin.
 */

import { ApiClient } from "./api.js";
import { Console } from "./controller.js";
import { Panels } from "./controller.js";

const PANEL_IDS: (keyof Panels)[] = [
  "banner",
  "health",
  "map",
  "legend",
  "windowPicker",
  "emerging",
  "watchList",
  "products",
  "feed",
  "guidance",
  "communities",
  "tracked",
];

const REFRESH_RETRY_MS = 3000;
const STALE_POLL_MS = 1000;

function mount(root: Document, console_: Console): void {
  const panels = console_.render();
  for (const id of PANEL_IDS) {
    const el = root.getElementById(`panel-${id}`);
    if (el) el.innerHTML = panels[id];
  }
}

export async function boot(root: Document): Promise<void> {
  const params = new URLSearchParams(root.location?.search ?? "");
  const base = params.get("service") ?? root.location.origin;
  const client = new ApiClient(base);
  const console_ = new Console(client);

  const rerender = () => mount(root, console_);

  await console_.refreshAll();
  rerender();
  console_.startStream(base);

  // Keep panels current: refetch the snapshot when stream events stale it,
  // retry the full refresh while the banner is up, and tail the feed.
  setInterval(async () => {
    await console_.refreshSnapshotIfStale();
    await console_.tailFeed().catch(() => undefined);
    rerender();
  }, STALE_POLL_MS);
  setInterval(async () => {
    if (console_.state.banner) {
      await console_.refreshAll();
      rerender();
    }
  }, REFRESH_RETRY_MS);

  root.addEventListener("click", async (ev) => {
    const target = ev.target as HTMLElement | null;
    if (!target) return;
    if (target.classList.contains("promote")) {
      await console_.promote(target.dataset.topic ?? "");
      rerender();
    } else if (target.classList.contains("drop-topic")) {
      await console_.removeTopic(target.dataset.id ?? "");
      rerender();
    } else if (target.classList.contains("pick-product")) {
      await console_.selectProduct(target.dataset.id ?? "");
      rerender();
    }
  });

  root.addEventListener("change", async (ev) => {
    const target = ev.target as HTMLSelectElement | null;
    if (target?.classList.contains("window-picker")) {
      const value = target.value === "" ? null : Number(target.value);
      await console_.selectWindow(value);
      rerender();
    }
  });

  root.addEventListener("submit", async (ev) => {
    const form = ev.target as HTMLFormElement | null;
    if (form?.classList.contains("compose")) {
      ev.preventDefault();
      const name = (form.elements.namedItem("name") as HTMLInputElement)?.value ?? "";
      await console_.compose(name, console_.composeFilters);
      rerender();
    }
  });
}

if (typeof document !== "undefined") {
  void boot(document);
}
