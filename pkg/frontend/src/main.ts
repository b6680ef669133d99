import { ReviewApi } from "./api";
import { boundsOfFeatures, drawOverlays, hitTest, makeProjector } from "./overlay";
import { ScreeningSession } from "./session";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const api = new ReviewApi("");
  const session = new ScreeningSession(api, {
    reviewer: new URLSearchParams(location.search).get("reviewer") ?? "anonymous",
    storage: localStorage,
  });

  const canvas = el<HTMLCanvasElement>("overlay");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const banner = el<HTMLDivElement>("banner");
  const status = el<HTMLDivElement>("status");
  const hover = el<HTMLDivElement>("hover");
  const strategySelect = el<HTMLSelectElement>("strategy");
  const pendingOnly = el<HTMLInputElement>("pending-only");
  const image = new Image();

  function redraw(): void {
    ctx!.clearRect(0, 0, canvas.width, canvas.height);
    if (image.src && image.complete && image.naturalWidth > 0) {
      ctx!.drawImage(image, 0, 0, canvas.width, canvas.height);
    }
    const feats = session.candidates;
    const projector = makeProjector(boundsOfFeatures(feats), canvas.width, canvas.height);
    drawOverlays(
      ctx!,
      feats,
      (id) => session.verdictOf(id),
      projector,
      session.focused?.properties.instance_id ?? null,
    );
    const { reviewed, total } = session.progress();
    const queued = session.pendingSync > 0 ? ` — ${session.pendingSync} queued offline` : "";
    status.textContent = total
      ? `${session.siteId}: ${reviewed}/${total} reviewed${queued}`
      : "no candidates at this site";
    banner.textContent = session.lastError ?? "";
    banner.hidden = !session.lastError;
  }

  function refreshSiteControls(): void {
    strategySelect.innerHTML = "";
    for (const id of Object.keys(session.payload?.strategies ?? {}).sort()) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      option.selected = id === session.strategy;
      strategySelect.append(option);
    }
    if (session.payload) {
      image.onload = redraw;
      image.src = session.payload.image_url;
    }
    redraw();
  }

  strategySelect.addEventListener("change", () => {
    session.setStrategy(strategySelect.value);
    redraw();
  });
  pendingOnly.addEventListener("change", () => session.setPendingOnly(pendingOnly.checked));

  canvas.addEventListener("mousemove", (event) => {
    const feats = session.candidates;
    const projector = makeProjector(boundsOfFeatures(feats), canvas.width, canvas.height);
    const rect = canvas.getBoundingClientRect();
    const [mx, my] = projector.toMap(event.clientX - rect.left, event.clientY - rect.top);
    const hit = hitTest(mx, my, feats);
    hover.textContent = hit
      ? `#${hit.properties.instance_id} ${hit.properties.class} ` +
        `SemC=${hit.properties.sem_c.toFixed(3)} InsC=${hit.properties.ins_c.toFixed(3)} ` +
        `${hit.properties.size_px} px`
      : "";
  });

  document.addEventListener("keydown", async (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLSelectElement) return;
    const before = session.siteId;
    await session.handleKey(event.key);
    if (session.siteId !== before) refreshSiteControls();
    else redraw();
  });

  el<HTMLButtonElement>("sync").addEventListener("click", async () => {
    await session.sync();
    redraw();
  });
  el<HTMLButtonElement>("export").addEventListener("click", async () => {
    try {
      const result = await api.exportCurated(session.strategy, "accepted_only");
      status.textContent = `exported ${result.total} accepted labels to ${result.export_dir}`;
    } catch (err) {
      banner.textContent = String(err);
      banner.hidden = false;
    }
  });

  window.addEventListener("online", () => void session.sync().then(redraw));

  try {
    await session.start();
    refreshSiteControls();
  } catch (err) {
    banner.textContent = `failed to load sites: ${String(err)}`;
    banner.hidden = false;
  }
}

void boot();
