import { ApiClient, ApiError } from "./api.js";
import { ReviewController } from "./review.js";
import { ColorBy, Scene, buildScene, hitTest } from "./explorer.js";
import type { Projection3d } from "./types.js";

const api = new ApiClient((url, init) => fetch(url, init));

const app = document.getElementById("app")!;

interface ExplorerState {
  proj: Projection3d | null;
  available: boolean;
  colorBy: ColorBy;
  highlight: string | null;
  yaw: number;
  pitch: number;
  categoriesById: Map<number, string[]>;
}

const explorer: ExplorerState = {
  proj: null,
  available: true,
  colorBy: "cuisine",
  highlight: null,
  yaw: 0.6,
  pitch: 0.35,
  categoriesById: new Map(),
};

const review = new ReviewController(api);
let tab: "review" | "explorer" = "review";

function shell(content: string): void {
  const manifest = api.lastManifest();
  app.innerHTML = `
    <nav>
      <button data-tab="review" class="${tab === "review" ? "active" : ""}">Review queue</button>
      <button data-tab="explorer" class="${tab === "explorer" ? "active" : ""}"
        ${explorer.available ? "" : "disabled title='workspace has no 3-d layout'"}>Explorer</button>
      <span class="manifest" title="workspace manifest">${manifest ? manifest.slice(0, 12) : ""}</span>
    </nav>
    <main>${content}</main>`;
}

function renderError(err: unknown): void {
  const msg = err instanceof Error ? err.message : String(err);
  shell(`
    <div class="banner">
      <p>Service unavailable: ${msg.replace(/</g, "&lt;")}</p>
      <button id="retry">Retry</button>
    </div>`);
  document.getElementById("retry")!.addEventListener("click", () => void boot());
}

function renderReview(): void {
  const audit = review.state.audit.length
    ? `<details class="audit" open><summary>Curation log</summary><ul>${
        review.state.audit.map((a) => `<li>${a.replace(/</g, "&lt;")}</li>`).join("")
      }</ul></details>`
    : "";
  shell(`
    <div class="toolbar">
      <input id="search" type="search" placeholder="Filter groups"
        value="${review.state.query.replace(/"/g, "&quot;")}">
    </div>
    <section id="queue">${review.render()}</section>
    ${audit}`);

  const search = document.getElementById("search") as HTMLInputElement;
  search.addEventListener("input", () => {
    review.setQuery(search.value);
    renderReview();
    (document.getElementById("search") as HTMLInputElement).focus();
  });

  document.querySelectorAll<HTMLElement>(".group-card h3").forEach((h) => {
    h.addEventListener("click", () => {
      const id = Number(h.closest(".group-card")!.getAttribute("data-id"));
      review.toggleExpanded(id);
      renderReview();
    });
  });
  document.querySelectorAll<HTMLInputElement>(".merge-source").forEach((box) => {
    box.addEventListener("change", () => {
      review.toggleDraftSource(Number(box.value));
      renderReview();
    });
  });
  document.querySelectorAll<HTMLButtonElement>(".merge-submit").forEach((btn) => {
    btn.addEventListener("click", () => {
      void review.submitDraft().then(() => renderReview());
    });
  });
}

function drawScene(canvas: HTMLCanvasElement, scene: Scene): void {
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  if (scene.axis) {
    ctx.strokeStyle = "#9aa3ad";
    ctx.lineWidth = 1.5;
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    ctx.moveTo(scene.axis.x1, scene.axis.y1);
    ctx.lineTo(scene.axis.x2, scene.axis.y2);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#9aa3ad";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText(scene.axis.lowLabel, scene.axis.x1 + 6, scene.axis.y1);
    ctx.fillText(scene.axis.highLabel, scene.axis.x2 + 6, scene.axis.y2);
  }

  for (const dot of scene.dots) {
    ctx.globalAlpha = dot.dimmed ? 0.15 : 0.9;
    ctx.fillStyle = dot.color;
    ctx.beginPath();
    ctx.arc(dot.x, dot.y, Math.max(2.5, dot.radius), 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.globalAlpha = 1;

  for (const c of scene.centroids) {
    ctx.strokeStyle = c.color;
    ctx.lineWidth = 2;
    ctx.strokeRect(c.x - 5, c.y - 5, 10, 10);
  }
}

function renderExplorer(): void {
  if (!explorer.available) {
    shell(`<p class="empty">This workspace ships no 3-d layout.</p>`);
    return;
  }
  const proj = explorer.proj;
  if (!proj) {
    shell(`<p class="empty">Loading...</p>`);
    return;
  }
  const scene = buildScene(proj, {
    colorBy: explorer.colorBy,
    highlight: explorer.highlight,
    yaw: explorer.yaw,
    pitch: explorer.pitch,
    width: 760,
    height: 560,
    categoriesById: explorer.categoriesById,
  });
  const legendHtml = scene.legend.map((e) => `
    <li><button class="legend-entry ${explorer.highlight === e.label ? "active" : ""}"
      data-label="${e.label.replace(/"/g, "&quot;")}">
      <span class="swatch" style="background:${e.color}"></span>${e.label}</button></li>`).join("");
  shell(`
    <div class="toolbar">
      <label>Color by
        <select id="color-by">
          ${(["cuisine", "profile", "category", "axis"] as ColorBy[]).map((m) =>
            `<option value="${m}" ${explorer.colorBy === m ? "selected" : ""}>${m}</option>`).join("")}
        </select>
      </label>
      <span class="hint">drag to rotate; click a legend entry to spotlight it</span>
    </div>
    <div class="explorer-split">
      <canvas id="scene" width="760" height="560"></canvas>
      <ul class="legend">${legendHtml}</ul>
    </div>
    <div id="tooltip" class="tooltip" hidden></div>`);

  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  drawScene(canvas, scene);

  (document.getElementById("color-by") as HTMLSelectElement).addEventListener("change", (ev) => {
    explorer.colorBy = (ev.target as HTMLSelectElement).value as ColorBy;
    explorer.highlight = null;
    renderExplorer();
  });
  document.querySelectorAll<HTMLButtonElement>(".legend-entry").forEach((btn) => {
    btn.addEventListener("click", () => {
      const label = btn.getAttribute("data-label")!;
      explorer.highlight = explorer.highlight === label ? null : label;
      renderExplorer();
    });
  });

  let dragging = false;
  let last: { x: number; y: number } | null = null;
  canvas.addEventListener("mousedown", (ev) => { dragging = true; last = { x: ev.offsetX, y: ev.offsetY }; });
  window.addEventListener("mouseup", () => { dragging = false; last = null; });
  canvas.addEventListener("mousemove", (ev) => {
    if (dragging && last) {
      explorer.yaw += (ev.offsetX - last.x) * 0.01;
      explorer.pitch += (ev.offsetY - last.y) * 0.01;
      last = { x: ev.offsetX, y: ev.offsetY };
      renderExplorer();
      return;
    }
    const tooltip = document.getElementById("tooltip")!;
    const hit = hitTest(scene, ev.offsetX, ev.offsetY);
    if (hit) {
      const cats = explorer.categoriesById.get(hit.id) ?? [];
      tooltip.hidden = false;
      tooltip.style.left = `${ev.offsetX + 14}px`;
      tooltip.style.top = `${ev.offsetY + 14}px`;
      tooltip.innerHTML = `<strong>${hit.name}</strong><br>
        ${hit.profile ?? ""}${cats.length ? `<br>${cats.join(", ")}` : ""}
        ${hit.cuisines.length ? `<br>${hit.cuisines.join(", ")}` : ""}`;
    } else {
      tooltip.hidden = true;
    }
  });
}

function renderTab(): void {
  if (tab === "review") renderReview();
  else renderExplorer();
  document.querySelectorAll<HTMLButtonElement>("nav button[data-tab]").forEach((btn) => {
    btn.addEventListener("click", () => {
      tab = btn.getAttribute("data-tab") as typeof tab;
      renderTab();
    });
  });
}

async function boot(): Promise<void> {
  try {
    await api.health();
    await review.refresh();
    try {
      explorer.proj = await api.projection3d();
      explorer.available = true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        explorer.available = false;
      } else {
        throw err;
      }
    }
    const ingredients = await api.ingredients();
    explorer.categoriesById = new Map(
      ingredients.ingredients.map((i) => [i.canonical_id, i.categories]),
    );
    renderTab();
  } catch (err) {
    renderError(err);
  }
}

void boot();
