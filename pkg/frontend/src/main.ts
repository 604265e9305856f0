/** Browser entry point: wires the API client, controller, and renderers. */

import { SessionApi } from "./api.js";
import { SessionController } from "./controller.js";
import {
  renderAccuracyTable,
  renderBars,
  renderClassButtons,
  renderEntropyPlot,
  renderError,
  renderHeader,
  renderQuery,
} from "./render.js";
import { buildView } from "./view.js";

const POLL_MS = 3000;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function banner(message: string, cssClass = "info"): void {
  el("banner").innerHTML = message
    ? `<div class="banner ${cssClass}">${message}</div>`
    : "";
}

class App {
  private api = new SessionApi("");
  private controller: SessionController | null = null;
  private searchQuery = "";

  async start(): Promise<void> {
    const params = new URLSearchParams(window.location.search);
    const existing = params.get("session");
    if (existing) {
      this.controller = new SessionController(this.api, existing);
      const status = await this.controller.refresh();
      if (status.kind !== "ok") banner(`cannot load session: ${JSON.stringify(status)}`, "error");
      this.draw();
    }
    el("create").addEventListener("click", () => void this.createSession());
    document.addEventListener("keydown", (ev) => void this.onKey(ev));
    window.setInterval(() => void this.poll(), POLL_MS);
  }

  private async createSession(): Promise<void> {
    const manifest = (el("manifest-path") as HTMLInputElement).value.trim();
    if (!manifest) {
      banner("enter a manifest path first", "error");
      return;
    }
    const result = await this.api.createSession({
      manifest_path: manifest,
      config: { method: "eig" },
    });
    if (result.kind !== "ok") {
      banner(`create failed: ${result.kind === "network" ? result.message : result.message}`, "error");
      return;
    }
    const sid = result.payload.session_id;
    const url = new URL(window.location.href);
    url.searchParams.set("session", sid);
    window.history.replaceState(null, "", url.toString());
    this.controller = new SessionController(this.api, sid);
    this.controller.payload = result.payload;
    this.draw();
  }

  private async poll(): Promise<void> {
    if (!this.controller) return;
    await this.controller.refresh();
    this.draw();
  }

  private async onKey(ev: KeyboardEvent): Promise<void> {
    if (!this.controller?.payload?.pending_query) return;
    if ((ev.target as HTMLElement)?.tagName === "INPUT") return;
    if (/^[0-9]$/.test(ev.key)) {
      const cls = Number(ev.key);
      if (cls < this.controller.payload.num_classes) await this.label(cls);
    }
  }

  private async label(classIndex: number): Promise<void> {
    if (!this.controller) return;
    const status = await this.controller.submit(classIndex);
    if (status.kind === "retry") banner(`network problem (${status.message}); try again`, "error");
    else if (status.kind === "refetched") banner("state had moved on; view refreshed", "info");
    else if (status.kind === "failed") banner(status.message, "error");
    else banner("");
    this.draw();
  }

  private async undo(): Promise<void> {
    if (!this.controller) return;
    const status = await this.controller.undo();
    banner(status.kind === "ok" ? "" : JSON.stringify(status), status.kind === "ok" ? "info" : "error");
    this.draw();
  }

  private draw(): void {
    const payload = this.controller?.payload;
    if (!payload) return;
    const view = buildView(payload);
    if (view.kind === "error") {
      el("main").innerHTML = renderError(view);
      return;
    }
    el("header").innerHTML = renderHeader(view);
    el("bars").innerHTML = renderBars(view);
    el("accuracy").innerHTML = renderAccuracyTable(view);
    el("query").innerHTML = renderQuery(view);
    el("classes").innerHTML = renderClassButtons(view, this.searchQuery);
    el("entropy").innerHTML = renderEntropyPlot(view);

    el("undo").addEventListener("click", () => void this.undo());
    for (const button of document.querySelectorAll<HTMLButtonElement>("button.cls")) {
      button.addEventListener("click", () => void this.label(Number(button.dataset.class)));
    }
    const search = document.getElementById("class-search") as HTMLInputElement | null;
    if (search) {
      search.addEventListener("input", () => {
        this.searchQuery = search.value;
        el("classes").innerHTML = renderClassButtons(view, this.searchQuery);
      });
    }
  }
}

void new App().start();
