/**
 * Browser entry point: wires the controller to the DOM.
 *
 * Query parameters: ?service=<base url> (default http://127.0.0.1:8000)
 * and ?poll=<ms> for the queue refresh interval (default 5000).
 */

import { HttpArbitrationApi } from "./api.js";
import { ConsoleController, Severity } from "./controller.js";

function mount(root: HTMLElement, controller: ConsoleController): void {
  const bannerBox = root.querySelector<HTMLElement>("#banner")!;
  const metricsBox = root.querySelector<HTMLElement>("#metrics")!;
  const queueBox = root.querySelector<HTMLElement>("#queue")!;
  const detailBox = root.querySelector<HTMLElement>("#detail")!;

  const paint = () => {
    bannerBox.innerHTML = controller.bannerHtml();
    metricsBox.innerHTML = controller.metricsHtml();
    queueBox.innerHTML = controller.queueHtml();
    detailBox.innerHTML = controller.detailHtml();
  };

  const refresh = async () => {
    await controller.refresh();
    paint();
  };

  queueBox.addEventListener("click", async (event) => {
    const row = (event.target as HTMLElement).closest<HTMLElement>("tr.queue-row");
    if (!row) return;
    await controller.open(row.dataset.packetId!);
    paint();
  });

  bannerBox.addEventListener("click", async (event) => {
    if ((event.target as HTMLElement).classList.contains("retry")) {
      await refresh();
    }
  });

  detailBox.addEventListener("submit", async (event) => {
    const form = event.target as HTMLFormElement;
    if (!form.classList.contains("decision-form")) return;
    event.preventDefault();
    const packetId = form.dataset.packetId!;
    const severity =
      (form.querySelector<HTMLInputElement>("input[name=severity]:checked")?.value as Severity) ??
      null;
    const note = form.querySelector<HTMLInputElement>("input[name=note]")!.value;
    const outcome = await controller.submit(packetId, severity, note);
    if (outcome.validationError) {
      const slot = form.querySelector<HTMLElement>(".inline-error")!;
      slot.textContent = outcome.validationError;
      slot.hidden = false;
      return;
    }
    paint();
  });

  void refresh();
  const params = new URLSearchParams(window.location.search);
  const interval = Number(params.get("poll") ?? "5000");
  window.setInterval(refresh, Number.isFinite(interval) && interval > 0 ? interval : 5000);
}

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8000";
const token = params.get("token") ?? undefined;
mount(document.getElementById("app")!, new ConsoleController(new HttpArbitrationApi(base, token)));
