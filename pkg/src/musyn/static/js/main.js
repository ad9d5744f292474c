import { ServiceClient } from "./api.js";
import { SessionController } from "./controller.js";
import { render } from "./view.js";
function download(name, data) {
    const blob = new Blob([JSON.stringify(data, null, 2)], {
        type: "application/json",
    });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = name;
    a.click();
    URL.revokeObjectURL(url);
}
function boot() {
    const root = document.getElementById("app");
    const form = document.getElementById("session-form");
    const client = new ServiceClient("");
    let latest = null;
    const controller = new SessionController(client, (vm) => {
        latest = vm;
        root.innerHTML = render(vm);
    });
    root.addEventListener("click", (ev) => {
        const el = ev.target;
        if (el.matches("button.choose")) {
            void controller.decide({ type: "choose", order: Number(el.dataset.order) });
        }
        else if (el.matches("button.accept")) {
            void controller.decide({ type: "accept" });
        }
        else if (el.matches("button.stop")) {
            void controller.decide({ type: "stop" });
        }
        else if (el.matches("button.retry")) {
            void controller.retry();
        }
        else if (el.matches("button.download-controller") && latest?.result) {
            download("controller.json", latest.result.controller);
        }
        else if (el.matches("button.download-report") && latest?.result) {
            download("report.json", latest.result);
        }
    });
    form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        const specText = document.getElementById("spec-json").value;
        const grid = document.getElementById("grid").value;
        const maxOrder = Number(document.getElementById("max-order").value);
        const existing = document.getElementById("session-id").value;
        controller.detach();
        if (existing.trim()) {
            void controller.attach(existing.trim());
            return;
        }
        let spec;
        try {
            spec = JSON.parse(specText);
        }
        catch {
            root.innerHTML = `<div class="banner error">spec is not valid JSON</div>`;
            return;
        }
        void controller.start({ spec, grid, config: { max_order: maxOrder } });
    });
}
document.addEventListener("DOMContentLoaded", boot);
