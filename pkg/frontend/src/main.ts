/** DOM bootstrap: binds the controller to the canvas and sidebar. */

import { ApiClient } from "./api.js";
import { Camera, focusOn, orbit, topDownCamera, zoomBy } from "./camera.js";
import { AppController, AppState } from "./app.js";
import { drawScene, pickPoint } from "./renderer.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const meta = document.getElementById("meta")!;
const progressBox = document.getElementById("progress")!;
const paletteBox = document.getElementById("palette")!;
const submitButton = document.getElementById("submit") as HTMLButtonElement;
const fillButton = document.getElementById("fill") as HTMLButtonElement;
const doneBox = document.getElementById("done")!;

let camera: Camera = topDownCamera();
let latest: AppState | null = null;

function resize(): void {
    canvas.width = canvas.clientWidth;
    canvas.height = canvas.clientHeight;
    render();
}

function render(): void {
    if (!latest) return;
    const state = latest;
    banner.textContent = state.banner ?? "";
    banner.style.display = state.banner ? "block" : "none";

    if (state.progress) {
        const p = state.progress;
        const total = p.rounds_total === null ? "?" : String(p.rounds_total);
        progressBox.textContent =
            `round ${p.round}/${total} | ${p.entries} voxels | ${p.points_labeled} points labeled`;
    }

    if (state.phase === "done") {
        doneBox.style.display = "block";
        canvas.style.display = "none";
        const stats = state.finalStats;
        const rows =
            stats && stats.classes
                ? stats.classes
                      .map(
                          (c) =>
                              `<tr><td>${c.name}</td><td>${c.selected_count}</td>` +
                              `<td>${(c.selected_share * 100).toFixed(1)}%</td>` +
                              `<td>${(c.base_share * 100).toFixed(1)}%</td></tr>`,
                      )
                      .join("")
                : "";
        doneBox.innerHTML =
            "<h2>campaign complete</h2>" +
            (rows
                ? `<table><tr><th>class</th><th>points</th><th>selected</th><th>base</th></tr>${rows}</table>`
                : "<p>no statistics available</p>");
        return;
    }
    doneBox.style.display = "none";
    canvas.style.display = "block";

    if (state.query && state.buffer) {
        const q = state.query;
        meta.textContent =
            `${q.scan_id} | voxel (${q.coord.join(", ")}) | ${q.strategy} ` +
            `score ${q.score.toFixed(4)} | ${q.points.length} points, ` +
            `${state.buffer.labeledCount()} labeled`;
        submitButton.disabled = !state.buffer.isComplete();
        drawScene(
            ctx,
            { context: state.context, query: q },
            camera,
            state.buffer,
            state.palette,
            canvas.width,
            canvas.height,
        );
    }

    paletteBox.innerHTML = "";
    for (const entry of state.palette) {
        const button = document.createElement("button");
        button.textContent = `${entry.id} ${entry.name}`;
        button.style.borderLeft = `12px solid ${entry.color}`;
        button.className = entry.id === state.activeClass ? "active" : "";
        button.onclick = () => controller.setActiveClass(entry.id);
        paletteBox.appendChild(button);
    }
}

const controller = new AppController(new ApiClient(window.location.origin), (state) => {
    latest = state;
    if (state.query) {
        const q = state.query;
        const cx = q.points.reduce((a, p) => a + p[0], 0) / q.points.length;
        const cy = q.points.reduce((a, p) => a + p[1], 0) / q.points.length;
        const cz = q.points.reduce((a, p) => a + p[2], 0) / q.points.length;
        camera = focusOn(camera, cx, cy, cz);
    }
    render();
});

let dragging = false;
let brushing = false;
let lastX = 0;
let lastY = 0;

canvas.addEventListener("mousedown", (e) => {
    if (e.shiftKey) {
        brushing = true;
        brushAt(e);
    } else {
        dragging = true;
    }
    lastX = e.offsetX;
    lastY = e.offsetY;
});
canvas.addEventListener("mousemove", (e) => {
    if (brushing) {
        brushAt(e);
    } else if (dragging) {
        camera = orbit(camera, (e.offsetX - lastX) * 0.008, (e.offsetY - lastY) * 0.008);
        lastX = e.offsetX;
        lastY = e.offsetY;
        render();
    }
});
window.addEventListener("mouseup", () => {
    dragging = false;
    brushing = false;
});
canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    camera = zoomBy(camera, e.deltaY < 0 ? 1.15 : 1 / 1.15);
    render();
});

function brushAt(e: MouseEvent): void {
    if (!latest?.query) return;
    const hit = pickPoint(
        { context: latest.context, query: latest.query },
        camera,
        e.offsetX,
        e.offsetY,
        canvas.width,
        canvas.height,
    );
    if (hit !== null) controller.brushPoint(hit);
}

fillButton.onclick = () => controller.bulkAssign(latest?.activeClass ?? 1);
submitButton.onclick = () => void controller.submit();
window.addEventListener("resize", resize);

resize();
void controller.start();
