/**
 * Canvas renderer: scan context in neutral gray, the queried voxel's
 * points highlighted (colored by their buffered label), and the voxel's
 * bounding box drawn at coord * voxel_size with edge length voxel_size.
 */

import { BOX_EDGES, Camera, project, voxelCorners } from "./camera.js";
import { LabelBuffer } from "./labels.js";
import { colorOf, PaletteEntry } from "./palette.js";
import { PointRow, QueryPayload } from "./types.js";

export interface Scene {
    context: PointRow[];
    query: QueryPayload;
}

export function drawScene(
    ctx: CanvasRenderingContext2D,
    scene: Scene,
    camera: Camera,
    buffer: LabelBuffer,
    palette: PaletteEntry[],
    width: number,
    height: number,
): void {
    ctx.fillStyle = "#10131a";
    ctx.fillRect(0, 0, width, height);

    ctx.fillStyle = "#5a6274";
    for (const [x, y, z] of scene.context) {
        const [sx, sy] = project(camera, x, y, z, width, height);
        if (sx < -2 || sy < -2 || sx > width + 2 || sy > height + 2) continue;
        ctx.fillRect(sx, sy, 1.5, 1.5);
    }

    const corners = voxelCorners(scene.query.coord, scene.query.voxel_size).map(
        ([x, y, z]) => project(camera, x, y, z, width, height),
    );
    ctx.strokeStyle = "#ffd166";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (const [i, j] of BOX_EDGES) {
        const a = corners[i];
        const b = corners[j];
        if (!a || !b) continue;
        ctx.moveTo(a[0], a[1]);
        ctx.lineTo(b[0], b[1]);
    }
    ctx.stroke();

    scene.query.points.forEach(([x, y, z], i) => {
        const [sx, sy] = project(camera, x, y, z, width, height);
        ctx.fillStyle = colorOf(palette, buffer.labelOf(i));
        ctx.beginPath();
        ctx.arc(sx, sy, 3.5, 0, 2 * Math.PI);
        ctx.fill();
        ctx.strokeStyle = "#10131a";
        ctx.lineWidth = 0.5;
        ctx.stroke();
    });
}

/** Screen-space nearest queried point within `radius`, or null. */
export function pickPoint(
    scene: Scene,
    camera: Camera,
    sx: number,
    sy: number,
    width: number,
    height: number,
    radius = 8,
): number | null {
    let best: number | null = null;
    let bestDist = radius * radius;
    scene.query.points.forEach(([x, y, z], i) => {
        const [px, py] = project(camera, x, y, z, width, height);
        const d = (px - sx) * (px - sx) + (py - sy) * (py - sy);
        if (d <= bestDist) {
            best = i;
            bestDist = d;
        }
    });
    return best;
}
