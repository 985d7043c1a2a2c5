/**
 * Orthographic camera with orbit controls.
 *
 * Default pose looks straight down (LiDAR scenes read best from above);
 * dragging orbits (yaw around the world z axis, pitch toward horizontal),
 * the wheel zooms. Projection is a pure function, which keeps it testable.
 */

export interface Camera {
    yaw: number; // radians around world z
    pitch: number; // 0 = top-down, pi/2 = horizontal
    zoom: number; // pixels per meter
    centerX: number; // world-space focus point
    centerY: number;
    centerZ: number;
}

export function topDownCamera(zoom = 40): Camera {
    return { yaw: 0, pitch: 0, zoom, centerX: 0, centerY: 0, centerZ: 0 };
}

export function orbit(camera: Camera, dYaw: number, dPitch: number): Camera {
    const pitch = Math.min(Math.max(camera.pitch + dPitch, 0), Math.PI / 2);
    return { ...camera, yaw: camera.yaw + dYaw, pitch };
}

export function zoomBy(camera: Camera, factor: number): Camera {
    const zoom = Math.min(Math.max(camera.zoom * factor, 1), 2000);
    return { ...camera, zoom };
}

export function focusOn(camera: Camera, x: number, y: number, z: number): Camera {
    return { ...camera, centerX: x, centerY: y, centerZ: z };
}

/**
 * World -> screen. Returns [sx, sy, depth]; depth only orders drawing.
 * At pitch 0 this is exactly the top-down map view: +x right, +y up.
 */
export function project(
    camera: Camera,
    x: number,
    y: number,
    z: number,
    width: number,
    height: number,
): [number, number, number] {
    const dx = x - camera.centerX;
    const dy = y - camera.centerY;
    const dz = z - camera.centerZ;
    const cosYaw = Math.cos(camera.yaw);
    const sinYaw = Math.sin(camera.yaw);
    const rx = dx * cosYaw - dy * sinYaw;
    const ry = dx * sinYaw + dy * cosYaw;
    const cosPitch = Math.cos(camera.pitch);
    const sinPitch = Math.sin(camera.pitch);
    const vy = ry * cosPitch + dz * sinPitch;
    const depth = -ry * sinPitch + dz * cosPitch;
    return [width / 2 + rx * camera.zoom, height / 2 - vy * camera.zoom, depth];
}

/** The eight corners of the voxel at grid coordinate `coord` (edge = size). */
export function voxelCorners(
    coord: [number, number, number],
    size: number,
): [number, number, number][] {
    const [a, b, c] = coord;
    const x0 = a * size;
    const y0 = b * size;
    const z0 = c * size;
    const corners: [number, number, number][] = [];
    for (const ox of [0, size]) {
        for (const oy of [0, size]) {
            for (const oz of [0, size]) {
                corners.push([x0 + ox, y0 + oy, z0 + oz]);
            }
        }
    }
    return corners;
}

/** Index pairs into voxelCorners() output forming the 12 box edges. */
export const BOX_EDGES: [number, number][] = [
    [0, 1],
    [0, 2],
    [0, 4],
    [1, 3],
    [1, 5],
    [2, 3],
    [2, 6],
    [3, 7],
    [4, 5],
    [4, 6],
    [5, 7],
    [6, 7],
];
