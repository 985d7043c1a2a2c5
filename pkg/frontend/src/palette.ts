/**
 * Class palette derived from the server's class list; nothing hardcoded.
 * Colors are spaced by the golden angle so neighboring ids stay distinct.
 */

import { ClassListPayload } from "./types.js";

export interface PaletteEntry {
    id: number;
    name: string;
    color: string;
}

export function buildPalette(classes: ClassListPayload): PaletteEntry[] {
    return classes.classes.map((c, i) => ({
        id: c.id,
        name: c.name,
        color: `hsl(${Math.round((i * 137.508) % 360)}, 70%, 55%)`,
    }));
}

export function colorOf(palette: PaletteEntry[], classId: number | null): string {
    if (classId === null) return "#ff3366";
    const hit = palette.find((p) => p.id === classId);
    return hit ? hit.color : "#ffffff";
}
