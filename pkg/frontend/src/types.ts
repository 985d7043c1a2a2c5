/**
 * API payload types and runtime validators.
 *
 * Validation is strict on purpose: a payload that does not match the
 * declared shape must surface as a visible error banner, never render
 * half-heartedly.
 */

export interface SessionInfo {
    session_id: string;
    status: string;
    progress: Progress;
}

export interface Progress {
    round: number;
    rounds_total: number | null;
    entries: number;
    points_labeled: number;
    budget_points_per_scan: number | null;
    done: boolean;
}

/** One point row: x, y, z, intensity. */
export type PointRow = [number, number, number, number];

export interface QueryPayload {
    session_id: string;
    status: string;
    scan_id: string;
    round: number;
    coord: [number, number, number];
    voxel_size: number;
    strategy: string;
    score: number;
    point_indices: number[];
    points: PointRow[];
    class_count: number;
    progress: Progress;
}

export interface ClassInfo {
    id: number;
    name: string;
}

export interface ClassListPayload {
    class_count: number;
    classes: ClassInfo[];
}

export interface StatsClassRow {
    class_id: number;
    name: string;
    selected_count: number;
    selected_share: number;
    base_share: number;
    lift: number | null;
    infinite_lift: boolean;
}

export interface StatsPayload {
    base_available: boolean;
    empty?: boolean;
    classes?: StatsClassRow[];
    entries?: number;
}

export class SchemaError extends Error {
    constructor(what: string, detail: string) {
        super(`unexpected ${what} payload: ${detail}`);
        this.name = "SchemaError";
    }
}

function isRecord(v: unknown): v is Record<string, unknown> {
    return typeof v === "object" && v !== null && !Array.isArray(v);
}

function requireNumber(v: unknown, what: string): number {
    if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new SchemaError(what, `expected a finite number, got ${JSON.stringify(v)}`);
    }
    return v;
}

function requireString(v: unknown, what: string): string {
    if (typeof v !== "string") {
        throw new SchemaError(what, `expected a string, got ${JSON.stringify(v)}`);
    }
    return v;
}

export function parseProgress(v: unknown): Progress {
    if (!isRecord(v)) throw new SchemaError("progress", "not an object");
    return {
        round: requireNumber(v.round, "progress.round"),
        rounds_total: v.rounds_total === null ? null : requireNumber(v.rounds_total, "progress.rounds_total"),
        entries: requireNumber(v.entries, "progress.entries"),
        points_labeled: requireNumber(v.points_labeled, "progress.points_labeled"),
        budget_points_per_scan:
            v.budget_points_per_scan === null || v.budget_points_per_scan === undefined
                ? null
                : requireNumber(v.budget_points_per_scan, "progress.budget_points_per_scan"),
        done: Boolean(v.done),
    };
}

function parsePointRow(v: unknown, what: string): PointRow {
    if (!Array.isArray(v) || v.length !== 4) {
        throw new SchemaError(what, "each point must be [x, y, z, intensity]");
    }
    return [
        requireNumber(v[0], what),
        requireNumber(v[1], what),
        requireNumber(v[2], what),
        requireNumber(v[3], what),
    ];
}

export function parseQueryPayload(v: unknown): QueryPayload {
    if (!isRecord(v)) throw new SchemaError("query", "not an object");
    const coord = v.coord;
    if (!Array.isArray(coord) || coord.length !== 3) {
        throw new SchemaError("query", "coord must be [a, b, c]");
    }
    if (!Array.isArray(v.point_indices) || !Array.isArray(v.points)) {
        throw new SchemaError("query", "point_indices and points must be arrays");
    }
    if (v.point_indices.length !== v.points.length || v.points.length === 0) {
        throw new SchemaError("query", "points and point_indices must align and be non-empty");
    }
    return {
        session_id: requireString(v.session_id, "query.session_id"),
        status: requireString(v.status, "query.status"),
        scan_id: requireString(v.scan_id, "query.scan_id"),
        round: requireNumber(v.round, "query.round"),
        coord: [
            requireNumber(coord[0], "query.coord"),
            requireNumber(coord[1], "query.coord"),
            requireNumber(coord[2], "query.coord"),
        ],
        voxel_size: requireNumber(v.voxel_size, "query.voxel_size"),
        strategy: requireString(v.strategy, "query.strategy"),
        score: requireNumber(v.score, "query.score"),
        point_indices: v.point_indices.map((i) => requireNumber(i, "query.point_indices")),
        points: v.points.map((p) => parsePointRow(p, "query.points")),
        class_count: requireNumber(v.class_count, "query.class_count"),
        progress: parseProgress(v.progress),
    };
}

export function parseSessionInfo(v: unknown): SessionInfo {
    if (!isRecord(v)) throw new SchemaError("session", "not an object");
    return {
        session_id: requireString(v.session_id, "session.session_id"),
        status: requireString(v.status, "session.status"),
        progress: parseProgress(v.progress),
    };
}

export function parseClassList(v: unknown): ClassListPayload {
    if (!isRecord(v) || !Array.isArray(v.classes)) {
        throw new SchemaError("classes", "not an object with a classes array");
    }
    const classes = v.classes.map((c) => {
        if (!isRecord(c)) throw new SchemaError("classes", "class row is not an object");
        return { id: requireNumber(c.id, "classes.id"), name: requireString(c.name, "classes.name") };
    });
    return { class_count: requireNumber(v.class_count, "classes.class_count"), classes };
}
