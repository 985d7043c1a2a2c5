/**
 * Thin typed client for the annotation API.
 *
 * The campaign is never mutated from the browser except through
 * `submitLabels` (POST /label); everything else is a read.
 */

import {
    ClassListPayload,
    parseClassList,
    parseProgress,
    parseQueryPayload,
    parseSessionInfo,
    Progress,
    QueryPayload,
    SessionInfo,
    StatsPayload,
} from "./types.js";

export type NextResult =
    | { kind: "query"; query: QueryPayload }
    | { kind: "done"; progress: Progress | null };

export interface SubmitOk {
    ok: true;
    status: string;
    progress: Progress;
}

/** Server rejected the submission (409/422); the label buffer must survive. */
export class SubmitRejected extends Error {
    constructor(
        public statusCode: number,
        public reason: string,
    ) {
        super(`submission rejected (${statusCode}): ${reason}`);
        this.name = "SubmitRejected";
    }
}

function detailOf(body: unknown): string {
    if (typeof body === "object" && body !== null && "detail" in body) {
        const d = (body as { detail: unknown }).detail;
        return typeof d === "string" ? d : JSON.stringify(d);
    }
    return JSON.stringify(body);
}

export class ApiClient {
    constructor(
        private baseUrl: string,
        private fetchImpl: typeof fetch = fetch,
    ) {}

    private url(path: string): string {
        return `${this.baseUrl.replace(/\/$/, "")}/api/v1${path}`;
    }

    async session(): Promise<SessionInfo> {
        const res = await this.fetchImpl(this.url("/session"));
        if (!res.ok) throw new Error(`session request failed: HTTP ${res.status}`);
        return parseSessionInfo(await res.json());
    }

    async next(sessionId: string): Promise<NextResult> {
        const res = await this.fetchImpl(this.url(`/session/${sessionId}/next`));
        if (res.status === 409) {
            const body: unknown = await res.json().catch(() => null);
            let progress: Progress | null = null;
            if (typeof body === "object" && body !== null && "detail" in body) {
                const detail = (body as { detail: unknown }).detail;
                if (typeof detail === "object" && detail !== null && "progress" in detail) {
                    progress = parseProgress((detail as { progress: unknown }).progress);
                }
            }
            return { kind: "done", progress };
        }
        if (!res.ok) throw new Error(`next-query request failed: HTTP ${res.status}`);
        return { kind: "query", query: parseQueryPayload(await res.json()) };
    }

    async submitLabels(
        sessionId: string,
        scanId: string,
        coord: [number, number, number],
        labels: number[],
    ): Promise<SubmitOk> {
        const res = await this.fetchImpl(this.url(`/session/${sessionId}/label`), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ scan_id: scanId, coord, labels }),
        });
        if (res.status === 409 || res.status === 422) {
            const body: unknown = await res.json().catch(() => ({}));
            throw new SubmitRejected(res.status, detailOf(body));
        }
        if (!res.ok) throw new Error(`label submission failed: HTTP ${res.status}`);
        const body = (await res.json()) as { ok: boolean; status: string; progress: unknown };
        return { ok: true, status: body.status, progress: parseProgress(body.progress) };
    }

    async scanPoints(scanId: string, stride: number): Promise<[number, number, number, number][]> {
        const res = await this.fetchImpl(
            this.url(`/scan/${encodeURIComponent(scanId)}/points?stride=${stride}`),
        );
        if (!res.ok) throw new Error(`scan request failed: HTTP ${res.status}`);
        const body = (await res.json()) as { points: [number, number, number, number][] };
        return body.points;
    }

    async classes(): Promise<ClassListPayload> {
        const res = await this.fetchImpl(this.url("/classes"));
        if (!res.ok) throw new Error(`classes request failed: HTTP ${res.status}`);
        return parseClassList(await res.json());
    }

    async stats(): Promise<StatsPayload> {
        const res = await this.fetchImpl(this.url("/stats"));
        if (!res.ok) throw new Error(`stats request failed: HTTP ${res.status}`);
        return (await res.json()) as StatsPayload;
    }
}
