import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AppController } from "../src/app.js";

interface FakeServerOptions {
    rejectFirstSubmit?: { status: number; detail: string };
    failFirstSubmitNetwork?: boolean;
}

/** Two-query campaign served from memory via a fetch stand-in. */
function fakeServer(options: FakeServerOptions = {}) {
    const progress = (entries: number, done: boolean) => ({
        round: Math.min(entries + 1, 2),
        rounds_total: 2,
        entries,
        points_labeled: entries * 2,
        budget_points_per_scan: null,
        done,
    });
    const queries = [
        {
            scan_id: "s0",
            coord: [0, 0, 0],
            points: [
                [0.1, 0.1, 0.1, 0.5],
                [0.2, 0.2, 0.2, 0.4],
            ],
            point_indices: [3, 8],
        },
        {
            scan_id: "s0",
            coord: [1, 1, 1],
            points: [
                [0.3, 0.3, 0.3, 0.2],
                [0.4, 0.4, 0.4, 0.9],
            ],
            point_indices: [1, 2],
        },
    ];
    const state = { submitted: 0, submitAttempts: 0, lastBody: null as unknown };

    const handler = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
        const url = String(input);
        const respond = (code: number, body: unknown) =>
            new Response(JSON.stringify(body), {
                status: code,
                headers: { "Content-Type": "application/json" },
            });
        if (url.endsWith("/api/v1/session")) {
            return respond(200, {
                session_id: "sess1",
                status: "awaiting_label",
                progress: progress(state.submitted, false),
            });
        }
        if (url.endsWith("/classes")) {
            return respond(200, {
                class_count: 3,
                classes: [
                    { id: 1, name: "ground" },
                    { id: 2, name: "wall" },
                    { id: 3, name: "post" },
                ],
            });
        }
        if (url.includes("/scan/")) {
            return respond(200, { points: [[0, 0, 0, 0.1]] });
        }
        if (url.endsWith("/stats")) {
            return respond(200, { base_available: true, empty: false, classes: [] });
        }
        if (url.endsWith("/next")) {
            if (state.submitted >= queries.length) {
                return respond(409, {
                    detail: { status: "done", progress: progress(state.submitted, true) },
                });
            }
            const q = queries[state.submitted]!;
            return respond(200, {
                session_id: "sess1",
                status: "awaiting_label",
                scan_id: q.scan_id,
                round: state.submitted + 1,
                coord: q.coord,
                voxel_size: 0.25,
                strategy: "vcd",
                score: 0.5,
                point_indices: q.point_indices,
                points: q.points,
                class_count: 3,
                progress: progress(state.submitted, false),
            });
        }
        if (url.endsWith("/label") && init?.method === "POST") {
            state.submitAttempts += 1;
            state.lastBody = JSON.parse(String(init.body));
            if (options.failFirstSubmitNetwork && state.submitAttempts === 1) {
                throw new TypeError("fetch failed");
            }
            if (options.rejectFirstSubmit && state.submitAttempts === 1) {
                return respond(options.rejectFirstSubmit.status, {
                    detail: options.rejectFirstSubmit.detail,
                });
            }
            state.submitted += 1;
            return respond(200, {
                ok: true,
                status: "awaiting_label",
                progress: progress(state.submitted, state.submitted >= queries.length),
            });
        }
        return respond(404, { detail: "not found" });
    };
    return { handler: handler as typeof fetch, state };
}

function makeApp(options: FakeServerOptions = {}) {
    const server = fakeServer(options);
    const api = new ApiClient("http://test", server.handler);
    const app = new AppController(api);
    return { app, server };
}

describe("AppController", () => {
    it("walks a two-query campaign to completion", async () => {
        const { app, server } = makeApp();
        await app.start();
        expect(app.state.phase).toBe("labeling");
        expect(app.state.query?.coord).toEqual([0, 0, 0]);
        expect(app.canSubmit()).toBe(false);

        app.bulkAssign(2);
        expect(app.canSubmit()).toBe(true);
        await app.submit();
        expect(server.state.lastBody).toEqual({
            scan_id: "s0",
            coord: [0, 0, 0],
            labels: [2, 2],
        });

        expect(app.state.query?.coord).toEqual([1, 1, 1]);
        app.bulkAssign(1);
        app.brushPoint(1); // brush with the active class (1) is a no-op change
        app.setActiveClass(3);
        app.brushPoint(1);
        await app.submit();
        expect(server.state.lastBody).toEqual({
            scan_id: "s0",
            coord: [1, 1, 1],
            labels: [1, 3],
        });
        expect(app.state.phase).toBe("done");
        expect(app.state.finalStats?.base_available).toBe(true);
    });

    it("progress always mirrors the server's numbers", async () => {
        const { app } = makeApp();
        await app.start();
        expect(app.state.progress?.entries).toBe(0);
        app.bulkAssign(1);
        await app.submit();
        expect(app.state.progress?.entries).toBe(1); // server-reported, not counted here
        app.bulkAssign(1);
        await app.submit();
        expect(app.state.progress?.entries).toBe(2);
        expect(app.state.progress?.done).toBe(true);
    });

    it("server rejection keeps the buffer and shows the reason", async () => {
        const { app } = makeApp({ rejectFirstSubmit: { status: 409, detail: "stale query" } });
        await app.start();
        app.bulkAssign(2);
        await app.submit();
        expect(app.state.phase).toBe("labeling");
        expect(app.state.banner).toMatch(/stale query/);
        expect(app.state.buffer?.toArray()).toEqual([2, 2]); // preserved
        await app.submit(); // retry succeeds
        expect(app.state.query?.coord).toEqual([1, 1, 1]);
    });

    it("network failure keeps the buffer with a retry banner", async () => {
        const { app } = makeApp({ failFirstSubmitNetwork: true });
        await app.start();
        app.bulkAssign(3);
        await app.submit();
        expect(app.state.phase).toBe("labeling");
        expect(app.state.banner).toMatch(/retry/);
        expect(app.state.buffer?.toArray()).toEqual([3, 3]);
        await app.submit();
        expect(app.state.query?.coord).toEqual([1, 1, 1]);
    });

    it("incomplete buffer cannot submit", async () => {
        const { app, server } = makeApp();
        await app.start();
        app.setActiveClass(1);
        app.brushPoint(0);
        expect(app.canSubmit()).toBe(false);
        await app.submit();
        expect(server.state.submitAttempts).toBe(0);
        expect(app.state.banner).toMatch(/label every point/);
    });

    it("malformed payload surfaces as an error banner", async () => {
        const badFetch: typeof fetch = async (input) => {
            const url = String(input);
            if (url.endsWith("/api/v1/session")) {
                return new Response(JSON.stringify({ nope: true }), { status: 200 });
            }
            return new Response("{}", { status: 200 });
        };
        const app = new AppController(new ApiClient("http://test", badFetch));
        await app.start();
        expect(app.state.phase).toBe("error");
        expect(app.state.banner).toMatch(/unexpected session\.session_id payload/);
    });
});
