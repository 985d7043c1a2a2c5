/**
 * Headless scripted client: replays ground-truth labels through the live
 * API until the campaign completes. Used by the end-to-end test to prove
 * the HTTP path yields the same journal as the in-process run, and usable
 * standalone:
 *
 *   node dist/driver.js --base-url http://127.0.0.1:8000 --labels-dir demo/labels
 *
 * Ground truth comes from the dataset's .label files (little-endian
 * uint32, semantic id in the low 16 bits). Ignore ids (0) are clamped to
 * class 1 because the HTTP contract requires a real class per point.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { ApiClient } from "./api.js";

export function readLabelFile(path: string): number[] {
    const raw = readFileSync(path);
    if (raw.length === 0 || raw.length % 4 !== 0) {
        throw new Error(`${path}: not a multiple of 4 bytes`);
    }
    const out: number[] = [];
    for (let offset = 0; offset < raw.length; offset += 4) {
        out.push(raw.readUInt32LE(offset) & 0xffff);
    }
    return out;
}

export interface DriverResult {
    submissions: number;
    rounds: number;
}

export async function driveCampaign(
    baseUrl: string,
    labelsDir: string,
    fetchImpl: typeof fetch = fetch,
): Promise<DriverResult> {
    const api = new ApiClient(baseUrl, fetchImpl);
    const session = await api.session();
    const cache = new Map<string, number[]>();
    let submissions = 0;
    let rounds = 0;

    for (;;) {
        const next = await api.next(session.session_id);
        if (next.kind === "done") {
            return { submissions, rounds };
        }
        const query = next.query;
        rounds = Math.max(rounds, query.round);
        let labels = cache.get(query.scan_id);
        if (!labels) {
            labels = readLabelFile(join(labelsDir, `${query.scan_id}.label`));
            cache.set(query.scan_id, labels);
        }
        const truth = labels;
        const reveal = query.point_indices.map((i) => {
            const v = truth[i];
            if (v === undefined) throw new Error(`${query.scan_id}: index ${i} out of range`);
            return Math.max(1, v);
        });
        await api.submitLabels(session.session_id, query.scan_id, query.coord, reveal);
        submissions += 1;
    }
}

function argValue(flag: string): string | undefined {
    const i = process.argv.indexOf(flag);
    return i >= 0 ? process.argv[i + 1] : undefined;
}

const isMain =
    typeof process !== "undefined" &&
    process.argv[1] !== undefined &&
    import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "@none");

if (isMain) {
    const baseUrl = argValue("--base-url") ?? "http://127.0.0.1:8000";
    const labelsDir = argValue("--labels-dir");
    if (!labelsDir) {
        console.error("usage: driver --base-url URL --labels-dir DIR");
        process.exit(2);
    }
    driveCampaign(baseUrl, labelsDir)
        .then((result) => {
            console.log(JSON.stringify(result));
        })
        .catch((err) => {
            console.error(String(err));
            process.exit(1);
        });
}
