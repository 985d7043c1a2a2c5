/**
 * Live end-to-end check against the real HTTP service.
 *
 * Generates a dataset, runs the in-process reference campaign via the
 * CLI, then boots `annotator serve` and drives the same campaign through
 * POST /label with ground-truth replays. The two journals must be
 * byte-identical.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { driveCampaign, readLabelFile } from "../src/driver.js";

const PY = process.env.ANNOTATOR_PYTHON ?? "python3";
const REPO_ROOT = join(__dirname, "..", "..");
const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;

function runCli(...args: string[]): void {
    const result = spawnSync(PY, ["-m", "annotator.cli", ...args], {
        cwd: REPO_ROOT,
        encoding: "utf-8",
    });
    if (result.status !== 0) {
        throw new Error(`annotator ${args[0]} failed:\n${result.stdout}\n${result.stderr}`);
    }
}

async function waitForServer(timeoutMs = 30000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
        try {
            const res = await fetch(`${BASE}/api/v1/session`);
            if (res.ok) return;
        } catch {
            // not up yet
        }
        if (Date.now() > deadline) throw new Error("annotation service did not come up");
        await new Promise((resolve) => setTimeout(resolve, 250));
    }
}

beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "labeler-e2e-"));
    runCli("synth", "--out", join(workDir, "data"), "--scans", "3", "--points", "600", "--seed", "42");
    runCli(
        "loop",
        "--scans", join(workDir, "data", "scans"),
        "--labels", join(workDir, "data", "labels"),
        "--class-map", join(workDir, "data", "classmap.txt"),
        "--mode", "al",
        "--strategy", "vcd",
        "--budget-voxels", "5",
        "--epochs", "40",
        "--seed", "42",
        "--out", join(workDir, "ref"),
    );
    const config = {
        mode: "al",
        strategy: "vcd",
        voxel_size: 0.25,
        budget_voxels: 5,
        seed: 42,
        epochs: 40,
        scans: join(workDir, "data", "scans"),
        labels: join(workDir, "data", "labels"),
        class_map: join(workDir, "data", "classmap.txt"),
        out: join(workDir, "live"),
    };
    writeFileSync(join(workDir, "serve.json"), JSON.stringify(config));
    server = spawn(
        PY,
        ["-m", "annotator.cli", "serve", "--config", join(workDir, "serve.json"), "--port", String(PORT)],
        { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
    );
    await waitForServer();
}, 60000);

afterAll(() => {
    server?.kill("SIGTERM");
    rmSync(workDir, { recursive: true, force: true });
});

describe("live labeling session", () => {
    it("replaying ground truth over HTTP reproduces the in-process journal", async () => {
        const result = await driveCampaign(BASE, join(workDir, "data", "labels"));
        expect(result.submissions).toBe(15); // 3 scans x budget 5
        expect(result.rounds).toBe(5);

        const live = readFileSync(join(workDir, "live", "journal.ndjson"), "utf-8");
        const ref = readFileSync(join(workDir, "ref", "journal.ndjson"), "utf-8");
        expect(live).toBe(ref);
    }, 60000);

    it("server reports the campaign as done and stats add up", async () => {
        const session = (await (await fetch(`${BASE}/api/v1/session`)).json()) as {
            session_id: string;
            status: string;
        };
        expect(session.status).toBe("done");
        const next = await fetch(`${BASE}/api/v1/session/${session.session_id}/next`);
        expect(next.status).toBe(409);

        const stats = (await (await fetch(`${BASE}/api/v1/stats`)).json()) as {
            base_available: boolean;
            classes: { selected_count: number }[];
        };
        expect(stats.base_available).toBe(true);
        const selected = stats.classes.reduce((a, c) => a + c.selected_count, 0);
        const journal = readFileSync(join(workDir, "live", "journal.ndjson"), "utf-8");
        const revealed = journal
            .trim()
            .split("\n")
            .slice(1)
            .reduce((a, line) => a + (JSON.parse(line) as { revealed_labels: number[] }).revealed_labels.length, 0);
        expect(selected).toBe(revealed);
    });

    it("label files parse as little-endian uint32 low-16 ids", () => {
        const labels = readLabelFile(join(workDir, "data", "labels", "scan_0000.label"));
        expect(labels).toHaveLength(600);
        expect(Math.min(...labels)).toBeGreaterThanOrEqual(1);
        expect(Math.max(...labels)).toBeLessThanOrEqual(5);
    });
});
