/**
 * UI state machine, kept free of DOM so it is directly testable.
 *
 * Invariants: campaign state is only ever mutated through submit();
 * the budget indicator always shows the server-reported progress verbatim
 * (the client never counts on its own).
 */

import { ApiClient, SubmitRejected } from "./api.js";
import { LabelBuffer } from "./labels.js";
import { buildPalette, PaletteEntry } from "./palette.js";
import { PointRow, Progress, QueryPayload, SchemaError, StatsPayload } from "./types.js";

export type Phase = "loading" | "labeling" | "submitting" | "done" | "error";

export interface AppState {
    phase: Phase;
    sessionId: string | null;
    query: QueryPayload | null;
    context: PointRow[];
    buffer: LabelBuffer | null;
    palette: PaletteEntry[];
    progress: Progress | null; // always the server's own numbers
    banner: string | null;
    finalStats: StatsPayload | null;
    activeClass: number;
}

export class AppController {
    state: AppState = {
        phase: "loading",
        sessionId: null,
        query: null,
        context: [],
        buffer: null,
        palette: [],
        progress: null,
        banner: null,
        finalStats: null,
        activeClass: 1,
    };

    constructor(
        private api: ApiClient,
        private onChange: (state: AppState) => void = () => {},
        private contextStride = 5,
    ) {}

    private emit(): void {
        this.onChange(this.state);
    }

    async start(): Promise<void> {
        try {
            const session = await this.api.session();
            this.state.sessionId = session.session_id;
            this.state.progress = session.progress;
            const classes = await this.api.classes();
            this.state.palette = buildPalette(classes);
            await this.advance();
        } catch (err) {
            this.fail(err);
        }
    }

    private async advance(): Promise<void> {
        if (this.state.sessionId === null) throw new Error("no session");
        const next = await this.api.next(this.state.sessionId);
        if (next.kind === "done") {
            this.state.phase = "done";
            if (next.progress) this.state.progress = next.progress;
            this.state.query = null;
            this.state.buffer = null;
            this.state.finalStats = await this.api.stats().catch(() => null);
            this.emit();
            return;
        }
        const query = next.query;
        this.state.query = query;
        this.state.progress = query.progress;
        this.state.buffer = new LabelBuffer(query.points.length, query.class_count);
        this.state.context = await this.api
            .scanPoints(query.scan_id, this.contextStride)
            .catch(() => []);
        this.state.phase = "labeling";
        this.state.banner = null;
        this.emit();
    }

    /** Bulk per-voxel assignment (the default labeling gesture). */
    bulkAssign(classId: number): void {
        this.state.buffer?.assignAll(classId);
        this.state.activeClass = classId;
        this.emit();
    }

    /** Per-point brush override. */
    brushPoint(index: number): void {
        this.state.buffer?.assignPoint(index, this.state.activeClass);
        this.emit();
    }

    setActiveClass(classId: number): void {
        this.state.activeClass = classId;
        this.emit();
    }

    canSubmit(): boolean {
        return this.state.phase === "labeling" && this.state.buffer?.isComplete() === true;
    }

    async submit(): Promise<void> {
        const { query, buffer, sessionId } = this.state;
        if (!query || !buffer || !sessionId) return;
        if (!buffer.isComplete()) {
            this.state.banner = "label every point before submitting";
            this.emit();
            return;
        }
        this.state.phase = "submitting";
        this.emit();
        try {
            const ack = await this.api.submitLabels(
                sessionId,
                query.scan_id,
                query.coord,
                buffer.toArray(),
            );
            this.state.progress = ack.progress;
            await this.advance(); // buffer is rebuilt for the next query
        } catch (err) {
            // rejection or network failure: the buffer must survive untouched
            this.state.phase = "labeling";
            if (err instanceof SubmitRejected) {
                this.state.banner = `server rejected the submission: ${err.reason}`;
            } else {
                this.state.banner = `submission failed (${String(err)}); labels kept, retry when ready`;
            }
            this.emit();
        }
    }

    private fail(err: unknown): void {
        this.state.phase = "error";
        this.state.banner =
            err instanceof SchemaError
                ? err.message
                : `could not reach the annotation service: ${String(err)}`;
        this.emit();
    }
}
