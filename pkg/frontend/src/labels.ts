/**
 * Per-point label buffer for the current query.
 *
 * Default interaction is bulk labeling of the whole voxel with an optional
 * per-point brush override; submission is only possible once every point
 * carries a class id in 1..classCount.
 */

export class LabelBuffer {
    private labels: (number | null)[];

    constructor(
        public readonly size: number,
        public readonly classCount: number,
    ) {
        if (size < 1) throw new Error("label buffer needs at least one point");
        if (classCount < 1) throw new Error("label buffer needs at least one class");
        this.labels = new Array<number | null>(size).fill(null);
    }

    private checkClass(classId: number): void {
        if (!Number.isInteger(classId) || classId < 1 || classId > this.classCount) {
            throw new Error(`class id ${classId} outside 1..${this.classCount}`);
        }
    }

    /** Assign one class to every point (the per-voxel bulk action). */
    assignAll(classId: number): void {
        this.checkClass(classId);
        this.labels.fill(classId);
    }

    /** Per-point brush override. */
    assignPoint(index: number, classId: number): void {
        if (index < 0 || index >= this.size) {
            throw new Error(`point index ${index} outside 0..${this.size - 1}`);
        }
        this.checkClass(classId);
        this.labels[index] = classId;
    }

    labelOf(index: number): number | null {
        return this.labels[index] ?? null;
    }

    labeledCount(): number {
        return this.labels.reduce<number>((acc, v) => acc + (v === null ? 0 : 1), 0);
    }

    /** True once every point has a class; gates the submit button. */
    isComplete(): boolean {
        return this.labels.every((v) => v !== null);
    }

    /** The payload for POST /label; only valid when complete. */
    toArray(): number[] {
        if (!this.isComplete()) {
            throw new Error("label buffer is incomplete");
        }
        return this.labels.map((v) => v as number);
    }

    clear(): void {
        this.labels.fill(null);
    }
}
