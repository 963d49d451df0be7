/** Client-side draft of the model-set document.
 *
 * The draft mirrors what GET /modelset returned, accumulates the expert's
 * entry replacements, and serializes back into the exact document shape
 * PUT /modelset expects.  It enforces only slot legality; all numeric
 * validation stays on the service.
 */
import { REST } from "./params.js";
export class Draft {
    constructor(doc) {
        /** Entries changed since the draft was loaded or last saved. */
        this.touched = new Set();
        this.nClasses = doc.n_classes;
        this.restHeads = doc.rest_heads.slice();
        this.method = doc.method;
        this.marginals = doc.marginals.slice();
        this.format = doc.format;
        this.version = doc.version;
        this.entries = new Map(doc.entries.map((e) => [keyOf(e.tail, e.head), { ...e }]));
    }
    isRest(tail, head) {
        return this.restHeads[tail] === head;
    }
    entry(tail, head) {
        return this.entries.get(keyOf(tail, head));
    }
    /** Replace one entry with a descriptor; Rest slots are not writable. */
    setEntry(tail, head, d) {
        if (tail < 0 || tail >= this.nClasses || head < 0 || head >= this.nClasses) {
            throw new RangeError(`entry (${tail}, ${head}) out of range`);
        }
        if (this.isRest(tail, head)) {
            throw new RangeError(`entry (${tail}, ${head}) is the row's Rest slot`);
        }
        if (d.kind === REST) {
            throw new RangeError("Rest cannot be assigned explicitly");
        }
        this.entries.set(keyOf(tail, head), { tail, head, ...d });
        this.touched.add(keyOf(tail, head));
    }
    markSaved() {
        this.touched.clear();
    }
    /** The document to PUT: entries in (tail, head) order, no client extras. */
    toPayload() {
        const entries = [];
        for (let i = 0; i < this.nClasses; i++) {
            for (let j = 0; j < this.nClasses; j++) {
                const e = this.entries.get(keyOf(i, j));
                if (e)
                    entries.push({ ...e });
            }
        }
        return {
            format: this.format,
            version: this.version,
            n_classes: this.nClasses,
            method: this.method,
            marginals: this.marginals.slice(),
            rest_heads: this.restHeads.slice(),
            validated_lag_max: null,
            entries,
        };
    }
}
function keyOf(tail, head) {
    return `${tail},${head}`;
}
