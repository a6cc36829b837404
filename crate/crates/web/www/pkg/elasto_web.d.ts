/* tslint:disable */
/* eslint-disable */

/**
 * A simulated frame pair with its ground truth and the latest estimate.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    cols(): number;
    /**
     * RGBA pixels of a field; `lo >= hi` selects the field's own range.
     */
    image(name: string, colormap: string, lo: number, hi: number): Uint8Array;
    /**
     * `kind` is `uniform`, `inclusion` or `different_pr`; a non-finite
     * `snr_db` means noiseless frames.
     */
    constructor(rows: number, cols: number, kind: string, applied_strain: number, seed: number, snr_db: number);
    rows(): number;
    /**
     * RMSE and PSNR of an estimated field against its ground truth.
     */
    score(name: string): Float64Array;
    /**
     * Runs `method` with the mechanical weight set to `alpha3` (the L1 weight
     * for the L1 methods). Returns the cost trace.
     */
    track(method: string, alpha3: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_cols: (a: number) => number;
    readonly demo_image: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly demo_rows: (a: number) => number;
    readonly demo_score: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_track: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
