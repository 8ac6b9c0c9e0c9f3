/* tslint:disable */
/* eslint-disable */

export class SwissRollDemo {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    posterior(x: number, y: number, n: number, sigma: number, count: number, seed: number): Float64Array;
    sample(count: number, seed: number): Float64Array;
    /**
     * Trains on `samples` fresh Swiss-roll points; returns the loss curve.
     */
    train(samples: number, epochs: number, levels: number, hidden: number, seed: number): Float64Array;
    trainingData(): Float64Array;
}

export function regretCurves(k: number, n: number, runs: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_swissrolldemo_free: (a: number, b: number) => void;
    readonly regretCurves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly swissrolldemo_new: () => number;
    readonly swissrolldemo_posterior: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly swissrolldemo_sample: (a: number, b: number, c: number) => [number, number, number, number];
    readonly swissrolldemo_train: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly swissrolldemo_trainingData: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
