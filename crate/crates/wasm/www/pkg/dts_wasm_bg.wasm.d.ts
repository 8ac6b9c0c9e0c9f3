/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_swissrolldemo_free: (a: number, b: number) => void;
export const regretCurves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const swissrolldemo_new: () => number;
export const swissrolldemo_posterior: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const swissrolldemo_sample: (a: number, b: number, c: number) => [number, number, number, number];
export const swissrolldemo_train: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const swissrolldemo_trainingData: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
