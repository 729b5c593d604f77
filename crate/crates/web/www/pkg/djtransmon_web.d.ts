/* tslint:disable */
/* eslint-disable */

/**
 * χ_q, χ_int and χ₀ in MHz over a flux grid; breakdown points are flagged.
 */
export function dispersive_sweep(params_json: string, start: number, stop: number, count: number, nc: number): string;

/**
 * Reduced and BO potentials on [−π, π] at one flux, with their harmonic content.
 */
export function effective_potential(params_json: string, flux: number, points: number): string;

/**
 * f₀ₖ/k and α over a flux grid for one model.
 */
export function flux_spectrum(params_json: string, model: string, start: number, stop: number, count: number, nc: number): string;

/**
 * Bundled reference parameters, "cd1" or "cd2".
 */
export function preset_params(name: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dispersive_sweep: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly effective_potential: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly flux_spectrum: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly preset_params: (a: number, b: number) => [number, number, number, number];
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
