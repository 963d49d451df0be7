/** Model-kind metadata and parameter domain handling for the entry panel.
 *
 * Slider definitions enforce the parameter domains (alpha strictly above
 * one for the gamma composites, positive ranges, sills inside the unit
 * interval) so the panel cannot emit a descriptor the service would have
 * to reject for a domain reason.
 */

import type { Descriptor } from "./api.js";

export const EXPONENTIAL_AUTO = "ExponentialAuto";
export const EXPONENTIAL_CROSS = "ExponentialCross";
export const GAUSSIAN_CROSS = "GaussianCross";
export const SPHERICAL_CROSS = "SphericalCross";
export const GAMMA_EXPONENTIAL = "GammaExponential";
export const GAMMA_GAUSSIAN = "GammaGaussian";
export const GAMMA_SPHERICAL = "GammaSpherical";
export const INTERPOLATED = "Interpolated";
export const REST = "Rest";

export const GAMMA_KINDS = new Set([
  GAMMA_EXPONENTIAL,
  GAMMA_GAUSSIAN,
  GAMMA_SPHERICAL,
]);

const CROSS_KINDS = [
  EXPONENTIAL_CROSS,
  GAUSSIAN_CROSS,
  SPHERICAL_CROSS,
  GAMMA_EXPONENTIAL,
  GAMMA_GAUSSIAN,
  GAMMA_SPHERICAL,
];

export interface Params {
  sill: number;
  range: number;
  alpha: number;
  theta: number;
  weight: number;
}

export interface SliderSpec {
  name: keyof Params;
  label: string;
  min: number;
  max: number;
  step: number;
}

const SILL: SliderSpec = { name: "sill", label: "sill c", min: 0.001, max: 0.999, step: 0.0001 };
const RANGE: SliderSpec = { name: "range", label: "range d", min: 0.5, max: 200, step: 0.5 };
// alpha > 1 is a hard domain bound for the gamma kinds; the slider floor
// sits just above it so no reachable position is invalid.
const ALPHA: SliderSpec = { name: "alpha", label: "alpha", min: 1.01, max: 12, step: 0.01 };
const THETA: SliderSpec = { name: "theta", label: "theta", min: 0.01, max: 5, step: 0.01 };
const WEIGHT: SliderSpec = { name: "weight", label: "weight", min: 0, max: 12, step: 0.05 };

/** Sliders a kind exposes, in display order. */
export function sliderSpecs(kind: string): SliderSpec[] {
  if (GAMMA_KINDS.has(kind)) return [SILL, RANGE, ALPHA, THETA, WEIGHT];
  if (kind === INTERPOLATED || kind === REST) return [];
  return [SILL, RANGE];
}

/** Kinds selectable for an editable entry slot. */
export function allowedKinds(tail: number, head: number, restHead: number): string[] {
  if (head === restHead) return [];
  if (tail === head) return [EXPONENTIAL_AUTO];
  return CROSS_KINDS.slice();
}

/** Clamp a parameter vector into the domains the sliders advertise. */
export function clampParams(kind: string, p: Params): Params {
  const out = { ...p };
  for (const spec of sliderSpecs(kind)) {
    const v = out[spec.name];
    out[spec.name] = Math.min(spec.max, Math.max(spec.min, v));
  }
  return out;
}

/** Starting parameters when a kind is first chosen for an entry. */
export function defaultParams(headProportion: number, maxLag: number): Params {
  return {
    sill: Math.min(0.999, Math.max(0.001, headProportion)),
    range: Math.max(0.5, maxLag / 4),
    alpha: 2.0,
    theta: 0.5,
    weight: 0,
  };
}

/** Build the descriptor a panel state stands for.
 *
 * With `templateSill` the sill is left out and the service resolves it
 * to the head-class proportion, matching the document template form.
 */
export function toDescriptor(kind: string, p: Params, templateSill = false): Descriptor {
  const d: Descriptor = { kind };
  if (!templateSill) d.sill = p.sill;
  d.range = p.range;
  if (GAMMA_KINDS.has(kind)) {
    d.alpha = p.alpha;
    d.theta = p.theta;
    d.weight = p.weight;
  }
  return d;
}

/** Parameters carried by an existing descriptor, defaults elsewhere. */
export function fromDescriptor(d: Descriptor, fallback: Params): Params {
  return {
    sill: d.sill ?? fallback.sill,
    range: d.range ?? fallback.range,
    alpha: d.alpha ?? fallback.alpha,
    theta: d.theta ?? fallback.theta,
    weight: d.weight ?? fallback.weight,
  };
}
