import assert from "node:assert/strict";
import { test } from "node:test";
import { EXPONENTIAL_AUTO, EXPONENTIAL_CROSS, GAMMA_EXPONENTIAL, INTERPOLATED, REST, allowedKinds, clampParams, defaultParams, fromDescriptor, sliderSpecs, toDescriptor, } from "../src/params.js";
const P = { sill: 0.2, range: 30, alpha: 2, theta: 0.5, weight: 1 };
test("gamma kinds expose five sliders with alpha strictly above one", () => {
    const specs = sliderSpecs(GAMMA_EXPONENTIAL);
    assert.equal(specs.length, 5);
    const alpha = specs.find((s) => s.name === "alpha");
    assert.ok(alpha && alpha.min > 1);
});
test("basic kinds expose sill and range only", () => {
    const names = sliderSpecs(EXPONENTIAL_CROSS).map((s) => s.name);
    assert.deepEqual(names, ["sill", "range"]);
    assert.deepEqual(sliderSpecs(INTERPOLATED), []);
    assert.deepEqual(sliderSpecs(REST), []);
});
test("clamp pins out-of-domain values to the slider bounds", () => {
    const c = clampParams(GAMMA_EXPONENTIAL, {
        ...P,
        alpha: 0.4,
        weight: -3,
        sill: 1.2,
    });
    assert.ok(c.alpha > 1);
    assert.equal(c.weight, 0);
    assert.ok(c.sill < 1);
});
test("clamp leaves in-domain values untouched", () => {
    assert.deepEqual(clampParams(GAMMA_EXPONENTIAL, P), P);
});
test("allowed kinds: auto on the diagonal, crosses off it, none on Rest", () => {
    assert.deepEqual(allowedKinds(2, 2, 0), [EXPONENTIAL_AUTO]);
    const off = allowedKinds(0, 1, 0);
    assert.ok(off.length >= 4 && !off.includes(EXPONENTIAL_AUTO));
    assert.deepEqual(allowedKinds(0, 0, 0), []);
});
test("descriptor assembly matches the kind's parameter set", () => {
    const cross = toDescriptor(EXPONENTIAL_CROSS, P);
    assert.deepEqual(cross, { kind: EXPONENTIAL_CROSS, sill: 0.2, range: 30 });
    const gamma = toDescriptor(GAMMA_EXPONENTIAL, P);
    assert.equal(gamma.alpha, 2);
    assert.equal(gamma.weight, 1);
    const template = toDescriptor(EXPONENTIAL_CROSS, P, true);
    assert.ok(!("sill" in template));
});
test("defaults start the sill at the head proportion", () => {
    const d = defaultParams(0.31, 100);
    assert.equal(d.sill, 0.31);
    assert.equal(d.range, 25);
    assert.equal(defaultParams(0, 100).sill, 0.001);
});
test("existing descriptor values survive the round trip into params", () => {
    const params = fromDescriptor({ kind: GAMMA_EXPONENTIAL, sill: 0.1765, range: 80, alpha: 4, theta: 0.3, weight: 1.4 }, P);
    assert.equal(params.sill, 0.1765);
    assert.equal(params.theta, 0.3);
    const partial = fromDescriptor({ kind: EXPONENTIAL_CROSS, range: 12 }, P);
    assert.equal(partial.sill, P.sill);
    assert.equal(partial.range, 12);
});
