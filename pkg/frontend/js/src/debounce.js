/** Debounce with single-flight semantics for panel evaluation calls.
 *
 * Each invocation schedules the wrapped call after `delay` ms, cancelling
 * the pending timer and aborting any request already in flight, so at
 * most one evaluate request per panel is ever active.  Superseded
 * invocations resolve to undefined rather than dangling.
 */
export function latestOnly(fn, delay = 200) {
    let timer;
    let controller;
    let supersede;
    return (...args) => new Promise((resolve, reject) => {
        if (timer !== undefined)
            clearTimeout(timer);
        supersede?.();
        supersede = () => resolve(undefined);
        timer = setTimeout(() => {
            supersede = undefined;
            controller?.abort();
            controller = new AbortController();
            fn(controller.signal, ...args).then(resolve, (err) => {
                if (err?.name === "AbortError") {
                    resolve(undefined);
                }
                else {
                    reject(err);
                }
            });
        }, delay);
    });
}
