/** Debounce with single-flight semantics for panel evaluation calls.
 *
 * Each invocation schedules the wrapped call after `delay` ms, cancelling
 * the pending timer and aborting any request already in flight, so at
 * most one evaluate request per panel is ever active.  Superseded
 * invocations resolve to undefined rather than dangling.
 */

export type Cancellable<A extends unknown[], R> = (
  signal: AbortSignal,
  ...args: A
) => Promise<R>;

export function latestOnly<A extends unknown[], R>(
  fn: Cancellable<A, R>,
  delay = 200,
): (...args: A) => Promise<R | undefined> {
  let timer: ReturnType<typeof setTimeout> | undefined;
  let controller: AbortController | undefined;
  let supersede: (() => void) | undefined;

  return (...args: A) =>
    new Promise<R | undefined>((resolve, reject) => {
      if (timer !== undefined) clearTimeout(timer);
      supersede?.();
      supersede = () => resolve(undefined);
      timer = setTimeout(() => {
        supersede = undefined;
        controller?.abort();
        controller = new AbortController();
        fn(controller.signal, ...args).then(resolve, (err) => {
          if ((err as Error)?.name === "AbortError") {
            resolve(undefined);
          } else {
            reject(err);
          }
        });
      }, delay);
    });
}
