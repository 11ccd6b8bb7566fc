// At most one preview request in flight: issuing a new one aborts the old.

export class SingleFlight {
  private controller: AbortController | null = null;
  private counter = 0;

  /** Runs `task` with a fresh AbortSignal, canceling any running task.
   * Resolves to null when this call was superseded by a newer one. */
  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.counter;
    try {
      const result = await task(controller.signal);
      return ticket === this.counter ? result : null;
    } catch (err) {
      if (controller.signal.aborted) return null;
      throw err;
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }

  get busy(): boolean {
    return this.controller !== null;
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
  }
}
