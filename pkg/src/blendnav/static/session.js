// Client session state: the single object shared by the network callbacks
// and the render loop. Rendering reflects only server-sent frames; nothing
// here predicts or recomputes simulation quantities.
export const STALE_SECONDS = 2.0;
export class Session {
    connection = "connecting";
    config = null;
    state = null;
    costmap = null;
    events = [];
    mode = "bsc";
    lastFrameAt = -Infinity; // wall clock, seconds
    onConfig(frame, now) {
        this.config = frame;
        this.mode = frame.mode;
        this.lastFrameAt = now;
    }
    onState(frame, now) {
        this.state = frame;
        this.lastFrameAt = now;
    }
    onCostmap(frame, now) {
        this.costmap = frame;
        this.lastFrameAt = now;
    }
    onRunEvent(frame, now) {
        this.events.push(frame);
        this.lastFrameAt = now;
    }
    /** True when no frame has arrived for STALE_SECONDS (or disconnected). */
    degraded(now) {
        return this.connection !== "open" || now - this.lastFrameAt > STALE_SECONDS;
    }
}
