// Wire schema for the /ws teleoperation socket. Field names are fixed by
// the server; decode defensively and drop anything that does not fit.
function isNum(x) {
    return typeof x === "number" && Number.isFinite(x);
}
function isTwist(x) {
    const t = x;
    return !!t && isNum(t.vx) && isNum(t.omega);
}
/** Parse one server message; returns null for anything malformed. */
export function decodeFrame(text) {
    let msg;
    try {
        msg = JSON.parse(text);
    }
    catch {
        return null;
    }
    if (!msg || typeof msg !== "object")
        return null;
    switch (msg.type) {
        case "state": {
            const m = msg;
            const poseOk = !!m.pose && isNum(m.pose.x) && isNum(m.pose.y) && isNum(m.pose.theta);
            const goalOk = !!m.goal && isNum(m.goal.x) && isNum(m.goal.y);
            if (poseOk && goalOk && isNum(m.tick) && isNum(m.sim_time) &&
                isNum(m.alpha) && isNum(m.d) && isNum(m.delta) &&
                isTwist(m.user_cmd) && isTwist(m.agent_cmd) && isTwist(m.blended_cmd) &&
                typeof m.status === "string") {
                return m;
            }
            return null;
        }
        case "costmap": {
            const m = msg;
            if (isNum(m.width) && isNum(m.height) && isNum(m.resolution) &&
                !!m.origin && isNum(m.origin.x) && isNum(m.origin.y) &&
                typeof m.data_b64 === "string") {
                return m;
            }
            return null;
        }
        case "config": {
            const m = msg;
            return isNum(m.v_max) && isNum(m.omega_max) ? m : null;
        }
        case "run_event": {
            const m = msg;
            return typeof m.kind === "string" && isNum(m.sim_time) ? m : null;
        }
        default:
            return null;
    }
}
export function encodeCommand(cmd) {
    return JSON.stringify(cmd);
}
/** Row-major uint8 cost cells from a costmap frame. */
export function decodeCostCells(frame) {
    const bin = atob(frame.data_b64);
    const cells = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++)
        cells[i] = bin.charCodeAt(i);
    return cells;
}
