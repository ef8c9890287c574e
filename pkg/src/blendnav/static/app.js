// Operator console entry point: one websocket, one shared session object,
// a 20 Hz command sender, and a requestAnimationFrame render loop.
import { InputTracker, SEND_HZ } from "./input.js";
import { decodeFrame, encodeCommand } from "./protocol.js";
import { drawScene } from "./render.js";
import { Session } from "./session.js";
function nowSeconds() {
    return performance.now() / 1000;
}
function main() {
    const canvas = document.getElementById("scene");
    const ctx = canvas.getContext("2d");
    const modeButton = document.getElementById("mode");
    const session = new Session();
    const input = new InputTracker();
    let seq = 0;
    let modeRequest;
    const ws = new WebSocket(`ws://${location.host}/ws`);
    ws.onopen = () => {
        session.connection = "open";
    };
    ws.onclose = () => {
        session.connection = "closed";
    };
    ws.onmessage = (ev) => {
        const frame = decodeFrame(String(ev.data));
        if (!frame)
            return;
        const now = nowSeconds();
        if (frame.type === "config")
            session.onConfig(frame, now);
        else if (frame.type === "state")
            session.onState(frame, now);
        else if (frame.type === "costmap")
            session.onCostmap(frame, now);
        else
            session.onRunEvent(frame, now);
        modeButton.textContent = `mode: ${session.mode}`;
    };
    window.addEventListener("keydown", (ev) => {
        if (!ev.repeat)
            input.keyDown(ev.code);
    });
    window.addEventListener("keyup", (ev) => input.keyUp(ev.code));
    window.addEventListener("blur", () => input.clear());
    modeButton.addEventListener("click", () => {
        modeRequest = session.mode === "bsc" ? "manual" : "bsc";
        session.mode = modeRequest;
    });
    // fixed-cadence sender: held keys ramp, idle keys heartbeat zeros
    setInterval(() => {
        if (ws.readyState !== WebSocket.OPEN)
            return;
        const drive = input.step(1 / SEND_HZ);
        const cmd = {
            type: "cmd",
            seq: ++seq,
            stamp: nowSeconds(),
            vx_norm: drive.vx_norm,
            omega_norm: drive.omega_norm,
        };
        if (modeRequest) {
            cmd.mode_request = modeRequest;
            modeRequest = undefined;
        }
        ws.send(encodeCommand(cmd));
    }, 1000 / SEND_HZ);
    const frame = () => {
        drawScene(ctx, session, nowSeconds());
        requestAnimationFrame(frame);
    };
    requestAnimationFrame(frame);
}
main();
