// Canvas scene: grayscale costmap cells, oriented robot triangle, goal
// marker, alpha gauge, and the user/agent command arrows.
import { decodeCostCells } from "./protocol.js";
/** World (meters, y up) to canvas (pixels, y down). */
export function worldToCanvas(vp, x, y) {
    return [
        vp.cssWidth / 2 + (x - vp.centerX) * vp.pixelsPerMeter,
        vp.cssHeight / 2 - (y - vp.centerY) * vp.pixelsPerMeter,
    ];
}
/** Cost 0..255 -> grayscale so free space is light and walls are dark. */
export function costToGray(cost) {
    return 235 - Math.round((cost / 255) * 215);
}
export function viewportFor(canvas, state, costmap) {
    const span = costmap ? costmap.width * costmap.resolution : 6;
    const cssWidth = canvas.width;
    const cssHeight = canvas.height;
    return {
        cssWidth,
        cssHeight,
        pixelsPerMeter: Math.min(cssWidth, cssHeight) / span,
        centerX: state ? state.pose.x : 0,
        centerY: state ? state.pose.y : 0,
    };
}
export function drawScene(ctx, session, nowSeconds) {
    const { canvas } = ctx;
    ctx.fillStyle = "#11151a";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const vp = viewportFor(canvas, session.state, session.costmap);
    if (session.costmap)
        drawCostmap(ctx, vp, session.costmap);
    if (session.state) {
        drawGoal(ctx, vp, session.state);
        drawRobot(ctx, vp, session.state);
        drawArrows(ctx, session.state);
        drawAlphaGauge(ctx, session.state);
        drawStatus(ctx, session.state);
    }
    if (session.degraded(nowSeconds))
        drawBanner(ctx, "connection degraded");
}
function drawCostmap(ctx, vp, frame) {
    const cells = decodeCostCells(frame);
    const cellPx = Math.max(1, frame.resolution * vp.pixelsPerMeter);
    for (let r = 0; r < frame.height; r++) {
        for (let c = 0; c < frame.width; c++) {
            const cost = cells[r * frame.width + c];
            if (cost === 0)
                continue;
            const wx = frame.origin.x + (c + 0.5) * frame.resolution;
            const wy = frame.origin.y + (r + 0.5) * frame.resolution;
            const [px, py] = worldToCanvas(vp, wx, wy);
            const g = costToGray(cost);
            ctx.fillStyle = `rgb(${g},${g},${g})`;
            ctx.fillRect(px - cellPx / 2, py - cellPx / 2, cellPx, cellPx);
        }
    }
}
function drawRobot(ctx, vp, state) {
    const [px, py] = worldToCanvas(vp, state.pose.x, state.pose.y);
    const size = 0.25 * vp.pixelsPerMeter;
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate(-state.pose.theta); // canvas y is flipped
    ctx.beginPath();
    ctx.moveTo(size, 0);
    ctx.lineTo(-size * 0.6, size * 0.55);
    ctx.lineTo(-size * 0.6, -size * 0.55);
    ctx.closePath();
    ctx.fillStyle = "#5ec8f8";
    ctx.fill();
    ctx.restore();
}
function drawGoal(ctx, vp, state) {
    const [px, py] = worldToCanvas(vp, state.goal.x, state.goal.y);
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, 2 * Math.PI);
    ctx.strokeStyle = "#58d68d";
    ctx.lineWidth = 2;
    ctx.stroke();
}
function drawAlphaGauge(ctx, state) {
    const w = 160;
    const x = ctx.canvas.width - w - 16;
    ctx.fillStyle = "#2a2f36";
    ctx.fillRect(x, 16, w, 14);
    ctx.fillStyle = "#f4c34a";
    ctx.fillRect(x, 16, w * state.alpha, 14);
    ctx.fillStyle = "#cfd8e3";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText(`alpha ${state.alpha.toFixed(3)}`, x, 44);
}
function drawArrows(ctx, state) {
    const cx = 70;
    const cy = ctx.canvas.height - 70;
    const arrow = (vx, omega, color, width) => {
        ctx.strokeStyle = color;
        ctx.lineWidth = width;
        ctx.beginPath();
        ctx.moveTo(cx, cy);
        ctx.lineTo(cx + omega * -40, cy - vx * 40);
        ctx.stroke();
    };
    // user arrow highlighted when it holds authority
    arrow(state.agent_cmd.vx, state.agent_cmd.omega, "#8e6ef2", 2);
    arrow(state.user_cmd.vx, state.user_cmd.omega, "#f4c34a", state.alpha >= 0.5 ? 4 : 2);
    arrow(state.blended_cmd.vx, state.blended_cmd.omega, "#5ec8f8", 2);
}
function drawStatus(ctx, state) {
    ctx.fillStyle = "#cfd8e3";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText(`t=${state.sim_time.toFixed(1)}s  d=${state.d.toFixed(2)}m  ${state.status}`, 16, 28);
}
function drawBanner(ctx, text) {
    ctx.fillStyle = "rgba(170, 40, 40, 0.9)";
    ctx.fillRect(0, 0, ctx.canvas.width, 34);
    ctx.fillStyle = "#fff";
    ctx.font = "bold 14px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(text, ctx.canvas.width / 2, 22);
    ctx.textAlign = "left";
}
