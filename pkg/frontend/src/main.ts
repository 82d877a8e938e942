// Operator console wiring: controls on the left, telemetry on the right.
// One render loop; socket events only mutate ConsoleState between frames.

import { drawStripChart, extractSeries } from "./charts.js";
import { ConsoleClient, SocketLike } from "./client.js";
import { chainLength, sideViewChain } from "./pose.js";
import {
  psiToPa,
  resetCommand,
  screwCommand,
  screwingCommand,
  sidewindingCommand,
  valveCommand,
  wheelingCommand,
} from "./protocol.js";
import { ConsoleState } from "./state.js";

const SEGMENT_LENGTH_M = 0.441;
const TANK_DEPTH_M = 1.5;
const CHART_WINDOW_S = 60;
const DEG = Math.PI / 180;

const state = new ConsoleState();
let client: ConsoleClient | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const statusBadge = el<HTMLSpanElement>("status");
const banner = el<HTMLDivElement>("banner");
const errorLine = el<HTMLDivElement>("error-line");
const pendingDot = el<HTMLSpanElement>("pending");
const controls = el<HTMLFieldSetElement>("controls");
const readout = el<HTMLDivElement>("readout");

function setStatus(status: string, detail?: string): void {
  statusBadge.textContent = detail ? `${status} (${detail})` : status;
  statusBadge.className = `badge ${status}`;
  controls.disabled = status !== "connected";
  if (status === "version-mismatch") {
    banner.textContent = `Protocol version mismatch: ${detail ?? ""}. Controls disabled.`;
    banner.style.display = "block";
  } else {
    banner.style.display = "none";
  }
}

function connect(): void {
  client?.close();
  const url = el<HTMLInputElement>("url").value;
  client = new ConsoleClient(
    url,
    (u) => new WebSocket(u) as unknown as SocketLike,
    {
      onStatus: setStatus,
      onTelemetry: (record) => state.onTelemetry(record),
      onServerError: (error) => {
        state.onError(error);
        errorLine.textContent = `service error [${error.code}]: ${error.message}`;
      },
    },
  );
  client.connect();
}

function send(command: Parameters<ConsoleClient["send"]>[0]): void {
  if (client?.send(command)) {
    state.onCommandSent();
    errorLine.textContent = "";
  }
}

function upstreamPa(): number | undefined {
  const text = el<HTMLInputElement>("upstream-psi").value.trim();
  if (text === "") return undefined;
  return psiToPa(Number(text));
}

function bindControls(): void {
  el<HTMLButtonElement>("connect").onclick = connect;
  for (const branch of ["front", "rear"] as const) {
    el<HTMLButtonElement>(`${branch}-open`).onclick = () =>
      send(valveCommand(branch, true, upstreamPa()));
    el<HTMLButtonElement>(`${branch}-close`).onclick = () =>
      send(valveCommand(branch, false));
    el<HTMLButtonElement>(`${branch}-vent`).onclick = () =>
      send(valveCommand(branch, true, 0));
  }
  el<HTMLButtonElement>("send-gait").onclick = () => {
    const mode = el<HTMLSelectElement>("gait-mode").value;
    if (mode === "sidewinding") {
      send(
        sidewindingCommand(
          Number(el<HTMLInputElement>("amp-pitch").value) * DEG,
          Number(el<HTMLInputElement>("amp-yaw").value) * DEG,
          Number(el<HTMLInputElement>("frequency").value),
          Number(el<HTMLInputElement>("phase-lag").value) * DEG,
        ),
      );
    } else if (mode === "screwing") {
      const radius = Number(el<HTMLInputElement>("turn-radius").value);
      send(screwingCommand(radius > 0 ? radius : null, Number(el<HTMLInputElement>("screw-speed").value)));
    } else {
      send(wheelingCommand(Number(el<HTMLInputElement>("ground-speed").value)));
    }
  };
  const screwSlider = el<HTMLInputElement>("screw-direct");
  screwSlider.onchange = () => send(screwCommand(Number(screwSlider.value)));
  el<HTMLButtonElement>("reset").onclick = () => send(resetCommand());
  el<HTMLSelectElement>("gait-mode").onchange = () => {
    const mode = el<HTMLSelectElement>("gait-mode").value;
    for (const row of document.querySelectorAll<HTMLElement>("[data-mode]")) {
      row.style.display = row.dataset.mode === mode ? "" : "none";
    }
  };
}

function ctx2d(id: string): CanvasRenderingContext2D {
  const canvas = el<HTMLCanvasElement>(id);
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  return ctx;
}

function drawPose(ctx: CanvasRenderingContext2D): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#0b1220";
  ctx.fillRect(0, 0, width, height);
  const latest = state.records.latest();
  const scale = height / (TANK_DEPTH_M * 1.35);
  const surfaceY = 12;
  const floorY = surfaceY + TANK_DEPTH_M * scale;
  ctx.strokeStyle = "#3b82f6";
  ctx.beginPath();
  ctx.moveTo(0, surfaceY);
  ctx.lineTo(width, surfaceY);
  ctx.stroke();
  ctx.strokeStyle = "#7c5c2b";
  ctx.beginPath();
  ctx.moveTo(0, floorY);
  ctx.lineTo(width, floorY);
  ctx.stroke();
  if (!latest) return;
  const points = sideViewChain(latest.joint_pitch_rad, SEGMENT_LENGTH_M);
  const bodyLength = chainLength(points);
  const x0 = width / 2 - (bodyLength * scale) / 2;
  const y0 = surfaceY + latest.depth_m * scale;
  ctx.strokeStyle = "#34d399";
  ctx.lineWidth = 5;
  ctx.lineCap = "round";
  ctx.beginPath();
  points.forEach((p, i) => {
    const px = x0 + p.x * scale;
    const py = y0 + p.z * scale;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}

function render(): void {
  const window = state.records.window(CHART_WINDOW_S);
  drawStripChart(
    ctx2d("chart-depth"),
    [extractSeries(window, (r) => r.depth_m)],
    ["#60a5fa"],
    { label: "depth m (down)", color: "", windowS: CHART_WINDOW_S, min: 0, max: TANK_DEPTH_M, invert: true },
  );
  drawStripChart(
    ctx2d("chart-velocity"),
    [extractSeries(window, (r) => r.velocity_m_s)],
    ["#f472b6"],
    { label: "velocity m/s (down +)", color: "", windowS: CHART_WINDOW_S },
  );
  drawStripChart(
    ctx2d("chart-fill"),
    [
      extractSeries(window, (r) => r.fill_front),
      extractSeries(window, (r) => r.fill_rear),
    ],
    ["#fbbf24", "#34d399"],
    { label: "fill front/rear", color: "", windowS: CHART_WINDOW_S, min: 0, max: 1 },
  );
  drawPose(ctx2d("pose"));

  const latest = state.records.latest();
  if (latest) {
    readout.textContent =
      `t=${latest.t_s.toFixed(2)} s  depth=${latest.depth_m.toFixed(3)} m  ` +
      `v=${latest.velocity_m_s.toFixed(4)} m/s  ` +
      `fill F=${latest.fill_front.toFixed(3)} R=${latest.fill_rear.toFixed(3)}  ` +
      `gait=${latest.gait ?? "none"}`;
  }
  pendingDot.style.visibility = state.pending ? "visible" : "hidden";
  requestAnimationFrame(render);
}

bindControls();
el<HTMLSelectElement>("gait-mode").dispatchEvent(new Event("change"));
requestAnimationFrame(render);
