// SPDX-License-Identifier: Apache-2.0
import init, { Demo } from "./pkg/adp_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const $ = (id) => document.getElementById(id);
let demo = null;

function status(text, error = false) {
  $("status").textContent = text;
  $("status").className = error ? "err" : "";
}

function drawScatter(points, colors, labeled = []) {
  const c = $("scatter"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const xs = points.filter((_, i) => i % 2 === 0), ys = points.filter((_, i) => i % 2 === 1);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const pad = 16, sx = (c.width - 2 * pad) / (x1 - x0 || 1), sy = (c.height - 2 * pad) / (y1 - y0 || 1);
  const px = (i) => [pad + (xs[i] - x0) * sx, c.height - pad - (ys[i] - y0) * sy];
  xs.forEach((_, i) => {
    const [x, y] = px(i);
    g.fillStyle = colors[i] < 0 ? "#999" : COLORS[colors[i] % COLORS.length];
    g.beginPath();
    g.arc(x, y, 3.5, 0, 2 * Math.PI);
    g.fill();
  });
  g.strokeStyle = "#000";
  g.lineWidth = 2;
  for (const i of labeled) {
    const [x, y] = px(i);
    g.strokeRect(x - 6, y - 6, 12, 12);
  }
}

function drawHeatmap(values, n) {
  const c = $("heatmap"), g = c.getContext("2d");
  const img = g.createImageData(n, n);
  values.forEach((v, i) => {
    const shade = 255 - Math.round(255 * Math.sqrt(v));
    img.data.set([shade, shade, 255, 255], 4 * i);
  });
  const tmp = new OffscreenCanvas(n, n);
  tmp.getContext("2d").putImageData(img, 0, 0);
  g.imageSmoothingEnabled = false;
  g.clearRect(0, 0, c.width, c.height);
  g.drawImage(tmp, 0, 0, c.width, c.height);
}

function drawTrace(trace) {
  const c = $("trace"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (trace.length === 0) return;
  const logs = trace.map((r) => Math.log10(Math.max(r, 1e-16)));
  const lo = Math.min(...logs), hi = Math.max(...logs);
  g.strokeStyle = "#333";
  g.beginPath();
  logs.forEach((v, i) => {
    const x = 30 + (i / Math.max(trace.length - 1, 1)) * (c.width - 40);
    const y = 10 + (hi - v) / (hi - lo || 1) * (c.height - 30);
    i ? g.lineTo(x, y) : g.moveTo(x, y);
  });
  g.stroke();
  g.fillStyle = "#333";
  g.fillText(`log10 residual ${hi.toFixed(1)} .. ${lo.toFixed(1)}, ${trace.length} iterations`, 30, c.height - 4);
}

function generate() {
  try {
    demo?.free();
    demo = new Demo($("kind").value, +$("n").value, +$("classes").value, +$("noise").value, +$("dseed").value, +$("k").value);
    const truth = Array.from(demo.truth());
    drawScatter(demo.points(), truth);
    drawHeatmap(demo.heatmap(), truth.length);
    drawTrace([]);
    status(`${truth.length} points; colours show the ground truth, heatmap shows kNN weights`);
  } catch (e) {
    status(String(e.message ?? e), true);
  }
}

function classify() {
  if (!demo) return;
  try {
    const t0 = performance.now();
    const out = JSON.parse(demo.classify($("method").value, +$("delta").value, +$("lseed").value, +$("alpha").value));
    const ms = performance.now() - t0;
    drawScatter(demo.points(), out.predictions, out.labeled);
    drawHeatmap(demo.heatmap(), out.predictions.length);
    drawTrace(out.residual_trace);
    status(`${out.method}: accuracy ${(100 * out.accuracy).toFixed(1)}% on unlabeled points, ` +
      `${out.iterations} iterations${out.converged ? "" : " (limit reached)"}, ${ms.toFixed(0)} ms`);
  } catch (e) {
    status(String(e.message ?? e), true);
  }
}

await init();
$("generate").onclick = generate;
$("classify").onclick = classify;
generate();
