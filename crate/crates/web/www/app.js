import init, { preset_params, flux_spectrum, effective_potential, dispersive_sweep } from "./pkg/djtransmon_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function showError(e) {
  $("error").textContent = e ? String(e) : "";
}

function call(f) {
  try {
    showError("");
    return JSON.parse(f());
  } catch (e) {
    showError(e);
    return null;
  }
}

// Line plot of several series sharing one x axis; nulls break the line.
function plot(canvas, xs, series, xlabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 48;
  ctx.clearRect(0, 0, w, h);
  const ys = series.flatMap((s) => s.values).filter((v) => v !== null && Number.isFinite(v));
  if (ys.length === 0) return;
  let [ymin, ymax] = [Math.min(...ys), Math.max(...ys)];
  if (ymax === ymin) { ymax += 1; ymin -= 1; }
  const [xmin, xmax] = [Math.min(...xs), Math.max(...xs)];
  const sx = (x) => pad + ((x - xmin) / (xmax - xmin || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((ymin - y) / (ymax - ymin)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  ctx.fillText(ymax.toPrecision(5), 2, pad + 4);
  ctx.fillText(ymin.toPrecision(5), 2, h - pad);
  ctx.fillText(xmin.toPrecision(3), pad, h - pad + 16);
  ctx.fillText(xmax.toPrecision(3), w - pad - 20, h - pad + 16);
  ctx.fillText(xlabel, w / 2 - 20, h - 8);
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    let open = false;
    s.values.forEach((y, j) => {
      if (y === null || !Number.isFinite(y)) { open = false; return; }
      if (open) ctx.lineTo(sx(xs[j]), sy(y)); else ctx.moveTo(sx(xs[j]), sy(y));
      open = true;
    });
    ctx.stroke();
    ctx.fillStyle = COLORS[i % COLORS.length];
    ctx.fillText(s.name, w - pad - 90, pad + 16 * (i + 1));
  });
}

function nc() {
  return Number($("nc").value);
}

function runSpectrum() {
  const rows = call(() => flux_spectrum($("params").value, $("model").value, 0, 0.5, Number($("points").value), nc()));
  if (!rows) return;
  const xs = rows.map((r) => r.flux);
  const names = ["f01", "f02/2", "f03/3", "f04/4"];
  plot($("spectrum"), xs, names.map((name, k) => ({ name, values: rows.map((r) => r.lines[k]) })), "Φe / Φ₀");
}

function fmt(c) {
  return c ? c.map((v) => v.toFixed(4)).join(", ") : "flat potential";
}

function runPotential() {
  const flux = Number($("flux").value);
  $("flux-value").textContent = flux.toFixed(3);
  const v = call(() => effective_potential($("params").value, flux, 201));
  if (!v) return;
  plot($("potential"), v.phi, [{ name: "reduced", values: v.reduced }, { name: "BO", values: v.bo }], "φ (rad)");
  $("harmonics").textContent =
    `λ = ${v.lambda.toFixed(5)}; c_k/c_1 reduced [${fmt(v.reduced_harmonics)}], BO [${fmt(v.bo_harmonics)}]`;
}

function runChi() {
  const rows = call(() => dispersive_sweep($("params").value, 0, 0.5, 26, nc()));
  if (!rows) return;
  const xs = rows.map((r) => r.flux);
  plot($("chi"), xs, [
    { name: "χ_q", values: rows.map((r) => r.chi_q) },
    { name: "χ_int", values: rows.map((r) => r.chi_int) },
    { name: "χ₀", values: rows.map((r) => r.chi_0) },
  ], "Φe / Φ₀");
}

function loadPreset() {
  $("params").value = JSON.stringify(JSON.parse(preset_params($("preset").value)), null, 2);
  runSpectrum();
  runPotential();
}

await init();
$("preset").addEventListener("change", loadPreset);
$("run-spectrum").addEventListener("click", runSpectrum);
$("flux").addEventListener("input", runPotential);
$("run-chi").addEventListener("click", runChi);
loadPreset();
