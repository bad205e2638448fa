import init, { SimulationDemo, PararealDemo } from "./pkg/vpint_wasm.js";

const $ = (id) => document.getElementById(id);

// ---------- tiny plotting helpers ----------

function clear(ctx) {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

function frame(ctx, pad) {
  const { width: w, height: h } = ctx.canvas;
  ctx.strokeStyle = "#3a4150";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
}

function logTicks(ctx, pad, lo, hi, toY) {
  ctx.fillStyle = "#7d8590";
  ctx.font = "11px system-ui";
  const d0 = Math.ceil(Math.log10(lo));
  const d1 = Math.floor(Math.log10(hi));
  for (let d = d0; d <= d1; d++) {
    const y = toY(Math.pow(10, d));
    ctx.fillText("1e" + d, 4, y + 3);
    ctx.strokeStyle = "#242a33";
    ctx.beginPath();
    ctx.moveTo(pad, y);
    ctx.lineTo(ctx.canvas.width - pad, y);
    ctx.stroke();
  }
}

function plotLogSeries(ctx, xs, series, colors) {
  const pad = 34;
  clear(ctx);
  let lo = Infinity, hi = -Infinity, xlo = Infinity, xhi = -Infinity;
  for (const ys of series) {
    for (const v of ys) {
      if (v > 0) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
    }
  }
  for (const x of xs) { xlo = Math.min(xlo, x); xhi = Math.max(xhi, x); }
  if (!(hi > 0)) return;
  lo = Math.max(lo, hi * 1e-12);
  const { width: w, height: h } = ctx.canvas;
  const toX = (x) => pad + ((x - xlo) / (xhi - xlo || 1)) * (w - 2 * pad);
  const toY = (v) =>
    h - pad - ((Math.log10(v) - Math.log10(lo)) / (Math.log10(hi) - Math.log10(lo) || 1)) * (h - 2 * pad);
  logTicks(ctx, pad, lo, hi, toY);
  frame(ctx, pad);
  series.forEach((ys, i) => {
    ctx.strokeStyle = colors[i % colors.length];
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    let started = false;
    ys.forEach((v, j) => {
      if (!(v > 0)) return;
      const x = toX(xs[j]), y = toY(Math.max(v, lo));
      if (started) ctx.lineTo(x, y); else { ctx.moveTo(x, y); started = true; }
    });
    ctx.stroke();
  });
}

function plotScatter(ctx, pairs, xRange, yRange) {
  const pad = 30;
  clear(ctx);
  frame(ctx, pad);
  const { width: w, height: h } = ctx.canvas;
  const toX = (x) => pad + ((x - xRange[0]) / (xRange[1] - xRange[0])) * (w - 2 * pad);
  const toY = (v) => h - pad - ((v - yRange[0]) / (yRange[1] - yRange[0])) * (h - 2 * pad);
  ctx.fillStyle = "rgba(140, 190, 255, 0.55)";
  for (let i = 0; i + 1 < pairs.length; i += 2) {
    const x = toX(pairs[i]), y = toY(pairs[i + 1]);
    if (x >= pad && x <= w - pad && y >= pad && y <= h - pad) ctx.fillRect(x, y, 1.6, 1.6);
  }
}

// ---------- simulation panel ----------

let sim = null;
let timer = null;

function vRange(scenario) {
  if (scenario === "two_stream") return [-2.4, 2.4];
  if (scenario === "penning") return [-4, 4];
  return [-4.5, 4.5];
}

function redrawSim(scenario) {
  const times = sim.times();
  plotLogSeries($("energy").getContext("2d"), times, [sim.energy_z()], ["#7fb4ff"]);
  plotScatter(
    $("phase").getContext("2d"),
    sim.phase_space_z(4000),
    [0, sim.domain_length()],
    vRange(scenario)
  );
  $("time").textContent = sim.time().toFixed(2);
  const t = sim.time();
  if (t > 3) {
    const r = sim.energy_rate(0.5, t);
    $("rate").textContent = Number.isFinite(r) ? r.toFixed(3) : "–";
  }
}

function stopSim() {
  if (timer) { clearInterval(timer); timer = null; }
  $("pause").disabled = true;
  $("run").disabled = false;
}

$("run").addEventListener("click", () => {
  stopSim();
  const scenario = $("scenario").value;
  try {
    sim = new SimulationDemo(
      scenario,
      Number($("modes").value),
      Number($("particles").value),
      Number($("dt").value),
      Number($("seed").value)
    );
  } catch (e) {
    alert(e);
    return;
  }
  $("run").disabled = true;
  $("pause").disabled = false;
  timer = setInterval(() => {
    try {
      sim.advance(2);
      redrawSim(scenario);
      if (sim.time() > 38) stopSim();
    } catch (e) {
      stopSim();
      alert(e);
    }
  }, 30);
});

$("pause").addEventListener("click", stopSim);

// ---------- parareal panel ----------

const pColors = ["#ffd166", "#ef8354", "#e45b86", "#b06fd8", "#7fb4ff", "#5ad1b3", "#9fe06c", "#e2e6ec"];
let parareal = null;
let pCurves = [];

function redrawParareal() {
  const subs = [...Array(pCurves[0]?.length || 0).keys()].map((i) => i + 1);
  plotLogSeries($("p-errors").getContext("2d"), subs, pCurves, pColors);
}

$("p-setup").addEventListener("click", () => {
  const scenario = $("p-scenario").value;
  const dt = scenario === "penning" ? 0.0125 : 0.05;
  const tEnd = scenario === "penning" ? 2.4 : 4.8;
  try {
    parareal = new PararealDemo(
      scenario,
      8,
      Number($("p-particles").value),
      Number($("p-subs").value),
      tEnd,
      dt,
      Number($("p-ratio").value),
      7
    );
  } catch (e) {
    alert(e);
    return;
  }
  pCurves = [];
  $("p-iter").textContent = "0";
  $("p-solves").textContent = "0";
  $("p-iterate").disabled = false;
  clear($("p-errors").getContext("2d"));
});

$("p-iterate").addEventListener("click", () => {
  if (!parareal) return;
  $("p-iterate").disabled = true;
  setTimeout(() => {
    try {
      const errs = Array.from(parareal.iterate());
      pCurves.push(errs);
      $("p-iter").textContent = parareal.iteration();
      $("p-solves").textContent = parareal.fine_solves();
      redrawParareal();
      if (parareal.iteration() < parareal.subdomains()) $("p-iterate").disabled = false;
    } catch (e) {
      alert(e);
    }
  }, 10);
});

await init();
