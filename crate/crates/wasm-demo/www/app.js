import init, { explore, stretch, fir_response, synth_strip } from "./pkg/ecgtda_wasm.js";

const $ = (id) => document.getElementById(id);
const BINS = 200;
const COLORS = { sub: "#1f77b4", sup: "#d62728", essential: "#2ca02c", grid: "#eee" };

let samples = [];
let result = null;

function frame(canvas, xs, ys, pad = 28) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  return {
    x: (v) => pad + (x1 === x0 ? 0.5 : (v - x0) / (x1 - x0)) * w,
    y: (v) => pad + (1 - (v - y0) / (y1 - y0)) * h,
    inv: (px) => y0 + (1 - (px - pad) / h) * (y1 - y0),
    invX: (px) => x0 + ((px - pad) / w) * (x1 - x0),
    y0, y1,
  };
}

function clear(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "12px sans-serif";
  return ctx;
}

function polyline(ctx, pts, color, width = 1.5) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
}

function steps(grid, counts, f) {
  const pts = [];
  grid.forEach((a, i) => {
    if (i) pts.push([f.x(a), f.y(counts[i - 1])]);
    pts.push([f.x(a), f.y(counts[i])]);
  });
  return pts;
}

function threshold() {
  const lo = Math.min(...samples), hi = Math.max(...samples);
  return lo + (hi - lo) * ($("alpha").value / 1000);
}

function drawSignal() {
  const c = $("signal"), ctx = clear(c);
  const xs = samples.map((_, i) => i);
  const f = frame(c, xs, samples);
  const a = threshold();
  // Sublevel set at the threshold: runs of samples at or below it.
  ctx.fillStyle = "rgba(31,119,180,0.12)";
  let start = -1;
  samples.forEach((v, i) => {
    if (v <= a && start < 0) start = i;
    if ((v > a || i === samples.length - 1) && start >= 0) {
      const end = v > a ? i - 1 : i;
      ctx.fillRect(f.x(start) - 1, 0, Math.max(2, f.x(end) - f.x(start) + 2), c.height);
      start = -1;
    }
  });
  polyline(ctx, samples.map((v, i) => [f.x(i), f.y(v)]), "#222", 1.2);
  polyline(ctx, [[f.x(0), f.y(a)], [f.x(samples.length - 1), f.y(a)]], COLORS.sub, 1);
  ctx.fillStyle = "#555";
  ctx.fillText(`threshold ${a.toFixed(3)}`, 32, 16);
  return f;
}

function drawBars() {
  const c = $("bars"), ctx = clear(c);
  const lo = Math.min(...samples), hi = Math.max(...samples);
  const bar = (iv) => [Math.min(iv.birth, iv.death), Math.max(iv.birth, iv.death)];
  const sub = result.sublevel.intervals, sup = result.superlevel.intervals;
  const all = [...sub.map((iv) => ["sub", iv]), ...sup.map((iv) => ["sup", iv])]
    .sort((p, q) => (bar(q[1])[1] - bar(q[1])[0]) - (bar(p[1])[1] - bar(p[1])[0]));
  const f = frame(c, [lo, hi], [0, all.length]);
  const a = threshold();
  all.forEach(([kind, iv], i) => {
    const [b, d] = bar(iv);
    const y = f.y(i + 0.5);
    const alive = kind === "sub" ? iv.birth <= a && (a < iv.death || iv.essential && a <= iv.death)
                                 : iv.death < a && a <= iv.birth || iv.essential && iv.death <= a && a <= iv.birth;
    const color = iv.essential ? COLORS.essential : COLORS[kind];
    polyline(ctx, [[f.x(b), y], [Math.max(f.x(d), f.x(b) + 1.5), y]], color, alive ? 3 : 1);
  });
  polyline(ctx, [[f.x(a), 0], [f.x(a), c.height]], "#999", 1);
  ctx.fillStyle = "#555";
  ctx.fillText(`${sub.length} sublevel (blue), ${sup.length} superlevel (red); essential in green`, 32, 16);
}

function drawBetti() {
  const c = $("betti"), ctx = clear(c);
  const s = result.sublevel.betti, p = result.superlevel.betti;
  const f = frame(c, [...s.grid, ...p.grid], [0, ...s.counts, ...p.counts]);
  polyline(ctx, steps(s.grid, s.counts, f), COLORS.sub);
  const order = p.grid.map((_, i) => i).sort((i, j) => p.grid[i] - p.grid[j]);
  polyline(ctx, steps(order.map((i) => p.grid[i]), order.map((i) => p.counts[i]), f), COLORS.sup);
  const a = threshold();
  polyline(ctx, [[f.x(a), 0], [f.x(a), c.height]], "#999", 1);
  const count = (iv, kind) => kind === "sub"
    ? iv.birth <= a && (iv.essential ? a <= iv.death : a < iv.death)
    : (iv.essential ? iv.death <= a : iv.death < a) && a <= iv.birth;
  const b0 = result.sublevel.intervals.filter((iv) => count(iv, "sub")).length;
  const b1 = result.superlevel.intervals.filter((iv) => count(iv, "sup")).length;
  $("explain").textContent =
    `At the threshold the sublevel set has ${b0} component(s) and the superlevel set ${b1}.`;
}

function analyse() {
  try {
    result = JSON.parse(explore(JSON.stringify(samples), BINS));
    drawSignal();
    drawBars();
    drawBetti();
    drawStretch();
  } catch (e) {
    $("explain").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function regenerate() {
  samples = JSON.parse(synth_strip($("beat").value, 2.5, 200, Number($("noise").value), BigInt($("seed").value || 0)));
  analyse();
}

function drawStretch() {
  const factor = Number($("factor").value);
  $("factorOut").textContent = `x${factor}`;
  const c = $("stretch"), ctx = clear(c);
  try {
    const r = JSON.parse(stretch(JSON.stringify(samples), factor, BINS));
    const o = r.original_betti, s = r.stretched_betti;
    const f = frame(c, [...o.grid, ...s.grid], [0, ...o.counts, ...s.counts]);
    polyline(ctx, steps(o.grid, o.counts, f), COLORS.sub, 3);
    polyline(ctx, steps(s.grid, s.counts, f), "#ff7f0e", 1.2);
    const gap = r.max_endpoint_gap;
    $("stretchOut").textContent =
      `${samples.length} -> ${r.stretched.length} samples; intervals ${r.original_intervals} vs ${r.stretched_intervals}; ` +
      (gap === null ? "barcodes differ in size" : `largest endpoint gap ${gap.toExponential(2)}`) +
      (Number.isInteger(factor) ? " (integer factor keeps every vertex)" : " (non-integer factor moves the vertices)");
  } catch (e) {
    $("stretchOut").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function drawFir() {
  const c = $("fir"), ctx = clear(c);
  try {
    const r = JSON.parse(fir_response(Number($("low").value), Number($("high").value),
      Number($("taps").value), Number($("rate").value), 800));
    const db = r.gain_db.map((g) => Math.max(g, -100));
    const f = frame(c, r.freq_hz, [-100, 5]);
    for (const level of [0, -3, -20, -40, -60, -80]) {
      polyline(ctx, [[f.x(0), f.y(level)], [f.x(r.freq_hz.at(-1)), f.y(level)]], COLORS.grid, 1);
      ctx.fillStyle = "#888";
      ctx.fillText(`${level} dB`, 0, f.y(level) + 4);
    }
    polyline(ctx, r.freq_hz.map((x, i) => [f.x(x), f.y(db[i])]), COLORS.sub);
    $("firOut").textContent = `${r.taps} taps; response up to ${r.freq_hz.at(-1)} Hz`;
  } catch (e) {
    ctx.clearRect(0, 0, c.width, c.height);
    $("firOut").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function enableDrawing() {
  const c = $("signal");
  let down = false;
  const paint = (ev) => {
    const rect = c.getBoundingClientRect();
    const f = frame(c, samples.map((_, i) => i), samples);
    const px = (ev.clientX - rect.left) * (c.width / rect.width);
    const py = (ev.clientY - rect.top) * (c.height / rect.height);
    const i = Math.round(f.invX(px));
    const v = f.inv(py);
    for (let k = i - 2; k <= i + 2; k++) if (k >= 0 && k < samples.length) samples[k] = v;
    analyse();
  };
  c.addEventListener("pointerdown", (e) => { down = true; paint(e); });
  c.addEventListener("pointermove", (e) => down && paint(e));
  window.addEventListener("pointerup", () => (down = false));
}

await init();
$("status").textContent = "Signals are synthetic; everything runs in the browser.";
for (const id of ["beat", "noise", "seed"]) $(id).addEventListener("input", regenerate);
$("regen").addEventListener("click", () => { $("seed").value = Number($("seed").value) + 1; regenerate(); });
$("alpha").addEventListener("input", () => { drawSignal(); drawBars(); drawBetti(); });
$("factor").addEventListener("input", drawStretch);
for (const id of ["low", "high", "taps", "rate"]) $(id).addEventListener("input", drawFir);
enableDrawing();
regenerate();
drawFir();
