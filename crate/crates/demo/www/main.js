import init, { decompose, hypervolume, acquisitionCurves, generalizedHypervolume } from "./pkg/jes_demo.js";

await init();

const $ = (id) => document.getElementById(id);

// panel 1: box decomposition
const front = [];
const boxCanvas = $("boxes");
const bctx = boxCanvas.getContext("2d");
const pad = 20;
const span = boxCanvas.width - 2 * pad;
const toPx = (x, y) => [pad + x * span, boxCanvas.height - pad - y * span];

function drawBoxes() {
  bctx.clearRect(0, 0, boxCanvas.width, boxCanvas.height);
  bctx.strokeStyle = "#999";
  bctx.strokeRect(pad, pad, span, span);
  const flat = new Float64Array(front.flat());
  const boxes = decompose(flat, new Float64Array([0, 0]));
  const colors = ["#8ecae6", "#ffb703", "#90be6d", "#f28482", "#cdb4db", "#b5e48c"];
  for (let j = 0; j < boxes.length / 4; j++) {
    const [l1, l2, u1, u2] = boxes.slice(4 * j, 4 * j + 4);
    const [x0, y0] = toPx(l1, u2);
    const [x1, y1] = toPx(u1, l2);
    bctx.fillStyle = colors[j % colors.length] + "aa";
    bctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    bctx.strokeStyle = "#333";
    bctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  }
  bctx.fillStyle = "#000";
  for (const [x, y] of front) {
    const [px, py] = toPx(x, y);
    bctx.beginPath();
    bctx.arc(px, py, 4, 0, 2 * Math.PI);
    bctx.fill();
  }
  const hv = front.length ? hypervolume(flat, new Float64Array([0, 0])) : 0;
  $("boxes-out").textContent = `${front.length} points, ${boxes.length / 4} boxes, HV = ${hv.toFixed(5)}`;
}

boxCanvas.addEventListener("click", (e) => {
  if (e.shiftKey) {
    front.length = 0;
  } else {
    const r = boxCanvas.getBoundingClientRect();
    const x = (e.clientX - r.left - pad) / span;
    const y = (boxCanvas.height - pad - (e.clientY - r.top)) / span;
    if (x >= 0 && x <= 1 && y >= 0 && y <= 1) front.push([x, y]);
  }
  drawBoxes();
});

// panel 2: acquisition curves
const obs = [[0.15, -0.5], [0.45, 0.8], [0.8, 0.1]];
const gpCanvas = $("gp");
const gctx = gpCanvas.getContext("2d");
const GRID = 200;

function drawGp() {
  const t0 = performance.now();
  let out;
  try {
    out = acquisitionCurves(
      new Float64Array(obs.map((o) => o[0])),
      new Float64Array(obs.map((o) => o[1])),
      Number($("ls").value),
      Number($("noise").value),
      GRID,
      Number($("samples").value),
      Number($("seed").value),
    );
  } catch (err) {
    $("gp-out").textContent = String(err);
    return;
  }
  const ms = performance.now() - t0;
  const mean = out.slice(0, GRID), sd = out.slice(GRID, 2 * GRID);
  const jes = out.slice(2 * GRID, 3 * GRID), mes = out.slice(3 * GRID);
  const W = gpCanvas.width, H = gpCanvas.height, top = 0.65 * H;
  const px = (i) => (i / (GRID - 1)) * W;
  const py = (y) => top / 2 - (y / 2) * (top / 2 - 10);
  gctx.clearRect(0, 0, W, H);

  gctx.fillStyle = "#cfe3f5";
  gctx.beginPath();
  for (let i = 0; i < GRID; i++) gctx.lineTo(px(i), py(mean[i] + 2 * sd[i]));
  for (let i = GRID - 1; i >= 0; i--) gctx.lineTo(px(i), py(mean[i] - 2 * sd[i]));
  gctx.fill();
  line(mean, px, py, "#1d4e89");

  gctx.fillStyle = "#000";
  for (const [x, y] of obs) {
    gctx.beginPath();
    gctx.arc(x * W, py(y), 4, 0, 2 * Math.PI);
    gctx.fill();
  }

  gctx.strokeStyle = "#aaa";
  gctx.beginPath();
  gctx.moveTo(0, top);
  gctx.lineTo(W, top);
  gctx.stroke();
  const peak = Math.max(...jes, ...mes, 1e-12);
  const ay = (v) => H - 6 - (Math.max(v, 0) / peak) * (H - top - 14);
  line(jes, px, ay, "#d62828");
  line(mes, px, ay, "#f77f00");
  const best = jes.indexOf(Math.max(...jes)) / (GRID - 1);
  $("gp-out").textContent = `JES-LB2 (red) argmax x = ${best.toFixed(3)}; MES-LB2 in orange; ${ms.toFixed(0)} ms`;
}

function line(ys, px, py, color) {
  gctx.strokeStyle = color;
  gctx.lineWidth = 2;
  gctx.beginPath();
  ys.forEach((y, i) => gctx.lineTo(px(i), py(y)));
  gctx.stroke();
  gctx.lineWidth = 1;
}

gpCanvas.addEventListener("click", (e) => {
  if (e.shiftKey) {
    obs.length = 0;
  } else {
    const r = gpCanvas.getBoundingClientRect();
    const x = (e.clientX - r.left) / gpCanvas.width;
    const top = 0.65 * gpCanvas.height;
    const y = (top / 2 - (e.clientY - r.top)) / (top / 2 - 10) * 2;
    if (y >= -2 && y <= 2) obs.push([x, y]);
  }
  drawGp();
});
for (const id of ["ls", "noise", "samples", "seed"]) $(id).addEventListener("change", drawGp);

// panel 3: generalized hypervolume
$("ghv-go").addEventListener("click", () => {
  if (!front.length) {
    $("ghv-out").textContent = "add points in panel 1 first";
    return;
  }
  try {
    const [ghv, se, hv] = generalizedHypervolume(
      new Float64Array(front.flat()),
      new Float64Array([0, 0]),
      $("dist").value,
      Number($("ghv-n").value),
      7,
    );
    $("ghv-out").textContent = `GHV = ${ghv.toFixed(5)} ± ${se.toFixed(5)} (exact HV = ${hv.toFixed(5)})`;
  } catch (err) {
    $("ghv-out").textContent = String(err);
  }
});

front.push([0.9, 0.2], [0.6, 0.55], [0.25, 0.85]);
drawBoxes();
drawGp();
