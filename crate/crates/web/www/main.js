import init, { seriesCurve, seriesVerdict, reportText, trainingCurve } from "./pkg/gdpg_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, ys) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const finite = ys.filter(Number.isFinite);
  if (finite.length === 0) return;
  let lo = Math.min(...finite), hi = Math.max(...finite);
  if (hi - lo < 1e-12) { lo -= 1; hi += 1; }
  const pad = 24;
  const x = (i) => pad + (i / Math.max(1, ys.length - 1)) * (w - 2 * pad);
  const y = (v) => h - pad - ((v - lo) / (hi - lo)) * (h - 2 * pad);
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toPrecision(4), 2, pad - 6);
  ctx.fillText(lo.toPrecision(4), 2, h - 6);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  let pen = false;
  ys.forEach((v, i) => {
    if (!Number.isFinite(v)) { pen = false; return; }
    pen ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v));
    pen = true;
  });
  ctx.stroke();
}

function guard(status, fn) {
  try { fn(); } catch (e) { status.textContent = String(e.message ?? e); }
}

await init();

$("s-go").onclick = () => guard($("s-status"), () => {
  const gamma = num("s-gamma"), terms = num("s-terms");
  const ys = Array.from(seriesCurve(gamma, terms));
  plot($("s-plot"), ys);
  const last = ys[ys.length - 1];
  $("s-status").textContent = `verdict: ${seriesVerdict(gamma, terms)}, last partial sum ${last.toPrecision(6)}`;
});

$("r-go").onclick = () => guard($("r-out"), () => {
  $("r-out").textContent = reportText($("r-env").value, $("r-policy").value, num("r-chains"), num("r-length"), 0);
});

$("t-go").onclick = () => {
  $("t-status").textContent = "training...";
  // Let the status paint before the synchronous run blocks the page.
  setTimeout(() => guard($("t-status"), () => {
    const t0 = performance.now();
    const ys = Array.from(trainingCurve(num("t-alpha"), num("t-steps"), num("t-seed")));
    plot($("t-plot"), ys);
    const secs = ((performance.now() - t0) / 1000).toFixed(1);
    $("t-status").textContent = ys.length
      ? `${ys.length} episodes in ${secs}s, final rolling-100 ${ys[ys.length - 1].toPrecision(6)}`
      : "no finished episodes";
  }), 20);
};

$("s-go").click();
