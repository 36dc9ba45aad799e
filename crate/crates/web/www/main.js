import init, {
  dispersion_curves,
  attenuated_trace,
  composition_residuals,
  stability_threshold,
} from "./pkg/causal_pat_web.js";

const $ = (id) => document.getElementById(id);

const labels = {
  ksb: ["alpha0", "tau0", "gamma"],
  nsw: ["tau", "tau_tilde", null],
  thermo_viscous: ["a", null, null],
};
const defaults = {
  ksb: [0.05, 1, 2],
  nsw: [0.02, 0.01, 0],
  thermo_viscous: [0.01, 0, 0],
};

function params() {
  return [$("kind").value, +$("p1").value, +$("p2").value, +$("p3").value];
}

function showStatus(e) {
  $("status").textContent = e ? String(e) : "";
}

function plot(canvas, xs, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.ys).filter(Number.isFinite);
  let lo = Math.min(0, ...all);
  let hi = Math.max(0, ...all);
  if (hi === lo) hi = lo + 1;
  const x0 = xs[0];
  const x1 = xs[xs.length - 1];
  const px = (x) => 40 + ((x - x0) / (x1 - x0)) * (w - 50);
  const py = (y) => h - 20 - ((y - lo) / (hi - lo)) * (h - 30);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(px(x0), py(0));
  ctx.lineTo(px(x1), py(0));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toPrecision(3), 2, py(hi) + 8);
  ctx.fillText(lo.toPrecision(3), 2, py(lo));
  ctx.fillText(x0.toPrecision(3), px(x0), h - 4);
  ctx.fillText(x1.toPrecision(3), px(x1) - 30, h - 4);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.ys.forEach((y, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(xs[i]), py(y)));
    ctx.stroke();
  }
}

function drawCurves() {
  const n = 200;
  const v = dispersion_curves(...params(), +$("order").value, +$("wmax").value, n);
  const col = (j) => Array.from({ length: n }, (_, i) => v[5 * i + j]);
  plot($("curves"), col(0), [
    { ys: col(2), color: "#1f77b4" },
    { ys: col(4).map((y) => -y), color: "#d62728" },
  ]);
}

function drawTrace() {
  const d = +$("dist").value;
  $("distv").textContent = d.toFixed(1);
  const n = 600;
  const v = attenuated_trace(...params(), 0.3, d, +$("rho").value, d + 12, n);
  const m = v.length / 3;
  plot($("trace"), Array.from(v.subarray(0, m)), [
    { ys: Array.from(v.subarray(m, 2 * m)), color: "#888" },
    { ys: Array.from(v.subarray(2 * m)), color: "#1f77b4" },
  ]);
}

function drawThreshold() {
  const t = stability_threshold(...params(), 4);
  $("threshold").textContent = Number.isFinite(t) ? t.toPrecision(6) : "unbounded";
}

function computeResiduals() {
  const alphas = [10 ** -1.5, 1e-2, 10 ** -2.5];
  const rows = [0, 1, 2].map((o) => composition_residuals(...params(), o, alphas));
  const slope = (r) => {
    const lx = alphas.map(Math.log);
    const ly = r.map(Math.log);
    const mx = lx.reduce((a, b) => a + b) / 3;
    const my = ly.reduce((a, b) => a + b) / 3;
    let sxy = 0;
    let sxx = 0;
    lx.forEach((x, i) => {
      sxy += (x - mx) * (ly[i] - my);
      sxx += (x - mx) ** 2;
    });
    return sxy / sxx;
  };
  const head = `<tr><th>order</th>${alphas.map((a) => `<th>a = ${a.toExponential(2)}</th>`).join("")}<th>slope</th></tr>`;
  const body = rows
    .map((r, o) => `<tr><td>${o}</td>${Array.from(r).map((x) => `<td>${x.toExponential(3)}</td>`).join("")}<td>${slope(Array.from(r)).toFixed(2)}</td></tr>`)
    .join("");
  $("residuals").innerHTML = head + body;
}

function setKind() {
  const k = $("kind").value;
  labels[k].forEach((name, i) => {
    const l = $(`l${i + 1}`);
    l.style.display = name ? "" : "none";
    if (name) l.firstChild.textContent = `${name} `;
    $(`p${i + 1}`).value = defaults[k][i];
  });
}

function refresh() {
  try {
    drawThreshold();
    drawCurves();
    drawTrace();
    showStatus("");
  } catch (e) {
    showStatus(e);
  }
}

await init();
setKind();
refresh();
$("kind").addEventListener("change", () => {
  setKind();
  $("residuals").innerHTML = "";
  refresh();
});
for (const id of ["p1", "p2", "p3", "order", "wmax", "dist", "rho"]) {
  $(id).addEventListener("input", refresh);
}
$("run").addEventListener("click", () => {
  try {
    computeResiduals();
    showStatus("");
  } catch (e) {
    showStatus(e);
  }
});
