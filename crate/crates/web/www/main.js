import init, { Demo } from "./pkg/elasto_web.js";

const $ = (id) => document.getElementById(id);
const status = (text) => { $("status").textContent = text; };
const ROWS = 256, COLS = 128;
let demo = null;
let tracked = false;

const alpha3 = () => 10 ** Number($("alpha3").value);

function draw(canvas, name) {
  canvas.width = COLS;
  canvas.height = ROWS;
  const ctx = canvas.getContext("2d");
  const lo = Number($("lo").value), hi = Number($("hi").value);
  const useRange = $("lo").value !== "" && $("hi").value !== "";
  try {
    const pixels = demo.image(name, $("colormap").value, useRange ? lo : 0, useRange ? hi : 0);
    ctx.putImageData(new ImageData(new Uint8ClampedArray(pixels), COLS, ROWS), 0, 0);
  } catch (e) {
    ctx.clearRect(0, 0, COLS, ROWS);
  }
}

function refresh() {
  if (!demo) return;
  const name = $("field").value;
  const estimated = !["pre", "post"].includes(name);
  draw($("estimate"), estimated && !tracked ? "pre" : name);
  draw($("truth"), estimated ? `truth_${name}` : name === "pre" ? "post" : "pre");
}

function generate() {
  const snr = $("snr").value === "" ? NaN : Number($("snr").value);
  try {
    demo = new Demo(ROWS, COLS, $("kind").value, Number($("strain").value), Number($("seed").value), snr);
    tracked = false;
    $("track").disabled = false;
    status(`phantom ${ROWS} x ${COLS} ready`);
  } catch (e) {
    status(`error: ${e}`);
  }
  refresh();
}

function track() {
  status("tracking...");
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const trace = demo.track($("method").value, alpha3());
      tracked = true;
      const [axRmse, axPsnr] = demo.score("axial_strain");
      const [latRmse, latPsnr] = demo.score("lateral_strain");
      status(
        `${$("method").value}: ${trace.length - 1} iterations in ${((performance.now() - t0) / 1000).toFixed(1)} s\n` +
        `final cost ${trace[trace.length - 1].toExponential(4)}\n` +
        `axial strain RMSE ${axRmse.toExponential(2)} (PSNR ${axPsnr.toFixed(2)} dB)\n` +
        `lateral strain RMSE ${latRmse.toExponential(2)} (PSNR ${latPsnr.toFixed(2)} dB)`
      );
      if (["pre", "post"].includes($("field").value)) $("field").value = "lateral_strain";
    } catch (e) {
      status(`error: ${e}`);
    }
    refresh();
  }, 0);
}

await init();
$("alpha3-value").textContent = alpha3().toPrecision(3);
$("alpha3").addEventListener("input", () => { $("alpha3-value").textContent = alpha3().toPrecision(3); });
$("generate").addEventListener("click", generate);
$("track").addEventListener("click", track);
for (const id of ["field", "colormap", "lo", "hi"]) $(id).addEventListener("change", refresh);
generate();
