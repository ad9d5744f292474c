/** Minimal SVG plotting for log-x (optionally log-y) series.
 *
 * Pure string builders: given data and a pixel box they return SVG markup,
 * so rendering is testable without a browser.
 */
export const DEFAULT_BOX = {
    width: 640,
    height: 300,
    margin: { left: 56, right: 16, top: 12, bottom: 32 },
};
function logScale(lo, hi, pxLo, pxHi) {
    const llo = Math.log10(lo);
    const span = Math.log10(hi) - llo || 1;
    return (v) => pxLo + ((Math.log10(v) - llo) / span) * (pxHi - pxLo);
}
function linScale(lo, hi, pxLo, pxHi) {
    const span = hi - lo || 1;
    return (v) => pxLo + ((v - lo) / span) * (pxHi - pxLo);
}
function extent(series, pick) {
    let lo = Infinity;
    let hi = -Infinity;
    for (const s of series) {
        for (const v of pick(s)) {
            if (!Number.isFinite(v))
                continue;
            if (v < lo)
                lo = v;
            if (v > hi)
                hi = v;
        }
    }
    if (!Number.isFinite(lo))
        return [0.1, 10];
    if (lo === hi)
        return [lo * 0.5 || 0.1, hi * 2 || 10];
    return [lo, hi];
}
/** Decade tick values covering [lo, hi]. */
export function decadeTicks(lo, hi) {
    const ticks = [];
    for (let e = Math.ceil(Math.log10(lo) - 1e-9); e <= Math.log10(hi) + 1e-9; e++) {
        ticks.push(Math.pow(10, e));
    }
    return ticks;
}
export function pathFor(s, sx, sy) {
    const parts = [];
    for (let i = 0; i < s.x.length; i++) {
        const cmd = i === 0 ? "M" : "L";
        parts.push(`${cmd}${sx(s.x[i]).toFixed(1)},${sy(s.y[i]).toFixed(1)}`);
    }
    return parts.join(" ");
}
function fmtTick(v) {
    const e = Math.round(Math.log10(Math.abs(v)));
    if (Math.abs(v) >= 0.01 && Math.abs(v) < 10000) {
        return String(parseFloat(v.toPrecision(3)));
    }
    return `1e${e}`;
}
/** Full SVG for a log-x plot of the given series. */
export function renderPlot(series, opts) {
    const box = opts.box ?? DEFAULT_BOX;
    const { left, right, top, bottom } = box.margin;
    const x0 = left;
    const x1 = box.width - right;
    const y0 = box.height - bottom;
    const y1 = top;
    const [xlo, xhi] = extent(series, (s) => s.x);
    let [ylo, yhi] = extent(series, (s) => s.y);
    if (opts.yGuide !== undefined) {
        ylo = Math.min(ylo, opts.yGuide);
        yhi = Math.max(yhi, opts.yGuide);
    }
    if (opts.logY)
        ylo = Math.max(ylo, 1e-12);
    const sx = logScale(xlo, xhi, x0, x1);
    const sy = opts.logY ? logScale(ylo, yhi, y0, y1) : linScale(ylo, yhi, y0, y1);
    const parts = [
        `<svg viewBox="0 0 ${box.width} ${box.height}" class="plot" role="img">`,
        `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" class="plot-bg"/>`,
    ];
    for (const t of decadeTicks(xlo, xhi)) {
        const px = sx(t).toFixed(1);
        parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" class="grid"/>`);
        parts.push(`<text x="${px}" y="${y0 + 16}" class="tick" text-anchor="middle">${fmtTick(t)}</text>`);
    }
    const yticks = opts.logY ? decadeTicks(ylo, yhi) : linTicks(ylo, yhi);
    for (const t of yticks) {
        const py = sy(t).toFixed(1);
        parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" class="grid"/>`);
        parts.push(`<text x="${x0 - 6}" y="${py}" class="tick" text-anchor="end" dominant-baseline="middle">${fmtTick(t)}</text>`);
    }
    if (opts.yGuide !== undefined && opts.yGuide >= ylo && opts.yGuide <= yhi) {
        const py = sy(opts.yGuide).toFixed(1);
        parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" class="guide"/>`);
    }
    for (const s of series) {
        const dash = s.dashed ? ` stroke-dasharray="5,4"` : "";
        parts.push(`<path d="${pathFor(s, sx, sy)}" fill="none" stroke="${s.color}"${dash} data-series="${s.label}"/>`);
    }
    parts.push("</svg>");
    return parts.join("");
}
function linTicks(lo, hi) {
    const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / 4 || 1)));
    const ticks = [];
    for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12; v += step) {
        ticks.push(v);
    }
    return ticks.length > 12 ? ticks.filter((_, i) => i % 2 === 0) : ticks;
}
