/**
 * SVG figure rendering: log-log scatter of the measured error plus dashed
 * bound curves with a legend, and simple log-log line plots for scaling
 * tables. Rendering is a pure function of the parsed data, so re-rendering
 * the same inputs yields identical bytes.
 */

import { Table, TableError, column } from './table.js'

export interface FigureSpec {
  table: Table
  x: string
  scatterY: string
  dashedYs: string[]
  title: string
  xLabel?: string
}

export interface SeriesSpec {
  x: string
  y: string
  label: string
}

const WIDTH = 720
const HEIGHT = 480
const MARGIN = { left: 70, right: 20, top: 40, bottom: 50 }
const DASH_COLORS = ['#000000', '#1f4fd8', '#1a9e36', '#c2330f', '#8041c9']

interface LogAxis {
  min: number
  max: number
  scale: (v: number) => number
}

function logAxis(values: number[], pixelLo: number, pixelHi: number): LogAxis {
  const positive = values.filter((v) => Number.isFinite(v) && v > 0)
  if (positive.length === 0) {
    throw new TableError('no positive finite values to place on a log axis')
  }
  let lo = Math.min(...positive)
  let hi = Math.max(...positive)
  if (lo === hi) {
    lo /= 10
    hi *= 10
  }
  const la = Math.log10(lo)
  const lb = Math.log10(hi)
  return {
    min: lo,
    max: hi,
    scale: (v: number) =>
      pixelLo + ((Math.log10(v) - la) / (lb - la)) * (pixelHi - pixelLo),
  }
}

function decadeTicks(axis: LogAxis): number[] {
  const ticks: number[] = []
  for (
    let e = Math.ceil(Math.log10(axis.min));
    e <= Math.floor(Math.log10(axis.max));
    e++
  ) {
    ticks.push(Math.pow(10, e))
  }
  return ticks
}

function fmtTick(v: number): string {
  const e = Math.round(Math.log10(v))
  return `1e${e}`
}

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

/** Scatter of the measured error plus dashed bound curves (log-log). */
export function renderScatterFigure(spec: FigureSpec): string {
  const xs = column(spec.table, spec.x)
  const scatter = column(spec.table, spec.scatterY)
  const bounds = spec.dashedYs.map((name) => ({
    name,
    values: column(spec.table, name),
  }))

  const allY = scatter.concat(...bounds.map((b) => b.values))
  const xAxis = logAxis(xs, MARGIN.left, WIDTH - MARGIN.right)
  const yAxis = logAxis(allY, HEIGHT - MARGIN.bottom, MARGIN.top)

  const parts: string[] = []
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  )
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`)
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16" font-family="sans-serif">${esc(spec.title)}</text>`,
  )
  parts.push(axesMarkup(xAxis, yAxis, spec.xLabel ?? spec.x))

  // point order follows increasing x so the dashed curves read as bounds
  const order = xs
    .map((v, i) => [v, i] as [number, number])
    .filter(([v, i]) => v > 0 && scatter[i] > 0)
    .sort((a, b) => a[0] - b[0])
    .map(([, i]) => i)
  if (order.length === 0) {
    throw new TableError('no plottable (positive) points')
  }

  const points = order
    .map(
      (i) =>
        `<circle cx="${xAxis.scale(xs[i]).toFixed(2)}" cy="${yAxis
          .scale(scatter[i])
          .toFixed(2)}" r="2.5" fill="#d62728"/>`,
    )
    .join('')
  parts.push(`<g class="scatter-series" data-label="${esc(spec.scatterY)}">${points}</g>`)

  bounds.forEach((b, bi) => {
    const pts = order
      .filter((i) => b.values[i] > 0 && Number.isFinite(b.values[i]))
      .map(
        (i) =>
          `${xAxis.scale(xs[i]).toFixed(2)},${yAxis.scale(b.values[i]).toFixed(2)}`,
      )
      .join(' ')
    const color = DASH_COLORS[bi % DASH_COLORS.length]
    parts.push(
      `<polyline class="bound-series" data-label="${esc(b.name)}" points="${pts}" fill="none" stroke="${color}" stroke-width="1.5" stroke-dasharray="6 4"/>`,
    )
  })

  parts.push(legendMarkup(spec.scatterY, bounds.map((b) => b.name)))
  parts.push('</svg>')
  return parts.join('\n')
}

/** Log-log polyline with markers, for the scaling tables. */
export function renderLineFigure(table: Table, series: SeriesSpec, title: string): string {
  const xs = column(table, series.x)
  const ys = column(table, series.y)
  const xAxis = logAxis(xs, MARGIN.left, WIDTH - MARGIN.right)
  const yAxis = logAxis(ys, HEIGHT - MARGIN.bottom, MARGIN.top)
  const pts = xs
    .map((v, i) => [v, ys[i]])
    .filter(([a, b]) => a > 0 && b > 0)
    .map(([a, b]) => `${xAxis.scale(a).toFixed(2)},${yAxis.scale(b).toFixed(2)}`)
  if (pts.length === 0) {
    throw new TableError('no plottable (positive) points')
  }
  const parts: string[] = []
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  )
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`)
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16" font-family="sans-serif">${esc(title)}</text>`,
  )
  parts.push(axesMarkup(xAxis, yAxis, series.x))
  parts.push(
    `<polyline class="line-series" data-label="${esc(series.label)}" points="${pts.join(' ')}" fill="none" stroke="#1f4fd8" stroke-width="1.5"/>`,
  )
  parts.push(
    `<g class="markers">${pts
      .map((p) => {
        const [cx, cy] = p.split(',')
        return `<circle cx="${cx}" cy="${cy}" r="3" fill="#1f4fd8"/>`
      })
      .join('')}</g>`,
  )
  parts.push(legendMarkup(series.label, []))
  parts.push('</svg>')
  return parts.join('\n')
}

function axesMarkup(xAxis: LogAxis, yAxis: LogAxis, xLabel: string): string {
  const parts: string[] = []
  const x0 = MARGIN.left
  const x1 = WIDTH - MARGIN.right
  const y0 = HEIGHT - MARGIN.bottom
  const y1 = MARGIN.top
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black" stroke-width="1"/>`,
  )
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black" stroke-width="1"/>`,
  )
  for (const t of decadeTicks(xAxis)) {
    const px = xAxis.scale(t)
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="black"/>`)
    parts.push(
      `<text x="${px.toFixed(2)}" y="${y0 + 20}" text-anchor="middle" font-size="11" font-family="sans-serif">${fmtTick(t)}</text>`,
    )
  }
  for (const t of decadeTicks(yAxis)) {
    const py = yAxis.scale(t)
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="black"/>`)
    parts.push(
      `<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="11" font-family="sans-serif">${fmtTick(t)}</text>`,
    )
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="13" font-family="sans-serif">${esc(xLabel)}</text>`,
  )
  return parts.join('\n')
}

function legendMarkup(scatterLabel: string, boundLabels: string[]): string {
  const x = MARGIN.left + 12
  let y = MARGIN.top + 8
  const parts: string[] = [`<g class="legend" font-size="12" font-family="sans-serif">`]
  parts.push(
    `<circle cx="${x}" cy="${y}" r="2.5" fill="#d62728"/>` +
      `<text class="legend-label" x="${x + 12}" y="${y + 4}">${esc(scatterLabel)}</text>`,
  )
  boundLabels.forEach((label, i) => {
    y += 18
    const color = DASH_COLORS[i % DASH_COLORS.length]
    parts.push(
      `<line x1="${x - 6}" y1="${y}" x2="${x + 6}" y2="${y}" stroke="${color}" stroke-dasharray="6 4" stroke-width="1.5"/>` +
        `<text class="legend-label" x="${x + 12}" y="${y + 4}">${esc(label)}</text>`,
    )
  })
  parts.push('</g>')
  return parts.join('\n')
}
