/**
 * Map benchmark output files to figures.
 *
 * Bound-sweep .dat files carry one x column (resnorm), one measured error
 * column, and any number of bound_* columns that become dashed curves.
 * Scaling CSVs become one line figure per y column of interest.
 */

import { readdirSync, statSync, writeFileSync, mkdirSync } from 'fs'
import { basename, join } from 'path'

import { renderLineFigure, renderScatterFigure } from './figure.js'
import { Table, TableError, readTable } from './table.js'

export interface RenderedFigure {
  source: string
  output: string
}

const X_COLUMN = 'resnorm'

function scatterColumn(table: Table): string {
  const candidates = table.columns.filter(
    (c) => c !== X_COLUMN && !c.startsWith('bound_'),
  )
  if (candidates.length !== 1) {
    throw new TableError(
      `expected exactly one measured-error column, found: ${candidates.join(', ') || 'none'}`,
    )
  }
  return candidates[0]
}

export function renderDatFile(path: string, outDir: string): RenderedFigure {
  const table = readTable(path)
  const scatterY = scatterColumn(table)
  const dashedYs = table.columns.filter((c) => c.startsWith('bound_'))
  const svg = renderScatterFigure({
    table,
    x: X_COLUMN,
    scatterY,
    dashedYs,
    title: basename(path, '.dat'),
    xLabel: '||R||_F',
  })
  mkdirSync(outDir, { recursive: true })
  const output = join(outDir, basename(path, '.dat') + '.svg')
  writeFileSync(output, svg)
  return { source: path, output }
}

const SCALING_SERIES: { y: string; suffix: string }[] = [
  { y: 'time_seconds', suffix: 'time' },
  { y: 'eta_s', suffix: 'eta' },
]

export function renderScalingCsv(path: string, outDir: string): RenderedFigure[] {
  const table = readTable(path)
  mkdirSync(outDir, { recursive: true })
  const stem = basename(path, '.csv')
  return SCALING_SERIES.map(({ y, suffix }) => {
    const svg = renderLineFigure(table, { x: 'n', y, label: y }, `${stem}: n vs ${y}`)
    const output = join(outDir, `${stem}_${suffix}.svg`)
    writeFileSync(output, svg)
    return { source: path, output }
  })
}

/** Render every .dat/.csv found under a suite directory (recursively). */
export function renderSuiteDir(dir: string, outDir: string): RenderedFigure[] {
  const rendered: RenderedFigure[] = []
  const walk = (d: string) => {
    for (const entry of readdirSync(d).sort()) {
      const full = join(d, entry)
      if (statSync(full).isDirectory()) {
        walk(full)
      } else if (entry.endsWith('.dat')) {
        rendered.push(renderDatFile(full, outDir))
      } else if (entry.endsWith('.csv')) {
        rendered.push(...renderScalingCsv(full, outDir))
      }
    }
  }
  walk(dir)
  if (rendered.length === 0) {
    throw new TableError(`no .dat or .csv files under ${dir}`)
  }
  return rendered
}
