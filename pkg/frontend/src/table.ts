/**
 * Readers for the benchmark output formats:
 *  - .dat: whitespace-delimited numeric columns, one leading '# col ...' line
 *  - .csv: comma-separated with a header row
 */

import { readFileSync } from 'fs'

export interface Table {
  columns: string[]
  rows: number[][]
}

export class TableError extends Error {}

export function parseDat(text: string, source = '<dat>'): Table {
  const lines = text.split('\n').filter((l) => l.trim().length > 0)
  if (lines.length === 0) {
    throw new TableError(`${source}: empty input`)
  }
  const header = lines[0]
  if (!header.startsWith('#')) {
    throw new TableError(`${source}: missing '#' header line`)
  }
  const columns = header.slice(1).trim().split(/\s+/)
  const rows: number[][] = []
  for (const line of lines.slice(1)) {
    if (line.startsWith('#')) continue
    const parts = line.trim().split(/\s+/)
    if (parts.length !== columns.length) {
      throw new TableError(
        `${source}: row has ${parts.length} fields, header has ${columns.length}`,
      )
    }
    rows.push(parts.map(Number))
  }
  if (rows.length === 0) {
    throw new TableError(`${source}: no data rows`)
  }
  return { columns, rows }
}

export function parseCsv(text: string, source = '<csv>'): Table {
  const lines = text.split('\n').filter((l) => l.trim().length > 0)
  if (lines.length < 2) {
    throw new TableError(`${source}: need a header row and at least one data row`)
  }
  const columns = lines[0].split(',').map((c) => c.trim())
  const rows = lines.slice(1).map((line, i) => {
    const parts = line.split(',').map((p) => Number(p.trim()))
    if (parts.length !== columns.length) {
      throw new TableError(`${source}: row ${i + 1} has ${parts.length} fields`)
    }
    return parts
  })
  return { columns, rows }
}

export function readTable(path: string): Table {
  const text = readFileSync(path, 'utf8')
  return path.endsWith('.csv') ? parseCsv(text, path) : parseDat(text, path)
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name)
  if (idx < 0) {
    throw new TableError(
      `column '${name}' not found; available: ${table.columns.join(', ')}`,
    )
  }
  return table.rows.map((r) => r[idx])
}
