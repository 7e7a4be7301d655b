#!/usr/bin/env node
/**
 * plotkit <suite_dir> --out <dir>
 *
 * Renders every benchmark .dat/.csv under suite_dir into SVG figures.
 */

import { renderSuiteDir } from './suites.js'

function usage(): never {
  console.error('usage: plotkit <suite_dir> --out <dir>')
  process.exit(2)
}

export function main(argv: string[]): number {
  const args = [...argv]
  let outDir = './figures'
  let suiteDir: string | undefined
  while (args.length > 0) {
    const a = args.shift()!
    if (a === '--out') {
      const v = args.shift()
      if (!v) usage()
      outDir = v
    } else if (a === '--help' || a === '-h') {
      usage()
    } else if (!suiteDir) {
      suiteDir = a
    } else {
      usage()
    }
  }
  if (!suiteDir) usage()

  try {
    const rendered = renderSuiteDir(suiteDir, outDir)
    for (const fig of rendered) {
      console.log(`${fig.source} -> ${fig.output}`)
    }
    return 0
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 1
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)))
}
