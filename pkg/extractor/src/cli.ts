#!/usr/bin/env node
/**
 * extract --images DIR --manifest FILE --mode hr|lr --out FILE
 *         [--backbone DIR] [--layer NAME] [--dim 2048] [--batch 8]
 */

import { extract } from './extract'
import { ResolutionMode } from './bicubic'

const USAGE = `usage: feature-extract extract --images DIR --manifest FILE --mode hr|lr --out FILE
                       [--backbone DIR] [--layer NAME] [--dim N] [--batch N]

Runs every manifest image through the frozen backbone at the chosen
resolution treatment and writes a UDFT feature file (plus <out>.log with the
exact pixel recipe). The backbone directory must hold a tfjs LayersModel
(model.json + .bin shards); --dim declares the feature width (default 2048)
and extraction fails if the layer disagrees.`

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>()
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad argument ${key}`)
    }
    out.set(key.slice(2), argv[i + 1])
  }
  return out
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== 'extract') {
    console.error(USAGE)
    return 2
  }
  let args: Map<string, string>
  try {
    args = parseArgs(argv.slice(1))
  } catch (err) {
    console.error(`${(err as Error).message}\n\n${USAGE}`)
    return 2
  }
  const required = ['images', 'manifest', 'mode', 'out']
  for (const key of required) {
    if (!args.has(key)) {
      console.error(`missing --${key}\n\n${USAGE}`)
      return 2
    }
  }
  const mode = args.get('mode')!
  if (mode !== 'hr' && mode !== 'lr') {
    console.error(`--mode must be hr or lr, got ${mode}`)
    return 2
  }
  try {
    const result = await extract({
      imagesDir: args.get('images')!,
      manifestPath: args.get('manifest')!,
      mode: mode as ResolutionMode,
      backboneDir: args.get('backbone') ?? 'backbone',
      layerName: args.get('layer'),
      expectedDim: parseInt(args.get('dim') ?? '2048', 10),
      outPath: args.get('out')!,
      batchSize: args.has('batch') ? parseInt(args.get('batch')!, 10) : undefined,
    })
    console.error(
      `wrote ${result.n} x ${result.d} features (${result.classNames.length} classes) ` +
        `to ${result.outPath}` +
        (result.skipped.length ? `; skipped ${result.skipped.length}` : '')
    )
    return 0
  } catch (err) {
    console.error(`error: ${(err as Error).message}`)
    return 1
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => process.exit(code))
}
