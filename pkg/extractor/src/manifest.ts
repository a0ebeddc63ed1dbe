/**
 * Label manifest: one line per image, `relative_path<TAB>class[,class...]`.
 * Blank lines and #-comments are ignored. Rows are processed in sorted
 * path order so extraction output is deterministic; the class column order
 * is the sorted set of all class names in the manifest.
 */

import * as fs from 'fs'

export interface ManifestEntry {
  path: string
  classes: string[]
}

export interface Manifest {
  entries: ManifestEntry[] // sorted by path
  classNames: string[] // sorted unique class names
}

export class ManifestError extends Error {}

export function parseManifest(text: string): Manifest {
  const entries: ManifestEntry[] = []
  const classSet = new Set<string>()
  const seen = new Set<string>()
  text.split('\n').forEach((line, idx) => {
    const trimmed = line.trim()
    if (!trimmed || trimmed.startsWith('#')) return
    const tab = trimmed.indexOf('\t')
    if (tab < 1) throw new ManifestError(`line ${idx + 1}: expected "path<TAB>classes"`)
    const path = trimmed.slice(0, tab).trim()
    const classes = trimmed
      .slice(tab + 1)
      .split(',')
      .map((c) => c.trim())
      .filter((c) => c.length > 0)
    if (classes.length === 0) throw new ManifestError(`line ${idx + 1}: no classes for ${path}`)
    if (seen.has(path)) throw new ManifestError(`duplicate manifest entry for ${path}`)
    seen.add(path)
    classes.forEach((c) => classSet.add(c))
    entries.push({ path, classes })
  })
  entries.sort((a, b) => (a.path < b.path ? -1 : a.path > b.path ? 1 : 0))
  return { entries, classNames: [...classSet].sort() }
}

export function loadManifest(filePath: string): Manifest {
  return parseManifest(fs.readFileSync(filePath, 'utf8'))
}

/** Multi-hot label matrix in manifest row order. */
export function labelMatrix(manifest: Manifest): Uint8Array {
  const { entries, classNames } = manifest
  const index = new Map(classNames.map((c, i) => [c, i]))
  const out = new Uint8Array(entries.length * classNames.length)
  entries.forEach((entry, row) => {
    for (const c of entry.classes) {
      out[row * classNames.length + index.get(c)!] = 1
    }
  })
  return out
}
