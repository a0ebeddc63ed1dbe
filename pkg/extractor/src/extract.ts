/**
 * Folder-of-images -> UDFT feature file, through a frozen backbone.
 *
 * Rows follow sorted manifest order; images that fail to decode are skipped
 * with a warning (their rows are simply absent). Inference runs on the CPU
 * backend in fixed-size batches, so repeated runs produce byte-identical
 * files. A sidecar log (<out>.log) records the backbone, layer, mode, and
 * exact pixel recipe for auditability.
 */

import * as tf from '@tensorflow/tfjs'
import * as fs from 'fs'
import * as path from 'path'

import {
  BackboneError,
  featureModel,
  loadBackbone,
  loadRecipe,
  outputWidth,
  PreprocessRecipe,
} from './backbone'
import { prepareImage, ResolutionMode, TARGET_SIZE } from './bicubic'
import { decodeImage, RawImage } from './image'
import { labelMatrix, loadManifest, Manifest } from './manifest'
import { encodeUdft } from './udft'

export interface ExtractionConfig {
  imagesDir: string
  manifestPath: string
  mode: ResolutionMode
  backboneDir: string
  layerName?: string
  /** declared feature width; extraction refuses a mismatched layer */
  expectedDim: number
  outPath: string
  batchSize?: number
}

export interface ExtractionResult {
  outPath: string
  n: number
  d: number
  classNames: string[]
  skipped: string[]
}

const BATCH = 8

function toInputTensor(images: RawImage[], recipe: PreprocessRecipe): tf.Tensor4D {
  const size = TARGET_SIZE
  const batch = new Float32Array(images.length * size * size * 3)
  images.forEach((img, b) => {
    const base = b * size * size * 3
    for (let i = 0; i < size * size; i++) {
      for (let c = 0; c < 3; c++) {
        batch[base + i * 3 + c] =
          (img.data[i * 3 + c] * recipe.scale - recipe.mean[c]) / recipe.std[c]
      }
    }
  })
  return tf.tensor4d(batch, [images.length, size, size, 3])
}

export async function extract(config: ExtractionConfig): Promise<ExtractionResult> {
  const manifest: Manifest = loadManifest(config.manifestPath)
  if (manifest.entries.length === 0) throw new Error('manifest lists no images')

  const backbone = await loadBackbone(config.backboneDir)
  const model = featureModel(backbone, config.layerName)
  const width = outputWidth(model)
  if (width !== config.expectedDim) {
    throw new BackboneError(
      `feature layer is ${width}-D but ${config.expectedDim}-D was declared; ` +
        `pass the correct --dim or pick another --layer`
    )
  }
  const recipe = loadRecipe(config.backboneDir)

  const prepared: RawImage[] = []
  const keptRows: number[] = []
  const skipped: string[] = []
  manifest.entries.forEach((entry, row) => {
    const imagePath = path.join(config.imagesDir, entry.path)
    try {
      prepared.push(prepareImage(decodeImage(imagePath), config.mode))
      keptRows.push(row)
    } catch (err) {
      skipped.push(entry.path)
      console.warn(`warning: skipping ${entry.path}: ${(err as Error).message}`)
    }
  })
  if (prepared.length === 0) throw new Error('no decodable images in manifest')

  const n = prepared.length
  const data = new Float32Array(n * width)
  for (let start = 0; start < n; start += BATCH) {
    const slice = prepared.slice(start, Math.min(n, start + BATCH))
    const input = toInputTensor(slice, recipe)
    const output = model.predict(input, { batchSize: config.batchSize ?? BATCH }) as tf.Tensor
    data.set(await output.data<'float32'>(), start * width)
    input.dispose()
    output.dispose()
  }

  const allLabels = labelMatrix(manifest)
  const nClasses = manifest.classNames.length
  const classLabels = new Uint8Array(n * nClasses)
  keptRows.forEach((row, i) => {
    classLabels.set(allLabels.subarray(row * nClasses, (row + 1) * nClasses), i * nClasses)
  })

  fs.mkdirSync(path.dirname(path.resolve(config.outPath)), { recursive: true })
  fs.writeFileSync(config.outPath, encodeUdft({ n, d: width, data, classLabels, nClasses }))
  writeSidecarLog(config, recipe, manifest, skipped, n, width)
  return { outPath: config.outPath, n, d: width, classNames: manifest.classNames, skipped }
}

function writeSidecarLog(
  config: ExtractionConfig,
  recipe: PreprocessRecipe,
  manifest: Manifest,
  skipped: string[],
  n: number,
  d: number
): void {
  const lines = [
    `backbone=${config.backboneDir}`,
    `layer=${config.layerName ?? '<model output>'}`,
    `mode=${config.mode}`,
    `pixel_recipe=scale:${recipe.scale} mean:${recipe.mean.join(',')} std:${recipe.std.join(',')}`,
    `interpolation=bicubic (a=-0.5), hr: ->224, lr: ->32->224`,
    `images=${n}`,
    `dim=${d}`,
    `classes=${manifest.classNames.join(',')}`,
    `skipped=${skipped.join(',')}`,
  ]
  fs.writeFileSync(config.outPath + '.log', lines.join('\n') + '\n')
}
