/**
 * Frozen backbone handling. A backbone is a tfjs LayersModel stored on disk
 * as a directory with `model.json` (topology + weights manifest) and one or
 * more `.bin` weight shards, plus an optional `preprocess.json` describing
 * the pixel recipe:
 *
 *   { "scale": 0.00392156862745098, "mean": [r,g,b], "std": [r,g,b] }
 *
 * applied as (pixel * scale - mean) / std per channel. Without the file the
 * pixels are only scaled to [0, 1]; whatever recipe is used gets recorded in
 * the extraction sidecar log.
 *
 * The weights are an external asset: nothing here downloads anything.
 */

import * as tf from '@tensorflow/tfjs'
import * as fs from 'fs'
import * as path from 'path'

export interface PreprocessRecipe {
  scale: number
  mean: [number, number, number]
  std: [number, number, number]
}

export const DEFAULT_RECIPE: PreprocessRecipe = {
  scale: 1 / 255,
  mean: [0, 0, 0],
  std: [1, 1, 1],
}

export class BackboneError extends Error {}

export function missingBackboneMessage(dir: string): string {
  return (
    `backbone not found at ${dir}: expected a tfjs LayersModel ` +
    `(model.json plus .bin weight shards). Convert a pretrained model with ` +
    `the tensorflowjs converter (tensorflowjs_converter --input_format=keras ` +
    `model.h5 ${dir}) or save one from tfjs via model.save(...), then retry.`
  )
}

export async function loadBackbone(dir: string): Promise<tf.LayersModel> {
  const modelJsonPath = path.join(dir, 'model.json')
  if (!fs.existsSync(modelJsonPath)) {
    throw new BackboneError(missingBackboneMessage(dir))
  }
  const modelJson = JSON.parse(fs.readFileSync(modelJsonPath, 'utf8'))
  const manifest = modelJson.weightsManifest ?? []
  const specs: tf.io.WeightsManifestEntry[] = []
  const shards: Buffer[] = []
  for (const group of manifest) {
    specs.push(...group.weights)
    for (const shardName of group.paths) {
      const shardPath = path.join(dir, shardName)
      if (!fs.existsSync(shardPath)) {
        throw new BackboneError(`weight shard ${shardName} missing from ${dir}`)
      }
      shards.push(fs.readFileSync(shardPath))
    }
  }
  const weightData = Buffer.concat(shards)
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: modelJson.modelTopology,
      weightSpecs: specs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength
      ),
    })
  )
}

/** Writes model.json + weights.bin so loadBackbone can read it back. */
export async function saveBackbone(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true })
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: 'layers-model',
        weightsManifest: [{ paths: ['weights.bin'], weights: artifacts.weightSpecs }],
      }
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(modelJson))
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } }
    })
  )
}

export function loadRecipe(dir: string): PreprocessRecipe {
  const recipePath = path.join(dir, 'preprocess.json')
  if (!fs.existsSync(recipePath)) return { ...DEFAULT_RECIPE }
  const raw = JSON.parse(fs.readFileSync(recipePath, 'utf8'))
  return {
    scale: raw.scale ?? DEFAULT_RECIPE.scale,
    mean: raw.mean ?? DEFAULT_RECIPE.mean,
    std: raw.std ?? DEFAULT_RECIPE.std,
  }
}

/**
 * Cut the model at a named layer (feature layer, e.g. the pooled embedding);
 * undefined keeps the model's final output. The resulting output must be a
 * flat [batch, width] tensor.
 */
export function featureModel(model: tf.LayersModel, layerName?: string): tf.LayersModel {
  if (!layerName) return model
  let layer: tf.layers.Layer
  try {
    layer = model.getLayer(layerName)
  } catch {
    throw new BackboneError(
      `layer ${layerName} not found; available: ` +
        model.layers.map((l) => l.name).join(', ')
    )
  }
  return tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor })
}

export function outputWidth(model: tf.LayersModel): number {
  const shape = model.outputs[0].shape
  if (shape.length !== 2) {
    throw new BackboneError(
      `feature layer must be flat [batch, width], got shape [${shape.join(', ')}]`
    )
  }
  return shape[1] as number
}
