/** Shared test fixtures: a deterministic tiny backbone and synthetic images. */

import * as tf from '@tensorflow/tfjs'
import * as fs from 'fs'
import * as path from 'path'

import { saveBackbone } from '../src/backbone'
import { encodePpm, RawImage } from '../src/image'

/** Small deterministic PRNG so stub weights are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a |= 0
    a = (a + 0x6d2b79f5) | 0
    let t = Math.imul(a ^ (a >>> 15), 1 | a)
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

/**
 * 224x224x3 -> avgPool(32) -> 7x7x3 -> flatten(147) -> dense(width).
 * Deterministic seeded weights; stands in for a real pretrained backbone.
 */
export async function makeStubBackbone(dir: string, width = 2048, seed = 7): Promise<void> {
  const model = tf.sequential({
    layers: [
      tf.layers.averagePooling2d({
        poolSize: 32,
        strides: 32,
        inputShape: [224, 224, 3],
      }),
      tf.layers.flatten(),
      tf.layers.dense({ units: width, activation: 'relu', name: 'features' }),
    ],
  })
  const rand = mulberry32(seed)
  const kernel = new Float32Array(147 * width)
  for (let i = 0; i < kernel.length; i++) kernel[i] = (rand() - 0.5) * 0.2
  const bias = new Float32Array(width)
  for (let i = 0; i < width; i++) bias[i] = (rand() - 0.5) * 0.01
  model.getLayer('features').setWeights([
    tf.tensor2d(kernel, [147, width]),
    tf.tensor1d(bias),
  ])
  await saveBackbone(model, dir)
  model.dispose()
}

/** Structured non-constant image: gradients plus a seeded noise field. */
export function makeTestImage(width: number, height: number, seed: number): RawImage {
  const rand = mulberry32(seed)
  const data = new Float32Array(width * height * 3)
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = (y * width + x) * 3
      data[i] = (255 * x) / width
      data[i + 1] = (255 * y) / height
      data[i + 2] = Math.floor(rand() * 256)
    }
  }
  return { width, height, data }
}

export function writeTestPpm(filePath: string, img: RawImage): void {
  fs.mkdirSync(path.dirname(filePath), { recursive: true })
  fs.writeFileSync(filePath, encodePpm(img))
}

export function constantImage(width: number, height: number, rgb: [number, number, number]): RawImage {
  const data = new Float32Array(width * height * 3)
  for (let i = 0; i < width * height; i++) {
    data[i * 3] = rgb[0]
    data[i * 3 + 1] = rgb[1]
    data[i * 3 + 2] = rgb[2]
  }
  return { width, height, data }
}
