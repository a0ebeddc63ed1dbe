/**
 * Bicubic resampling (cubic convolution, Catmull-Rom a = -0.5) and the two
 * resolution-preparation modes:
 *
 *   hr: resize straight to 224x224
 *   lr: resize down to 32x32, then back up to 224x224; the output is
 *       224x224 but carries only the information of a 32x32 image
 *
 * Edges are clamped. The kernel reproduces constants and linear ramps
 * exactly (up to float rounding), which the tests rely on.
 */

import { RawImage } from './image'

export const TARGET_SIZE = 224
export const LOWRES_SIZE = 32

const A = -0.5

function kernel(x: number): number {
  const ax = Math.abs(x)
  if (ax <= 1) return (A + 2) * ax * ax * ax - (A + 3) * ax * ax + 1
  if (ax < 2) return A * ax * ax * ax - 5 * A * ax * ax + 8 * A * ax - 4 * A
  return 0
}

export function resizeBicubic(src: RawImage, dstWidth: number, dstHeight: number): RawImage {
  const out = new Float32Array(dstWidth * dstHeight * 3)
  const scaleX = src.width / dstWidth
  const scaleY = src.height / dstHeight
  const clampX = (v: number) => Math.max(0, Math.min(src.width - 1, v))
  const clampY = (v: number) => Math.max(0, Math.min(src.height - 1, v))

  const wx = new Float64Array(4)
  const wy = new Float64Array(4)
  for (let dy = 0; dy < dstHeight; dy++) {
    const sy = (dy + 0.5) * scaleY - 0.5
    const y0 = Math.floor(sy)
    for (let k = 0; k < 4; k++) wy[k] = kernel(sy - (y0 - 1 + k))
    for (let dx = 0; dx < dstWidth; dx++) {
      const sx = (dx + 0.5) * scaleX - 0.5
      const x0 = Math.floor(sx)
      for (let k = 0; k < 4; k++) wx[k] = kernel(sx - (x0 - 1 + k))
      for (let c = 0; c < 3; c++) {
        let acc = 0
        for (let j = 0; j < 4; j++) {
          const yy = clampY(y0 - 1 + j)
          let row = 0
          for (let i = 0; i < 4; i++) {
            const xx = clampX(x0 - 1 + i)
            row += wx[i] * src.data[(yy * src.width + xx) * 3 + c]
          }
          acc += wy[j] * row
        }
        out[(dy * dstWidth + dx) * 3 + c] = acc
      }
    }
  }
  return { width: dstWidth, height: dstHeight, data: out }
}

export type ResolutionMode = 'hr' | 'lr'

/** HR: bicubic to 224^2. LR: bicubic to 32^2, then bicubic back to 224^2. */
export function prepareImage(img: RawImage, mode: ResolutionMode): RawImage {
  if (mode === 'hr') {
    return resizeBicubic(img, TARGET_SIZE, TARGET_SIZE)
  }
  const small = resizeBicubic(img, LOWRES_SIZE, LOWRES_SIZE)
  return resizeBicubic(small, TARGET_SIZE, TARGET_SIZE)
}
