import { describe, expect, it } from 'vitest'

import { prepareImage, resizeBicubic, LOWRES_SIZE, TARGET_SIZE } from '../src/bicubic'
import { constantImage, makeTestImage } from './helpers'

describe('resizeBicubic', () => {
  it('preserves constants in both modes', () => {
    const img = constantImage(50, 40, [17, 130, 250])
    for (const mode of ['hr', 'lr'] as const) {
      const out = prepareImage(img, mode)
      for (let i = 0; i < out.data.length; i += 997) {
        const c = i % 3
        expect(out.data[i]).toBeCloseTo([17, 130, 250][c], 3)
      }
    }
  })

  it('reproduces a linear ramp exactly up to rounding', () => {
    // cubic convolution is exact on degree-1 signals away from edges
    const w = 64
    const img = constantImage(w, w, [0, 0, 0])
    for (let y = 0; y < w; y++) {
      for (let x = 0; x < w; x++) {
        img.data[(y * w + x) * 3] = x * 2 // ramp along x
      }
    }
    const out = resizeBicubic(img, 32, 32)
    for (let x = 4; x < 28; x++) {
      const srcX = (x + 0.5) * 2 - 0.5
      expect(out.data[(16 * 32 + x) * 3]).toBeCloseTo(srcX * 2, 3)
    }
  })

  it('hr mode keeps a 224x224 input at 224x224', () => {
    const out = prepareImage(makeTestImage(TARGET_SIZE, TARGET_SIZE, 1), 'hr')
    expect(out.width).toBe(TARGET_SIZE)
    expect(out.height).toBe(TARGET_SIZE)
  })

  it('lr mode outputs 224x224 but only carries 32x32 content', () => {
    const img = makeTestImage(128, 96, 2)
    const out = prepareImage(img, 'lr')
    expect(out.width).toBe(TARGET_SIZE)
    expect(out.height).toBe(TARGET_SIZE)
    // the same pipeline applied to the already-downsampled image agrees,
    // i.e. nothing beyond 32x32 information survives
    const small = resizeBicubic(img, LOWRES_SIZE, LOWRES_SIZE)
    const reference = resizeBicubic(small, TARGET_SIZE, TARGET_SIZE)
    for (let i = 0; i < out.data.length; i += 1013) {
      expect(out.data[i]).toBeCloseTo(reference.data[i], 4)
    }
  })

  it('hr and lr treatments differ on a natural-looking image', () => {
    const img = makeTestImage(200, 150, 3)
    const hr = prepareImage(img, 'hr')
    const lr = prepareImage(img, 'lr')
    let dist = 0
    for (let i = 0; i < hr.data.length; i++) dist += (hr.data[i] - lr.data[i]) ** 2
    expect(Math.sqrt(dist)).toBeGreaterThan(100)
  })
})
