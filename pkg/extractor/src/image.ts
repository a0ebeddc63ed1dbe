/**
 * Minimal image decoding: PNG (via pngjs) and binary PPM (P6).
 * Pixels come out as planar-free interleaved RGB floats in [0, 255].
 */

import * as fs from 'fs'
import * as path from 'path'
import { PNG } from 'pngjs'

export interface RawImage {
  width: number
  height: number
  /** interleaved RGB, length = width * height * 3, values in [0, 255] */
  data: Float32Array
}

export class ImageDecodeError extends Error {}

export function decodeImage(filePath: string): RawImage {
  const ext = path.extname(filePath).toLowerCase()
  const buf = fs.readFileSync(filePath)
  if (ext === '.png') return decodePng(buf)
  if (ext === '.ppm') return decodePpm(buf)
  throw new ImageDecodeError(`unsupported image extension ${ext} (${filePath})`)
}

export function decodePng(buf: Buffer): RawImage {
  let png: PNG
  try {
    png = PNG.sync.read(buf)
  } catch (err) {
    throw new ImageDecodeError(`bad PNG: ${(err as Error).message}`)
  }
  const { width, height } = png
  const out = new Float32Array(width * height * 3)
  for (let i = 0; i < width * height; i++) {
    out[i * 3] = png.data[i * 4]
    out[i * 3 + 1] = png.data[i * 4 + 1]
    out[i * 3 + 2] = png.data[i * 4 + 2]
  }
  return { width, height, data: out }
}

/** Binary PPM (P6), maxval 255. */
export function decodePpm(buf: Buffer): RawImage {
  // header: "P6" <ws> width <ws> height <ws> maxval <single ws> raster
  let pos = 0
  const token = (): string => {
    while (pos < buf.length && isSpace(buf[pos])) {
      if (buf[pos] === 0x23) {
        // comment runs to end of line
        while (pos < buf.length && buf[pos] !== 0x0a) pos++
      }
      pos++
    }
    const start = pos
    while (pos < buf.length && !isSpace(buf[pos])) pos++
    return buf.toString('ascii', start, pos)
  }
  const isSpace = (b: number) => b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d || b === 0x23

  if (token() !== 'P6') throw new ImageDecodeError('not a binary PPM (P6)')
  const width = parseInt(token(), 10)
  const height = parseInt(token(), 10)
  const maxval = parseInt(token(), 10)
  if (!(width > 0 && height > 0)) throw new ImageDecodeError('bad PPM dimensions')
  if (maxval !== 255) throw new ImageDecodeError(`unsupported PPM maxval ${maxval}`)
  pos++ // single whitespace after maxval
  const needed = width * height * 3
  if (buf.length - pos < needed) throw new ImageDecodeError('truncated PPM raster')
  const out = new Float32Array(needed)
  for (let i = 0; i < needed; i++) out[i] = buf[pos + i]
  return { width, height, data: out }
}

export function encodePpm(img: RawImage): Buffer {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, 'ascii')
  const raster = Buffer.alloc(img.width * img.height * 3)
  for (let i = 0; i < raster.length; i++) {
    raster[i] = Math.max(0, Math.min(255, Math.round(img.data[i])))
  }
  return Buffer.concat([header, raster])
}
