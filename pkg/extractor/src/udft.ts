/**
 * Writer/reader for the UDFT binary feature container consumed by the
 * classification toolkit. Little-endian throughout:
 *
 *   magic "UDFT" | version u32=1 | n u64 | d u64 | n_classes u32 | flags u32
 *   float32 data row-major, then (flags bit0) n * n_classes u8 class labels
 *
 * The extractor never emits pseudo-labels (bits 1/2 stay clear). The reader
 * exists for validation and tests; the primary consumer is the Python side.
 */

const MAGIC = 'UDFT'
const VERSION = 1
const HEADER_BYTES = 32

export const FLAG_CLASS_LABELS = 1 << 0

export interface FeatureFile {
  n: number
  d: number
  data: Float32Array
  classLabels?: Uint8Array
  nClasses: number
}

export class UdftFormatError extends Error {}

export function encodeUdft(file: FeatureFile): Buffer {
  const { n, d, nClasses } = file
  if (file.data.length !== n * d) throw new UdftFormatError('data length != n*d')
  for (const v of file.data) {
    if (!Number.isFinite(v)) throw new UdftFormatError('data contains NaN/Inf')
  }
  const hasLabels = file.classLabels !== undefined
  if (hasLabels && file.classLabels!.length !== n * nClasses) {
    throw new UdftFormatError('class label length != n*n_classes')
  }

  const total = HEADER_BYTES + n * d * 4 + (hasLabels ? n * nClasses : 0)
  const buf = Buffer.alloc(total)
  buf.write(MAGIC, 0, 'ascii')
  buf.writeUInt32LE(VERSION, 4)
  buf.writeBigUInt64LE(BigInt(n), 8)
  buf.writeBigUInt64LE(BigInt(d), 16)
  buf.writeUInt32LE(hasLabels ? nClasses : 0, 24)
  buf.writeUInt32LE(hasLabels ? FLAG_CLASS_LABELS : 0, 28)

  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES, n * d * 4)
  for (let i = 0; i < n * d; i++) view.setFloat32(i * 4, file.data[i], true)
  if (hasLabels) {
    buf.set(file.classLabels!, HEADER_BYTES + n * d * 4)
  }
  return buf
}

export function decodeUdft(buf: Buffer): FeatureFile {
  if (buf.length < HEADER_BYTES) throw new UdftFormatError('file too short for header')
  if (buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new UdftFormatError(`bad magic ${buf.toString('ascii', 0, 4)}`)
  }
  const version = buf.readUInt32LE(4)
  if (version !== VERSION) throw new UdftFormatError(`unsupported version ${version}`)
  const n = Number(buf.readBigUInt64LE(8))
  const d = Number(buf.readBigUInt64LE(16))
  const nClasses = buf.readUInt32LE(24)
  const flags = buf.readUInt32LE(28)

  let offset = HEADER_BYTES
  if (buf.length < offset + n * d * 4) throw new UdftFormatError('truncated feature data')
  const data = new Float32Array(n * d)
  const view = new DataView(buf.buffer, buf.byteOffset + offset, n * d * 4)
  for (let i = 0; i < n * d; i++) {
    data[i] = view.getFloat32(i * 4, true)
    if (!Number.isFinite(data[i])) throw new UdftFormatError('data contains NaN/Inf')
  }
  offset += n * d * 4

  let classLabels: Uint8Array | undefined
  if (flags & FLAG_CLASS_LABELS) {
    if (buf.length < offset + n * nClasses) throw new UdftFormatError('truncated class labels')
    classLabels = new Uint8Array(buf.subarray(offset, offset + n * nClasses))
    for (const v of classLabels) {
      if (v > 1) throw new UdftFormatError('class labels must be 0/1')
    }
    offset += n * nClasses
  }
  if (offset !== buf.length) throw new UdftFormatError('trailing bytes after payload')
  return { n, d, data, classLabels, nClasses: flags & FLAG_CLASS_LABELS ? nClasses : 0 }
}
