import { describe, expect, it } from 'vitest'

import { decodeUdft, encodeUdft, UdftFormatError } from '../src/udft'

function sample() {
  return {
    n: 3,
    d: 4,
    data: new Float32Array([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12.5]),
    classLabels: new Uint8Array([1, 0, 0, 1, 1, 0]),
    nClasses: 2,
  }
}

describe('udft container', () => {
  it('round-trips bit-exactly', () => {
    const file = sample()
    const back = decodeUdft(encodeUdft(file))
    expect(back.n).toBe(3)
    expect(back.d).toBe(4)
    expect(back.nClasses).toBe(2)
    expect([...back.data]).toEqual([...file.data])
    expect([...back.classLabels!]).toEqual([...file.classLabels])
  })

  it('writes the documented header size', () => {
    const noLabels = { n: 2, d: 3, data: new Float32Array(6), nClasses: 0 }
    expect(encodeUdft(noLabels).length).toBe(32 + 2 * 3 * 4)
  })

  it('rejects bad magic', () => {
    const buf = encodeUdft(sample())
    buf.write('NOPE', 0, 'ascii')
    expect(() => decodeUdft(buf)).toThrow(UdftFormatError)
  })

  it('rejects truncated payload', () => {
    const buf = encodeUdft(sample())
    expect(() => decodeUdft(buf.subarray(0, buf.length - 3))).toThrow(/truncated|trailing/)
  })

  it('rejects trailing bytes', () => {
    const buf = Buffer.concat([encodeUdft(sample()), Buffer.from([0])])
    expect(() => decodeUdft(buf)).toThrow(/trailing/)
  })

  it('rejects NaN features on encode and decode', () => {
    const file = sample()
    file.data[5] = NaN
    expect(() => encodeUdft(file)).toThrow(/NaN/)
  })
})
