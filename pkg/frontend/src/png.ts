/**
 * Minimal 8-bit grayscale PNG codec.
 *
 * The editor uploads masks it rasterized itself, so the pixel bytes must
 * survive encoding exactly. Canvas `toBlob` re-encodes through the browser
 * (and premultiplies alpha on some engines), so masks are written here
 * instead: one grayscale channel, filter type 0, and stored (uncompressed)
 * deflate blocks inside a standard zlib wrapper. Every PNG reader accepts
 * the result; `decodeGrayPng` reads the same subset back for round-trip
 * verification.
 */

const SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32(value: number): number[] {
  return [(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff];
}

function chunk(type: string, payload: Uint8Array): number[] {
  const head = [type.charCodeAt(0), type.charCodeAt(1), type.charCodeAt(2), type.charCodeAt(3)];
  const body = new Uint8Array(head.length + payload.length);
  body.set(head, 0);
  body.set(payload, head.length);
  return [...u32(payload.length), ...body, ...u32(crc32(body))];
}

/** zlib wrapper around stored (BTYPE=00) deflate blocks. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const blocks: number[] = [0x78, 0x01];
  const max = 65535;
  for (let off = 0; off < raw.length; off += max) {
    const len = Math.min(max, raw.length - off);
    const final = off + len >= raw.length ? 1 : 0;
    blocks.push(final, len & 0xff, (len >> 8) & 0xff, ~len & 0xff, (~len >> 8) & 0xff);
    for (let i = 0; i < len; i++) blocks.push(raw[off + i]);
  }
  blocks.push(...u32(adler32(raw)));
  return Uint8Array.from(blocks);
}

export function encodeGrayPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  if (pixels.length !== width * height) {
    throw new Error(`pixel buffer is ${pixels.length}, expected ${width * height}`);
  }
  const ihdr = Uint8Array.from([...u32(width), ...u32(height), 8, 0, 0, 0, 0]);
  const raw = new Uint8Array(height * (width + 1));
  for (let row = 0; row < height; row++) {
    raw[row * (width + 1)] = 0; // filter type: none
    raw.set(pixels.subarray(row * width, (row + 1) * width), row * (width + 1) + 1);
  }
  const out = [
    ...SIGNATURE,
    ...chunk("IHDR", ihdr),
    ...chunk("IDAT", zlibStored(raw)),
    ...chunk("IEND", new Uint8Array(0)),
  ];
  return Uint8Array.from(out);
}

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

function readU32(bytes: Uint8Array, off: number): number {
  return ((bytes[off] << 24) | (bytes[off + 1] << 16) | (bytes[off + 2] << 8) | bytes[off + 3]) >>> 0;
}

function inflateStored(z: Uint8Array): Uint8Array {
  if ((z[0] & 0x0f) !== 8) throw new Error("not a zlib stream");
  const parts: Uint8Array[] = [];
  let off = 2;
  let total = 0;
  for (;;) {
    const header = z[off];
    if ((header & 0x06) !== 0) {
      throw new Error("only stored deflate blocks are supported");
    }
    const len = z[off + 1] | (z[off + 2] << 8);
    const nlen = z[off + 3] | (z[off + 4] << 8);
    if ((len ^ nlen) !== 0xffff) throw new Error("corrupt stored block length");
    parts.push(z.subarray(off + 5, off + 5 + len));
    total += len;
    off += 5 + len;
    if (header & 1) break;
  }
  const raw = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    raw.set(p, pos);
    pos += p.length;
  }
  if (adler32(raw) !== readU32(z, off)) throw new Error("zlib checksum mismatch");
  return raw;
}

/** Decode the subset of PNG that `encodeGrayPng` produces. */
export function decodeGrayPng(bytes: Uint8Array): GrayImage {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG file");
  }
  let off = SIGNATURE.length;
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  while (off < bytes.length) {
    const len = readU32(bytes, off);
    const type = String.fromCharCode(bytes[off + 4], bytes[off + 5], bytes[off + 6], bytes[off + 7]);
    const payload = bytes.subarray(off + 8, off + 8 + len);
    const body = bytes.subarray(off + 4, off + 8 + len);
    if (crc32(body) !== readU32(bytes, off + 8 + len)) {
      throw new Error(`bad CRC in ${type} chunk`);
    }
    if (type === "IHDR") {
      width = readU32(payload, 0);
      height = readU32(payload, 4);
      const [depth, color, , , interlace] = [payload[8], payload[9], payload[10], payload[11], payload[12]];
      if (depth !== 8 || color !== 0 || interlace !== 0) {
        throw new Error("only 8-bit non-interlaced grayscale is supported");
      }
    } else if (type === "IDAT") {
      idat.push(payload);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + len;
  }
  const zlen = idat.reduce((s, p) => s + p.length, 0);
  const z = new Uint8Array(zlen);
  let pos = 0;
  for (const p of idat) {
    z.set(p, pos);
    pos += p.length;
  }
  const raw = inflateStored(z);
  if (raw.length !== height * (width + 1)) {
    throw new Error("scanline data has the wrong size");
  }
  const pixels = new Uint8Array(width * height);
  for (let row = 0; row < height; row++) {
    if (raw[row * (width + 1)] !== 0) {
      throw new Error("only filter type 0 is supported");
    }
    pixels.set(raw.subarray(row * (width + 1) + 1, (row + 1) * (width + 1)), row * width);
  }
  return { width, height, pixels };
}
