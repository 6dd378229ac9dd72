/**
 * Thin fetch wrappers over the retarget service API. All editor traffic goes
 * through these; nothing else touches the network.
 */

import type { JobApi, JobStatusBody, SubmitPayload } from "./jobs.js";

function toBlob(data: Blob | Uint8Array, type: string): Blob {
  if (data instanceof Blob) return data;
  const copy = new Uint8Array(data); // detach from any larger backing buffer
  return new Blob([copy], { type });
}

export class FetchJobApi implements JobApi {
  constructor(private base: string = "") {}

  async submit(payload: SubmitPayload): Promise<{ job_id: string }> {
    const form = new FormData();
    form.append("image", toBlob(payload.image, "image/png"), "image.png");
    form.append("spec", JSON.stringify(payload.spec));
    payload.masks.forEach((mask, i) => {
      form.append("masks", toBlob(mask, "image/png"), `mask${i}.png`);
    });
    if (payload.lines !== undefined) form.append("lines", payload.lines);
    if (payload.params !== undefined) form.append("params", payload.params);
    const r = await fetch(`${this.base}/api/jobs`, { method: "POST", body: form });
    const body = await r.json();
    if (!r.ok) {
      throw new Error(body.error ?? `submission failed with ${r.status}`);
    }
    return body;
  }

  async status(jobId: string): Promise<JobStatusBody> {
    const r = await fetch(`${this.base}/api/jobs/${jobId}`);
    const body = await r.json();
    if (!r.ok) {
      throw new Error(body.error ?? `status failed with ${r.status}`);
    }
    return body;
  }
}

/** Saliency preview for the loaded image; returns the PNG bytes. */
export async function fetchSaliency(image: Blob | Uint8Array, base = ""): Promise<Uint8Array> {
  const form = new FormData();
  form.append("image", toBlob(image, "image/png"), "image.png");
  const r = await fetch(`${base}/api/saliency`, { method: "POST", body: form });
  if (!r.ok) {
    let detail = `saliency failed with ${r.status}`;
    try {
      detail = (await r.json()).error ?? detail;
    } catch {
      // non-JSON error body; keep the status message
    }
    throw new Error(detail);
  }
  return new Uint8Array(await r.arrayBuffer());
}
