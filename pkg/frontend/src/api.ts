export type SessionItem = {
  item_id: string
  left_url: string
  right_url: string
}

export type SessionPayload = {
  session_id: string
  labels: string[]
  items: SessionItem[]
}

export type ResponseAck = {
  ok: boolean
  ordinal: number
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`)
  }
}

async function detailOf(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: string }
    return body.detail ?? res.statusText
  } catch {
    return res.statusText
  }
}

/** Typed client for the study service's three contractual endpoints. */
export class StudyApi {
  constructor(
    private readonly baseUrl: string,
    private readonly studyId: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async openSession(worker: string): Promise<SessionPayload> {
    const url = `${this.baseUrl}/study/${encodeURIComponent(this.studyId)}/session?worker=${encodeURIComponent(worker)}`
    const res = await this.fetchFn(url)
    if (!res.ok) throw new ApiError(res.status, await detailOf(res))
    return (await res.json()) as SessionPayload
  }

  /**
   * Submit one label. The (session, item) pair is the idempotent
   * submission token: the service dedups on it, so a duplicate 409 after
   * a retransmit means the first attempt landed and counts as success.
   */
  async submitResponse(
    sessionId: string,
    itemId: string,
    labelIndex: number,
  ): Promise<ResponseAck> {
    const url = `${this.baseUrl}/study/${encodeURIComponent(this.studyId)}/response`
    const res = await this.fetchFn(url, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ session: sessionId, pair: itemId, label_index: labelIndex }),
    })
    if (res.status === 409) {
      const detail = await detailOf(res)
      if (detail.includes('duplicate')) return { ok: true, ordinal: labelIndex + 1 }
      throw new ApiError(409, detail)
    }
    if (!res.ok) throw new ApiError(res.status, await detailOf(res))
    return (await res.json()) as ResponseAck
  }
}
