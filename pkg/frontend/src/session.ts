import { ApiError, SessionItem, SessionPayload, StudyApi } from './api.js'

export type SubmitOutcome = 'accepted' | 'ignored' | 'queued'

export type SessionEvents = {
  onAdvance?: (index: number) => void
  onComplete?: () => void
  onQueued?: (pending: number) => void
}

/**
 * State machine for one rating session.
 *
 * Items advance only after the service acknowledges the label. A second
 * click while a submission is in flight (or already queued) is ignored,
 * so rapid double clicks record exactly one response. Network failures
 * park the submission in a retry slot keyed by the (session, item)
 * token; `flushPending` retransmits it, and a duplicate rejection from
 * the service counts as the acknowledgement.
 */
export class RatingSession {
  private index = 0
  private inflight = false
  private pending: { itemId: string; labelIndex: number } | null = null

  constructor(
    private readonly api: StudyApi,
    readonly payload: SessionPayload,
    private readonly events: SessionEvents = {},
  ) {}

  get sessionId(): string {
    return this.payload.session_id
  }

  get labels(): string[] {
    return this.payload.labels
  }

  get total(): number {
    return this.payload.items.length
  }

  get currentIndex(): number {
    return this.index
  }

  get current(): SessionItem | null {
    return this.complete ? null : this.payload.items[this.index]!
  }

  get complete(): boolean {
    return this.index >= this.payload.items.length
  }

  get hasPending(): boolean {
    return this.pending !== null
  }

  async submit(labelIndex: number): Promise<SubmitOutcome> {
    if (this.complete || this.inflight || this.pending) return 'ignored'
    if (!Number.isInteger(labelIndex) || labelIndex < 0 || labelIndex > 4) {
      throw new RangeError(`label index out of range: ${labelIndex}`)
    }
    const item = this.payload.items[this.index]!
    this.inflight = true
    try {
      await this.api.submitResponse(this.sessionId, item.item_id, labelIndex)
    } catch (err) {
      if (err instanceof ApiError) {
        this.inflight = false
        throw err // contract violation, not a transport failure
      }
      this.pending = { itemId: item.item_id, labelIndex }
      this.inflight = false
      this.events.onQueued?.(1)
      return 'queued'
    }
    this.inflight = false
    this.advance()
    return 'accepted'
  }

  /** Retransmit the parked submission, if any. Returns true once clear. */
  async flushPending(): Promise<boolean> {
    if (!this.pending) return true
    if (this.inflight) return false
    const { itemId, labelIndex } = this.pending
    this.inflight = true
    try {
      await this.api.submitResponse(this.sessionId, itemId, labelIndex)
    } catch (err) {
      this.inflight = false
      if (err instanceof ApiError) throw err
      return false
    }
    this.inflight = false
    this.pending = null
    this.advance()
    return true
  }

  private advance(): void {
    this.index += 1
    if (this.complete) this.events.onComplete?.()
    else this.events.onAdvance?.(this.index)
  }
}

/** The enlarge control is offered iff either image exceeds 480px on a side. */
export function enlargeNeeded(
  left: { width: number; height: number },
  right: { width: number; height: number },
): boolean {
  const limit = 480
  return (
    left.width > limit || left.height > limit || right.width > limit || right.height > limit
  )
}
