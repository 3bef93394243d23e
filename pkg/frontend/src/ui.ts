import { RatingSession, enlargeNeeded } from './session.js'

/**
 * Renders the rating flow into a root element.
 *
 * Layout per the study protocol: original on the left, enhanced on the
 * right, five fixed labels below, no timer anywhere. An enlarge control
 * appears only when an image exceeds 480px on a side; failed image
 * loads get a retry button.
 */
export class RaterView {
  private readonly leftImg: HTMLImageElement
  private readonly rightImg: HTMLImageElement
  private readonly labelButtons: HTMLButtonElement[] = []
  private readonly progress: HTMLElement
  private readonly enlargeButton: HTMLButtonElement
  private readonly retryButton: HTMLButtonElement
  private readonly status: HTMLElement
  private enlarged = false

  constructor(
    private readonly root: HTMLElement,
    private readonly session: RatingSession,
  ) {
    root.innerHTML = ''
    const doc = root.ownerDocument

    this.progress = doc.createElement('div')
    this.progress.className = 'progress'

    const pair = doc.createElement('div')
    pair.className = 'pair'
    this.leftImg = doc.createElement('img')
    this.leftImg.className = 'pane original'
    this.leftImg.alt = 'original image'
    this.rightImg = doc.createElement('img')
    this.rightImg.className = 'pane enhanced'
    this.rightImg.alt = 'enhanced image'
    pair.append(this.leftImg, this.rightImg)

    const controls = doc.createElement('div')
    controls.className = 'controls'
    this.enlargeButton = doc.createElement('button')
    this.enlargeButton.className = 'enlarge'
    this.enlargeButton.textContent = 'Enlarge'
    this.enlargeButton.hidden = true
    this.enlargeButton.addEventListener('click', () => this.toggleEnlarged())
    this.retryButton = doc.createElement('button')
    this.retryButton.className = 'retry'
    this.retryButton.textContent = 'Retry loading images'
    this.retryButton.hidden = true
    this.retryButton.addEventListener('click', () => this.reloadImages())
    controls.append(this.enlargeButton, this.retryButton)

    const labelBar = doc.createElement('div')
    labelBar.className = 'labels'
    // label order and wording are fixed for the whole session
    session.labels.forEach((text, index) => {
      const button = doc.createElement('button')
      button.className = 'label'
      button.textContent = text
      button.addEventListener('click', () => void this.submit(index))
      this.labelButtons.push(button)
      labelBar.append(button)
    })

    this.status = doc.createElement('div')
    this.status.className = 'status'

    root.append(this.progress, pair, controls, labelBar, this.status)

    for (const img of [this.leftImg, this.rightImg]) {
      img.addEventListener('load', () => this.onImageState())
      img.addEventListener('error', () => this.onImageState())
    }
    this.renderCurrent()
  }

  private async submit(labelIndex: number): Promise<void> {
    const outcome = await this.session.submit(labelIndex)
    if (outcome === 'accepted') {
      this.renderCurrent()
    } else if (outcome === 'queued') {
      this.status.textContent = 'Connection lost; your answer is queued and will be retried.'
      void this.retryLoop()
    }
  }

  private async retryLoop(): Promise<void> {
    while (this.session.hasPending) {
      await new Promise((resolve) => setTimeout(resolve, 1000))
      try {
        if (await this.session.flushPending()) {
          this.status.textContent = ''
          this.renderCurrent()
          return
        }
      } catch {
        return // contract error; leave the message up
      }
    }
  }

  private renderCurrent(): void {
    const item = this.session.current
    if (!item) {
      this.root.innerHTML = ''
      const done = this.root.ownerDocument.createElement('div')
      done.className = 'completion'
      done.textContent = 'All pairs rated. Thank you for participating.'
      this.root.append(done)
      return
    }
    this.enlarged = false
    this.progress.textContent = `Pair ${this.session.currentIndex + 1} of ${this.session.total}`
    this.leftImg.src = item.left_url
    this.rightImg.src = item.right_url
    this.onImageState()
  }

  private onImageState(): void {
    const failed =
      (this.leftImg.complete && this.leftImg.naturalWidth === 0 && this.leftImg.src !== '') ||
      (this.rightImg.complete && this.rightImg.naturalWidth === 0 && this.rightImg.src !== '')
    this.retryButton.hidden = !failed
    this.enlargeButton.hidden = !enlargeNeeded(
      { width: this.leftImg.naturalWidth, height: this.leftImg.naturalHeight },
      { width: this.rightImg.naturalWidth, height: this.rightImg.naturalHeight },
    )
  }

  private toggleEnlarged(): void {
    this.enlarged = !this.enlarged
    this.root.classList.toggle('enlarged', this.enlarged)
  }

  private reloadImages(): void {
    const item = this.session.current
    if (!item) return
    this.leftImg.src = ''
    this.rightImg.src = ''
    this.leftImg.src = item.left_url
    this.rightImg.src = item.right_url
  }
}
