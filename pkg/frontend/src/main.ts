import { StudyApi, ApiError } from './api.js'
import { RatingSession } from './session.js'
import { RaterView } from './ui.js'

function fail(root: HTMLElement, message: string): void {
  root.textContent = message
}

async function boot(): Promise<void> {
  const root = document.getElementById('app')
  if (!root) throw new Error('missing #app container')
  const params = new URLSearchParams(window.location.search)
  const studyId = params.get('study')
  const worker = params.get('worker')
  if (!studyId || !worker) {
    fail(root, 'Missing ?study= and ?worker= parameters in the URL.')
    return
  }
  const api = new StudyApi('', studyId)
  try {
    const payload = await api.openSession(worker)
    const session = new RatingSession(api, payload)
    new RaterView(root, session)
  } catch (err) {
    if (err instanceof ApiError) fail(root, `Cannot start session: ${err.detail}`)
    else fail(root, 'Cannot reach the study service; reload to retry.')
  }
}

void boot()
